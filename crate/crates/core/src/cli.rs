//! Command-line front end. Every command writes its outputs atomically and
//! leaves a `<output>.manifest.json` next to the primary output.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::compress::{compress_features, compress_graph, CompressGraphOptions, CompressMode};
use crate::data::{
    self, gen_er, gen_sbm, linear_probe, split_per_class, ProbeOptions, SbmConfig, Split,
};
use crate::error::Error;
use crate::graph::SparseGraph;
use crate::io::{self, ParamsSidecar, ResultTable, RunManifest};
use crate::matrix::DenseMatrix;
use crate::partition::{edge_cut, imbalance, multilevel_partition, PartitionOptions};
use crate::rng::{self, streams};
use crate::theory;
use crate::training::{self, Model, TrainConfig, TrainHistory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "structcomp",
    version,
    about = "Graph contrastive learning on partition-compressed nodes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset directory (SBM) or edge list (ER).
    Gen(GenArgs),
    /// Multilevel balanced partition of a graph.
    Partition(PartitionArgs),
    /// Compress features and adjacency with a partition.
    Compress(CompressArgs),
    /// Train an encoder on compressed nodes.
    Train(TrainArgs),
    /// Full-graph embeddings from trained parameters.
    Infer(InferArgs),
    /// Linear-probe accuracy of embeddings.
    Eval(EvalArgs),
    /// Linear-probe accuracy across compression rates.
    Sweep(SweepArgs),
    /// Numerical checks of the approximation bounds and identities.
    Theory(TheoryArgs),
    /// Compressed and full-graph training side by side, with the full-graph
    /// loss tracked at every checkpoint of both.
    CompareFull(CompareArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GenKind {
    Sbm,
    Er,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "sbm")]
    pub kind: GenKind,
    #[arg(long, default_value_t = 800)]
    pub nodes: usize,
    #[arg(long, default_value_t = 4)]
    pub blocks: usize,
    #[arg(long, default_value_t = 0.1)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_out: f64,
    /// Edge probability for `--kind er`.
    #[arg(long, default_value_t = 0.05)]
    pub p: f64,
    #[arg(long, default_value_t = 32)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub feature_sep: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_std: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub clusters: usize,
    #[arg(long, default_value_t = 0.1)]
    pub balance_eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional JSON report with cut, imbalance and refinement passes.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub partition: PathBuf,
    /// Cluster-mean features.
    #[arg(long)]
    pub out_xc: PathBuf,
    /// Dense cluster adjacency with edge counts (within-cluster counts on
    /// the diagonal).
    #[arg(long)]
    pub out_ac: PathBuf,
}

/// Overrides applied on top of the JSON config.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON object with TrainConfig field names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// sce, coles, grace, cca_ssg or sage.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset directory (edges.tsv, features.bin|csv, labels.txt, split.json).
    #[arg(long, conflicts_with_all = ["graph", "features"])]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// With labels, the linear-probe accuracy of the inferred embeddings is
    /// printed.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, requires = "labels")]
    pub split: Option<PathBuf>,
    /// Use this partition instead of running the partitioner.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch loss history (CSV or JSON by extension).
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Include wall-clock seconds in the history (breaks byte
    /// reproducibility).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Without a split file a seeded 20-per-class split is drawn.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.02,0.05,0.1,0.2,0.5,1.0"
    )]
    pub rates: Vec<f64>,
    /// JSON or CSV by extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TheoryCheck {
    /// Partition-loss bound on G(n, p) graphs
    T1,
    /// Monte Carlo vs second-order augmentation regularizer
    T2,
    /// ReLU commutes with lifting under an even partition
    Appc,
    /// Spectral loss equality under even partitions, with uneven control
    AppdSpec,
    /// Lipschitz bound of the compressed loss
    AppdLip,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long, value_enum)]
    pub check: TheoryCheck,
    /// Seeds per grid point (t1) or instances (appc, appd-spec, appd-lip).
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo samples per noise level (t2).
    #[arg(long, default_value_t = 1_000_000)]
    pub mc_samples: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Compress(a) => cmd_compress(a),
        Command::Train(a) => cmd_train(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Theory(a) => cmd_theory(a),
        Command::CompareFull(a) => cmd_compare(a),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn print_json(v: &Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{v}");
}

fn read_graph_for(path: &Path, x: &DenseMatrix) -> crate::Result<SparseGraph> {
    io::read_edges(path, Some(x.rows()))
}

fn resolve_config(args: &ConfigArgs) -> std::result::Result<TrainConfig, Failure> {
    let mut cfg: TrainConfig = match &args.config {
        Some(p) => io::read_json(p)?,
        None => TrainConfig::default(),
    };
    if let Some(m) = &args.model {
        cfg.model = m
            .parse::<Model>()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(lr) = args.lr {
        cfg.lr = lr;
    }
    if let Some(k) = args.clusters {
        cfg.n_clusters = Some(k);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn add_config_input(m: &mut RunManifest, args: &ConfigArgs) -> crate::Result<()> {
    if let Some(p) = &args.config {
        m.add_input(p)?;
    }
    Ok(())
}

struct LoadedData {
    graph: SparseGraph,
    features: DenseMatrix,
    labels: Option<Vec<usize>>,
    split: Option<Split>,
    inputs: Vec<PathBuf>,
}

fn load_data(
    args: &DataArgs,
    split_seed: u64,
    need_labels: bool,
) -> std::result::Result<LoadedData, Failure> {
    if let Some(dir) = &args.data {
        let ds = data::load_dataset(dir, split_seed)?;
        let mut inputs: Vec<PathBuf> = [
            data::EDGES_FILE,
            data::FEATURES_BIN,
            data::FEATURES_CSV,
            data::LABELS_FILE,
            data::SPLIT_FILE,
        ]
        .iter()
        .map(|f| dir.join(f))
        .filter(|p| p.exists())
        .collect();
        let split = match &args.split {
            Some(p) => {
                inputs.push(p.clone());
                let s = io::read_split(p)?;
                s.validate(ds.n())
                    .map_err(|e| Error::data(p, e.to_string()))?;
                s
            }
            None => ds.split,
        };
        return Ok(LoadedData {
            graph: ds.graph,
            features: ds.features,
            labels: Some(ds.labels),
            split: Some(split),
            inputs,
        });
    }
    let (Some(gp), Some(fp)) = (&args.graph, &args.features) else {
        return Err(Failure::Usage(
            "either --data or both --graph and --features are required".into(),
        ));
    };
    if need_labels && args.labels.is_none() {
        return Err(Failure::Usage(
            "--labels is required with --graph/--features".into(),
        ));
    }
    let features = io::read_matrix(fp)?;
    let graph = read_graph_for(gp, &features)?;
    let mut inputs = vec![gp.clone(), fp.clone()];
    let (labels, split) = match &args.labels {
        Some(lp) => {
            inputs.push(lp.clone());
            let labels = io::read_labels(lp)?;
            if labels.len() != features.rows() {
                return Err(Error::data(
                    lp,
                    format!("{} labels for {} nodes", labels.len(), features.rows()),
                )
                .into());
            }
            let split = load_split(args.split.as_deref(), &labels, split_seed, &mut inputs)?;
            (Some(labels), Some(split))
        }
        None => (None, None),
    };
    Ok(LoadedData {
        graph,
        features,
        labels,
        split,
        inputs,
    })
}

fn load_split(
    path: Option<&Path>,
    labels: &[usize],
    seed: u64,
    inputs: &mut Vec<PathBuf>,
) -> crate::Result<Split> {
    match path {
        Some(p) => {
            inputs.push(p.to_path_buf());
            let s = io::read_split(p)?;
            s.validate(labels.len())
                .map_err(|e| Error::data(p, e.to_string()))?;
            Ok(s)
        }
        None => Ok(split_per_class(
            labels,
            data::TRAIN_PER_CLASS,
            &mut rng::stream(seed, streams::EVAL),
        )),
    }
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let config = json!({
        "kind": format!("{:?}", a.kind).to_lowercase(),
        "nodes": a.nodes, "blocks": a.blocks, "p_in": a.p_in, "p_out": a.p_out, "p": a.p,
        "feature_dim": a.feature_dim, "feature_sep": a.feature_sep, "noise_std": a.noise_std,
    });
    let mut manifest = RunManifest::start("gen", config, Some(a.seed));
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let primary = a.out.join(data::EDGES_FILE);
    match a.kind {
        GenKind::Sbm => {
            let ds = gen_sbm(&SbmConfig {
                n: a.nodes,
                blocks: a.blocks,
                p_in: a.p_in,
                p_out: a.p_out,
                feature_dim: a.feature_dim,
                feature_sep: a.feature_sep,
                noise_std: a.noise_std,
                seed: a.seed,
            })?;
            data::save_dataset(&a.out, &ds)?;
            for f in [
                data::EDGES_FILE,
                data::FEATURES_BIN,
                data::LABELS_FILE,
                data::SPLIT_FILE,
            ] {
                manifest.add_output(&a.out.join(f))?;
            }
        }
        GenKind::Er => {
            let g = gen_er(a.nodes, a.p, a.seed)?;
            io::write_edges(&primary, &g)?;
            manifest.add_output(&primary)?;
        }
    }
    manifest.finish(&primary)?;
    Ok(())
}

fn cmd_partition(a: PartitionArgs) -> CmdResult {
    let g = io::read_edges(&a.graph, None)?;
    let opts = PartitionOptions {
        balance_eps: a.balance_eps,
        seed: a.seed,
        ..PartitionOptions::default()
    };
    let outcome = multilevel_partition(&g, a.clusters, &opts)?;
    io::write_partition(&a.out, &outcome.partition)?;
    let summary = json!({
        "n": g.n(),
        "n_clusters": a.clusters,
        "edge_cut": edge_cut(&g, &outcome.partition),
        "imbalance": imbalance(&outcome.partition),
        "balance_relaxed": outcome.balance_relaxed,
        "effective_eps": outcome.effective_eps,
        "levels": outcome.levels,
        "passes": to_value(&outcome.passes),
    });
    let mut manifest = RunManifest::start(
        "partition",
        json!({"clusters": a.clusters, "balance_eps": a.balance_eps}),
        Some(a.seed),
    );
    manifest.add_input(&a.graph)?;
    manifest.add_output(&a.out)?;
    if let Some(r) = &a.report {
        io::write_json(r, &summary)?;
        manifest.add_output(r)?;
    }
    manifest.finish(&a.out)?;
    print_json(&json!({
        "edge_cut": summary["edge_cut"],
        "imbalance": summary["imbalance"],
        "balance_relaxed": summary["balance_relaxed"],
    }));
    Ok(())
}

fn cmd_compress(a: CompressArgs) -> CmdResult {
    let x = io::read_matrix(&a.features)?;
    let g = read_graph_for(&a.graph, &x)?;
    let p = io::read_partition(&a.partition)?;
    if p.n() != g.n() {
        return Err(Error::data(
            &a.partition,
            format!("partition covers {} nodes, graph has {}", p.n(), g.n()),
        )
        .into());
    }
    let x_c = compress_features(&x, &p, CompressMode::Mean)?.matrix;
    let opts = CompressGraphOptions {
        keep_self_loops: true,
        binarize: false,
    };
    let a_c = compress_graph(&g, &p, opts)?.graph.to_dense();
    io::write_matrix(&a.out_xc, &x_c)?;
    io::write_matrix(&a.out_ac, &a_c)?;
    let mut manifest = RunManifest::start("compress", json!({"mode": "mean"}), None);
    for i in [&a.graph, &a.features, &a.partition] {
        manifest.add_input(i)?;
    }
    manifest.add_output(&a.out_xc)?;
    manifest.add_output(&a.out_ac)?;
    manifest.finish(&a.out_xc)?;
    Ok(())
}

fn history_table(h: &TrainHistory, timings: bool) -> crate::Result<ResultTable> {
    let mut cols = vec!["epoch", "loss"];
    if timings {
        cols.push("seconds");
    }
    let mut t = ResultTable::new(cols);
    for e in &h.epochs {
        let mut row = vec![json!(e.epoch), json!(e.loss)];
        if timings {
            row.push(json!(e.seconds));
        }
        t.push(row)?;
    }
    Ok(t)
}

fn cmd_train(a: TrainArgs) -> CmdResult {
    let cfg = resolve_config(&a.cfg)?;
    let x = io::read_matrix(&a.features)?;
    let g = read_graph_for(&a.graph, &x)?;
    let mut manifest = RunManifest::start("train", to_value(&cfg), Some(cfg.seed));
    manifest.add_input(&a.graph)?;
    manifest.add_input(&a.features)?;
    add_config_input(&mut manifest, &a.cfg)?;
    let partition = match &a.partition {
        Some(p) => {
            manifest.add_input(p)?;
            Some(io::read_partition(p)?)
        }
        None => None,
    };
    let run = training::train_with(&g, &x, &cfg, partition.as_ref(), &mut |_, _| Ok(None))?;
    let sidecar = ParamsSidecar::describe(
        &run.params,
        Some(cfg.seed),
        Some(cfg.model.name().to_string()),
    );
    io::write_params(&a.out, &run.params, &sidecar)?;
    manifest.add_output(&a.out)?;
    manifest.add_output(&io::sidecar_path(&a.out))?;
    if let Some(h) = &a.history {
        io::write_results(h, &history_table(&run.history, a.timings)?)?;
        manifest.add_output(h)?;
    }
    let mut summary = json!({
        "model": cfg.model.name(),
        "n_clusters": run.partition.n_clusters(),
        "final_loss": run.history.epochs.last().map(|e| e.loss),
    });
    if let Some(lp) = &a.labels {
        manifest.add_input(lp)?;
        let labels = io::read_labels(lp)?;
        if labels.len() != g.n() {
            return Err(
                Error::data(lp, format!("{} labels for {} nodes", labels.len(), g.n())).into(),
            );
        }
        let mut inputs = Vec::new();
        let split = load_split(a.split.as_deref(), &labels, cfg.seed, &mut inputs)?;
        for i in &inputs {
            manifest.add_input(i)?;
        }
        let z = training::infer(&g, &x, &run.params)?;
        let (_, acc) = linear_probe(&z, &labels, &split, &ProbeOptions::default())?;
        summary["accuracy"] = json!(acc);
    }
    manifest.finish(&a.out)?;
    print_json(&summary);
    Ok(())
}

fn cmd_infer(a: InferArgs) -> CmdResult {
    let x = io::read_matrix(&a.features)?;
    let g = read_graph_for(&a.graph, &x)?;
    let params = io::read_params(&a.params)?;
    if params.input_dim() != x.cols() {
        return Err(Error::data(
            &a.params,
            format!(
                "parameters expect {} features, {} has {}",
                params.input_dim(),
                a.features.display(),
                x.cols()
            ),
        )
        .into());
    }
    let z = training::infer(&g, &x, &params)?;
    io::write_matrix(&a.out, &z)?;
    let mut manifest = RunManifest::start("infer", json!({}), None);
    for i in [&a.graph, &a.features, &a.params] {
        manifest.add_input(i)?;
    }
    manifest.add_output(&a.out)?;
    manifest.finish(&a.out)?;
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> CmdResult {
    let z = io::read_matrix(&a.embeddings)?;
    let labels = io::read_labels(&a.labels)?;
    if labels.len() != z.rows() {
        return Err(Error::data(
            &a.labels,
            format!("{} labels for {} embedding rows", labels.len(), z.rows()),
        )
        .into());
    }
    let mut inputs = vec![a.embeddings.clone(), a.labels.clone()];
    let split = load_split(a.split.as_deref(), &labels, a.seed, &mut inputs)?;
    let (_, acc) = linear_probe(&z, &labels, &split, &ProbeOptions::default())?;
    let mut t = ResultTable::new(["accuracy", "n_train", "n_test", "seed"]);
    t.push(vec![
        json!(acc),
        json!(split.train.len()),
        json!(split.test.len()),
        json!(a.seed),
    ])?;
    io::write_results(&a.out, &t)?;
    let mut manifest = RunManifest::start("eval", to_value(&ProbeOptions::default()), Some(a.seed));
    for i in &inputs {
        manifest.add_input(i)?;
    }
    manifest.add_output(&a.out)?;
    manifest.finish(&a.out)?;
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    let cfg = resolve_config(&a.cfg)?;
    let d = load_data(&a.data, cfg.seed, true)?;
    let (labels, split) = (d.labels.unwrap(), d.split.unwrap());
    let rows = training::sweep_compression(&d.graph, &d.features, &labels, &split, &cfg, &a.rates)?;
    let mut t = ResultTable::new(["rate", "n_clusters", "accuracy", "seed"]);
    for r in &rows {
        t.push(vec![
            json!(r.rate),
            json!(r.n_clusters),
            json!(r.accuracy),
            json!(r.seed),
        ])?;
    }
    io::write_results(&a.out, &t)?;
    let mut config = to_value(&cfg);
    config["rates"] = json!(a.rates);
    let mut manifest = RunManifest::start("sweep", config, Some(cfg.seed));
    for i in &d.inputs {
        manifest.add_input(i)?;
    }
    add_config_input(&mut manifest, &a.cfg)?;
    manifest.add_output(&a.out)?;
    manifest.finish(&a.out)?;
    Ok(())
}

fn cmd_theory(a: TheoryArgs) -> CmdResult {
    let report = match a.check {
        TheoryCheck::T1 => {
            let trials = theory::partition_bound_grid(a.trials.unwrap_or(20), a.seed, 8, 4)?;
            let holds = trials.iter().filter(|r| r.holds).count();
            json!({"check": "t1", "holds": holds, "total": trials.len(), "trials": trials})
        }
        TheoryCheck::T2 => {
            let sweep =
                theory::regularizer_sweep(&theory::REGULARIZER_SIGMAS, a.mc_samples, a.seed)?;
            json!({"check": "t2", "sweep": sweep})
        }
        TheoryCheck::Appc => {
            let trials = theory::relu_commutation_trials(a.trials.unwrap_or(50), a.seed)?;
            let max = trials.iter().map(|t| t.deviation).fold(0.0, f64::max);
            json!({"check": "appc", "max_deviation": max, "trials": trials})
        }
        TheoryCheck::AppdSpec => {
            let trials = theory::spectral_equality_trials(a.trials.unwrap_or(50), a.seed)?;
            let max = trials
                .iter()
                .map(|t| t.even.deviation())
                .fold(0.0, f64::max);
            let separated = trials
                .iter()
                .filter(|t| t.uneven.deviation() > 1e-6)
                .count();
            json!({
                "check": "appd-spec",
                "max_even_deviation": max,
                "uneven_separated": separated,
                "total": trials.len(),
                "trials": trials,
            })
        }
        TheoryCheck::AppdLip => {
            let trials = theory::lipschitz_trials(a.trials.unwrap_or(100), a.seed)?;
            let holds = trials.iter().filter(|r| r.holds).count();
            json!({
                "check": "appd-lip",
                "lipschitz_constant": theory::PAIR_DISTANCE_LIPSCHITZ,
                "holds": holds,
                "total": trials.len(),
                "trials": trials,
            })
        }
    };
    io::write_json(&a.out, &report)?;
    let config = json!({
        "check": format!("{:?}", a.check).to_lowercase(),
        "trials": a.trials,
        "mc_samples": a.mc_samples,
    });
    let mut manifest = RunManifest::start("theory", config, Some(a.seed));
    manifest.add_output(&a.out)?;
    manifest.finish(&a.out)?;
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> CmdResult {
    let cfg = resolve_config(&a.cfg)?;
    let d = load_data(&a.data, cfg.seed, false)?;
    let report = training::compare_full(&d.graph, &d.features, &cfg, &a.seeds)?;
    io::write_json(&a.out, &report)?;
    let mut config = to_value(&cfg);
    config["seeds"] = json!(a.seeds);
    let mut manifest = RunManifest::start("compare-full", config, None);
    for i in &d.inputs {
        manifest.add_input(i)?;
    }
    add_config_input(&mut manifest, &a.cfg)?;
    manifest.add_output(&a.out)?;
    manifest.finish(&a.out)?;
    print_json(&json!({
        "model": report.model.name(),
        "median_relative_decrease": report.median_relative_decrease,
        "median_spearman": report.median_spearman,
    }));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        run(std::iter::once("structcomp").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(
            run_args(&["train", "--features", "x.bin", "--out", "p.bin"]),
            EXIT_USAGE
        );
        assert_eq!(run_args(&["bogus"]), EXIT_USAGE);
        assert_eq!(
            run_args(&["theory", "--check", "appc", "--out", "r.json", "--nope"]),
            EXIT_USAGE
        );
        assert_eq!(run_args(&["--help"]), EXIT_OK);
    }

    #[test]
    fn model_override_is_validated() {
        let args = ConfigArgs {
            config: None,
            model: Some("cca-ssg".into()),
            epochs: Some(3),
            lr: None,
            clusters: Some(5),
            seed: None,
        };
        let cfg = resolve_config(&args).unwrap();
        assert_eq!(
            (cfg.model, cfg.epochs, cfg.n_clusters),
            (Model::CcaSsg, 3, Some(5))
        );
        let bad = ConfigArgs {
            model: Some("gcn".into()),
            ..args
        };
        assert!(matches!(resolve_config(&bad), Err(Failure::Usage(_))));
    }
}
