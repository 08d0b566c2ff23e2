//! Acceptance criteria. Each test prints one `PASS`, `FAIL` or `SKIP` line
//! straight to stdout (bypassing the harness capture) and fails on `FAIL`.

#![allow(clippy::needless_range_loop)]

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng as _;
use structcomp::compress::{compress_features, lift, CompressMode};
use structcomp::data::{
    cluster_agreement, gen_sbm, linear_probe, load_dataset, split_per_class, LabeledDataset,
    ProbeOptions, SbmConfig, TRAIN_PER_CLASS,
};
use structcomp::encoder::{encoder_backward, forward, Activation, Arch, EncoderParams};
use structcomp::gradcheck::{central_difference, frobenius_relative_error, max_relative_error};
use structcomp::graph::{DedupPolicy, LaplacianKind, SparseGraph};
use structcomp::losses::{
    cca_ssg_loss, coles_loss, infonce_loss, negative_graph, sage_single_view_loss, sample_pairs,
    sce_loss, LossValueGrad, NegativeSampleSpec,
};
use structcomp::matrix::DenseMatrix;
use structcomp::partition::{
    imbalance, multilevel_partition, partition_remainder_norm, Partition, PartitionOptions,
};
use structcomp::rng;
use structcomp::theory;
use structcomp::training::{
    self, compare_full, full_graph_train, infer, train, Model, TrainConfig,
};

fn report(id: u32, name: &str, status: &str, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{status} [{id:>2}] {name}: {detail}");
    let _ = out.flush();
}

fn verdict(id: u32, name: &str, ok: bool, detail: String) {
    report(id, name, if ok { "PASS" } else { "FAIL" }, &detail);
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn sbm() -> LabeledDataset {
    gen_sbm(&SbmConfig {
        n: 800,
        blocks: 4,
        p_in: 0.1,
        p_out: 0.01,
        ..SbmConfig::default()
    })
    .unwrap()
}

/// Shared by the SBM study and the loss-trend comparison: two-layer encoder
/// with a linear output layer for every model.
fn sbm_config(model: Model, seed: u64) -> TrainConfig {
    TrainConfig {
        model,
        lr: 0.001,
        epochs: 50,
        n_clusters: Some(80),
        arch: Some(Arch::Mlp2),
        activations: Some(vec![Activation::Relu, Activation::Identity]),
        checkpoint_every: 0,
        seed,
        ..TrainConfig::default()
    }
}

const SBM_MODELS: [Model; 4] = [Model::Sce, Model::Coles, Model::Grace, Model::CcaSsg];
const SBM_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

// ---------------------------------------------------------------- 1

fn random_graph(n: usize, p: f64, r: &mut rng::Rng) -> SparseGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    // a ring keeps every node attached so pair sampling covers all anchors
    edges.extend((0..n).map(|i| (i, (i + 1) % n)));
    SparseGraph::from_edges(n, &edges, DedupPolicy::default()).unwrap()
}

#[test]
fn criterion_01_gradient_correctness() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_entry = 0.0f64;
    let mut failures = Vec::new();
    let mut checked = 0;
    for model in [
        Model::Sce,
        Model::Coles,
        Model::Grace,
        Model::CcaSsg,
        Model::Sage,
    ] {
        for arch in [Arch::Linear, Arch::Mlp2] {
            for inst in 0..20u64 {
                // redraw until the loss is defined at the starting point (no all-zero ReLU rows)
                for attempt in 0u64.. {
                    let mut r = rng::seeded(1000 * inst + 7 + 1_000_000 * attempt);
                    let n = r.random_range(4..=8);
                    let d = r.random_range(2..=16);
                    let x1 = DenseMatrix::from_fn(n, d, |_, _| r.random_range(-1.0..1.0));
                    let x2 = x1.map(|v| v + 0.3 * (v * 17.0).sin());
                    let mut uniform = |rows, cols| {
                        DenseMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
                    };
                    let params = match arch {
                        Arch::Linear => EncoderParams::linear(uniform(d, 4)),
                        Arch::Mlp2 => EncoderParams::mlp2(
                            uniform(d, 6),
                            uniform(6, 4),
                            [Activation::Relu, Activation::Identity],
                        ),
                    }
                    .unwrap();
                    let g = random_graph(n, 0.4, &mut r);
                    let l = g.laplacian(LaplacianKind::SymNormalized);
                    let l_neg = negative_graph(n, &NegativeSampleSpec::default(), &mut r)
                        .unwrap()
                        .laplacian(LaplacianKind::SymNormalized);
                    let (pos, neg) = sample_pairs(&g, 2, &mut r);
                    let eval = |p: &EncoderParams| -> structcomp::Result<(f64, Vec<DenseMatrix>)> {
                        let (z1, t1) = forward(&x1, p)?;
                        let (z2, t2) = forward(&x2, p)?;
                        let (out, two_views): (LossValueGrad, bool) = match model {
                            Model::Sce => (sce_loss(&z1, &l_neg, 1.0)?, false),
                            Model::Coles => (coles_loss(&z1, &l_neg, &l)?, false),
                            Model::Sage => (sage_single_view_loss(&z1, &pos, &neg)?, false),
                            Model::Grace => (infonce_loss(&z1, &z2, 0.5)?, true),
                            Model::CcaSsg => (cca_ssg_loss(&z1, &z2, 1e-3)?, true),
                        };
                        let mut grads = encoder_backward(&t1, p, &out.grads[0])?;
                        if two_views {
                            for (g, h) in
                                grads
                                    .iter_mut()
                                    .zip(encoder_backward(&t2, p, &out.grads[1])?)
                            {
                                g.add_assign(&h)?;
                            }
                        }
                        Ok((out.value, grads))
                    };
                    // finite differences are meaningless across a ReLU kink
                    let near_kink = arch == Arch::Mlp2
                        && [&x1, &x2].iter().any(|x| {
                            let pre = x.matmul(&params.layers()[0]).unwrap();
                            pre.as_slice().iter().any(|v| v.abs() < 1e-4)
                        });
                    if near_kink {
                        continue;
                    }
                    let Ok((_, grads)) = eval(&params) else {
                        continue;
                    };
                    for layer in 0..params.layers().len() {
                        let numeric = central_difference(&params.layers()[layer], 1e-6, |w| {
                            let mut p = params.clone();
                            p.layers_mut()[layer] = w.clone();
                            eval(&p).unwrap().0
                        });
                        let err = frobenius_relative_error(&grads[layer], &numeric);
                        worst = worst.max(err);
                        worst_entry =
                            worst_entry.max(max_relative_error(&grads[layer], &numeric, 1e-8));
                        if err > 1e-5 {
                            failures.push(format!(
                                "{}/{arch:?}/#{inst}/W{layer}: {err:.2e}",
                                model.name()
                            ));
                        }
                    }
                    checked += 1;
                    break;
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(
        1,
        "gradient correctness",
        failures.is_empty() && secs < 10.0,
        format!(
            "{checked} instances, worst rel. err ||a-n||/max(||a||,||n||) {worst:.2e} (limit 1e-5), \
             worst per-entry rel. err {worst_entry:.2e}, {secs:.2}s (limit 10s){}",
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join(", ")) }
        ),
    );
}

// ---------------------------------------------------------------- 2

#[test]
fn criterion_02_partition_bound() {
    let t0 = Instant::now();
    let reports = theory::partition_bound_grid(20, 0, 8, 4).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let holds = reports.iter().filter(|r| r.holds).count();
    let min_slack = reports
        .iter()
        .map(|r| r.slack)
        .fold(f64::INFINITY, f64::min);
    verdict(
        2,
        "partition-loss bound on G(n,p)",
        holds == reports.len() && reports.len() == 180 && secs < 60.0,
        format!(
            "{holds}/{} trials hold, min slack {min_slack:.3e}, {secs:.2}s (limit 60s)",
            reports.len()
        ),
    );
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_03_nonlinear_commutation() {
    let t0 = Instant::now();
    let trials = theory::relu_commutation_trials(50, 0).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let max = trials.iter().map(|t| t.deviation).fold(0.0, f64::max);
    verdict(
        3,
        "ReLU commutation identity",
        max <= 1e-12 && trials.len() == 50 && secs < 5.0,
        format!(
            "max deviation {max:.2e} over {} instances (limit 1e-12), {secs:.2}s (limit 5s)",
            trials.len()
        ),
    );
}

// ---------------------------------------------------------------- 4

#[test]
fn criterion_04_spectral_equality() {
    let t0 = Instant::now();
    let trials = theory::spectral_equality_trials(50, 0).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let max_even = trials
        .iter()
        .map(|t| t.even.deviation())
        .fold(0.0, f64::max);
    let separated = trials
        .iter()
        .filter(|t| t.uneven.deviation() > 1e-6)
        .count();
    let share = separated as f64 / trials.len() as f64;
    verdict(
        4,
        "spectral loss under even partitions",
        max_even <= 1e-10 && share >= 0.9 && secs < 5.0,
        format!(
            "even max deviation {max_even:.2e} (limit 1e-10); uneven control > 1e-6 on {separated}/{} (need 90%); {secs:.2}s",
            trials.len()
        ),
    );
}

// ---------------------------------------------------------------- 5

#[test]
fn criterion_05_augmentation_regularizer() {
    let t0 = Instant::now();
    let sweep = theory::regularizer_sweep(&theory::REGULARIZER_SIGMAS, 1_000_000, 0).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let at = sweep.reports.iter().find(|r| r.sigma == 0.05).unwrap();
    let slope = sweep.slope.unwrap_or(f64::NAN);
    let ok = at.difference <= 5e-4 && (slope - 3.0).abs() <= 0.5 && secs < 60.0;
    verdict(
        5,
        "second-order augmentation regularizer",
        ok,
        format!(
            "|MC - analytic| at sigma=0.05: {:.3e} (limit 5e-4, MC s.e. {:.1e}); log-log slope {slope:.3} (need 3 +/- 0.5); \
             exact second-order form: difference {:.3e}, slope {:.3}; {secs:.2}s",
            at.difference,
            at.mc_std_error,
            at.corrected_difference,
            sweep.corrected_slope.unwrap_or(f64::NAN),
        ),
    );
}

// ---------------------------------------------------------------- 6

#[test]
fn criterion_06_partition_algebra() {
    let mut worst_identity = 0.0f64;
    let mut r = rng::seeded(6);
    for &n in &[1usize, 7, 50, 200, 500] {
        let k = r.random_range(1..=n);
        let p = theory::random_partition(n, k, &mut r).unwrap();
        let prod = p.normalized_matrix().t_matmul(&p.binary_matrix()).unwrap();
        worst_identity = worst_identity.max(prod.max_abs_diff(&DenseMatrix::identity(k)));
    }
    let k4 = SparseGraph::from_edges(
        4,
        &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        DedupPolicy::default(),
    )
    .unwrap();
    let split = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
    let rem = partition_remainder_norm(&k4, &split, 1).unwrap();
    let rem_err = (rem - 12f64.sqrt()).abs();
    let mut worst_lift = 0.0f64;
    for seed in 0..20 {
        let mut r = rng::seeded(seed);
        let n = r.random_range(2..100);
        let p = theory::random_partition(n, r.random_range(1..=n), &mut r).unwrap();
        let z = DenseMatrix::from_fn(p.n_clusters(), 5, |_, _| r.random_range(-10.0..10.0));
        let back = compress_features(&lift(&z, &p).unwrap(), &p, CompressMode::Mean)
            .unwrap()
            .matrix;
        worst_lift = worst_lift.max(back.max_abs_diff(&z) / z.max_row_norm().max(1.0));
    }
    verdict(
        6,
        "partition-matrix algebra",
        worst_identity <= 1e-14 && rem_err <= 1e-12 && worst_lift <= 1e-14,
        format!(
            "P^T P_bin = I max dev {worst_identity:.1e} (limit 1e-14); K4 2+2 remainder {rem:.15} vs sqrt(12) err {rem_err:.1e} \
             (limit 1e-12); compress(lift(Z)) rel. dev {worst_lift:.1e} (limit 1e-14)"
        ),
    );
}

// ---------------------------------------------------------------- 7

#[test]
fn criterion_07_sbm_study() {
    let ds = sbm();
    let t0 = Instant::now();
    let probe = ProbeOptions::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for model in SBM_MODELS {
        let (mut sc, mut full) = (0.0, 0.0);
        for seed in SBM_SEEDS {
            let cfg = sbm_config(model, seed);
            let (p, _) = train(&ds.graph, &ds.features, &cfg).unwrap();
            sc += linear_probe(
                &infer(&ds.graph, &ds.features, &p).unwrap(),
                &ds.labels,
                &ds.split,
                &probe,
            )
            .unwrap()
            .1;
            let (p, _) = full_graph_train(&ds.graph, &ds.features, &cfg).unwrap();
            full += linear_probe(
                &infer(&ds.graph, &ds.features, &p).unwrap(),
                &ds.labels,
                &ds.split,
                &probe,
            )
            .unwrap()
            .1;
        }
        let (sc, full) = (sc / SBM_SEEDS.len() as f64, full / SBM_SEEDS.len() as f64);
        let model_ok = sc >= 0.90 && (sc - full).abs() <= 0.03;
        ok &= model_ok;
        lines.push(format!(
            "{} compressed {:.3} full {:.3}{}",
            model.name(),
            sc,
            full,
            if model_ok { "" } else { " (miss)" }
        ));
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(
        7,
        "SBM study, compressed vs full-graph",
        ok && secs < 300.0,
        format!(
            "{}; need >= 0.90 and within 0.03; {secs:.1}s (limit 300s)",
            lines.join(", ")
        ),
    );
}

// ---------------------------------------------------------------- 8

#[test]
fn criterion_08_loss_trend() {
    let ds = sbm();
    let mut lines = Vec::new();
    let mut ok = true;
    for model in SBM_MODELS {
        let cfg = TrainConfig {
            checkpoint_every: 5,
            ..sbm_config(model, 0)
        };
        let rep = compare_full(&ds.graph, &ds.features, &cfg, &SBM_SEEDS).unwrap();
        let rho = rep.median_spearman.unwrap_or(f64::NAN);
        let full_decrease = training::median(
            &rep.runs
                .iter()
                .map(|r| {
                    (r.full_graph_loss[0] - r.full_graph_loss.last().unwrap())
                        / r.full_graph_loss[0].abs()
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let model_ok = rep.median_relative_decrease >= 0.5 && rho >= 0.8;
        ok &= model_ok;
        lines.push(format!(
            "{} decrease {:.3} spearman {:.3} (full-graph trainer's own decrease {:.3}){}",
            model.name(),
            rep.median_relative_decrease,
            rho,
            full_decrease,
            if model_ok { "" } else { " (miss)" }
        ));
    }
    verdict(
        8,
        "full-graph loss at compressed checkpoints",
        ok,
        format!(
            "{}; need decrease >= 0.5 and spearman >= 0.8 (5-seed medians)",
            lines.join(", ")
        ),
    );
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_09_partitioner_quality() {
    let ds = sbm();
    let opts = PartitionOptions {
        balance_eps: 0.1,
        ..PartitionOptions::default()
    };
    let out = multilevel_partition(&ds.graph, 4, &opts).unwrap();
    let agreement = cluster_agreement(out.partition.assign(), &ds.labels).unwrap();
    let imb = imbalance(&out.partition);
    let bad_passes = out
        .passes
        .iter()
        .filter(|p| p.cut_after > p.cut_before)
        .count();
    verdict(
        9,
        "partitioner quality on SBM",
        agreement >= 0.95 && imb <= 1.1 && bad_passes == 0,
        format!(
            "block agreement {agreement:.4} (need 0.95), imbalance {imb:.4} (limit 1.1), {} refinement passes, {bad_passes} increased the cut",
            out.passes.len()
        ),
    );
}

// ---------------------------------------------------------------- 10

fn cora_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("STRUCTCOMP_CORA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/cora"));
    dir.join("edges.tsv").exists().then_some(dir)
}

#[test]
fn criterion_10_cora() {
    let Some(dir) = cora_dir() else {
        report(
            10,
            "Cora accuracy",
            "SKIP",
            "dataset not found (set STRUCTCOMP_CORA_DIR or add data/cora)",
        );
        return;
    };
    let ds = load_dataset(&dir, 0).unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for (model, target) in [(Model::Grace, 79.7), (Model::CcaSsg, 82.3)] {
        let mut total = 0.0;
        for split_seed in 0..10u64 {
            let split = split_per_class(&ds.labels, TRAIN_PER_CLASS, &mut rng::seeded(split_seed));
            let cfg = TrainConfig {
                model,
                lr: 0.001,
                epochs: 20,
                n_clusters: Some(300),
                seed: split_seed,
                checkpoint_every: 0,
                ..TrainConfig::default()
            };
            let (p, _) = train(&ds.graph, &ds.features, &cfg).unwrap();
            let z = infer(&ds.graph, &ds.features, &p).unwrap();
            total += linear_probe(&z, &ds.labels, &split, &ProbeOptions::default())
                .unwrap()
                .1;
        }
        let acc = 100.0 * total / 10.0;
        let model_ok = (acc - target).abs() <= 2.0;
        ok &= model_ok;
        lines.push(format!("{} {acc:.1} vs {target}", model.name()));
    }
    verdict(
        10,
        "Cora accuracy",
        ok,
        format!("{} (tolerance 2.0 points, 10 splits)", lines.join(", ")),
    );
}

// ---------------------------------------------------------------- 11

fn run_cli(args: &[&str]) {
    let code = structcomp::cli::run(std::iter::once("structcomp").chain(args.iter().copied()));
    assert_eq!(code, 0, "command failed: {args:?}");
}

fn run_all_commands(dir: &Path) -> Vec<PathBuf> {
    let s = |p: &str| dir.join(p).to_string_lossy().into_owned();
    let data = s("data");
    let cfg = s("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"model": "cca_ssg", "epochs": 5, "hidden": 16, "embedding_dim": 8, "seed": 3}"#,
    )
    .unwrap();
    run_cli(&[
        "gen",
        "--nodes",
        "200",
        "--feature-dim",
        "8",
        "--seed",
        "11",
        "--out",
        &data,
    ]);
    let (edges, feats, labels) = (
        s("data/edges.tsv"),
        s("data/features.bin"),
        s("data/labels.txt"),
    );
    run_cli(&[
        "partition",
        "--graph",
        &edges,
        "--clusters",
        "20",
        "--seed",
        "2",
        "--out",
        &s("part.txt"),
    ]);
    run_cli(&[
        "compress",
        "--graph",
        &edges,
        "--features",
        &feats,
        "--partition",
        &s("part.txt"),
        "--out-xc",
        &s("xc.bin"),
        "--out-ac",
        &s("ac.bin"),
    ]);
    run_cli(&[
        "train",
        "--graph",
        &edges,
        "--features",
        &feats,
        "--config",
        &cfg,
        "--clusters",
        "20",
        "--out",
        &s("params.bin"),
        "--history",
        &s("history.csv"),
    ]);
    run_cli(&[
        "infer",
        "--graph",
        &edges,
        "--features",
        &feats,
        "--params",
        &s("params.bin"),
        "--out",
        &s("z.bin"),
    ]);
    run_cli(&[
        "eval",
        "--embeddings",
        &s("z.bin"),
        "--labels",
        &labels,
        "--out",
        &s("eval.json"),
    ]);
    run_cli(&[
        "sweep",
        "--data",
        &data,
        "--config",
        &cfg,
        "--rates",
        "0.1,0.5,1.0",
        "--out",
        &s("sweep.csv"),
    ]);
    run_cli(&[
        "theory",
        "--check",
        "appc",
        "--trials",
        "5",
        "--out",
        &s("appc.json"),
    ]);
    run_cli(&[
        "theory",
        "--check",
        "t1",
        "--trials",
        "1",
        "--out",
        &s("t1.json"),
    ]);
    run_cli(&[
        "compare-full",
        "--data",
        &data,
        "--config",
        &cfg,
        "--seeds",
        "0,1",
        "--out",
        &s("compare.json"),
    ]);
    [
        "data/edges.tsv",
        "data/features.bin",
        "data/labels.txt",
        "data/split.json",
        "part.txt",
        "xc.bin",
        "ac.bin",
        "params.bin",
        "params.bin.json",
        "history.csv",
        "z.bin",
        "eval.json",
        "sweep.csv",
        "appc.json",
        "t1.json",
        "compare.json",
    ]
    .iter()
    .map(|f| dir.join(f))
    .collect()
}

fn manifest_digest(path: &Path) -> String {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(PathBuf::from(s)).unwrap()).unwrap();
    v["digest"].as_str().unwrap().to_string()
}

#[test]
fn criterion_11_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let files_a = run_all_commands(a.path());
    let files_b = run_all_commands(b.path());
    let mut differing = Vec::new();
    for (fa, fb) in files_a.iter().zip(&files_b) {
        if std::fs::read(fa).unwrap() != std::fs::read(fb).unwrap() {
            differing.push(fa.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    let primaries = [
        "data/edges.tsv",
        "part.txt",
        "xc.bin",
        "params.bin",
        "z.bin",
        "eval.json",
        "sweep.csv",
        "appc.json",
        "compare.json",
    ];
    for p in primaries {
        if manifest_digest(&a.path().join(p)) != manifest_digest(&b.path().join(p)) {
            differing.push(format!("{p}.manifest.json digest"));
        }
    }
    verdict(
        11,
        "byte-identical reruns",
        differing.is_empty(),
        format!(
            "{} result files and {} manifest digests compared{}",
            files_a.len(),
            primaries.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!("; differing: {}", differing.join(", "))
            }
        ),
    );
}
