//! Training on compressed nodes, the full-graph baseline trainer, full-graph
//! loss evaluation at fixed parameters, and compression-rate sweeps.
//!
//! The compressed trainer never propagates over the node graph: it
//! partitions once, compresses once, and then every epoch only touches the
//! `n′` cluster rows. Propagation happens at inference, in [`infer`].

use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::compress::{
    compress_features, compress_graph, drop_member, CompressGraphOptions, CompressMode,
};
use crate::data::{linear_probe, ProbeOptions, Split};
use crate::encoder::{
    encoder_backward, forward, gcn_backward, gcn_forward, gcn_forward_with_tape, Activation, Arch,
    EncoderParams,
};
use crate::error::{Error, Result};
use crate::graph::{DedupPolicy, LaplacianKind, SparseGraph};
use crate::losses::{
    cca_ssg_loss, coles_loss, infonce_loss, negative_graph, sage_single_view_loss, sample_pairs,
    sce_loss, LossValueGrad, NegativeSampleSpec,
};
use crate::matrix::DenseMatrix;
use crate::optim::{adam_step, AdamState};
use crate::partition::{multilevel_partition, Partition, PartitionOptions};
use crate::rng::{self, streams, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Sce,
    Coles,
    Grace,
    CcaSsg,
    /// Pairwise logistic loss with pairs drawn from the (compressed) graph.
    Sage,
}

impl Model {
    pub fn is_multi_view(self) -> bool {
        matches!(self, Model::Grace | Model::CcaSsg)
    }

    pub fn default_arch(self) -> Arch {
        if self.is_multi_view() {
            Arch::Mlp2
        } else {
            Arch::Linear
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Sce => "sce",
            Model::Coles => "coles",
            Model::Grace => "grace",
            Model::CcaSsg => "cca_ssg",
            Model::Sage => "sage",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "sce" => Ok(Model::Sce),
            "coles" => Ok(Model::Coles),
            "grace" => Ok(Model::Grace),
            "cca_ssg" => Ok(Model::CcaSsg),
            "sage" => Ok(Model::Sage),
            _ => Err(Error::invalid(format!(
                "unknown model '{s}'; expected one of sce, coles, grace, cca_ssg, sage"
            ))),
        }
    }
}

/// Which graph the trace-form Laplacians are built from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianWeights {
    /// 0/1 adjacency, self-loops removed.
    #[default]
    Binarized,
    /// Edge counts between clusters.
    Weighted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: Model,
    pub lr: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    /// Wins over `compression_rate` when both are set.
    pub n_clusters: Option<usize>,
    /// `n′ = max(2, round(rate·n))`; 0.1 when neither field is set.
    pub compression_rate: Option<f64>,
    pub tau: f64,
    pub lambda: f64,
    pub alpha: f64,
    /// DropMember rate for the compressed trainer, DropEdge rate for the
    /// full-graph trainer.
    pub drop_rate: f64,
    pub negatives_per_anchor: usize,
    pub num_permutations: usize,
    pub hidden: usize,
    pub embedding_dim: usize,
    pub seed: u64,
    /// Checkpoint after every this many epochs (epoch 0 and the last epoch
    /// are always included); 0 disables checkpoints.
    pub checkpoint_every: usize,
    pub arch: Option<Arch>,
    pub activations: Option<Vec<Activation>>,
    pub laplacian: LaplacianWeights,
    pub balance_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: Model::Grace,
            lr: 0.001,
            epochs: 20,
            weight_decay: 0.0,
            n_clusters: None,
            compression_rate: None,
            tau: 0.5,
            lambda: 1e-3,
            alpha: 1.0,
            drop_rate: 0.2,
            negatives_per_anchor: 1,
            num_permutations: 1,
            hidden: 256,
            embedding_dim: 128,
            seed: 0,
            checkpoint_every: 1,
            arch: None,
            activations: None,
            laplacian: LaplacianWeights::Binarized,
            balance_eps: 0.1,
        }
    }
}

pub const DEFAULT_COMPRESSION_RATE: f64 = 0.1;

impl TrainConfig {
    pub fn for_model(model: Model) -> Self {
        Self {
            model,
            ..Self::default()
        }
    }

    pub fn arch(&self) -> Arch {
        self.arch.unwrap_or(self.model.default_arch())
    }

    /// Configured activations, or the model's default. The multi-view losses
    /// reject all-zero rows (cosine) and constant columns (standardization),
    /// which a ReLU output layer produces once units die, so their output
    /// layer defaults to linear.
    pub fn resolved_activations(&self) -> Option<Vec<Activation>> {
        match (&self.activations, self.arch()) {
            (Some(a), _) => Some(a.clone()),
            (None, Arch::Mlp2) if self.model.is_multi_view() => {
                Some(vec![Activation::Relu, Activation::Identity])
            }
            _ => None,
        }
    }

    pub fn negative_spec(&self) -> NegativeSampleSpec {
        NegativeSampleSpec {
            num_permutations: self.num_permutations,
            negatives_per_anchor: self.negatives_per_anchor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.weight_decay >= 0.0) {
            return bad(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            ));
        }
        if self.model == Model::Grace && !(self.tau > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(0.0..1.0).contains(&self.drop_rate) {
            return bad(format!(
                "drop_rate must be in [0, 1), got {}",
                self.drop_rate
            ));
        }
        if let Some(r) = self.compression_rate {
            if !(r > 0.0 && r <= 1.0) {
                return bad(format!("compression_rate must be in (0, 1], got {r}"));
            }
        }
        if self.hidden == 0 || self.embedding_dim == 0 {
            return bad("hidden and embedding_dim must be positive".into());
        }
        if !self.alpha.is_finite() || !self.lambda.is_finite() {
            return bad("alpha and lambda must be finite".into());
        }
        self.negative_spec().validate()
    }

    /// Number of clusters for a graph of `n` nodes.
    pub fn resolve_n_clusters(&self, n: usize) -> Result<usize> {
        let k = match (self.n_clusters, self.compression_rate) {
            (Some(k), _) => k,
            (None, rate) => {
                let rate = rate.unwrap_or(DEFAULT_COMPRESSION_RATE);
                ((rate * n as f64).round() as usize).max(2).min(n)
            }
        };
        if k == 0 || k > n {
            return Err(Error::invalid(format!(
                "n_clusters = {k} must be in [1, {n}]"
            )));
        }
        Ok(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based; the loss is evaluated at the parameters before this update.
    pub epoch: usize,
    pub loss: f64,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Number of updates applied so far (0 = initial parameters).
    pub epoch: usize,
    pub full_loss: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub checkpoints: Vec<Checkpoint>,
}

impl TrainHistory {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.loss).collect()
    }

    pub fn checkpoint_losses(&self) -> Vec<Option<f64>> {
        self.checkpoints.iter().map(|c| c.full_loss).collect()
    }
}

#[derive(Clone, Debug)]
pub struct TrainRun {
    pub params: EncoderParams,
    pub history: TrainHistory,
    pub partition: Partition,
}

/// Called at each checkpoint with the update count and current parameters;
/// the returned value is stored as the checkpoint's full-graph loss.
pub type Observer<'a> = dyn FnMut(usize, &EncoderParams) -> Result<Option<f64>> + 'a;

fn check_inputs(g: &SparseGraph, x: &DenseMatrix, cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    if g.n() != x.rows() {
        return Err(Error::dims(
            "train",
            format!("graph has {} nodes, features have {} rows", g.n(), x.rows()),
        ));
    }
    if x.rows() < 2 {
        return Err(Error::invalid("training needs at least 2 nodes"));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("input features".into()));
    }
    Ok(())
}

fn laplacian_of(g: &SparseGraph, weights: LaplacianWeights) -> SparseGraph {
    let base = g.without_self_loops();
    let base = match weights {
        LaplacianWeights::Binarized => base.binarized(),
        LaplacianWeights::Weighted => base,
    };
    base.laplacian(LaplacianKind::SymNormalized)
}

/// Graph-derived pieces of a loss that stay fixed during training.
struct LossContext {
    model: Model,
    laplacian: Option<SparseGraph>,
    neg_laplacian: Option<SparseGraph>,
    /// Graph to draw SAGE pairs from.
    pair_graph: Option<SparseGraph>,
    tau: f64,
    lambda: f64,
    alpha: f64,
    negatives: usize,
}

impl LossContext {
    fn new(model_graph: &SparseGraph, cfg: &TrainConfig, neg_rng: &mut Rng) -> Result<Self> {
        let n = model_graph.n();
        let (laplacian, neg_laplacian, pair_graph) = match cfg.model {
            Model::Sce | Model::Coles => {
                let neg = negative_graph(n, &cfg.negative_spec(), neg_rng)?;
                (
                    Some(laplacian_of(model_graph, cfg.laplacian)),
                    Some(neg.laplacian(LaplacianKind::SymNormalized)),
                    None,
                )
            }
            Model::Sage => (None, None, Some(model_graph.without_self_loops())),
            Model::Grace | Model::CcaSsg => (None, None, None),
        };
        Ok(Self {
            model: cfg.model,
            laplacian,
            neg_laplacian,
            pair_graph,
            tau: cfg.tau,
            lambda: cfg.lambda,
            alpha: cfg.alpha,
            negatives: cfg.negatives_per_anchor,
        })
    }

    /// Loss and embedding gradients. `pair_rng` is only used by SAGE.
    fn evaluate(&self, z: &[DenseMatrix], pair_rng: &mut Rng) -> Result<LossValueGrad> {
        match self.model {
            Model::Sce => sce_loss(&z[0], self.neg_laplacian.as_ref().unwrap(), self.alpha),
            // minimized: Tr(ZᵀLZ) − Tr(ZᵀL⁻Z)
            Model::Coles => coles_loss(
                &z[0],
                self.neg_laplacian.as_ref().unwrap(),
                self.laplacian.as_ref().unwrap(),
            ),
            Model::Sage => {
                let (pos, neg) =
                    sample_pairs(self.pair_graph.as_ref().unwrap(), self.negatives, pair_rng);
                if pos.is_empty() || neg.is_empty() {
                    return Err(Error::Degenerate(
                        "graph has no edges to draw positive pairs from".into(),
                    ));
                }
                sage_single_view_loss(&z[0], &pos, &neg)
            }
            Model::Grace => infonce_loss(&z[0], &z[1], self.tau),
            Model::CcaSsg => cca_ssg_loss(&z[0], &z[1], self.lambda),
        }
    }
}

/// One encoder input: features, optionally propagated by a normalized adjacency.
struct View<'a> {
    a_hat: Option<&'a SparseGraph>,
    x: &'a DenseMatrix,
}

fn loss_and_grads(
    ctx: &LossContext,
    params: &EncoderParams,
    views: &[View<'_>],
    pair_rng: &mut Rng,
    with_grads: bool,
) -> Result<(f64, Vec<DenseMatrix>)> {
    let mut zs = Vec::with_capacity(views.len());
    let mut tapes = Vec::with_capacity(views.len());
    for v in views {
        let (z, tape) = match v.a_hat {
            Some(a) => gcn_forward_with_tape(a, v.x, params)?,
            None => forward(v.x, params)?,
        };
        zs.push(z);
        tapes.push(tape);
    }
    let out = ctx.evaluate(&zs, pair_rng)?;
    if !with_grads {
        return Ok((out.value, Vec::new()));
    }
    let mut total = params.zeros_like();
    for ((v, tape), gz) in views.iter().zip(&tapes).zip(&out.grads) {
        let grads = match v.a_hat {
            Some(a) => gcn_backward(a, tape, params, gz)?,
            None => encoder_backward(tape, params, gz)?,
        };
        for (t, g) in total.iter_mut().zip(&grads) {
            t.add_assign(g)?;
        }
    }
    Ok((out.value, total))
}

fn with_epoch(epoch: usize, e: Error) -> Error {
    match e {
        Error::Degenerate(m) => Error::Degenerate(format!("epoch {epoch}: {m}")),
        Error::NonFinite(m) => Error::NonFinite(format!("epoch {epoch}: {m}")),
        other => other,
    }
}

fn is_checkpoint(epoch: usize, total: usize, every: usize) -> bool {
    every > 0 && (epoch == 0 || epoch == total || epoch.is_multiple_of(every))
}

fn init_params(d: usize, cfg: &TrainConfig) -> Result<EncoderParams> {
    EncoderParams::init(
        cfg.arch(),
        d,
        cfg.hidden,
        cfg.embedding_dim,
        cfg.resolved_activations(),
        &mut rng::stream(cfg.seed, streams::INIT),
    )
}

/// Shared epoch loop; `views_for_epoch` supplies the encoder inputs.
fn run_loop(
    cfg: &TrainConfig,
    ctx: &LossContext,
    mut params: EncoderParams,
    observer: &mut Observer<'_>,
    mut step: impl FnMut(&LossContext, &EncoderParams, &mut Rng) -> Result<(f64, Vec<DenseMatrix>)>,
) -> Result<(EncoderParams, TrainHistory)> {
    let mut history = TrainHistory::default();
    let mut adam = AdamState::new(params.layers());
    let mut aug_rng = rng::stream(cfg.seed, streams::AUGMENT);
    if is_checkpoint(0, cfg.epochs, cfg.checkpoint_every) {
        let full_loss = observer(0, &params)?;
        history.checkpoints.push(Checkpoint {
            epoch: 0,
            full_loss,
        });
    }
    for epoch in 1..=cfg.epochs {
        let t0 = Instant::now();
        let (loss, grads) = step(ctx, &params, &mut aug_rng).map_err(|e| with_epoch(epoch, e))?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("epoch {epoch}: loss is {loss}")));
        }
        adam_step(
            params.layers_mut(),
            &grads,
            &mut adam,
            cfg.lr,
            cfg.weight_decay,
        )
        .map_err(|e| with_epoch(epoch, e))?;
        history.epochs.push(EpochRecord {
            epoch,
            loss,
            seconds: t0.elapsed().as_secs_f64(),
        });
        if is_checkpoint(epoch, cfg.epochs, cfg.checkpoint_every) {
            let full_loss = observer(epoch, &params)?;
            history.checkpoints.push(Checkpoint { epoch, full_loss });
        }
    }
    Ok((params, history))
}

/// Compressed training with a multilevel partition.
pub fn train(
    g: &SparseGraph,
    x: &DenseMatrix,
    cfg: &TrainConfig,
) -> Result<(EncoderParams, TrainHistory)> {
    let run = train_with(g, x, cfg, None, &mut |_, _| Ok(None))?;
    Ok((run.params, run.history))
}

/// Compressed training. A supplied `partition` replaces the multilevel
/// partitioner; `observer` runs at every checkpoint.
pub fn train_with(
    g: &SparseGraph,
    x: &DenseMatrix,
    cfg: &TrainConfig,
    partition: Option<&Partition>,
    observer: &mut Observer<'_>,
) -> Result<TrainRun> {
    check_inputs(g, x, cfg)?;
    let partition = match partition {
        Some(p) => {
            if p.n() != g.n() {
                return Err(Error::dims(
                    "train",
                    format!("partition covers {} nodes, graph has {}", p.n(), g.n()),
                ));
            }
            p.clone()
        }
        None => {
            let k = cfg.resolve_n_clusters(g.n())?;
            let opts = PartitionOptions {
                balance_eps: cfg.balance_eps,
                seed: cfg.seed,
                ..PartitionOptions::default()
            };
            multilevel_partition(g, k, &opts)?.partition
        }
    };
    let x_c = compress_features(x, &partition, CompressMode::Mean)?.matrix;
    let a_c = compress_graph(g, &partition, CompressGraphOptions::default())?.graph;
    if cfg.model.is_multi_view() && partition.n_clusters() < 2 {
        return Err(Error::invalid(
            "multi-view training needs at least 2 clusters",
        ));
    }
    let ctx = LossContext::new(&a_c, cfg, &mut rng::stream(cfg.seed, streams::NEGATIVES))?;
    let params = init_params(x.cols(), cfg)?;
    let multi = cfg.model.is_multi_view();
    let (params, history) = run_loop(cfg, &ctx, params, observer, |ctx, params, aug| {
        if multi {
            let x_aug = drop_member(x, &partition, cfg.drop_rate, aug)?.matrix;
            let views = [
                View {
                    a_hat: None,
                    x: &x_c,
                },
                View {
                    a_hat: None,
                    x: &x_aug,
                },
            ];
            loss_and_grads(ctx, params, &views, aug, true)
        } else {
            loss_and_grads(
                ctx,
                params,
                &[View {
                    a_hat: None,
                    x: &x_c,
                }],
                aug,
                true,
            )
        }
    })?;
    Ok(TrainRun {
        params,
        history,
        partition,
    })
}

/// Keeps each undirected edge independently with probability `1 − rate`.
pub fn drop_edge(g: &SparseGraph, rate: f64, rng: &mut Rng) -> Result<SparseGraph> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid(format!(
            "edge drop rate {rate} outside [0, 1)"
        )));
    }
    if rate == 0.0 {
        return Ok(g.clone());
    }
    let kept: Vec<(usize, usize, f64)> = g
        .triplets()
        .filter(|&(u, v, _)| u <= v)
        .filter(|_| rng.random::<f64>() >= rate)
        .flat_map(|(u, v, w)| {
            if u == v {
                vec![(u, v, w)]
            } else {
                vec![(u, v, w), (v, u, w)]
            }
        })
        .collect();
    SparseGraph::from_entries(g.n(), kept, false)
}

/// Full-graph baseline: the same losses with GCN propagation inside the
/// loop. Multi-view models contrast the clean graph with a DropEdge view.
pub fn full_graph_train(
    g: &SparseGraph,
    x: &DenseMatrix,
    cfg: &TrainConfig,
) -> Result<(EncoderParams, TrainHistory)> {
    full_graph_train_with(g, x, cfg, &mut |_, _| Ok(None))
}

pub fn full_graph_train_with(
    g: &SparseGraph,
    x: &DenseMatrix,
    cfg: &TrainConfig,
    observer: &mut Observer<'_>,
) -> Result<(EncoderParams, TrainHistory)> {
    check_inputs(g, x, cfg)?;
    let a_hat = g.normalized_adjacency();
    let ctx = LossContext::new(g, cfg, &mut rng::stream(cfg.seed, streams::NEGATIVES))?;
    let params = init_params(x.cols(), cfg)?;
    let multi = cfg.model.is_multi_view();
    run_loop(cfg, &ctx, params, observer, |ctx, params, aug| {
        if multi {
            let a_aug = drop_edge(g, cfg.drop_rate, aug)?.normalized_adjacency();
            let views = [
                View {
                    a_hat: Some(&a_hat),
                    x,
                },
                View {
                    a_hat: Some(&a_aug),
                    x,
                },
            ];
            loss_and_grads(ctx, params, &views, aug, true)
        } else {
            loss_and_grads(
                ctx,
                params,
                &[View {
                    a_hat: Some(&a_hat),
                    x,
                }],
                aug,
                true,
            )
        }
    })
}

/// Full-graph embeddings `σ(Â σ(Â X W₁) W₂)` with trained parameters.
pub fn infer(g: &SparseGraph, x: &DenseMatrix, params: &EncoderParams) -> Result<DenseMatrix> {
    if g.n() != x.rows() {
        return Err(Error::dims(
            "infer",
            format!("graph has {} nodes, features have {} rows", g.n(), x.rows()),
        ));
    }
    gcn_forward(&g.normalized_adjacency(), x, params)
}

/// The original model's loss on the full graph at given parameters. All
/// randomness (negative graph, augmented view, pairs) is drawn once from
/// `seed`, so repeated evaluations are comparable.
pub struct FullLossEvaluator {
    a_hat: SparseGraph,
    a_aug: Option<SparseGraph>,
    ctx: LossContext,
    seed: u64,
}

impl FullLossEvaluator {
    pub fn new(g: &SparseGraph, cfg: &TrainConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let ctx = LossContext::new(g, cfg, &mut rng::stream(seed, streams::NEGATIVES))?;
        let a_aug = if cfg.model.is_multi_view() {
            Some(
                drop_edge(g, cfg.drop_rate, &mut rng::stream(seed, streams::EVAL))?
                    .normalized_adjacency(),
            )
        } else {
            None
        };
        Ok(Self {
            a_hat: g.normalized_adjacency(),
            a_aug,
            ctx,
            seed,
        })
    }

    pub fn eval(&self, x: &DenseMatrix, params: &EncoderParams) -> Result<f64> {
        let mut pair_rng = rng::stream(self.seed, streams::AUGMENT);
        let mut views = vec![View {
            a_hat: Some(&self.a_hat),
            x,
        }];
        if let Some(a) = &self.a_aug {
            views.push(View { a_hat: Some(a), x });
        }
        Ok(loss_and_grads(&self.ctx, params, &views, &mut pair_rng, false)?.0)
    }
}

pub fn eval_full_loss(
    g: &SparseGraph,
    x: &DenseMatrix,
    params: &EncoderParams,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<f64> {
    FullLossEvaluator::new(g, cfg, seed)?.eval(x, params)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rate: f64,
    pub n_clusters: usize,
    pub accuracy: f64,
    pub seed: u64,
}

/// Trains at `n′ = rate·n` for each rate (1.0 uses the identity partition)
/// and reports linear-probe accuracy of the inferred embeddings.
pub fn sweep_compression(
    g: &SparseGraph,
    x: &DenseMatrix,
    labels: &[usize],
    split: &Split,
    cfg: &TrainConfig,
    rates: &[f64],
) -> Result<Vec<SweepRow>> {
    if let Some(&r) = rates.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::invalid(format!("rate {r} outside (0, 1]")));
    }
    let n = g.n();
    rates
        .iter()
        .map(|&rate| {
            let k = if rate == 1.0 {
                n
            } else {
                ((rate * n as f64).round() as usize).clamp(2.min(n), n)
            };
            let run_cfg = TrainConfig {
                n_clusters: Some(k),
                compression_rate: None,
                checkpoint_every: 0,
                ..cfg.clone()
            };
            let identity = (k == n).then(|| Partition::identity(n));
            let run = train_with(g, x, &run_cfg, identity.as_ref(), &mut |_, _| Ok(None))?;
            let z = infer(g, x, &run.params)?;
            let (_, accuracy) = linear_probe(&z, labels, split, &ProbeOptions::default())?;
            Ok(SweepRow {
                rate,
                n_clusters: k,
                accuracy,
                seed: cfg.seed,
            })
        })
        .collect()
}

/// One seed of the side-by-side comparison: both trainers, with the
/// full-graph loss evaluated at every checkpoint of each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRun {
    pub seed: u64,
    pub checkpoint_epochs: Vec<usize>,
    /// Full-graph loss at the compressed trainer's checkpoints.
    pub structcomp_full_loss: Vec<f64>,
    /// Full-graph loss at the full-graph trainer's checkpoints.
    pub full_graph_loss: Vec<f64>,
    /// Per-epoch training loss of each trainer.
    pub structcomp_train_loss: Vec<f64>,
    pub full_graph_train_loss: Vec<f64>,
    /// `(first − last) / |first|` of `structcomp_full_loss`.
    pub relative_decrease: f64,
    /// Rank correlation of the two checkpoint trajectories; `None` when
    /// either is constant.
    pub spearman: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub model: Model,
    pub runs: Vec<CompareRun>,
    pub median_relative_decrease: f64,
    pub median_spearman: Option<f64>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Trains with both trainers for each seed and evaluates the full-graph
/// loss (fixed augmentation and negatives per seed) at every checkpoint.
pub fn compare_full(
    g: &SparseGraph,
    x: &DenseMatrix,
    cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<CompareReport> {
    if seeds.is_empty() {
        return Err(Error::invalid("compare_full needs at least one seed"));
    }
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let cfg = TrainConfig {
            seed,
            checkpoint_every: cfg.checkpoint_every.max(1),
            ..cfg.clone()
        };
        let evaluator = FullLossEvaluator::new(g, &cfg, seed)?;
        let mut eval = |_: usize, p: &EncoderParams| evaluator.eval(x, p).map(Some);
        let sc = train_with(g, x, &cfg, None, &mut eval)?;
        let (_, full) = full_graph_train_with(g, x, &cfg, &mut eval)?;
        let unwrap = |h: &TrainHistory| {
            h.checkpoints
                .iter()
                .map(|c| c.full_loss.unwrap_or(f64::NAN))
                .collect()
        };
        let structcomp_full_loss: Vec<f64> = unwrap(&sc.history);
        let full_graph_loss: Vec<f64> = unwrap(&full);
        let first = structcomp_full_loss[0];
        let last = *structcomp_full_loss.last().unwrap();
        runs.push(CompareRun {
            seed,
            checkpoint_epochs: sc.history.checkpoints.iter().map(|c| c.epoch).collect(),
            relative_decrease: (first - last) / first.abs(),
            spearman: spearman(&structcomp_full_loss, &full_graph_loss).ok(),
            structcomp_full_loss,
            full_graph_loss,
            structcomp_train_loss: sc.history.losses(),
            full_graph_train_loss: full.losses(),
        });
    }
    let decreases: Vec<f64> = runs.iter().map(|r| r.relative_decrease).collect();
    let rhos: Vec<f64> = runs.iter().filter_map(|r| r.spearman).collect();
    Ok(CompareReport {
        model: cfg.model,
        median_relative_decrease: median(&decreases).unwrap(),
        median_spearman: if rhos.len() == runs.len() {
            median(&rhos)
        } else {
            None
        },
        runs,
    })
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid(format!(
            "spearman needs two equal-length series of at least 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let ranks = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    };
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return Err(Error::Degenerate("spearman of a constant series".into()));
    }
    Ok(cov / (va * vb).sqrt())
}

/// Edge-list helper for callers that build graphs from pairs.
pub fn graph_from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<SparseGraph> {
    SparseGraph::from_edges(n, pairs, DedupPolicy::default())
}
