//! Numerical checks of the approximation bounds and identities behind
//! training on compressed nodes.
//!
//! * [`check_partition_bound`]: positive-pair distance loss on the raw graph
//!   versus on cluster sums, against `‖A − P†P†ᵀ‖_F · S_X · ‖W‖₂`.
//! * [`check_augmentation_regularizer`]: Monte Carlo expectation of a perturbed scalar
//!   InfoNCE-style loss versus its second-order expansion.
//! * [`check_relu_commutation`]: ReLU MLP on cluster means, lifted, equals the
//!   two-layer network propagated with `P†Pᵀ`.
//! * [`check_spectral_equality`] / [`check_lipschitz_bound`]: the
//!   spectral contrastive loss under even partitions, and the Lipschitz
//!   bound for a general loss.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::compress::{compress_features, lift, CompressMode};
use crate::encoder::{mlp_forward, Activation, EncoderParams};
use crate::error::{Error, Result};
use crate::graph::{spectral_norm, spmm, DedupPolicy, SparseGraph};
use crate::losses::{positive_pair_distance_loss, spectral_contrastive_loss};
use crate::matrix::DenseMatrix;
use crate::partition::{even_partition_for_tests, partition_remainder_norm, Partition};
use crate::rng::{self, Rng};

/// Slack allowed when deciding whether a bound holds.
pub const BOUND_TOLERANCE: f64 = 1e-9;

const NORM_TOL: f64 = 1e-13;
const MAX_REDRAWS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub n: usize,
    /// Edge probability of the random graph, when one was drawn.
    pub p: Option<f64>,
    pub n_clusters: usize,
    pub seed: Option<u64>,
}

impl BoundReport {
    fn new(lhs: f64, rhs: f64, n: usize, n_clusters: usize) -> Self {
        Self {
            lhs,
            rhs,
            slack: rhs - lhs,
            holds: lhs <= rhs + BOUND_TOLERANCE,
            n,
            p: None,
            n_clusters,
            seed: None,
        }
    }
}

fn uniform_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0))
}

fn erdos_renyi(n: usize, p: f64, rng: &mut Rng) -> Result<SparseGraph> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    SparseGraph::from_edges(n, &edges, DedupPolicy::default())
}

/// Random assignment of `n` nodes to `k` nonempty clusters.
pub fn random_partition(n: usize, k: usize, rng: &mut Rng) -> Result<Partition> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "cannot split {n} nodes into {k} nonempty clusters"
        )));
    }
    let mut assign: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { rng.random_range(0..k) })
        .collect();
    assign.shuffle(rng);
    Partition::new(assign, k)
}

/// Both sides of the first bound for a given graph, even partition,
/// features and weights. Edges are the graph's undirected edges; positive
/// cluster pairs are cluster pairs joined by at least one edge.
pub fn partition_bound(
    g: &SparseGraph,
    p: &Partition,
    x: &DenseMatrix,
    w: &DenseMatrix,
) -> Result<BoundReport> {
    if g.n() != p.n() || g.n() != x.rows() || x.cols() != w.rows() {
        return Err(Error::dims(
            "partition_bound",
            format!(
                "graph {} nodes, partition {}, features {:?}, weights {:?}",
                g.n(),
                p.n(),
                x.shape(),
                w.shape()
            ),
        ));
    }
    if !p.is_even() {
        return Err(Error::invalid("the bound requires an even partition"));
    }
    let node_emb = spmm(g, x)?.matmul(w)?;
    let node_pairs: Vec<(usize, usize)> = g
        .edges()
        .filter(|&(u, v, _)| u != v)
        .map(|(u, v, _)| (u, v))
        .collect();
    let graph_loss = positive_pair_distance_loss(&node_emb, &node_pairs)?;

    let cluster_emb = compress_features(x, p, CompressMode::Sum)?
        .matrix
        .matmul(w)?;
    let mut cluster_pairs: Vec<(usize, usize)> = node_pairs
        .iter()
        .map(|&(u, v)| (p.cluster_of(u), p.cluster_of(v)))
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    cluster_pairs.sort_unstable();
    cluster_pairs.dedup();
    let compressed_loss = positive_pair_distance_loss(&cluster_emb, &cluster_pairs)?;

    let eta = partition_remainder_norm(g, p, 1)?;
    let s_x = x.max_row_norm();
    let w_norm = if w.as_slice().iter().all(|&v| v == 0.0) {
        0.0
    } else {
        spectral_norm(w, NORM_TOL)?
    };
    Ok(BoundReport::new(
        (graph_loss - compressed_loss).abs(),
        eta * s_x * w_norm,
        g.n(),
        p.n_clusters(),
    ))
}

/// One trial of the first bound: `G(n, p)`, a shuffled even partition,
/// features and weights uniform on `[−1, 1]`.
pub fn check_partition_bound(
    n: usize,
    p: f64,
    n_clusters: usize,
    d: usize,
    d_out: usize,
    seed: u64,
) -> Result<BoundReport> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!(
            "edge probability {p} outside (0, 1]"
        )));
    }
    if n_clusters == 0 || !n.is_multiple_of(n_clusters) {
        return Err(Error::invalid(format!(
            "{n_clusters} clusters do not evenly divide {n} nodes"
        )));
    }
    let mut r = rng::seeded(seed);
    let mut g = erdos_renyi(n, p, &mut r)?;
    let mut redraws = 0;
    while g.num_edges() == 0 {
        if redraws == MAX_REDRAWS {
            return Err(Error::Degenerate(format!(
                "G({n}, {p}) drew no edges in {} attempts",
                MAX_REDRAWS + 1
            )));
        }
        g = erdos_renyi(n, p, &mut r)?;
        redraws += 1;
    }
    let part = even_partition_for_tests(n, n_clusters, Some(r.random()))?;
    let x = uniform_matrix(n, d, &mut r);
    let w = uniform_matrix(d, d_out, &mut r);
    let mut report = partition_bound(&g, &part, &x, &w)?;
    report.p = Some(p);
    report.seed = Some(seed);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizerReport {
    pub sigma: f64,
    pub mc_samples: usize,
    pub seed: u64,
    /// Unperturbed loss.
    pub base_loss: f64,
    pub mc_estimate: f64,
    pub mc_std_error: f64,
    /// Base loss plus the regularizer with the weighting function as printed.
    pub analytic_value: f64,
    pub difference: f64,
    pub error_scale: f64,
    /// Base loss plus the exact second-order term, `½ f''(h_i) σ²` per
    /// negative pair.
    pub corrected_analytic: f64,
    pub corrected_difference: f64,
}

/// Weighting function of the regularizer, as printed:
/// `[(aᵢ hᵢ² + bᵢ hⱼ²)(aᵢ + bᵢ) − (aᵢ hᵢ + bᵢ hⱼ)²] / (2 (aᵢ + bᵢ)²)` with
/// `aᵢ = e^{hᵢ²}`, `bᵢ = e^{hᵢhⱼ}`. It equals half the variance of the
/// two-point distribution on `{hᵢ, hⱼ}` weighted by softmax(hᵢ², hᵢhⱼ).
pub fn regularizer_weight(hi: f64, hj: f64) -> f64 {
    // divide through by the larger exponent to avoid overflow
    let m = (hi * hi).max(hi * hj);
    let a = (hi * hi - m).exp();
    let b = (hi * hj - m).exp();
    ((a * hi * hi + b * hj * hj) * (a + b) - (a * hi + b * hj).powi(2)) / (2.0 * (a + b).powi(2))
}

fn log_sum_exp2(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    m + ((x - m).exp() + (y - m).exp()).ln()
}

/// `Σ_pos hᵢhⱼ + Σ_neg log(e^{hᵢhᵢ} + e^{hᵢhⱼ})`, with the anchor factor
/// taken from `anchor` (the perturbed values) and the rest from `h`.
fn scalar_loss(anchor: &[f64], h: &[f64], pos: &[(usize, usize)], neg: &[(usize, usize)]) -> f64 {
    let p: f64 = pos.iter().map(|&(i, j)| anchor[i] * h[j]).sum();
    let q: f64 = neg
        .iter()
        .map(|&(i, j)| log_sum_exp2(anchor[i] * h[i], anchor[i] * h[j]))
        .sum();
    p + q
}

fn check_pairs(n: usize, pairs: &[(usize, usize)], what: &str) -> Result<()> {
    match pairs.iter().find(|&&(i, j)| i >= n || j >= n) {
        Some(&(i, j)) => Err(Error::invalid(format!(
            "{what} pair ({i}, {j}) out of range for {n} nodes"
        ))),
        None => Ok(()),
    }
}

/// Monte Carlo versus second-order expansion of the expected loss when each
/// anchor `hᵢ` is replaced by `hᵢ + 𝒩(0, σ²)` (one draw per node per
/// sample, shared by all of its pairs). Samples are drawn in antithetic
/// pairs `±ε`.
pub fn check_augmentation_regularizer(
    h: &[f64],
    pos: &[(usize, usize)],
    neg: &[(usize, usize)],
    sigma: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<RegularizerReport> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "noise std {sigma} must be finite and >= 0"
        )));
    }
    if mc_samples == 0 {
        return Err(Error::invalid("mc_samples must be at least 1"));
    }
    if let Some(v) = h.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("embedding value {v}")));
    }
    check_pairs(h.len(), pos, "positive")?;
    check_pairs(h.len(), neg, "negative")?;

    let base = scalar_loss(h, h, pos, neg);
    let var = sigma * sigma;
    let weight_sum: f64 = neg
        .iter()
        .map(|&(i, j)| regularizer_weight(h[i], h[j]))
        .sum();
    let analytic = base + 0.5 * weight_sum * var;
    // f(t) = log(e^{t hᵢ} + e^{t hⱼ}) has f'' = 2·weight, so ½ f'' σ² = weight·σ²
    let corrected = base + weight_sum * var;

    let mut r = rng::seeded(seed);
    let mut eps = vec![0.0; h.len()];
    let mut anchor = vec![0.0; h.len()];
    let (mut mean, mut m2, mut count) = (0.0f64, 0.0f64, 0usize);
    let push = |v: f64, mean: &mut f64, m2: &mut f64, count: &mut usize| {
        *count += 1;
        let d = v - *mean;
        *mean += d / *count as f64;
        *m2 += d * (v - *mean);
    };
    while count < mc_samples {
        for e in eps.iter_mut() {
            *e = r.sample::<f64, _>(StandardNormal);
        }
        for sign in [1.0, -1.0] {
            if count == mc_samples {
                break;
            }
            for ((a, &hi), &e) in anchor.iter_mut().zip(h).zip(&eps) {
                *a = hi + sign * sigma * e;
            }
            let delta = scalar_loss(&anchor, h, pos, neg) - base;
            push(delta, &mut mean, &mut m2, &mut count);
        }
    }
    let mc = base + mean;
    let std_error = if count > 1 {
        (m2 / (count - 1) as f64 / count as f64).sqrt()
    } else {
        0.0
    };
    Ok(RegularizerReport {
        sigma,
        mc_samples,
        seed,
        base_loss: base,
        mc_estimate: mc,
        mc_std_error: std_error,
        analytic_value: analytic,
        difference: (mc - analytic).abs(),
        error_scale: sigma.powi(3),
        corrected_analytic: corrected,
        corrected_difference: (mc - corrected).abs(),
    })
}

/// Fixed scalar instance for the expansion check: eight values in
/// `[−1, 1]`, positives `(i, i+1)`, negatives `(i, i+3)` and `(i, i+5)`
/// (indices mod 8).
pub fn standard_scalar_instance() -> (Vec<f64>, Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let h = vec![0.9, -0.6, 0.3, -0.1, 0.7, -0.8, 0.5, -0.2];
    let n = h.len();
    let pos = (0..n).map(|i| (i, (i + 1) % n)).collect();
    let neg = (0..n)
        .flat_map(|i| [(i, (i + 3) % n), (i, (i + 5) % n)])
        .collect();
    (h, pos, neg)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid(
            "slope needs two equal-length series of at least 2 points",
        ));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::Degenerate(
            "log-log slope needs strictly positive values".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

fn relu_mlp(w1: DenseMatrix, w2: DenseMatrix) -> Result<EncoderParams> {
    EncoderParams::mlp2(w1, w2, [Activation::Relu, Activation::Relu])
}

/// `σ(P†Pᵀ σ(P†Pᵀ X W₁) W₂)` evaluated densely, and `P† σ(σ(PᵀX W₁) W₂)`.
pub fn relu_commutation_sides(
    x: &DenseMatrix,
    p: &Partition,
    w1: &DenseMatrix,
    w2: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let params = relu_mlp(w1.clone(), w2.clone())?;
    let x_c = compress_features(x, p, CompressMode::Mean)?.matrix;
    let rhs = lift(&mlp_forward(&x_c, &params)?.0, p)?;

    let mix = p.binary_matrix().matmul_t(&p.normalized_matrix())?;
    let relu = |m: DenseMatrix| m.map(|v| v.max(0.0));
    let h1 = relu(mix.matmul(x)?.matmul(w1)?);
    let lhs = relu(mix.matmul(&h1)?.matmul(w2)?);
    Ok((lhs, rhs))
}

/// Max elementwise deviation between the two sides of [`relu_commutation_sides`].
pub fn relu_commutation_deviation(
    x: &DenseMatrix,
    p: &Partition,
    w1: &DenseMatrix,
    w2: &DenseMatrix,
) -> Result<f64> {
    let (lhs, rhs) = relu_commutation_sides(x, p, w1, w2)?;
    Ok(lhs.max_abs_diff(&rhs))
}

/// Random instance: uniform features and weights, random nonempty partition.
pub fn check_relu_commutation(
    n: usize,
    n_clusters: usize,
    d: usize,
    h: usize,
    d_out: usize,
    seed: u64,
) -> Result<f64> {
    if d == 0 || h == 0 || d_out == 0 {
        return Err(Error::invalid("dimensions must be positive"));
    }
    let mut r = rng::seeded(seed);
    let p = random_partition(n, n_clusters, &mut r)?;
    let x = uniform_matrix(n, d, &mut r);
    let w1 = uniform_matrix(d, h, &mut r);
    let w2 = uniform_matrix(h, d_out, &mut r);
    relu_commutation_deviation(&x, &p, &w1, &w2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPair {
    /// Loss on the `n′` compressed embeddings, normalizers `n′`.
    pub compressed: f64,
    /// Loss on the `n` lifted embeddings, normalizers `n`.
    pub lifted: f64,
}

impl SpectralPair {
    pub fn deviation(&self) -> f64 {
        (self.compressed - self.lifted).abs()
    }
}

/// Spectral contrastive loss of two views `PᵀXW₁`, `PᵀXW₂` against the same
/// views lifted to nodes. Any partition is accepted; the two agree for
/// even partitions.
pub fn spectral_pair(
    x: &DenseMatrix,
    p: &Partition,
    w1: &DenseMatrix,
    w2: &DenseMatrix,
) -> Result<SpectralPair> {
    let x_c = compress_features(x, p, CompressMode::Mean)?.matrix;
    let (e1, e2) = (x_c.matmul(w1)?, x_c.matmul(w2)?);
    let compressed = spectral_contrastive_loss(&e1, &e2)?;
    let lifted = spectral_contrastive_loss(&lift(&e1, p)?, &lift(&e2, p)?)?;
    Ok(SpectralPair { compressed, lifted })
}

/// Random even-partition instance of [`spectral_pair`].
pub fn check_spectral_equality(
    n: usize,
    n_clusters: usize,
    d: usize,
    seed: u64,
) -> Result<SpectralPair> {
    let mut r = rng::seeded(seed);
    let p = even_partition_for_tests(n, n_clusters, Some(r.random()))?;
    let x = uniform_matrix(n, d, &mut r);
    let w1 = uniform_matrix(d, d, &mut r);
    let w2 = uniform_matrix(d, d, &mut r);
    spectral_pair(&x, &p, &w1, &w2)
}

/// Uneven counterpart of [`check_spectral_equality`]: cluster 0 takes
/// half of the nodes, the rest are spread over the other clusters.
pub fn uneven_spectral_control(
    n: usize,
    n_clusters: usize,
    d: usize,
    seed: u64,
) -> Result<SpectralPair> {
    if n_clusters < 2 || n < 2 * n_clusters {
        return Err(Error::invalid(format!(
            "need n >= 2·n_clusters >= 4, got n = {n}, n_clusters = {n_clusters}"
        )));
    }
    let mut r = rng::seeded(seed);
    let half = n / 2;
    let mut assign: Vec<usize> = (0..n)
        .map(|i| {
            if i < half {
                0
            } else {
                1 + (i - half) % (n_clusters - 1)
            }
        })
        .collect();
    assign.shuffle(&mut r);
    let p = Partition::new(assign, n_clusters)?;
    let x = uniform_matrix(n, d, &mut r);
    let w1 = uniform_matrix(d, d, &mut r);
    let w2 = uniform_matrix(d, d, &mut r);
    spectral_pair(&x, &p, &w1, &w2)
}

fn operator_norm(m: &DenseMatrix) -> Result<f64> {
    if m.as_slice().iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    spectral_norm(m, NORM_TOL)
}

/// `|𝓛(P†PᵀXW) − 𝓛(Â^k XW)| ≤ L · ‖P†Pᵀ − Â^k‖₂ · ‖X‖₂ · ‖W‖₂` for a loss
/// that is `L`-Lipschitz in the spectral norm of its argument.
pub fn check_lipschitz_bound(
    g: &SparseGraph,
    p: &Partition,
    x: &DenseMatrix,
    w: &DenseMatrix,
    k: u32,
    loss: &dyn Fn(&DenseMatrix) -> Result<f64>,
    lipschitz: f64,
) -> Result<BoundReport> {
    if k > 3 {
        return Err(Error::invalid(format!(
            "power {k} > 3 densifies the operator"
        )));
    }
    if !(lipschitz >= 0.0) {
        return Err(Error::invalid(format!(
            "Lipschitz constant {lipschitz} must be >= 0"
        )));
    }
    if g.n() != p.n() || g.n() != x.rows() || x.cols() != w.rows() {
        return Err(Error::dims(
            "check_lipschitz_bound",
            format!(
                "graph {} nodes, partition {}, features {:?}, weights {:?}",
                g.n(),
                p.n(),
                x.shape(),
                w.shape()
            ),
        ));
    }
    let xw = x.matmul(w)?;
    let mix = p.binary_matrix().matmul_t(&p.normalized_matrix())?;
    let propagated = g.normalized_adjacency().power(k)?.to_dense();
    let lhs = (loss(&mix.matmul(&xw)?)? - loss(&propagated.matmul(&xw)?)?).abs();
    let rhs =
        lipschitz * operator_norm(&mix.sub(&propagated)?)? * operator_norm(x)? * operator_norm(w)?;
    Ok(BoundReport::new(lhs, rhs, g.n(), p.n_clusters()))
}

/// Lipschitz constant of [`positive_pair_distance_loss`] with respect to the
/// spectral norm: each pair term moves by at most `‖Δ_u‖ + ‖Δ_v‖ ≤ 2‖Δ‖₂`.
pub const PAIR_DISTANCE_LIPSCHITZ: f64 = 2.0;

/// Random instance for the Lipschitz bound: `G(n, p)`, a random nonempty
/// partition, uniform features and weights, and the pair-distance loss over
/// the graph's edges.
pub fn lipschitz_trial(
    n: usize,
    p: f64,
    n_clusters: usize,
    d: usize,
    d_out: usize,
    k: u32,
    seed: u64,
) -> Result<BoundReport> {
    let mut r = rng::seeded(seed);
    let g = erdos_renyi(n, p, &mut r)?;
    let part = random_partition(n, n_clusters, &mut r)?;
    let x = uniform_matrix(n, d, &mut r);
    let w = uniform_matrix(d, d_out, &mut r);
    let pairs: Vec<(usize, usize)> = g.edges().map(|(u, v, _)| (u, v)).collect();
    let loss = |f: &DenseMatrix| positive_pair_distance_loss(f, &pairs);
    let mut report = check_lipschitz_bound(&g, &part, &x, &w, k, &loss, PAIR_DISTANCE_LIPSCHITZ)?;
    report.p = Some(p);
    report.seed = Some(seed);
    Ok(report)
}

/// Node counts and edge probabilities of the first bound's trial grid;
/// clusters are `n / 10`.
pub const BOUND_SIZES: [usize; 3] = [100, 200, 400];
pub const BOUND_PROBS: [f64; 3] = [0.02, 0.05, 0.1];
pub const REGULARIZER_SIGMAS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// `trials` seeds (`seed, seed + 1, …`) at every grid point.
pub fn partition_bound_grid(
    trials: usize,
    seed: u64,
    d: usize,
    d_out: usize,
) -> Result<Vec<BoundReport>> {
    let mut out = Vec::with_capacity(trials * 9);
    for &n in &BOUND_SIZES {
        for &p in &BOUND_PROBS {
            for t in 0..trials as u64 {
                out.push(check_partition_bound(n, p, n / 10, d, d_out, seed + t)?);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizerSweep {
    pub reports: Vec<RegularizerReport>,
    /// Log-log slope of `difference` against σ.
    pub slope: Option<f64>,
    /// Same for `corrected_difference`.
    pub corrected_slope: Option<f64>,
}

/// The expansion check on [`standard_scalar_instance`] at each σ.
pub fn regularizer_sweep(sigmas: &[f64], mc_samples: usize, seed: u64) -> Result<RegularizerSweep> {
    let (h, pos, neg) = standard_scalar_instance();
    let reports = sigmas
        .iter()
        .map(|&s| check_augmentation_regularizer(&h, &pos, &neg, s, mc_samples, seed))
        .collect::<Result<Vec<_>>>()?;
    let slope_of = |f: fn(&RegularizerReport) -> f64| {
        let y: Vec<f64> = reports.iter().map(f).collect();
        log_log_slope(sigmas, &y).ok()
    };
    Ok(RegularizerSweep {
        slope: slope_of(|r| r.difference),
        corrected_slope: slope_of(|r| r.corrected_difference),
        reports,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityTrial {
    pub n: usize,
    pub n_clusters: usize,
    pub seed: u64,
    pub deviation: f64,
}

/// Random shapes with `n ≤ 60`: `n` in `[2, 60]`, clusters in `[1, n]`.
pub fn relu_commutation_trials(trials: usize, seed: u64) -> Result<Vec<IdentityTrial>> {
    (0..trials as u64)
        .map(|t| {
            let s = seed + t;
            let mut r = rng::seeded(s);
            let n = r.random_range(2..=60);
            let k = r.random_range(1..=n);
            let deviation = check_relu_commutation(n, k, 6, 8, 4, s)?;
            Ok(IdentityTrial {
                n,
                n_clusters: k,
                seed: s,
                deviation,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralTrial {
    pub seed: u64,
    pub even: SpectralPair,
    pub uneven: SpectralPair,
}

/// `n = 40`, eight clusters, feature dim 5; the uneven control uses the
/// same sizes.
pub fn spectral_equality_trials(trials: usize, seed: u64) -> Result<Vec<SpectralTrial>> {
    (0..trials as u64)
        .map(|t| {
            let s = seed + t;
            Ok(SpectralTrial {
                seed: s,
                even: check_spectral_equality(40, 8, 5, s)?,
                uneven: uneven_spectral_control(40, 8, 5, s)?,
            })
        })
        .collect()
}

/// `G(24, 0.15)`, four random clusters, propagation powers cycling 1..=3.
pub fn lipschitz_trials(trials: usize, seed: u64) -> Result<Vec<BoundReport>> {
    (0..trials as u64)
        .map(|t| lipschitz_trial(24, 0.15, 4, 3, 2, 1 + (t % 3) as u32, seed + t))
        .collect()
}
