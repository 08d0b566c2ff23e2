//! Contrastive objectives with gradients with respect to the embeddings.
//!
//! Products with Laplacians here iterate the sparse entries directly rather
//! than going through [`crate::graph::spmm`], which is reserved for message
//! passing over the node graph.

use rand::seq::IndexedRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::{DedupPolicy, SparseGraph};
use crate::matrix::{dot, norm, DenseMatrix};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct LossValueGrad {
    pub value: f64,
    /// One gradient per embedding input, in argument order.
    pub grads: Vec<DenseMatrix>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NegativeSampleSpec {
    /// Random cyclic permutations whose union forms the negative graph.
    pub num_permutations: usize,
    /// Negatives drawn per anchor for the pairwise logistic loss.
    pub negatives_per_anchor: usize,
}

impl Default for NegativeSampleSpec {
    fn default() -> Self {
        Self {
            num_permutations: 1,
            negatives_per_anchor: 1,
        }
    }
}

impl NegativeSampleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_permutations == 0 || self.negatives_per_anchor == 0 {
            return Err(Error::invalid(format!(
                "num_permutations and negatives_per_anchor must be at least 1, got {} and {}",
                self.num_permutations, self.negatives_per_anchor
            )));
        }
        Ok(())
    }
}

/// Union of `num_permutations` random cyclic permutations `i → π(i)`,
/// symmetrized. A single n-cycle has no fixed points, so no self-pairs.
pub fn negative_graph(
    n_nodes: usize,
    spec: &NegativeSampleSpec,
    rng: &mut Rng,
) -> Result<SparseGraph> {
    spec.validate()?;
    if n_nodes < 2 {
        return Err(Error::invalid(format!(
            "negative graph needs at least 2 nodes, got {n_nodes}"
        )));
    }
    let mut edges = Vec::with_capacity(n_nodes * spec.num_permutations);
    for _ in 0..spec.num_permutations {
        // Sattolo's algorithm
        let mut perm: Vec<usize> = (0..n_nodes).collect();
        for i in (1..n_nodes).rev() {
            let j = rng.random_range(0..i);
            perm.swap(i, j);
        }
        edges.extend(perm.iter().enumerate().map(|(i, &p)| (i, p)));
    }
    SparseGraph::from_edges(n_nodes, &edges, DedupPolicy::default())
}

/// Sparse `M·Z`.
pub fn sparse_apply(m: &SparseGraph, z: &DenseMatrix) -> Result<DenseMatrix> {
    if m.n() != z.rows() {
        return Err(Error::dims(
            "sparse_apply",
            format!(
                "operator is {}x{}, embeddings have {} rows",
                m.n(),
                m.n(),
                z.rows()
            ),
        ));
    }
    let mut out = DenseMatrix::zeros(z.rows(), z.cols());
    for i in 0..m.n() {
        let o = out.row_mut(i);
        for (j, w) in m.row(i) {
            for (a, &b) in o.iter_mut().zip(z.row(j)) {
                *a += w * b;
            }
        }
    }
    Ok(out)
}

/// `Tr(Zᵀ M Z)` for a sparse symmetric `M`.
pub fn trace_form(m: &SparseGraph, z: &DenseMatrix) -> Result<f64> {
    if m.n() != z.rows() {
        return Err(Error::dims(
            "trace_form",
            format!(
                "operator is {}x{}, embeddings have {} rows",
                m.n(),
                m.n(),
                z.rows()
            ),
        ));
    }
    Ok((0..m.n())
        .map(|i| {
            m.row(i)
                .map(|(j, w)| w * dot(z.row(i), z.row(j)))
                .sum::<f64>()
        })
        .sum())
}

/// `α / Tr(Zᵀ L⁻ Z)`.
pub fn sce_loss(z: &DenseMatrix, l_neg: &SparseGraph, alpha: f64) -> Result<LossValueGrad> {
    let t = trace_form(l_neg, z)?;
    if !(t > 0.0) {
        return Err(Error::Degenerate(format!(
            "negative-graph trace is {t}; embeddings have collapsed"
        )));
    }
    let grad = sparse_apply(l_neg, z)?.scale(-2.0 * alpha / (t * t));
    Ok(LossValueGrad {
        value: alpha / t,
        grads: vec![grad],
    })
}

/// `Tr(Zᵀ L⁻ Z) − Tr(Zᵀ L Z)`.
pub fn coles_loss(z: &DenseMatrix, l: &SparseGraph, l_neg: &SparseGraph) -> Result<LossValueGrad> {
    let value = trace_form(l_neg, z)? - trace_form(l, z)?;
    let grad = sparse_apply(l_neg, z)?
        .sub(&sparse_apply(l, z)?)?
        .scale(2.0);
    Ok(LossValueGrad {
        value,
        grads: vec![grad],
    })
}

fn check_same_shape(op: &'static str, a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dims(
            op,
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    Ok(())
}

fn row_normalize(z: &DenseMatrix, view: usize) -> Result<(DenseMatrix, Vec<f64>)> {
    let mut out = z.clone();
    let mut norms = Vec::with_capacity(z.rows());
    for i in 0..z.rows() {
        let n = norm(z.row(i));
        if n == 0.0 {
            return Err(Error::Degenerate(format!(
                "row {i} of view {view} has zero norm; cosine similarity is undefined"
            )));
        }
        out.row_mut(i).iter_mut().for_each(|v| *v /= n);
        norms.push(n);
    }
    Ok((out, norms))
}

/// Backward of `u = z / ‖z‖` row by row.
fn row_normalize_backward(u: &DenseMatrix, norms: &[f64], du: &DenseMatrix) -> DenseMatrix {
    let mut dz = du.clone();
    for i in 0..u.rows() {
        let proj = dot(u.row(i), du.row(i));
        let n = norms[i];
        for (g, &ui) in dz.row_mut(i).iter_mut().zip(u.row(i)) {
            *g = (*g - ui * proj) / n;
        }
    }
    dz
}

/// Softmax weights over one anchor's logits with the own-view self term
/// excluded. Returns `(log-denominator, cross weights, intra weights)`.
fn anchor_softmax(cross: &[f64], intra: &[f64], anchor: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let mut m = f64::NEG_INFINITY;
    for (j, (&c, &s)) in cross.iter().zip(intra).enumerate() {
        m = m.max(c);
        if j != anchor {
            m = m.max(s);
        }
    }
    let pc: Vec<f64> = cross.iter().map(|&c| (c - m).exp()).collect();
    let pi: Vec<f64> = intra
        .iter()
        .enumerate()
        .map(|(j, &s)| if j == anchor { 0.0 } else { (s - m).exp() })
        .collect();
    let denom: f64 = pc.iter().sum::<f64>() + pi.iter().sum::<f64>();
    let log_denom = m + denom.ln();
    (
        log_denom,
        pc.into_iter().map(|v| v / denom).collect(),
        pi.into_iter().map(|v| v / denom).collect(),
    )
}

/// Symmetric InfoNCE with cosine similarity and temperature `tau`, averaged
/// over both anchor directions. Row `i` of `z1` and `z2` is the positive pair.
pub fn infonce_loss(z1: &DenseMatrix, z2: &DenseMatrix, tau: f64) -> Result<LossValueGrad> {
    check_same_shape("infonce_loss", z1, z2)?;
    if !(tau > 0.0) {
        return Err(Error::invalid(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    let n = z1.rows();
    if n == 0 {
        return Err(Error::invalid("infonce_loss needs at least one row"));
    }
    let (u, nu) = row_normalize(z1, 1)?;
    let (v, nv) = row_normalize(z2, 2)?;
    let inv_tau = 1.0 / tau;
    let s12 = u.matmul_t(&v)?.scale(inv_tau);
    let s11 = u.matmul_t(&u)?.scale(inv_tau);
    let s22 = v.matmul_t(&v)?.scale(inv_tau);
    let s21 = s12.transpose();

    let mut g12 = DenseMatrix::zeros(n, n);
    let mut g11 = DenseMatrix::zeros(n, n);
    let mut g22 = DenseMatrix::zeros(n, n);
    let mut total = 0.0;
    for i in 0..n {
        let (ld, pc, pi) = anchor_softmax(s12.row(i), s11.row(i), i);
        total += ld - s12.get(i, i);
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            g12.set(i, j, g12.get(i, j) + pc[j] - delta);
            g11.set(i, j, g11.get(i, j) + pi[j]);
        }
        let (ld, pc, pi) = anchor_softmax(s21.row(i), s22.row(i), i);
        total += ld - s12.get(i, i);
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            // anchor i of view 2 against j of view 1 is S12[j][i]
            g12.set(j, i, g12.get(j, i) + pc[j] - delta);
            g22.set(i, j, g22.get(i, j) + pi[j]);
        }
    }
    let scale = 1.0 / (2.0 * n as f64);
    let value = total * scale;
    let coef = scale * inv_tau;
    let g11s = g11.add(&g11.transpose())?;
    let g22s = g22.add(&g22.transpose())?;
    let du = g12.matmul(&v)?.add(&g11s.matmul(&u)?)?.scale(coef);
    let dv = g12.t_matmul(&u)?.add(&g22s.matmul(&v)?)?.scale(coef);
    Ok(LossValueGrad {
        value,
        grads: vec![
            row_normalize_backward(&u, &nu, &du),
            row_normalize_backward(&v, &nv, &dv),
        ],
    })
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_pairs(op: &'static str, pairs: &[(usize, usize)], n: usize) -> Result<()> {
    if let Some((k, &(a, b))) = pairs
        .iter()
        .enumerate()
        .find(|(_, &(a, b))| a >= n || b >= n)
    {
        return Err(Error::invalid(format!(
            "{op}: pair {k} = ({a}, {b}) indexes past {n} rows"
        )));
    }
    Ok(())
}

/// Pairwise logistic loss: `−log σ(z_uᵀz_v)` per positive pair and
/// `−log σ(−z_uᵀz_k)` per negative pair, summed and divided by the number
/// of positive pairs (one per anchor).
pub fn sage_single_view_loss(
    z: &DenseMatrix,
    pos_pairs: &[(usize, usize)],
    neg_pairs: &[(usize, usize)],
) -> Result<LossValueGrad> {
    if pos_pairs.is_empty() || neg_pairs.is_empty() {
        return Err(Error::invalid(
            "sage_single_view_loss needs positive and negative pairs",
        ));
    }
    check_pairs("sage_single_view_loss", pos_pairs, z.rows())?;
    check_pairs("sage_single_view_loss", neg_pairs, z.rows())?;
    let scale = 1.0 / pos_pairs.len() as f64;
    let mut grad = DenseMatrix::zeros(z.rows(), z.cols());
    let mut value = 0.0;
    let mut accumulate = |pairs: &[(usize, usize)], sign: f64, grad: &mut DenseMatrix| {
        for &(a, b) in pairs {
            let s = dot(z.row(a), z.row(b));
            value += softplus(-sign * s);
            // d/ds softplus(−sign·s) = −sign·σ(−sign·s)
            let c = -sign * sigmoid(-sign * s) * scale;
            let (za, zb) = (z.row(a).to_vec(), z.row(b).to_vec());
            for (g, v) in grad.row_mut(a).iter_mut().zip(&zb) {
                *g += c * v;
            }
            for (g, v) in grad.row_mut(b).iter_mut().zip(&za) {
                *g += c * v;
            }
        }
    };
    accumulate(pos_pairs, 1.0, &mut grad);
    accumulate(neg_pairs, -1.0, &mut grad);
    Ok(LossValueGrad {
        value: value * scale,
        grads: vec![grad],
    })
}

/// One positive (a random neighbour) and `negatives` random non-neighbours
/// per anchor with at least one neighbour. Diagonal entries are ignored.
pub fn sample_pairs(
    g: &SparseGraph,
    negatives: usize,
    rng: &mut Rng,
) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let n = g.n();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for u in 0..n {
        let nbrs: Vec<usize> = g.neighbors(u).iter().copied().filter(|&v| v != u).collect();
        let Some(&v) = nbrs.choose(rng) else { continue };
        pos.push((u, v));
        if nbrs.len() + 1 >= n {
            // every other node is a neighbour; fall back to any other node
            for _ in 0..negatives {
                let k = (u + 1 + rng.random_range(0..n - 1)) % n;
                neg.push((u, k));
            }
            continue;
        }
        for _ in 0..negatives {
            loop {
                let k = rng.random_range(0..n);
                if k != u && nbrs.binary_search(&k).is_err() {
                    neg.push((u, k));
                    break;
                }
            }
        }
    }
    (pos, neg)
}

/// Column-standardized `Z / sqrt(n)` (population standard deviation).
struct Standardized {
    tilde: DenseMatrix,
    hat: DenseMatrix,
    std: Vec<f64>,
}

fn standardize(z: &DenseMatrix, view: usize) -> Result<Standardized> {
    let (n, d) = z.shape();
    let nf = n as f64;
    let mut hat = z.clone();
    let mut std = Vec::with_capacity(d);
    for j in 0..d {
        let mean = (0..n).map(|i| z.get(i, j)).sum::<f64>() / nf;
        let var = (0..n).map(|i| (z.get(i, j) - mean).powi(2)).sum::<f64>() / nf;
        let s = var.sqrt();
        if !(s > 0.0) {
            return Err(Error::Degenerate(format!(
                "column {j} of view {view} has zero variance; standardization is undefined"
            )));
        }
        for i in 0..n {
            hat.set(i, j, (z.get(i, j) - mean) / s);
        }
        std.push(s);
    }
    let tilde = hat.scale(1.0 / nf.sqrt());
    Ok(Standardized { tilde, hat, std })
}

fn standardize_backward(s: &Standardized, d_tilde: &DenseMatrix) -> DenseMatrix {
    let (n, d) = d_tilde.shape();
    let nf = n as f64;
    let inv_sqrt_n = 1.0 / nf.sqrt();
    let mut out = DenseMatrix::zeros(n, d);
    for j in 0..d {
        let dh: Vec<f64> = (0..n).map(|i| d_tilde.get(i, j) * inv_sqrt_n).collect();
        let mean_dh = dh.iter().sum::<f64>() / nf;
        let mean_dh_h = (0..n).map(|i| dh[i] * s.hat.get(i, j)).sum::<f64>() / nf;
        for i in 0..n {
            out.set(
                i,
                j,
                (dh[i] - mean_dh - s.hat.get(i, j) * mean_dh_h) / s.std[j],
            );
        }
    }
    out
}

/// `‖Z̃₁ − Z̃₂‖² + λ(‖Z̃₁ᵀZ̃₁ − I‖² + ‖Z̃₂ᵀZ̃₂ − I‖²)`.
pub fn cca_ssg_loss(z1: &DenseMatrix, z2: &DenseMatrix, lambda: f64) -> Result<LossValueGrad> {
    check_same_shape("cca_ssg_loss", z1, z2)?;
    if z1.rows() < 2 {
        return Err(Error::invalid("cca_ssg_loss needs at least 2 rows"));
    }
    let s1 = standardize(z1, 1)?;
    let s2 = standardize(z2, 2)?;
    let diff = s1.tilde.sub(&s2.tilde)?;
    let id = DenseMatrix::identity(z1.cols());
    let c1 = s1.tilde.t_matmul(&s1.tilde)?.sub(&id)?;
    let c2 = s2.tilde.t_matmul(&s2.tilde)?.sub(&id)?;
    let value =
        diff.frobenius_dot(&diff) + lambda * (c1.frobenius_dot(&c1) + c2.frobenius_dot(&c2));
    let d1 = diff
        .scale(2.0)
        .add(&s1.tilde.matmul(&c1)?.scale(4.0 * lambda))?;
    let d2 = diff
        .scale(-2.0)
        .add(&s2.tilde.matmul(&c2)?.scale(4.0 * lambda))?;
    Ok(LossValueGrad {
        value,
        grads: vec![
            standardize_backward(&s1, &d1),
            standardize_backward(&s2, &d2),
        ],
    })
}

/// `−(2/n) Σᵢ e₁ᵢᵀe₂ᵢ + (1/n²) Σᵢⱼ (e₁ᵢᵀe₂ⱼ)²`.
pub fn spectral_contrastive_loss(e1: &DenseMatrix, e2: &DenseMatrix) -> Result<f64> {
    check_same_shape("spectral_contrastive_loss", e1, e2)?;
    let n = e1.rows() as f64;
    if e1.rows() == 0 {
        return Ok(0.0);
    }
    let diag: f64 = (0..e1.rows()).map(|i| dot(e1.row(i), e2.row(i))).sum();
    let cross = e1.matmul_t(e2)?;
    Ok(-2.0 / n * diag + cross.frobenius_dot(&cross) / (n * n))
}

/// Mean Euclidean distance between the rows of each pair; 0 for no pairs.
pub fn positive_pair_distance_loss(
    f_out: &DenseMatrix,
    pos_pairs: &[(usize, usize)],
) -> Result<f64> {
    check_pairs("positive_pair_distance_loss", pos_pairs, f_out.rows())?;
    if pos_pairs.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = pos_pairs
        .iter()
        .map(|&(a, b)| {
            f_out
                .row(a)
                .iter()
                .zip(f_out.row(b))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    Ok(total / pos_pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_difference, max_relative_error};
    use crate::graph::LaplacianKind;
    use crate::rng;
    use proptest::{prop_assert, proptest};

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random(rows: usize, cols: usize, r: &mut Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
    }

    fn random_laplacian(n: usize, r: &mut Rng) -> SparseGraph {
        let edges: Vec<_> = (0..2 * n)
            .map(|_| (r.random_range(0..n), r.random_range(0..n)))
            .collect();
        SparseGraph::from_edges(n, &edges, DedupPolicy::default())
            .unwrap()
            .laplacian(LaplacianKind::SymNormalized)
    }

    fn assert_grad(analytic: &DenseMatrix, x: &DenseMatrix, f: impl FnMut(&DenseMatrix) -> f64) {
        let num = central_difference(x, 1e-6, f);
        let err = max_relative_error(analytic, &num, 1e-8);
        assert!(err <= 1e-5, "relative error {err}");
    }

    #[test]
    fn negative_graph_cases() {
        let spec = NegativeSampleSpec::default();
        let g = negative_graph(2, &spec, &mut rng::seeded(0)).unwrap();
        assert_eq!(
            g.edges().map(|(u, v, _)| (u, v)).collect::<Vec<_>>(),
            vec![(0, 1)]
        );
        let a = negative_graph(50, &spec, &mut rng::seeded(9)).unwrap();
        let b = negative_graph(50, &spec, &mut rng::seeded(9)).unwrap();
        assert_eq!(a, b);
        let three = NegativeSampleSpec {
            num_permutations: 3,
            ..spec
        };
        let g = negative_graph(100, &three, &mut rng::seeded(4)).unwrap();
        assert!((0..100).all(|i| g.degree(i) >= 1.0));
        assert!(!g.has_self_loops());
        assert!(negative_graph(1, &spec, &mut rng::seeded(0)).is_err());
    }

    #[test]
    fn sce_cases() {
        let z = m(&[&[1.0], &[1.0]]);
        let out = sce_loss(&z, &SparseGraph::identity(2), 1.0).unwrap();
        assert_eq!(out.value, 0.5);
        let scaled = sce_loss(&z.scale(3.0), &SparseGraph::identity(2), 1.0).unwrap();
        assert!((scaled.value - 0.5 / 9.0).abs() < 1e-15);
        assert!(sce_loss(&DenseMatrix::zeros(2, 1), &SparseGraph::identity(2), 1.0).is_err());

        let mut r = rng::seeded(11);
        for _ in 0..20 {
            let l = random_laplacian(8, &mut r);
            let z = random(8, 5, &mut r);
            let out = sce_loss(&z, &l, 1.5).unwrap();
            assert_grad(&out.grads[0], &z, |z| sce_loss(z, &l, 1.5).unwrap().value);
        }
    }

    #[test]
    fn coles_cases() {
        let edge = SparseGraph::from_edges(2, &[(0, 1)], DedupPolicy::default()).unwrap();
        let l = edge.laplacian(LaplacianKind::Combinatorial);
        let empty = SparseGraph::empty(2).laplacian(LaplacianKind::Combinatorial);
        let out = coles_loss(&m(&[&[1.0], &[0.0]]), &l, &empty).unwrap();
        assert_eq!(out.value, -1.0);
        let mut r = rng::seeded(12);
        let z = random(2, 3, &mut r);
        assert_eq!(coles_loss(&z, &l, &l).unwrap().value, 0.0);
        assert_eq!(
            coles_loss(&DenseMatrix::zeros(2, 3), &l, &empty)
                .unwrap()
                .value,
            0.0
        );

        for _ in 0..20 {
            let (lp, ln) = (random_laplacian(8, &mut r), random_laplacian(8, &mut r));
            let z = random(8, 4, &mut r);
            let out = coles_loss(&z, &lp, &ln).unwrap();
            assert_grad(&out.grads[0], &z, |z| {
                coles_loss(z, &lp, &ln).unwrap().value
            });
        }
    }

    #[test]
    fn coles_is_linear_in_the_negative_laplacian() {
        let mut r = rng::seeded(13);
        for _ in 0..10 {
            let (l, n1, n2) = (
                random_laplacian(7, &mut r),
                random_laplacian(7, &mut r),
                random_laplacian(7, &mut r),
            );
            let sum =
                SparseGraph::from_entries(7, n1.triplets().chain(n2.triplets()).collect(), true)
                    .unwrap();
            let z = random(7, 3, &mut r);
            let lhs = coles_loss(&z, &l, &sum).unwrap().value;
            let rhs = coles_loss(&z, &l, &n1).unwrap().value + trace_form(&n2, &z).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn infonce_cases() {
        let z = DenseMatrix::identity(2);
        let out = infonce_loss(&z, &z, 1.0).unwrap();
        let e = std::f64::consts::E;
        let expected = -(e / (e + 2.0)).ln();
        assert!((out.value - expected).abs() < 1e-12);
        assert!((expected - 0.55144).abs() < 1e-5);

        let bad = m(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let err = infonce_loss(&bad, &z, 1.0).unwrap_err().to_string();
        assert!(err.contains("row 1"), "{err}");
        assert!(infonce_loss(&z, &z, 0.0).is_err());

        let mut r = rng::seeded(14);
        for _ in 0..20 {
            let (z1, z2) = (random(8, 6, &mut r), random(8, 6, &mut r));
            let tau = r.random_range(0.2..1.0);
            let out = infonce_loss(&z1, &z2, tau).unwrap();
            assert_grad(&out.grads[0], &z1, |z| {
                infonce_loss(z, &z2, tau).unwrap().value
            });
            assert_grad(&out.grads[1], &z2, |z| {
                infonce_loss(&z1, z, tau).unwrap().value
            });
        }
    }

    #[test]
    fn infonce_brute_force() {
        let mut r = rng::seeded(15);
        let (z1, z2) = (random(5, 3, &mut r), random(5, 3, &mut r));
        let tau = 0.5;
        let cos = |a: &[f64], b: &[f64]| dot(a, b) / (norm(a) * norm(b));
        let anchor = |za: &DenseMatrix, zb: &DenseMatrix, u: usize| {
            let pos = (cos(za.row(u), zb.row(u)) / tau).exp();
            let mut den = pos;
            for k in 0..5 {
                if k != u {
                    den += (cos(za.row(u), za.row(k)) / tau).exp();
                    den += (cos(za.row(u), zb.row(k)) / tau).exp();
                }
            }
            -(pos / den).ln()
        };
        let oracle: f64 = (0..5)
            .map(|u| anchor(&z1, &z2, u) + anchor(&z2, &z1, u))
            .sum::<f64>()
            / 10.0;
        assert!((infonce_loss(&z1, &z2, tau).unwrap().value - oracle).abs() < 1e-12);
    }

    #[test]
    fn infonce_small_temperature_is_finite() {
        let mut r = rng::seeded(16);
        let (z1, z2) = (random(6, 4, &mut r), random(6, 4, &mut r));
        let out = infonce_loss(&z1, &z2, 1e-3).unwrap();
        assert!(out.value.is_finite());
        assert!(out.grads.iter().all(DenseMatrix::is_finite));
    }

    #[test]
    fn sage_cases() {
        let z = m(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]);
        // all inner products 0 between rows 0 and others
        let out = sage_single_view_loss(&z, &[(0, 1)], &[(0, 2), (0, 1)]).unwrap();
        assert!((out.value - 3.0 * 2f64.ln()).abs() < 1e-12);

        let aligned = sage_single_view_loss(&z, &[(1, 2)], &[(1, 0), (2, 0)]).unwrap();
        let expected = softplus(-1.0) + 2.0 * 2f64.ln();
        assert!((aligned.value - expected).abs() < 1e-12);
        assert!((softplus(-1.0) + (1.0 / (1.0 + (-1.0f64).exp())).ln()).abs() < 1e-15);

        assert!(sage_single_view_loss(&z, &[], &[(0, 1)]).is_err());
        assert!(sage_single_view_loss(&z, &[(0, 3)], &[(0, 1)]).is_err());

        let mut r = rng::seeded(17);
        for _ in 0..20 {
            let z = random(8, 5, &mut r).scale(3.0);
            let pos: Vec<_> = (0..8).map(|u| (u, r.random_range(0..8))).collect();
            let neg: Vec<_> = (0..16).map(|k| (k / 2, r.random_range(0..8))).collect();
            let out = sage_single_view_loss(&z, &pos, &neg).unwrap();
            assert_grad(&out.grads[0], &z, |z| {
                sage_single_view_loss(z, &pos, &neg).unwrap().value
            });
        }
    }

    #[test]
    fn sample_pairs_respects_graph() {
        let g =
            SparseGraph::from_edges(6, &[(0, 1), (1, 2), (3, 4)], DedupPolicy::default()).unwrap();
        let (pos, neg) = sample_pairs(&g, 3, &mut rng::seeded(1));
        assert_eq!(pos.len(), 5);
        assert_eq!(neg.len(), 15);
        assert!(pos.iter().all(|&(u, v)| g.has_edge(u, v)));
        assert!(neg.iter().all(|&(u, k)| u != k && !g.has_edge(u, k)));
    }

    fn dense_cca(z1: &DenseMatrix, z2: &DenseMatrix, lambda: f64) -> f64 {
        let st = |z: &DenseMatrix| {
            let n = z.rows() as f64;
            DenseMatrix::from_fn(z.rows(), z.cols(), |i, j| {
                let col: Vec<f64> = (0..z.rows()).map(|k| z.get(k, j)).collect();
                let mu = col.iter().sum::<f64>() / n;
                let sd = (col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n).sqrt();
                (z.get(i, j) - mu) / sd / n.sqrt()
            })
        };
        let (a, b) = (st(z1), st(z2));
        let id = DenseMatrix::identity(z1.cols());
        let sq = |m: DenseMatrix| m.as_slice().iter().map(|v| v * v).sum::<f64>();
        sq(a.sub(&b).unwrap())
            + lambda
                * (sq(a.transpose().matmul(&a).unwrap().sub(&id).unwrap())
                    + sq(b.transpose().matmul(&b).unwrap().sub(&id).unwrap()))
    }

    #[test]
    fn cca_ssg_cases() {
        // columns with zero mean, unit population variance, orthogonal
        let z = m(&[&[1.0, 1.0], &[1.0, -1.0], &[-1.0, 1.0], &[-1.0, -1.0]]);
        assert!(cca_ssg_loss(&z, &z, 0.5).unwrap().value.abs() < 1e-15);
        let swapped = DenseMatrix::from_fn(4, 2, |i, j| z.get(i, 1 - j));
        let v = cca_ssg_loss(&z, &swapped, 0.5).unwrap().value;
        assert!((v - 4.0).abs() < 1e-12, "{v}");

        let constant = m(&[&[1.0, 2.0], &[1.0, 3.0]]);
        let err = cca_ssg_loss(&constant, &constant, 1.0)
            .unwrap_err()
            .to_string();
        assert!(err.contains("column 0"), "{err}");

        let mut r = rng::seeded(18);
        for _ in 0..20 {
            let (z1, z2) = (random(8, 6, &mut r), random(8, 6, &mut r));
            let lambda = r.random_range(0.0..1.0);
            let out = cca_ssg_loss(&z1, &z2, lambda).unwrap();
            assert!((out.value - dense_cca(&z1, &z2, lambda)).abs() < 1e-10);
            assert_grad(&out.grads[0], &z1, |z| {
                cca_ssg_loss(z, &z2, lambda).unwrap().value
            });
            assert_grad(&out.grads[1], &z2, |z| {
                cca_ssg_loss(&z1, z, lambda).unwrap().value
            });
        }
    }

    #[test]
    fn spectral_cases() {
        let zero = DenseMatrix::zeros(3, 2);
        assert_eq!(spectral_contrastive_loss(&zero, &zero).unwrap(), 0.0);
        let one = m(&[&[1.0]]);
        assert_eq!(spectral_contrastive_loss(&one, &one).unwrap(), -1.0);
        let id = DenseMatrix::identity(2);
        assert_eq!(spectral_contrastive_loss(&id, &id).unwrap(), -1.5);
        assert!(spectral_contrastive_loss(&id, &one).is_err());

        let mut r = rng::seeded(19);
        let (a, b) = (random(6, 3, &mut r), random(6, 3, &mut r));
        let mut oracle = 0.0;
        for i in 0..6 {
            oracle -= 2.0 / 6.0 * dot(a.row(i), b.row(i));
            for j in 0..6 {
                oracle += dot(a.row(i), b.row(j)).powi(2) / 36.0;
            }
        }
        assert!((spectral_contrastive_loss(&a, &b).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn distance_loss_cases() {
        let same = DenseMatrix::filled(3, 2, 0.7);
        assert_eq!(
            positive_pair_distance_loss(&same, &[(0, 1), (1, 2)]).unwrap(),
            0.0
        );
        let f = m(&[&[0.0, 0.0], &[3.0, 4.0]]);
        assert_eq!(positive_pair_distance_loss(&f, &[(0, 1)]).unwrap(), 5.0);
        assert_eq!(positive_pair_distance_loss(&f, &[]).unwrap(), 0.0);
        assert!(positive_pair_distance_loss(&f, &[(0, 2)]).is_err());

        let mut r = rng::seeded(20);
        let f = random(6, 3, &mut r);
        let pairs = [(0, 1), (2, 5), (3, 3), (4, 0)];
        let oracle: f64 = pairs
            .iter()
            .map(|&(a, b)| {
                let d = f
                    .row(a)
                    .iter()
                    .zip(f.row(b))
                    .map(|(x, y)| (x - y).powi(2))
                    .sum::<f64>();
                d.sqrt()
            })
            .sum::<f64>()
            / 4.0;
        assert!((positive_pair_distance_loss(&f, &pairs).unwrap() - oracle).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn infonce_ignores_row_scaling(seed in 0u64..500) {
            let mut r = rng::seeded(seed);
            let (z1, z2) = (random(6, 4, &mut r), random(6, 4, &mut r));
            let scale = |z: &DenseMatrix, r: &mut Rng| {
                let mut out = z.clone();
                for i in 0..z.rows() {
                    let c = r.random_range(0.1..10.0);
                    out.row_mut(i).iter_mut().for_each(|v| *v *= c);
                }
                out
            };
            let (s1, s2) = (scale(&z1, &mut r), scale(&z2, &mut r));
            let a = infonce_loss(&z1, &z2, 0.5).unwrap().value;
            let b = infonce_loss(&s1, &s2, 0.5).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-10);
        }

        #[test]
        fn sce_homogeneity(seed in 0u64..500, c in 0.1f64..10.0) {
            let mut r = rng::seeded(seed);
            let l = random_laplacian(6, &mut r);
            let z = random(6, 3, &mut r);
            let a = sce_loss(&z, &l, 1.0).unwrap().value;
            let b = sce_loss(&z.scale(c), &l, 1.0).unwrap().value;
            prop_assert!((b * c * c - a).abs() <= 1e-10 * a.abs().max(1.0));
        }
    }
}
