//! Undirected graphs in compressed-sparse-row form.
//!
//! A [`SparseGraph`] is always stored symmetrically (both `(i, j)` and
//! `(j, i)`), with strictly increasing column indices per row. The same type
//! holds the raw adjacency `A`, the normalized propagation matrix
//! `D̃^{-1/2}(A + I)D̃^{-1/2}` and Laplacians, which is why it may carry
//! arbitrary weights and diagonal entries.

use std::cell::Cell;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseGraph {
    n: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    weights: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SelfLoops {
    #[default]
    Drop,
    Keep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Duplicates {
    /// Repeated edges collapse to a single unit-weight edge.
    #[default]
    Merge,
    /// Repeated edges become one edge whose weight is the multiplicity.
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct DedupPolicy {
    pub self_loops: SelfLoops,
    pub duplicates: Duplicates,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaplacianKind {
    /// `D − A`
    Combinatorial,
    /// `I − D̃^{-1/2}(A + I)D̃^{-1/2}`
    SymNormalized,
}

thread_local! {
    static SPMM_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`spmm`] calls made on the current thread. Every sparse-dense
/// product over a graph is message passing, so the compressed trainer must
/// leave this untouched.
pub fn spmm_calls() -> u64 {
    SPMM_CALLS.with(Cell::get)
}

impl SparseGraph {
    /// Builds a canonical symmetric graph from an undirected edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], policy: DedupPolicy) -> Result<Self> {
        let mut entries = Vec::with_capacity(edges.len() * 2);
        for (k, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "edge #{k} ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                if policy.self_loops == SelfLoops::Keep {
                    entries.push((u, u, 1.0));
                }
                continue;
            }
            entries.push((u, v, 1.0));
            entries.push((v, u, 1.0));
        }
        let mut g = Self::from_entries(n, entries, policy.duplicates == Duplicates::Sum)?;
        if policy.duplicates == Duplicates::Merge {
            g.weights = None;
        }
        Ok(g)
    }

    /// Builds a graph from explicit `(row, col, weight)` entries.
    ///
    /// Entries must already be symmetric; repeated positions are summed when
    /// `sum_duplicates` is set and otherwise keep the first weight seen.
    pub fn from_entries(
        n: usize,
        entries: Vec<(usize, usize, f64)>,
        sum_duplicates: bool,
    ) -> Result<Self> {
        let g = Self::from_entries_unchecked(n, entries, sum_duplicates)?;
        if !g.is_symmetric() {
            return Err(Error::invalid("entries are not symmetric"));
        }
        Ok(g)
    }

    fn from_entries_unchecked(
        n: usize,
        mut entries: Vec<(usize, usize, f64)>,
        sum_duplicates: bool,
    ) -> Result<Self> {
        if let Some(&(i, j, _)) = entries.iter().find(|(i, j, _)| *i >= n || *j >= n) {
            return Err(Error::invalid(format!(
                "entry ({i}, {j}) outside a {n}-node graph"
            )));
        }
        if let Some(&(i, j, w)) = entries.iter().find(|e| !e.2.is_finite()) {
            return Err(Error::NonFinite(format!("weight of ({i}, {j}) is {w}")));
        }
        entries.sort_by_key(|a| (a.0, a.1));
        let mut offsets = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut weights: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, w) in entries {
            if last == Some((i, j)) {
                if sum_duplicates {
                    *weights.last_mut().expect("duplicate follows an entry") += w;
                }
                continue;
            }
            last = Some((i, j));
            offsets[i + 1] += 1;
            indices.push(j);
            weights.push(w);
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let unit = weights.iter().all(|&w| w == 1.0);
        Ok(Self {
            n,
            offsets,
            indices,
            weights: if unit { None } else { Some(weights) },
        })
    }

    /// `n` isolated nodes.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            offsets: vec![0; n + 1],
            indices: Vec::new(),
            weights: None,
        }
    }

    /// Identity matrix as a graph of `n` unit self-loops.
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            weights: None,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries, counting both directions of every edge.
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }

    /// `(column, weight)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        range.map(move |p| (self.indices[p], self.weight_at(p)))
    }

    #[inline]
    fn weight_at(&self, pos: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[pos])
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let row = self.neighbors(i);
        match row.binary_search(&j) {
            Ok(p) => self.weight_at(self.offsets[i] + p),
            Err(_) => 0.0,
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Weighted degree (row sum).
    pub fn degree(&self, i: usize) -> f64 {
        self.row(i).map(|(_, w)| w).sum()
    }

    pub fn has_self_loops(&self) -> bool {
        (0..self.n).any(|i| self.has_edge(i, i))
    }

    /// Undirected edges `(u, v, w)` with `u < v`; diagonal entries are skipped.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.row(u)
                .filter(move |&(v, _)| u < v)
                .map(move |(v, w)| (u, v, w))
        })
    }

    /// Number of undirected off-diagonal edges.
    pub fn num_edges(&self) -> usize {
        self.edges().count()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.row(i)
                .all(|(j, w)| j == i || self.weight(j, i) == w && self.has_edge(j, i))
        })
    }

    /// Checks the canonical CSR invariants.
    pub fn validate(&self) -> Result<()> {
        if self.offsets.len() != self.n + 1
            || self.offsets[0] != 0
            || self.offsets[self.n] != self.indices.len()
        {
            return Err(Error::invalid("malformed offsets"));
        }
        for i in 0..self.n {
            if self.offsets[i] > self.offsets[i + 1] {
                return Err(Error::invalid(format!("offsets decrease at row {i}")));
            }
            let row = self.neighbors(i);
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!(
                    "row {i} is not strictly increasing"
                )));
            }
            if row.iter().any(|&j| j >= self.n) {
                return Err(Error::invalid(format!("row {i} has a column out of range")));
            }
        }
        if !self.is_symmetric() {
            return Err(Error::invalid("graph is not symmetric"));
        }
        Ok(())
    }

    /// Same sparsity pattern with every weight replaced by 1.
    pub fn binarized(&self) -> Self {
        Self {
            weights: None,
            ..self.clone()
        }
    }

    /// Copy with diagonal entries removed.
    pub fn without_self_loops(&self) -> Self {
        let entries = self
            .triplets()
            .filter(|&(i, j, _)| i != j)
            .collect::<Vec<_>>();
        Self::from_entries(self.n, entries, false).expect("subgraph of a valid graph")
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, w)| (i, j, w)))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for (i, j, w) in self.triplets() {
            m.set(i, j, w);
        }
        m
    }

    /// `D̃^{-1/2}(A + I)D̃^{-1/2}` with `D̃ = D + I`.
    ///
    /// The unit self-loop is added on top of whatever is already on the
    /// diagonal, so a graph that already has loops gets weight `a_ii + 1`.
    pub fn normalized_adjacency(&self) -> Self {
        let deg: Vec<f64> = (0..self.n).map(|i| self.degree(i) + 1.0).collect();
        let mut entries = Vec::with_capacity(self.nnz() + self.n);
        for i in 0..self.n {
            let mut diag_seen = false;
            for (j, w) in self.row(i) {
                let w = if i == j {
                    diag_seen = true;
                    w + 1.0
                } else {
                    w
                };
                entries.push((i, j, w / (deg[i] * deg[j]).sqrt()));
            }
            if !diag_seen {
                entries.push((i, i, 1.0 / deg[i]));
            }
        }
        Self::from_entries(self.n, entries, false).expect("normalization preserves symmetry")
    }

    pub fn laplacian(&self, kind: LaplacianKind) -> Self {
        match kind {
            LaplacianKind::Combinatorial => {
                let mut entries = Vec::with_capacity(self.nnz() + self.n);
                for i in 0..self.n {
                    let deg = self.degree(i);
                    let mut diag = deg;
                    for (j, w) in self.row(i) {
                        if j == i {
                            diag -= w;
                        } else {
                            entries.push((i, j, -w));
                        }
                    }
                    entries.push((i, i, diag));
                }
                Self::from_entries(self.n, entries, false).expect("laplacian is symmetric")
            }
            LaplacianKind::SymNormalized => {
                let a_hat = self.normalized_adjacency();
                let entries = a_hat
                    .triplets()
                    .map(|(i, j, w)| if i == j { (i, j, 1.0 - w) } else { (i, j, -w) })
                    .collect();
                Self::from_entries(self.n, entries, false).expect("laplacian is symmetric")
            }
        }
    }

    /// Sparse-sparse product `self · other`.
    ///
    /// The product of two symmetric matrices need not be symmetric, so the
    /// result is only a CSR matrix; see [`SparseGraph::power`] for the
    /// symmetric case.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::dims(
                "SparseGraph::matmul",
                format!("{} vs {} nodes", self.n, other.n),
            ));
        }
        let mut acc = vec![0.0; self.n];
        let mut touched = vec![false; self.n];
        let mut cols = Vec::new();
        let mut entries = Vec::new();
        for i in 0..self.n {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if !touched[j] {
                        touched[j] = true;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                entries.push((i, j, acc[j]));
                acc[j] = 0.0;
                touched[j] = false;
            }
            cols.clear();
        }
        Self::from_entries_unchecked(self.n, entries, false)
    }

    /// `self^k`; `k = 0` gives the identity. Each product is re-symmetrized
    /// by averaging mirrored entries, which only absorbs rounding.
    pub fn power(&self, k: u32) -> Result<Self> {
        let mut out = Self::identity(self.n);
        for _ in 0..k {
            out = out.matmul(self)?.symmetrized();
        }
        Ok(out)
    }

    fn symmetrized(&self) -> Self {
        let entries = self
            .triplets()
            .map(|(i, j, w)| (i, j, 0.5 * (w + self.weight(j, i))))
            .collect();
        Self::from_entries(self.n, entries, false).expect("averaged entries are symmetric")
    }
}

/// Sparse-dense product `g · x`, accumulating each row in column order.
pub fn spmm(g: &SparseGraph, x: &DenseMatrix) -> Result<DenseMatrix> {
    if g.n() != x.rows() {
        return Err(Error::dims(
            "spmm",
            format!(
                "graph has {} nodes, matrix is {}x{}",
                g.n(),
                x.rows(),
                x.cols()
            ),
        ));
    }
    SPMM_CALLS.with(|c| c.set(c.get() + 1));
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    for i in 0..g.n() {
        let out_row = out.row_mut(i);
        for (j, w) in g.row(i) {
            for (o, &v) in out_row.iter_mut().zip(x.row(j)) {
                *o += w * v;
            }
        }
    }
    Ok(out)
}

/// `g^k · x` by `k` repeated products.
pub fn k_step_propagate(g: &SparseGraph, x: &DenseMatrix, k: u32) -> Result<DenseMatrix> {
    if g.n() != x.rows() {
        return Err(Error::dims(
            "k_step_propagate",
            format!("graph has {} nodes, matrix has {} rows", g.n(), x.rows()),
        ));
    }
    let mut out = x.clone();
    for _ in 0..k {
        out = spmm(g, &out)?;
    }
    Ok(out)
}

/// Largest singular value of `w` by power iteration on `wᵀw`.
///
/// Iterates until the Rayleigh-quotient estimate changes by less than `tol`
/// relative to itself.
pub fn spectral_norm(w: &DenseMatrix, tol: f64) -> Result<f64> {
    if w.rows() == 0 || w.cols() == 0 {
        return Err(Error::invalid("spectral_norm of an empty matrix"));
    }
    if !w.is_finite() {
        return Err(Error::NonFinite("spectral_norm input".into()));
    }
    let d = w.cols();
    // Fixed start vector with distinct entries so it is not orthogonal to
    // the dominant direction for structured inputs.
    let mut v: Vec<f64> = (0..d)
        .map(|i| 1.0 + 0.1 * ((i * 7 + 3) % 11) as f64)
        .collect();
    let mut prev = 0.0;
    for _ in 0..100_000 {
        let nv = crate::matrix::norm(&v);
        if nv == 0.0 {
            return Ok(0.0);
        }
        v.iter_mut().for_each(|x| *x /= nv);
        // u = W v, v' = Wᵀ u
        let u: Vec<f64> = (0..w.rows())
            .map(|i| crate::matrix::dot(w.row(i), &v))
            .collect();
        let mut next = vec![0.0; d];
        for (i, &ui) in u.iter().enumerate() {
            for (n, &wij) in next.iter_mut().zip(w.row(i)) {
                *n += wij * ui;
            }
        }
        let est = crate::matrix::dot(&u, &u).sqrt();
        v = next;
        if (est - prev).abs() <= tol * est.max(f64::MIN_POSITIVE) {
            return Ok(est);
        }
        prev = est;
    }
    Ok(prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path2() -> SparseGraph {
        SparseGraph::from_edges(2, &[(0, 1)], DedupPolicy::default()).unwrap()
    }

    #[test]
    fn single_edge_is_symmetrized() {
        let g = path2();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        g.validate().unwrap();
    }

    #[test]
    fn duplicates_and_self_loops_are_canonicalized() {
        let g =
            SparseGraph::from_edges(2, &[(0, 1), (1, 0), (0, 0)], DedupPolicy::default()).unwrap();
        assert_eq!(g, path2());
        let summed = SparseGraph::from_edges(
            2,
            &[(0, 1), (1, 0), (0, 0)],
            DedupPolicy {
                self_loops: SelfLoops::Keep,
                duplicates: Duplicates::Sum,
            },
        )
        .unwrap();
        assert_eq!(summed.weight(0, 1), 2.0);
        assert_eq!(summed.weight(0, 0), 1.0);
    }

    #[test]
    fn triangle_rows_have_two_neighbors() {
        let g =
            SparseGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)], DedupPolicy::default()).unwrap();
        for i in 0..3 {
            assert_eq!(g.neighbors(i).len(), 2);
        }
        assert_eq!(g.num_edges(), 3);
    }

    #[test]
    fn out_of_range_edge_names_the_pair() {
        let err = SparseGraph::from_edges(2, &[(0, 1), (1, 5)], DedupPolicy::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("#1") && err.contains("(1, 5)"), "{err}");
    }

    #[test]
    fn normalized_adjacency_small_cases() {
        let iso = SparseGraph::empty(1).normalized_adjacency();
        assert_eq!(iso.to_dense().as_slice(), &[1.0]);

        let a = path2().normalized_adjacency().to_dense();
        for v in a.as_slice() {
            assert!((v - 0.5).abs() < 1e-15);
        }

        let star = SparseGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3)], DedupPolicy::default())
            .unwrap()
            .normalized_adjacency();
        assert!((star.weight(0, 0) - 0.25).abs() < 1e-15);
        assert!((star.weight(0, 2) - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        assert!((star.weight(3, 3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spmm_small_cases() {
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![3.0]]).unwrap();
        let a = path2().normalized_adjacency();
        assert_eq!(spmm(&a, &x).unwrap().as_slice(), &[2.0, 2.0]);
        assert_eq!(spmm(&SparseGraph::identity(2), &x).unwrap(), x);
        assert_eq!(
            spmm(&SparseGraph::empty(2), &x).unwrap(),
            DenseMatrix::zeros(2, 1)
        );
        assert!(spmm(&SparseGraph::empty(3), &x).is_err());
    }

    #[test]
    fn propagation_powers() {
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![3.0]]).unwrap();
        let a = path2().normalized_adjacency();
        assert_eq!(k_step_propagate(&a, &x, 0).unwrap(), x);
        assert_eq!(k_step_propagate(&a, &x, 1).unwrap(), spmm(&a, &x).unwrap());
        assert_eq!(k_step_propagate(&a, &x, 2).unwrap().as_slice(), &[2.0, 2.0]);
    }

    #[test]
    fn spmm_counter_tracks_calls() {
        let before = spmm_calls();
        let x = DenseMatrix::zeros(2, 1);
        k_step_propagate(&path2(), &x, 3).unwrap();
        assert_eq!(spmm_calls() - before, 3);
    }

    #[test]
    fn laplacians() {
        let l = path2().laplacian(LaplacianKind::Combinatorial).to_dense();
        assert_eq!(l.as_slice(), &[1.0, -1.0, -1.0, 1.0]);
        let z = SparseGraph::empty(3)
            .laplacian(LaplacianKind::Combinatorial)
            .to_dense();
        assert_eq!(z, DenseMatrix::zeros(3, 3));
        // 4-cycle is 2-regular
        let c4 =
            SparseGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], DedupPolicy::default())
                .unwrap();
        let ln = c4.laplacian(LaplacianKind::SymNormalized);
        for i in 0..4 {
            assert!(ln.degree(i).abs() < 1e-15);
        }
    }

    #[test]
    fn spectral_norm_cases() {
        assert!((spectral_norm(&DenseMatrix::identity(3), 1e-12).unwrap() - 1.0).abs() < 1e-12);
        let d = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((spectral_norm(&d, 1e-12).unwrap() - 2.0).abs() < 1e-10);
        let bad = DenseMatrix::zeros(0, 0);
        assert!(spectral_norm(&bad, 1e-9).is_err());
    }

    #[test]
    fn spectral_norm_matches_svd() {
        use rand::Rng;
        let mut rng = crate::rng::seeded(11);
        for _ in 0..10 {
            let w = DenseMatrix::from_fn(5, 3, |_, _| rng.random_range(-1.0..1.0));
            let svd = nalgebra::DMatrix::from_row_slice(5, 3, w.as_slice()).singular_values();
            let top = svd.iter().cloned().fold(0.0, f64::max);
            let est = spectral_norm(&w, 1e-13).unwrap();
            assert!((est - top).abs() <= 1e-9 * top, "{est} vs {top}");
        }
    }

    fn random_graph(n: usize, edges: Vec<(usize, usize)>) -> SparseGraph {
        let edges: Vec<_> = edges.into_iter().map(|(u, v)| (u % n, v % n)).collect();
        SparseGraph::from_edges(n, &edges, DedupPolicy::default()).unwrap()
    }

    proptest! {
        #[test]
        fn built_graphs_are_canonical(n in 1usize..30, edges in prop::collection::vec((0usize..100, 0usize..100), 0..80)) {
            let g = random_graph(n, edges);
            prop_assert!(g.validate().is_ok());
            prop_assert!(!g.has_self_loops());
            prop_assert!(g.normalized_adjacency().validate().is_ok());
        }

        #[test]
        fn spmm_is_linear(
            n in 1usize..20,
            edges in prop::collection::vec((0usize..50, 0usize..50), 0..60),
            xs in prop::collection::vec(-10.0f64..10.0, 60),
            ys in prop::collection::vec(-10.0f64..10.0, 60),
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
        ) {
            let g = random_graph(n, edges).normalized_adjacency();
            let x = DenseMatrix::from_fn(n, 3, |i, j| xs[i * 3 + j]);
            let y = DenseMatrix::from_fn(n, 3, |i, j| ys[i * 3 + j]);
            let lhs = spmm(&g, &x.scale(alpha).add(&y.scale(beta)).unwrap()).unwrap();
            let rhs = spmm(&g, &x).unwrap().scale(alpha).add(&spmm(&g, &y).unwrap().scale(beta)).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        }
    }

    #[test]
    fn normalized_adjacency_spectral_radius_at_most_one() {
        use rand::Rng;
        let mut rng = crate::rng::seeded(5);
        for &n in &[10usize, 50, 200] {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.random_bool(0.05) {
                        edges.push((u, v));
                    }
                }
            }
            let a = SparseGraph::from_edges(n, &edges, DedupPolicy::default())
                .unwrap()
                .normalized_adjacency();
            let rho = spectral_norm(&a.to_dense(), 1e-12).unwrap();
            assert!(rho <= 1.0 + 1e-10, "n={n}: {rho}");
        }
    }
}
