//! Synthetic graphs, labelled datasets, splits and linear-probe evaluation.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DedupPolicy, SparseGraph};
use crate::io;
use crate::matrix::DenseMatrix;
use crate::rng;

/// Train nodes drawn per class.
pub const TRAIN_PER_CLASS: usize = 20;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(&i) = self.train.iter().chain(&self.test).find(|&&i| i >= n) {
            return Err(Error::invalid(format!(
                "split references node {i} but n = {n}"
            )));
        }
        let mut seen = vec![false; n];
        for &i in &self.train {
            seen[i] = true;
        }
        if let Some(&i) = self.test.iter().find(|&&i| seen[i]) {
            return Err(Error::invalid(format!(
                "node {i} is in both train and test"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub graph: SparseGraph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub split: Split,
}

impl LabeledDataset {
    pub fn new(
        graph: SparseGraph,
        features: DenseMatrix,
        labels: Vec<usize>,
        split: Split,
    ) -> Result<Self> {
        let n = graph.n();
        if features.rows() != n {
            return Err(Error::dims(
                "LabeledDataset::new",
                format!("{} feature rows for {n} nodes", features.rows()),
            ));
        }
        if labels.len() != n {
            return Err(Error::dims(
                "LabeledDataset::new",
                format!("{} labels for {n} nodes", labels.len()),
            ));
        }
        split.validate(n)?;
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        Ok(Self {
            graph,
            features,
            labels,
            n_classes,
            split,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

/// Erdős–Rényi `G(n, p)`: every unordered pair independently with probability `p`.
pub fn gen_er(n: usize, p: f64, seed: u64) -> Result<SparseGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    let mut r = rng::seeded(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    SparseGraph::from_edges(n, &edges, DedupPolicy::default())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub n: usize,
    pub blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Euclidean distance between any two block means.
    pub feature_sep: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            n: 800,
            blocks: 4,
            p_in: 0.1,
            p_out: 0.01,
            feature_dim: 32,
            feature_sep: 1.0,
            noise_std: 1.0,
            seed: 0,
        }
    }
}

const SBM_EDGES: u64 = 10;
const SBM_FEATURES: u64 = 11;
const SBM_SPLIT: u64 = 12;

/// Stochastic block model with contiguous equal blocks, Gaussian block
/// features (means `feature_sep/√2 · e_b`) and a 20-per-class split.
pub fn gen_sbm(cfg: &SbmConfig) -> Result<LabeledDataset> {
    let SbmConfig {
        n,
        blocks,
        p_in,
        p_out,
        feature_dim,
        feature_sep,
        noise_std,
        seed,
    } = *cfg;
    if blocks == 0 || n % blocks != 0 {
        return Err(Error::invalid(format!(
            "{blocks} blocks do not divide {n} nodes"
        )));
    }
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("{name} = {p} outside [0, 1]")));
        }
    }
    if feature_dim < blocks {
        return Err(Error::invalid(format!(
            "feature_dim {feature_dim} must be at least the number of blocks {blocks}"
        )));
    }
    if !(noise_std >= 0.0) || !feature_sep.is_finite() {
        return Err(Error::invalid(
            "noise_std must be non-negative and feature_sep finite",
        ));
    }
    let size = n / blocks;
    let labels: Vec<usize> = (0..n).map(|i| i / size).collect();

    let mut r = rng::stream(seed, SBM_EDGES);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if r.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let graph = SparseGraph::from_edges(n, &edges, DedupPolicy::default())?;

    let mut r = rng::stream(seed, SBM_FEATURES);
    let amp = feature_sep / std::f64::consts::SQRT_2;
    let noise = Normal::new(0.0, noise_std).map_err(|e| Error::invalid(e.to_string()))?;
    let features = DenseMatrix::from_fn(n, feature_dim, |i, j| {
        let mean = if j == labels[i] { amp } else { 0.0 };
        if noise_std == 0.0 {
            mean
        } else {
            mean + noise.sample(&mut r)
        }
    });

    let split = split_per_class(&labels, TRAIN_PER_CLASS, &mut rng::stream(seed, SBM_SPLIT));
    LabeledDataset::new(graph, features, labels, split)
}

/// `per_class` random nodes of every class for training (all of a class
/// when it is smaller), the rest for testing. Both lists are sorted.
pub fn split_per_class(labels: &[usize], per_class: usize, rng: &mut rng::Rng) -> Split {
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut train = Vec::new();
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(rng);
        train.extend(members.into_iter().take(per_class));
    }
    train.sort_unstable();
    let mut is_train = vec![false; labels.len()];
    for &i in &train {
        is_train[i] = true;
    }
    let test = (0..labels.len()).filter(|&i| !is_train[i]).collect();
    Split { train, test }
}

/// Adds `round(fraction · m)` uniformly random edges absent from `g`.
pub fn add_noise_edges(g: &SparseGraph, fraction: f64, seed: u64) -> Result<SparseGraph> {
    if !(fraction >= 0.0) || !fraction.is_finite() {
        return Err(Error::invalid(format!(
            "noise fraction {fraction} must be finite and >= 0"
        )));
    }
    let n = g.n();
    let m = g.num_edges();
    let extra = (fraction * m as f64).round() as usize;
    let capacity = n * n.saturating_sub(1) / 2 - m;
    if extra > capacity {
        return Err(Error::invalid(format!(
            "cannot add {extra} edges: only {capacity} node pairs are unconnected"
        )));
    }
    let mut r = rng::seeded(seed);
    let mut added = std::collections::BTreeSet::new();
    while added.len() < extra {
        let u = r.random_range(0..n);
        let v = r.random_range(0..n);
        let e = (u.min(v), u.max(v));
        if u != v && !g.has_edge(u, v) {
            added.insert(e);
        }
    }
    let mut edges: Vec<(usize, usize)> = g.edges().map(|(u, v, _)| (u, v)).collect();
    edges.extend(added);
    SparseGraph::from_edges(n, &edges, DedupPolicy::default())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub epochs: usize,
    pub lr: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            epochs: 300,
            lr: 0.1,
        }
    }
}

/// Softmax classifier on standardized embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeParams {
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
    /// Per-column mean and scale of the training embeddings.
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ProbeParams {
    /// Predicted class per row; ties go to the lowest class id.
    pub fn predict(&self, z: &DenseMatrix) -> Result<Vec<usize>> {
        let logits = self.logits(&self.standardize(z)?)?;
        Ok((0..logits.rows())
            .map(|i| {
                let row = logits.row(i);
                let mut best = 0;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect())
    }

    fn standardize(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        if z.cols() != self.mean.len() {
            return Err(Error::dims(
                "linear probe",
                format!(
                    "{} embedding columns, probe expects {}",
                    z.cols(),
                    self.mean.len()
                ),
            ));
        }
        Ok(DenseMatrix::from_fn(z.rows(), z.cols(), |i, j| {
            (z.get(i, j) - self.mean[j]) / self.scale[j]
        }))
    }

    fn logits(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let mut l = x.matmul(&self.weights)?;
        for i in 0..l.rows() {
            for (v, b) in l.row_mut(i).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(l)
    }
}

/// Full-batch gradient descent on softmax cross-entropy over the train
/// nodes from zero initialization; returns the test accuracy.
pub fn linear_probe(
    z: &DenseMatrix,
    labels: &[usize],
    split: &Split,
    opts: &ProbeOptions,
) -> Result<(ProbeParams, f64)> {
    if z.rows() != labels.len() {
        return Err(Error::dims(
            "linear_probe",
            format!("{} embedding rows for {} labels", z.rows(), labels.len()),
        ));
    }
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::invalid(
            "linear probe needs non-empty train and test sets",
        ));
    }
    split.validate(labels.len())?;
    if !z.is_finite() {
        return Err(Error::NonFinite(
            "embeddings passed to the linear probe".into(),
        ));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let d = z.cols();
    let train = z.select_rows(&split.train);
    let nt = split.train.len() as f64;
    let mut mean = vec![0.0; d];
    let mut scale = vec![1.0; d];
    for j in 0..d {
        let mu = (0..train.rows()).map(|i| train.get(i, j)).sum::<f64>() / nt;
        let var = (0..train.rows())
            .map(|i| (train.get(i, j) - mu).powi(2))
            .sum::<f64>()
            / nt;
        mean[j] = mu;
        if var.sqrt() > 1e-12 * mu.abs().max(1.0) {
            scale[j] = var.sqrt();
        }
    }
    let mut params = ProbeParams {
        weights: DenseMatrix::zeros(d, n_classes),
        bias: vec![0.0; n_classes],
        mean,
        scale,
    };
    let x = params.standardize(&train)?;
    let y: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
    for _ in 0..opts.epochs {
        let mut g = params.logits(&x)?;
        for i in 0..g.rows() {
            let row = g.row_mut(i);
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for v in row.iter_mut() {
                *v = (*v - m).exp();
                s += *v;
            }
            for v in row.iter_mut() {
                *v /= s * nt;
            }
            row[y[i]] -= 1.0 / nt;
        }
        let gw = x.t_matmul(&g)?;
        for (w, gv) in params.weights.as_mut_slice().iter_mut().zip(gw.as_slice()) {
            *w -= opts.lr * gv;
        }
        for c in 0..n_classes {
            let gb: f64 = (0..g.rows()).map(|i| g.get(i, c)).sum();
            params.bias[c] -= opts.lr * gb;
        }
    }
    let pred = params.predict(&z.select_rows(&split.test))?;
    let correct = pred
        .iter()
        .zip(&split.test)
        .filter(|(&p, &i)| p == labels[i])
        .count();
    Ok((params, correct as f64 / split.test.len() as f64))
}

/// Maximum-weight assignment on a square matrix (Hungarian method).
/// Returns `assignment[row] = col`.
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> Vec<usize> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    let max = weights.iter().flatten().copied().max().unwrap_or(0);
    // minimize cost = max − weight, 1-based potentials
    let cost = |i: usize, j: usize| max - weights[i - 1][j - 1];
    let (mut u, mut v) = (vec![0i64; n + 1], vec![0i64; n + 1]);
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Fraction of nodes whose cluster maps to their true class under the best
/// one-to-one relabeling.
pub fn cluster_agreement(clusters: &[usize], truth: &[usize]) -> Result<f64> {
    if clusters.len() != truth.len() {
        return Err(Error::dims(
            "cluster_agreement",
            format!("{} assignments vs {} labels", clusters.len(), truth.len()),
        ));
    }
    if clusters.is_empty() {
        return Ok(1.0);
    }
    let k = clusters.iter().chain(truth).max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0i64; k]; k];
    for (&c, &t) in clusters.iter().zip(truth) {
        table[c][t] += 1;
    }
    let assignment = max_weight_assignment(&table);
    let matched: i64 = assignment
        .iter()
        .enumerate()
        .map(|(c, &t)| table[c][t])
        .sum();
    Ok(matched as f64 / clusters.len() as f64)
}

pub const EDGES_FILE: &str = "edges.tsv";
pub const FEATURES_BIN: &str = "features.bin";
pub const FEATURES_CSV: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.txt";
pub const SPLIT_FILE: &str = "split.json";

/// Loads `edges.tsv`, `features.bin` (or `features.csv`), `labels.txt` and
/// an optional `split.json` from `dir`. Without a split file a seeded
/// 20-per-class split is drawn.
pub fn load_dataset(dir: &Path, split_seed: u64) -> Result<LabeledDataset> {
    let features_path = [FEATURES_BIN, FEATURES_CSV]
        .iter()
        .map(|f| dir.join(f))
        .find(|p| p.exists())
        .ok_or_else(|| {
            Error::data(
                dir,
                format!("neither {FEATURES_BIN} nor {FEATURES_CSV} found"),
            )
        })?;
    let features = io::read_matrix(&features_path)?;
    let n = features.rows();
    let edges_path = dir.join(EDGES_FILE);
    let graph = io::read_edges(&edges_path, Some(n))?;
    let labels_path = dir.join(LABELS_FILE);
    let labels = io::read_labels(&labels_path)?;
    if labels.len() != n {
        return Err(Error::data(
            &labels_path,
            format!("{} labels but {} feature rows", labels.len(), n),
        ));
    }
    let split_path = dir.join(SPLIT_FILE);
    let split = if split_path.exists() {
        let s = io::read_split(&split_path)?;
        s.validate(n)
            .map_err(|e| Error::data(&split_path, e.to_string()))?;
        s
    } else {
        split_per_class(
            &labels,
            TRAIN_PER_CLASS,
            &mut rng::stream(split_seed, SBM_SPLIT),
        )
    };
    LabeledDataset::new(graph, features, labels, split)
}

pub fn save_dataset(dir: &Path, ds: &LabeledDataset) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    io::write_edges(&dir.join(EDGES_FILE), &ds.graph)?;
    io::write_matrix(&dir.join(FEATURES_BIN), &ds.features)?;
    io::write_labels(&dir.join(LABELS_FILE), &ds.labels)?;
    io::write_split(&dir.join(SPLIT_FILE), &ds.split)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_extremes_and_statistics() {
        assert_eq!(gen_er(30, 0.0, 1).unwrap().num_edges(), 0);
        assert_eq!(gen_er(30, 1.0, 1).unwrap().num_edges(), 30 * 29 / 2);
        assert!(gen_er(5, 1.5, 1).is_err());
        let pairs = 500.0 * 499.0 / 2.0;
        let (mean, sd) = (pairs * 0.05, (pairs * 0.05 * 0.95f64).sqrt());
        for seed in 0..20 {
            let g = gen_er(500, 0.05, seed).unwrap();
            g.validate().unwrap();
            assert!((g.num_edges() as f64 - mean).abs() <= 4.0 * sd);
        }
    }

    fn small_sbm() -> SbmConfig {
        SbmConfig {
            n: 200,
            blocks: 4,
            feature_dim: 8,
            ..SbmConfig::default()
        }
    }

    #[test]
    fn sbm_shape_split_and_validation() {
        let ds = gen_sbm(&small_sbm()).unwrap();
        ds.graph.validate().unwrap();
        assert_eq!(ds.n_classes, 4);
        assert_eq!(ds.split.train.len(), 80);
        assert_eq!(ds.split.train.len() + ds.split.test.len(), 200);
        ds.split.validate(200).unwrap();
        assert!(gen_sbm(&SbmConfig {
            n: 201,
            ..small_sbm()
        })
        .is_err());
        assert!(gen_sbm(&SbmConfig {
            feature_dim: 3,
            ..small_sbm()
        })
        .is_err());
        assert_eq!(gen_sbm(&small_sbm()).unwrap(), ds);
    }

    #[test]
    fn sbm_zero_noise_and_separation() {
        let ds = gen_sbm(&SbmConfig {
            noise_std: 0.0,
            feature_sep: 3.0,
            ..small_sbm()
        })
        .unwrap();
        for i in 0..200 {
            assert_eq!(ds.features.row(i), ds.features.row((i / 50) * 50));
        }
        let d: f64 = ds
            .features
            .row(0)
            .iter()
            .zip(ds.features.row(50))
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sbm_equal_probabilities_look_like_er() {
        let ds = gen_sbm(&SbmConfig {
            n: 400,
            p_in: 0.05,
            p_out: 0.05,
            ..small_sbm()
        })
        .unwrap();
        let (mut within, mut between) = (0.0f64, 0.0f64);
        for (u, v, _) in ds.graph.edges() {
            if ds.labels[u] == ds.labels[v] {
                within += 1.0;
            } else {
                between += 1.0;
            }
        }
        let pairs_within: f64 = 4.0 * 100.0 * 99.0 / 2.0;
        let pairs_between = 400.0 * 399.0 / 2.0 - pairs_within;
        let (dw, db) = (within / pairs_within, between / pairs_between);
        let se = (0.05 * 0.95 / pairs_within).sqrt() + (0.05 * 0.95 / pairs_between).sqrt();
        assert!((dw - db).abs() < 4.0 * se, "{dw} vs {db}");
    }

    #[test]
    fn noise_edges() {
        let g = gen_er(60, 0.06, 3).unwrap();
        assert_eq!(add_noise_edges(&g, 0.0, 1).unwrap(), g);
        let base = gen_er(40, 1.0, 0).unwrap();
        let hundred = SparseGraph::from_edges(
            40,
            &base
                .edges()
                .take(100)
                .map(|(u, v, _)| (u, v))
                .collect::<Vec<_>>(),
            DedupPolicy::default(),
        )
        .unwrap();
        let noisy = add_noise_edges(&hundred, 0.1, 5).unwrap();
        assert_eq!(noisy.num_edges(), 110);
        let new: Vec<_> = noisy
            .edges()
            .filter(|&(u, v, _)| !hundred.has_edge(u, v))
            .collect();
        assert_eq!(new.len(), 10);
        assert!(add_noise_edges(&base, 0.1, 1).is_err());
    }

    #[test]
    fn split_invariants() {
        let labels: Vec<usize> = (0..130).map(|i| i % 3).collect();
        let s = split_per_class(&labels, 20, &mut rng::seeded(1));
        assert_eq!(s.train.len(), 60);
        for c in 0..3 {
            assert_eq!(s.train.iter().filter(|&&i| labels[i] == c).count(), 20);
        }
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..130).collect::<Vec<_>>());
    }

    #[test]
    fn probe_separable_and_constant() {
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let z = DenseMatrix::from_fn(40, 1, |i, _| {
            if labels[i] == 1 {
                1.0 + i as f64 * 0.01
            } else {
                -1.0 - i as f64 * 0.01
            }
        });
        let split = Split {
            train: (0..40).step_by(2).collect(),
            test: (1..40).step_by(2).collect(),
        };
        let (_, acc) = linear_probe(&z, &labels, &split, &ProbeOptions::default()).unwrap();
        assert_eq!(acc, 1.0);

        // class 1 is the majority in both train and test
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i % 3 != 0)).collect();
        let constant = DenseMatrix::filled(40, 3, 2.5);
        let (_, acc) = linear_probe(&constant, &labels, &split, &ProbeOptions::default()).unwrap();
        let majority = split.test.iter().filter(|&&i| labels[i] == 1).count() as f64 / 20.0;
        assert_eq!(acc, majority);

        assert!(linear_probe(
            &constant,
            &labels,
            &Split::default(),
            &ProbeOptions::default()
        )
        .is_err());
    }

    #[test]
    fn probe_random_labels_is_chance() {
        let ds = gen_sbm(&small_sbm()).unwrap();
        let mut accs = Vec::new();
        for seed in 0..20 {
            let mut labels = ds.labels.clone();
            labels.shuffle(&mut rng::seeded(seed));
            let split = split_per_class(&labels, 20, &mut rng::seeded(seed + 100));
            let (_, acc) =
                linear_probe(&ds.features, &labels, &split, &ProbeOptions::default()).unwrap();
            accs.push(acc);
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        // binomial standard error of the mean over 20 runs of 120 test nodes
        let se = (0.25 * 0.75 / 120.0f64).sqrt() / 20f64.sqrt();
        assert!((mean - 0.25).abs() <= 4.0 * se, "mean {mean}");
    }

    #[test]
    fn probe_is_deterministic() {
        let ds = gen_sbm(&small_sbm()).unwrap();
        let a = linear_probe(
            &ds.features,
            &ds.labels,
            &ds.split,
            &ProbeOptions::default(),
        )
        .unwrap();
        let b = linear_probe(
            &ds.features,
            &ds.labels,
            &ds.split,
            &ProbeOptions::default(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut r = rng::seeded(8);
        for k in 1..=6 {
            for _ in 0..10 {
                let w: Vec<Vec<i64>> = (0..k)
                    .map(|_| (0..k).map(|_| r.random_range(0..50)).collect())
                    .collect();
                let a = max_weight_assignment(&w);
                let got: i64 = a.iter().enumerate().map(|(i, &j)| w[i][j]).sum();
                let mut perm: Vec<usize> = (0..k).collect();
                let mut best = i64::MIN;
                permute(&mut perm, 0, &mut |p| {
                    best = best.max(p.iter().enumerate().map(|(i, &j)| w[i][j]).sum());
                });
                assert_eq!(got, best);
            }
        }
    }

    fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }

    #[test]
    fn agreement_up_to_relabeling() {
        assert_eq!(
            cluster_agreement(&[1, 1, 0, 0, 2], &[0, 0, 1, 1, 2]).unwrap(),
            1.0
        );
        assert_eq!(
            cluster_agreement(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(),
            0.5
        );
    }

    #[test]
    fn dataset_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let ds = gen_sbm(&small_sbm()).unwrap();
        save_dataset(dir.path(), &ds).unwrap();
        assert_eq!(load_dataset(dir.path(), 0).unwrap(), ds);

        std::fs::remove_file(dir.path().join(SPLIT_FILE)).unwrap();
        let resplit = load_dataset(dir.path(), 0).unwrap();
        assert_eq!(resplit.split.train.len(), 80);

        std::fs::write(dir.path().join(EDGES_FILE), "0\t1\n3\t200\n").unwrap();
        let err = load_dataset(dir.path(), 0).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");

        save_dataset(dir.path(), &ds).unwrap();
        io::write_matrix(&dir.path().join(FEATURES_BIN), &DenseMatrix::zeros(199, 8)).unwrap();
        assert!(load_dataset(dir.path(), 0).is_err());
    }
}
