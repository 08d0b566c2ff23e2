//! Node compression and the compressed graph.
//!
//! Compressed features are cluster means `PᵀX` (or sums `P†ᵀX`), the
//! compressed graph is the count-weighted cluster graph `P†ᵀAP†`, and
//! DropMember re-averages each cluster over a random subset of its members.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::matrix::DenseMatrix;
use crate::partition::Partition;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CompressMode {
    /// `PᵀX`
    #[default]
    Mean,
    /// `P†ᵀX`
    Sum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressedFeatures {
    pub matrix: DenseMatrix,
    /// Number of clusters of the partition that produced the rows.
    pub n_clusters: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct CompressGraphOptions {
    /// Keep the within-cluster edge mass as diagonal entries.
    pub keep_self_loops: bool,
    /// Replace positive weights by 1.
    pub binarize: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressedGraph {
    pub graph: SparseGraph,
    /// `Σ_{i,j ∈ S_c} A_ij`, counting both directions of internal edges.
    pub self_weights: Vec<f64>,
}

fn check_rows(op: &'static str, x: &DenseMatrix, p: &Partition) -> Result<()> {
    if x.rows() != p.n() {
        return Err(Error::dims(
            op,
            format!(
                "{} feature rows for a partition of {} nodes",
                x.rows(),
                p.n()
            ),
        ));
    }
    Ok(())
}

pub fn compress_features(
    x: &DenseMatrix,
    p: &Partition,
    mode: CompressMode,
) -> Result<CompressedFeatures> {
    check_rows("compress_features", x, p)?;
    let mut out = DenseMatrix::zeros(p.n_clusters(), x.cols());
    for i in 0..x.rows() {
        let c = p.cluster_of(i);
        for (o, &v) in out.row_mut(c).iter_mut().zip(x.row(i)) {
            *o += v;
        }
    }
    if mode == CompressMode::Mean {
        for (c, &size) in p.sizes().iter().enumerate() {
            let s = size as f64;
            out.row_mut(c).iter_mut().for_each(|v| *v /= s);
        }
    }
    Ok(CompressedFeatures {
        matrix: out,
        n_clusters: p.n_clusters(),
    })
}

/// Cluster graph with `weight(c, c′) = Σ_{i∈S_c, j∈S_c′} A_ij`.
pub fn compress_graph(
    g: &SparseGraph,
    p: &Partition,
    opts: CompressGraphOptions,
) -> Result<CompressedGraph> {
    if g.n() != p.n() {
        return Err(Error::dims(
            "compress_graph",
            format!("graph has {} nodes, partition covers {}", g.n(), p.n()),
        ));
    }
    let k = p.n_clusters();
    let mut self_weights = vec![0.0; k];
    let mut entries = Vec::new();
    for (i, j, w) in g.triplets() {
        let (ci, cj) = (p.cluster_of(i), p.cluster_of(j));
        if ci == cj {
            self_weights[ci] += w;
        } else {
            entries.push((ci, cj, w));
        }
    }
    if opts.keep_self_loops {
        entries.extend(
            self_weights
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != 0.0)
                .map(|(c, &w)| (c, c, w)),
        );
    }
    if opts.binarize {
        entries.iter_mut().for_each(|e| e.2 = 1.0);
    }
    let graph = SparseGraph::from_entries(k, entries, !opts.binarize)?;
    Ok(CompressedGraph {
        graph,
        self_weights,
    })
}

/// DropMember: each member is kept with probability `1 − drop_rate` and the
/// cluster row is the mean of the kept members, or of all members when none
/// survive.
pub fn drop_member(
    x: &DenseMatrix,
    p: &Partition,
    drop_rate: f64,
    rng: &mut Rng,
) -> Result<CompressedFeatures> {
    check_rows("drop_member", x, p)?;
    if !(0.0..1.0).contains(&drop_rate) {
        return Err(Error::invalid(format!(
            "drop rate {drop_rate} outside [0, 1)"
        )));
    }
    let keep: Vec<bool> = (0..x.rows())
        .map(|_| drop_rate == 0.0 || rng.random::<f64>() >= drop_rate)
        .collect();
    drop_member_with_mask(x, p, &keep)
}

/// DropMember with an explicit keep mask (one flag per node).
pub fn drop_member_with_mask(
    x: &DenseMatrix,
    p: &Partition,
    keep: &[bool],
) -> Result<CompressedFeatures> {
    check_rows("drop_member", x, p)?;
    if keep.len() != x.rows() {
        return Err(Error::dims(
            "drop_member",
            format!("{} mask entries for {} nodes", keep.len(), x.rows()),
        ));
    }
    let mut out = DenseMatrix::zeros(p.n_clusters(), x.cols());
    let mut kept = vec![0usize; p.n_clusters()];
    for i in 0..x.rows() {
        if keep[i] {
            let c = p.cluster_of(i);
            kept[c] += 1;
            for (o, &v) in out.row_mut(c).iter_mut().zip(x.row(i)) {
                *o += v;
            }
        }
    }
    let empty: Vec<usize> = (0..p.n_clusters()).filter(|&c| kept[c] == 0).collect();
    if !empty.is_empty() {
        for i in 0..x.rows() {
            let c = p.cluster_of(i);
            if kept[c] == 0 {
                for (o, &v) in out.row_mut(c).iter_mut().zip(x.row(i)) {
                    *o += v;
                }
            }
        }
        for &c in &empty {
            kept[c] = p.sizes()[c];
        }
    }
    for (c, &s) in kept.iter().enumerate() {
        let s = s as f64;
        out.row_mut(c).iter_mut().for_each(|v| *v /= s);
    }
    Ok(CompressedFeatures {
        matrix: out,
        n_clusters: p.n_clusters(),
    })
}

/// `P†Z_c`: every node receives its cluster's row.
pub fn lift(z_c: &DenseMatrix, p: &Partition) -> Result<DenseMatrix> {
    if z_c.rows() != p.n_clusters() {
        return Err(Error::dims(
            "lift",
            format!("{} rows for {} clusters", z_c.rows(), p.n_clusters()),
        ));
    }
    Ok(z_c.select_rows(p.assign()))
}

/// Zeroes each feature column independently with probability `mask_rate`.
pub fn mask_features(
    x_c: &CompressedFeatures,
    mask_rate: f64,
    rng: &mut Rng,
) -> Result<CompressedFeatures> {
    if !(0.0..1.0).contains(&mask_rate) {
        return Err(Error::invalid(format!(
            "mask rate {mask_rate} outside [0, 1)"
        )));
    }
    let cols = x_c.matrix.cols();
    let masked: Vec<bool> = (0..cols).map(|_| rng.random::<f64>() < mask_rate).collect();
    let mut out = x_c.clone();
    for i in 0..out.matrix.rows() {
        for (v, &m) in out.matrix.row_mut(i).iter_mut().zip(&masked) {
            if m {
                *v = 0.0;
            }
        }
    }
    Ok(out)
}
