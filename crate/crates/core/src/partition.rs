//! Balanced graph partitions.
//!
//! A [`Partition`] maps nodes to clusters. It stands for the binary
//! assignment matrix `P†` (`P†[i][c] = 1` iff node `i` is in cluster `c`) and
//! its column-normalized form `P`, whose transpose averages node rows into
//! cluster rows.
//!
//! [`multilevel_partition`] produces balanced low-cut partitions with the
//! usual three phases: heavy-edge matching coarsening, farthest-first seeded
//! region growing on the coarsest graph, and Fiduccia–Mattheyses style
//! refinement while projecting back to the original graph.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::matrix::DenseMatrix;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    assign: Vec<usize>,
    n_clusters: usize,
    sizes: Vec<usize>,
}

impl Partition {
    /// Validates that every cluster id is in range and every cluster is used.
    pub fn new(assign: Vec<usize>, n_clusters: usize) -> Result<Self> {
        let mut sizes = vec![0usize; n_clusters];
        for (i, &c) in assign.iter().enumerate() {
            if c >= n_clusters {
                return Err(Error::invalid(format!(
                    "node {i} assigned to cluster {c}, expected < {n_clusters}"
                )));
            }
            sizes[c] += 1;
        }
        if let Some(c) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!("cluster {c} is empty")));
        }
        Ok(Self {
            assign,
            n_clusters,
            sizes,
        })
    }

    /// Builds a partition from arbitrary labels, renumbering them by first
    /// appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = BTreeMap::new();
        let assign: Vec<usize> = labels
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        let k = map.len();
        Self::new(assign, k).expect("relabelled clusters are dense")
    }

    pub fn identity(n: usize) -> Self {
        Self {
            assign: (0..n).collect(),
            n_clusters: n,
            sizes: vec![1; n],
        }
    }

    pub fn single(n: usize) -> Self {
        Self {
            assign: vec![0; n],
            n_clusters: 1,
            sizes: vec![n],
        }
    }

    pub fn n(&self) -> usize {
        self.assign.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    pub fn cluster_of(&self, i: usize) -> usize {
        self.assign[i]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Node lists per cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (i, &c) in self.assign.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    pub fn is_even(&self) -> bool {
        self.sizes.windows(2).all(|w| w[0] == w[1])
    }

    /// Dense `P†` (n × n′).
    pub fn binary_matrix(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n(), self.n_clusters);
        for (i, &c) in self.assign.iter().enumerate() {
            m.set(i, c, 1.0);
        }
        m
    }

    /// Dense `P` (n × n′): column `c` of `P†` divided by the cluster size.
    pub fn normalized_matrix(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n(), self.n_clusters);
        for (i, &c) in self.assign.iter().enumerate() {
            m.set(i, c, 1.0 / self.sizes[c] as f64);
        }
        m
    }

    /// Renumbers clusters in order of their lowest member.
    pub fn canonicalized(&self) -> Self {
        Self::from_labels(&self.assign)
    }
}

/// Number of undirected edges whose endpoints lie in different clusters.
pub fn edge_cut(g: &SparseGraph, p: &Partition) -> usize {
    g.edges()
        .filter(|&(u, v, _)| p.assign[u] != p.assign[v])
        .count()
}

/// `max_c sizes[c] / (n / n′)`.
pub fn imbalance(p: &Partition) -> f64 {
    let max = p.sizes.iter().copied().max().unwrap_or(0) as f64;
    max * p.n_clusters as f64 / p.n() as f64
}

/// Equal-size clusters: contiguous blocks, or a seeded shuffle of them.
pub fn even_partition_for_tests(
    n: usize,
    n_clusters: usize,
    seed: Option<u64>,
) -> Result<Partition> {
    if n_clusters == 0 || !n.is_multiple_of(n_clusters) {
        return Err(Error::invalid(format!(
            "{n_clusters} clusters do not evenly divide {n} nodes"
        )));
    }
    let block = n / n_clusters;
    let mut assign: Vec<usize> = (0..n).map(|i| i / block).collect();
    if let Some(seed) = seed {
        assign.shuffle(&mut rng::seeded(seed));
    }
    Partition::new(assign, n_clusters)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum RemainderTarget {
    /// Raw adjacency `A^k`.
    #[default]
    Adjacency,
    /// Normalized propagation matrix `Â^k`.
    NormalizedAdjacency,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum RemainderFactor {
    /// `P†P†ᵀ`: 1 for every same-cluster pair.
    #[default]
    Binary,
    /// `P†Pᵀ`: `1/|S_c|` for every same-cluster pair.
    Normalized,
}

/// `‖A − P†P†ᵀ‖_F`.
pub fn partition_remainder_norm(g: &SparseGraph, p: &Partition, k: u32) -> Result<f64> {
    remainder_norm_with(
        g,
        p,
        k,
        RemainderTarget::Adjacency,
        RemainderFactor::Binary,
        false,
    )
}

/// Frobenius norm of `M^k − F` for the selected target `M` and block factor
/// `F`, computed from the sparse entries of `M^k` and the cluster sizes
/// without forming any dense n × n matrix.
///
/// Powers above 3 are refused unless `force` is set: `A^k` fills in quickly.
pub fn remainder_norm_with(
    g: &SparseGraph,
    p: &Partition,
    k: u32,
    target: RemainderTarget,
    factor: RemainderFactor,
    force: bool,
) -> Result<f64> {
    if g.n() != p.n() {
        return Err(Error::dims(
            "partition_remainder_norm",
            format!("graph has {} nodes, partition covers {}", g.n(), p.n()),
        ));
    }
    if k > 3 && !force {
        return Err(Error::invalid(format!(
            "power {k} > 3 densifies the operator; pass force to allow it"
        )));
    }
    let base = match target {
        RemainderTarget::Adjacency => g.clone(),
        RemainderTarget::NormalizedAdjacency => g.normalized_adjacency(),
    };
    let m = base.power(k)?;
    let block_value = |c: usize| match factor {
        RemainderFactor::Binary => 1.0,
        RemainderFactor::Normalized => 1.0 / p.sizes[c] as f64,
    };
    let mut sum = 0.0;
    let mut covered = vec![0usize; p.n_clusters];
    for (i, j, w) in m.triplets() {
        let (ci, cj) = (p.assign[i], p.assign[j]);
        if ci == cj {
            let d = w - block_value(ci);
            sum += d * d;
            covered[ci] += 1;
        } else {
            sum += w * w;
        }
    }
    for c in 0..p.n_clusters {
        let uncovered = p.sizes[c] * p.sizes[c] - covered[c];
        let v = block_value(c);
        sum += uncovered as f64 * v * v;
    }
    Ok(sum.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionOptions {
    pub balance_eps: f64,
    pub seed: u64,
    /// Refinement passes per level.
    pub refine_passes: usize,
    /// Region-growing attempts on the coarsest graph; the lowest cut wins.
    pub initial_trials: usize,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self {
            balance_eps: 0.1,
            seed: 0,
            refine_passes: 8,
            initial_trials: 4,
        }
    }
}

/// Cut before and after one refinement pass, at a given level (0 = finest).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RefinePass {
    pub level: usize,
    pub cut_before: f64,
    pub cut_after: f64,
}

#[derive(Clone, Debug)]
pub struct PartitionOutcome {
    pub partition: Partition,
    /// Set when the requested balance tolerance was infeasible and was
    /// replaced by the tightest achievable one.
    pub balance_relaxed: bool,
    pub effective_eps: f64,
    pub levels: usize,
    pub passes: Vec<RefinePass>,
}

/// Multilevel balanced min-cut partition into `n_clusters` clusters.
pub fn multilevel_partition(
    g: &SparseGraph,
    n_clusters: usize,
    opts: &PartitionOptions,
) -> Result<PartitionOutcome> {
    let n = g.n();
    if n_clusters == 0 || n_clusters > n {
        return Err(Error::invalid(format!(
            "cannot split {n} nodes into {n_clusters} clusters"
        )));
    }
    let (eps, relaxed) = if opts.balance_eps.is_finite() && opts.balance_eps >= 0.0 {
        (opts.balance_eps, false)
    } else {
        (0.0, true)
    };
    let trivial = |partition| PartitionOutcome {
        partition,
        balance_relaxed: relaxed,
        effective_eps: eps,
        levels: 0,
        passes: Vec::new(),
    };
    if n_clusters == 1 {
        return Ok(trivial(Partition::single(n)));
    }
    if n_clusters == n {
        return Ok(trivial(Partition::identity(n)));
    }

    let ideal = n.div_ceil(n_clusters);
    let max_part = (((1.0 + eps) * ideal as f64).floor() as usize).max(ideal);
    let mut rng = rng::stream(opts.seed, rng::streams::PARTITION);

    // Coarsening.
    let coarsen_to = (4 * n_clusters).max(200);
    let max_vwgt = ((1.5 * n as f64 / coarsen_to as f64).floor() as usize).max(1);
    let mut levels = vec![WorkGraph::from_sparse(g)];
    let mut maps: Vec<Vec<usize>> = Vec::new();
    while levels.last().unwrap().n() > coarsen_to {
        let cur = levels.last().unwrap();
        let (coarse, cmap) = cur.coarsen(&mut rng, max_vwgt);
        if coarse.n() as f64 > 0.95 * cur.n() as f64 || coarse.n() < n_clusters {
            break;
        }
        maps.push(cmap);
        levels.push(coarse);
    }

    // Initial partition on the coarsest graph.
    let coarsest = levels.last().unwrap();
    let mut passes = Vec::new();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..opts.initial_trials.max(1) {
        let start = rng.random_range(0..coarsest.n());
        let mut part = coarsest.grow_regions(n_clusters, start, max_part);
        let mut state = PartState::new(coarsest, &part, n_clusters);
        state.rebalance(coarsest, &mut part, max_part);
        state.fill_empty(coarsest, &mut part);
        for _ in 0..opts.refine_passes {
            let (before, after) = state.fm_pass(coarsest, &mut part, max_part);
            if after >= before {
                break;
            }
        }
        let cut = coarsest.cut(&part);
        if best.as_ref().is_none_or(|(c, _)| cut < *c) {
            best = Some((cut, part));
        }
    }
    let mut part = best.expect("at least one trial").1;

    // Uncoarsening with refinement.
    let depth = levels.len();
    for level in (0..depth).rev() {
        let wg = &levels[level];
        if level + 1 < depth {
            let cmap = &maps[level];
            part = cmap.iter().map(|&c| part[c]).collect();
        }
        let mut state = PartState::new(wg, &part, n_clusters);
        state.rebalance(wg, &mut part, max_part);
        state.fill_empty(wg, &mut part);
        for _ in 0..opts.refine_passes {
            let (before, after) = state.fm_pass(wg, &mut part, max_part);
            passes.push(RefinePass {
                level,
                cut_before: before,
                cut_after: after,
            });
            if after >= before {
                break;
            }
        }
    }

    let partition = Partition::new(part, n_clusters)?.canonicalized();
    let balance_relaxed = relaxed || partition.sizes.iter().any(|&s| s > max_part);
    Ok(PartitionOutcome {
        partition,
        balance_relaxed,
        effective_eps: eps,
        levels: depth,
        passes,
    })
}

/// Weighted CSR graph used inside the multilevel scheme.
struct WorkGraph {
    xadj: Vec<usize>,
    adj: Vec<usize>,
    ewgt: Vec<f64>,
    vwgt: Vec<usize>,
}

impl WorkGraph {
    fn from_sparse(g: &SparseGraph) -> Self {
        let mut xadj = vec![0];
        let mut adj = Vec::with_capacity(g.nnz());
        let mut ewgt = Vec::with_capacity(g.nnz());
        for i in 0..g.n() {
            for (j, w) in g.row(i) {
                if j != i {
                    adj.push(j);
                    ewgt.push(w);
                }
            }
            xadj.push(adj.len());
        }
        Self {
            xadj,
            adj,
            ewgt,
            vwgt: vec![1; g.n()],
        }
    }

    fn n(&self) -> usize {
        self.vwgt.len()
    }

    fn nbrs(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.xadj[v]..self.xadj[v + 1]).map(move |p| (self.adj[p], self.ewgt[p]))
    }

    fn cut(&self, part: &[usize]) -> f64 {
        let mut cut = 0.0;
        for v in 0..self.n() {
            for (u, w) in self.nbrs(v) {
                if u > v && part[u] != part[v] {
                    cut += w;
                }
            }
        }
        cut
    }

    /// One round of heavy-edge matching. Nodes are visited in a seeded random
    /// order; each unmatched node takes its unmatched neighbor with the
    /// heaviest connecting edge (lowest index on ties).
    fn coarsen(&self, rng: &mut rng::Rng, max_vwgt: usize) -> (Self, Vec<usize>) {
        let n = self.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut mate = vec![usize::MAX; n];
        for &v in &order {
            if mate[v] != usize::MAX {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for (u, w) in self.nbrs(v) {
                if mate[u] != usize::MAX || self.vwgt[u] + self.vwgt[v] > max_vwgt {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bu, bw)) => w > bw || (w == bw && u < bu),
                };
                if better {
                    best = Some((u, w));
                }
            }
            match best {
                Some((u, _)) => {
                    mate[v] = u;
                    mate[u] = v;
                }
                None => mate[v] = v,
            }
        }
        let mut cmap = vec![usize::MAX; n];
        let mut nc = 0;
        for v in 0..n {
            if cmap[v] == usize::MAX {
                cmap[v] = nc;
                cmap[mate[v]] = nc;
                nc += 1;
            }
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); nc];
        for v in 0..n {
            members[cmap[v]].push(v);
        }
        let mut xadj = vec![0];
        let mut adj = Vec::new();
        let mut ewgt = Vec::new();
        let mut vwgt = Vec::with_capacity(nc);
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (c, ms) in members.iter().enumerate() {
            vwgt.push(ms.iter().map(|&v| self.vwgt[v]).sum());
            for &v in ms {
                for (u, w) in self.nbrs(v) {
                    let cu = cmap[u];
                    if cu != c {
                        *acc.entry(cu).or_insert(0.0) += w;
                    }
                }
            }
            for (cu, w) in std::mem::take(&mut acc) {
                adj.push(cu);
                ewgt.push(w);
            }
            xadj.push(adj.len());
        }
        (
            Self {
                xadj,
                adj,
                ewgt,
                vwgt,
            },
            cmap,
        )
    }

    /// Hop distances from a set of sources; unreachable nodes get `usize::MAX`.
    fn bfs_update(&self, dist: &mut [usize], source: usize) {
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            for (u, _) in self.nbrs(v) {
                if dist[v] + 1 < dist[u] {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
    }

    /// Farthest-first seeds followed by simultaneous region growing; the
    /// lightest region with room takes its most strongly connected frontier
    /// node next.
    fn grow_regions(&self, k: usize, start: usize, max_part: usize) -> Vec<usize> {
        let n = self.n();
        let total: usize = self.vwgt.iter().sum();
        let target = total.div_ceil(k);
        let mut dist = vec![usize::MAX; n];
        let mut seeds = vec![start];
        self.bfs_update(&mut dist, start);
        while seeds.len() < k {
            // farthest node; unreachable ones first, lowest index on ties
            let next = (0..n)
                .filter(|&v| dist[v] != 0)
                .max_by(|&a, &b| dist[a].cmp(&dist[b]).then(b.cmp(&a)))
                .expect("fewer seeds than nodes");
            seeds.push(next);
            self.bfs_update(&mut dist, next);
        }

        let mut part = vec![usize::MAX; n];
        let mut pw = vec![0usize; k];
        let mut frontier: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
        let assign = |v: usize,
                      c: usize,
                      part: &mut Vec<usize>,
                      pw: &mut Vec<usize>,
                      frontier: &mut Vec<BTreeMap<usize, f64>>| {
            part[v] = c;
            pw[c] += self.vwgt[v];
            for f in frontier.iter_mut() {
                f.remove(&v);
            }
            for (u, w) in self.nbrs(v) {
                if part[u] == usize::MAX {
                    *frontier[c].entry(u).or_insert(0.0) += w;
                }
            }
        };
        for (c, &s) in seeds.iter().enumerate() {
            assign(s, c, &mut part, &mut pw, &mut frontier);
        }
        let mut active = vec![true; k];
        loop {
            let pick = (0..k).filter(|&c| active[c]).min_by_key(|&c| (pw[c], c));
            let Some(c) = pick else { break };
            if pw[c] >= target {
                active[c] = false;
                continue;
            }
            let best = frontier[c]
                .iter()
                .filter(|(&u, _)| pw[c] + self.vwgt[u] <= max_part)
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(&u, _)| u);
            match best {
                Some(u) => assign(u, c, &mut part, &mut pw, &mut frontier),
                None => active[c] = false,
            }
        }
        // Leftovers (other components, or blocked by the weight cap) go to the
        // lightest adjacent region, or the lightest region overall.
        while part.contains(&usize::MAX) {
            let mut progressed = false;
            for v in 0..n {
                if part[v] != usize::MAX {
                    continue;
                }
                let c = self
                    .nbrs(v)
                    .filter(|&(u, _)| part[u] != usize::MAX)
                    .map(|(u, _)| part[u])
                    .min_by_key(|&c| (pw[c], c));
                if let Some(c) = c {
                    assign(v, c, &mut part, &mut pw, &mut frontier);
                    progressed = true;
                }
            }
            if !progressed {
                let v = part.iter().position(|&c| c == usize::MAX).unwrap();
                let c = (0..k).min_by_key(|&c| (pw[c], c)).unwrap();
                assign(v, c, &mut part, &mut pw, &mut frontier);
            }
        }
        part
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Gain(f64);

impl Eq for Gain {}

impl PartialOrd for Gain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Gain {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Part weights plus scratch space for connectivity queries.
struct PartState {
    k: usize,
    pw: Vec<usize>,
    conn: Vec<f64>,
    touched: Vec<usize>,
}

impl PartState {
    fn new(g: &WorkGraph, part: &[usize], k: usize) -> Self {
        let mut pw = vec![0usize; k];
        for v in 0..g.n() {
            pw[part[v]] += g.vwgt[v];
        }
        Self {
            k,
            pw,
            conn: vec![0.0; k],
            touched: Vec::new(),
        }
    }

    fn load_conn(&mut self, g: &WorkGraph, part: &[usize], v: usize) {
        for &c in &self.touched {
            self.conn[c] = 0.0;
        }
        self.touched.clear();
        for (u, w) in g.nbrs(v) {
            let c = part[u];
            if self.conn[c] == 0.0 && !self.touched.contains(&c) {
                self.touched.push(c);
            }
            self.conn[c] += w;
        }
        self.touched.sort_unstable();
    }

    /// Best single move of `v` as `(target, gain)`; gain is the cut reduction.
    fn best_move(
        &mut self,
        g: &WorkGraph,
        part: &[usize],
        v: usize,
        max_part: usize,
    ) -> Option<(usize, f64)> {
        let from = part[v];
        if self.pw[from] <= g.vwgt[v] {
            return None;
        }
        self.load_conn(g, part, v);
        let own = self.conn[from];
        let mut best: Option<(usize, f64)> = None;
        for &c in &self.touched {
            if c == from || self.pw[c] + g.vwgt[v] > max_part {
                continue;
            }
            let gain = self.conn[c] - own;
            if best.is_none_or(|(_, bg)| gain > bg) {
                best = Some((c, gain));
            }
        }
        best
    }

    fn is_boundary(g: &WorkGraph, part: &[usize], v: usize) -> bool {
        g.nbrs(v).any(|(u, _)| part[u] != part[v])
    }

    /// One FM pass: repeatedly apply the highest-gain move (negative gains
    /// allowed, each node moves at most once), then roll back to the best
    /// prefix. The returned cut never exceeds the starting cut.
    fn fm_pass(&mut self, g: &WorkGraph, part: &mut [usize], max_part: usize) -> (f64, f64) {
        let n = g.n();
        let start_cut = g.cut(part);
        let mut cut = start_cut;
        let mut best_cut = start_cut;
        let mut best_len = 0;
        let mut moves: Vec<(usize, usize, usize)> = Vec::new();
        let mut locked = vec![false; n];
        let mut version = vec![0u32; n];
        let mut heap: BinaryHeap<(Gain, Reverse<usize>, u32)> = BinaryHeap::new();
        for v in 0..n {
            if Self::is_boundary(g, part, v) {
                if let Some((_, gain)) = self.best_move(g, part, v, max_part) {
                    heap.push((Gain(gain), Reverse(v), 0));
                }
            }
        }
        let stall_limit = (n / 10).clamp(25, 200);
        let mut since_best = 0;
        while let Some((Gain(gain), Reverse(v), ver)) = heap.pop() {
            if locked[v] || ver != version[v] {
                continue;
            }
            let Some((to, fresh)) = self.best_move(g, part, v, max_part) else {
                continue;
            };
            if fresh != gain {
                version[v] += 1;
                heap.push((Gain(fresh), Reverse(v), version[v]));
                continue;
            }
            let from = part[v];
            part[v] = to;
            self.pw[from] -= g.vwgt[v];
            self.pw[to] += g.vwgt[v];
            locked[v] = true;
            cut -= fresh;
            moves.push((v, from, to));
            if cut < best_cut - 1e-9 {
                best_cut = cut;
                best_len = moves.len();
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > stall_limit {
                    break;
                }
            }
            for (u, _) in g.nbrs(v) {
                if locked[u] {
                    continue;
                }
                version[u] += 1;
                if Self::is_boundary(g, part, u) {
                    if let Some((_, gu)) = self.best_move(g, part, u, max_part) {
                        heap.push((Gain(gu), Reverse(u), version[u]));
                    }
                }
            }
        }
        for &(v, from, to) in moves[best_len..].iter().rev() {
            part[v] = from;
            self.pw[to] -= g.vwgt[v];
            self.pw[from] += g.vwgt[v];
        }
        (start_cut, g.cut(part))
    }

    /// Moves nodes out of overweight parts, each time picking the move that
    /// raises the cut least. Stops when no feasible move remains.
    fn rebalance(&mut self, g: &WorkGraph, part: &mut [usize], max_part: usize) {
        loop {
            let Some(heavy) = (0..self.k)
                .filter(|&c| self.pw[c] > max_part)
                .max_by_key(|&c| (self.pw[c], Reverse(c)))
            else {
                return;
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for v in 0..g.n() {
                if part[v] != heavy || self.pw[heavy] <= g.vwgt[v] {
                    continue;
                }
                self.load_conn(g, part, v);
                let own = self.conn[heavy];
                for c in 0..self.k {
                    if c == heavy || self.pw[c] + g.vwgt[v] > max_part {
                        continue;
                    }
                    let cost = own - self.conn[c];
                    if best.is_none_or(|(bc, _, _)| cost < bc) {
                        best = Some((cost, v, c));
                    }
                }
            }
            let Some((_, v, c)) = best else { return };
            part[v] = c;
            self.pw[heavy] -= g.vwgt[v];
            self.pw[c] += g.vwgt[v];
        }
    }

    /// Gives every empty part one node from the largest part, choosing the
    /// node least attached to its own part.
    fn fill_empty(&mut self, g: &WorkGraph, part: &mut [usize]) {
        while let Some(empty) = (0..self.k).find(|&c| self.pw[c] == 0) {
            let largest = (0..self.k)
                .max_by_key(|&c| (self.pw[c], Reverse(c)))
                .unwrap();
            let mut best: Option<(f64, usize)> = None;
            for v in 0..g.n() {
                if part[v] != largest || self.pw[largest] <= g.vwgt[v] {
                    continue;
                }
                self.load_conn(g, part, v);
                let attached = self.conn[largest];
                if best.is_none_or(|(b, _)| attached < b) {
                    best = Some((attached, v));
                }
            }
            let Some((_, v)) = best else { return };
            part[v] = empty;
            self.pw[largest] -= g.vwgt[v];
            self.pw[empty] += g.vwgt[v];
        }
    }
}
