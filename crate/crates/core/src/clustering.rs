//! Cross-modal domain clustering within a task.
//!
//! Pairwise distances come from the Gram identity
//! `D(x, y)^2 = S(x, x) + S(y, y) - 2 S(x, y)` with `S = X Xᵀ`. Clusters are
//! agglomerated under the Ward criterion with the nearest-neighbor chain
//! algorithm, and the dendrogram is cut at `lambda` times the largest merge
//! cost.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `n x d` point set, row-major f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * d {
            return Err(Error::DimensionMismatch(format!(
                "{n}x{d} point set needs {} values, got {}",
                n * d,
                data.len()
            )));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "row of length {} in {d}-dimensional point set",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), d, data)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(idx) => Err(Error::NonFinite(format!(
                "point {} coordinate {}",
                idx / self.d.max(1),
                idx % self.d.max(1)
            ))),
            None => Ok(()),
        }
    }
}

/// Index of pair `(i, j)`, `i < j`, in a condensed upper-triangular array.
#[inline]
fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Symmetric matrix with zero diagonal stored as its strict upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.values[condensed_index(self.n, i, j)],
            std::cmp::Ordering::Greater => self.values[condensed_index(self.n, j, i)],
        }
    }

    /// Strict upper triangle, row by row.
    pub fn condensed(&self) -> &[f64] {
        &self.values
    }
}

/// Squared Euclidean distances through the Gram identity, negative radicands
/// clamped to zero.
fn squared_distances(points: &Points) -> Vec<f64> {
    let n = points.n;
    let norms: Vec<f64> = (0..n).map(|i| dot(points.row(i), points.row(i))).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = points.row(i);
            (i + 1..n)
                .map(|j| (norms[i] + norms[j] - 2.0 * dot(xi, points.row(j))).max(0.0))
                .collect()
        })
        .collect();
    rows.concat()
}

/// Squared distances from coordinate differences. Slower than the Gram
/// identity but keeps full relative accuracy for nearly coincident points,
/// which the merge heights need.
fn direct_squared_distances(points: &Points) -> Vec<f64> {
    let n = points.n;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = points.row(i);
            (i + 1..n)
                .map(|j| xi.iter().zip(points.row(j)).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect()
        })
        .collect();
    rows.concat()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn pairwise_distances(points: &Points) -> Result<DistanceMatrix> {
    if points.is_empty() {
        return Err(Error::InvalidArgument(
            "pairwise distances of an empty point set".into(),
        ));
    }
    points.check_finite()?;
    let mut values = squared_distances(points);
    values.iter_mut().for_each(|v| *v = v.sqrt());
    Ok(DistanceMatrix { n: points.n, values })
}

/// Merge cost used by the agglomeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WardVariant {
    /// `n_A n_B / (n_A + n_B) * ‖μ_A - μ_B‖²`, reducible and monotone.
    #[default]
    Classical,
    /// `n_A n_B / (n_A + n_B) * ‖μ_A - μ_B‖` (unsquared). Not reducible, so it
    /// runs on the generic greedy algorithm and heights need not be monotone.
    PaperLiteral,
}

/// One agglomeration step. Leaves are `0..n`; the cluster created by merge
/// `i` has index `n + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Largest merge height, 0 when there are no merges.
    pub fn max_height(&self) -> f64 {
        self.merges.iter().map(|m| m.height).fold(0.0, f64::max)
    }
}

/// Partition of a task's points with per-cluster centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    /// Cluster index per point.
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
}

impl ClusterSet {
    /// Builds the cluster set from raw labels, renumbering clusters by the
    /// first point that carries each label.
    pub fn from_labels(points: &Points, labels: &[usize]) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        let mut remap = std::collections::HashMap::new();
        let assignment: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = remap.len();
                *remap.entry(*l).or_insert(next)
            })
            .collect();
        let k = remap.len();
        let mut sums = vec![vec![0.0; points.dim()]; k];
        let mut counts = vec![0usize; k];
        for (i, &c) in assignment.iter().enumerate() {
            counts[c] += 1;
            sums[c].iter_mut().zip(points.row(i)).for_each(|(s, x)| *s += x);
        }
        for (s, n) in sums.iter_mut().zip(&counts) {
            s.iter_mut().for_each(|v| *v /= *n as f64);
        }
        Ok(Self {
            assignment,
            centroids: sums,
        })
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Point indices of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.k()];
        for (i, &c) in self.assignment.iter().enumerate() {
            m[c].push(i);
        }
        m
    }
}

pub fn ward_dendrogram(points: &Points, variant: WardVariant) -> Result<Dendrogram> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "ward dendrogram needs at least 2 points, got {}",
            points.len()
        )));
    }
    points.check_finite()?;
    let steps = match variant {
        WardVariant::Classical => {
            let mut diss = direct_squared_distances(points);
            diss.iter_mut().for_each(|v| *v *= 0.5);
            let mut steps = nn_chain(points.len(), diss);
            // NN-chain finds merges out of order; stable sort keeps discovery
            // order among equal heights.
            steps.sort_by(|a, b| a.2.total_cmp(&b.2));
            steps
        }
        WardVariant::PaperLiteral => generic_linkage(points),
    };
    Ok(relabel(points.len(), &steps))
}

/// Nearest-neighbor chain on a condensed Ward dissimilarity table, updated
/// with the Lance–Williams formula. Returns `(slot_a, slot_b, height)`
/// triples where slots are leaf indices standing for their current cluster.
fn nn_chain(n: usize, mut diss: Vec<f64>) -> Vec<(usize, usize, f64)> {
    let mut size = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    let mut steps = Vec::with_capacity(n - 1);
    let get = |d: &[f64], i: usize, j: usize| {
        if i < j {
            d[condensed_index(n, i, j)]
        } else {
            d[condensed_index(n, j, i)]
        }
    };

    while steps.len() < n - 1 {
        if chain.is_empty() {
            chain.push(active[0]);
        }
        let (a, b, height) = loop {
            let a = *chain.last().unwrap();
            let prev = (chain.len() >= 2).then(|| chain[chain.len() - 2]);
            let (mut best, mut best_d) = match prev {
                Some(p) => (p, get(&diss, a, p)),
                None => (usize::MAX, f64::INFINITY),
            };
            for &c in &active {
                if c == a {
                    continue;
                }
                let d = get(&diss, a, c);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            if Some(best) == prev {
                chain.pop();
                chain.pop();
                break (a, best, best_d);
            }
            chain.push(best);
        };

        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        steps.push((lo, hi, height));
        let (n_lo, n_hi) = (size[lo] as f64, size[hi] as f64);
        for &k in &active {
            if k == lo || k == hi {
                continue;
            }
            let n_k = size[k] as f64;
            let updated = ((n_lo + n_k) * get(&diss, lo, k) + (n_hi + n_k) * get(&diss, hi, k) - n_k * height)
                / (n_lo + n_hi + n_k);
            let idx = if lo < k {
                condensed_index(n, lo, k)
            } else {
                condensed_index(n, k, lo)
            };
            diss[idx] = updated;
        }
        size[lo] += size[hi];
        active.retain(|&c| c != hi);
    }
    steps
}

/// Greedy agglomeration with centroid recomputation for the unsquared
/// variant. Each step merges the globally cheapest pair; ties go to the
/// lexicographically smallest slot pair.
fn generic_linkage(points: &Points) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut size = vec![1usize; n];
    let mut centroid: Vec<Vec<f64>> = (0..n).map(|i| points.row(i).to_vec()).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let cost = |ca: &[f64], na: usize, cb: &[f64], nb: usize| {
        let sq: f64 = ca.iter().zip(cb).map(|(x, y)| (x - y) * (x - y)).sum();
        (na * nb) as f64 / (na + nb) as f64 * sq.sqrt()
    };
    // nearest partner with a larger slot index, per slot
    let mut nn = vec![(usize::MAX, f64::INFINITY); n];
    let recompute = |i: usize, active: &[usize], centroid: &[Vec<f64>], size: &[usize]| {
        let mut best = (usize::MAX, f64::INFINITY);
        for &j in active.iter().filter(|&&j| j > i) {
            let c = cost(&centroid[i], size[i], &centroid[j], size[j]);
            if c < best.1 {
                best = (j, c);
            }
        }
        best
    };
    for &i in &active {
        nn[i] = recompute(i, &active, &centroid, &size);
    }

    let mut steps = Vec::with_capacity(n - 1);
    while active.len() > 1 {
        let mut a = usize::MAX;
        let mut best = f64::INFINITY;
        for &i in &active {
            if nn[i].1 < best {
                best = nn[i].1;
                a = i;
            }
        }
        let b = nn[a].0;
        steps.push((a, b, best));

        let (na, nb) = (size[a] as f64, size[b] as f64);
        let merged: Vec<f64> = centroid[a]
            .iter()
            .zip(&centroid[b])
            .map(|(x, y)| (na * x + nb * y) / (na + nb))
            .collect();
        centroid[a] = merged;
        size[a] += size[b];
        active.retain(|&c| c != b);

        for &i in &active {
            if i == a || nn[i].0 == a || nn[i].0 == b {
                nn[i] = recompute(i, &active, &centroid, &size);
            } else if i < a {
                let c = cost(&centroid[i], size[i], &centroid[a], size[a]);
                if c < nn[i].1 || (c == nn[i].1 && a < nn[i].0) {
                    nn[i] = (a, c);
                }
            }
        }
    }
    steps
}

/// Converts slot-based merge steps into the leaf/merge index convention.
fn relabel(n: usize, steps: &[(usize, usize, f64)]) -> Dendrogram {
    let mut parent: Vec<usize> = (0..n).collect();
    let mut label: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let merges = steps
        .iter()
        .enumerate()
        .map(|(i, &(a, b, height))| {
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            let (la, lb) = (label[ra], label[rb]);
            let merged_size = size[ra] + size[rb];
            let (root, child) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[child] = root;
            size[root] = merged_size;
            label[root] = n + i;
            Merge {
                left: la.min(lb),
                right: la.max(lb),
                height,
                size: merged_size,
            }
        })
        .collect();
    Dendrogram { n_leaves: n, merges }
}

/// Applies merges in order while their height stays within
/// `lambda * max_height`, stopping at the first merge above the threshold.
pub fn cut_dendrogram(dendrogram: &Dendrogram, points: &Points, lambda: f64) -> Result<ClusterSet> {
    check_lambda(lambda)?;
    let n = dendrogram.n_leaves;
    if points.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "dendrogram has {n} leaves but {} points were given",
            points.len()
        )));
    }
    let threshold = lambda * dendrogram.max_height();
    let mut parent: Vec<usize> = (0..n + dendrogram.merges.len()).collect();
    for (i, m) in dendrogram.merges.iter().enumerate() {
        if m.height > threshold {
            break;
        }
        parent[m.left] = n + i;
        parent[m.right] = n + i;
    }
    let labels: Vec<usize> = (0..n)
        .map(|mut x| {
            while parent[x] != x {
                x = parent[x];
            }
            x
        })
        .collect();
    ClusterSet::from_labels(points, &labels)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "lambda must lie in (0, 1], got {lambda}"
        )))
    }
}

/// Ward clustering of one task's points cut at `lambda`.
pub fn cluster_task(points: &Points, lambda: f64, variant: WardVariant) -> Result<ClusterSet> {
    check_lambda(lambda)?;
    match points.len() {
        0 => Err(Error::InvalidArgument("cannot cluster an empty task".into())),
        1 => {
            points.check_finite()?;
            ClusterSet::from_labels(points, &[0])
        }
        _ => {
            let dendrogram = ward_dendrogram(points, variant)?;
            cut_dendrogram(&dendrogram, points, lambda)
        }
    }
}
