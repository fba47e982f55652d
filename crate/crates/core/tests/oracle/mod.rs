//! Slow, obviously-correct reference implementations used by the tests.
#![allow(dead_code)]

use datatailor::FeatureMatrix;
use nalgebra::DMatrix;

/// Singular values from the eigenvalues of `M Mᵀ` (nalgebra's symmetric
/// eigensolver), largest first, `min(L, d)` of them. Eigenvalues inside the
/// Gram rounding band count as zero.
pub fn gram_singular_values(m: &FeatureMatrix) -> Vec<f64> {
    let (l, d) = (m.rows(), m.cols());
    let a = DMatrix::from_fn(l, d, |i, j| m.row(i)[j] as f64);
    let g = &a * a.transpose();
    let trace = g.trace();
    let eig = g.symmetric_eigen().eigenvalues;
    let floor = l.min(d) as f64 * f64::EPSILON * trace;
    let mut s: Vec<f64> = eig.iter().map(|&v| if v <= floor { 0.0 } else { v.sqrt() }).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.truncate(l.min(d));
    s
}

pub fn entropy(s: &[f64]) -> f64 {
    let sum: f64 = s.iter().sum();
    s.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| {
            let q = v / sum;
            -q * q.ln()
        })
        .sum()
}

pub fn ratio(s: &[f64]) -> f64 {
    s[0] / s.iter().sum::<f64>()
}

pub fn direct_distances(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let s: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            out[i][j] = s.sqrt();
        }
    }
    out
}

pub fn centroid(points: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let d = points[0].len();
    let mut c = vec![0.0; d];
    for &m in members {
        for k in 0..d {
            c[k] += points[m][k];
        }
    }
    c.iter_mut().for_each(|v| *v /= members.len() as f64);
    c
}

/// Sum of squared distances of the members to their centroid.
pub fn sse(points: &[Vec<f64>], members: &[usize]) -> f64 {
    let c = centroid(points, members);
    members
        .iter()
        .map(|&m| points[m].iter().zip(&c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleMerge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Greedy agglomeration: at every step merge the pair of active clusters with
/// the smallest `n_a n_b / (n_a + n_b) ‖μ_a − μ_b‖²` (ties: smallest label
/// pair). Leaves are `0..n`, merge `i` creates cluster `n + i`.
pub fn naive_ward(points: &[Vec<f64>]) -> Vec<OracleMerge> {
    let n = points.len();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut centroids: Vec<Vec<f64>> = points.to_vec();
    let mut active: Vec<usize> = (0..n).collect();
    let cost = |a: &[usize], ca: &[f64], b: &[usize], cb: &[f64]| {
        let (na, nb) = (a.len() as f64, b.len() as f64);
        na * nb / (na + nb) * ca.iter().zip(cb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
    };
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..active.len() {
            for y in x + 1..active.len() {
                let (a, b) = (active[x], active[y]);
                let h = cost(&members[a], &centroids[a], &members[b], &centroids[b]);
                let better = match best {
                    None => true,
                    Some((bh, ba, bb)) => h < bh || (h == bh && (a.min(b), a.max(b)) < (ba.min(bb), ba.max(bb))),
                };
                if better {
                    best = Some((h, a, b));
                }
            }
        }
        let (h, a, b) = best.unwrap();
        let (l, r) = (a.min(b), a.max(b));
        let mut merged = members[l].clone();
        merged.extend_from_slice(&members[r]);
        let c = centroid(points, &merged);
        merges.push(OracleMerge {
            left: l,
            right: r,
            height: h,
            size: merged.len(),
        });
        members.push(merged);
        centroids.push(c);
        active.retain(|&v| v != l && v != r);
        active.push(members.len() - 1);
    }
    merges
}

/// Flat labels after applying the first `applied` merges of a dendrogram
/// given as `(left, right)` pairs.
pub fn labels_after(n: usize, merges: &[(usize, usize)], applied: usize) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n + merges.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        r
    }
    for (i, &(l, r)) in merges.iter().take(applied).enumerate() {
        parent[l] = n + i;
        parent[r] = n + i;
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Gaussian block padded with zero rows and columns.
    Block,
    /// Power-of-two multiples of one row, plus zero rows.
    RankOne,
    /// Scaled partial permutation: all singular values equal.
    Uniform,
}

/// Random `L x d` test matrix with `L <= 32`, `d <= 64`. Gaussian blocks keep
/// their two sides at least four apart so the spectrum stays well
/// conditioned. Returns the matrix and its exact rank.
pub fn random_matrix(rng: &mut impl Rng, shape: Shape) -> (FeatureMatrix, usize) {
    let scale: f64 = 10f64.powf(rng.random_range(-1.0..1.0));
    match shape {
        Shape::Block => {
            let (r, c) = loop {
                let r = rng.random_range(1..=32usize);
                let c = rng.random_range(1..=64usize);
                if r.min(c) == 1 || r.abs_diff(c) >= 4 {
                    break (r, c);
                }
            };
            let l = rng.random_range(r..=32);
            let d = rng.random_range(c..=64);
            let mut rows: Vec<usize> = (0..l).collect();
            let mut cols: Vec<usize> = (0..d).collect();
            rows.shuffle(rng);
            cols.shuffle(rng);
            let mut data = vec![0f32; l * d];
            for &i in &rows[..r] {
                for &j in &cols[..c] {
                    let z: f64 = rng.sample(StandardNormal);
                    data[i * d + j] = (z * scale) as f32;
                }
            }
            (FeatureMatrix::new(l, d, data).unwrap(), r.min(c))
        }
        Shape::RankOne => {
            let l = rng.random_range(1..=32usize);
            let d = rng.random_range(1..=64usize);
            let v: Vec<f32> = (0..d)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    (z * scale) as f32 + 0.5
                })
                .collect();
            let mut data = Vec::with_capacity(l * d);
            let pinned = rng.random_range(0..l);
            for i in 0..l {
                let k = if i != pinned && rng.random_bool(0.2) {
                    0.0
                } else {
                    2f32.powi(rng.random_range(-4..=4))
                };
                data.extend(v.iter().map(|x| x * k));
            }
            (FeatureMatrix::new(l, d, data).unwrap(), 1)
        }
        Shape::Uniform => {
            let l = rng.random_range(1..=32usize);
            let d = rng.random_range(l..=64usize);
            let mut cols: Vec<usize> = (0..d).collect();
            cols.shuffle(rng);
            let c = (scale as f32) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let mut data = vec![0f32; l * d];
            for i in 0..l {
                data[i * d + cols[i]] = c;
            }
            (FeatureMatrix::new(l, d, data).unwrap(), l)
        }
    }
}

pub fn random_points(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    // a few Gaussian blobs so dendrograms have real structure
    let k = rng.random_range(1..=5usize);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect();
    (0..n)
        .map(|_| {
            let c = &centers[rng.random_range(0..k)];
            c.iter()
                .map(|x| {
                    let z: f64 = rng.sample(StandardNormal);
                    x + z
                })
                .collect()
        })
        .collect()
}
