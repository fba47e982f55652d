//! Uniqueness inside clusters, representativeness across clusters, and the
//! per-task min-max scaling applied before the values are combined.

use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterSet, DistanceMatrix};
use crate::error::{Error, Result};

/// How informativeness-weighted neighbor distances are aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniquenessAggregation {
    /// Divide the weighted sum by `|C| - 1`. Since the weights already sum
    /// to one this scales small clusters up relative to large ones.
    Mean,
    /// Weighted sum, i.e. an informativeness-weighted mean distance.
    #[default]
    Sum,
}

/// Informativeness share of each member: `V_j / Σ_C V_k`, or `1/|C|` when the
/// cluster carries no informativeness at all.
fn informative_weights(members: &[usize], inf_values: &[f64]) -> Result<Vec<f64>> {
    let mut total = 0.0;
    for &m in members {
        let v = *inf_values
            .get(m)
            .ok_or_else(|| Error::InvalidArgument(format!("member index {m} out of range")))?;
        total += v;
    }
    Ok(if total > 0.0 {
        members.iter().map(|&m| inf_values[m] / total).collect()
    } else {
        vec![1.0 / members.len() as f64; members.len()]
    })
}

/// Informativeness-weighted distance of each member to the rest of its
/// cluster. `members` index into both `distances` and `inf_values`; the result
/// is aligned with `members`.
pub fn unique_values(
    members: &[usize],
    distances: &DistanceMatrix,
    inf_values: &[f64],
    aggregation: UniquenessAggregation,
) -> Result<Vec<f64>> {
    if members.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(&m) = members.iter().find(|&&m| m >= distances.len()) {
        return Err(Error::InvalidArgument(format!(
            "member index {m} out of range for {} points",
            distances.len()
        )));
    }
    let weights = informative_weights(members, inf_values)?;
    let denom = match aggregation {
        UniquenessAggregation::Mean => (members.len() - 1).max(1) as f64,
        UniquenessAggregation::Sum => 1.0,
    };
    Ok(members
        .iter()
        .map(|&i| {
            let sum: f64 = members
                .iter()
                .zip(&weights)
                .filter(|(&j, _)| j != i)
                .map(|(&j, &w)| distances.get(i, j) * w)
                .sum();
            sum / denom
        })
        .collect())
}

/// Cosine similarity; zero whenever either vector is zero.
fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        (ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0)
    }
}

/// Mean exponentiated cosine similarity of each centroid to every other
/// centroid. A single cluster gets the neutral coefficient 1.
pub fn representative_coefficients(clusters: &ClusterSet) -> Vec<f64> {
    let k = clusters.k();
    if k <= 1 {
        return vec![1.0; k];
    }
    let c = &clusters.centroids;
    (0..k)
        .map(|target| {
            let s: f64 = (0..k)
                .filter(|&o| o != target)
                .map(|o| cosine(&c[o], &c[target]).exp())
                .sum();
            s / (k - 1) as f64
        })
        .collect()
}

/// Cluster coefficient `tau` split among members by informativeness share.
pub fn representative_values(members: &[usize], tau: f64, inf_values: &[f64]) -> Result<Vec<f64>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "representative coefficient must be positive, got {tau}"
        )));
    }
    if members.is_empty() {
        return Ok(Vec::new());
    }
    Ok(informative_weights(members, inf_values)?
        .into_iter()
        .map(|w| tau * w)
        .collect())
}

/// Raw informativeness, uniqueness and representativeness of one task's
/// samples, plus the coefficient of each cluster.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterValues {
    pub v_inf: Vec<f64>,
    pub v_uni: Vec<f64>,
    pub v_rep: Vec<f64>,
    pub tau: Vec<f64>,
}

/// The three values of one task scaled to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalizedValues {
    pub v_inf: Vec<f64>,
    pub v_uni: Vec<f64>,
    pub v_rep: Vec<f64>,
}

/// Min-max scaling to `[0, 1]`; a constant array maps to 0.5 everywhere.
pub fn min_max(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if values.is_empty() || hi <= lo {
        return vec![0.5; values.len()];
    }
    let span = hi - lo;
    values.iter().map(|&v| ((v - lo) / span).clamp(0.0, 1.0)).collect()
}

/// Scales each task's three value arrays independently.
pub fn normalize_per_task(raw: &[ClusterValues]) -> Vec<NormalizedValues> {
    raw.iter()
        .map(|t| NormalizedValues {
            v_inf: min_max(&t.v_inf),
            v_uni: min_max(&t.v_uni),
            v_rep: min_max(&t.v_rep),
        })
        .collect()
}

/// Raw values of one task given its distances, clustering and informativeness.
pub fn task_values(
    distances: &DistanceMatrix,
    clusters: &ClusterSet,
    inf_values: &[f64],
    aggregation: UniquenessAggregation,
) -> Result<ClusterValues> {
    let n = inf_values.len();
    if clusters.assignment.len() != n || distances.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "task has {n} informativeness values, {} assignments and {} distance rows",
            clusters.assignment.len(),
            distances.len()
        )));
    }
    let tau = representative_coefficients(clusters);
    let mut v_uni = vec![0.0; n];
    let mut v_rep = vec![0.0; n];
    for (c, members) in clusters.members().iter().enumerate() {
        let uni = unique_values(members, distances, inf_values, aggregation)?;
        let rep = representative_values(members, tau[c], inf_values)?;
        for ((&m, u), r) in members.iter().zip(uni).zip(rep) {
            v_uni[m] = u;
            v_rep[m] = r;
        }
    }
    Ok(ClusterValues {
        v_inf: inf_values.to_vec(),
        v_uni,
        v_rep,
        tau,
    })
}
