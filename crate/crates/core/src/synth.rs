//! Seeded synthetic datasets with controllable cluster structure, exact
//! duplicates, far-away outlier blobs and token-matrix rank.
//!
//! The generator draws from `ChaCha8Rng` (rand_chacha 0.9) seeded with the
//! caller's seed, so a `(spec, seed)` pair always yields the same dataset on
//! any platform.
//!
//! Geometry of one task: inlier centroids sit at `base + a·e_c`, where `base`
//! is a shared offset of norm `cluster_separation`, `e_c` are distinct
//! coordinate axes and `a = cluster_separation / √2`, so centroids are
//! exactly `cluster_separation` apart. The outlier blob is centred at
//! `outlier_distance · cluster_separation` from the mean inlier centroid in a
//! random direction.

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMatrix, Sample};
use crate::error::{Error, Result};

fn default_feature_dim() -> usize {
    64
}

fn default_separation() -> f64 {
    1.0
}

fn default_outlier_distance() -> f64 {
    10.0
}

fn default_rounds() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    pub tasks: Vec<SynthTask>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthTask {
    pub name: String,
    pub n_clusters: usize,
    pub samples_per_cluster: usize,
    /// Per-coordinate standard deviation of sample points around a centroid.
    pub cluster_spread: f64,
    #[serde(default = "default_separation")]
    pub cluster_separation: f64,
    /// Fraction of the task's samples that are byte copies of other samples.
    #[serde(default)]
    pub duplicate_fraction: f64,
    /// Fraction of the task's samples drawn from the outlier blob.
    #[serde(default)]
    pub outlier_fraction: f64,
    /// Outlier blob distance in units of `cluster_separation`.
    #[serde(default = "default_outlier_distance")]
    pub outlier_distance: f64,
    #[serde(default)]
    pub token_rank_profile: RankProfile,
    /// Overrides the rank profile for outlier samples.
    #[serde(default)]
    pub outlier_rank_profile: Option<RankProfile>,
    /// Relative weights of conversation rounds 1, 2, 3, ...
    #[serde(default = "default_rounds")]
    pub rounds_distribution: Vec<f64>,
}

/// Token count and matrix rank ranges. Written either as an object or as the
/// shorthands `"rank-1"` and `"full"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RankProfileRepr")]
pub struct RankProfile {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub min_rank: usize,
    /// `None` means full rank, `min(L, d)`.
    pub max_rank: Option<usize>,
}

impl Default for RankProfile {
    fn default() -> Self {
        Self {
            min_tokens: 8,
            max_tokens: 16,
            min_rank: 1,
            max_rank: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RankProfileRepr {
    Name(String),
    Fields(RankProfileFields),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RankProfileFields {
    #[serde(default)]
    min_tokens: Option<usize>,
    #[serde(default)]
    max_tokens: Option<usize>,
    #[serde(default)]
    min_rank: Option<usize>,
    #[serde(default)]
    max_rank: Option<usize>,
}

impl TryFrom<RankProfileRepr> for RankProfile {
    type Error = String;

    fn try_from(r: RankProfileRepr) -> std::result::Result<Self, String> {
        let d = RankProfile::default();
        match r {
            RankProfileRepr::Name(s) => match s.as_str() {
                "rank-1" => Ok(RankProfile {
                    min_rank: 1,
                    max_rank: Some(1),
                    ..d
                }),
                "full" => Ok(RankProfile {
                    min_rank: usize::MAX,
                    max_rank: None,
                    ..d
                }),
                _ => Err(format!(
                    "unknown rank profile {s:?}, expected \"rank-1\", \"full\" or an object"
                )),
            },
            RankProfileRepr::Fields(f) => Ok(RankProfile {
                min_tokens: f.min_tokens.unwrap_or(d.min_tokens),
                max_tokens: f.max_tokens.unwrap_or(d.max_tokens),
                min_rank: f.min_rank.unwrap_or(d.min_rank),
                max_rank: f.max_rank,
            }),
        }
    }
}

impl RankProfile {
    fn validate(&self, d: usize, task: &str) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("task {task}: {m}")));
        if self.min_tokens == 0 || self.min_tokens > self.max_tokens {
            return bad(format!(
                "token range {}..={} is empty",
                self.min_tokens, self.max_tokens
            ));
        }
        if self.min_rank == 0 {
            return bad("rank must be at least 1".into());
        }
        if let Some(r) = self.max_rank {
            if r < self.min_rank {
                return bad(format!("rank range {}..={r} is empty", self.min_rank));
            }
            if r > self.min_tokens.min(d) {
                return bad(format!("rank {r} exceeds min(L, d) = {}", self.min_tokens.min(d)));
            }
        }
        Ok(())
    }

    fn rank_for(&self, tokens: usize, d: usize, rng: &mut impl Rng) -> usize {
        let full = tokens.min(d);
        let hi = self.max_rank.unwrap_or(full).min(full);
        let lo = self.min_rank.min(hi);
        rng.random_range(lo..=hi)
    }
}

/// Ground truth for each generated sample, aligned with `Dataset::samples`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthLabels {
    /// Inlier cluster index within the task; `None` for outliers.
    pub cluster: Vec<Option<usize>>,
    pub is_outlier: Vec<bool>,
    /// Id of the sample this one was copied from.
    pub duplicate_of: Vec<Option<u64>>,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 {
            return Err(Error::InvalidArgument("feature_dim must be positive".into()));
        }
        if self.tasks.is_empty() {
            return Err(Error::InvalidArgument("spec has no tasks".into()));
        }
        for t in &self.tasks {
            let bad = |m: &str| Err(Error::InvalidArgument(format!("task {}: {m}", t.name)));
            if t.n_clusters == 0 || t.samples_per_cluster == 0 {
                return bad("needs at least one cluster with one sample");
            }
            if !(t.cluster_spread >= 0.0 && t.cluster_spread.is_finite()) {
                return bad("cluster_spread must be finite and non-negative");
            }
            if !(t.cluster_separation >= 0.0 && t.cluster_separation.is_finite()) {
                return bad("cluster_separation must be finite and non-negative");
            }
            if !(0.0..=1.0).contains(&t.duplicate_fraction) {
                return bad("duplicate_fraction must lie in [0, 1]");
            }
            if !(0.0..1.0).contains(&t.outlier_fraction) {
                return bad("outlier_fraction must lie in [0, 1)");
            }
            if !(t.outlier_distance >= 0.0 && t.outlier_distance.is_finite()) {
                return bad("outlier_distance must be finite and non-negative");
            }
            if t.n_clusters > self.feature_dim {
                return bad("n_clusters may not exceed feature_dim");
            }
            if t.rounds_distribution.is_empty()
                || t.rounds_distribution.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
                || t.rounds_distribution.iter().all(|w| *w == 0.0)
            {
                return bad("rounds_distribution needs non-negative weights with a positive sum");
            }
            t.token_rank_profile.validate(self.feature_dim, &t.name)?;
            if let Some(p) = &t.outlier_rank_profile {
                p.validate(self.feature_dim, &t.name)?;
            }
        }
        Ok(())
    }
}

/// Generates the dataset described by `spec`. Ids run from 0 in record order;
/// records of all tasks are shuffled together.
pub fn generate(spec: &SynthSpec, seed: u64) -> Result<(Dataset, SynthLabels)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.feature_dim;

    let mut records: Vec<(Sample, Option<usize>, bool, Option<usize>)> = Vec::new();
    for (t, task) in spec.tasks.iter().enumerate() {
        let start = records.len();
        let inliers = task.n_clusters * task.samples_per_cluster;
        let total = (inliers as f64 / (1.0 - task.outlier_fraction)).round() as usize;
        let outliers = total - inliers;

        let sep = task.cluster_separation;
        let base: Vec<f64> = scaled(&unit_vector(d, &mut rng), sep);
        let mut axes: Vec<usize> = (0..d).collect();
        axes.shuffle(&mut rng);
        let a = sep / std::f64::consts::SQRT_2;
        let centroids: Vec<Vec<f64>> = (0..task.n_clusters)
            .map(|c| {
                let mut v = base.clone();
                v[axes[c]] += a;
                v
            })
            .collect();
        let mut mean = vec![0.0; d];
        for c in &centroids {
            for (m, x) in mean.iter_mut().zip(c) {
                *m += x / task.n_clusters as f64;
            }
        }
        let dir = unit_vector(d, &mut rng);
        let outlier_center: Vec<f64> = mean
            .iter()
            .zip(&dir)
            .map(|(m, u)| m + task.outlier_distance * sep * u)
            .collect();

        let rounds = WeightedIndex::new(&task.rounds_distribution)
            .map_err(|e| Error::InvalidArgument(format!("task {}: {e}", task.name)))?;
        let spread = Normal::new(0.0, task.cluster_spread)
            .map_err(|e| Error::InvalidArgument(format!("task {}: {e}", task.name)))?;

        for i in 0..total {
            let (center, cluster, is_outlier) = if i < inliers {
                let c = i / task.samples_per_cluster;
                (&centroids[c], Some(c), false)
            } else {
                (&outlier_center, None, true)
            };
            let point: Vec<f64> = center.iter().map(|x| x + spread.sample(&mut rng)).collect();
            let profile = if is_outlier {
                task.outlier_rank_profile.as_ref().unwrap_or(&task.token_rank_profile)
            } else {
                &task.token_rank_profile
            };
            let features = token_matrix(&point, profile, &mut rng)?;
            records.push((
                Sample {
                    id: 0,
                    task_id: t as u32,
                    rounds: rounds.sample(&mut rng) as u32 + 1,
                    features,
                },
                cluster,
                is_outlier,
                None,
            ));
        }
        debug_assert_eq!(outliers, records.len() - start - inliers);

        // overwrite a random subset with copies of the remaining originals
        let n_dup = (task.duplicate_fraction * total as f64).floor() as usize;
        let n_dup = n_dup.min(total.saturating_sub(1));
        let mut positions: Vec<usize> = (start..start + total).collect();
        positions.shuffle(&mut rng);
        let (copies, originals) = positions.split_at(n_dup);
        for &dst in copies {
            let src = originals[rng.random_range(0..originals.len())];
            let (sample, cluster, outlier, _) = records[src].clone();
            records[dst] = (
                Sample {
                    rounds: records[dst].0.rounds,
                    ..sample
                },
                cluster,
                outlier,
                Some(src),
            );
        }
    }

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut rng);
    let mut new_id = vec![0u64; records.len()];
    for (id, &old) in order.iter().enumerate() {
        new_id[old] = id as u64;
    }

    let mut samples = Vec::with_capacity(records.len());
    let mut labels = SynthLabels::default();
    for &old in &order {
        let (mut s, cluster, outlier, dup) = records[old].clone();
        s.id = new_id[old];
        samples.push(s);
        labels.cluster.push(cluster);
        labels.is_outlier.push(outlier);
        labels.duplicate_of.push(dup.map(|src| new_id[src]));
    }
    let dataset = Dataset::new(spec.tasks.iter().map(|t| t.name.clone()).collect(), samples);
    dataset.ensure_valid()?;
    Ok((dataset, labels))
}

fn unit_vector(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// An `L x d` matrix of the requested rank whose last row is `point`.
/// Rank-1 matrices use power-of-two multiples of the point so every row is
/// exactly representable.
fn token_matrix(point: &[f64], profile: &RankProfile, rng: &mut impl Rng) -> Result<FeatureMatrix> {
    let d = point.len();
    let tokens = rng.random_range(profile.min_tokens..=profile.max_tokens);
    let rank = profile.rank_for(tokens, d, rng);
    let p: Vec<f32> = point.iter().map(|&x| x as f32).collect();
    let mut data = Vec::with_capacity(tokens * d);

    if rank == 1 {
        for _ in 0..tokens - 1 {
            let scale = 2f32.powi(rng.random_range(-3..=3));
            data.extend(p.iter().map(|x| x * scale));
        }
    } else {
        let norm = point.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
        let mut basis: Vec<Vec<f64>> = vec![point.to_vec()];
        for _ in 1..rank {
            basis.push(scaled(&unit_vector(d, rng), norm));
        }
        // the first rank-1 rows pin the remaining directions so the rank is exact
        for row in 0..tokens - 1 {
            let mut v = vec![0.0; d];
            for (j, b) in basis.iter().enumerate() {
                let c: f64 = if row + 1 < rank {
                    if j == row + 1 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    rng.sample(StandardNormal)
                };
                for (x, y) in v.iter_mut().zip(b) {
                    *x += c * y;
                }
            }
            data.extend(v.iter().map(|&x| x as f32));
        }
    }
    data.extend_from_slice(&p);
    FeatureMatrix::new(tokens, d, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(json: &str) -> SynthSpec {
        serde_json::from_str(json).unwrap()
    }

    const BASIC: &str = r#"{"feature_dim": 8, "tasks": [
        {"name": "a", "n_clusters": 3, "samples_per_cluster": 10, "cluster_spread": 0.05,
         "duplicate_fraction": 0.5, "outlier_fraction": 0.1, "rounds_distribution": [1, 1, 1]},
        {"name": "b", "n_clusters": 1, "samples_per_cluster": 7, "cluster_spread": 0.1,
         "token_rank_profile": "rank-1"}
    ]}"#;

    #[test]
    fn deterministic_for_seed() {
        let s = spec(BASIC);
        let (a, la) = generate(&s, 7).unwrap();
        let (b, lb) = generate(&s, 7).unwrap();
        assert_eq!(la, lb);
        assert_eq!(a.samples.len(), b.samples.len());
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!((x.id, x.task_id, x.rounds), (y.id, y.task_id, y.rounds));
            assert!(x.features.is_bitwise_equal(&y.features));
        }
        let (c, _) = generate(&s, 8).unwrap();
        assert!(a
            .samples
            .iter()
            .zip(&c.samples)
            .any(|(x, y)| !x.features.is_bitwise_equal(&y.features)));
    }

    #[test]
    fn sizes_and_labels() {
        let (ds, labels) = generate(&spec(BASIC), 1).unwrap();
        let counts = ds.task_members();
        // 30 inliers at 10% outliers gives 33 samples
        assert_eq!(counts[0].len(), 33);
        assert_eq!(counts[1].len(), 7);
        let outliers = (0..ds.samples.len()).filter(|&i| labels.is_outlier[i]).count();
        assert!((3..=3 + 16).contains(&outliers));
        let dups = labels.duplicate_of.iter().filter(|d| d.is_some()).count();
        assert_eq!(dups, 16);
        for (i, d) in labels.duplicate_of.iter().enumerate() {
            if let Some(src) = d {
                let j = ds.samples.iter().position(|s| s.id == *src).unwrap();
                assert!(ds.samples[i].features.is_bitwise_equal(&ds.samples[j].features));
                assert!(labels.duplicate_of[j].is_none());
            }
        }
        assert!(ds.samples.iter().all(|s| (1..=3).contains(&s.rounds)));
        let mut ids: Vec<u64> = ds.samples.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn rank_one_profile_rows_are_multiples_of_point() {
        let (ds, _) = generate(&spec(BASIC), 3).unwrap();
        for s in ds.samples.iter().filter(|s| s.task_id == 1) {
            let p = s.point();
            for r in 0..s.features.rows() {
                let row = s.features.row(r);
                let k = row[0] / p[0];
                assert_eq!(k.log2().fract(), 0.0);
                assert!(row.iter().zip(p).all(|(x, y)| *x == y * k));
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = [
            r#"{"tasks": []}"#,
            r#"{"tasks": [{"name": "a", "n_clusters": 0, "samples_per_cluster": 1, "cluster_spread": 0.1}]}"#,
            r#"{"tasks": [{"name": "a", "n_clusters": 1, "samples_per_cluster": 1, "cluster_spread": 0.1, "duplicate_fraction": 1.5}]}"#,
            r#"{"feature_dim": 4, "tasks": [{"name": "a", "n_clusters": 1, "samples_per_cluster": 1, "cluster_spread": 0.1,
                "token_rank_profile": {"min_tokens": 8, "max_tokens": 8, "max_rank": 5}}]}"#,
        ];
        for b in bad {
            assert!(generate(&spec(b), 0).is_err(), "{b}");
        }
        assert!(serde_json::from_str::<SynthSpec>(r#"{"tasks": [], "extra": 1}"#).is_err());
        assert!(serde_json::from_str::<SynthSpec>(
            r#"{"tasks": [{"name": "a", "n_clusters": 1, "samples_per_cluster": 1, "cluster_spread": 0.1, "token_rank_profile": "rank-2"}]}"#
        )
        .is_err());
    }
}
