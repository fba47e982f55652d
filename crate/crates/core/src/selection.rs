//! Round-adaptive value synergy, per-task budgets, and the end-to-end
//! selection pipeline.

use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};
use std::num::NonZeroUsize;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::clustering::{cluster_task, pairwise_distances, ClusterSet, Points, WardVariant};
use crate::dataset::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::spectral::{informative_value, lsvr, singular_values};
use crate::valuation::{min_max, representative_coefficients, task_values, UniquenessAggregation};

pub const DEFAULT_K: f64 = 0.075;
pub const DEFAULT_LAMBDA: f64 = 0.1;

/// Worker thread count: a fixed number or the rayon default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    #[default]
    Auto,
    Count(NonZeroUsize),
}

impl Serialize for Threads {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threads::Auto => s.serialize_str("auto"),
            Threads::Count(n) => s.serialize_u64(n.get() as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Threads {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(u64),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Name(s) if s == "auto" => Ok(Threads::Auto),
            Repr::Name(s) => Err(serde::de::Error::custom(format!(
                "threads must be a positive integer or \"auto\", got {s:?}"
            ))),
            Repr::Count(n) => usize::try_from(n)
                .ok()
                .and_then(NonZeroUsize::new)
                .map(Threads::Count)
                .ok_or_else(|| serde::de::Error::custom("threads must be at least 1")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// Global selection proportion in `(0, 1]`.
    pub k: f64,
    /// Dendrogram cut threshold in `(0, 1]`.
    pub lambda: f64,
    pub ward_variant: WardVariant,
    pub uniqueness_aggregation: UniquenessAggregation,
    pub threads: Threads,
    /// Seed for synthetic data generation; selection itself is deterministic.
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            lambda: DEFAULT_LAMBDA,
            ward_variant: WardVariant::Classical,
            uniqueness_aggregation: UniquenessAggregation::Sum,
            threads: Threads::Auto,
            seed: 0,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k <= 1.0) {
            return Err(Error::InvalidArgument(format!("k must lie in (0, 1], got {}", self.k)));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must lie in (0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Runs `f` on a pool with the configured number of threads.
pub fn with_threads<T: Send>(threads: Threads, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Threads::Auto => Ok(f()),
        Threads::Count(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.get())
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// `r/(r+2) * v_inf + 1/(r+2) * (v_uni + v_rep)`.
pub fn synergistic_value(v_inf: f64, v_uni: f64, v_rep: f64, rounds: u32) -> Result<f64> {
    if rounds < 1 {
        return Err(Error::InvalidArgument("conversation rounds must be at least 1".into()));
    }
    let r = rounds as f64;
    Ok(r / (r + 2.0) * v_inf + (v_uni + v_rep) / (r + 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskBudget {
    pub task: usize,
    /// Mean largest singular value ratio of the task.
    pub x_p: f64,
    pub size: usize,
    /// Share of the whole dataset allotted to the task.
    pub k_p: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPlan {
    pub k: f64,
    /// `round(k * |S|)`.
    pub total: usize,
    pub tasks: Vec<TaskBudget>,
}

/// Splits the global proportion `k` across tasks in proportion to
/// `x_p² |S_p|`, then turns the shares into sample counts that sum to
/// `round(k |S|)` without exceeding any task's size.
pub fn task_proportions(difficulties: &[f64], sizes: &[usize], k: f64) -> Result<TaskPlan> {
    if difficulties.is_empty() {
        return Err(Error::InvalidArgument("empty task set".into()));
    }
    if difficulties.len() != sizes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} difficulties for {} task sizes",
            difficulties.len(),
            sizes.len()
        )));
    }
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::InvalidArgument(format!("k must lie in (0, 1], got {k}")));
    }
    if let Some(x) = difficulties.iter().find(|x| !(**x > 0.0 && **x <= 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "task difficulty must lie in (0, 1], got {x}"
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidArgument("every task needs at least one sample".into()));
    }

    let weights: Vec<f64> = difficulties.iter().zip(sizes).map(|(x, &n)| x * x * n as f64).collect();
    let weight_sum: f64 = weights.iter().sum();
    let k_p: Vec<f64> = weights.iter().map(|w| w / weight_sum * k).collect();
    let n_total: usize = sizes.iter().sum();
    let total = ((k * n_total as f64).round() as usize).min(n_total);
    let counts = apportion(total, &k_p, sizes);

    Ok(TaskPlan {
        k,
        total,
        tasks: (0..sizes.len())
            .map(|p| TaskBudget {
                task: p,
                x_p: difficulties[p],
                size: sizes[p],
                k_p: k_p[p],
                count: counts[p],
            })
            .collect(),
    })
}

/// Integer counts proportional to `shares`, capped by `caps`, summing to
/// `total` (which must not exceed the sum of caps).
fn apportion(total: usize, shares: &[f64], caps: &[usize]) -> Vec<usize> {
    let n = shares.len();
    let mut counts = vec![0usize; n];
    let mut capped = vec![false; n];
    let mut remaining = total;

    loop {
        let open: Vec<usize> = (0..n).filter(|&p| !capped[p]).collect();
        if open.is_empty() || remaining == 0 {
            break;
        }
        let share_sum: f64 = open.iter().map(|&p| shares[p]).sum();
        let quota: Vec<f64> = open.iter().map(|&p| remaining as f64 * shares[p] / share_sum).collect();
        let over: Vec<usize> = open
            .iter()
            .zip(&quota)
            .filter(|(&p, &q)| q > caps[p] as f64)
            .map(|(&p, _)| p)
            .collect();
        if !over.is_empty() {
            for p in over {
                counts[p] = caps[p];
                capped[p] = true;
                remaining -= caps[p];
            }
            continue;
        }

        // largest remainder among the open tasks
        let mut given = 0;
        let mut order = Vec::with_capacity(open.len());
        for (&p, &q) in open.iter().zip(&quota) {
            let base = (q.floor() as usize).min(caps[p]);
            counts[p] = base;
            given += base;
            order.push((p, q - q.floor()));
        }
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut left = remaining.saturating_sub(given);
        while left > 0 {
            let before = left;
            for &(p, _) in &order {
                if left == 0 {
                    break;
                }
                if counts[p] < caps[p] {
                    counts[p] += 1;
                    left -= 1;
                }
            }
            if left == before {
                break;
            }
        }
        break;
    }

    // at least one sample per task when the budget allows it
    if total >= n {
        for p in 0..n {
            if counts[p] == 0 {
                let donor = (0..n)
                    .filter(|&q| counts[q] > 1)
                    .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)));
                if let Some(q) = donor {
                    counts[q] -= 1;
                    counts[p] += 1;
                }
            }
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub id: u64,
    pub task_id: u32,
    pub rounds: u32,
    /// Cluster index within the sample's task.
    pub cluster_id: usize,
    /// Singular value entropy before normalization.
    pub v_inf_raw: f64,
    pub v_inf: f64,
    pub v_uni: f64,
    pub v_rep: f64,
    pub v_synergy: f64,
}

/// Clustering of one task. `members` lists dataset indices in the order of
/// the cluster assignment (ascending sample id).
#[derive(Debug, Clone, PartialEq)]
pub struct TaskClusters {
    pub members: Vec<usize>,
    pub clusters: ClusterSet,
}

/// Per-sample scores and per-task clusterings of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    /// One record per sample, in dataset order.
    pub scored: Vec<ScoredSample>,
    pub clusters: Vec<TaskClusters>,
    /// Mean largest singular value ratio per task.
    pub difficulties: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub config: SelectionConfig,
    pub plan: TaskPlan,
    /// One record per sample, in dataset order.
    pub scored: Vec<ScoredSample>,
    /// Selected sample ids, ascending.
    pub selected: Vec<u64>,
    pub clusters: Vec<TaskClusters>,
}

struct SpectralScore {
    inf: f64,
    ratio: Option<f64>,
}

fn spectral_score(m: &FeatureMatrix) -> Result<SpectralScore> {
    let spectrum = singular_values(m)?;
    match (informative_value(&spectrum), lsvr(&spectrum)) {
        (Ok(inf), Ok(ratio)) => Ok(SpectralScore {
            inf,
            ratio: Some(ratio),
        }),
        (Err(Error::ZeroMatrix), _) | (_, Err(Error::ZeroMatrix)) => Ok(SpectralScore { inf: 0.0, ratio: None }),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

fn points_of(dataset: &Dataset, members: &[usize]) -> Result<Points> {
    let d = dataset.feature_dim().unwrap_or(0);
    let mut data = Vec::with_capacity(members.len() * d);
    for &m in members {
        data.extend(dataset.samples[m].point().iter().map(|&v| v as f64));
    }
    Points::new(members.len(), d, data)
}

/// Task members as dataset indices sorted by sample id, so every reduction
/// downstream runs in an order independent of the input record order.
fn canonical_members(dataset: &Dataset) -> Vec<Vec<usize>> {
    let mut members = dataset.task_members();
    for m in members.iter_mut() {
        m.sort_by_key(|&i| dataset.samples[i].id);
    }
    members
}

/// Scores every sample: informativeness, clustering, uniqueness,
/// representativeness, per-task normalization and the synergy value.
pub fn score(dataset: &Dataset, config: &SelectionConfig) -> Result<Scores> {
    config.validate()?;
    dataset.ensure_valid()?;
    with_threads(config.threads, || score_inner(dataset, config))?
}

fn score_inner(dataset: &Dataset, config: &SelectionConfig) -> Result<Scores> {
    let spectral: Vec<SpectralScore> = dataset
        .samples
        .par_iter()
        .map(|s| spectral_score(&s.features))
        .collect::<Result<_>>()?;

    let members = canonical_members(dataset);
    let per_task: Vec<(TaskClusters, f64, Vec<ScoredSample>)> = members
        .par_iter()
        .enumerate()
        .map(|(t, members)| score_task(dataset, config, t, members, &spectral))
        .collect::<Result<_>>()?;

    let mut scored: Vec<Option<ScoredSample>> = vec![None; dataset.samples.len()];
    let mut clusters = Vec::with_capacity(per_task.len());
    let mut difficulties = Vec::with_capacity(per_task.len());
    for (tc, x, records) in per_task {
        for (&idx, rec) in tc.members.iter().zip(records) {
            scored[idx] = Some(rec);
        }
        clusters.push(tc);
        difficulties.push(x);
    }
    Ok(Scores {
        scored: scored
            .into_iter()
            .map(|s| s.expect("every sample belongs to a task"))
            .collect(),
        clusters,
        difficulties,
    })
}

fn score_task(
    dataset: &Dataset,
    config: &SelectionConfig,
    task: usize,
    members: &[usize],
    spectral: &[SpectralScore],
) -> Result<(TaskClusters, f64, Vec<ScoredSample>)> {
    let ratios: Vec<f64> = members.iter().filter_map(|&m| spectral[m].ratio).collect();
    if ratios.is_empty() {
        return Err(Error::DataQuality(format!(
            "every sample of task {task} ({}) has an all-zero feature matrix",
            dataset.tasks[task]
        )));
    }
    let difficulty = ratios.iter().sum::<f64>() / ratios.len() as f64;

    let points = points_of(dataset, members)?;
    let distances = pairwise_distances(&points)?;
    let clusters = cluster_task(&points, config.lambda, config.ward_variant)?;
    let inf: Vec<f64> = members.iter().map(|&m| spectral[m].inf).collect();
    let raw = task_values(&distances, &clusters, &inf, config.uniqueness_aggregation)?;

    let v_inf = min_max(&raw.v_inf);
    let v_uni = min_max(&raw.v_uni);
    let v_rep = min_max(&raw.v_rep);
    let records = members
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let s = &dataset.samples[m];
            Ok(ScoredSample {
                id: s.id,
                task_id: s.task_id,
                rounds: s.rounds,
                cluster_id: clusters.assignment[i],
                v_inf_raw: raw.v_inf[i],
                v_inf: v_inf[i],
                v_uni: v_uni[i],
                v_rep: v_rep[i],
                v_synergy: synergistic_value(v_inf[i], v_uni[i], v_rep[i], s.rounds)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        TaskClusters {
            members: members.to_vec(),
            clusters,
        },
        difficulty,
        records,
    ))
}

/// Runs the whole pipeline and picks each task's budget.
pub fn select(dataset: &Dataset, config: &SelectionConfig) -> Result<SelectionResult> {
    let scores = score(dataset, config)?;
    let sizes: Vec<usize> = scores.clusters.iter().map(|c| c.members.len()).collect();
    let plan = task_proportions(&scores.difficulties, &sizes, config.k)?;

    let mut selected = Vec::with_capacity(plan.total);
    for (budget, tc) in plan.tasks.iter().zip(&scores.clusters) {
        let ranked: Vec<(u64, f64, &FeatureMatrix)> = tc
            .members
            .iter()
            .map(|&m| {
                let s = &dataset.samples[m];
                (s.id, scores.scored[m].v_synergy, &s.features)
            })
            .collect();
        selected.extend(pick_top(&ranked, budget.count));
    }
    selected.sort_unstable();

    Ok(SelectionResult {
        config: *config,
        plan,
        scored: scores.scored,
        selected,
        clusters: scores.clusters,
    })
}

/// Highest-scoring `count` candidates, ties by ascending id. A candidate whose
/// feature matrix is a bit-for-bit copy of an already chosen one is deferred
/// until every distinct candidate has been considered.
pub fn pick_top(candidates: &[(u64, f64, &FeatureMatrix)], count: usize) -> Vec<u64> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        candidates[b]
            .1
            .total_cmp(&candidates[a].1)
            .then(candidates[a].0.cmp(&candidates[b].0))
    });

    let mut picked: Vec<u64> = Vec::with_capacity(count);
    let mut seen: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut deferred = Vec::new();
    for &i in &order {
        if picked.len() == count {
            break;
        }
        let m = candidates[i].2;
        let bucket = seen.entry(matrix_hash(m)).or_default();
        if bucket.iter().any(|&j| candidates[j].2.is_bitwise_equal(m)) {
            deferred.push(i);
        } else {
            bucket.push(i);
            picked.push(candidates[i].0);
        }
    }
    for i in deferred {
        if picked.len() == count {
            break;
        }
        picked.push(candidates[i].0);
    }
    picked
}

fn matrix_hash(m: &FeatureMatrix) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    m.rows().hash(&mut h);
    m.cols().hash(&mut h);
    for v in m.as_slice() {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Geometric proxies for the three principles, evaluated on a subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrincipleMetrics {
    /// Mean raw singular value entropy of the subset.
    pub mean_informativeness: f64,
    /// Mean distance from each member to its nearest fellow member of the
    /// same task, averaged over tasks with at least two members; 0 if none.
    pub uniqueness_proxy: f64,
    /// Mean representative coefficient of the members' clusters.
    pub representativeness_proxy: f64,
    /// Fraction of clusters (over all tasks) holding at least one member.
    pub cluster_coverage: f64,
}

pub fn evaluate_subset(dataset: &Dataset, subset: &[u64], cluster_sets: &[TaskClusters]) -> Result<PrincipleMetrics> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let by_id: HashMap<u64, usize> = dataset.samples.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    let mut chosen = BTreeSet::new();
    for id in subset {
        chosen.insert(*by_id.get(id).ok_or(Error::UnknownId(*id))?);
    }

    // dataset index -> (task, position in that task's clustering)
    let mut location = HashMap::with_capacity(dataset.samples.len());
    for (t, tc) in cluster_sets.iter().enumerate() {
        for (pos, &m) in tc.members.iter().enumerate() {
            location.insert(m, (t, pos));
        }
    }

    let infs: Vec<f64> = chosen
        .iter()
        .map(|&i| spectral_score(&dataset.samples[i].features).map(|s| s.inf))
        .collect::<Result<_>>()?;
    let mean_informativeness = infs.iter().sum::<f64>() / infs.len() as f64;

    let taus: Vec<Vec<f64>> = cluster_sets
        .iter()
        .map(|tc| representative_coefficients(&tc.clusters))
        .collect();
    let mut covered: Vec<Vec<bool>> = cluster_sets.iter().map(|tc| vec![false; tc.clusters.k()]).collect();
    let mut per_task: Vec<Vec<usize>> = vec![Vec::new(); cluster_sets.len()];
    let mut tau_sum = 0.0;
    for &i in &chosen {
        let &(t, pos) = location.get(&i).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "sample {} is not covered by the clustering",
                dataset.samples[i].id
            ))
        })?;
        let c = cluster_sets[t].clusters.assignment[pos];
        covered[t][c] = true;
        tau_sum += taus[t][c];
        per_task[t].push(i);
    }

    let mut nn_means = Vec::new();
    for members in per_task.iter().filter(|m| m.len() >= 2) {
        let pts: Vec<Vec<f64>> = members
            .iter()
            .map(|&i| dataset.samples[i].point().iter().map(|&v| v as f64).collect())
            .collect();
        let total: f64 = (0..pts.len())
            .map(|a| {
                (0..pts.len())
                    .filter(|&b| b != a)
                    .map(|b| euclidean(&pts[a], &pts[b]))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        nn_means.push(total / pts.len() as f64);
    }
    let uniqueness_proxy = if nn_means.is_empty() {
        0.0
    } else {
        nn_means.iter().sum::<f64>() / nn_means.len() as f64
    };

    let n_clusters: usize = covered.iter().map(Vec::len).sum();
    let n_covered = covered.iter().flatten().filter(|&&c| c).count();
    Ok(PrincipleMetrics {
        mean_informativeness,
        uniqueness_proxy,
        representativeness_proxy: tau_sum / chosen.len() as f64,
        cluster_coverage: if n_clusters == 0 {
            0.0
        } else {
            n_covered as f64 / n_clusters as f64
        },
    })
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synergy_examples() {
        assert!((synergistic_value(0.6, 0.3, 0.3, 1).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(synergistic_value(1.0, 1.0, 1.0, 2).unwrap(), 1.0);
        assert!((synergistic_value(1.0, 0.0, 0.0, 10).unwrap() - 10.0 / 12.0).abs() < 1e-15);
        assert!(synergistic_value(0.5, 0.5, 0.5, 0).is_err());
    }

    #[test]
    fn single_task_plan() {
        let plan = task_proportions(&[0.4], &[200], 0.3).unwrap();
        assert_eq!(plan.tasks[0].k_p, 0.3);
        assert_eq!(plan.tasks[0].count, 60);
        assert_eq!(plan.total, 60);
    }

    #[test]
    fn symmetric_two_task_plan() {
        let plan = task_proportions(&[0.5, 0.5], &[100, 100], 0.1).unwrap();
        assert!((plan.tasks[0].k_p - 0.05).abs() < 1e-15);
        assert!((plan.tasks[1].k_p - 0.05).abs() < 1e-15);
        assert_eq!((plan.tasks[0].count, plan.tasks[1].count), (10, 10));
    }

    #[test]
    fn clamp_and_redistribute() {
        let plan = task_proportions(&[0.9, 0.3], &[10, 990], 0.5).unwrap();
        assert!((plan.tasks[0].k_p * 1000.0 - 41.6666).abs() < 1e-3);
        assert_eq!((plan.tasks[0].count, plan.tasks[1].count), (10, 490));
        assert!((plan.tasks[0].k_p + plan.tasks[1].k_p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn counts_sum_to_budget_with_fractional_quotas() {
        let plan = task_proportions(&[0.5, 0.5, 0.5], &[10, 10, 10], 1.0 / 3.0).unwrap();
        let counts: Vec<usize> = plan.tasks.iter().map(|t| t.count).collect();
        assert_eq!(counts.iter().sum::<usize>(), 10);
        assert_eq!(counts, vec![4, 3, 3]);
    }

    #[test]
    fn every_task_gets_one_when_affordable() {
        let plan = task_proportions(&[1.0, 0.05], &[1000, 10], 0.01).unwrap();
        assert_eq!(plan.total, 10);
        assert_eq!(plan.tasks[1].count, 1);
        assert_eq!(plan.tasks[0].count, 9);
    }

    #[test]
    fn plan_rejects_bad_input() {
        assert!(task_proportions(&[], &[], 0.1).is_err());
        assert!(task_proportions(&[0.5], &[10], 0.0).is_err());
        assert!(task_proportions(&[0.5], &[10], 1.5).is_err());
        assert!(task_proportions(&[0.0], &[10], 0.5).is_err());
        assert!(task_proportions(&[0.5], &[0], 0.5).is_err());
    }

    #[test]
    fn pick_top_defers_copies() {
        let a = FeatureMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let b = FeatureMatrix::new(1, 2, vec![3.0, 4.0]).unwrap();
        let cands = vec![(5, 0.9, &a), (6, 0.9, &a), (7, 0.8, &a), (8, 0.1, &b)];
        assert_eq!(pick_top(&cands, 2), vec![5, 8]);
        assert_eq!(pick_top(&cands, 3), vec![5, 8, 6]);
        assert_eq!(pick_top(&cands, 0), Vec::<u64>::new());
    }

    #[test]
    fn pick_top_ties_by_id() {
        let a = FeatureMatrix::new(1, 1, vec![1.0]).unwrap();
        let b = FeatureMatrix::new(1, 1, vec![2.0]).unwrap();
        let c = FeatureMatrix::new(1, 1, vec![3.0]).unwrap();
        let cands = vec![(9, 0.5, &a), (3, 0.5, &b), (4, 0.7, &c)];
        assert_eq!(pick_top(&cands, 2), vec![4, 3]);
    }

    #[test]
    fn config_defaults_and_parsing() {
        let c: SelectionConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, SelectionConfig::default());
        assert_eq!(c.k, 0.075);
        assert_eq!(c.lambda, 0.1);
        let c: SelectionConfig = serde_json::from_str(
            r#"{"k": 0.2, "ward_variant": "paper_literal", "uniqueness_aggregation": "mean", "threads": 4}"#,
        )
        .unwrap();
        assert_eq!(c.ward_variant, WardVariant::PaperLiteral);
        assert_eq!(c.uniqueness_aggregation, UniquenessAggregation::Mean);
        assert_eq!(c.threads, Threads::Count(NonZeroUsize::new(4).unwrap()));
        let c: SelectionConfig = serde_json::from_str(r#"{"threads": "auto"}"#).unwrap();
        assert_eq!(c.threads, Threads::Auto);
        assert!(serde_json::from_str::<SelectionConfig>(r#"{"kk": 0.2}"#).is_err());
        assert!(serde_json::from_str::<SelectionConfig>(r#"{"threads": 0}"#).is_err());
        assert!(SelectionConfig {
            k: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SelectionConfig {
            lambda: 2.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
