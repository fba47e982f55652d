//! Dataset model: token-level feature matrices with task and round metadata.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Row-major token-by-feature matrix for one sample (`rows` tokens, `cols`
/// feature dimensions).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::DimensionMismatch(format!("{rows}x{cols} overflows")))?;
        if data.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// First non-finite entry as `(row, col)`, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|idx| (idx / self.cols, idx % self.cols))
    }

    pub(crate) fn is_bitwise_equal(&self, other: &FeatureMatrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub task_id: u32,
    /// Conversation rounds, at least 1.
    pub rounds: u32,
    pub features: FeatureMatrix,
}

impl Sample {
    /// The sample point used for clustering and distances: the last token row.
    pub fn point(&self) -> &[f32] {
        last_token_feature(self)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub tasks: Vec<String>,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(tasks: Vec<String>, samples: Vec<Sample>) -> Self {
        Self { tasks, samples }
    }

    /// Feature dimension shared by all samples (taken from the first one).
    pub fn feature_dim(&self) -> Option<usize> {
        self.samples.first().map(|s| s.features.cols())
    }

    /// Dataset indices of each task's samples, in dataset order.
    pub fn task_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.tasks.len()];
        for (idx, s) in self.samples.iter().enumerate() {
            if let Some(m) = members.get_mut(s.task_id as usize) {
                m.push(idx);
            }
        }
        members
    }

    /// Returns an error describing the first problem if the dataset does not
    /// validate cleanly.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate(self);
        if report.is_clean() {
            Ok(())
        } else {
            Err(Error::InvalidDataset(report.summary()))
        }
    }
}

/// Row `L - 1` of the sample's feature matrix.
///
/// Panics if the matrix has no rows; validation rejects such samples.
pub fn last_token_feature(sample: &Sample) -> &[f32] {
    let m = &sample.features;
    assert!(m.rows() >= 1, "sample {} has an empty feature matrix", sample.id);
    m.row(m.rows() - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonFiniteEntry {
    pub sample_id: u64,
    pub row: usize,
    pub col: usize,
}

/// Findings of [`validate`]. Empty error lists mean the dataset is accepted
/// downstream.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub task_counts: Vec<usize>,
    pub duplicate_ids: Vec<u64>,
    pub non_finite: Vec<NonFiniteEntry>,
    /// Ids of samples whose feature dimension differs from the first sample's.
    pub dimension_mismatches: Vec<u64>,
    /// Task indices without samples.
    pub empty_tasks: Vec<usize>,
    /// Ids of samples with zero token rows or zero columns.
    pub empty_matrices: Vec<u64>,
    pub invalid_task_ids: Vec<u64>,
    pub invalid_rounds: Vec<u64>,
    pub no_tasks: bool,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        !self.no_tasks
            && self.duplicate_ids.is_empty()
            && self.non_finite.is_empty()
            && self.dimension_mismatches.is_empty()
            && self.empty_tasks.is_empty()
            && self.empty_matrices.is_empty()
            && self.invalid_task_ids.is_empty()
            && self.invalid_rounds.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if self.no_tasks {
            parts.push("no tasks".to_string());
        }
        if !self.empty_tasks.is_empty() {
            parts.push(format!("empty tasks {:?}", self.empty_tasks));
        }
        if !self.duplicate_ids.is_empty() {
            parts.push(format!("duplicate ids {:?}", self.duplicate_ids));
        }
        if !self.non_finite.is_empty() {
            let e = self.non_finite[0];
            parts.push(format!(
                "{} non-finite entries (first: sample {} row {} col {})",
                self.non_finite.len(),
                e.sample_id,
                e.row,
                e.col
            ));
        }
        if !self.dimension_mismatches.is_empty() {
            parts.push(format!("dimension mismatch in samples {:?}", self.dimension_mismatches));
        }
        if !self.empty_matrices.is_empty() {
            parts.push(format!("empty feature matrices in samples {:?}", self.empty_matrices));
        }
        if !self.invalid_task_ids.is_empty() {
            parts.push(format!("invalid task ids in samples {:?}", self.invalid_task_ids));
        }
        if !self.invalid_rounds.is_empty() {
            parts.push(format!("rounds < 1 in samples {:?}", self.invalid_rounds));
        }
        parts.join("; ")
    }
}

pub fn validate(dataset: &Dataset) -> ValidationReport {
    let mut report = ValidationReport {
        task_counts: vec![0; dataset.tasks.len()],
        no_tasks: dataset.tasks.is_empty(),
        ..Default::default()
    };
    let dim = dataset.feature_dim();
    let mut seen: BTreeMap<u64, usize> = BTreeMap::new();

    for s in &dataset.samples {
        *seen.entry(s.id).or_default() += 1;
        match report.task_counts.get_mut(s.task_id as usize) {
            Some(c) => *c += 1,
            None => report.invalid_task_ids.push(s.id),
        }
        if s.rounds < 1 {
            report.invalid_rounds.push(s.id);
        }
        let m = &s.features;
        if m.rows() == 0 || m.cols() == 0 {
            report.empty_matrices.push(s.id);
        }
        if Some(m.cols()) != dim {
            report.dimension_mismatches.push(s.id);
        }
        for (idx, v) in m.as_slice().iter().enumerate() {
            if !v.is_finite() {
                report.non_finite.push(NonFiniteEntry {
                    sample_id: s.id,
                    row: idx / m.cols(),
                    col: idx % m.cols(),
                });
            }
        }
    }
    report.duplicate_ids = seen.into_iter().filter_map(|(id, n)| (n > 1).then_some(id)).collect();
    report.empty_tasks = report
        .task_counts
        .iter()
        .enumerate()
        .filter_map(|(i, &n)| (n == 0).then_some(i))
        .collect();
    report
}
