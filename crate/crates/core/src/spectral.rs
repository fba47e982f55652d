//! Singular value spectra of token feature matrices and the quantities derived
//! from them: singular value entropy (informativeness) and the largest
//! singular value ratio (task difficulty).
//!
//! Singular values are obtained as square roots of the eigenvalues of the
//! smaller Gram matrix (`M Mᵀ` when `L <= d`, otherwise `Mᵀ M`), diagonalized
//! by a cyclic Jacobi sweep.

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

/// Jacobi stops once `off(A) < JACOBI_TOL * ‖A‖_F`.
pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 64;

/// Singular values in non-increasing order, all non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    /// Builds a spectrum from arbitrary values: sorted descending, must be
    /// finite and non-negative.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "singular value {v} is not a finite non-negative number"
            )));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn checked_sum(&self) -> Result<f64> {
        let sum: f64 = self.values.iter().sum();
        if sum > 0.0 {
            Ok(sum)
        } else {
            Err(Error::ZeroMatrix)
        }
    }
}

pub fn singular_values(matrix: &FeatureMatrix) -> Result<SingularSpectrum> {
    if let Some((r, c)) = matrix.first_non_finite() {
        return Err(Error::NonFinite(format!("feature matrix entry ({r}, {c})")));
    }
    let (n, mut gram) = gram_matrix(matrix);
    if n == 0 {
        return Ok(SingularSpectrum { values: Vec::new() });
    }
    let trace: f64 = (0..n).map(|i| gram[i * n + i]).sum();
    let mut eig = jacobi_eigenvalues(&mut gram, n);

    // Eigenvalues inside the Gram matrix's rounding band are zero in exact
    // arithmetic; negatives are rounding noise as well.
    let floor = n as f64 * f64::EPSILON * trace;
    for v in eig.iter_mut() {
        *v = if *v <= floor { 0.0 } else { v.sqrt() };
    }
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(SingularSpectrum { values: eig })
}

/// Singular value entropy `-Σ q ln q` with `q_j = σ_j / Σσ`.
pub fn informative_value(spectrum: &SingularSpectrum) -> Result<f64> {
    let sum = spectrum.checked_sum()?;
    let h = spectrum
        .values
        .iter()
        .filter(|&&s| s > 0.0)
        .map(|&s| {
            let q = s / sum;
            -q * q.ln()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// Largest singular value ratio `σ_max / Σσ`.
pub fn lsvr(spectrum: &SingularSpectrum) -> Result<f64> {
    let sum = spectrum.checked_sum()?;
    Ok(spectrum.values[0] / sum)
}

/// Mean largest singular value ratio over a task's samples.
pub fn task_difficulty(spectra: &[SingularSpectrum]) -> Result<f64> {
    if spectra.is_empty() {
        return Err(Error::InvalidArgument("task difficulty of an empty task".into()));
    }
    let mut total = 0.0;
    for s in spectra {
        total += lsvr(s)?;
    }
    Ok(total / spectra.len() as f64)
}

/// Gram matrix of the smaller side, row-major `n x n` in f64.
fn gram_matrix(m: &FeatureMatrix) -> (usize, Vec<f64>) {
    let (rows, cols) = (m.rows(), m.cols());
    let data = m.as_slice();
    if rows <= cols {
        let n = rows;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            let ri = m.row(i);
            for j in 0..=i {
                let rj = m.row(j);
                let v: f64 = ri.iter().zip(rj).map(|(&a, &b)| a as f64 * b as f64).sum();
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        (n, g)
    } else {
        let n = cols;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = (0..rows)
                    .map(|r| data[r * cols + i] as f64 * data[r * cols + j] as f64)
                    .sum();
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        (n, g)
    }
}

/// Eigenvalues of the symmetric matrix `a` (row-major, destroyed) by cyclic
/// Jacobi rotations.
pub(crate) fn jacobi_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    let frob = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = JACOBI_TOL * frob;
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(a, n);
        if off <= tol || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}
