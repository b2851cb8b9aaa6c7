//! Dense-matrix foundations: masks, masking, norms, NSE, spectrum analysis and
//! per-attribute normalization.
//!
//! Missing entries are stored as zeros next to an explicit [`BinaryIndexMatrix`];
//! NaN is never used as a missing marker.

mod csv;

pub use self::csv::{read_mask_csv, read_matrix_csv, write_mask_csv, write_matrix_csv};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative threshold (against the largest singular value) for counting a
/// singular value as nonzero.
pub const RANK_EPS: f64 = 1e-10;

fn shape(m: &DMatrix<f64>) -> (usize, usize) {
    m.shape()
}

fn check_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn check_same_shape(
    context: &'static str,
    left: (usize, usize),
    right: (usize, usize),
) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            left,
            right,
        })
    }
}

/// Complete n x t readings of one attribute (ground truth).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentMatrix(DMatrix<f64>);

impl EnvironmentMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::EmptyMatrix(data.nrows(), data.ncols()));
        }
        check_finite(&data, "environment matrix")?;
        Ok(Self(data))
    }

    pub fn from_row_slice(n: usize, t: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * t {
            return Err(Error::DimensionMismatch {
                context: "from_row_slice",
                left: (n, t),
                right: (values.len(), 1),
            });
        }
        Self::new(DMatrix::from_row_slice(n, t, values))
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }
}

/// 0/1 mask: `true` marks an observed entry, `false` a missing one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryIndexMatrix(DMatrix<bool>);

impl BinaryIndexMatrix {
    pub fn from_bools(mask: DMatrix<bool>) -> Self {
        Self(mask)
    }

    pub fn ones(n: usize, t: usize) -> Self {
        Self(DMatrix::from_element(n, t, true))
    }

    pub fn zeros(n: usize, t: usize) -> Self {
        Self(DMatrix::from_element(n, t, false))
    }

    pub fn from_fn(n: usize, t: usize, f: impl FnMut(usize, usize) -> bool) -> Self {
        Self(DMatrix::from_fn(n, t, f))
    }

    /// Build from a numeric matrix whose entries must be exactly 0 or 1.
    pub fn from_f64(m: &DMatrix<f64>) -> Result<Self> {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidMask {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Ok(Self(m.map(|v| v == 1.0)))
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        self.0.map(|b| if b { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.0[(i, j)]
    }

    pub fn as_bools(&self) -> &DMatrix<bool> {
        &self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn observed_count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn missing_count(&self) -> usize {
        self.0.len() - self.observed_count()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(|&b| b)
    }

    /// Zero out every unobserved entry of `data`.
    pub fn mask_values(&self, data: &DMatrix<f64>) -> DMatrix<f64> {
        debug_assert_eq!(data.shape(), self.shape());
        data.zip_map(&self.0, |v, b| if b { v } else { 0.0 })
    }
}

/// Observed matrix S = B.A with missing entries stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SensedMatrix {
    data: DMatrix<f64>,
    mask: BinaryIndexMatrix,
}

impl SensedMatrix {
    /// The mask is applied to `data` on construction.
    pub fn new(data: DMatrix<f64>, mask: BinaryIndexMatrix) -> Result<Self> {
        check_same_shape("sensed matrix", shape(&data), mask.shape())?;
        let data = mask.mask_values(&data);
        check_finite(&data, "sensed matrix")?;
        Ok(Self { data, mask })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn mask(&self) -> &BinaryIndexMatrix {
        &self.mask
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.shape()
    }

    pub fn into_parts(self) -> (DMatrix<f64>, BinaryIndexMatrix) {
        (self.data, self.mask)
    }
}

/// A completed estimate of an environment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredMatrix(DMatrix<f64>);

impl RecoveredMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        check_finite(&data, "recovered matrix")?;
        Ok(Self(data))
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }
}

/// Singular values of a matrix plus the derived rank diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub singular_values: Vec<f64>,
    pub numerical_rank: usize,
}

impl SpectrumReport {
    /// Share of the total singular-value mass carried by the top `r_hat` values.
    pub fn energy_fraction(&self, r_hat: usize) -> f64 {
        let total: f64 = self.singular_values.iter().sum();
        if total == 0.0 {
            return if r_hat == 0 { 0.0 } else { 1.0 };
        }
        let head: f64 = self.singular_values.iter().take(r_hat).sum();
        (head / total).min(1.0)
    }
}

/// Per-attribute scale used to bring observed values into [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub alpha: f64,
}

pub fn frobenius_norm(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Entrywise l1 norm, sum of |X(i,j)|.
pub fn l1_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

pub fn apply_mask(a: &EnvironmentMatrix, b: &BinaryIndexMatrix) -> Result<SensedMatrix> {
    check_same_shape("apply_mask", a.shape(), b.shape())?;
    SensedMatrix::new(a.data().clone(), b.clone())
}

/// Normalized square error ||A - Â||_F / ||A||_F.
pub fn nse(a: &EnvironmentMatrix, a_hat: &RecoveredMatrix) -> Result<f64> {
    check_same_shape("nse", a.shape(), a_hat.shape())?;
    let denom = a.data().norm();
    if denom == 0.0 {
        return Err(Error::ZeroNormGroundTruth);
    }
    Ok((a.data() - a_hat.data()).norm() / denom)
}

/// Keep observed entries of `s` and take the estimate everywhere else.
pub fn retain_observed(s: &SensedMatrix, a_hat: &RecoveredMatrix) -> Result<RecoveredMatrix> {
    check_same_shape("retain_observed", s.shape(), a_hat.shape())?;
    let mut out = a_hat.data().clone();
    for ((o, v), &b) in out
        .iter_mut()
        .zip(s.data().iter())
        .zip(s.mask().as_bools().iter())
    {
        if b {
            *o = *v;
        }
    }
    RecoveredMatrix::new(out)
}

pub fn svd_spectrum(x: &DMatrix<f64>) -> Result<SpectrumReport> {
    check_finite(x, "svd input")?;
    if x.is_empty() {
        return Ok(SpectrumReport {
            singular_values: Vec::new(),
            numerical_rank: 0,
        });
    }
    let mut singular_values: Vec<f64> = x
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .map(|s| s.max(0.0))
        .collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let top = singular_values[0];
    let numerical_rank = if top > 0.0 {
        singular_values
            .iter()
            .filter(|&&s| s > RANK_EPS * top)
            .count()
    } else {
        0
    };
    Ok(SpectrumReport {
        singular_values,
        numerical_rank,
    })
}

pub fn normalize(s: &SensedMatrix) -> Result<(SensedMatrix, NormalizationRecord)> {
    let alpha = s
        .data()
        .iter()
        .zip(s.mask().as_bools().iter())
        .filter(|(_, &b)| b)
        .fold(0.0f64, |acc, (v, _)| acc.max(v.abs()));
    if alpha == 0.0 {
        return Err(Error::DegenerateAttribute);
    }
    let scaled = SensedMatrix {
        data: s.data() / alpha,
        mask: s.mask().clone(),
    };
    Ok((scaled, NormalizationRecord { alpha }))
}

pub fn denormalize(a_hat: &RecoveredMatrix, rec: NormalizationRecord) -> Result<RecoveredMatrix> {
    if !(rec.alpha > 0.0 && rec.alpha.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "normalization scale must be positive, got {}",
            rec.alpha
        )));
    }
    RecoveredMatrix::new(a_hat.data() * rec.alpha)
}
