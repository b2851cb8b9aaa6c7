//! Low-rank completion solvers.
//!
//! All solvers fit factorizations `L R^T` by block coordinate descent where every
//! block update is an exact ridge-regularized least-squares solve, column by
//! column ([`single_inverse`], [`cross_inverse`]).

mod cs;
mod lsq;
mod maa;
mod pipeline;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use cs::cs_complete;
pub use lsq::{cross_inverse, cross_inverse_k, single_inverse};
pub use maa::{maa_complete, maa_complete_k};
pub use pipeline::{ppcs_maa_recover, ppcs_maa_recover_k, ppcs_recover};

use crate::matrix::{BinaryIndexMatrix, RecoveredMatrix};
use crate::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_REL_TOL: f64 = 1e-6;

/// Default target rank for an n x t matrix: max(1, round(min(n, t) / 10)).
pub fn default_rank(n: usize, t: usize) -> usize {
    ((n.min(t) as f64 / 10.0).round() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Target rank of single-attribute fits and of the shared component.
    pub rank: usize,
    /// Rank of each private component in joint fits; `None` means `rank`.
    #[serde(default)]
    pub private_rank: Option<usize>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

fn default_rel_tol() -> f64 {
    DEFAULT_REL_TOL
}

impl SolverConfig {
    pub fn new(rank: usize) -> Self {
        Self {
            rank,
            private_rank: None,
            lambda: DEFAULT_LAMBDA,
            max_iters: DEFAULT_MAX_ITERS,
            rel_tol: DEFAULT_REL_TOL,
            seed: 0,
        }
    }

    /// Defaults for an n x t problem.
    pub fn for_shape(n: usize, t: usize) -> Self {
        Self::new(default_rank(n, t))
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_private_rank(mut self, r: usize) -> Self {
        self.private_rank = Some(r);
        self
    }

    pub fn with_max_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }

    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }

    pub fn private_rank(&self) -> usize {
        self.private_rank.unwrap_or(self.rank)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.rank == 0 {
            return bad("rank must be at least 1".into());
        }
        if self.private_rank == Some(0) {
            return bad("private rank must be at least 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            ));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return bad(format!("rel_tol must be > 0, got {}", self.rel_tol));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Objective after each full update sweep.
    pub objective_trace: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Root-mean-square residual on observed entries, one per attribute.
    pub observed_rms: Vec<f64>,
}

impl SolveReport {
    /// `iteration,objective` lines with a header, for convergence plots.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,objective\n");
        for (i, y) in self.objective_trace.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, y);
        }
        out
    }

    pub fn write_trace(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.trace_csv()).map_err(|e| Error::io(path, e))
    }
}

/// A low-rank matrix held as `left * right^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
}

impl FactorPair {
    pub fn new(left: DMatrix<f64>, right: DMatrix<f64>) -> Result<Self> {
        if left.ncols() != right.ncols() || left.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                context: "factor pair",
                left: left.shape(),
                right: right.shape(),
            });
        }
        Ok(Self { left, right })
    }

    pub fn rank(&self) -> usize {
        self.left.ncols()
    }

    pub fn product(&self) -> DMatrix<f64> {
        &self.left * self.right.transpose()
    }

    pub(crate) fn penalty(&self) -> f64 {
        self.left.norm_squared() + self.right.norm_squared()
    }
}

/// Shared and private components of a joint multi-attribute fit.
#[derive(Debug, Clone, PartialEq)]
pub struct JointEstimate {
    pub shared: FactorPair,
    pub private: Vec<FactorPair>,
}

impl JointEstimate {
    pub fn shared_component(&self) -> DMatrix<f64> {
        self.shared.product()
    }

    pub fn private_component(&self, k: usize) -> DMatrix<f64> {
        self.private[k].product()
    }

    /// Â_k = Û + Δ̂_k.
    pub fn estimate(&self, k: usize) -> Result<RecoveredMatrix> {
        RecoveredMatrix::new(self.shared_component() + self.private_component(k))
    }

    pub fn estimates(&self) -> Result<Vec<RecoveredMatrix>> {
        let shared = self.shared_component();
        self.private
            .iter()
            .map(|p| RecoveredMatrix::new(&shared + p.product()))
            .collect()
    }
}

/// i.i.d. Uniform(-0.5, 0.5) / sqrt(r) entries.
pub(crate) fn random_factor(rows: usize, r: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let scale = (r as f64).sqrt();
    // Column-major fill so the draw order is fixed.
    let values: Vec<f64> = (0..rows * r)
        .map(|_| rng.random_range(-0.5..0.5) / scale)
        .collect();
    DMatrix::from_vec(rows, r, values)
}

/// ||B.(fit) - S||_F^2 and the observed-entry count.
pub(crate) fn masked_sq_residual(
    fit: &DMatrix<f64>,
    target: &DMatrix<f64>,
    mask: &BinaryIndexMatrix,
) -> (f64, usize) {
    let mut acc = 0.0;
    let mut count = 0;
    for ((f, s), &b) in fit.iter().zip(target.iter()).zip(mask.as_bools().iter()) {
        if b {
            let d = f - s;
            acc += d * d;
            count += 1;
        }
    }
    (acc, count)
}

pub(crate) fn masked_difference(
    target: &DMatrix<f64>,
    fit: &DMatrix<f64>,
    mask: &BinaryIndexMatrix,
) -> DMatrix<f64> {
    let mut out = target.clone();
    for ((o, f), &b) in out.iter_mut().zip(fit.iter()).zip(mask.as_bools().iter()) {
        if b {
            *o -= f;
        } else {
            *o = 0.0;
        }
    }
    out
}

pub(crate) fn relative_change(prev: f64, cur: f64) -> f64 {
    let denom = prev.abs().max(f64::MIN_POSITIVE);
    (prev - cur).abs() / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        assert_eq!(default_rank(50, 120), 5);
        assert_eq!(default_rank(3, 100), 1);
        let c = SolverConfig::for_shape(50, 120);
        assert_eq!(c.rank, 5);
        assert_eq!(c.lambda, 0.1);
        assert_eq!(c.max_iters, 200);
        assert_eq!(c.rel_tol, 1e-6);
        assert_eq!(c.private_rank(), 5);
        c.validate().unwrap();
    }

    #[test]
    fn serde_fills_defaults() {
        let c: SolverConfig = serde_json::from_str(r#"{"rank": 3}"#).unwrap();
        assert_eq!(c, SolverConfig::new(3));
        assert!(serde_json::from_str::<SolverConfig>(r#"{"rank": 3, "mu": 1}"#).is_err());
    }

    #[test]
    fn invalid_configs() {
        assert!(SolverConfig::new(0).validate().is_err());
        assert!(SolverConfig::new(2).with_lambda(-1.0).validate().is_err());
        assert!(SolverConfig::new(2).with_max_iters(0).validate().is_err());
        assert!(SolverConfig::new(2).with_rel_tol(0.0).validate().is_err());
        assert!(SolverConfig::new(2)
            .with_private_rank(0)
            .validate()
            .is_err());
    }

    #[test]
    fn trace_csv_layout() {
        let rep = SolveReport {
            objective_trace: vec![2.5, 1.0],
            iterations_used: 2,
            converged: true,
            observed_rms: vec![0.0],
        };
        assert_eq!(rep.trace_csv(), "iteration,objective\n1,2.5\n2,1\n");
    }
}
