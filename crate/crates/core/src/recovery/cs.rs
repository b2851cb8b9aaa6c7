use nalgebra::DMatrix;

use super::{
    masked_sq_residual, random_factor, relative_change, single_inverse, FactorPair, SolveReport,
    SolverConfig,
};
use crate::matrix::{check_same_shape, BinaryIndexMatrix, RecoveredMatrix};
use crate::{seed, Error, Result};

pub(crate) fn check_problem(
    data: &DMatrix<f64>,
    mask: &BinaryIndexMatrix,
    rank: usize,
) -> Result<()> {
    check_same_shape("completion input", data.shape(), mask.shape())?;
    let (n, t) = data.shape();
    if n == 0 || t == 0 {
        return Err(Error::EmptyMatrix(n, t));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("completion input"));
    }
    if mask.observed_count() == 0 {
        return Err(Error::NothingObserved);
    }
    if rank > n.min(t) {
        return Err(Error::InvalidConfig(format!(
            "rank {rank} exceeds min(n, t) = {}",
            n.min(t)
        )));
    }
    Ok(())
}

/// Single-attribute completion
/// `min ||B.(L R^T) - S||_F^2 + lambda (||L||_F^2 + ||R||_F^2)`
/// by alternating column-wise ridge solves. `data` must already be masked; any
/// value stored at an unobserved position is ignored.
pub fn cs_complete(
    data: &DMatrix<f64>,
    mask: &BinaryIndexMatrix,
    cfg: &SolverConfig,
) -> Result<(RecoveredMatrix, SolveReport)> {
    cfg.validate()?;
    check_problem(data, mask, cfg.rank)?;
    let (pair, report) = fit(data, mask, cfg)?;
    Ok((RecoveredMatrix::new(pair.product())?, report))
}

pub(crate) fn fit(
    data: &DMatrix<f64>,
    mask: &BinaryIndexMatrix,
    cfg: &SolverConfig,
) -> Result<(FactorPair, SolveReport)> {
    let (n, t) = data.shape();
    let r = cfg.rank;
    let mut rng = seed::rng(cfg.seed);
    let mut left = random_factor(n, r, &mut rng);
    let mut right = DMatrix::zeros(t, r);

    let target = mask.mask_values(data);
    let target_t = target.transpose();
    let mask_t = mask.transpose();

    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        right = single_inverse(mask, &left, cfg.lambda, &target)?;
        left = single_inverse(&mask_t, &right, cfg.lambda, &target_t)?;

        let fit = &left * right.transpose();
        let (sq, _) = masked_sq_residual(&fit, &target, mask);
        let y = sq + cfg.lambda * (left.norm_squared() + right.norm_squared());
        let done = trace
            .last()
            .is_some_and(|&prev| relative_change(prev, y) < cfg.rel_tol);
        trace.push(y);
        if done || y == 0.0 {
            converged = true;
            break;
        }
    }

    let pair = FactorPair { left, right };
    let fit = pair.product();
    let (sq, count) = masked_sq_residual(&fit, &target, mask);
    let report = SolveReport {
        iterations_used: trace.len(),
        objective_trace: trace,
        converged,
        observed_rms: vec![(sq / count as f64).sqrt()],
    };
    Ok((pair, report))
}
