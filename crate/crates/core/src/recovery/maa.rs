//! Joint completion of k attribute matrices sharing one low-rank component:
//!
//! ```text
//! min sum_k ||B_k.(L_U R_U^T + L_k R_k^T) - S_k||_F^2
//!     + lambda (||L_U||^2 + ||R_U||^2 + sum_k ||L_k||^2 + ||R_k||^2)
//! ```
//!
//! One sweep updates R_U, L_U against the private residuals (stacked over all
//! attributes), then each R_k, L_k against its shared residual.

use nalgebra::DMatrix;

use super::cs::check_problem;
use super::{
    cross_inverse_k, masked_difference, masked_sq_residual, random_factor, relative_change,
    single_inverse, FactorPair, JointEstimate, SolveReport, SolverConfig,
};
use crate::matrix::{check_same_shape, BinaryIndexMatrix};
use crate::{seed, Error, Result};

/// Two-attribute joint completion.
pub fn maa_complete(
    s1: &DMatrix<f64>,
    s2: &DMatrix<f64>,
    b1: &BinaryIndexMatrix,
    b2: &BinaryIndexMatrix,
    cfg: &SolverConfig,
) -> Result<(JointEstimate, SolveReport)> {
    maa_complete_k(&[s1, s2], &[b1, b2], cfg)
}

fn joint_objective(
    targets: &[DMatrix<f64>],
    masks: &[&BinaryIndexMatrix],
    shared: &FactorPair,
    private: &[FactorPair],
    lambda: f64,
) -> f64 {
    let u = shared.product();
    let mut y = lambda * shared.penalty();
    for ((target, mask), p) in targets.iter().zip(masks).zip(private) {
        let fit = &u + p.product();
        y += masked_sq_residual(&fit, target, mask).0 + lambda * p.penalty();
    }
    y
}

/// k-attribute joint completion (k >= 2).
pub fn maa_complete_k(
    data: &[&DMatrix<f64>],
    masks: &[&BinaryIndexMatrix],
    cfg: &SolverConfig,
) -> Result<(JointEstimate, SolveReport)> {
    cfg.validate()?;
    let k = data.len();
    if k < 2 {
        return Err(Error::TooFewAttributes(k));
    }
    if masks.len() != k {
        return Err(Error::InvalidConfig(format!(
            "{} masks for {k} attributes",
            masks.len()
        )));
    }
    let shape = data[0].shape();
    for (s, b) in data.iter().zip(masks) {
        check_same_shape("joint completion input", s.shape(), shape)?;
        check_problem(s, b, cfg.rank.max(cfg.private_rank()))?;
    }

    let (n, t) = shape;
    let (r_shared, r_private) = (cfg.rank, cfg.private_rank());
    let lambda = cfg.lambda;

    let mut rng = seed::rng(cfg.seed);
    let mut shared = FactorPair {
        left: random_factor(n, r_shared, &mut rng),
        right: DMatrix::zeros(t, r_shared),
    };
    let private_left: Vec<DMatrix<f64>> = (0..k)
        .map(|_| random_factor(n, r_private, &mut rng))
        .collect();
    let mut private: Vec<FactorPair> = private_left
        .into_iter()
        .map(|left| FactorPair {
            left,
            right: random_factor(t, r_private, &mut rng),
        })
        .collect();

    let targets: Vec<DMatrix<f64>> = data
        .iter()
        .zip(masks)
        .map(|(s, b)| b.mask_values(s))
        .collect();
    let masks_t: Vec<BinaryIndexMatrix> = masks.iter().map(|b| b.transpose()).collect();
    let masks_t_ref: Vec<&BinaryIndexMatrix> = masks_t.iter().collect();

    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        // Shared block against the private residuals.
        let resid: Vec<DMatrix<f64>> = targets
            .iter()
            .zip(masks)
            .zip(&private)
            .map(|((s, b), p)| masked_difference(s, &p.product(), b))
            .collect();
        let resid_ref: Vec<&DMatrix<f64>> = resid.iter().collect();
        shared.right = cross_inverse_k(masks, &shared.left, lambda, &resid_ref)?;
        let resid_t: Vec<DMatrix<f64>> = resid.iter().map(|x| x.transpose()).collect();
        let resid_t_ref: Vec<&DMatrix<f64>> = resid_t.iter().collect();
        shared.left = cross_inverse_k(&masks_t_ref, &shared.right, lambda, &resid_t_ref)?;

        // Private blocks against the shared residual.
        let u = shared.product();
        for (idx, p) in private.iter_mut().enumerate() {
            let z = masked_difference(&targets[idx], &u, masks[idx]);
            p.right = single_inverse(masks[idx], &p.left, lambda, &z)?;
            p.left = single_inverse(&masks_t[idx], &p.right, lambda, &z.transpose())?;
        }

        let y = joint_objective(&targets, masks, &shared, &private, lambda);
        let done = trace
            .last()
            .is_some_and(|&prev| relative_change(prev, y) < cfg.rel_tol);
        trace.push(y);
        if done || y == 0.0 {
            converged = true;
            break;
        }
    }

    let u = shared.product();
    let observed_rms = targets
        .iter()
        .zip(masks)
        .zip(&private)
        .map(|((s, b), p)| {
            let (sq, count) = masked_sq_residual(&(&u + p.product()), s, b);
            (sq / count as f64).sqrt()
        })
        .collect();
    let report = SolveReport {
        iterations_used: trace.len(),
        objective_trace: trace,
        converged,
        observed_rms,
    };
    Ok((JointEstimate { shared, private }, report))
}
