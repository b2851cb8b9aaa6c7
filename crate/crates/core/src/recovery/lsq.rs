//! Column-wise ridge least squares.
//!
//! For column i of the targets, the design stacks the masked copies of the factor
//! (one block per attribute) over `sqrt(lambda) * I_r`:
//!
//! ```text
//! P_i = [Diag(B_1(:,i)) L; ...; Diag(B_k(:,i)) L; sqrt(lambda) I_r]
//! Q_i = [X_1(:,i); ...; X_k(:,i); 0_r]
//! ```
//!
//! and `Y(i,:)` minimizes `||P_i y - Q_i||`. Rows of `P_i` that the mask zeroes
//! contribute nothing and are left out of the stacked system, which is solved
//! through a Householder QR of `P_i` rather than the normal equations.

use nalgebra::{DMatrix, DVector};

use crate::matrix::BinaryIndexMatrix;
use crate::{par, Error, Result};

const DEFICIENCY_TOL: f64 = 1e-12;

fn solve_column(
    column: usize,
    blocks: &[(&BinaryIndexMatrix, &DMatrix<f64>)],
    factor: &DMatrix<f64>,
    ridge: f64,
) -> Result<DVector<f64>> {
    let r = factor.ncols();
    let observed: usize = blocks
        .iter()
        .map(|(mask, _)| {
            mask.as_bools()
                .column(column)
                .iter()
                .filter(|&&b| b)
                .count()
        })
        .sum();
    let m = observed + r;
    let mut design = DMatrix::zeros(m, r);
    let mut rhs = DVector::zeros(m);
    let mut row = 0;
    for (mask, target) in blocks {
        for j in 0..factor.nrows() {
            if mask.get(j, column) {
                design.row_mut(row).copy_from(&factor.row(j));
                rhs[row] = target[(j, column)];
                row += 1;
            }
        }
    }
    for d in 0..r {
        design[(row + d, d)] = ridge;
    }

    let qr = design.qr();
    qr.q_tr_mul(&mut rhs);
    let upper = qr.r();
    let max_diag = upper.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if max_diag == 0.0
        || upper
            .diagonal()
            .iter()
            .any(|v| v.abs() <= DEFICIENCY_TOL * max_diag)
    {
        return Err(Error::RankDeficient { column });
    }
    upper
        .solve_upper_triangular(&rhs.rows(0, r).into_owned())
        .ok_or(Error::RankDeficient { column })
}

fn check_blocks(
    blocks: &[(&BinaryIndexMatrix, &DMatrix<f64>)],
    factor: &DMatrix<f64>,
    lambda: f64,
) -> Result<(usize, usize)> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if factor.ncols() == 0 {
        return Err(Error::InvalidConfig(
            "factor must have at least one column".into(),
        ));
    }
    let (first_mask, _) = blocks
        .first()
        .ok_or_else(|| Error::InvalidConfig("no target blocks".into()))?;
    let shape = first_mask.shape();
    for (mask, target) in blocks {
        crate::matrix::check_same_shape("column solve mask", mask.shape(), shape)?;
        crate::matrix::check_same_shape("column solve target", target.shape(), shape)?;
    }
    if factor.nrows() != shape.0 {
        return Err(Error::DimensionMismatch {
            context: "column solve factor",
            left: factor.shape(),
            right: shape,
        });
    }
    Ok(shape)
}

/// k-block generalization of [`cross_inverse`]; with one block it is
/// [`single_inverse`]. Returns the t x r matrix whose row i solves column i.
pub fn cross_inverse_k(
    masks: &[&BinaryIndexMatrix],
    factor: &DMatrix<f64>,
    lambda: f64,
    targets: &[&DMatrix<f64>],
) -> Result<DMatrix<f64>> {
    if masks.len() != targets.len() {
        return Err(Error::InvalidConfig(format!(
            "{} masks for {} targets",
            masks.len(),
            targets.len()
        )));
    }
    let blocks: Vec<(&BinaryIndexMatrix, &DMatrix<f64>)> =
        masks.iter().copied().zip(targets.iter().copied()).collect();
    let (_, t) = check_blocks(&blocks, factor, lambda)?;
    let ridge = lambda.sqrt();
    let rows = par::try_map(t, |i| solve_column(i, &blocks, factor, ridge))?;
    let r = factor.ncols();
    let mut out = DMatrix::zeros(t, r);
    for (i, y) in rows.iter().enumerate() {
        out.set_row(i, &y.transpose());
    }
    Ok(out)
}

/// `Y(i,:) = argmin ||Diag(B(:,i)) L y - X(:,i)||^2 + lambda ||y||^2` for every column i.
pub fn single_inverse(
    mask: &BinaryIndexMatrix,
    factor: &DMatrix<f64>,
    lambda: f64,
    target: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    cross_inverse_k(&[mask], factor, lambda, &[target])
}

/// Two-attribute column solve sharing one factor across both masked systems.
pub fn cross_inverse(
    mask1: &BinaryIndexMatrix,
    mask2: &BinaryIndexMatrix,
    factor: &DMatrix<f64>,
    lambda: f64,
    target1: &DMatrix<f64>,
    target2: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    cross_inverse_k(&[mask1, mask2], factor, lambda, &[target1, target2])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn exact_solve_with_full_mask() {
        let l = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 4.0, 2.0, 1.0, -1.0]);
        let y = single_inverse(&BinaryIndexMatrix::ones(2, 3), &l, 0.0, &x).unwrap();
        let expected = l.clone().try_inverse().unwrap() * &x;
        assert!((y.transpose() - expected).amax() < 1e-12);
    }

    #[test]
    fn huge_ridge_drives_to_zero() {
        let l = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = DMatrix::from_element(3, 4, 1.0);
        let y = single_inverse(&BinaryIndexMatrix::ones(3, 4), &l, 1e12, &x).unwrap();
        assert!(y.amax() < 1e-10);
    }

    #[test]
    fn deficient_column_named() {
        let mut s = 7;
        let l = DMatrix::from_fn(4, 3, |_, _| lcg(&mut s));
        let x = DMatrix::from_fn(4, 5, |_, _| lcg(&mut s));
        // Column 2 observes only one row: three unknowns, no ridge.
        let mask = BinaryIndexMatrix::from_fn(4, 5, |i, j| j != 2 || i == 0);
        match single_inverse(&mask, &l, 0.0, &x) {
            Err(Error::RankDeficient { column }) => assert_eq!(column, 2),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        // The ridge makes the same system well posed.
        assert!(single_inverse(&mask, &l, 0.1, &x).is_ok());
    }

    #[test]
    fn cross_with_empty_second_block_is_single() {
        let mut s = 3;
        let l = DMatrix::from_fn(8, 3, |_, _| lcg(&mut s));
        let x1 = DMatrix::from_fn(8, 6, |_, _| lcg(&mut s));
        let x2 = DMatrix::from_fn(8, 6, |_, _| lcg(&mut s));
        let b1 = BinaryIndexMatrix::from_fn(8, 6, |i, j| (i * 7 + j * 3) % 4 != 0);
        let b2 = BinaryIndexMatrix::zeros(8, 6);
        let single = single_inverse(&b1, &l, 0.1, &x1).unwrap();
        let cross = cross_inverse(&b1, &b2, &l, 0.1, &x1, &x2).unwrap();
        assert_eq!(single, cross);
    }

    #[test]
    fn zero_targets_give_zero() {
        let l = DMatrix::from_element(5, 2, 0.3);
        let z = DMatrix::zeros(5, 4);
        let b = BinaryIndexMatrix::ones(5, 4);
        let y = cross_inverse(&b, &b, &l, 0.5, &z, &z).unwrap();
        assert_eq!(y, DMatrix::zeros(4, 2));
    }

    #[test]
    fn shape_errors() {
        let l = DMatrix::from_element(5, 2, 0.3);
        let x = DMatrix::zeros(4, 4);
        assert!(single_inverse(&BinaryIndexMatrix::ones(4, 4), &l, 0.1, &x).is_err());
        assert!(single_inverse(&BinaryIndexMatrix::ones(5, 4), &l, 0.1, &x).is_err());
        assert!(single_inverse(
            &BinaryIndexMatrix::ones(5, 4),
            &l,
            -0.1,
            &DMatrix::zeros(5, 4)
        )
        .is_err());
    }
}
