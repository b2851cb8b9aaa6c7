//! Independent reference solvers.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use ppcs_core::jsd::WaveletBasis;
use ppcs_core::matrix::BinaryIndexMatrix;

/// Exact optimum of min ||v||_1 + ||d1||_1 + ||d2||_1 s.t. Psi v + d_k = a_k,
/// by simplex over the split x = x+ - x-.
pub fn jsd_lp(a1: &[f64], a2: &[f64], basis: &WaveletBasis) -> f64 {
    let p = basis.padded_len();
    let psi = basis.matrix();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..3 * p)
        .map(|_| {
            (
                lp.add_var(1.0, (0.0, f64::INFINITY)),
                lp.add_var(1.0, (0.0, f64::INFINITY)),
            )
        })
        .collect();
    for (k, a) in [a1, a2].iter().enumerate() {
        for i in 0..p {
            let mut row = Vec::with_capacity(2 * p + 2);
            for (j, &(pos, neg)) in vars.iter().take(p).enumerate() {
                row.push((pos, psi[(i, j)]));
                row.push((neg, -psi[(i, j)]));
            }
            let (pos, neg) = vars[p * (k + 1) + i];
            row.push((pos, 1.0));
            row.push((neg, -1.0));
            let rhs = a.get(i).copied().unwrap_or(0.0);
            lp.add_constraint(&row[..], ComparisonOp::Eq, rhs);
        }
    }
    lp.solve().expect("oracle LP is feasible").objective()
}

/// Row i: (sum_k w L^T D_k L + lambda I)^{-1} sum_k w L^T D_k X_k(:,i).
pub fn normal_equations(
    blocks: &[(&BinaryIndexMatrix, &DMatrix<f64>)],
    l: &DMatrix<f64>,
    lambda: f64,
    weight: f64,
) -> DMatrix<f64> {
    let (n, r) = l.shape();
    let t = blocks[0].1.ncols();
    let mut out = DMatrix::zeros(t, r);
    for i in 0..t {
        let mut lhs = DMatrix::identity(r, r) * lambda;
        let mut rhs = DVector::zeros(r);
        for (mask, x) in blocks {
            let d = DMatrix::from_diagonal(&DVector::from_fn(n, |j, _| {
                if mask.get(j, i) {
                    1.0
                } else {
                    0.0
                }
            }));
            lhs += weight * l.transpose() * &d * l;
            rhs += weight * l.transpose() * &d * x.column(i);
        }
        let y = lhs.lu().solve(&rhs).expect("oracle system is nonsingular");
        out.set_row(i, &y.transpose());
    }
    out
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Largest complete submatrix by exhaustion over row subsets: for a fixed row
/// set the best column set is every column complete on those rows.
pub fn brute_force_area(present: &DMatrix<bool>) -> usize {
    let (n, t) = present.shape();
    assert!(n <= 16);
    (0u32..1 << n)
        .map(|rows| {
            let k = rows.count_ones() as usize;
            let cols = (0..t)
                .filter(|&j| (0..n).all(|i| rows & (1 << i) == 0 || present[(i, j)]))
                .count();
            k * cols
        })
        .max()
        .unwrap()
}
