//! Joint sparse decomposition of two signals into a shared component that is
//! sparse in an orthonormal Haar basis plus two private residuals:
//!
//! ```text
//! a_1 = Psi v + delta_1,  a_2 = Psi v + delta_2,
//! minimize ||v||_1 + ||delta_1||_1 + ||delta_2||_1
//! ```
//!
//! The basis-pursuit program is solved with ADMM; the stopping rule is a
//! duality-gap certificate built from the scaled dual iterate.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::matrix::check_same_shape;
use crate::{par, Error, Result};

/// Orthonormal Haar system on `len().next_power_of_two()` points.
///
/// Column 0 is the constant scaling vector. The remaining columns are wavelets
/// ordered coarse to fine; within a level they are ordered by position. Column
/// `2^j + k` is `+c` on the first half and `-c` on the second half of block
/// `k` of width `p / 2^j`, with `c = sqrt(2^j / p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    matrix: DMatrix<f64>,
    len: usize,
}

impl WaveletBasis {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Unpadded signal length.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn padded_len(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn haar_basis(t: usize) -> WaveletBasis {
    let len = t.max(1);
    let p = len.next_power_of_two();
    let mut m = DMatrix::zeros(p, p);
    let c0 = 1.0 / (p as f64).sqrt();
    m.column_mut(0).fill(c0);
    let mut col = 1;
    let mut blocks = 1;
    while blocks < p {
        let width = p / blocks;
        let c = (blocks as f64 / p as f64).sqrt();
        for k in 0..blocks {
            let start = k * width;
            for i in start..start + width / 2 {
                m[(i, col)] = c;
            }
            for i in start + width / 2..start + width {
                m[(i, col)] = -c;
            }
            col += 1;
        }
        blocks *= 2;
    }
    WaveletBasis { matrix: m, len }
}

/// Result of one decomposition. Vectors are stored at padded length; the padded
/// tail of `shared + private_k` reproduces the zero padding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsdSplit {
    pub len: usize,
    /// Sparse coefficients v with `shared = Psi v`.
    pub coefficients: Vec<f64>,
    pub shared: Vec<f64>,
    pub private1: Vec<f64>,
    pub private2: Vec<f64>,
    /// Final relative duality gap.
    pub gap: f64,
    pub iterations: usize,
}

impl JsdSplit {
    /// ||theta||_1 = ||v||_1 + ||delta_1||_1 + ||delta_2||_1.
    pub fn objective(&self) -> f64 {
        [&self.coefficients, &self.private1, &self.private2]
            .iter()
            .flat_map(|v| v.iter())
            .map(|x| x.abs())
            .sum()
    }

    /// Max entrywise violation of `a_k = shared + private_k` on the unpadded range.
    pub fn feasibility_residual(&self, a1: &[f64], a2: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.len {
            worst = worst.max((self.shared[i] + self.private1[i] - a1[i]).abs());
            worst = worst.max((self.shared[i] + self.private2[i] - a2[i]).abs());
        }
        worst
    }

    fn zero(len: usize, p: usize) -> Self {
        Self {
            len,
            coefficients: vec![0.0; p],
            shared: vec![0.0; p],
            private1: vec![0.0; p],
            private2: vec![0.0; p],
            gap: 0.0,
            iterations: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsdOptions {
    pub max_iters: usize,
    /// Stop once `primal - dual <= gap_tol * max(1, primal)` on the unit-scaled problem.
    pub gap_tol: f64,
    /// Penalty parameter.
    pub rho: f64,
    /// Over-relaxation factor in (0, 2).
    pub relaxation: f64,
    pub check_every: usize,
}

impl Default for JsdOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            gap_tol: 1e-6,
            rho: 10.0,
            relaxation: 1.6,
            check_every: 10,
        }
    }
}

/// theta = (v; d1; d2) as three stacked p-vectors.
#[derive(Clone)]
struct Theta {
    v: DVector<f64>,
    d1: DVector<f64>,
    d2: DVector<f64>,
}

impl Theta {
    fn zeros(p: usize) -> Self {
        Self {
            v: DVector::zeros(p),
            d1: DVector::zeros(p),
            d2: DVector::zeros(p),
        }
    }

    fn scaled(&self, k: f64) -> Theta {
        Theta {
            v: &self.v * k,
            d1: &self.d1 * k,
            d2: &self.d2 * k,
        }
    }

    fn l1(&self) -> f64 {
        self.v.lp_norm(1) + self.d1.lp_norm(1) + self.d2.lp_norm(1)
    }

    fn zip_map(&self, other: &Theta, f: impl Fn(f64, f64) -> f64 + Copy) -> Theta {
        Theta {
            v: self.v.zip_map(&other.v, f),
            d1: self.d1.zip_map(&other.d1, f),
            d2: self.d2.zip_map(&other.d2, f),
        }
    }
}

struct Problem<'a> {
    psi: &'a DMatrix<f64>,
    b1: DVector<f64>,
    b2: DVector<f64>,
}

const SUPPORT_TOL: f64 = 1e-9;
const POLISH_EPS: f64 = 1e-13;

impl Problem<'_> {
    /// (H H^T)^{-1} (h1; h2) with H H^T = [2I I; I 2I].
    fn gram_inverse(h1: &DVector<f64>, h2: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        ((h1 * 2.0 - h2) / 3.0, (h2 * 2.0 - h1) / 3.0)
    }

    /// Euclidean projection onto {theta : H theta = b}.
    fn project(&self, w: &Theta) -> Theta {
        let u = self.psi * &w.v;
        let r1 = &u + &w.d1 - &self.b1;
        let r2 = &u + &w.d2 - &self.b2;
        let (g1, g2) = Self::gram_inverse(&r1, &r2);
        Theta {
            v: &w.v - self.psi.tr_mul(&(&g1 + &g2)),
            d1: &w.d1 - g1,
            d2: &w.d2 - g2,
        }
    }

    /// Dual candidate y = (H H^T)^{-1} H s.
    fn dual_point(&self, s: &Theta) -> DVector<f64> {
        let u = self.psi * &s.v;
        let (y1, y2) = Self::gram_inverse(&(&u + &s.d1), &(&u + &s.d2));
        let p = self.p();
        DVector::from_fn(2 * p, |i, _| if i < p { y1[i] } else { y2[i - p] })
    }
}

impl Problem<'_> {
    fn p(&self) -> usize {
        self.psi.nrows()
    }

    /// Column `j` of H = [Psi I 0; Psi 0 I].
    fn h_column(&self, j: usize) -> DVector<f64> {
        let p = self.p();
        let mut col = DVector::zeros(2 * p);
        match j / p {
            0 => {
                col.rows_mut(0, p).copy_from(&self.psi.column(j));
                col.rows_mut(p, p).copy_from(&self.psi.column(j));
            }
            1 => col[j - p] = 1.0,
            _ => col[j - p] = 1.0,
        }
        col
    }

    /// Solve H_S theta_S = b exactly on the support S of `z`, and correct the
    /// dual estimate `y0` so that H_S^T y matches the sign pattern of `z`.
    /// Returns the feasible candidate (if the restricted system is consistent)
    /// and a dual lower bound.
    fn polish(&self, z: &Theta, y0: &DVector<f64>) -> (Option<Theta>, f64) {
        let p = self.p();
        let flat: Vec<f64> =
            z.v.iter()
                .chain(z.d1.iter())
                .chain(z.d2.iter())
                .copied()
                .collect();
        let support: Vec<usize> = (0..3 * p)
            .filter(|&j| flat[j].abs() > SUPPORT_TOL)
            .collect();
        if support.is_empty() || support.len() > 2 * p {
            return (None, 0.0);
        }
        let cols: Vec<DVector<f64>> = support.iter().map(|&j| self.h_column(j)).collect();
        let hs = DMatrix::from_columns(&cols);
        let b = DVector::from_iterator(2 * p, self.b1.iter().chain(self.b2.iter()).copied());

        let svd = hs.clone().svd(true, true);
        let candidate = svd.solve(&b, POLISH_EPS).ok().and_then(|theta_s| {
            let mut full = vec![0.0; 3 * p];
            for (k, &j) in support.iter().enumerate() {
                full[j] = theta_s[k];
            }
            let th = Theta {
                v: DVector::from_column_slice(&full[..p]),
                d1: DVector::from_column_slice(&full[p..2 * p]),
                d2: DVector::from_column_slice(&full[2 * p..]),
            };
            // Clean up roundoff so the candidate is feasible to working precision.
            let th = self.project(&th);
            (self.residual(&th) <= 1e-12).then_some(th)
        });

        let hsy = hs.tr_mul(y0);
        let target =
            DVector::from_iterator(support.len(), support.iter().map(|&j| flat[j].signum()));
        let dual = hs
            .transpose()
            .svd(true, true)
            .solve(&(target - hsy), POLISH_EPS)
            .map(|delta| self.dual_value(&(y0 + delta)))
            .unwrap_or(0.0);
        (candidate, dual.max(self.dual_value(y0)))
    }

    fn residual(&self, th: &Theta) -> f64 {
        let u = self.psi * &th.v;
        let r1 = (&u + &th.d1 - &self.b1).amax();
        let r2 = (&u + &th.d2 - &self.b2).amax();
        r1.max(r2)
    }

    /// Weak-duality bound b^T y / max(1, ||H^T y||_inf).
    fn dual_value(&self, y: &DVector<f64>) -> f64 {
        let p = self.p();
        let (y1, y2) = (y.rows(0, p), y.rows(p, p));
        let hv = self.psi.tr_mul(&(y1 + y2));
        let inf = hv.amax().max(y1.amax()).max(y2.amax());
        (self.b1.dot(&y1) + self.b2.dot(&y2)).abs() / inf.max(1.0)
    }
}

fn soft_threshold(x: f64, k: f64) -> f64 {
    if x > k {
        x - k
    } else if x < -k {
        x + k
    } else {
        0.0
    }
}

pub fn jsd_decompose(a1: &[f64], a2: &[f64], basis: &WaveletBasis) -> Result<JsdSplit> {
    jsd_decompose_with(a1, a2, basis, &JsdOptions::default())
}

pub fn jsd_decompose_with(
    a1: &[f64],
    a2: &[f64],
    basis: &WaveletBasis,
    opts: &JsdOptions,
) -> Result<JsdSplit> {
    check_same_shape("jsd inputs", (a1.len(), 1), (a2.len(), 1))?;
    if a1.len() > basis.padded_len() || a1.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "jsd basis",
            left: (a1.len(), 1),
            right: (basis.padded_len(), basis.padded_len()),
        });
    }
    if a1.iter().chain(a2).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("jsd input"));
    }
    let len = a1.len();
    let p = basis.padded_len();
    let scale = a1.iter().chain(a2).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(JsdSplit::zero(len, p));
    }
    // The program is positively homogeneous, so solve at unit scale.
    let pad = |a: &[f64]| DVector::from_fn(p, |i, _| if i < len { a[i] / scale } else { 0.0 });
    let prob = Problem {
        psi: basis.matrix(),
        b1: pad(a1),
        b2: pad(a2),
    };

    let rho = opts.rho;
    let alpha = opts.relaxation;
    let mut z = Theta::zeros(p);
    let mut u = Theta::zeros(p);
    let mut best = (f64::INFINITY, prob.project(&z));
    let mut best_dual = 0.0f64;
    let mut last_support: Vec<bool> = Vec::new();
    let mut gap = f64::INFINITY;
    let mut iterations = 0;

    for it in 1..=opts.max_iters {
        iterations = it;
        let x = prob.project(&z.zip_map(&u, |a, b| a - b));
        let x_hat = x.zip_map(&z, |xi, zi| alpha * xi + (1.0 - alpha) * zi);
        z = x_hat.zip_map(&u, |a, b| soft_threshold(a + b, 1.0 / rho));
        u = u.zip_map(&x_hat.zip_map(&z, |a, b| a - b), |a, b| a + b);

        if it % opts.check_every == 0 || it == opts.max_iters {
            let feasible = prob.project(&z);
            let primal = feasible.l1();
            if primal < best.0 {
                best = (primal, feasible);
            }
            let y0 = prob.dual_point(&u.scaled(rho));
            best_dual = best_dual.max(prob.dual_value(&y0));
            let support: Vec<bool> =
                z.v.iter()
                    .chain(z.d1.iter())
                    .chain(z.d2.iter())
                    .map(|x| x.abs() > SUPPORT_TOL)
                    .collect();
            if support != last_support {
                let (candidate, dual) = prob.polish(&z, &y0);
                if let Some(th) = candidate {
                    let primal = th.l1();
                    if primal < best.0 {
                        best = (primal, th);
                    }
                }
                best_dual = best_dual.max(dual);
                last_support = support;
            }
            gap = (best.0 - best_dual).max(0.0) / best.0.max(1.0);
            if gap <= opts.gap_tol {
                break;
            }
        }
    }

    let theta = best.1;
    let shared = prob.psi * &theta.v;
    let unscale = |v: &DVector<f64>| v.iter().map(|x| x * scale).collect::<Vec<_>>();
    let split = JsdSplit {
        len,
        coefficients: unscale(&theta.v),
        shared: unscale(&shared),
        private1: unscale(&theta.d1),
        private2: unscale(&theta.d2),
        gap,
        iterations,
    };
    if gap <= opts.gap_tol {
        Ok(split)
    } else {
        Err(Error::JsdNotConverged {
            gap,
            best: Box::new(split),
        })
    }
}

/// Column-wise decomposition of two n x t matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct JsdMatrixSplit {
    pub shared: DMatrix<f64>,
    pub private1: DMatrix<f64>,
    pub private2: DMatrix<f64>,
}

impl JsdMatrixSplit {
    /// ||U||^2 / (||U||^2 + ||Δ1||^2 + ||Δ2||^2).
    pub fn shared_energy_ratio(&self) -> f64 {
        let u = self.shared.norm_squared();
        let total = u + self.private1.norm_squared() + self.private2.norm_squared();
        if total == 0.0 {
            0.0
        } else {
            u / total
        }
    }
}

/// Apply [`jsd_decompose`] to every column (length n) of `a1` and `a2`. The basis
/// must be built for length n.
pub fn jsd_matrix(
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    basis: &WaveletBasis,
) -> Result<JsdMatrixSplit> {
    check_same_shape("jsd_matrix", a1.shape(), a2.shape())?;
    let (n, t) = a1.shape();
    if basis.len() != n {
        return Err(Error::DimensionMismatch {
            context: "jsd_matrix basis",
            left: (basis.len(), basis.len()),
            right: (n, t),
        });
    }
    let columns = par::try_map(t, |j| {
        let c1: Vec<f64> = a1.column(j).iter().copied().collect();
        let c2: Vec<f64> = a2.column(j).iter().copied().collect();
        jsd_decompose(&c1, &c2, basis).map_err(|e| Error::JsdColumn {
            column: j,
            cause: Box::new(e),
        })
    })?;
    let take = |f: fn(&JsdSplit) -> &Vec<f64>| DMatrix::from_fn(n, t, |i, j| f(&columns[j])[i]);
    Ok(JsdMatrixSplit {
        shared: take(|s| &s.shared),
        private1: take(|s| &s.private1),
        private2: take(|s| &s.private2),
    })
}

/// Shared-energy ratio in [0, 1] quantifying how much two attributes have in common.
pub fn correlation_report(a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> Result<f64> {
    check_same_shape("correlation_report", a1.shape(), a2.shape())?;
    if a1.norm() == 0.0 && a2.norm() == 0.0 {
        return Err(Error::ZeroNormGroundTruth);
    }
    let basis = haar_basis(a1.nrows());
    Ok(jsd_matrix(a1, a2, &basis)?.shared_energy_ratio())
}

/// One-line machine-readable correlation record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRecord {
    pub dataset: String,
    pub pair: (String, String),
    pub ratio: f64,
}

impl std::fmt::Display for CorrelationRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let line = serde_json::to_string(self).map_err(|_| std::fmt::Error)?;
        f.write_str(&line)
    }
}
