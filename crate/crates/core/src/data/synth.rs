use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ground_truth::GroundTruthBundle;
use crate::matrix::EnvironmentMatrix;
use crate::{seed, Error, Result};

/// Frobenius norm of each private component relative to `sqrt(n * t)`.
pub const PRIVATE_SCALE: f64 = 0.3;

/// Parameters of the synthetic multi-attribute generator `A_k = U + Δ_k + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n: usize,
    pub t: usize,
    /// Rank of U, including its constant baseline.
    pub shared_rank: usize,
    pub private_rank: usize,
    pub noise_std: f64,
    #[serde(default = "default_attributes")]
    pub attributes: usize,
    pub seed: u64,
}

fn default_attributes() -> usize {
    2
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n == 0 || self.t == 0 {
            return bad(format!("synthetic shape {}x{} is empty", self.n, self.t));
        }
        if self.shared_rank == 0 {
            return bad("shared rank must be at least 1 (the baseline)".into());
        }
        if self.shared_rank + self.private_rank > self.n.min(self.t) {
            return bad(format!(
                "shared_rank + private_rank = {} exceeds min(n, t) = {}",
                self.shared_rank + self.private_rank,
                self.n.min(self.t)
            ));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise_std must be >= 0, got {}", self.noise_std));
        }
        if self.attributes < 2 {
            return bad(format!(
                "need at least 2 attributes, got {}",
                self.attributes
            ));
        }
        Ok(())
    }

    pub fn attribute_names(&self) -> Vec<String> {
        (1..=self.attributes).map(|k| format!("attr{k}")).collect()
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let values: Vec<f64> = (0..rows * cols)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    DMatrix::from_vec(rows, cols, values)
}

/// Gaussian-factor product of the given rank scaled to Frobenius norm `norm`.
fn low_rank(n: usize, t: usize, rank: usize, norm: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    if rank == 0 {
        return DMatrix::zeros(n, t);
    }
    let m = gaussian(n, rank, rng) * gaussian(t, rank, rng).transpose();
    let f = m.norm();
    if f == 0.0 {
        m
    } else {
        m * (norm / f)
    }
}

/// Generate a correlated bundle. The shared component is a constant baseline
/// plus `shared_rank - 1` Gaussian components with Frobenius norm `sqrt(n t)`;
/// each private component has `private_rank` Gaussian components with norm
/// `0.3 sqrt(n t)`. The baseline is the smallest common offset that makes every
/// attribute nonnegative, so it does not add to the rank.
pub fn synthesize(spec: &SynthSpec) -> Result<GroundTruthBundle> {
    spec.validate()?;
    let (n, t) = (spec.n, spec.t);
    let mut rng = seed::rng(spec.seed);
    let reference = ((n * t) as f64).sqrt();

    let fluctuation = low_rank(n, t, spec.shared_rank - 1, reference, &mut rng);
    let mut raw: Vec<DMatrix<f64>> = (0..spec.attributes)
        .map(|_| {
            &fluctuation + low_rank(n, t, spec.private_rank, PRIVATE_SCALE * reference, &mut rng)
        })
        .collect();
    if spec.noise_std > 0.0 {
        for a in &mut raw {
            for v in a.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += spec.noise_std * z;
            }
        }
    }
    let floor = raw
        .iter()
        .flat_map(|a| a.iter())
        .fold(f64::INFINITY, |m, &v| m.min(v));
    let baseline = (-floor).max(0.0);
    let matrices = raw
        .into_iter()
        .map(|a| EnvironmentMatrix::new(a.add_scalar(baseline)))
        .collect::<Result<Vec<_>>>()?;
    GroundTruthBundle::from_matrices(spec.attribute_names(), matrices)
}
