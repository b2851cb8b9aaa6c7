//! Dataset ingestion and generation: packet-record parsing, extraction of
//! complete ground-truth grids, outlier clamping, random loss masks and the
//! synthetic multi-attribute generator.

mod ground_truth;
mod records;
mod synth;

pub use ground_truth::{build_ground_truth, GridOptions, GroundTruthBundle, DEFAULT_SLOT_WIDTH};
pub use records::{parse_records, Delimiter, PacketRecord, ParsedRecords, RecordSchema};
pub use synth::{synthesize, SynthSpec, PRIVATE_SCALE};

use rand::seq::index;

use crate::matrix::{BinaryIndexMatrix, EnvironmentMatrix};
use crate::{seed, Error, Result};

/// Outlier band half-width in units of the median absolute deviation.
pub const MAD_MULTIPLIER: f64 = 5.0;
pub const MAX_LOSS_RATE: f64 = 0.95;

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Clamp entries outside `median +- 5 * MAD` (global over the matrix) to the band
/// edge. Returns the cleaned matrix and the number of clamped entries. A zero MAD
/// leaves the matrix unchanged.
pub fn clean_outliers(a: &EnvironmentMatrix) -> (EnvironmentMatrix, usize) {
    let mut values: Vec<f64> = a.data().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    let med = median(&values);
    let mut dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let mad = median(&dev);
    if mad == 0.0 {
        return (a.clone(), 0);
    }
    let (lo, hi) = (med - MAD_MULTIPLIER * mad, med + MAD_MULTIPLIER * mad);
    let mut clamped = 0;
    let data = a.data().map(|v| {
        if v < lo || v > hi {
            clamped += 1;
            v.clamp(lo, hi)
        } else {
            v
        }
    });
    (
        EnvironmentMatrix::new(data).expect("clamping keeps values finite"),
        clamped,
    )
}

/// Mask with exactly `round(loss_rate * n * t)` missing entries placed uniformly
/// at random without replacement.
pub fn drop_entries(n: usize, t: usize, loss_rate: f64, seed_: u64) -> Result<BinaryIndexMatrix> {
    if !(0.0..=MAX_LOSS_RATE).contains(&loss_rate) {
        return Err(Error::LossRateOutOfRange(loss_rate));
    }
    let total = n * t;
    let missing = (loss_rate * total as f64).round() as usize;
    let mut rng = seed::rng(seed_);
    let mut observed = vec![true; total];
    for idx in index::sample(&mut rng, total, missing) {
        observed[idx] = false;
    }
    // Row-major linear index.
    Ok(BinaryIndexMatrix::from_fn(n, t, |i, j| observed[i * t + j]))
}
