//! Seeded sampling-rate sweeps comparing CS, PPCS and PPCS-MAA.
//!
//! A sweep visits every (sampling rate, run) cell, draws one loss mask per
//! attribute for the cell and feeds the same masks to every method. Rows are
//! sorted by (method, attribute, rate, run) so output does not depend on
//! scheduling.

mod output;
mod summary;
mod sweep;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use output::{
    emit, load_manifest, read_bundle, read_rows, render_rows, render_summary, write_bundle,
    BundleSidecar, Manifest, ManifestCell, ResultFiles, BUNDLE_FILE, MANIFEST_FILE, ROWS_FILE,
    ROWS_HEADER, SUMMARY_FILE, SUMMARY_HEADER, TIMINGS_FILE,
};
pub use summary::{aggregate, SummaryCell};
pub use sweep::{cell_seed, load_dataset, run_sweep, run_sweep_on, ResultRow};

use crate::data::SynthSpec;
use crate::kvp::DEFAULT_K;
use crate::recovery::SolverConfig;
use crate::{Error, Result};

pub const DEFAULT_RUNS_PER_CELL: usize = 15;
/// Smallest sampling rate a mask can be drawn at (maximum loss rate 0.95).
pub const MIN_SAMPLING_RATE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CS")]
    Cs,
    #[serde(rename = "PPCS")]
    Ppcs,
    #[serde(rename = "PPCS-MAA")]
    PpcsMaa,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Cs, Method::Ppcs, Method::PpcsMaa];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cs => "CS",
            Method::Ppcs => "PPCS",
            Method::PpcsMaa => "PPCS-MAA",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('_', "-").as_str() {
            "CS" => Ok(Method::Cs),
            "PPCS" => Ok(Method::Ppcs),
            "PPCS-MAA" | "MAA" => Ok(Method::PpcsMaa),
            _ => Err(Error::InvalidConfig(format!(
                "unknown method {s:?} (expected CS, PPCS or PPCS-MAA)"
            ))),
        }
    }
}

/// One attribute matrix on disk, in the matrix CSV format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeFile {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSource {
    Synthetic(SynthSpec),
    Files {
        attributes: Vec<AttributeFile>,
        #[serde(default)]
        header: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_rates")]
    pub sampling_rates: Vec<f64>,
    #[serde(default = "default_runs")]
    pub runs_per_cell: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub solver: SolverConfig,
    /// Number of public perturbation vectors.
    #[serde(default = "default_k")]
    pub k_vectors: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads for sweep cells; `None` uses the global pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

/// 10%, 20%, ..., 90%.
fn default_rates() -> Vec<f64> {
    (1..=9).map(|i| f64::from(i) / 10.0).collect()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_runs() -> usize {
    DEFAULT_RUNS_PER_CELL
}

fn default_k() -> usize {
    DEFAULT_K
}

impl ExperimentConfig {
    /// All three methods at 10%..90%, 15 runs per cell.
    pub fn new(
        dataset: DatasetSource,
        solver: SolverConfig,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            dataset,
            methods: default_methods(),
            sampling_rates: default_rates(),
            runs_per_cell: DEFAULT_RUNS_PER_CELL,
            base_seed: 0,
            solver,
            k_vectors: DEFAULT_K,
            output_dir: output_dir.into(),
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return bad(format!("method {m} listed twice"));
            }
        }
        if self.sampling_rates.is_empty() {
            return bad("no sampling rates".into());
        }
        for &r in &self.sampling_rates {
            if !(MIN_SAMPLING_RATE..=1.0).contains(&r) {
                return bad(format!(
                    "sampling rate {r} outside [{MIN_SAMPLING_RATE}, 1]"
                ));
            }
        }
        if self.sampling_rates.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sampling rates must be strictly increasing".into());
        }
        if self.runs_per_cell == 0 {
            return bad("runs_per_cell must be at least 1".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        self.solver.validate()?;
        match &self.dataset {
            DatasetSource::Synthetic(spec) => spec.validate()?,
            DatasetSource::Files { attributes, .. } => {
                if attributes.is_empty() {
                    return bad("file dataset lists no attributes".into());
                }
            }
        }
        Ok(())
    }
}
