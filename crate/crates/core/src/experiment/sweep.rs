use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{DatasetSource, ExperimentConfig, Method};
use crate::data::{drop_entries, synthesize, GroundTruthBundle};
use crate::kvp::KvpKeyRing;
use crate::matrix::{
    denormalize, normalize, nse, read_matrix_csv, retain_observed, RecoveredMatrix, SensedMatrix,
};
use crate::recovery::{cs_complete, ppcs_maa_recover_k, ppcs_recover, SolveReport, SolverConfig};
use crate::{par, seed, Error, Result};

const MASK_LABEL: u64 = 0x4d41_534b;
const KEY_LABEL: u64 = 0x4b45_5952;
const SOLVER_LABEL: u64 = 0x534f_4c56;

/// One (method, attribute, rate, run) outcome. `nse` is `None` exactly when
/// `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub attribute: String,
    pub sampling_rate: f64,
    pub run: usize,
    /// Cell seed; masks, keys and solver initialisation all derive from it.
    pub seed: u64,
    pub nse: Option<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Informational only; not part of the replayable output.
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl ResultRow {
    pub(crate) fn sort_key(&self) -> (Method, &str, f64, usize) {
        (self.method, &self.attribute, self.sampling_rate, self.run)
    }
}

/// `base_seed XOR hash(rate, run)`.
pub fn cell_seed(base_seed: u64, sampling_rate: f64, run: usize) -> u64 {
    base_seed ^ seed::derive(sampling_rate.to_bits(), &[run as u64])
}

pub fn load_dataset(source: &DatasetSource) -> Result<GroundTruthBundle> {
    match source {
        DatasetSource::Synthetic(spec) => synthesize(spec),
        DatasetSource::Files { attributes, header } => {
            let names = attributes.iter().map(|a| a.name.clone()).collect();
            let matrices = attributes
                .iter()
                .map(|a| read_matrix_csv(&a.path, *header))
                .collect::<Result<Vec<_>>>()?;
            GroundTruthBundle::from_matrices(names, matrices)
        }
    }
}

struct Cell<'a> {
    bundle: &'a GroundTruthBundle,
    sampling_rate: f64,
    run: usize,
    seed: u64,
}

struct Outcome {
    estimates: Vec<RecoveredMatrix>,
    report: SolveReport,
}

impl Cell<'_> {
    fn row(
        &self,
        method: Method,
        attr: usize,
        result: &Result<Outcome>,
        wall_ms: f64,
    ) -> ResultRow {
        let mut row = ResultRow {
            method,
            attribute: self.bundle.attributes[attr].clone(),
            sampling_rate: self.sampling_rate,
            run: self.run,
            seed: self.seed,
            nse: None,
            iterations_used: 0,
            converged: false,
            wall_ms,
            error: None,
        };
        let scored = result.as_ref().map_err(Error::to_string).and_then(|out| {
            let idx = if out.estimates.len() == 1 { 0 } else { attr };
            nse(&self.bundle.matrices[attr], &out.estimates[idx])
                .map(|e| (e, out))
                .map_err(|e| e.to_string())
        });
        match scored {
            Ok((e, out)) => {
                row.nse = Some(e);
                row.iterations_used = out.report.iterations_used;
                row.converged = out.report.converged;
            }
            Err(msg) => row.error = Some(msg),
        }
        row
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

fn cs_single(s: &SensedMatrix, solver: &SolverConfig) -> Result<Outcome> {
    let (scaled, rec) = normalize(s)?;
    let (est, report) = cs_complete(scaled.data(), scaled.mask(), solver)?;
    let est = retain_observed(s, &denormalize(&est, rec)?)?;
    Ok(Outcome {
        estimates: vec![est],
        report,
    })
}

fn ppcs_single(s: &SensedMatrix, ring: &KvpKeyRing, solver: &SolverConfig) -> Result<Outcome> {
    let (scaled, rec) = normalize(s)?;
    let (est, report) = ppcs_recover(&scaled, &ring.public, &ring.key, solver)?;
    let est = retain_observed(s, &denormalize(&est, rec)?)?;
    Ok(Outcome {
        estimates: vec![est],
        report,
    })
}

fn mask_failure(e: &Error) -> Error {
    Error::InvalidConfig(format!("mask generation failed: {e}"))
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell<'_>) -> Vec<ResultRow> {
    let (n, t) = cell.bundle.shape();
    let k = cell.bundle.attributes.len();
    let sensed: Vec<Result<SensedMatrix>> = (0..k)
        .map(|a| {
            let mask = drop_entries(
                n,
                t,
                (1.0 - cell.sampling_rate).max(0.0),
                seed::derive(cell.seed, &[MASK_LABEL, a as u64]),
            )?;
            SensedMatrix::new(cell.bundle.matrices[a].data().clone(), mask)
        })
        .collect();
    let ring = KvpKeyRing::generate(n, t, cfg.k_vectors, seed::derive(cell.seed, &[KEY_LABEL]));
    let solver = cfg
        .solver
        .clone()
        .with_seed(seed::derive(cell.seed, &[SOLVER_LABEL, cfg.solver.seed]));

    let mut rows = Vec::new();
    for &method in &cfg.methods {
        match method {
            Method::Cs | Method::Ppcs => {
                for (a, s) in sensed.iter().enumerate() {
                    let (out, ms) = timed(|| match (s, method) {
                        (Err(e), _) => Err(mask_failure(e)),
                        (Ok(s), Method::Cs) => cs_single(s, &solver),
                        (Ok(s), _) => ppcs_single(s, &ring, &solver),
                    });
                    rows.push(cell.row(method, a, &out, ms));
                }
            }
            Method::PpcsMaa => {
                let (out, ms) = timed(|| {
                    let sensed: Vec<&SensedMatrix> = sensed
                        .iter()
                        .map(|s| s.as_ref().map_err(mask_failure))
                        .collect::<Result<_>>()?;
                    let (estimates, report) =
                        ppcs_maa_recover_k(&sensed, &ring.public, &ring.key, &solver)?;
                    Ok(Outcome { estimates, report })
                });
                for a in 0..k {
                    rows.push(cell.row(method, a, &out, ms));
                }
            }
        }
    }
    rows
}

fn check_dataset(cfg: &ExperimentConfig, bundle: &GroundTruthBundle) -> Result<()> {
    let (n, t) = bundle.shape();
    let limit = n.min(t);
    if cfg.solver.rank > limit || cfg.solver.private_rank() > limit {
        return Err(Error::InvalidConfig(format!(
            "solver rank {} (private {}) exceeds min(n, t) = {limit} for the {n}x{t} dataset",
            cfg.solver.rank,
            cfg.solver.private_rank()
        )));
    }
    if cfg.methods.contains(&Method::PpcsMaa) && bundle.attributes.len() < 2 {
        return Err(Error::TooFewAttributes(bundle.attributes.len()));
    }
    if let Some(a) = bundle.matrices.iter().position(|m| m.data().norm() == 0.0) {
        return Err(Error::InvalidConfig(format!(
            "attribute {} is identically zero",
            bundle.attributes[a]
        )));
    }
    Ok(())
}

/// Run every (rate, run) cell for every configured method. Solver failures
/// become rows with `error` set; configuration and dataset problems are errors.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let bundle = load_dataset(&cfg.dataset)?;
    run_sweep_on(cfg, &bundle)
}

/// [`run_sweep`] on an already loaded dataset.
pub fn run_sweep_on(cfg: &ExperimentConfig, bundle: &GroundTruthBundle) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    check_dataset(cfg, bundle)?;
    let cells: Vec<Cell<'_>> = cfg
        .sampling_rates
        .iter()
        .flat_map(|&rate| {
            (0..cfg.runs_per_cell).map(move |run| Cell {
                bundle,
                sampling_rate: rate,
                run,
                seed: cell_seed(cfg.base_seed, rate, run),
            })
        })
        .collect();
    let nested = par::with_workers(cfg.workers, || {
        par::map(cells.len(), |c| run_cell(cfg, &cells[c]))
    })?;
    let mut rows: Vec<ResultRow> = nested.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        ka.0.cmp(&kb.0)
            .then_with(|| ka.1.cmp(kb.1))
            .then_with(|| ka.2.total_cmp(&kb.2))
            .then_with(|| ka.3.cmp(&kb.3))
    });
    Ok(rows)
}
