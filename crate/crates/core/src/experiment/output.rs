//! Result files: raw rows, summary, timings, per-curve tables, the replay
//! manifest, and ground-truth bundles on disk.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    cell_seed, AttributeFile, DatasetSource, ExperimentConfig, Method, ResultRow, SummaryCell,
};
use crate::data::{GroundTruthBundle, SynthSpec};
use crate::matrix::{read_matrix_csv, write_matrix_csv};
use crate::{seed, Error, Result};

pub const ROWS_HEADER: [&str; 9] = [
    "method",
    "attribute",
    "sampling_rate",
    "run",
    "seed",
    "nse",
    "iterations_used",
    "converged",
    "error",
];
pub const SUMMARY_HEADER: [&str; 9] = [
    "method",
    "attribute",
    "sampling_rate",
    "runs_ok",
    "runs_failed",
    "mean_nse",
    "std_nse",
    "min_nse",
    "max_nse",
];
const TIMINGS_HEADER: [&str; 5] = ["method", "attribute", "sampling_rate", "run", "wall_ms"];
const CURVE_HEADER: [&str; 2] = ["sampling_rate", "mean_nse"];

pub const ROWS_FILE: &str = "rows.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const BUNDLE_FILE: &str = "bundle.json";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn render<const N: usize>(
    header: [&str; N],
    records: impl IntoIterator<Item = [String; N]>,
) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let write =
        |w: &mut csv::Writer<Vec<u8>>, rec: &[&str]| w.write_record(rec).expect("in-memory write");
    write(&mut w, &header);
    for rec in records {
        let refs: Vec<&str> = rec.iter().map(String::as_str).collect();
        write(&mut w, &refs);
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Raw rows in [`ROWS_HEADER`] order, without wall-clock time.
pub fn render_rows(rows: &[ResultRow]) -> String {
    render(
        ROWS_HEADER,
        rows.iter().map(|r| {
            [
                r.method.to_string(),
                r.attribute.clone(),
                r.sampling_rate.to_string(),
                r.run.to_string(),
                r.seed.to_string(),
                opt(r.nse),
                r.iterations_used.to_string(),
                r.converged.to_string(),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn render_summary(cells: &[SummaryCell]) -> String {
    render(
        SUMMARY_HEADER,
        cells.iter().map(|c| {
            [
                c.method.to_string(),
                c.attribute.clone(),
                c.sampling_rate.to_string(),
                c.ok.to_string(),
                c.failed.to_string(),
                opt(c.mean),
                opt(c.std),
                opt(c.min),
                opt(c.max),
            ]
        }),
    )
}

fn render_timings(rows: &[ResultRow]) -> String {
    render(
        TIMINGS_HEADER,
        rows.iter().map(|r| {
            [
                r.method.to_string(),
                r.attribute.clone(),
                r.sampling_rate.to_string(),
                r.run.to_string(),
                format!("{:.3}", r.wall_ms),
            ]
        }),
    )
}

fn file_token(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

/// Parse a raw-rows CSV written by [`emit`]. `wall_ms` is not stored there and
/// reads back as 0.
pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?;
    if header.iter().ne(ROWS_HEADER) {
        return Err(Error::format(
            path,
            format!("expected header {}", ROWS_HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        let line = i + 2;
        let bad = |field: &str| Error::format(path, format!("line {line}: bad {field}"));
        let num = |idx: usize, field: &str| rec[idx].parse::<f64>().map_err(|_| bad(field));
        let int = |idx: usize, field: &str| rec[idx].parse::<u64>().map_err(|_| bad(field));
        rows.push(ResultRow {
            method: rec[0].parse().map_err(|_| bad("method"))?,
            attribute: rec[1].to_string(),
            sampling_rate: num(2, "sampling_rate")?,
            run: int(3, "run")? as usize,
            seed: int(4, "seed")?,
            nse: if rec[5].is_empty() {
                None
            } else {
                Some(num(5, "nse")?)
            },
            iterations_used: int(6, "iterations_used")? as usize,
            converged: rec[7].parse().map_err(|_| bad("converged"))?,
            wall_ms: 0.0,
            error: (!rec[8].is_empty()).then(|| rec[8].to_string()),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifestCell {
    pub sampling_rate: f64,
    pub run: usize,
    pub seed: u64,
}

/// Everything needed to replay a sweep: the full configuration, the dataset
/// fingerprint and every cell seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub attributes: Vec<String>,
    pub shape: (usize, usize),
    /// Hash of the ground-truth bit patterns.
    pub dataset_fingerprint: u64,
    pub cells: Vec<ManifestCell>,
}

fn fingerprint(bundle: &GroundTruthBundle) -> u64 {
    let mut h = seed::mix64(bundle.matrices.len() as u64);
    for m in &bundle.matrices {
        let (n, t) = m.shape();
        h = seed::mix64(h ^ seed::mix64((n as u64) << 32 | t as u64));
        for v in m.data().iter() {
            h = seed::mix64(h ^ v.to_bits());
        }
    }
    h
}

impl Manifest {
    pub fn new(config: &ExperimentConfig, bundle: &GroundTruthBundle) -> Self {
        let cells = config
            .sampling_rates
            .iter()
            .flat_map(|&rate| {
                (0..config.runs_per_cell).map(move |run| ManifestCell {
                    sampling_rate: rate,
                    run,
                    seed: cell_seed(config.base_seed, rate, run),
                })
            })
            .collect();
        Self {
            config: config.clone(),
            attributes: bundle.attributes.clone(),
            shape: bundle.shape(),
            dataset_fingerprint: fingerprint(bundle),
            cells,
        }
    }

    /// Check that `bundle` is the dataset this manifest was recorded on and
    /// that the recorded seeds are the ones the configuration derives.
    pub fn verify(&self, bundle: &GroundTruthBundle) -> Result<()> {
        let fresh = Self::new(&self.config, bundle);
        if fresh.attributes != self.attributes || fresh.shape != self.shape {
            return Err(Error::InvalidConfig(format!(
                "dataset changed since the manifest was written: {:?} {}x{} vs {:?} {}x{}",
                fresh.attributes,
                fresh.shape.0,
                fresh.shape.1,
                self.attributes,
                self.shape.0,
                self.shape.1
            )));
        }
        if fresh.dataset_fingerprint != self.dataset_fingerprint {
            return Err(Error::InvalidConfig(
                "dataset values changed since the manifest was written".into(),
            ));
        }
        if fresh.cells != self.cells {
            return Err(Error::InvalidConfig(
                "manifest cell seeds do not match its configuration".into(),
            ));
        }
        Ok(())
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    manifest.config.validate()?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultFiles {
    pub rows: PathBuf,
    pub summary: PathBuf,
    pub timings: PathBuf,
    pub manifest: PathBuf,
    pub curves: Vec<PathBuf>,
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write `rows.csv`, `summary.csv`, `timings.csv`, `manifest.json` and one
/// `curve_<method>_<attribute>.csv` per (method, attribute) into `dir`.
pub fn emit(
    rows: &[ResultRow],
    summary: &[SummaryCell],
    manifest: &Manifest,
    dir: &Path,
) -> Result<ResultFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ResultFiles {
        rows: dir.join(ROWS_FILE),
        summary: dir.join(SUMMARY_FILE),
        timings: dir.join(TIMINGS_FILE),
        manifest: dir.join(MANIFEST_FILE),
        curves: Vec::new(),
    };
    write(&files.rows, &render_rows(rows))?;
    write(&files.summary, &render_summary(summary))?;
    write(&files.timings, &render_timings(rows))?;
    write(&files.manifest, &serde_json::to_string_pretty(manifest)?)?;

    let mut curves = Vec::new();
    let mut start = 0;
    while start < summary.len() {
        let (method, attr): (Method, &str) = (summary[start].method, &summary[start].attribute);
        let end = start
            + summary[start..]
                .iter()
                .take_while(|c| c.method == method && c.attribute == attr)
                .count();
        let path = dir.join(format!(
            "curve_{}_{}.csv",
            file_token(method.name()),
            file_token(attr)
        ));
        let text = render(
            CURVE_HEADER,
            summary[start..end]
                .iter()
                .map(|c| [c.sampling_rate.to_string(), opt(c.mean)]),
        );
        write(&path, &text)?;
        curves.push(path);
        start = end;
    }
    Ok(ResultFiles { curves, ..files })
}

/// Sidecar describing a ground-truth bundle written by [`write_bundle`]. File
/// paths are relative to the sidecar's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleSidecar {
    pub attributes: Vec<AttributeFile>,
    pub shape: (usize, usize),
    pub node_ids: Vec<u64>,
    pub slots: Vec<i64>,
    /// Entries clamped by outlier cleaning, per attribute.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clamped: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped_records: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
}

impl BundleSidecar {
    /// A file dataset source pointing at the bundle's matrices, for sweeps.
    pub fn dataset_source(&self, dir: &Path) -> DatasetSource {
        DatasetSource::Files {
            attributes: self
                .attributes
                .iter()
                .map(|a| AttributeFile {
                    name: a.name.clone(),
                    path: dir.join(&a.path),
                })
                .collect(),
            header: true,
        }
    }
}

/// Write one headed matrix CSV per attribute plus `bundle.json` into `dir`.
/// `clamped`, `skipped_records` and `synth` are recorded as given.
pub fn write_bundle(
    bundle: &GroundTruthBundle,
    dir: &Path,
    clamped: Vec<usize>,
    skipped_records: Option<usize>,
    synth: Option<SynthSpec>,
) -> Result<BundleSidecar> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut attributes = Vec::new();
    for (name, m) in bundle.attributes.iter().zip(&bundle.matrices) {
        let file = PathBuf::from(format!("{}.csv", file_token(name)));
        write_matrix_csv(dir.join(&file), m.data(), true)?;
        attributes.push(AttributeFile {
            name: name.clone(),
            path: file,
        });
    }
    let sidecar = BundleSidecar {
        attributes,
        shape: bundle.shape(),
        node_ids: bundle.node_ids.clone(),
        slots: bundle.slots.clone(),
        clamped,
        skipped_records,
        synth,
    };
    write(
        &dir.join(BUNDLE_FILE),
        &serde_json::to_string_pretty(&sidecar)?,
    )?;
    Ok(sidecar)
}

/// Read a bundle back from the directory written by [`write_bundle`].
pub fn read_bundle(dir: &Path) -> Result<(GroundTruthBundle, BundleSidecar)> {
    let path = dir.join(BUNDLE_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let sidecar: BundleSidecar =
        serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    let matrices = sidecar
        .attributes
        .iter()
        .map(|a| read_matrix_csv(dir.join(&a.path), true))
        .collect::<Result<Vec<_>>>()?;
    let mut bundle = GroundTruthBundle::from_matrices(
        sidecar.attributes.iter().map(|a| a.name.clone()).collect(),
        matrices,
    )?;
    if bundle.shape() != sidecar.shape
        || sidecar.node_ids.len() != sidecar.shape.0
        || sidecar.slots.len() != sidecar.shape.1
    {
        return Err(Error::format(
            &path,
            "index maps do not match the matrix shape",
        ));
    }
    bundle.node_ids = sidecar.node_ids.clone();
    bundle.slots = sidecar.slots.clone();
    Ok((bundle, sidecar))
}
