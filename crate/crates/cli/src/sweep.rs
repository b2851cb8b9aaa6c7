use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use ppcs_core::experiment::{
    aggregate, emit, load_dataset, load_manifest, read_bundle, run_sweep_on, AttributeFile,
    DatasetSource, ExperimentConfig, Manifest, Method,
};
use ppcs_core::recovery::SolverConfig;

use crate::{default_synth, SynthFlags, OUTPUT_DIR_ENV};

#[derive(Args)]
pub struct SweepArgs {
    /// Experiment config file (TOML, or JSON with a .json extension).
    #[arg(long, conflicts_with = "manifest")]
    config: Option<PathBuf>,
    /// Replay the sweep recorded in a manifest.json; only the output directory
    /// may be changed.
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// Bundle directory written by `synth` or `ingest`.
    #[arg(long, conflicts_with = "attribute")]
    bundle: Option<PathBuf>,
    /// Attribute matrix CSV as NAME=PATH; repeat for each attribute.
    #[arg(long, value_name = "NAME=PATH")]
    attribute: Vec<String>,
    /// Matrix CSVs given with --attribute have a header row.
    #[arg(long)]
    header: bool,
    #[command(flatten)]
    synth: SynthFlags,

    /// Methods to compare: CS, PPCS, PPCS-MAA.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Sampling rates, strictly increasing, in [0.05, 1].
    #[arg(long, value_delimiter = ',')]
    rates: Vec<f64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Number of public perturbation vectors K.
    #[arg(long)]
    k_vectors: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,

    /// Target rank (shared-component rank for PPCS-MAA).
    #[arg(long)]
    rank: Option<usize>,
    /// Private-component rank for PPCS-MAA (default: --rank).
    #[arg(long)]
    solver_private_rank: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    solver_seed: Option<u64>,

    /// Output directory (default: the config's output_dir).
    #[arg(long, env = OUTPUT_DIR_ENV)]
    out: Option<PathBuf>,
}

impl SweepArgs {
    fn has_overrides(&self) -> bool {
        self.bundle.is_some()
            || !self.attribute.is_empty()
            || self.header
            || self.synth.any()
            || !self.methods.is_empty()
            || !self.rates.is_empty()
            || self.runs.is_some()
            || self.base_seed.is_some()
            || self.k_vectors.is_some()
            || self.workers.is_some()
            || self.rank.is_some()
            || self.solver_private_rank.is_some()
            || self.lambda.is_some()
            || self.max_iters.is_some()
            || self.rel_tol.is_some()
            || self.solver_seed.is_some()
    }

    fn dataset_override(&self, base: Option<&DatasetSource>) -> Result<Option<DatasetSource>> {
        let explicit = usize::from(self.bundle.is_some()) + usize::from(!self.attribute.is_empty());
        if explicit > 0 && self.synth.any() {
            bail!("synthetic dataset flags cannot be combined with --bundle or --attribute");
        }
        if let Some(dir) = &self.bundle {
            let (_, sidecar) = read_bundle(dir)?;
            return Ok(Some(sidecar.dataset_source(dir)));
        }
        if !self.attribute.is_empty() {
            let attributes = self
                .attribute
                .iter()
                .map(|spec| {
                    let (name, path) = spec
                        .split_once('=')
                        .with_context(|| format!("--attribute expects NAME=PATH, got {spec:?}"))?;
                    Ok(AttributeFile {
                        name: name.to_string(),
                        path: PathBuf::from(path),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(Some(DatasetSource::Files {
                attributes,
                header: self.header,
            }));
        }
        if self.synth.any() {
            let start = match base {
                Some(DatasetSource::Synthetic(spec)) => spec.clone(),
                _ => default_synth(),
            };
            return Ok(Some(DatasetSource::Synthetic(self.synth.apply(start))));
        }
        Ok(None)
    }

    fn apply_solver(&self, mut s: SolverConfig) -> SolverConfig {
        if let Some(r) = self.rank {
            s.rank = r;
        }
        if let Some(r) = self.solver_private_rank {
            s.private_rank = Some(r);
        }
        if let Some(l) = self.lambda {
            s.lambda = l;
        }
        if let Some(m) = self.max_iters {
            s.max_iters = m;
        }
        if let Some(t) = self.rel_tol {
            s.rel_tol = t;
        }
        if let Some(seed) = self.solver_seed {
            s.seed = seed;
        }
        s
    }
}

fn load_config_file(path: &Path) -> Result<ExperimentConfig> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut cfg: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?
    } else {
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?
    };
    // Relative matrix paths are relative to the config file.
    if let DatasetSource::Files { attributes, .. } = &mut cfg.dataset {
        let base = path.parent().unwrap_or(Path::new(""));
        for a in attributes {
            if a.path.is_relative() {
                a.path = base.join(&a.path);
            }
        }
    }
    Ok(cfg)
}

pub fn run(args: SweepArgs) -> Result<()> {
    let (mut cfg, recorded, bundle) = if let Some(path) = &args.manifest {
        if args.has_overrides() {
            bail!("a manifest replay accepts no configuration flags other than --out");
        }
        let manifest = load_manifest(path)
            .with_context(|| format!("cannot load manifest {}", path.display()))?;
        let bundle = load_dataset(&manifest.config.dataset)?;
        manifest.verify(&bundle)?;
        (manifest.config.clone(), Some(manifest), bundle)
    } else {
        let file_cfg = args.config.as_deref().map(load_config_file).transpose()?;
        let dataset = match args.dataset_override(file_cfg.as_ref().map(|c| &c.dataset))? {
            Some(d) => d,
            None => match &file_cfg {
                Some(c) => c.dataset.clone(),
                None => DatasetSource::Synthetic(default_synth()),
            },
        };
        let bundle = load_dataset(&dataset)?;
        let mut cfg = match file_cfg {
            Some(c) => ExperimentConfig { dataset, ..c },
            None => {
                let (n, t) = bundle.shape();
                ExperimentConfig::new(dataset, SolverConfig::for_shape(n, t), "results")
            }
        };
        if !args.methods.is_empty() {
            cfg.methods = args
                .methods
                .iter()
                .map(|m| m.parse::<Method>())
                .collect::<Result<_, _>>()?;
        }
        if !args.rates.is_empty() {
            cfg.sampling_rates = args.rates.clone();
        }
        cfg.runs_per_cell = args.runs.unwrap_or(cfg.runs_per_cell);
        cfg.base_seed = args.base_seed.unwrap_or(cfg.base_seed);
        cfg.k_vectors = args.k_vectors.unwrap_or(cfg.k_vectors);
        cfg.workers = args.workers.or(cfg.workers);
        cfg.solver = args.apply_solver(cfg.solver);
        (cfg, None, bundle)
    };
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;

    let rows = run_sweep_on(&cfg, &bundle)?;
    let summary = aggregate(&rows);
    let manifest = Manifest::new(&cfg, &bundle);
    if let Some(rec) = &recorded {
        if rec.cells != manifest.cells {
            bail!("replayed cell seeds differ from the manifest");
        }
    }
    let files = emit(&rows, &summary, &manifest, &cfg.output_dir)?;
    let failed = rows.iter().filter(|r| r.nse.is_none()).count();
    eprintln!(
        "{} rows ({failed} failed), {} summary cells; wrote {}",
        rows.len(),
        summary.len(),
        files.rows.parent().unwrap_or(Path::new(".")).display()
    );
    Ok(())
}
