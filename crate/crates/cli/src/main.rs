//! `ppcs`: generate or ingest datasets, run recovery sweeps and summarise results.

mod sweep;

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ppcs_core::data::{
    build_ground_truth, clean_outliers, parse_records, synthesize, Delimiter, GridOptions,
    RecordSchema, SynthSpec, DEFAULT_SLOT_WIDTH,
};
use ppcs_core::experiment::{aggregate, read_bundle, read_rows, render_summary, write_bundle};
use ppcs_core::jsd::{correlation_report, CorrelationRecord};
use ppcs_core::matrix::read_matrix_csv;

/// Environment variable that overrides the output directory of every subcommand.
pub const OUTPUT_DIR_ENV: &str = "PPCS_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "ppcs",
    version,
    about = "Privacy-preserving multi-attribute sensor data recovery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic correlated multi-attribute bundle.
    Synth(SynthArgs),
    /// Build a complete ground-truth bundle from packet records.
    Ingest(IngestArgs),
    /// Run a sampling-rate sweep (from flags, a config file or a replay manifest).
    Sweep(Box<sweep::SweepArgs>),
    /// Summarise raw rows or report the correlation of two attributes.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
pub struct SynthFlags {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub shared_rank: Option<usize>,
    #[arg(long)]
    pub private_rank: Option<usize>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// Number of attributes to generate.
    #[arg(long)]
    pub attributes: Option<usize>,
    #[arg(long)]
    pub data_seed: Option<u64>,
}

impl SynthFlags {
    pub fn any(&self) -> bool {
        self.n.is_some()
            || self.t.is_some()
            || self.shared_rank.is_some()
            || self.private_rank.is_some()
            || self.noise_std.is_some()
            || self.attributes.is_some()
            || self.data_seed.is_some()
    }

    pub fn apply(&self, base: SynthSpec) -> SynthSpec {
        SynthSpec {
            n: self.n.unwrap_or(base.n),
            t: self.t.unwrap_or(base.t),
            shared_rank: self.shared_rank.unwrap_or(base.shared_rank),
            private_rank: self.private_rank.unwrap_or(base.private_rank),
            noise_std: self.noise_std.unwrap_or(base.noise_std),
            attributes: self.attributes.unwrap_or(base.attributes),
            seed: self.data_seed.unwrap_or(base.seed),
        }
    }
}

pub fn default_synth() -> SynthSpec {
    SynthSpec {
        n: 50,
        t: 120,
        shared_rank: 2,
        private_rank: 1,
        noise_std: 0.01,
        attributes: 2,
        seed: 0,
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    spec: SynthFlags,
    /// Output directory.
    #[arg(long, env = OUTPUT_DIR_ENV)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// Packet-record text file.
    #[arg(long)]
    input: PathBuf,
    /// Column names in file order; `id` and `time` are required, `_` skips a column.
    #[arg(long, value_delimiter = ',', required = true)]
    columns: Vec<String>,
    /// comma, tab or whitespace.
    #[arg(long, default_value = "comma")]
    delim: String,
    /// Attributes to keep (default: every attribute column).
    #[arg(long, value_delimiter = ',')]
    attributes: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_SLOT_WIDTH)]
    slot_width: i64,
    #[arg(long, default_value_t = 1)]
    n_min: usize,
    #[arg(long, default_value_t = 1)]
    t_min: usize,
    /// Skip median/MAD outlier clamping.
    #[arg(long)]
    keep_outliers: bool,
    /// Output directory.
    #[arg(long, env = OUTPUT_DIR_ENV)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Raw rows CSV from a sweep; prints the summary table.
    #[arg(long, conflicts_with_all = ["correlate", "bundle"])]
    rows: Option<PathBuf>,
    /// Two attribute matrix CSVs; prints a one-line correlation record.
    #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with = "bundle")]
    correlate: Option<Vec<PathBuf>>,
    /// Matrix CSVs given to --correlate have a header row.
    #[arg(long)]
    header: bool,
    /// Bundle directory; reports the correlation of its first two attributes
    /// (or --pair).
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', num_args = 2, requires = "bundle")]
    pair: Option<Vec<String>>,
    /// Dataset label for correlation records.
    #[arg(long)]
    dataset: Option<String>,
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let spec = args.spec.apply(default_synth());
    let bundle = synthesize(&spec)?;
    write_bundle(&bundle, &args.out, Vec::new(), None, Some(spec))?;
    let (n, t) = bundle.shape();
    eprintln!(
        "wrote {} synthetic attributes ({n}x{t}) to {}",
        bundle.attributes.len(),
        args.out.display()
    );
    Ok(())
}

fn run_ingest(args: IngestArgs) -> Result<()> {
    let delimiter: Delimiter = args.delim.parse()?;
    let schema = RecordSchema::new(delimiter, args.columns)?;
    let file = fs::File::open(&args.input)
        .with_context(|| format!("cannot open {}", args.input.display()))?;
    let parsed = parse_records(BufReader::new(file), &schema)
        .with_context(|| args.input.display().to_string())?;
    let wanted = if args.attributes.is_empty() {
        parsed.attributes.clone()
    } else {
        args.attributes
    };
    let names: Vec<&str> = wanted.iter().map(String::as_str).collect();
    let opts = GridOptions {
        slot_width: args.slot_width,
        n_min: args.n_min,
        t_min: args.t_min,
    };
    let mut bundle = build_ground_truth(&parsed, &names, &opts)?;
    let mut clamped = vec![0; bundle.matrices.len()];
    if !args.keep_outliers {
        for (m, c) in bundle.matrices.iter_mut().zip(&mut clamped) {
            let (cleaned, count) = clean_outliers(m);
            *m = cleaned;
            *c = count;
        }
    }
    write_bundle(
        &bundle,
        &args.out,
        clamped.clone(),
        Some(parsed.skipped),
        None,
    )?;
    let (n, t) = bundle.shape();
    eprintln!(
        "ground truth {n}x{t} for {} attributes, {} entries clamped, {} malformed lines skipped; wrote {}",
        bundle.attributes.len(),
        clamped.iter().sum::<usize>(),
        parsed.skipped,
        args.out.display()
    );
    Ok(())
}

fn correlation_line(
    dataset: String,
    names: (String, String),
    a: &Path,
    b: &Path,
    header: bool,
) -> Result<String> {
    let m1 = read_matrix_csv(a, header)?;
    let m2 = read_matrix_csv(b, header)?;
    let ratio = correlation_report(m1.data(), m2.data())?;
    Ok(CorrelationRecord {
        dataset,
        pair: names,
        ratio,
    }
    .to_string())
}

fn file_stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn run_report(args: ReportArgs) -> Result<()> {
    if let Some(rows) = args.rows {
        let rows = read_rows(&rows)?;
        print!("{}", render_summary(&aggregate(&rows)));
        return Ok(());
    }
    if let Some(files) = args.correlate {
        let (a, b) = (&files[0], &files[1]);
        let dataset = args.dataset.unwrap_or_else(|| "files".into());
        println!(
            "{}",
            correlation_line(dataset, (file_stem(a), file_stem(b)), a, b, args.header)?
        );
        return Ok(());
    }
    if let Some(dir) = args.bundle {
        let (bundle, _) = read_bundle(&dir)?;
        let (x, y) = match args.pair {
            Some(p) => (p[0].clone(), p[1].clone()),
            None if bundle.attributes.len() >= 2 => {
                (bundle.attributes[0].clone(), bundle.attributes[1].clone())
            }
            None => bail!("bundle {} has fewer than two attributes", dir.display()),
        };
        let get = |name: &str| {
            bundle
                .get(name)
                .with_context(|| format!("bundle has no attribute {name:?}"))
        };
        let ratio = correlation_report(get(&x)?.data(), get(&y)?.data())?;
        let dataset = args.dataset.unwrap_or_else(|| file_stem(&dir));
        println!(
            "{}",
            CorrelationRecord {
                dataset,
                pair: (x, y),
                ratio
            }
        );
        return Ok(());
    }
    bail!("report needs --rows, --correlate or --bundle")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            eprintln!(
                "{}",
                text.lines().next().unwrap_or("error: invalid arguments")
            );
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Synth(a) => run_synth(a),
        Command::Ingest(a) => run_ingest(a),
        Command::Sweep(a) => sweep::run(*a),
        Command::Report(a) => run_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
