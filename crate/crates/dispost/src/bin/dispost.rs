//! Command-line front end for the experiment harness.
//!
//! Subcommands:
//!
//! * `toy-grid --config <file>` — run the toy-grid study and write CSV
//!   tables plus SVG figures;
//! * `docs --config <file>` — run the document study and write its tables;
//! * `sample --model <id> --kind <joint|disc|reg> --data <csv> --out <dir>`
//!   — fit one posterior on one dataset and save the draws;
//! * `verify` — run the fast invariant battery.
//!
//! Config files are `key = value` lines; the `DISPOST_SEED` environment
//! variable overrides the master seed from any source. Exit codes: 0 on
//! success, 2 when a run finished but some cells or checks failed, 1 for
//! usage, config, or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dispost::harness::{
    emit_plots, family_from_id, run_doc_experiment, run_toy_grid, run_verification,
    DocExperimentConfig, GridExperimentConfig, KvConfig,
};
use dispost::sampler::{run_chains, SampleTarget};
use dispost::{ChainConfig, Dataset, Error, PosteriorKind, PosteriorTarget};

#[derive(Parser)]
#[command(
    name = "dispost",
    version,
    about = "Joint, discriminative, and regression posterior sampling experiments",
    after_help = "Set DISPOST_SEED to override the master seed of any run."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the toy-grid study from a key = value config file.
    ToyGrid {
        /// Config file; every key is optional.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for CSV tables and SVG figures.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the document study from a key = value config file.
    Docs {
        /// Config file; every key is optional.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for CSV tables.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit one posterior on one dataset and save the draws.
    Sample {
        /// Model family identifier, e.g. cgm[d=10,k=2] or mum[w=25,m=4].
        #[arg(long)]
        model: String,
        /// Which posterior to sample.
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Dataset CSV with header class,x_0,...; NA marks missing values.
        #[arg(long)]
        data: PathBuf,
        /// Output directory for the draw and metadata files.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        chains: usize,
        #[arg(long, default_value_t = 500)]
        burn_in: usize,
        #[arg(long, default_value_t = 5)]
        thinning: usize,
        #[arg(long, default_value_t = 900)]
        keep: usize,
        /// Initial proposal width; defaults to 2.4 / sqrt(dim).
        #[arg(long)]
        width: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-check the structural identities the stack relies on.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    /// Prior times joint densities p(c, x | theta).
    Joint,
    /// Prior times induced conditionals p(c | x, theta).
    Disc,
    /// Prior times conditionals of a regression-only family.
    Reg,
}

impl From<KindArg> for PosteriorKind {
    fn from(kind: KindArg) -> Self {
        match kind {
            KindArg::Joint => PosteriorKind::Joint,
            KindArg::Disc => PosteriorKind::Discriminative,
            KindArg::Reg => PosteriorKind::Regression,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| {
        // Usage problems exit 1; explicit --help/--version requests exit 0.
        let code = if e.use_stderr() { 1 } else { 0 };
        let _ = e.print();
        std::process::exit(code);
    });
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn env_seed() -> Result<Option<u64>, Error> {
    match std::env::var("DISPOST_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::Config(format!("DISPOST_SEED must be an integer, got '{text}'"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::ToyGrid { config, out } => {
            let kv = KvConfig::from_path(&config)?;
            let mut config = GridExperimentConfig::from_kv(&kv)?;
            if let Some(seed) = env_seed()? {
                config.seed = seed;
            }
            let results = run_toy_grid(&config)?;
            let mut written = results.write_dir(&out)?;
            written.extend(emit_plots(&results, &out)?);
            for path in &written {
                println!("wrote {}", path.display());
            }
            for row in results.winners() {
                let means: Vec<String> = row
                    .means
                    .iter()
                    .map(|(m, v)| match v {
                        Some(v) => format!("{m}={v:.4}"),
                        None => format!("{m}=n/a"),
                    })
                    .collect();
                println!(
                    "slope {} n {:>5}: {} -> {}",
                    row.slope,
                    row.n_train,
                    means.join(" "),
                    row.winner
                );
            }
            let failures = results.cells.iter().filter(|c| c.error.is_some()).count();
            if failures > 0 {
                eprintln!("{failures} of {} cells failed; see grid_cells.csv", results.cells.len());
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Docs { config, out } => {
            let kv = KvConfig::from_path(&config)?;
            let mut config = DocExperimentConfig::from_kv(&kv)?;
            if let Some(seed) = env_seed()? {
                config.seed = seed;
            }
            let results = run_doc_experiment(&config)?;
            let written = results.write_dir(&out)?;
            for path in &written {
                println!("wrote {}", path.display());
            }
            for cell in &results.cells {
                match (&cell.error, cell.perplexity) {
                    (None, Some(p)) => {
                        println!("{} {}: perplexity {p:.4}", cell.model, cell.method)
                    }
                    _ => println!(
                        "{} {}: failed ({})",
                        cell.model,
                        cell.method,
                        cell.error.as_deref().unwrap_or("no result")
                    ),
                }
            }
            if results.has_failures() {
                eprintln!("some cells failed; see doc_cells.csv");
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample {
            model,
            kind,
            data,
            out,
            chains,
            burn_in,
            thinning,
            keep,
            width,
            seed,
        } => {
            let family = family_from_id(&model)?;
            let dataset = Dataset::read_csv_path(&data, Some(family.num_classes()))?;
            let target = PosteriorTarget::new(family.as_ref(), &dataset, kind.into())?;
            let seed = env_seed()?.unwrap_or(seed);
            let config = ChainConfig {
                n_chains: chains,
                burn_in,
                thinning,
                n_keep: keep,
                kernel_width: width.unwrap_or(2.4 / (target.dim().max(1) as f64).sqrt()),
                adapt: true,
                seed,
            };
            let samples = run_chains(&target, &config)?;
            let rates: Vec<String> =
                samples.acceptance_rates().iter().map(|r| format!("{r:.3}")).collect();
            let rhat_max = samples
                .rhat()
                .iter()
                .copied()
                .filter(|v| v.is_finite())
                .fold(f64::NEG_INFINITY, f64::max);
            std::fs::create_dir_all(&out)?;
            let (draws, meta) = samples.save(&out, "samples")?;
            println!("wrote {}", draws.display());
            println!("wrote {}", meta.display());
            println!(
                "{} chains x {} kept draws; acceptance [{}]; max split R-hat {rhat_max:.4}",
                chains,
                keep,
                rates.join(", ")
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify => {
            let checks = run_verification()?;
            let mut failed = 0usize;
            for c in &checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!("{status} {} ({})", c.name, c.detail);
                if !c.passed {
                    failed += 1;
                }
            }
            if failed > 0 {
                eprintln!("{failed} of {} checks failed", checks.len());
                Ok(ExitCode::from(2))
            } else {
                println!("all {} checks passed", checks.len());
                Ok(ExitCode::SUCCESS)
            }
        }
    }
}
