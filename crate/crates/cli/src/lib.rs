//! Command-line driver for the corridor pipeline: clustering, model fitting,
//! representative generation and footprint comparison, each as a
//! subcommand writing plain-text artifacts to an output directory.

pub mod config;
pub mod plot;
pub mod stages;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use corridor_core::Exec;

pub use config::Config;
use stages::{FootprintInput, InputKind};

#[derive(Debug, Parser)]
#[command(
    name = "corridor",
    version,
    about = "Representative trajectories and noise-free footprints from flight tracks"
)]
pub struct Cli {
    /// TOML configuration file. Without one every setting takes its default.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for the data-parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic corridor dataset and airport file.
    Synth {
        /// Overrides `[synth] seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cluster the input trajectories per phase and runway.
    Cluster,
    /// Fit one model per cluster file (default: the output's clusters/).
    Fit { files: Vec<PathBuf> },
    /// Generate representatives from model files (default: the output's models/).
    Generate { files: Vec<PathBuf> },
    /// Footprint of cluster files or of one representative file.
    Footprint {
        /// Trajectory CSVs, or one representative CSV (default: the
        /// output's clusters/).
        #[arg(long, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Models giving the cluster sizes for representative input
        /// (default: the output's models/).
        #[arg(long, num_args = 1..)]
        models: Vec<PathBuf>,
    },
    /// Compare a candidate footprint grid with a reference grid.
    Compare {
        candidate: PathBuf,
        reference: PathBuf,
    },
    /// Run cluster, fit, generate, footprint and compare in sequence.
    Pipeline,
}

fn setup_threads(threads: Option<usize>) -> Result<Exec> {
    match threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(1) => Ok(Exec::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            // A second call in the same process keeps the first pool.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
            Ok(Exec::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Exec::Sequential),
        None => Ok(Exec::default()),
    }
}

fn default_files(given: &[PathBuf], dir: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    if !given.is_empty() {
        return Ok(given.to_vec());
    }
    if !dir.is_dir() {
        bail!("no input files given and {} does not exist", dir.display());
    }
    stages::list_files(dir, extension)
}

/// Run one parsed command line, printing a short summary to stdout.
pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(o) = &cli.output {
        cfg.output.dir = o.clone();
    }
    let exec = setup_threads(cli.threads)?;
    let out = cfg.output.dir.clone();

    match &cli.command {
        Command::Synth { seed } => {
            let r = stages::synth(&cfg, &out, *seed)?;
            println!("wrote {} trajectories to {}", r.trajectories, out.display());
        }
        Command::Cluster => {
            let r = stages::cluster(&cfg, &out, exec)?;
            print!("{}", r.to_text());
        }
        Command::Fit { files } => {
            cfg.validate_parameters()?;
            let files = default_files(files, &out.join(stages::CLUSTERS_DIR), "csv")?;
            let rows = stages::fit(&cfg, &files, &out, exec)?;
            print!("{}", stages::fit_report_text(&rows));
        }
        Command::Generate { files } => {
            cfg.validate_parameters()?;
            let files = default_files(files, &out.join(stages::MODELS_DIR), "model")?;
            for g in stages::generate(&cfg, &files, &out, exec)? {
                println!(
                    "{}: {} trajectories -> {}",
                    g.scheme,
                    g.trajectories,
                    g.file.display()
                );
            }
        }
        Command::Footprint { input, models } => {
            cfg.validate_parameters()?;
            let input = default_files(input, &out.join(stages::CLUSTERS_DIR), "csv")?;
            let kinds = input
                .iter()
                .map(|p| stages::detect_input(p))
                .collect::<Result<Vec<_>>>()?;
            let request = if kinds.iter().all(|k| *k == InputKind::Trajectories) {
                FootprintInput::Raw {
                    cluster_files: input,
                }
            } else if let ([rep], [InputKind::Representatives]) =
                (input.as_slice(), kinds.as_slice())
            {
                FootprintInput::Weighted {
                    representatives: rep.clone(),
                    model_files: default_files(models, &out.join(stages::MODELS_DIR), "model")
                        .context("models for cluster sizes")?,
                }
            } else {
                bail!("--input takes trajectory CSVs or exactly one representative CSV");
            };
            let r = stages::footprint(&cfg, &request, &out, exec)?;
            println!(
                "{}: {} active cells, N_total {} -> {}",
                r.label,
                r.grid.nonzero(),
                r.n_total,
                r.file.display()
            );
        }
        Command::Compare {
            candidate,
            reference,
        } => {
            let r = stages::compare(&cfg, candidate, reference, &out)?;
            print!("{}", r.comparison.to_text());
        }
        Command::Pipeline => {
            let r = stages::pipeline(&cfg, &out, exec)?;
            print!("{}", r.clusters.to_text());
            print!("{}", stages::fit_report_text(&r.fits));
            for c in &r.comparisons {
                println!("[{}]", c.label);
                print!("{}", c.comparison.to_text());
            }
        }
    }
    Ok(())
}
