use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dimreader::config::{Perturbation, RunConfig};
use dimreader::extraction::ExtractionMode;
use dimreader::io::write_csv;
use dimreader::pipeline::{run_pipeline, RunReport};
use dimreader::synthetic::{generate, Generator};

/// Generalized axes for 2-D projections of high-dimensional data.
///
/// Worker threads default to the machine; set DIMREADER_THREADS to override.
#[derive(Parser)]
#[command(name = "dimreader", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured projection and write plot, JSON and report.
    Run {
        /// TOML run configuration.
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Like `run`, but search for the perturbation that moves the plot most.
    Discover {
        config: PathBuf,
        /// Defaults to the config's discovery mode, else global.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Smoothing weight for per-point mode.
        #[arg(long)]
        lambda: Option<f64>,
        /// Similarity bandwidth in projected units for per-point mode.
        #[arg(long)]
        sigma: Option<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write a synthetic dataset as CSV.
    Gen {
        #[arg(value_parser = parse_generator)]
        name: Generator,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Destination; stdout when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Also write the per-point parameter direction as headerless CSV,
        /// usable as a custom perturbation.
        #[arg(long)]
        tangent: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Overrides {
    /// Master seed (replaces `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, relative to the working directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads; takes precedence over DIMREADER_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    extraction: Option<Extraction>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Global,
    PerPoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum Extraction {
    OneAtATime,
    Halves,
}

fn parse_generator(s: &str) -> Result<Generator, String> {
    s.parse().map_err(|e: dimreader::Error| e.to_string())
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.projection.seed = seed;
        }
        if let Some(out) = &self.output {
            cfg.output = out.clone();
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if let Some(e) = self.extraction {
            cfg.extraction = match e {
                Extraction::OneAtATime => ExtractionMode::OneAtATime,
                Extraction::Halves => ExtractionMode::Halves,
            };
        }
    }
}

fn load(path: &Path) -> Result<RunConfig> {
    RunConfig::from_file(path)
        .map_err(|e| anyhow::anyhow!("reading config {}: {e}", path.display()))
}

fn summarize(report: &RunReport) {
    println!("points: {} x {}", report.n, report.d);
    println!("projection runs: {}", report.projection_runs);
    for c in &report.convergence {
        println!(
            "{}: converged={} after {} iterations (residual {:.3e})",
            c.routine, c.converged, c.iterations, c.residual
        );
    }
    if let Some(d) = &report.discovery {
        println!("discovery objective: {:.6e}", d.objective);
        println!("dominant dimension: {}", d.dominant_dimension);
        if let Some(dir) = &d.direction {
            println!("direction: {dir:?}");
        }
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    for f in &report.outputs {
        println!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // library errors already carry their causes in the message
            match e.downcast_ref::<dimreader::Error>() {
                Some(inner) => eprintln!("error: {inner}"),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, overrides } => {
            let mut cfg = load(&config)?;
            overrides.apply(&mut cfg);
            summarize(&run_pipeline(&cfg)?);
        }
        Command::Discover {
            config,
            mode,
            lambda,
            sigma,
            overrides,
        } => {
            let mut cfg = load(&config)?;
            overrides.apply(&mut cfg);
            cfg.perturbation = match mode {
                Some(Mode::Global) => Perturbation::DiscoverGlobal,
                Some(Mode::PerPoint) => Perturbation::DiscoverPerPoint,
                None if cfg.perturbation.is_discovery() => cfg.perturbation.clone(),
                None => Perturbation::DiscoverGlobal,
            };
            if let Some(l) = lambda {
                cfg.discovery.lambda = l;
            }
            if sigma.is_some() {
                cfg.discovery.sigma = sigma;
            }
            summarize(&run_pipeline(&cfg)?);
        }
        Command::Gen {
            name,
            n,
            seed,
            output,
            tangent,
        } => {
            let s = generate(name, n, seed)?;
            match output {
                Some(path) => {
                    let f = File::create(&path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    write_csv(&s.dataset, BufWriter::new(f))?;
                }
                None => write_csv(&s.dataset, std::io::stdout().lock())?,
            }
            if let Some(path) = tangent {
                let mut w = BufWriter::new(File::create(&path)?);
                for row in &s.tangent {
                    let cells: Vec<String> = row.iter().map(f64::to_string).collect();
                    writeln!(w, "{}", cells.join(","))?;
                }
                w.flush()?;
            }
        }
    }
    Ok(())
}
