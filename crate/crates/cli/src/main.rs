use std::path::PathBuf;
use std::process::ExitCode;

use annulus_perc::harness::{run_experiment, ExperimentConfig, RunMode};
use annulus_perc::Norm;
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

/// Annulus percolation experiments. Exit status is 0 iff every check the
/// run performs passes, 1 if a check fails, 2 on errors.
#[derive(Parser)]
#[command(name = "annperc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crossing-frequency curve over a list of areas.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Annulus areas to simulate.
        #[arg(long, value_delimiter = ',')]
        areas: Option<Vec<f64>>,
    },
    /// Estimate the 0.5-crossing area for every eps.
    NcSweep {
        #[command(flatten)]
        common: Common,
        /// Bisection bracket `lo,hi` in area.
        #[arg(long, value_delimiter = ',')]
        bracket: Option<Vec<f64>>,
        #[arg(long)]
        tol: Option<f64>,
        /// Bootstrap resamples for the interval.
        #[arg(long)]
        bootstrap: Option<usize>,
        /// Repeat at twice the box side.
        #[arg(long)]
        two_size: bool,
    },
    /// Run named property checks.
    LemmaCheck {
        #[command(flatten)]
        common: Common,
        /// Check ids, e.g. `lemma2,lemma4,thm5-rigorous`.
        #[arg(long, value_delimiter = ',')]
        lemmas: Option<Vec<String>>,
        /// Monte Carlo scale, 1.0 is full size.
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Truncated Galton-Watson survival, optionally the spatial event
    /// comparison between R/r = 20 and 40.
    Branching {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        cap: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        spatial: bool,
        /// Surviving runs for the spatial estimate.
        #[arg(long)]
        surviving: Option<u64>,
        /// Root height in units of R for the spatial estimate.
        #[arg(long)]
        z0: Option<f64>,
    },
    /// Block renormalization on sampled fields.
    Renorm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        area: Option<f64>,
        #[arg(long)]
        n: Option<u64>,
        /// Block ratio R/r.
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        cap: Option<u64>,
        #[arg(long)]
        depth: Option<u64>,
        /// Number of independent lattice runs.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated annulus thicknesses.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// `round` or `square`.
    #[arg(long)]
    norm: Option<Norm>,
    /// Box side in units of r.
    #[arg(long = "l-over-r")]
    l_over_r: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self, mode: RunMode) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.mode = mode;
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.trials, self.trials);
        set(&mut cfg.eps, self.eps.clone());
        set(&mut cfg.norm, self.norm);
        set(&mut cfg.l_over_r, self.l_over_r);
        set(&mut cfg.out, self.out.clone());
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn configure(command: Command) -> Result<ExperimentConfig> {
    let cfg = match command {
        Command::Simulate { common, areas } => {
            let mut cfg = common.load(RunMode::Simulate)?;
            set(&mut cfg.areas, areas);
            cfg
        }
        Command::NcSweep {
            common,
            bracket,
            tol,
            bootstrap,
            two_size,
        } => {
            let mut cfg = common.load(RunMode::NcSweep)?;
            if let Some(b) = bracket {
                let [lo, hi] = b[..] else {
                    anyhow::bail!("--bracket takes exactly two values, got {}", b.len());
                };
                cfg.bracket = Some([lo, hi]);
            }
            set(&mut cfg.tol, tol);
            set(&mut cfg.bootstrap, bootstrap);
            cfg.two_size |= two_size;
            cfg
        }
        Command::LemmaCheck {
            common,
            lemmas,
            budget,
        } => {
            let mut cfg = common.load(RunMode::LemmaCheck)?;
            set(&mut cfg.lemmas, lemmas);
            set(&mut cfg.budget, budget);
            cfg
        }
        Command::Branching {
            common,
            eta,
            cap,
            horizon,
            runs,
            spatial,
            surviving,
            z0,
        } => {
            let mut cfg = common.load(RunMode::Branching)?;
            let b = &mut cfg.branching;
            set(&mut b.eta, eta);
            set(&mut b.cap, cap);
            set(&mut b.horizon, horizon);
            set(&mut b.runs, runs);
            set(&mut b.surviving, surviving);
            set(&mut b.z0, z0);
            b.spatial |= spatial;
            cfg
        }
        Command::Renorm {
            common,
            area,
            n,
            ratio,
            cap,
            depth,
            seeds,
            strict,
        } => {
            let mut cfg = common.load(RunMode::Renorm)?;
            let s = &mut cfg.renorm;
            set(&mut s.area, area);
            set(&mut s.n, n);
            set(&mut s.ratio, ratio);
            set(&mut s.cap, cap);
            set(&mut s.depth, depth);
            set(&mut s.seeds, seeds);
            s.strict |= strict;
            if let Some(e) = common.eps.as_ref().and_then(|e| e.first()) {
                s.eps = *e;
            }
            cfg
        }
    };
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = configure(cli.command)?;
    let outcome =
        run_experiment(&cfg).with_context(|| format!("{} run failed", cfg.mode.name()))?;
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    println!(
        "{}: {}",
        cfg.mode.name(),
        if outcome.pass { "pass" } else { "FAIL" }
    );
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
