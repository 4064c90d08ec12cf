use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use owoml_core::checkpoint::save_checkpoint;
use owoml_core::experiment::{aggregate_curves, curves_csv, run_experiment, ExperimentOutcome};
use rayon::prelude::*;

use crate::config::{RunConfig, SeedRange};
use crate::CliError;

pub const OUTPUT_DIR_ENV: &str = "OWOML_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "owoml-out";

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Override a config key, e.g. `--set experiment.meta.mu=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Inclusive seed range `A..B`; shorthand for `--set output.seeds="A..B"`.
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory [default: $OWOML_OUTPUT_DIR or ./owoml-out].
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
    /// Write zeros in the wallclock column so metrics files are reproducible byte for byte.
    #[arg(long)]
    no_wallclock: bool,
}

fn output_dir(args: &RunArgs, cfg: &RunConfig) -> PathBuf {
    args.output_dir
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

pub fn run(args: RunArgs) -> Result<(), CliError> {
    let mut overrides = args.overrides.clone();
    if let Some(seeds) = &args.seeds {
        seeds.parse::<SeedRange>().map_err(CliError::config)?;
        overrides.push(format!("output.seeds=\"{seeds}\""));
    }
    let cfg = RunConfig::load(&args.config, &overrides).map_err(CliError::config)?;
    let dir = output_dir(&args, &cfg);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.resolved.toml"), cfg.to_toml_string())
        .context("writing resolved config")?;

    let seeds: Vec<u64> = match cfg.output.seeds {
        Some(r) => r.iter().collect(),
        None => vec![cfg.experiment.seed],
    };
    log::info!(
        "running {} for {} seed(s) into {}",
        cfg.experiment.method,
        seeds.len(),
        dir.display()
    );
    let outcomes: Vec<ExperimentOutcome> = seeds
        .par_iter()
        .map(|&seed| run_seed(&cfg, seed, &dir))
        .collect::<anyhow::Result<_>>()?;

    for out in &outcomes {
        let path = dir.join(format!("metrics-seed{}.csv", out.seed));
        fs::write(&path, out.metrics.to_csv_string(!args.no_wallclock))
            .with_context(|| format!("writing {}", path.display()))?;
        let path = dir.join(format!("theta-seed{}.ckpt", out.seed));
        save_checkpoint(&path, &out.spec, &out.theta)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let runs: Vec<_> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    let curves = aggregate_curves(&runs, cfg.experiment.t_meta as u64);
    fs::write(dir.join("curves.csv"), curves_csv(&curves)).context("writing curves")?;
    for p in curves.iter().filter(|p| p.i == 1 || p.i % 5 == 0) {
        log::info!(
            "{} i={:>2} acc {:.3} ± {:.3}  loss {:.4}",
            p.method,
            p.i,
            p.accuracy_mean,
            p.accuracy_std,
            p.logloss_mean
        );
    }
    Ok(())
}

fn run_seed(cfg: &RunConfig, seed: u64, dir: &Path) -> anyhow::Result<ExperimentOutcome> {
    let every = cfg.output.checkpoint_every as u64;
    let mut failure: Option<anyhow::Error> = None;
    let mut spec = None;
    let mut on_task_end = |t: u64, theta: &owoml_core::ModelParams| {
        if every == 0 || t % every != 0 || failure.is_some() {
            return;
        }
        let spec = spec.get_or_insert_with(|| cfg.experiment.build_network());
        let result = match spec {
            Ok(spec) => {
                let path = dir.join(format!("theta-seed{seed}-t{t}.ckpt"));
                save_checkpoint(&path, spec, theta)
                    .with_context(|| format!("writing {}", path.display()))
            }
            Err(e) => Err(anyhow::anyhow!("{e}")),
        };
        if let Err(e) = result {
            failure = Some(e);
        }
    };
    let outcome = run_experiment(&cfg.experiment, seed, &mut on_task_end)
        .with_context(|| format!("seed {seed}"))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(outcome),
    }
}
