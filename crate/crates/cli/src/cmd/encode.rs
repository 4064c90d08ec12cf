use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use owoml_core::data::{encode_label, rate_encode, save_spike_dataset, LabelEncoding, TaskDataset};
use owoml_core::seeding::rng_for;
use owoml_core::Example;

use crate::CliError;

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Pattern file: one example per line, `label,p_1,...,p_C` with intensities in [0, 1].
    /// Blank lines and lines starting with `#` are skipped.
    input: PathBuf,
    /// Output dataset file.
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, default_value_t = 40)]
    horizon: usize,
    /// Spike probability per step at intensity 1.
    #[arg(long, default_value_t = 0.5)]
    max_rate: f64,
    /// Number of label channels [default: largest label + 1].
    #[arg(long)]
    num_classes: Option<usize>,
    #[arg(long, default_value_t = 0.9)]
    active_rate: f64,
    #[arg(long, default_value_t = 0.05)]
    inactive_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parsed `(label, pattern)` rows.
pub fn parse_patterns(text: &str) -> Result<Vec<(usize, Vec<f64>)>, String> {
    let mut rows = Vec::new();
    let mut width = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let label = fields
            .next()
            .and_then(|f| f.parse::<usize>().ok())
            .ok_or_else(|| format!("line {}: expected a class index first", n + 1))?;
        let pattern = fields
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| format!("line {}: {e}", n + 1))?;
        if pattern.is_empty() {
            return Err(format!("line {}: no intensities", n + 1));
        }
        if let Some(p) = pattern.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(format!("line {}: intensity {p} outside [0, 1]", n + 1));
        }
        match width {
            None => width = Some(pattern.len()),
            Some(w) if w != pattern.len() => {
                return Err(format!(
                    "line {}: {} intensities, expected {w}",
                    n + 1,
                    pattern.len()
                ))
            }
            _ => {}
        }
        rows.push((label, pattern));
    }
    Ok(rows)
}

pub fn encode_patterns(
    rows: &[(usize, Vec<f64>)],
    args: &EncodeArgs,
) -> Result<TaskDataset, CliError> {
    let max_label = rows.iter().map(|r| r.0).max();
    let num_classes = match (args.num_classes, max_label) {
        (Some(c), _) => c,
        (None, Some(m)) => m + 1,
        (None, None) => {
            return Err(CliError::config(
                "empty pattern file needs --num-classes",
            ))
        }
    };
    let enc = LabelEncoding {
        active_rate: args.active_rate,
        inactive_rate: args.inactive_rate,
    };
    let mut examples = Vec::with_capacity(rows.len());
    for (n, (label, pattern)) in rows.iter().enumerate() {
        let mut rng = rng_for(args.seed, &[n as u64]);
        let x = rate_encode(pattern, args.horizon, args.max_rate, &mut rng)
            .map_err(CliError::config)?;
        let y = encode_label(*label, num_classes, args.horizon, enc, &mut rng)
            .map_err(CliError::config)?;
        examples.push(Example {
            x,
            y,
            label: *label,
        });
    }
    Ok(TaskDataset {
        in_channels: rows.first().map_or(0, |r| r.1.len()),
        out_channels: num_classes,
        horizon: args.horizon,
        examples,
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Runtime)
}

pub fn run(args: EncodeArgs) -> Result<(), CliError> {
    if args.horizon == 0 {
        return Err(CliError::config("horizon must be positive"));
    }
    let text = read(&args.input)?;
    let rows = parse_patterns(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.input.display())))?;
    let ds = encode_patterns(&rows, &args)?;
    save_spike_dataset(&ds, &args.output)
        .with_context(|| format!("writing {}", args.output.display()))?;
    log::info!(
        "wrote {} examples ({} inputs, {} classes, T = {}) to {}",
        ds.examples.len(),
        ds.in_channels,
        ds.out_channels,
        ds.horizon,
        args.output.display()
    );
    Ok(())
}
