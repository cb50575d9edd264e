//! `regap`: run alternating-projection experiments, tabulate their traces and
//! synthesize phase-retrieval instances.

mod config;
mod error;
mod experiment;
mod output;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{expand, parse, parse_override, RawConfig, Settings};
use crate::error::{CliError, CliResult};
use crate::experiment::{synth_instance, Experiment};
use crate::output::{load_series, write_run, write_tables, Series};

#[derive(Parser)]
#[command(name = "regap", version, about = "Regularized inexact alternating projections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment or a sweep and write per-run artifacts.
    Run(RunArgs),
    /// Build comparison tables from finished run directories.
    Report(ReportArgs),
    /// Write a synthetic phase-retrieval instance and its JSON sidecar.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; must be empty or absent unless --force is given.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    lambda_schedule: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Set any configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Write into a non-empty output directory, replacing earlier runs.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directories, or directories containing run directories.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Directory receiving comparison.csv and rates.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance file; the sidecar is written next to it with a .json extension.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("regap: {e}");
            e.exit_code()
        }
    }
}

/// Reads the config file (if any) and applies `--set` overrides. Returns the
/// directory relative paths in the file resolve against.
fn load_config(path: Option<&Path>, sets: &[String]) -> CliResult<(RawConfig, PathBuf)> {
    let (mut raw, base) = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            let raw =
                parse(&text).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (raw, base)
        }
        None => (RawConfig::new(), PathBuf::new()),
    };
    for s in sets {
        let (k, v) = parse_override(s)?;
        raw.insert(k, v);
    }
    Ok((raw, base))
}

fn run(a: RunArgs) -> CliResult<()> {
    let (mut raw, base) = load_config(a.config.as_deref(), &a.set)?;
    for (key, value) in [
        ("seed", a.seed),
        ("epsilon", a.epsilon),
        ("gamma", a.gamma),
        ("lambda_schedule", a.lambda_schedule),
        ("max_iter", a.max_iter),
    ] {
        if let Some(v) = value {
            raw.insert(key.into(), v);
        }
    }
    let out = match (a.out, raw.remove("out")) {
        (Some(o), _) => o,
        (None, Some(o)) => base.join(o),
        (None, None) => {
            return Err(CliError::config("no output directory (use --out or `out = ...`)"))
        }
    };
    let points = expand(&raw)?;
    let experiments = points
        .iter()
        .enumerate()
        .map(|(i, p)| Experiment::build(i, p, &base))
        .collect::<CliResult<Vec<_>>>()?;
    if out.exists() {
        let nonempty =
            fs::read_dir(&out).map_err(|e| CliError::io(out.display(), e))?.next().is_some();
        if nonempty && !a.force {
            return Err(CliError::config(format!(
                "output directory {} is not empty (use --force to replace)",
                out.display()
            )));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| CliError::config(format!("worker pool: {e}")))?;
    let results: Vec<_> = pool.install(|| experiments.par_iter().map(Experiment::run).collect());
    let outputs = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    if a.force && out.exists() {
        for entry in fs::read_dir(&out).map_err(|e| CliError::io(out.display(), e))? {
            let path = entry.map_err(|e| CliError::io(out.display(), e))?.path();
            if path.is_dir()
                && path.file_name().is_some_and(|n| n.to_string_lossy().starts_with("run_"))
            {
                fs::remove_dir_all(&path).map_err(|e| CliError::io(path.display(), e))?;
            }
        }
    }
    for o in &outputs {
        write_run(&out.join(&o.summary.run_id), o)?;
        let rate = o.summary.measured_rate.map_or("-".into(), |r| format!("{r:.4}"));
        println!(
            "{} [{}] {} after {} iterations, rate {rate}",
            o.summary.run_id, o.summary.label, o.summary.reason, o.summary.iterations
        );
    }
    let series: Vec<Series> = outputs.iter().map(Series::from).collect();
    write_tables(&out, &series)?;
    Ok(())
}

fn report(a: ReportArgs) -> CliResult<()> {
    let series = load_series(&a.runs)?;
    write_tables(&a.out, &series)?;
    for s in &series {
        let flag =
            if crate::experiment::is_nonconvergent(s.reason()) { " (nonconvergent)" } else { "" };
        println!("{}: {} rows, {}{flag}", s.run_id, s.rows.len(), s.reason());
    }
    Ok(())
}

fn synth(a: SynthArgs) -> CliResult<()> {
    let (mut raw, _) = load_config(a.config.as_deref(), &a.set)?;
    if let Some(seed) = a.seed {
        raw.insert("seed".into(), seed.to_string());
    }
    let mut s = Settings::new(raw);
    let seed = s.take_or("seed", 0u64)?;
    let inst = synth_instance(&mut s, seed)?;
    s.finish("synth")?;
    let sidecar = inst.sidecar().map_err(|e| CliError::solver("sidecar", e))?;
    let json = serde_json::to_string_pretty(&sidecar).map_err(|e| CliError::io("sidecar", e))?;

    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
    }
    let file = fs::File::create(&a.out).map_err(|e| CliError::io(a.out.display(), e))?;
    inst.write_binary(BufWriter::new(file)).map_err(|e| CliError::io(a.out.display(), e))?;
    let side = a.out.with_extension("json");
    fs::write(&side, json + "\n").map_err(|e| CliError::io(side.display(), e))?;
    println!("wrote {} and {}", a.out.display(), side.display());
    Ok(())
}
