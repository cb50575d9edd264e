//! On-disk artifacts and the comparison tables built from them.
//!
//! A run directory holds `trace.csv`, `trace.json`, `summary.json` and, for
//! phase runs, `reconstruction.pgm` and `reconstruction.npy`. The tables are
//! `comparison.csv` (long format: `run_id,k,step_norm,gap`) and `rates.csv`
//! (one row per run).

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use regap::algorithms::measure_rate_from_norms;
use regap::phase::{write_npy, write_pgm};
use regap::trace::{read_csv_rows, TraceRow};

use crate::error::{CliError, CliResult};
use crate::experiment::{is_nonconvergent, RunOutput, Summary};

pub const TRACE_CSV: &str = "trace.csv";
const TRACE_JSON: &str = "trace.json";
const SUMMARY_JSON: &str = "summary.json";

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path.display(), e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path.display(), e))
}

pub fn write_run(dir: &Path, out: &RunOutput) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;

    let path = dir.join(TRACE_CSV);
    let mut w = create(&path)?;
    out.trace.write_csv(&mut w).map_err(|e| CliError::io(path.display(), e))?;
    finish(w, &path)?;

    let path = dir.join(TRACE_JSON);
    let json = out.trace.to_json().map_err(|e| CliError::io(path.display(), e))?;
    fs::write(&path, json + "\n").map_err(|e| CliError::io(path.display(), e))?;

    let path = dir.join(SUMMARY_JSON);
    let json =
        serde_json::to_string_pretty(&out.summary).map_err(|e| CliError::io(path.display(), e))?;
    fs::write(&path, json + "\n").map_err(|e| CliError::io(path.display(), e))?;

    if let Some((shape, image)) = &out.image {
        let path = dir.join("reconstruction.pgm");
        let mut w = create(&path)?;
        write_pgm(&mut w, *shape, image).map_err(|e| CliError::io(path.display(), e))?;
        finish(w, &path)?;
        let path = dir.join("reconstruction.npy");
        let mut w = create(&path)?;
        write_npy(&mut w, *shape, image).map_err(|e| CliError::io(path.display(), e))?;
        finish(w, &path)?;
    }
    Ok(())
}

/// One trace series of a comparison table.
#[derive(Debug, Clone)]
pub struct Series {
    pub run_id: String,
    pub rows: Vec<TraceRow>,
    pub summary: Option<Summary>,
}

impl Series {
    pub fn reason(&self) -> &str {
        self.rows.last().and_then(|r| r.reason.as_deref()).unwrap_or("")
    }

    /// Single-step norms in iteration order, mirroring the trace's own
    /// flattening: a zero first C-step means the run started on C.
    fn step_sequence(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.rows.len());
        for r in &self.rows {
            if r.k > 0 || r.step_norm > 0.0 {
                out.push(r.step_norm);
            }
            out.push(r.gap);
        }
        out
    }

    pub fn measured_rate(&self, tail_fraction: f64) -> Option<f64> {
        if self.reason() == "stalled_gap" {
            return None;
        }
        measure_rate_from_norms(&self.step_sequence(), tail_fraction).ok()
    }
}

#[derive(Serialize)]
struct ComparisonRow<'a> {
    run_id: &'a str,
    k: usize,
    step_norm: f64,
    gap: f64,
}

#[derive(Serialize)]
struct RateRow<'a> {
    run_id: &'a str,
    label: &'a str,
    reason: &'a str,
    iterations: usize,
    measured_rate: Option<f64>,
    predicted_rate: Option<f64>,
    nonconvergent: bool,
}

pub fn write_tables(dir: &Path, series: &[Series]) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
    let path = dir.join("comparison.csv");
    let mut wtr = csv::Writer::from_path(&path).map_err(|e| CliError::io(path.display(), e))?;
    for s in series {
        for r in &s.rows {
            let row =
                ComparisonRow { run_id: &s.run_id, k: r.k, step_norm: r.step_norm, gap: r.gap };
            wtr.serialize(row).map_err(|e| CliError::io(path.display(), e))?;
        }
    }
    wtr.flush().map_err(|e| CliError::io(path.display(), e))?;

    let path = dir.join("rates.csv");
    let mut wtr = csv::Writer::from_path(&path).map_err(|e| CliError::io(path.display(), e))?;
    for s in series {
        let tail = s
            .summary
            .as_ref()
            .and_then(|m| m.parameters.get("tail_fraction"))
            .and_then(|v| v.parse().ok())
            .unwrap_or(0.5);
        let row = RateRow {
            run_id: &s.run_id,
            label: s.summary.as_ref().map_or("", |m| m.label.as_str()),
            reason: s.reason(),
            iterations: s.rows.len(),
            measured_rate: s.measured_rate(tail),
            predicted_rate: s.summary.as_ref().and_then(|m| m.predicted_rate),
            nonconvergent: is_nonconvergent(s.reason()),
        };
        wtr.serialize(row).map_err(|e| CliError::io(path.display(), e))?;
    }
    wtr.flush().map_err(|e| CliError::io(path.display(), e))
}

impl From<&RunOutput> for Series {
    fn from(out: &RunOutput) -> Self {
        Series {
            run_id: out.summary.run_id.clone(),
            rows: out.trace.rows(),
            summary: Some(out.summary.clone()),
        }
    }
}

fn load_dir(dir: &Path, run_id: String) -> CliResult<Series> {
    let path = dir.join(TRACE_CSV);
    let file = File::open(&path).map_err(|e| CliError::io(path.display(), e))?;
    let rows = read_csv_rows(BufReader::new(file)).map_err(|e| CliError::io(path.display(), e))?;
    if rows.is_empty() || rows.last().and_then(|r| r.reason.as_ref()).is_none() {
        return Err(CliError::io(path.display(), "trace is empty or has no termination reason"));
    }
    let path = dir.join(SUMMARY_JSON);
    let summary = match File::open(&path) {
        Ok(f) => Some(
            serde_json::from_reader(BufReader::new(f))
                .map_err(|e| CliError::io(path.display(), e))?,
        ),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(CliError::io(path.display(), e)),
    };
    Ok(Series { run_id, rows, summary })
}

fn name_of(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Loads every series under `paths`. A path is either a run directory or a
/// directory whose subdirectories are runs (the output of a sweep). Run ids
/// are directory names, qualified by the parent when that is ambiguous.
pub fn load_series(paths: &[PathBuf]) -> CliResult<Vec<Series>> {
    let mut found: Vec<(PathBuf, String, String)> = Vec::new();
    for p in paths {
        if !p.is_dir() {
            return Err(CliError::io(p.display(), "not a directory"));
        }
        if p.join(TRACE_CSV).exists() {
            found.push((p.clone(), name_of(p), p.display().to_string()));
            continue;
        }
        let mut children: Vec<PathBuf> = fs::read_dir(p)
            .map_err(|e| CliError::io(p.display(), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|c| c.join(TRACE_CSV).exists())
            .collect();
        if children.is_empty() {
            return Err(CliError::io(p.display(), "no trace.csv here or in any subdirectory"));
        }
        children.sort();
        for c in children {
            let full = format!("{}/{}", name_of(p), name_of(&c));
            found.push((c.clone(), name_of(&c), full));
        }
    }
    let ids: Vec<&String> = found.iter().map(|f| &f.1).collect();
    found
        .iter()
        .map(|(dir, short, long)| {
            let unique = ids.iter().filter(|i| *i == &short).count() == 1;
            load_dir(dir, if unique { short.clone() } else { long.clone() })
        })
        .collect()
}
