//! Per-iteration records of an alternating-projection run.
//!
//! Traces export to two stable formats:
//!
//! * CSV with the header `k,step_norm,gap,residual,gamma,lambda,reason`.
//!   Optional quantities are left empty. `reason` is filled on the final row only.
//! * A JSON array of objects with the same keys; optional values are `null`.
//!
//! Numbers use the shortest representation that round-trips to the same `f64`.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    FixedPoint,
    MaxIter,
    StalledGap,
    ToleranceMet,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::FixedPoint => "fixed_point",
            TerminationReason::MaxIter => "max_iter",
            TerminationReason::StalledGap => "stalled_gap",
            TerminationReason::ToleranceMet => "tolerance_met",
        }
    }
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TerminationReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_point" => Ok(TerminationReason::FixedPoint),
            "max_iter" => Ok(TerminationReason::MaxIter),
            "stalled_gap" => Ok(TerminationReason::StalledGap),
            "tolerance_met" => Ok(TerminationReason::ToleranceMet),
            other => Err(Error::Format(format!("unknown termination reason `{other}`"))),
        }
    }
}

/// One even/odd pair `(x^{2k}, x^{2k+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub even: Option<Point>,
    pub odd: Option<Point>,
    /// `|x^{2k} - x^{2k-1}|`, the projection onto C that produced the even point.
    pub step_norm: f64,
    /// `|x^{2k+1} - x^{2k}|`.
    pub gap: f64,
    /// `|x^{2k} - x^{2k-2}|`; absent for the first record.
    pub even_change: Option<f64>,
    /// `d_phi(g(x^{2k+1}), b)` when the odd set is regularized.
    pub residual: Option<f64>,
    /// Measured normal-cone residual of the odd step. `None` means unverified.
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    /// Whether the candidate satisfied the nonexpansion condition.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<TraceRecord>,
    pub reason: TerminationReason,
    pub final_even: Point,
    pub final_odd: Point,
}

/// Flat row shared by the CSV and JSON encodings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub step_norm: f64,
    pub gap: f64,
    pub residual: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub reason: Option<String>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Single-projection step norms in iteration order:
    /// `|x^1 - x^0|, |x^2 - x^1|, ...`. The first record's C-step is skipped
    /// when it is zero (the run started on C).
    pub fn step_sequence(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.records.len());
        for r in &self.records {
            if r.k > 0 || r.step_norm > 0.0 {
                out.push(r.step_norm);
            }
            out.push(r.gap);
        }
        out
    }

    /// Checks the structural invariant: records numbered `0, 1, 2, ...`.
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if r.k != i {
                return Err(Error::Format(format!(
                    "record {i} carries index {} (records must be consecutive from 0)",
                    r.k
                )));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> Vec<TraceRow> {
        let last = self.records.len().saturating_sub(1);
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| TraceRow {
                k: r.k,
                step_norm: r.step_norm,
                gap: r.gap,
                residual: r.residual,
                gamma: r.gamma,
                lambda: r.lambda,
                reason: (i == last).then(|| self.reason.as_str().to_string()),
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        if self.records.is_empty() {
            wtr.write_record(["k", "step_norm", "gap", "residual", "gamma", "lambda", "reason"])
                .map_err(csv_err)?;
        }
        for row in self.rows() {
            wtr.serialize(row).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.rows()).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn read_csv_rows<R: Read>(r: R) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let expected = ["k", "step_norm", "gap", "residual", "gamma", "lambda", "reason"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Format(format!("unexpected trace header {headers:?}")));
    }
    let rows =
        rdr.deserialize().collect::<std::result::Result<Vec<TraceRow>, _>>().map_err(csv_err)?;
    for (i, row) in rows.iter().enumerate() {
        if row.k != i {
            return Err(Error::Format(format!("trace row {i} has index {}", row.k)));
        }
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trace() -> IterationTrace {
        let records = (0..3)
            .map(|k| TraceRecord {
                k,
                even: None,
                odd: None,
                step_norm: 0.5f64.powi(k as i32),
                gap: 0.25 * 0.5f64.powi(k as i32),
                even_change: (k > 0).then_some(0.1),
                residual: if k == 1 { Some(0.125) } else { None },
                gamma: Some(0.0),
                lambda: Some(1.0),
                accepted: true,
            })
            .collect();
        IterationTrace {
            records,
            reason: TerminationReason::FixedPoint,
            final_even: Point::real(vec![0.0]),
            final_odd: Point::real(vec![0.0]),
        }
    }

    #[test]
    fn csv_layout_is_stable() {
        let mut buf = Vec::new();
        sample_trace().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let expected = "k,step_norm,gap,residual,gamma,lambda,reason\n\
                        0,1.0,0.25,,0.0,1.0,\n\
                        1,0.5,0.125,0.125,0.0,1.0,\n\
                        2,0.25,0.0625,,0.0,1.0,fixed_point\n";
        assert_eq!(text, expected);
        let rows = read_csv_rows(text.as_bytes()).unwrap();
        assert_eq!(rows, sample_trace().rows());
    }

    #[test]
    fn json_is_array_of_records() {
        let json = sample_trace().to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), 3);
        assert_eq!(arr[2]["reason"], "fixed_point");
        assert!(arr[0]["residual"].is_null());
        assert_eq!(arr[1]["k"], 1);
    }

    #[test]
    fn validate_detects_gaps() {
        let mut t = sample_trace();
        t.validate().unwrap();
        t.records[2].k = 5;
        assert!(t.validate().is_err());
    }

    #[test]
    fn reason_round_trip() {
        for r in [
            TerminationReason::FixedPoint,
            TerminationReason::MaxIter,
            TerminationReason::StalledGap,
            TerminationReason::ToleranceMet,
        ] {
            assert_eq!(r.as_str().parse::<TerminationReason>().unwrap(), r);
        }
        assert!("done".parse::<TerminationReason>().is_err());
    }
}
