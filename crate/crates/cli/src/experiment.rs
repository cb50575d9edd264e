//! Problem construction and solving for one sweep point.
//!
//! Randomness comes from the run's `seed` through ChaCha8 streams: stream 0
//! draws instance data, stream 1 draws starting points and stream 2 drives
//! the Monte Carlo estimates. A run therefore depends only on its own
//! settings, never on its position in a sweep or on the worker that ran it.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use regap::algorithms::{
    exact_alternating_projections, inexact_alternating_projections, measure_rate, predict_rate,
    regularized_extrapolated_ap, InexactAPConfig, LambdaSchedule,
};
use regap::divergence::{BregmanDistance, ForwardMap, RegularizedSet};
use regap::linalg::{basis_matrix, orthogonal_complement, orthonormal_columns};
use regap::phase::{
    box_support, cup_object, interiority_check, reconstruct, synthesize, synthesize_from_object,
    PhaseInstance, ReconstructOptions, StartPoint,
};
use regap::projectors::{AffineSet, Ball, BoxSet, Halfspace, TiltedProjector};
use regap::regularity::{cbar_sampled, cbar_subspaces, RegularityEstimate, RegularityMethod};
use regap::set::SetOracle;
use regap::trace::{IterationTrace, TerminationReason};
use regap::{Point, ScalarKind};

use crate::config::{Real, Settings, Shape, SweepPoint};
use crate::error::{CliError, CliResult};

const INTERIOR_PROBES: usize = 32;
const CBAR_SAMPLES: usize = 256;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    TwoSubspaces,
    ParallelLines,
    BoxAffine,
    PhaseRetrieval,
    Custom,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::TwoSubspaces => "two_subspaces",
            ProblemKind::ParallelLines => "parallel_lines",
            ProblemKind::BoxAffine => "box_affine",
            ProblemKind::PhaseRetrieval => "phase_retrieval",
            ProblemKind::Custom => "custom",
        }
    }
}

impl FromStr for ProblemKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "two_subspaces" => ProblemKind::TwoSubspaces,
            "parallel_lines" => ProblemKind::ParallelLines,
            "box_affine" => ProblemKind::BoxAffine,
            "phase_retrieval" => ProblemKind::PhaseRetrieval,
            "custom" => ProblemKind::Custom,
            _ => {
                return Err("expected two_subspaces, parallel_lines, box_affine, \
                            phase_retrieval or custom"
                    .into())
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    ExactAp,
    InexactAp,
    RegularizedExtrapolated,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::ExactAp => "exact_ap",
            Algorithm::InexactAp => "inexact_ap",
            Algorithm::RegularizedExtrapolated => "regularized_extrapolated",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "exact_ap" => Algorithm::ExactAp,
            "inexact_ap" => Algorithm::InexactAp,
            "regularized_extrapolated" => Algorithm::RegularizedExtrapolated,
            _ => return Err("expected exact_ap, inexact_ap or regularized_extrapolated".into()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ObjectKind {
    Cup,
    Random,
}

impl FromStr for ObjectKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cup" => Ok(ObjectKind::Cup),
            "random" => Ok(ObjectKind::Random),
            _ => Err("expected cup or random".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StartKind {
    NearTruth,
    Random,
}

impl FromStr for StartKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "near_truth" => Ok(StartKind::NearTruth),
            "random" => Ok(StartKind::Random),
            _ => Err("expected near_truth or random".into()),
        }
    }
}

/// Set description in a custom instance file.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum SetSpec {
    /// `{ x : A x = b }`, `a` given by rows.
    Affine {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `null` bounds are unbounded.
    Box {
        lower: Vec<Option<f64>>,
        upper: Vec<Option<f64>>,
    },
}

/// Custom instance file: two sets and an optional start and `c_bar`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomFile {
    c: SetSpec,
    m: SetSpec,
    #[serde(default)]
    x0: Option<Vec<f64>>,
    #[serde(default)]
    c_bar: Option<f64>,
}

#[derive(Debug, Clone)]
enum AnySet {
    Affine(AffineSet),
    Halfspace(Halfspace),
    Ball(Ball),
    Box(BoxSet),
}

impl AnySet {
    fn from_spec(spec: SetSpec) -> regap::Result<Self> {
        Ok(match spec {
            SetSpec::Affine { a, b } => {
                let rows = a.len();
                let cols = a.first().map_or(0, Vec::len);
                if a.iter().any(|r| r.len() != cols) {
                    return Err(regap::Error::InvalidParameter("ragged affine matrix".into()));
                }
                let flat: Vec<f64> = a.into_iter().flatten().collect();
                AnySet::Affine(AffineSet::new(DMatrix::from_row_slice(rows, cols, &flat), b)?)
            }
            SetSpec::Halfspace { normal, offset } => {
                AnySet::Halfspace(Halfspace::new(normal, offset)?)
            }
            SetSpec::Ball { center, radius } => AnySet::Ball(Ball::new(center, radius)?),
            SetSpec::Box { lower, upper } => AnySet::Box(BoxSet::new(
                lower.into_iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect(),
                upper.into_iter().map(|v| v.unwrap_or(f64::INFINITY)).collect(),
            )?),
        })
    }

    fn oracle(&self) -> &dyn SetOracle {
        match self {
            AnySet::Affine(s) => s,
            AnySet::Halfspace(s) => s,
            AnySet::Ball(s) => s,
            AnySet::Box(s) => s,
        }
    }

    fn affine(&self) -> Option<&AffineSet> {
        match self {
            AnySet::Affine(s) => Some(s),
            _ => None,
        }
    }
}

/// Problems posed as a pair of sets in `R^n`.
#[derive(Debug, Clone)]
struct Geometric {
    c: AnySet,
    m: AnySet,
    x0: Point,
    c_bar: Option<RegularityEstimate>,
    c_bar_note: Option<String>,
    /// Whether `c_bar` may be estimated by sampling at the terminal point.
    sample_cbar: bool,
}

#[derive(Debug, Clone)]
struct Phase {
    instance: PhaseInstance,
    epsilon: f64,
    start: StartKind,
    start_noise: f64,
    restarts: usize,
    accept_error: f64,
}

#[derive(Debug, Clone)]
enum Problem {
    Geometric(Box<Geometric>),
    Phase(Box<Phase>),
}

/// A validated, ready-to-run sweep point.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub run_id: String,
    pub label: String,
    pub parameters: BTreeMap<String, String>,
    pub kind: ProblemKind,
    pub algorithm: Algorithm,
    pub seed: u64,
    cfg: InexactAPConfig,
    tilt: f64,
    epsilon: Option<f64>,
    tail_fraction: f64,
    problem: Problem,
}

/// Per-run summary written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub run_id: String,
    pub label: String,
    pub problem: String,
    pub algorithm: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub reason: String,
    /// The run ended without reaching a point of both sets.
    pub nonconvergent: bool,
    pub iterations: usize,
    pub final_step_norm: f64,
    pub final_gap: f64,
    pub measured_rate: Option<f64>,
    pub rate_note: Option<String>,
    pub predicted_rate: Option<f64>,
    pub c_bar: Option<f64>,
    pub c_bar_method: Option<RegularityMethod>,
    pub c_bar_note: Option<String>,
    /// Admissible normal-cone residual; absent for exact projections.
    pub gamma: Option<f64>,
    pub max_measured_gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub final_residual: Option<f64>,
    pub interior: Option<bool>,
    pub reconstruction_error: Option<f64>,
    pub restarts_used: Option<usize>,
}

pub struct RunOutput {
    pub trace: IterationTrace,
    pub summary: Summary,
    /// Real-valued reconstruction grid of phase runs.
    pub image: Option<((usize, usize), Vec<f64>)>,
}

pub fn is_nonconvergent(reason: &str) -> bool {
    reason == TerminationReason::StalledGap.as_str()
        || reason == TerminationReason::MaxIter.as_str()
}

impl Experiment {
    pub fn build(index: usize, point: &SweepPoint, base_dir: &Path) -> CliResult<Experiment> {
        let mut s = Settings::new(point.values.clone());
        let kind: ProblemKind = s.require("problem", "every run")?;
        let algorithm: Algorithm = s.require("algorithm", "every run")?;
        let seed: u64 = s.take_or("seed", 0)?;
        let defaults = InexactAPConfig::default();
        let mut cfg = InexactAPConfig {
            max_iterations: s.take_or("max_iter", defaults.max_iterations)?,
            fixed_point_tolerance: s.take_or("tolerance", defaults.fixed_point_tolerance)?,
            stall_window: s.take_or("stall_window", defaults.stall_window)?,
            stall_threshold: s.take_or("stall_threshold", defaults.stall_threshold)?,
            ..defaults
        };
        let tail_fraction: f64 = s.take_or("tail_fraction", 0.5)?;
        if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
            return Err(CliError::config("tail_fraction must lie in (0, 1]"));
        }

        let mut tilt = 0.0;
        let mut epsilon = None;
        match algorithm {
            Algorithm::ExactAp => {}
            Algorithm::InexactAp => {
                cfg.gamma = s.take_or("gamma", cfg.gamma)?;
                tilt = s.take_or("tilt", cfg.gamma)?;
                cfg.strict = s.take_or("strict", false)?;
            }
            Algorithm::RegularizedExtrapolated => {
                cfg.gamma = s.take_or("gamma", cfg.gamma)?;
                cfg.strict = s.take_or("strict", false)?;
                cfg.lambda_schedule = s.take_or("lambda_schedule", LambdaSchedule::Surface)?;
                epsilon = s.take::<f64>("epsilon")?;
            }
        }
        cfg.validate().map_err(|e| CliError::config(e.to_string()))?;
        if !(0.0..1.0).contains(&tilt) {
            return Err(CliError::config(format!("tilt must lie in [0, 1), got {tilt}")));
        }
        if let Some(e) = epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(CliError::config(format!("epsilon must be >= 0, got {e}")));
            }
        }

        let problem = match kind {
            ProblemKind::PhaseRetrieval => {
                if algorithm != Algorithm::RegularizedExtrapolated {
                    return Err(CliError::config(
                        "phase_retrieval runs use algorithm = regularized_extrapolated \
                         (epsilon = 0 gives the unregularized iteration)",
                    ));
                }
                let (phase, eps) = build_phase(&mut s, seed, epsilon, base_dir)?;
                epsilon = Some(eps);
                Problem::Phase(Box::new(phase))
            }
            _ => {
                if algorithm == Algorithm::RegularizedExtrapolated && epsilon.is_none() {
                    return Err(CliError::config("regularized_extrapolated requires `epsilon`"));
                }
                let g = build_geometric(kind, &mut s, seed, base_dir)?;
                if algorithm != Algorithm::ExactAp && g.m.affine().is_none() {
                    return Err(CliError::config(format!(
                        "{} needs an affine set m in the custom instance",
                        algorithm.as_str()
                    )));
                }
                Problem::Geometric(Box::new(g))
            }
        };
        s.finish(&format!("problem {} with algorithm {}", kind.as_str(), algorithm.as_str()))?;

        let mut parameters = point.values.clone();
        parameters.remove("out");
        Ok(Experiment {
            run_id: format!("run_{index:03}"),
            label: point.label(),
            parameters,
            kind,
            algorithm,
            seed,
            cfg,
            tilt,
            epsilon,
            tail_fraction,
            problem,
        })
    }

    pub fn run(&self) -> CliResult<RunOutput> {
        let ctx = format!("{} ({})", self.run_id, self.label);
        match &self.problem {
            Problem::Geometric(g) => self.run_geometric(g).map_err(|e| CliError::solver(&ctx, e)),
            Problem::Phase(p) => self.run_phase(p).map_err(|e| CliError::solver(&ctx, e)),
        }
    }

    fn summary(&self, trace: &IterationTrace) -> Summary {
        let (measured_rate, rate_note) = match measure_rate(trace, self.tail_fraction) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let last = trace.records.last();
        let max_measured_gamma = trace.records.iter().filter_map(|r| r.gamma).reduce(f64::max);
        Summary {
            run_id: self.run_id.clone(),
            label: self.label.clone(),
            problem: self.kind.as_str().into(),
            algorithm: self.algorithm.as_str().into(),
            parameters: self.parameters.clone(),
            seed: self.seed,
            reason: trace.reason.as_str().into(),
            nonconvergent: is_nonconvergent(trace.reason.as_str()),
            iterations: trace.len(),
            final_step_norm: last.map_or(0.0, |r| r.step_norm),
            final_gap: last.map_or(0.0, |r| r.gap),
            measured_rate,
            rate_note,
            predicted_rate: None,
            c_bar: None,
            c_bar_method: None,
            c_bar_note: None,
            gamma: (self.algorithm != Algorithm::ExactAp).then_some(self.cfg.gamma),
            max_measured_gamma,
            epsilon: self.epsilon,
            final_residual: None,
            interior: None,
            reconstruction_error: None,
            restarts_used: None,
        }
    }

    fn run_geometric(&self, g: &Geometric) -> regap::Result<RunOutput> {
        let c = g.c.oracle();
        let mut regularized = None;
        let trace = match self.algorithm {
            Algorithm::ExactAp => exact_alternating_projections(c, g.m.oracle(), &g.x0, &self.cfg)?,
            Algorithm::InexactAp => {
                let m = g.m.affine().expect("checked at build time");
                let origin = Point::zeros(m.dim(), ScalarKind::Real);
                let tilted =
                    TiltedProjector::with_gamma(m.clone(), self.tilt, m.project_point(&origin)?)?;
                let e0 = c.project_point(&g.x0)?;
                let o0 = tilted.step(&e0)?;
                inexact_alternating_projections(
                    c,
                    |x: &Point| tilted.step(x),
                    m,
                    &e0,
                    &o0,
                    &self.cfg,
                )?
            }
            Algorithm::RegularizedExtrapolated => {
                let m = g.m.affine().expect("checked at build time");
                let reg = RegularizedSet::new(
                    ForwardMap::Linear(m.matrix().clone()),
                    m.rhs().to_vec(),
                    BregmanDistance::Euclidean,
                    self.epsilon.expect("checked at build time"),
                    m.dim(),
                    ScalarKind::Real,
                )?;
                let trace = regularized_extrapolated_ap(c, &reg, m, &g.x0, &self.cfg)?;
                regularized = Some(reg);
                trace
            }
        };
        let mut summary = self.summary(&trace);

        let mut estimate = g.c_bar.clone();
        summary.c_bar_note = g.c_bar_note.clone();
        let met =
            matches!(trace.reason, TerminationReason::FixedPoint | TerminationReason::ToleranceMet);
        if estimate.is_none() && g.sample_cbar && met {
            let seed = stream_rng(self.seed, 2).next_u64();
            let sampled = match &regularized {
                Some(reg) => cbar_sampled(c, reg, &trace.final_even, CBAR_SAMPLES, seed),
                None => cbar_sampled(c, g.m.oracle(), &trace.final_even, CBAR_SAMPLES, seed),
            };
            match sampled {
                Ok(e) => estimate = Some(e),
                Err(e) => summary.c_bar_note = Some(format!("sampling failed: {e}")),
            }
        }
        if let Some(e) = &estimate {
            summary.c_bar = Some(e.c_bar);
            summary.c_bar_method = Some(e.method);
            let gamma = match self.algorithm {
                Algorithm::ExactAp => Some(0.0),
                Algorithm::InexactAp => Some(self.cfg.gamma),
                Algorithm::RegularizedExtrapolated => None,
            };
            if let Some(gamma) = gamma {
                match predict_rate(e.c_bar, gamma, true) {
                    Ok(p) => summary.predicted_rate = Some(p.eta),
                    Err(err) => {
                        let note = format!("no prediction: {err}");
                        summary.rate_note = Some(match summary.rate_note.take() {
                            Some(n) => format!("{n}; {note}"),
                            None => note,
                        });
                    }
                }
            }
        }
        if let Some(reg) = &regularized {
            let x = &trace.final_even;
            summary.final_residual = Some(reg.residual(x)?);
            let seed = stream_rng(self.seed, 2).next_u64();
            let radius = 1e-6 * x.norm().max(1.0);
            summary.interior = Some(interiority_check(reg, x, INTERIOR_PROBES, radius, seed)?);
        }
        Ok(RunOutput { trace, summary, image: None })
    }

    fn run_phase(&self, p: &Phase) -> regap::Result<RunOutput> {
        let inst = &p.instance;
        let start = match p.start {
            StartKind::NearTruth => StartPoint::NearTruth { relative_noise: p.start_noise },
            StartKind::Random => StartPoint::Random,
        };
        let opts = ReconstructOptions {
            start,
            seed: stream_rng(self.seed, 1).next_u64(),
            restarts: p.restarts,
            accept_error: p.accept_error,
        };
        let rec = reconstruct(inst, p.epsilon, self.cfg.lambda_schedule.clone(), &self.cfg, &opts)?;
        let mut summary = self.summary(&rec.trace);
        summary.final_residual = Some(rec.final_residual);
        summary.reconstruction_error = Some(rec.error);
        summary.restarts_used = Some(rec.restarts_used);
        if p.epsilon > 0.0 {
            let m = inst.regularized_set(p.epsilon)?;
            let x = &rec.trace.final_even;
            let seed = stream_rng(self.seed, 2).next_u64();
            let radius = 1e-6 * x.norm().max(1e-300);
            summary.interior = Some(interiority_check(&m, x, INTERIOR_PROBES, radius, seed)?);
        }
        Ok(RunOutput { image: Some((inst.shape, rec.image)), trace: rec.trace, summary })
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn uniform_point(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Point {
    Point::real((0..n).map(|_| rng.random_range(lo..hi)).collect())
}

/// Orthonormal basis (as columns) of the direction space of `{A x = b}`.
fn direction_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    let rows = orthonormal_columns(&a.transpose());
    basis_matrix(&orthogonal_complement(&rows, n), n)
}

fn build_geometric(
    kind: ProblemKind,
    s: &mut Settings,
    seed: u64,
    base_dir: &Path,
) -> CliResult<Geometric> {
    let mut starts = stream_rng(seed, 1);
    let bad = |e: regap::Error| CliError::config(e.to_string());
    match kind {
        ProblemKind::TwoSubspaces => {
            let theta = s.take_or("theta", Real(std::f64::consts::FRAC_PI_3))?.0;
            if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2) {
                return Err(CliError::config(format!("theta must lie in (0, pi/2], got {theta}")));
            }
            let c = AffineSet::line_2d(0.0, [0.0, 0.0]).map_err(bad)?;
            let m = AffineSet::line_2d(theta, [0.0, 0.0]).map_err(bad)?;
            let est = cbar_subspaces(
                &DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
                &DMatrix::from_column_slice(2, 1, &[theta.cos(), theta.sin()]),
            )
            .map_err(bad)?;
            Ok(Geometric {
                c: AnySet::Affine(c),
                m: AnySet::Affine(m),
                x0: uniform_point(&mut starts, 2, -2.0, 2.0),
                c_bar: Some(est),
                c_bar_note: None,
                sample_cbar: false,
            })
        }
        ProblemKind::ParallelLines => {
            let distance: f64 = s.take_or("distance", 1.0)?;
            if !(distance > 0.0 && distance.is_finite()) {
                return Err(CliError::config(format!("distance must be positive, got {distance}")));
            }
            Ok(Geometric {
                c: AnySet::Affine(AffineSet::line_2d(0.0, [0.0, 0.0]).map_err(bad)?),
                m: AnySet::Affine(AffineSet::line_2d(0.0, [0.0, distance]).map_err(bad)?),
                x0: uniform_point(&mut starts, 2, -2.0, 2.0),
                c_bar: None,
                c_bar_note: Some("the sets do not intersect".into()),
                sample_cbar: false,
            })
        }
        ProblemKind::BoxAffine => {
            let dim: usize = s.take_or("dim", 4)?;
            let rows: usize = s.take_or("rows", 2)?;
            if !(rows >= 1 && rows < dim) {
                return Err(CliError::config(format!(
                    "need 1 <= rows < dim, got rows {rows}, dim {dim}"
                )));
            }
            let mut data = stream_rng(seed, 0);
            let a = DMatrix::from_fn(rows, dim, |_, _| data.random_range(-1.0..1.0));
            let inside = uniform_point(&mut data, dim, 0.0, 1.0);
            let b: Vec<f64> = (&a * nalgebra::DVector::from_column_slice(inside.as_slice()))
                .iter()
                .copied()
                .collect();
            Ok(Geometric {
                c: AnySet::Box(BoxSet::new(vec![0.0; dim], vec![1.0; dim]).map_err(bad)?),
                m: AnySet::Affine(AffineSet::new(a, b).map_err(bad)?),
                x0: uniform_point(&mut starts, dim, -2.0, 3.0),
                c_bar: None,
                c_bar_note: None,
                sample_cbar: true,
            })
        }
        ProblemKind::Custom => {
            let path = resolve(base_dir, &s.require::<String>("instance", "problem custom")?);
            let file = File::open(&path).map_err(|e| CliError::io(path.display(), e))?;
            let spec: CustomFile = serde_json::from_reader(BufReader::new(file))
                .map_err(|e| CliError::io(path.display(), e))?;
            let c = AnySet::from_spec(spec.c).map_err(|e| CliError::io(path.display(), e))?;
            let m = AnySet::from_spec(spec.m).map_err(|e| CliError::io(path.display(), e))?;
            let n = c.oracle().dim();
            if m.oracle().dim() != n {
                return Err(CliError::io(
                    path.display(),
                    format!("sets live in different dimensions ({n} and {})", m.oracle().dim()),
                ));
            }
            let x0 = match spec.x0 {
                Some(v) if v.len() == n => Point::real(v),
                Some(v) => {
                    return Err(CliError::io(
                        path.display(),
                        format!("x0 has {} entries, expected {n}", v.len()),
                    ))
                }
                None => uniform_point(&mut starts, n, -2.0, 2.0),
            };
            x0.validate().map_err(|e| CliError::io(path.display(), e))?;
            let mut c_bar = spec
                .c_bar
                .map(RegularityEstimate::user_supplied)
                .transpose()
                .map_err(|e| CliError::io(path.display(), e))?;
            let mut note = None;
            if c_bar.is_none() {
                if let (Some(ca), Some(ma)) = (c.affine(), m.affine()) {
                    match cbar_subspaces(
                        &direction_space(ca.matrix()),
                        &direction_space(ma.matrix()),
                    ) {
                        Ok(e) => c_bar = Some(e),
                        Err(e) => note = Some(format!("no subspace estimate: {e}")),
                    }
                }
            }
            let sample_cbar = c_bar.is_none();
            Ok(Geometric { c, m, x0, c_bar, c_bar_note: note, sample_cbar })
        }
        ProblemKind::PhaseRetrieval => unreachable!("phase problems are built separately"),
    }
}

/// Synthetic phase instance from `shape`, `photon_scale`, `margin` and
/// `object`, shared by `run` and `synth`.
pub fn synth_instance(s: &mut Settings, seed: u64) -> CliResult<PhaseInstance> {
    let Shape(n1, n2) = s.take_or("shape", Shape(32, 32))?;
    let photon_scale: f64 = s.take_or("photon_scale", 1e4)?;
    let margin: usize = s.take_or("margin", 1)?;
    let object: ObjectKind = s.take_or("object", ObjectKind::Cup)?;
    if !(photon_scale > 0.0 && photon_scale.is_finite()) {
        return Err(CliError::config(format!("photon_scale must be positive, got {photon_scale}")));
    }
    let shape = (n1, n2);
    let cup = cup_object(shape);
    let support = box_support(shape, &cup, margin);
    let inst = match object {
        ObjectKind::Cup => synthesize_from_object(shape, cup, &support, photon_scale, seed),
        ObjectKind::Random => synthesize(shape, &support, photon_scale, seed),
    };
    inst.map_err(|e| CliError::config(e.to_string()))
}

fn build_phase(
    s: &mut Settings,
    seed: u64,
    epsilon: Option<f64>,
    base_dir: &Path,
) -> CliResult<(Phase, f64)> {
    let instance = match s.take::<String>("instance")? {
        Some(p) => {
            for k in ["shape", "photon_scale", "margin", "object"] {
                if s.has(k) {
                    return Err(CliError::config(format!("`{k}` conflicts with `instance`")));
                }
            }
            let path = resolve(base_dir, &p);
            let file = File::open(&path).map_err(|e| CliError::io(path.display(), e))?;
            PhaseInstance::read_binary(BufReader::new(file))
                .map_err(|e| CliError::io(path.display(), e))?
        }
        None => synth_instance(s, seed)?,
    };
    let kappa = s.take::<f64>("kappa")?;
    let eps = match (epsilon, kappa) {
        (Some(_), Some(_)) => {
            return Err(CliError::config("give either `epsilon` or `kappa`, not both"))
        }
        (Some(e), None) => e,
        (None, k) => {
            let k = k.unwrap_or(1.0);
            if !(k >= 0.0 && k.is_finite()) {
                return Err(CliError::config(format!("kappa must be >= 0, got {k}")));
            }
            instance.epsilon_for(k).map_err(|e| CliError::config(e.to_string()))?
        }
    };
    let start: StartKind = s.take_or("start", StartKind::NearTruth)?;
    let start_noise: f64 =
        if start == StartKind::NearTruth { s.take_or("start_noise", 0.1)? } else { 0.0 };
    if !(start_noise >= 0.0 && start_noise.is_finite()) {
        return Err(CliError::config(format!("start_noise must be >= 0, got {start_noise}")));
    }
    let restarts = s.take_or("restarts", 0)?;
    let accept_error = s.take_or("accept_error", f64::INFINITY)?;
    Ok((Phase { instance, epsilon: eps, start, start_noise, restarts, accept_error }, eps))
}
