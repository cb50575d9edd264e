//! Python bindings for `regap`.
//!
//! Points and vectors cross the boundary as lists of floats and matrices as
//! lists of rows. Invalid input raises `ValueError`, file problems raise
//! `OSError` and solver failures raise `regap_py.SolverError`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};

use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use regap::algorithms::{self, InexactAPConfig, LambdaSchedule};
use regap::divergence::{BregmanDistance, ForwardMap, RegularizedSet};
use regap::phase::{self, ReconstructOptions, StartPoint};
use regap::projectors::{self, AffineSet, BoxSet, TiltedProjector};
use regap::regularity;
use regap::set::SetOracle;
use regap::trace::IterationTrace;
use regap::{Error, Point, ScalarKind};

create_exception!(regap_py, SolverError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Format(_) => PyIOError::new_err(e.to_string()),
        Error::DimensionMismatch { .. }
        | Error::NonFinite { .. }
        | Error::Domain(_)
        | Error::InvalidParameter(_)
        | Error::ZeroLevel
        | Error::RateHypothesis { .. }
        | Error::TooFewRecords(_)
        | Error::NonconvergentTail(_) => PyValueError::new_err(e.to_string()),
        _ => SolverError::new_err(e.to_string()),
    }
}

fn io_err(path: &str, e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(format!("{path}: {e}"))
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("matrix must be a non-empty list of equal-length rows"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
}

fn columns(vectors: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    Ok(matrix(vectors)?.transpose())
}

fn divergence(name: &str) -> PyResult<BregmanDistance> {
    match name {
        "euclidean" => Ok(BregmanDistance::Euclidean),
        "kl" => Ok(BregmanDistance::KullbackLeibler),
        other => {
            Err(PyValueError::new_err(format!("divergence must be euclidean or kl, got {other}")))
        }
    }
}

fn regularized(
    a: &[Vec<f64>],
    b: Vec<f64>,
    eps: f64,
    kernel: &str,
) -> PyResult<(AffineSet, RegularizedSet)> {
    let a = matrix(a)?;
    let n = a.ncols();
    let m0 = AffineSet::new(a.clone(), b.clone()).map_err(to_py)?;
    let m = RegularizedSet::new(
        ForwardMap::Linear(a),
        b,
        divergence(kernel)?,
        eps,
        n,
        ScalarKind::Real,
    )
    .map_err(to_py)?;
    Ok((m0, m))
}

fn point(x: Vec<f64>) -> PyResult<Point> {
    Point::checked(x, ScalarKind::Real).map_err(to_py)
}

/// `KL(z, y) = sum z log(z / y) - z + y`.
#[pyfunction]
fn kl_divergence(z: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    regap::kl_divergence(&z, &y).map_err(to_py)
}

/// Linear rate bound for regularity constant `c` and inexactness `gamma`.
/// Returns a dict with `c`, `gamma`, `eta` and `r_linear_rate`.
#[pyfunction]
#[pyo3(signature = (c, gamma, prox_regular = true))]
fn predict_rate(py: Python<'_>, c: f64, gamma: f64, prox_regular: bool) -> PyResult<Py<PyDict>> {
    let p = algorithms::predict_rate(c, gamma, prox_regular).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("c", p.c)?;
    d.set_item("gamma", p.gamma)?;
    d.set_item("eta", p.eta)?;
    d.set_item("r_linear_rate", p.r_linear_rate)?;
    Ok(d.unbind())
}

/// Per-step contraction factor fitted to the tail of a step-norm sequence.
#[pyfunction]
#[pyo3(signature = (norms, tail_fraction = 0.5))]
fn measure_rate(norms: Vec<f64>, tail_fraction: f64) -> PyResult<f64> {
    algorithms::measure_rate_from_norms(&norms, tail_fraction).map_err(to_py)
}

/// Projection onto `{x : A x = b}`.
#[pyfunction]
fn project_affine(a: Vec<Vec<f64>>, b: Vec<f64>, x: Vec<f64>) -> PyResult<Vec<f64>> {
    let s = AffineSet::new(matrix(&a)?, b).map_err(to_py)?;
    Ok(projectors::project_affine(&s, &point(x)?).map_err(to_py)?.into_vec())
}

/// Projection onto the box `[lower, upper]`; use `inf` for open sides.
#[pyfunction]
fn project_box(lower: Vec<f64>, upper: Vec<f64>, x: Vec<f64>) -> PyResult<Vec<f64>> {
    let s = BoxSet::new(lower, upper).map_err(to_py)?;
    Ok(s.project_point(&point(x)?).map_err(to_py)?.into_vec())
}

/// Segment approximation of the projection of `x` onto
/// `{y : d(A y, b) <= epsilon}`. Returns `(point, tau)`.
#[pyfunction]
#[pyo3(signature = (a, b, epsilon, x, divergence = "euclidean"))]
fn project_regularized_approx(
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    epsilon: f64,
    x: Vec<f64>,
    divergence: &str,
) -> PyResult<(Vec<f64>, f64)> {
    let (m0, m) = regularized(&a, b, epsilon, divergence)?;
    let (p, tau) = projectors::project_regularized_approx(&m, &m0, &point(x)?).map_err(to_py)?;
    Ok((p.into_vec(), tau))
}

/// Exact projection of `x` onto `{y : d(A y, b) <= epsilon}`.
#[pyfunction]
#[pyo3(signature = (a, b, epsilon, x, divergence = "euclidean"))]
fn project_regularized_exact(
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    epsilon: f64,
    x: Vec<f64>,
    divergence: &str,
) -> PyResult<Vec<f64>> {
    let (_, m) = regularized(&a, b, epsilon, divergence)?;
    Ok(projectors::project_regularized_exact(&m, &point(x)?).map_err(to_py)?.into_vec())
}

/// Regularity constant of two subspaces given by spanning vectors.
#[pyfunction]
fn cbar_subspaces(py: Python<'_>, u: Vec<Vec<f64>>, v: Vec<Vec<f64>>) -> PyResult<Py<PyDict>> {
    let est = regularity::cbar_subspaces(&columns(&u)?, &columns(&v)?).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("c_bar", est.c_bar)?;
    d.set_item("theta_bar", est.theta_bar)?;
    d.set_item("common_normal_dim", est.common_normal_dim)?;
    d.set_item("strongly_regular", est.strongly_regular())?;
    Ok(d.unbind())
}

fn config(max_iter: usize, tolerance: f64, schedule: &str) -> PyResult<InexactAPConfig> {
    let lambda_schedule: LambdaSchedule = schedule.parse().map_err(to_py)?;
    let cfg = InexactAPConfig {
        max_iterations: max_iter,
        fixed_point_tolerance: tolerance,
        lambda_schedule,
        ..InexactAPConfig::default()
    };
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Alternating projections between the horizontal line and the line through
/// the origin at angle `theta`. With `gamma > 0` the projection onto the
/// second line is replaced by a step tilted by `asin(gamma)`.
#[pyfunction]
#[pyo3(signature = (theta, start, gamma = 0.0, max_iter = 1000, tolerance = 1e-10))]
fn two_lines(
    theta: f64,
    start: Vec<f64>,
    gamma: f64,
    max_iter: usize,
    tolerance: f64,
) -> PyResult<Trace> {
    let c = AffineSet::line_2d(0.0, [0.0, 0.0]).map_err(to_py)?;
    let m = AffineSet::line_2d(theta, [0.0, 0.0]).map_err(to_py)?;
    let mut cfg = config(max_iter, tolerance, "surface")?;
    cfg.gamma = gamma;
    let x0 = point(start)?;
    let trace = if gamma == 0.0 {
        algorithms::exact_alternating_projections(&c, &m, &x0, &cfg)
    } else {
        let tilted = TiltedProjector::with_gamma(m.clone(), gamma, Point::real(vec![0.0, 0.0]))
            .map_err(to_py)?;
        let e0 = c.project_point(&x0).map_err(to_py)?;
        let o0 = tilted.step(&e0).map_err(to_py)?;
        algorithms::inexact_alternating_projections(
            &c,
            |x: &Point| tilted.step(x),
            &m,
            &e0,
            &o0,
            &cfg,
        )
    };
    Ok(Trace { inner: trace.map_err(to_py)? })
}

/// Iteration history of one run.
#[pyclass(frozen, module = "regap_py")]
struct Trace {
    inner: IterationTrace,
}

#[pymethods]
impl Trace {
    #[getter]
    fn reason(&self) -> &'static str {
        self.inner.reason.as_str()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations()
    }

    #[getter]
    fn gaps(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.gap).collect()
    }

    /// Single-step norms in iteration order.
    #[getter]
    fn step_norms(&self) -> Vec<f64> {
        self.inner.step_sequence()
    }

    #[getter]
    fn final_even(&self) -> Vec<f64> {
        self.inner.final_even.as_slice().to_vec()
    }

    #[getter]
    fn final_odd(&self) -> Vec<f64> {
        self.inner.final_odd.as_slice().to_vec()
    }

    #[pyo3(signature = (tail_fraction = 0.5))]
    fn measured_rate(&self, tail_fraction: f64) -> PyResult<f64> {
        algorithms::measure_rate(&self.inner, tail_fraction).map_err(to_py)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(to_py)?;
        String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Trace(reason={:?}, iterations={})", self.reason(), self.iterations())
    }
}

/// Synthetic phase-retrieval instance with Poisson-noisy Fourier intensities.
#[pyclass(frozen, module = "regap_py")]
struct PhaseInstance {
    inner: phase::PhaseInstance,
}

#[pymethods]
impl PhaseInstance {
    /// `object` is `cup` (a fixed test image) or `random` (values in
    /// `[0.5, 1.5)` on the support). The support is the bounding box of the
    /// cup grown by `margin` pixels.
    #[staticmethod]
    #[pyo3(signature = (n1, n2, photon_scale = 1e4, seed = 0, object = "cup", margin = 1))]
    fn synthesize(
        n1: usize,
        n2: usize,
        photon_scale: f64,
        seed: u64,
        object: &str,
        margin: usize,
    ) -> PyResult<Self> {
        let shape = (n1, n2);
        let cup = phase::cup_object(shape);
        let support = phase::box_support(shape, &cup, margin);
        let inner = match object {
            "cup" => phase::synthesize_from_object(shape, cup, &support, photon_scale, seed),
            "random" => phase::synthesize(shape, &support, photon_scale, seed),
            other => {
                return Err(PyValueError::new_err(format!(
                    "object must be cup or random, got {other}"
                )))
            }
        };
        Ok(PhaseInstance { inner: inner.map_err(to_py)? })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        let inner = phase::PhaseInstance::read_binary(BufReader::new(file)).map_err(to_py)?;
        Ok(PhaseInstance { inner })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
        self.inner.write_binary(&mut w).map_err(to_py)?;
        w.flush().map_err(|e| io_err(path, e))
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn photon_scale(&self) -> f64 {
        self.inner.photon_scale
    }

    #[getter]
    fn object(&self) -> Vec<f64> {
        self.inner.object.clone()
    }

    #[getter]
    fn observed(&self) -> Vec<f64> {
        self.inner.observed.clone()
    }

    #[getter]
    fn support(&self) -> Vec<bool> {
        self.inner.support.clone()
    }

    /// `KL(noiseless, observed)`.
    fn noise_divergence(&self) -> PyResult<f64> {
        self.inner.noise_divergence().map_err(to_py)
    }

    fn epsilon_for(&self, kappa: f64) -> PyResult<f64> {
        self.inner.epsilon_for(kappa).map_err(to_py)
    }

    /// Runs the regularized method at level `epsilon`. `start` is
    /// `near_truth` or `random`; `schedule` is `surface`, `constant_one` or
    /// `custom:l0;l1;...`.
    #[pyo3(signature = (
        epsilon,
        schedule = "surface",
        max_iter = 1000,
        tolerance = 1e-10,
        seed = 0,
        start = "near_truth",
        start_noise = 0.1,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn reconstruct(
        &self,
        py: Python<'_>,
        epsilon: f64,
        schedule: &str,
        max_iter: usize,
        tolerance: f64,
        seed: u64,
        start: &str,
        start_noise: f64,
    ) -> PyResult<Reconstruction> {
        let cfg = config(max_iter, tolerance, schedule)?;
        let start = match start {
            "near_truth" => StartPoint::NearTruth { relative_noise: start_noise },
            "random" => StartPoint::Random,
            other => {
                return Err(PyValueError::new_err(format!(
                    "start must be near_truth or random, got {other}"
                )))
            }
        };
        let opts = ReconstructOptions { start, seed, ..ReconstructOptions::default() };
        let schedule = cfg.lambda_schedule.clone();
        let rec = py
            .detach(|| phase::reconstruct(&self.inner, epsilon, schedule, &cfg, &opts))
            .map_err(to_py)?;
        Ok(Reconstruction {
            image: rec.image,
            error: rec.error,
            final_residual: rec.final_residual,
            trace: Py::new(py, Trace { inner: rec.trace })?,
        })
    }

    fn __repr__(&self) -> String {
        let (n1, n2) = self.inner.shape;
        format!("PhaseInstance({n1}x{n2}, seed={})", self.inner.seed)
    }
}

/// Result of [`PhaseInstance::reconstruct`].
#[pyclass(frozen, get_all, module = "regap_py")]
struct Reconstruction {
    /// Row-major real image.
    image: Vec<f64>,
    /// Relative error against the true object, up to the trivial ambiguities.
    error: f64,
    final_residual: f64,
    trace: Py<Trace>,
}

#[pymodule]
fn regap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(predict_rate, m)?)?;
    m.add_function(wrap_pyfunction!(measure_rate, m)?)?;
    m.add_function(wrap_pyfunction!(project_affine, m)?)?;
    m.add_function(wrap_pyfunction!(project_box, m)?)?;
    m.add_function(wrap_pyfunction!(project_regularized_approx, m)?)?;
    m.add_function(wrap_pyfunction!(project_regularized_exact, m)?)?;
    m.add_function(wrap_pyfunction!(cbar_subspaces, m)?)?;
    m.add_function(wrap_pyfunction!(two_lines, m)?)?;
    m.add_class::<Trace>()?;
    m.add_class::<PhaseInstance>()?;
    m.add_class::<Reconstruction>()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrices_are_row_major_and_rectangular() {
        let a = matrix(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(a.shape(), (3, 2));
        assert_eq!(a[(1, 0)], 3.0);
        assert!(matrix(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(matrix(&[]).is_err());
        assert_eq!(columns(&[vec![1.0, 0.0, 0.0]]).unwrap().shape(), (3, 1));
    }

    #[test]
    fn configs_reject_bad_schedules() {
        assert!(config(10, 1e-10, "constant_one").is_ok());
        assert!(config(10, 1e-10, "sometimes").is_err());
        assert!(divergence("hellinger").is_err());
    }
}
