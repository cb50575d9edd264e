use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::PhaseInstance;
use crate::algorithms::{regularized_extrapolated_ap, InexactAPConfig, LambdaSchedule};
use crate::divergence::RegularizedSet;
use crate::error::{Error, Result};
use crate::point::Point;
use crate::trace::IterationTrace;

#[derive(Debug, Clone, PartialEq)]
pub enum StartPoint {
    /// The true object plus Gaussian noise of `relative_noise` times its RMS.
    NearTruth {
        relative_noise: f64,
    },
    /// Uniform values in `[0, 1)` on the support.
    Random,
    Given(Point),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructOptions {
    pub start: StartPoint,
    pub seed: u64,
    /// Additional attempts from fresh starts while the error exceeds `accept_error`.
    pub restarts: usize,
    pub accept_error: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            start: StartPoint::NearTruth { relative_noise: 0.1 },
            seed: 0,
            restarts: 0,
            accept_error: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub trace: IterationTrace,
    /// Real part of the final even iterate, row-major.
    pub image: Vec<f64>,
    /// Symmetry-aligned relative error against the true object.
    pub error: f64,
    pub restarts_used: usize,
    /// `KL(|F x|^2, b)` at the final even iterate.
    pub final_residual: f64,
}

/// Alternating projections between the support/nonnegativity set and the
/// KL ball of radius `epsilon` around the observed intensities.
pub fn reconstruct(
    inst: &PhaseInstance,
    epsilon: f64,
    schedule: LambdaSchedule,
    cfg: &InexactAPConfig,
    opts: &ReconstructOptions,
) -> Result<Reconstruction> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let c = inst.support_set()?;
    let m = inst.regularized_set(epsilon)?;
    let m0 = inst.magnitude_set()?;
    let cfg = InexactAPConfig { lambda_schedule: schedule, ..cfg.clone() };
    let mut best: Option<Reconstruction> = None;
    for attempt in 0..=opts.restarts {
        let x0 = start_point(inst, &opts.start, opts.seed, attempt as u64)?;
        let trace = regularized_extrapolated_ap(&c, &m, &m0, &x0, &cfg)?;
        let image: Vec<f64> = trace.final_even.to_complex().iter().map(|z| z.re).collect();
        let error = aligned_error(inst.shape, &image, &inst.object)?;
        let final_residual = m.residual(&trace.final_even)?;
        let rec = Reconstruction { trace, image, error, restarts_used: attempt, final_residual };
        let done = rec.error <= opts.accept_error;
        if best.as_ref().is_none_or(|b| rec.error < b.error) {
            best = Some(rec);
        }
        if done {
            break;
        }
    }
    Ok(best.expect("at least one attempt runs"))
}

fn start_point(inst: &PhaseInstance, start: &StartPoint, seed: u64, attempt: u64) -> Result<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt);
    let values: Vec<Complex64> = match start {
        StartPoint::Given(p) => {
            p.ensure_dim(2 * inst.len())?;
            return Ok(p.clone());
        }
        StartPoint::NearTruth { relative_noise } => {
            let rms = (inst.object.iter().map(|v| v * v).sum::<f64>() / inst.len() as f64).sqrt();
            inst.object
                .iter()
                .map(|&v| {
                    let g: f64 = rng.sample(StandardNormal);
                    Complex64::new(v + relative_noise * rms * g, 0.0)
                })
                .collect()
        }
        StartPoint::Random => inst
            .support
            .iter()
            .map(|&s| Complex64::new(if s { rng.random::<f64>() } else { 0.0 }, 0.0))
            .collect(),
    };
    Ok(Point::from_complex(&values))
}

/// `min ||T x - truth|| / ||truth||` over circular shifts `T`, with and
/// without the point reflection `x(n) -> x(-n)`.
pub fn aligned_error(shape: (usize, usize), x: &[f64], truth: &[f64]) -> Result<f64> {
    let (n1, n2) = shape;
    let n = n1 * n2;
    for len in [x.len(), truth.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let norm = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidParameter("reference image is zero".into()));
    }
    let reflected: Vec<f64> = (0..n)
        .map(|idx| {
            let (i, j) = (idx / n2, idx % n2);
            x[((n1 - i) % n1) * n2 + (n2 - j) % n2]
        })
        .collect();
    let mut best = f64::INFINITY;
    for cand in [x, &reflected[..]] {
        for s1 in 0..n1 {
            for s2 in 0..n2 {
                let mut acc = 0.0;
                for i in 0..n1 {
                    let si = ((i + s1) % n1) * n2;
                    let ti = i * n2;
                    for j in 0..n2 {
                        let d = cand[si + (j + s2) % n2] - truth[ti + j];
                        acc += d * d;
                    }
                    if acc >= best * best * norm * norm {
                        break;
                    }
                }
                best = best.min(acc.sqrt() / norm);
            }
        }
    }
    Ok(best)
}

/// Whether `x` survives `n_perturbations` random perturbations of norm
/// `radius` inside `m`. Perturbations come in antithetic pairs `x +- d`, and
/// membership is exact (`residual <= eps`). Points outside `m` fail.
pub fn interiority_check(
    m: &RegularizedSet,
    x: &Point,
    n_perturbations: usize,
    radius: f64,
    seed: u64,
) -> Result<bool> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    if m.residual(x)? > m.level() {
        return Ok(false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tried = 0;
    while tried < n_perturbations {
        let dir: Vec<f64> = (0..x.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let Some(dir) = Point::checked(dir, x.kind())?.normalized() else {
            continue;
        };
        let d = dir.scale(radius);
        for p in [x.add(&d), x.sub(&d)] {
            if tried == n_perturbations {
                break;
            }
            tried += 1;
            if m.residual(&p)? > m.level() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{BregmanDistance, ForwardMap};
    use crate::phase::{box_support, cup_object, synthesize_from_object};
    use crate::point::ScalarKind;

    fn ball(eps: f64) -> RegularizedSet {
        RegularizedSet::new(
            ForwardMap::Identity,
            vec![0.0; 3],
            BregmanDistance::Euclidean,
            eps,
            3,
            ScalarKind::Real,
        )
        .unwrap()
    }

    #[test]
    fn interiority_examples() {
        // residual 0.5 |x|^2; boundary of eps = 0.5 is the unit sphere
        let m = ball(0.5);
        let boundary = Point::real(vec![1.0, 0.0, 0.0]);
        assert!(!interiority_check(&m, &boundary, 20, 1e-3, 0).unwrap());
        let half = Point::real(vec![0.5f64.sqrt(), 0.0, 0.0]);
        assert!(interiority_check(&m, &half, 50, 1e-3, 0).unwrap());
        let zero = ball(0.0);
        assert!(!interiority_check(&zero, &Point::real(vec![0.0; 3]), 10, 1e-6, 0).unwrap());
        assert!(!interiority_check(&m, &Point::real(vec![2.0, 0.0, 0.0]), 10, 1e-6, 0).unwrap());
    }

    #[test]
    fn alignment_undoes_shifts_and_reflection() {
        let shape = (6, 5);
        let truth: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64).collect();
        let shifted: Vec<f64> = (0..30)
            .map(|idx| {
                let (i, j) = (idx / 5, idx % 5);
                truth[((i + 4) % 6) * 5 + (j + 2) % 5]
            })
            .collect();
        let flipped: Vec<f64> = (0..30)
            .map(|idx| {
                let (i, j) = (idx / 5, idx % 5);
                shifted[((6 - i) % 6) * 5 + (5 - j) % 5]
            })
            .collect();
        assert_eq!(aligned_error(shape, &shifted, &truth).unwrap(), 0.0);
        assert_eq!(aligned_error(shape, &flipped, &truth).unwrap(), 0.0);
        let zeros = vec![0.0; 30];
        assert!((aligned_error(shape, &zeros, &truth).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noiseless_consistent_run_recovers_the_object() {
        let shape = (16, 16);
        let obj = cup_object(shape);
        let support = box_support(shape, &obj, 1);
        let mut inst = synthesize_from_object(shape, obj, &support, 1e3, 2).unwrap();
        inst.observed = inst.noiseless.clone();
        let cfg = InexactAPConfig {
            max_iterations: 3000,
            fixed_point_tolerance: 1e-9,
            ..Default::default()
        };
        let opts = ReconstructOptions { restarts: 3, accept_error: 1e-3, ..Default::default() };
        let rec = reconstruct(&inst, 0.0, LambdaSchedule::Surface, &cfg, &opts).unwrap();
        assert!(
            rec.error <= 1e-3,
            "error {} after {} restarts, {:?}",
            rec.error,
            rec.restarts_used,
            rec.trace.reason
        );
        assert!(rec.trace.records.last().unwrap().gap < 1e-6);
    }
}
