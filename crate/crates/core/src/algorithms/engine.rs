use super::config::InexactAPConfig;
use crate::divergence::{bregman_line_boundary, RegularizedSet};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::set::SetOracle;
use crate::trace::{IterationTrace, TerminationReason, TraceRecord};

/// Slack on the nonexpansion test, relative and absolute.
const NONEXPANSION_SLACK: (f64, f64) = (1e-9, 1e-14);

/// An odd iterate proposed by an approximate projection.
#[derive(Debug, Clone)]
struct Proposal {
    point: Point,
    lambda: Option<f64>,
    residual: Option<f64>,
    /// First point of `M` on the segment from the even iterate, when known.
    entry: Option<Point>,
    /// Used instead of `point` when `point` violates nonexpansion.
    fallback: Option<Point>,
}

impl Proposal {
    fn plain(point: Point) -> Self {
        Proposal { point, lambda: None, residual: None, entry: None, fallback: None }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Verify {
    /// Exact projections: the normal-cone residual is zero by construction.
    Exact,
    Measure,
}

struct Engine<'a, C: ?Sized, M: ?Sized> {
    c: &'a C,
    m: &'a M,
    cfg: &'a InexactAPConfig,
    verify: Verify,
}

impl<C: SetOracle + ?Sized, M: SetOracle + ?Sized> Engine<'_, C, M> {
    fn run(
        &self,
        mut even: Point,
        mut first_odd: Option<Point>,
        mut step: f64,
        mut propose: impl FnMut(usize, &Point) -> Result<Proposal>,
    ) -> Result<IterationTrace> {
        let cfg = self.cfg;
        let tol = cfg.fixed_point_tolerance;
        let mut records = Vec::new();
        let mut gaps = Vec::new();
        let mut even_change = None;
        for k in 0..cfg.max_iterations {
            let proposal = match first_odd.take() {
                Some(x1) => Proposal::plain(x1),
                None => propose(k, &even)?,
            };
            let (odd, gamma, accepted, lambda, residual) = self.accept(k, &even, step, proposal)?;
            let gap = odd.distance(&even);
            gaps.push(gap);
            records.push(TraceRecord {
                k,
                even: cfg.record_points.then(|| even.clone()),
                odd: cfg.record_points.then(|| odd.clone()),
                step_norm: step,
                gap,
                even_change,
                residual,
                gamma,
                lambda,
                accepted,
            });

            let reason = if gap <= tol || (k > 0 && step <= tol) {
                Some(TerminationReason::FixedPoint)
            } else if cfg.feasibility_tolerance.is_some_and(|t| gap <= t) {
                Some(TerminationReason::ToleranceMet)
            } else if k >= cfg.stall_window
                && even_change.is_some_and(|d| d <= tol)
                && gap > 10.0 * tol
                && (gap - gaps[k - cfg.stall_window]).abs() <= cfg.stall_threshold * gap
            {
                Some(TerminationReason::StalledGap)
            } else {
                None
            };
            if let Some(reason) = reason {
                return Ok(IterationTrace { records, reason, final_even: even, final_odd: odd });
            }
            if k + 1 == cfg.max_iterations {
                return Ok(IterationTrace {
                    records,
                    reason: TerminationReason::MaxIter,
                    final_even: even,
                    final_odd: odd,
                });
            }
            let next = self.c.project_point(&odd)?;
            step = next.distance(&odd);
            even_change = Some(next.distance(&even));
            even = next;
        }
        unreachable!("max_iterations is validated to be positive")
    }

    /// Applies conditions (a)-(c) to a proposed odd iterate.
    #[allow(clippy::type_complexity)]
    fn accept(
        &self,
        k: usize,
        even: &Point,
        step: f64,
        proposal: Proposal,
    ) -> Result<(Point, Option<f64>, bool, Option<f64>, Option<f64>)> {
        let Proposal { mut point, lambda, residual, mut entry, fallback } = proposal;
        if self.verify == Verify::Exact {
            return Ok((point, Some(0.0), true, lambda, residual));
        }
        // (b): the even iterate already lies in M
        if self.m.contains(even, 0.0)? {
            return Ok((even.clone(), Some(0.0), true, Some(0.0), residual));
        }
        // (a): nonexpansion; the first record has no previous step to compare to
        let mut accepted = true;
        let limit = step * (1.0 + NONEXPANSION_SLACK.0) + NONEXPANSION_SLACK.1;
        if k > 0 && point.distance(even) > limit {
            accepted = false;
            match fallback {
                Some(f) if f.distance(even) <= limit => {
                    point = f;
                    entry = None;
                }
                _ if self.cfg.strict => {
                    return Err(Error::NonexpansionViolated {
                        k,
                        gap: point.distance(even),
                        previous: step,
                    });
                }
                _ => {}
            }
        }
        // (c): distance of the normalized step to the normal cone at the ray entry point
        let Some(dir) = even.sub(&point).normalized() else {
            return Ok((point, Some(0.0), accepted, lambda, residual));
        };
        let entry = match entry {
            Some(e) => e,
            None => self.m.ray_entry(even, &point)?,
        };
        let gamma = match self.m.normal_cone_distance(&entry, &dir) {
            Ok(g) => Some(g),
            Err(Error::Unsupported) => None,
            Err(e) => return Err(e),
        };
        if self.cfg.strict {
            match gamma {
                None => return Err(Error::Unsupported),
                Some(g) if g > self.cfg.gamma => {
                    return Err(Error::ApproximationFailure { k, gamma: g, limit: self.cfg.gamma })
                }
                _ => {}
            }
        }
        Ok((point, gamma, accepted, lambda, residual))
    }
}

/// Classical alternating projections: `x^0 = P_C(x0)`, then
/// `x^{2k+1} = P_M(x^{2k})`, `x^{2k+2} = P_C(x^{2k+1})`.
pub fn exact_alternating_projections<C, M>(
    set_c: &C,
    set_m: &M,
    x0: &Point,
    cfg: &InexactAPConfig,
) -> Result<IterationTrace>
where
    C: SetOracle + ?Sized,
    M: SetOracle + ?Sized,
{
    cfg.validate()?;
    x0.validate()?;
    x0.ensure_dim(set_c.dim())?;
    x0.ensure_dim(set_m.dim())?;
    let even = set_c.project_point(x0)?;
    let step = even.distance(x0);
    let engine = Engine { c: set_c, m: set_m, cfg, verify: Verify::Exact };
    engine.run(even, None, step, |_, x| Ok(Proposal::plain(set_m.project_point(x)?)))
}

/// Alternating projections with an approximate odd step `approx_m`.
///
/// `(x0, x1)` are the first even/odd pair. Every later odd candidate is
/// checked for nonexpansion against the previous step and its normalized
/// direction is measured against the normal cone of `set_m` at the point
/// where the segment enters `set_m`. Measurements are recorded per record;
/// with `cfg.strict` a violation or an unavailable normal cone is an error.
pub fn inexact_alternating_projections<C, M, A>(
    set_c: &C,
    mut approx_m: A,
    set_m: &M,
    x0: &Point,
    x1: &Point,
    cfg: &InexactAPConfig,
) -> Result<IterationTrace>
where
    C: SetOracle + ?Sized,
    M: SetOracle + ?Sized,
    A: FnMut(&Point) -> Result<Point>,
{
    cfg.validate()?;
    for x in [x0, x1] {
        x.validate()?;
        x.ensure_dim(set_c.dim())?;
    }
    let engine = Engine { c: set_c, m: set_m, cfg, verify: Verify::Measure };
    engine.run(x0.clone(), Some(x1.clone()), 0.0, |_, x| Ok(Proposal::plain(approx_m(x)?)))
}

/// Alternating projections between `C` and the regularized set `M_eps` with
/// extrapolated odd iterates `(1 - lambda_k) x^{2k} + lambda_k P_{M_0}(x^{2k})`.
///
/// Odd steps are the identity once an even iterate lies in `M_eps`, which ends
/// the run at a point of `C` and `M_eps`. In strict mode a stalled gap is
/// reported as [`Error::ApproximationStalled`]: `M_eps` and `C` do not meet
/// near the iterates, so the approximation strategy cannot succeed.
pub fn regularized_extrapolated_ap<C, U>(
    set_c: &C,
    m: &RegularizedSet,
    unreg: &U,
    x0: &Point,
    cfg: &InexactAPConfig,
) -> Result<IterationTrace>
where
    C: SetOracle + ?Sized,
    U: SetOracle + ?Sized,
{
    cfg.validate()?;
    x0.validate()?;
    x0.ensure_dim(set_c.dim())?;
    x0.ensure_dim(m.dim())?;
    let even = set_c.project_point(x0)?;
    let step = even.distance(x0);
    let engine = Engine { c: set_c, m, cfg, verify: Verify::Measure };
    let trace = engine.run(even, None, step, |k, x| {
        let r = m.residual(x)?;
        if r <= m.level() {
            return Ok(Proposal {
                point: x.clone(),
                lambda: Some(0.0),
                residual: Some(r),
                entry: Some(x.clone()),
                fallback: None,
            });
        }
        let anchor = unreg.project_point(x)?;
        let (tau, boundary) = bregman_line_boundary(m, x, &anchor)?;
        let lambda = cfg.lambda_schedule.lambda(k, tau);
        let point = if lambda == tau { boundary.clone() } else { x.lerp(&anchor, lambda) };
        Ok(Proposal {
            residual: Some(m.residual(&point)?),
            point,
            lambda: Some(lambda),
            entry: Some(boundary.clone()),
            fallback: Some(boundary),
        })
    })?;
    if cfg.strict && trace.reason == TerminationReason::StalledGap {
        let last = trace.records.last().expect("stalled trace has records");
        return Err(Error::ApproximationStalled { k: last.k, gap: last.gap });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{measure_rate, predict_rate, LambdaSchedule};
    use crate::divergence::{BregmanDistance, ForwardMap};
    use crate::point::ScalarKind;
    use crate::projectors::{AffineSet, TiltedProjector};
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn cfg() -> InexactAPConfig {
        InexactAPConfig { max_iterations: 500, ..Default::default() }
    }

    fn line(theta: f64) -> AffineSet {
        AffineSet::line_2d(theta, [0.0, 0.0]).unwrap()
    }

    /// Two-line recursion written out with explicit direction vectors.
    fn brute_force_two_lines(theta: f64, x0: [f64; 2], steps: usize) -> Vec<f64> {
        let proj = |x: [f64; 2], a: f64| {
            let (c, s) = (a.cos(), a.sin());
            let t = x[0] * c + x[1] * s;
            [t * c, t * s]
        };
        let mut out = Vec::new();
        let mut x = x0;
        for j in 0..steps {
            let y = proj(x, if j % 2 == 0 { 0.0 } else { theta });
            out.push(((y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2)).sqrt());
            x = y;
        }
        out
    }

    #[test]
    fn two_lines_converge_at_cosine_rate() {
        let theta = PI / 3.0;
        let x0 = Point::real(vec![1.0, 2.0]);
        let trace = exact_alternating_projections(&line(0.0), &line(theta), &x0, &cfg()).unwrap();
        assert_eq!(trace.reason, TerminationReason::FixedPoint);
        assert!(trace.final_even.norm() < 1e-9);
        let steps = trace.step_sequence();
        let oracle = brute_force_two_lines(theta, [1.0, 2.0], steps.len());
        for (a, b) in steps.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12 * b.max(1e-300) + 1e-15, "{a} vs {b}");
        }
        let tail = &oracle[oracle.len() - 4..];
        assert!((tail[3] / tail[2] - 0.5).abs() < 1e-2);
        let rate = measure_rate(&trace, 0.5).unwrap();
        assert!(rate <= 0.5 + 1e-2, "{rate}");
        assert!((rate - predict_rate(0.5, 0.0, true).unwrap().eta).abs() < 1e-2);
    }

    #[test]
    fn equal_sets_stop_after_one_step() {
        let s = line(0.3);
        let x0 = Point::real(vec![3.0, -1.0]);
        let trace = exact_alternating_projections(&s, &s, &x0, &cfg()).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.reason, TerminationReason::FixedPoint);
        assert!(trace.final_even.distance(&s.project_one(&x0).unwrap()) < 1e-15);
    }

    #[test]
    fn parallel_lines_stall_at_unit_gap() {
        let c = AffineSet::line_2d(0.0, [0.0, 0.0]).unwrap();
        let m = AffineSet::line_2d(0.0, [0.0, 1.0]).unwrap();
        let trace =
            exact_alternating_projections(&c, &m, &Point::real(vec![0.4, 3.0]), &cfg()).unwrap();
        assert_eq!(trace.reason, TerminationReason::StalledGap);
        let last = trace.records.last().unwrap();
        assert!((last.gap - 1.0).abs() < 1e-12);
        assert!(last.even_change.unwrap() <= 1e-10);
        assert!(measure_rate(&trace, 0.5).is_err());
    }

    #[test]
    fn inexact_with_exact_projector_reproduces_exact_run() {
        let (c, m) = (line(0.0), line(PI / 4.0));
        let x0 = Point::real(vec![-1.0, 2.5]);
        let exact = exact_alternating_projections(&c, &m, &x0, &cfg()).unwrap();
        let e0 = c.project_one(&x0).unwrap();
        let o0 = m.project_one(&e0).unwrap();
        let inexact =
            inexact_alternating_projections(&c, |x: &Point| m.project_one(x), &m, &e0, &o0, &cfg())
                .unwrap();
        assert_eq!(exact.reason, inexact.reason);
        assert_eq!(exact.len(), inexact.len());
        assert_eq!(exact.final_even, inexact.final_even);
        assert_eq!(exact.final_odd, inexact.final_odd);
        for (a, b) in exact.records.iter().zip(&inexact.records) {
            assert_eq!(a.gap, b.gap);
            if a.k > 0 {
                assert_eq!(a.step_norm, b.step_norm);
                assert!(b.accepted);
                assert!(b.gamma.unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn tilted_projector_measures_gamma_and_obeys_eta() {
        for (theta, gamma) in [(PI / 3.0, 0.1), (PI / 3.0, 0.3), (PI / 4.0, 0.3)] {
            let (c, m) = (line(0.0), line(theta));
            let tilt =
                TiltedProjector::with_gamma(m.clone(), gamma, Point::real(vec![0.0, 0.0])).unwrap();
            let e0 = c.project_one(&Point::real(vec![1.0, 1.0])).unwrap();
            let o0 = tilt.step(&e0).unwrap();
            let trace =
                inexact_alternating_projections(&c, |x: &Point| tilt.step(x), &m, &e0, &o0, &cfg())
                    .unwrap();
            for r in &trace.records[1..] {
                assert!(r.accepted);
                assert!((r.gamma.unwrap() - gamma).abs() < 1e-6);
                assert!(r.gap <= r.step_norm * (1.0 + 1e-9));
            }
            let eta = predict_rate(theta.cos(), gamma, true).unwrap().eta;
            let rate = measure_rate(&trace, 0.5).unwrap();
            assert!(rate <= eta + 0.02, "theta {theta} gamma {gamma}: {rate} > {eta}");
        }
    }

    #[test]
    fn even_point_on_m_is_kept() {
        let (c, m) = (line(0.0), line(PI / 3.0));
        let origin = Point::real(vec![0.0, 0.0]);
        let off = Point::real(vec![5.0, 5.0]);
        let trace = inexact_alternating_projections(
            &c,
            |_: &Point| Ok(off.clone()),
            &m,
            &origin,
            &origin,
            &cfg(),
        )
        .unwrap();
        assert_eq!(trace.reason, TerminationReason::FixedPoint);
        assert_eq!(trace.final_odd, origin);
    }

    #[test]
    fn strict_mode_rejects_expanding_candidates() {
        let (c, m) = (line(0.0), line(PI / 3.0));
        let e0 = Point::real(vec![1.0, 0.0]);
        let o0 = m.project_one(&e0).unwrap();
        let far = |x: &Point| Ok(m.project_one(x)?.scale(-10.0));
        let strict = InexactAPConfig { strict: true, ..cfg() };
        let err = inexact_alternating_projections(&c, far, &m, &e0, &o0, &strict).unwrap_err();
        assert!(matches!(err, Error::NonexpansionViolated { k: 1, .. }));
        let lax = inexact_alternating_projections(&c, far, &m, &e0, &o0, &cfg()).unwrap();
        assert!(!lax.records[1].accepted);
    }

    fn parallel_regularized(eps: f64) -> RegularizedSet {
        let a = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        RegularizedSet::new(
            ForwardMap::Linear(a),
            vec![1.0],
            BregmanDistance::Euclidean,
            eps,
            2,
            ScalarKind::Real,
        )
        .unwrap()
        .assume_prox_regular()
    }

    #[test]
    fn full_extrapolation_matches_exact_run_until_it_enters() {
        let (c, m0) = (line(0.0), line(PI / 3.0));
        // M_eps around the line at angle pi/3: n . x = 0 within sqrt(2 eps)
        let n = [-(PI / 3.0).sin(), (PI / 3.0).cos()];
        let reg = RegularizedSet::new(
            ForwardMap::Linear(DMatrix::from_row_slice(1, 2, &n)),
            vec![0.0],
            BregmanDistance::Euclidean,
            1e-6,
            2,
            ScalarKind::Real,
        )
        .unwrap();
        let x0 = Point::real(vec![1.0, 2.0]);
        let cfg1 = InexactAPConfig { lambda_schedule: LambdaSchedule::ConstantOne, ..cfg() };
        let extra = regularized_extrapolated_ap(&c, &reg, &m0, &x0, &cfg1).unwrap();
        let exact = exact_alternating_projections(&c, &m0, &x0, &cfg()).unwrap();
        assert_eq!(extra.reason, TerminationReason::FixedPoint);
        assert!(extra.len() < exact.len());
        let last = extra.len() - 1;
        for (a, b) in extra.records[..last].iter().zip(&exact.records) {
            assert!((a.gap - b.gap).abs() < 1e-15);
            assert!((a.step_norm - b.step_norm).abs() < 1e-15);
        }
        assert_eq!(extra.records[last].gap, 0.0);
        assert!(reg.contains(&extra.final_even, 0.0).unwrap());
        assert!(c.contains(&extra.final_even, 1e-12).unwrap());
    }

    #[test]
    fn surface_schedule_stays_on_the_boundary() {
        let (c, m0) = (line(0.0), line(PI / 5.0));
        let n = [-(PI / 5.0).sin(), (PI / 5.0).cos()];
        let eps = 1e-4;
        let reg = RegularizedSet::new(
            ForwardMap::Linear(DMatrix::from_row_slice(1, 2, &n)),
            vec![0.0],
            BregmanDistance::Euclidean,
            eps,
            2,
            ScalarKind::Real,
        )
        .unwrap();
        let trace =
            regularized_extrapolated_ap(&c, &reg, &m0, &Point::real(vec![2.0, 1.0]), &cfg())
                .unwrap();
        for r in trace.records.iter().filter(|r| r.gap > 0.0) {
            assert!((r.residual.unwrap() - eps).abs() <= 1e-9);
            // the direction of a tiny step is dominated by rounding
            if r.gap > 1e-6 {
                assert!(r.gamma.unwrap() < 1e-9, "{r:?}");
            }
        }
        assert_eq!(trace.reason, TerminationReason::FixedPoint);
    }

    #[test]
    fn parallel_lines_with_regularization() {
        let c = line(0.0);
        let m0 = AffineSet::line_2d(0.0, [0.0, 1.0]).unwrap();
        let x0 = Point::real(vec![0.3, -2.0]);
        let big = parallel_regularized(1.5);
        let trace = regularized_extrapolated_ap(&c, &big, &m0, &x0, &cfg()).unwrap();
        assert_eq!(trace.reason, TerminationReason::FixedPoint);
        assert!(big.contains(&trace.final_even, 0.0).unwrap());

        let small = parallel_regularized(0.125);
        let lax = regularized_extrapolated_ap(&c, &small, &m0, &x0, &cfg()).unwrap();
        assert_eq!(lax.reason, TerminationReason::StalledGap);
        assert!((lax.records.last().unwrap().gap - 0.5).abs() < 1e-12);
        let strict = InexactAPConfig { strict: true, ..cfg() };
        let err = regularized_extrapolated_ap(&c, &small, &m0, &x0, &strict).unwrap_err();
        assert!(matches!(err, Error::ApproximationStalled { .. }));
    }
}
