//! Exact projection onto `M_eps` by damped Newton on the KKT system
//!
//! ```text
//! (z - x) + eta * grad f(z) = 0,   f(z) - eps = 0,   eta >= 0
//! ```
//!
//! with `f = d_phi(g(.), b)`. Dense and meant as a reference oracle for small
//! instances, not for the iteration hot path.

use nalgebra::{DMatrix, DVector};

use crate::divergence::RegularizedSet;
use crate::error::{Error, Result};
use crate::point::Point;
use crate::set::SetOracle;

const MAX_ITERATIONS: usize = 100;
const MAX_DIM: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    pub point: Point,
    pub multiplier: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Exact Euclidean projection of `x` (outside the set) onto `M_eps`.
///
/// Newton is started from `x` with `eta = 1`; if that fails it is restarted
/// with `eta = 0.1` and `eta = 10`. Of the converged KKT points with
/// nonnegative multiplier, the nearest to `x` is returned.
pub fn project_regularized_exact(m: &RegularizedSet, x: &Point) -> Result<Point> {
    let mut best: Option<KktSolution> = None;
    let mut last_err = None;
    for eta in [1.0, 0.1, 10.0] {
        match newton(m, x, x, eta) {
            Ok(sol) => {
                let closer =
                    best.as_ref().is_none_or(|b| sol.point.distance(x) < b.point.distance(x));
                if closer {
                    best = Some(sol);
                }
                if eta == 1.0 {
                    break;
                }
            }
            Err(e @ (Error::ZeroLevel | Error::InvalidParameter(_))) => return Err(e),
            Err(e) => last_err = Some(e),
        }
    }
    best.map(|s| s.point).ok_or_else(|| {
        last_err.unwrap_or(Error::NewtonFailed { iterations: MAX_ITERATIONS, residual: f64::NAN })
    })
}

/// Newton from a caller-supplied starting point, `eta = 1`.
pub fn project_regularized_exact_from(
    m: &RegularizedSet,
    x: &Point,
    start: &Point,
) -> Result<KktSolution> {
    newton(m, x, start, 1.0)
}

fn kkt_residual(m: &RegularizedSet, x: &Point, z: &Point, eta: f64) -> Result<DVector<f64>> {
    let n = z.dim();
    let grad = m.gradient(z)?;
    let mut r = DVector::zeros(n + 1);
    for i in 0..n {
        r[i] = z.as_slice()[i] - x.as_slice()[i] + eta * grad.as_slice()[i];
    }
    r[n] = m.residual(z)? - m.level();
    Ok(r)
}

fn newton(m: &RegularizedSet, x: &Point, start: &Point, eta0: f64) -> Result<KktSolution> {
    if m.level() == 0.0 {
        return Err(Error::ZeroLevel);
    }
    x.ensure_dim(m.dim())?;
    if x.dim() > MAX_DIM {
        return Err(Error::InvalidParameter(format!(
            "exact projection supports at most {MAX_DIM} real dimensions, got {}",
            x.dim()
        )));
    }
    if m.residual(x)? <= m.level() {
        return Err(Error::InvalidParameter("point already lies in the regularized set".into()));
    }
    let n = x.dim();
    let scale = x.norm().max(1.0);
    let mut z = start.clone();
    let mut eta = eta0;
    let mut r = kkt_residual(m, x, &z, eta)?;
    let mut norm = r.norm();
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && norm > 1e-13 * scale {
        iterations += 1;
        let grad = m.gradient(&z)?;
        let hess = m.hessian(&z)?;
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = eta * hess[(i, j)];
            }
            jac[(i, i)] += 1.0;
            jac[(i, n)] = grad.as_slice()[i];
            jac[(n, i)] = grad.as_slice()[i];
        }
        let Some(delta) = jac.lu().solve(&(-&r)) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = z.clone();
            for (zi, di) in trial.as_mut_slice().iter_mut().zip(delta.iter()) {
                *zi += t * di;
            }
            let trial_eta = eta + t * delta[n];
            if let Ok(tr) = kkt_residual(m, x, &trial, trial_eta) {
                let tn = tr.norm();
                if tn.is_finite() && tn < (1.0 - 1e-4 * t) * norm {
                    z = trial;
                    eta = trial_eta;
                    r = tr;
                    norm = tn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm > 1e-9 * scale || eta < 0.0 {
        return Err(Error::NewtonFailed { iterations, residual: norm });
    }
    Ok(KktSolution { point: z, multiplier: eta, kkt_residual: norm, iterations })
}
