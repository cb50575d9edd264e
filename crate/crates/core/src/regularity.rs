//! The regularity constant `c_bar`: the largest `<u, v>` over unit normals
//! `u` of C and `v` of `-M` at a common point. `c_bar < 1` means the sets meet
//! strongly regularly at angle `theta_bar = acos(c_bar)`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{basis_matrix, orthogonal_complement, orthonormal_columns};
use crate::point::Point;
use crate::set::{dot, NormalCone, SetOracle};

/// Singular values this close to 1 are common normal directions.
const COMMON_NORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityMethod {
    SubspacePrincipalAngle,
    SampledCone,
    UserSupplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityEstimate {
    pub c_bar: f64,
    pub theta_bar: f64,
    pub method: RegularityMethod,
    /// Dimension of the normal directions shared by both subspaces, which
    /// were excluded from the maximum. Always 0 for sampled estimates.
    pub common_normal_dim: usize,
    pub samples: Option<usize>,
}

impl RegularityEstimate {
    fn new(c_bar: f64, method: RegularityMethod) -> Self {
        let c_bar = c_bar.clamp(0.0, 1.0);
        RegularityEstimate {
            c_bar,
            theta_bar: c_bar.acos(),
            method,
            common_normal_dim: 0,
            samples: None,
        }
    }

    pub fn user_supplied(c_bar: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c_bar) {
            return Err(Error::InvalidParameter(format!("c_bar must lie in [0, 1], got {c_bar}")));
        }
        Ok(RegularityEstimate::new(c_bar, RegularityMethod::UserSupplied))
    }

    /// `c_bar < 1` and, for subspaces, no shared normal directions.
    pub fn strongly_regular(&self) -> bool {
        self.c_bar < 1.0 && self.common_normal_dim == 0
    }
}

/// `c_bar` for two linear subspaces given by spanning columns.
///
/// The result is the cosine of the Friedrichs angle: the largest singular
/// value of `Q_U^T Q_V` over orthonormal bases of the normal spaces, after
/// discarding singular values equal to 1 (shared normal directions, reported in
/// `common_normal_dim`).
pub fn cbar_subspaces(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<RegularityEstimate> {
    let n = u.nrows();
    if v.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.nrows() });
    }
    let qu = orthonormal_columns(u);
    let qv = orthonormal_columns(v);
    if qu.len() != u.ncols() || qv.len() != v.ncols() || qu.is_empty() || qv.is_empty() {
        return Err(Error::RankDeficient);
    }
    let nu = orthogonal_complement(&qu, n);
    let nv = orthogonal_complement(&qv, n);
    let mut est = RegularityEstimate::new(0.0, RegularityMethod::SubspacePrincipalAngle);
    if nu.is_empty() || nv.is_empty() {
        return Ok(est);
    }
    let cross = basis_matrix(&nu, n).transpose() * basis_matrix(&nv, n);
    let sv = cross.singular_values();
    let mut c = 0.0f64;
    for s in sv.iter() {
        if *s >= 1.0 - COMMON_NORMAL_TOL {
            est.common_normal_dim += 1;
        } else {
            c = c.max(*s);
        }
    }
    est.c_bar = c.clamp(0.0, 1.0);
    est.theta_bar = est.c_bar.acos();
    Ok(est)
}

/// Monte Carlo lower bound on `c_bar` at `xbar` from `n_samples` unit pairs
/// drawn uniformly from `N_C(xbar)` and `-N_M(xbar)`. A trivial normal cone
/// on either side gives exactly 0.
pub fn cbar_sampled<C, M>(
    set_c: &C,
    set_m: &M,
    xbar: &Point,
    n_samples: usize,
    seed: u64,
) -> Result<RegularityEstimate>
where
    C: SetOracle + ?Sized,
    M: SetOracle + ?Sized,
{
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    xbar.ensure_dim(set_c.dim())?;
    xbar.ensure_dim(set_m.dim())?;
    let nc = set_c.normal_cone(xbar)?;
    let nm = set_m.normal_cone(xbar)?.negated();
    let mut est = RegularityEstimate::new(0.0, RegularityMethod::SampledCone);
    est.samples = Some(n_samples);
    if nc == NormalCone::Zero || nm == NormalCone::Zero {
        return Ok(est);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..n_samples {
        let (Some(a), Some(b)) = (nc.sample_unit(&mut rng), nm.sample_unit(&mut rng)) else {
            continue;
        };
        best = best.max(dot(&a, &b));
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::Unsupported);
    }
    est.c_bar = best.clamp(0.0, 1.0);
    est.theta_bar = est.c_bar.acos();
    Ok(est)
}
