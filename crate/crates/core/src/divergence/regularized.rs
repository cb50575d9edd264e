use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::BregmanDistance;
use crate::error::{Error, Result};
use crate::fourier::Fft2;
use crate::point::{Point, ScalarKind};
use crate::projectors::project_regularized_exact;
use crate::set::{NormalCone, SetOracle, DEFAULT_MEMBERSHIP_TOL};

/// Continuous forward model `g` mapping the ambient space into the data space.
#[derive(Debug, Clone, PartialEq)]
pub enum ForwardMap {
    Identity,
    Linear(DMatrix<f64>),
    /// `g(x)_j = |x_j|^2`.
    SquaredModulus,
    /// `g(x) = |F x|^2` for the unitary 2-D DFT `F`.
    FourierIntensity(Fft2),
}

impl ForwardMap {
    pub fn is_affine(&self) -> bool {
        matches!(self, ForwardMap::Identity | ForwardMap::Linear(_))
    }

    /// Homogeneous quadratic maps have a linear pullback `x -> J(x)^T w`.
    fn is_quadratic(&self) -> bool {
        matches!(self, ForwardMap::SquaredModulus | ForwardMap::FourierIntensity(_))
    }

    fn check_input(&self, x: &Point) -> Result<()> {
        match self {
            ForwardMap::Linear(a) => {
                if x.is_complex() {
                    return Err(Error::InvalidParameter(
                        "linear forward maps act on real points".into(),
                    ));
                }
                x.ensure_dim(a.ncols())
            }
            ForwardMap::FourierIntensity(fft) => {
                if x.len() != fft.len() {
                    return Err(Error::DimensionMismatch { expected: fft.len(), got: x.len() });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &Point) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(match self {
            ForwardMap::Identity => x.as_slice().to_vec(),
            ForwardMap::Linear(a) => {
                (a * DVector::from_column_slice(x.as_slice())).as_slice().to_vec()
            }
            ForwardMap::SquaredModulus => squared_modulus(x),
            ForwardMap::FourierIntensity(fft) => {
                let mut y = x.to_complex();
                fft.forward(&mut y)?;
                y.iter().map(|v| v.norm_sqr()).collect()
            }
        })
    }

    /// `J_g(x)^T w`: the gradient of `x -> <w, g(x)>` in real storage coordinates.
    pub fn pullback(&self, x: &Point, w: &[f64]) -> Result<Point> {
        self.check_input(x)?;
        Ok(match self {
            ForwardMap::Identity => {
                x.ensure_dim(w.len())?;
                Point::real(w.to_vec()).with_kind(x.kind())
            }
            ForwardMap::Linear(a) => {
                if w.len() != a.nrows() {
                    return Err(Error::DimensionMismatch { expected: a.nrows(), got: w.len() });
                }
                Point::real((a.transpose() * DVector::from_column_slice(w)).as_slice().to_vec())
            }
            ForwardMap::SquaredModulus => {
                if w.len() != x.len() {
                    return Err(Error::DimensionMismatch { expected: x.len(), got: w.len() });
                }
                let data = match x.kind() {
                    ScalarKind::Real => {
                        x.as_slice().iter().zip(w).map(|(xj, wj)| 2.0 * xj * wj).collect()
                    }
                    ScalarKind::Complex => x
                        .as_slice()
                        .chunks_exact(2)
                        .zip(w)
                        .flat_map(|(c, wj)| [2.0 * c[0] * wj, 2.0 * c[1] * wj])
                        .collect(),
                };
                Point::real(data).with_kind(x.kind())
            }
            ForwardMap::FourierIntensity(fft) => {
                if w.len() != fft.len() {
                    return Err(Error::DimensionMismatch { expected: fft.len(), got: w.len() });
                }
                let mut y = x.to_complex();
                fft.forward(&mut y)?;
                for (v, wk) in y.iter_mut().zip(w) {
                    *v *= 2.0 * wk;
                }
                fft.inverse(&mut y)?;
                match x.kind() {
                    ScalarKind::Real => Point::real(y.iter().map(|v| v.re).collect()),
                    ScalarKind::Complex => Point::from_complex(&y),
                }
            }
        })
    }

    /// Dense Jacobian (`m x dim`); intended for small instances.
    pub fn jacobian(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        match self {
            ForwardMap::Identity => Ok(DMatrix::identity(x.dim(), x.dim())),
            ForwardMap::Linear(a) => Ok(a.clone()),
            _ => {
                let m = self.eval(x)?.len();
                let mut jac = DMatrix::zeros(m, x.dim());
                let mut w = vec![0.0; m];
                for k in 0..m {
                    w[k] = 1.0;
                    let row = self.pullback(x, &w)?;
                    w[k] = 0.0;
                    for (j, v) in row.as_slice().iter().enumerate() {
                        jac[(k, j)] = *v;
                    }
                }
                Ok(jac)
            }
        }
    }

    /// `sum_k w_k Hess g_k(x)` (`dim x dim`); zero for affine maps.
    pub fn curvature(&self, x: &Point, w: &[f64]) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        let n = x.dim();
        let mut h = DMatrix::zeros(n, n);
        if self.is_quadratic() {
            let mut e = Point::zeros(x.len(), x.kind());
            for j in 0..n {
                e.as_mut_slice()[j] = 1.0;
                let col = self.pullback(&e, w)?;
                e.as_mut_slice()[j] = 0.0;
                for (i, v) in col.as_slice().iter().enumerate() {
                    h[(i, j)] = *v;
                }
            }
        }
        Ok(h)
    }
}

fn squared_modulus(x: &Point) -> Vec<f64> {
    match x.kind() {
        ScalarKind::Real => x.as_slice().iter().map(|v| v * v).collect(),
        ScalarKind::Complex => {
            x.as_slice().chunks_exact(2).map(|c| c[0] * c[0] + c[1] * c[1]).collect()
        }
    }
}

/// `M_eps = { x : d_phi(g(x), b) <= eps }`.
#[derive(Debug, Clone)]
pub struct RegularizedSet {
    map: ForwardMap,
    data: Vec<f64>,
    divergence: BregmanDistance,
    level: f64,
    tol: f64,
    dim: usize,
    kind: ScalarKind,
    prox_regular: bool,
}

impl RegularizedSet {
    /// `dim` is the number of scalar components of the ambient points.
    pub fn new(
        map: ForwardMap,
        data: Vec<f64>,
        divergence: BregmanDistance,
        level: f64,
        dim: usize,
        kind: ScalarKind,
    ) -> Result<Self> {
        if !(level >= 0.0 && level.is_finite()) {
            return Err(Error::InvalidParameter(format!("level must be >= 0, got {level}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("data must be finite".into()));
        }
        if divergence == BregmanDistance::KullbackLeibler && data.iter().any(|&v| v < 0.0) {
            return Err(Error::Domain("KL data must be nonnegative".into()));
        }
        let probe = Point::zeros(dim, kind);
        let m = map.eval(&probe)?.len();
        if m != data.len() {
            return Err(Error::DimensionMismatch { expected: m, got: data.len() });
        }
        let prox_regular = map.is_affine();
        Ok(RegularizedSet {
            map,
            data,
            divergence,
            level,
            tol: DEFAULT_MEMBERSHIP_TOL,
            dim,
            kind,
            prox_regular,
        })
    }

    pub fn with_level(&self, level: f64) -> Result<Self> {
        if !(level >= 0.0 && level.is_finite()) {
            return Err(Error::InvalidParameter(format!("level must be >= 0, got {level}")));
        }
        Ok(RegularizedSet { level, ..self.clone() })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Marks the set as prox-regular (an assumption the caller vouches for).
    pub fn assume_prox_regular(mut self) -> Self {
        self.prox_regular = true;
        self
    }

    pub fn map(&self) -> &ForwardMap {
        &self.map
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn divergence(&self) -> BregmanDistance {
        self.divergence
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn kind(&self) -> ScalarKind {
        self.kind
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        x.ensure_dim(self.dim())?;
        if x.kind() != self.kind {
            return Err(Error::InvalidParameter(format!(
                "expected {:?} point, got {:?}",
                self.kind,
                x.kind()
            )));
        }
        Ok(())
    }

    /// `d_phi(g(x), b)`.
    pub fn residual(&self, x: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.divergence.evaluate(&self.map.eval(x)?, &self.data)
    }

    /// Gradient of `x -> d_phi(g(x), b)`.
    pub fn gradient(&self, x: &Point) -> Result<Point> {
        self.check_point(x)?;
        let gx = self.map.eval(x)?;
        let w = self.divergence.gradient_first_arg(&gx, &self.data)?;
        self.map.pullback(x, &w)
    }

    /// Hessian of the residual; dense, for small instances.
    pub fn hessian(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let gx = self.map.eval(x)?;
        let w = self.divergence.gradient_first_arg(&gx, &self.data)?;
        let d = self.divergence.hessian_diag_first_arg(&gx)?;
        let jac = self.map.jacobian(x)?;
        let mut scaled = jac.clone();
        for (k, dk) in d.iter().enumerate() {
            scaled.row_mut(k).scale_mut(*dk);
        }
        Ok(jac.transpose() * scaled + self.map.curvature(x, &w)?)
    }

    fn segment(&self, x: &Point, x0: &Point) -> Result<Segment<'_>> {
        self.check_point(x)?;
        self.check_point(x0)?;
        Ok(match &self.map {
            m if m.is_affine() => Segment::Affine { set: self, gx: m.eval(x)?, gx0: m.eval(x0)? },
            ForwardMap::SquaredModulus => {
                Segment::Quadratic { set: self, lx: x.to_complex(), lx0: x0.to_complex() }
            }
            ForwardMap::FourierIntensity(fft) => {
                let mut lx = x.to_complex();
                let mut lx0 = x0.to_complex();
                fft.forward(&mut lx)?;
                fft.forward(&mut lx0)?;
                Segment::Quadratic { set: self, lx, lx0 }
            }
            _ => unreachable!("all forward maps are affine or quadratic"),
        })
    }

    /// Smallest `tau` in `(0, 1]` with `residual((1 - tau) x + tau x0) <= eps`.
    fn first_crossing(&self, x: &Point, x0: &Point) -> Result<f64> {
        let seg = self.segment(x, x0)?;
        let eps = self.level;
        let r0 = seg.residual(0.0)?;
        if r0 <= eps {
            return Err(Error::InvalidParameter(format!(
                "start point already lies in the set (residual {r0:e} <= {eps:e})"
            )));
        }
        let r1 = seg.residual(1.0)?;
        if r1 > eps + self.tol {
            return Err(Error::NoBoundaryCrossing { anchor_residual: r1 });
        }
        if self.divergence == BregmanDistance::Euclidean {
            if let Segment::Affine { gx, gx0, .. } = &seg {
                return Ok(affine_euclidean_crossing(gx, gx0, &self.data, eps));
            }
        }
        const SCAN: usize = 64;
        let mut lo = 0.0;
        let mut hi = 1.0;
        for i in 1..SCAN {
            let t = i as f64 / SCAN as f64;
            if seg.residual(t)? <= eps {
                hi = t;
                break;
            }
            lo = t;
        }
        if hi == 1.0 && r1 > eps {
            // anchor is a member only within tolerance
            return Ok(1.0);
        }
        let mut iterations = 0;
        while hi - lo > 1e-12 && iterations < 200 {
            let mid = 0.5 * (lo + hi);
            if seg.residual(mid)? <= eps {
                hi = mid;
            } else {
                lo = mid;
            }
            iterations += 1;
        }
        Ok(hi)
    }
}

/// Residual along `(1 - t) x + t x0` with the forward map evaluated once per endpoint.
enum Segment<'a> {
    Affine { set: &'a RegularizedSet, gx: Vec<f64>, gx0: Vec<f64> },
    Quadratic { set: &'a RegularizedSet, lx: Vec<Complex64>, lx0: Vec<Complex64> },
}

impl Segment<'_> {
    fn residual(&self, t: f64) -> Result<f64> {
        match self {
            Segment::Affine { set, gx, gx0 } => {
                let g: Vec<f64> = gx.iter().zip(gx0).map(|(a, b)| (1.0 - t) * a + t * b).collect();
                set.divergence.evaluate(&g, &set.data)
            }
            Segment::Quadratic { set, lx, lx0 } => {
                let g: Vec<f64> =
                    lx.iter().zip(lx0).map(|(a, b)| (a * (1.0 - t) + b * t).norm_sqr()).collect();
                set.divergence.evaluate(&g, &set.data)
            }
        }
    }
}

/// Closed form for `1/2 |u + t w|^2 = eps` with `u = g(x) - b`, `w = g(x0) - g(x)`.
fn affine_euclidean_crossing(gx: &[f64], gx0: &[f64], b: &[f64], eps: f64) -> f64 {
    let mut uu = 0.0;
    let mut uw = 0.0;
    let mut ww = 0.0;
    for ((g, g0), bj) in gx.iter().zip(gx0).zip(b) {
        let u = g - bj;
        let w = g0 - g;
        uu += u * u;
        uw += u * w;
        ww += w * w;
    }
    let a = 0.5 * ww;
    let bq = uw;
    let c = 0.5 * uu - eps;
    if a <= 0.0 {
        return 1.0;
    }
    let disc = (bq * bq - 4.0 * a * c).max(0.0);
    // stable quadratic formula; both roots positive since c > 0 and bq < 0
    let q = -0.5 * (bq - disc.sqrt());
    let r1 = q / a;
    let r2 = if q != 0.0 { c / q } else { r1 };
    let t = r1.min(r2);
    t.clamp(0.0, 1.0)
}

impl SetOracle for RegularizedSet {
    fn dim(&self) -> usize {
        match self.kind {
            ScalarKind::Real => self.dim,
            ScalarKind::Complex => 2 * self.dim,
        }
    }

    /// Exact projection through the KKT oracle; small instances only.
    fn project(&self, x: &Point) -> Result<Vec<Point>> {
        if self.residual(x)? <= self.level {
            return Ok(vec![x.clone()]);
        }
        Ok(vec![project_regularized_exact(self, x)?])
    }

    fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        Ok(self.residual(x)? <= self.level + tol)
    }

    fn membership_tol(&self) -> f64 {
        self.tol
    }

    /// `{0}` in the interior, the ray spanned by the residual gradient on the boundary.
    fn normal_cone(&self, base: &Point) -> Result<NormalCone> {
        let r = self.residual(base)?;
        if r > self.level + self.tol.max(1e-8) {
            return Err(Error::InvalidParameter(
                "normal cone requested at a point outside the set".into(),
            ));
        }
        if r < self.level - self.tol {
            return Ok(NormalCone::Zero);
        }
        match self.gradient(base)?.normalized() {
            Some(u) => Ok(NormalCone::Ray(u.into_vec())),
            None => Err(Error::Unsupported),
        }
    }

    fn is_prox_regular(&self) -> bool {
        self.prox_regular
    }

    fn ray_entry(&self, from: &Point, to: &Point) -> Result<Point> {
        if self.residual(from)? <= self.level {
            return Ok(from.clone());
        }
        let t = self.first_crossing(from, to)?;
        Ok(from.lerp(to, t))
    }
}

/// `d_phi(g(x), b)` for the set's kernel and data.
pub fn residual(m: &RegularizedSet, x: &Point) -> Result<f64> {
    m.residual(x)
}

/// First point of `M_eps` on the segment from `x` (outside) to the anchor `x0`
/// (inside), as `(tau, (1 - tau) x + tau x0)`.
///
/// Euclidean kernels with affine forward maps use the quadratic formula;
/// everything else brackets from `tau = 0` and bisects to a `1e-12` interval.
pub fn bregman_line_boundary(m: &RegularizedSet, x: &Point, x0: &Point) -> Result<(f64, Point)> {
    let tau = m.first_crossing(x, x0)?;
    Ok((tau, x.lerp(x0, tau)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_set(b: Vec<f64>, eps: f64) -> RegularizedSet {
        let n = b.len();
        RegularizedSet::new(
            ForwardMap::Identity,
            b,
            BregmanDistance::Euclidean,
            eps,
            n,
            ScalarKind::Real,
        )
        .unwrap()
    }

    #[test]
    fn residual_examples() {
        let m = identity_set(vec![1.0, -2.0], 0.1);
        assert_eq!(m.residual(&Point::real(vec![1.0, -2.0])).unwrap(), 0.0);

        let a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let lin = RegularizedSet::new(
            ForwardMap::Linear(a),
            vec![2.0],
            BregmanDistance::Euclidean,
            0.0,
            2,
            ScalarKind::Real,
        )
        .unwrap();
        assert_eq!(lin.residual(&Point::real(vec![0.0, 0.0])).unwrap(), 2.0);

        let b = vec![4.0, 0.25, 9.0];
        let sq = RegularizedSet::new(
            ForwardMap::SquaredModulus,
            b.clone(),
            BregmanDistance::KullbackLeibler,
            0.0,
            3,
            ScalarKind::Real,
        )
        .unwrap();
        let root: Vec<f64> = b.iter().map(|v| v.sqrt()).collect();
        assert!(sq.residual(&Point::real(root)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn kl_domain_violation_is_reported() {
        // the identity map lets intensities go negative
        let m = RegularizedSet::new(
            ForwardMap::Identity,
            vec![1.0],
            BregmanDistance::KullbackLeibler,
            0.1,
            1,
            ScalarKind::Real,
        )
        .unwrap();
        assert!(matches!(m.residual(&Point::real(vec![-1.0])), Err(Error::Domain(_))));
    }

    #[test]
    fn euclidean_line_boundary_quadratic_example() {
        // |x - x0| = 2, eps = 0.5: 1/2 (1 - tau)^2 4 = 0.5
        let m = identity_set(vec![0.0, 0.0], 0.5);
        let x = Point::real(vec![2.0, 0.0]);
        let x0 = Point::real(vec![0.0, 0.0]);
        let (tau, p) = bregman_line_boundary(&m, &x, &x0).unwrap();
        assert!((tau - 0.5).abs() < 1e-15);
        assert!((m.residual(&p).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kl_line_boundary_matches_bisection_oracle() {
        let m = RegularizedSet::new(
            ForwardMap::SquaredModulus,
            vec![1.0],
            BregmanDistance::KullbackLeibler,
            0.1,
            1,
            ScalarKind::Real,
        )
        .unwrap();
        let x = Point::real(vec![3.0]);
        let x0 = Point::real(vec![1.0]);
        // independent oracle: 60 bisection steps on the scalar function directly
        let f = |t: f64| {
            let g = ((1.0 - t) * 3.0 + t).powi(2);
            g * g.ln() + 1.0 - g - 0.1
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let (tau, p) = bregman_line_boundary(&m, &x, &x0).unwrap();
        assert!((tau - hi).abs() < 1e-11, "{tau} vs {hi}");
        assert!((m.residual(&p).unwrap() - 0.1).abs() < 1e-10);
    }

    #[test]
    fn line_boundary_errors() {
        let m = identity_set(vec![0.0], 0.5);
        // anchor outside the set
        let err = bregman_line_boundary(&m, &Point::real(vec![3.0]), &Point::real(vec![2.0]))
            .unwrap_err();
        assert!(matches!(err, Error::NoBoundaryCrossing { .. }));
        // start already inside
        assert!(
            bregman_line_boundary(&m, &Point::real(vec![0.1]), &Point::real(vec![0.0])).is_err()
        );
    }

    #[test]
    fn nonconvex_crossing_is_the_first_one() {
        // g = x^2, b = 1, euclidean: M_eps is two intervals around +-1.
        // From x = 3 toward x0 = -1 the segment enters the positive interval first.
        let m = RegularizedSet::new(
            ForwardMap::SquaredModulus,
            vec![1.0],
            BregmanDistance::Euclidean,
            0.02,
            1,
            ScalarKind::Real,
        )
        .unwrap();
        let (_, p) =
            bregman_line_boundary(&m, &Point::real(vec![3.0]), &Point::real(vec![-1.0])).unwrap();
        assert!((p.as_slice()[0] - 1.2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn nesting_in_level() {
        let m = identity_set(vec![0.0, 0.0], 0.1);
        let bigger = m.with_level(0.4).unwrap();
        for x in [[0.1, 0.2], [0.4, 0.0], [0.3, -0.3], [0.0, 0.44]] {
            let p = Point::real(x.to_vec());
            if m.contains(&p, 0.0).unwrap() {
                assert!(bigger.contains(&p, 0.0).unwrap());
            }
        }
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let fft = Fft2::new(2, 3).unwrap();
        let b = vec![0.5, 1.2, 0.3, 2.0, 0.7, 0.9];
        let m = RegularizedSet::new(
            ForwardMap::FourierIntensity(fft),
            b,
            BregmanDistance::KullbackLeibler,
            0.1,
            6,
            ScalarKind::Complex,
        )
        .unwrap();
        let x = Point::real(vec![0.3, -0.2, 0.8, 0.1, -0.5, 0.4, 0.2, 0.2, 0.9, -0.7, 0.1, 0.6])
            .with_kind(ScalarKind::Complex);
        let g = m.gradient(&x).unwrap();
        let h = m.hessian(&x).unwrap();
        let step = 1e-6;
        for j in 0..x.dim() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp.as_mut_slice()[j] += step;
            xm.as_mut_slice()[j] -= step;
            let fd = (m.residual(&xp).unwrap() - m.residual(&xm).unwrap()) / (2.0 * step);
            assert!((fd - g.as_slice()[j]).abs() < 1e-6, "grad {j}");
            let gp = m.gradient(&xp).unwrap();
            let gm = m.gradient(&xm).unwrap();
            for i in 0..x.dim() {
                let fd2 = (gp.as_slice()[i] - gm.as_slice()[i]) / (2.0 * step);
                assert!((fd2 - h[(i, j)]).abs() < 1e-5, "hess {i},{j}");
            }
        }
    }

    #[test]
    fn normal_cone_classification() {
        let m = identity_set(vec![0.0, 0.0], 0.5);
        assert_eq!(m.normal_cone(&Point::real(vec![0.1, 0.0])).unwrap(), NormalCone::Zero);
        match m.normal_cone(&Point::real(vec![1.0, 0.0])).unwrap() {
            NormalCone::Ray(u) => assert!((u[0] - 1.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        let zero = identity_set(vec![0.0, 0.0], 0.0);
        assert_eq!(zero.normal_cone(&Point::real(vec![0.0, 0.0])).unwrap_err(), Error::Unsupported);
    }
}
