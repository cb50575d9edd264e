//! The set-oracle abstraction and the queries built on it.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::point::{first_candidate, Point};

/// Default absolute tolerance applied to a set's defining residual.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// Sign restriction of one coordinate of a product cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordCone {
    Free,
    NonPositive,
    NonNegative,
    Zero,
}

impl CoordCone {
    fn project(self, v: f64) -> f64 {
        match self {
            CoordCone::Free => v,
            CoordCone::NonPositive => v.min(0.0),
            CoordCone::NonNegative => v.max(0.0),
            CoordCone::Zero => 0.0,
        }
    }

    fn negate(self) -> Self {
        match self {
            CoordCone::NonPositive => CoordCone::NonNegative,
            CoordCone::NonNegative => CoordCone::NonPositive,
            other => other,
        }
    }
}

/// Analytically known normal cone at a point of a set.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalCone {
    /// `{0}`: the base point is interior.
    Zero,
    /// The ray spanned by a unit vector.
    Ray(Vec<f64>),
    /// A linear subspace given by an orthonormal basis.
    Subspace(Vec<Vec<f64>>),
    /// A product of per-coordinate sign cones.
    Coordinates(Vec<CoordCone>),
}

impl NormalCone {
    /// Euclidean projection of `v` onto the cone.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        match self {
            NormalCone::Zero => vec![0.0; v.len()],
            NormalCone::Ray(u) => {
                let t = dot(u, v).max(0.0);
                u.iter().map(|ui| t * ui).collect()
            }
            NormalCone::Subspace(basis) => {
                let mut out = vec![0.0; v.len()];
                for q in basis {
                    let c = dot(q, v);
                    for (o, qi) in out.iter_mut().zip(q) {
                        *o += c * qi;
                    }
                }
                out
            }
            NormalCone::Coordinates(cones) => {
                v.iter().zip(cones).map(|(&vi, c)| c.project(vi)).collect()
            }
        }
    }

    /// Distance from `v` to the cone.
    pub fn distance(&self, v: &[f64]) -> f64 {
        let p = self.project(v);
        v.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn negated(&self) -> NormalCone {
        match self {
            NormalCone::Zero => NormalCone::Zero,
            NormalCone::Ray(u) => NormalCone::Ray(u.iter().map(|v| -v).collect()),
            NormalCone::Subspace(b) => NormalCone::Subspace(b.clone()),
            NormalCone::Coordinates(c) => {
                NormalCone::Coordinates(c.iter().map(|ci| ci.negate()).collect())
            }
        }
    }

    /// Draws a unit vector uniformly from the cone's intersection with the sphere.
    /// Returns `None` when the cone is `{0}`.
    pub fn sample_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<f64>> {
        let v = match self {
            NormalCone::Zero => return None,
            NormalCone::Ray(u) => return Some(u.clone()),
            NormalCone::Subspace(basis) => {
                let dim = basis.first()?.len();
                let mut v = vec![0.0; dim];
                for q in basis {
                    let c: f64 = rng.sample(StandardNormal);
                    for (o, qi) in v.iter_mut().zip(q) {
                        *o += c * qi;
                    }
                }
                v
            }
            NormalCone::Coordinates(cones) => cones
                .iter()
                .map(|c| {
                    let g: f64 = rng.sample(StandardNormal);
                    match c {
                        CoordCone::Free => g,
                        CoordCone::NonNegative => g.abs(),
                        CoordCone::NonPositive => -g.abs(),
                        CoordCone::Zero => 0.0,
                    }
                })
                .collect(),
        };
        let n = dot(&v, &v).sqrt();
        (n > 0.0).then(|| v.into_iter().map(|x| x / n).collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A closed set exposed through projection and membership queries.
pub trait SetOracle: Send + Sync {
    /// Real dimension of the ambient space.
    fn dim(&self) -> usize;

    /// All returned candidates are nearest points of the set to `x`.
    fn project(&self, x: &Point) -> Result<Vec<Point>>;

    fn contains(&self, x: &Point, tol: f64) -> Result<bool>;

    fn membership_tol(&self) -> f64 {
        DEFAULT_MEMBERSHIP_TOL
    }

    /// Normal cone at a point of the set, when analytically known.
    fn normal_cone(&self, _base: &Point) -> Result<NormalCone> {
        Err(Error::Unsupported)
    }

    fn is_prox_regular(&self) -> bool {
        false
    }

    fn normal_cone_distance(&self, base: &Point, dir: &Point) -> Result<f64> {
        Ok(self.normal_cone(base)?.distance(dir.as_slice()))
    }

    /// Single-valued selection: the lexicographically first candidate.
    fn project_point(&self, x: &Point) -> Result<Point> {
        first_candidate(self.project(x)?)
            .ok_or_else(|| Error::InvalidParameter("projection returned no candidates".into()))
    }

    /// First point of the set on the segment from `from` to `to`, where `to`
    /// is a member. Bracketing on the membership test.
    fn ray_entry(&self, from: &Point, to: &Point) -> Result<Point> {
        let tol = self.membership_tol();
        if self.contains(from, tol)? {
            return Ok(from.clone());
        }
        const SCAN: usize = 64;
        let mut lo = 0.0;
        let mut hi = 1.0;
        for i in 1..=SCAN {
            let t = i as f64 / SCAN as f64;
            if self.contains(&from.lerp(to, t), tol)? {
                hi = t;
                break;
            }
            lo = t;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.contains(&from.lerp(to, mid), tol)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(if hi >= 1.0 { to.clone() } else { from.lerp(to, hi) })
    }
}

impl<T: SetOracle + ?Sized> SetOracle for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn project(&self, x: &Point) -> Result<Vec<Point>> {
        (**self).project(x)
    }
    fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        (**self).contains(x, tol)
    }
    fn membership_tol(&self) -> f64 {
        (**self).membership_tol()
    }
    fn normal_cone(&self, base: &Point) -> Result<NormalCone> {
        (**self).normal_cone(base)
    }
    fn is_prox_regular(&self) -> bool {
        (**self).is_prox_regular()
    }
    fn normal_cone_distance(&self, base: &Point, dir: &Point) -> Result<f64> {
        (**self).normal_cone_distance(base, dir)
    }
    fn project_point(&self, x: &Point) -> Result<Point> {
        (**self).project_point(x)
    }
    fn ray_entry(&self, from: &Point, to: &Point) -> Result<Point> {
        (**self).ray_entry(from, to)
    }
}

/// `d(x, s)`: zero exactly when `x` passes the membership test.
pub fn distance<S: SetOracle + ?Sized>(x: &Point, s: &S) -> Result<f64> {
    x.ensure_dim(s.dim())?;
    x.validate()?;
    if s.contains(x, s.membership_tol())? {
        return Ok(0.0);
    }
    Ok(x.distance(&s.project_point(x)?))
}

/// Distance from the unit direction `dir` to the normal cone of `s` at `base`.
pub fn proximal_normal_residual<S: SetOracle + ?Sized>(
    s: &S,
    base: &Point,
    dir: &Point,
) -> Result<f64> {
    base.ensure_dim(s.dim())?;
    dir.ensure_dim(s.dim())?;
    let n = dir.norm();
    if n == 0.0 {
        return Ok(0.0);
    }
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "direction must be a unit vector, norm is {n}"
        )));
    }
    if !s.contains(base, s.membership_tol().max(1e-8))? {
        return Err(Error::InvalidParameter(
            "base point of a normal-cone query must lie on the set".into(),
        ));
    }
    s.normal_cone_distance(base, dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cone_distances() {
        let ray = NormalCone::Ray(vec![1.0, 0.0]);
        assert_eq!(ray.distance(&[1.0, 0.0]), 0.0);
        assert!((ray.distance(&[0.0, 1.0]) - 1.0).abs() < 1e-15);
        assert!((ray.distance(&[-1.0, 0.0]) - 1.0).abs() < 1e-15);
        let sub = NormalCone::Subspace(vec![vec![0.0, 1.0]]);
        assert!((sub.distance(&[0.6, -0.8]) - 0.6).abs() < 1e-15);
        let coords = NormalCone::Coordinates(vec![CoordCone::NonPositive, CoordCone::Zero]);
        assert!((coords.distance(&[-3.0, 4.0]) - 4.0).abs() < 1e-15);
        assert!((coords.distance(&[3.0, 4.0]) - 5.0).abs() < 1e-15);
        assert_eq!(NormalCone::Zero.distance(&[3.0, 4.0]), 5.0);
    }

    #[test]
    fn samples_lie_in_cone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cones = [
            NormalCone::Subspace(vec![vec![0.6, 0.8, 0.0], vec![0.0, 0.0, 1.0]]),
            NormalCone::Coordinates(vec![CoordCone::NonPositive, CoordCone::Free, CoordCone::Zero]),
            NormalCone::Ray(vec![0.0, 1.0, 0.0]),
        ];
        for cone in &cones {
            for _ in 0..200 {
                let u = cone.sample_unit(&mut rng).unwrap();
                assert!((dot(&u, &u) - 1.0).abs() < 1e-12);
                assert!(cone.distance(&u) < 1e-12);
            }
        }
        assert!(NormalCone::Zero.sample_unit(&mut rng).is_none());
    }
}
