use crate::error::{Error, Result};
use crate::point::{Point, ScalarKind};
use crate::set::{CoordCone, NormalCone, SetOracle, DEFAULT_MEMBERSHIP_TOL};

/// `{ x : |x_j| = r_j }`, the corners (real) or tori (complex) of a box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxMagnitudeSet {
    radii: Vec<f64>,
    kind: ScalarKind,
    tol: f64,
}

impl BoxMagnitudeSet {
    pub fn new(radii: Vec<f64>, kind: ScalarKind) -> Result<Self> {
        if radii.is_empty() || radii.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter(
                "magnitudes must be finite and nonnegative".into(),
            ));
        }
        Ok(BoxMagnitudeSet { radii, kind, tol: DEFAULT_MEMBERSHIP_TOL })
    }

    /// Magnitudes `sqrt(b_j)` for intensity data `b`.
    pub fn from_intensities(b: &[f64], kind: ScalarKind) -> Result<Self> {
        BoxMagnitudeSet::new(b.iter().map(|v| v.max(0.0).sqrt()).collect(), kind)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    fn check(&self, x: &Point) -> Result<()> {
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
}

impl SetOracle for BoxMagnitudeSet {
    fn dim(&self) -> usize {
        match self.kind {
            ScalarKind::Real => self.radii.len(),
            ScalarKind::Complex => 2 * self.radii.len(),
        }
    }

    /// Componentwise `r_j x_j / |x_j|`. A zero component has every point of
    /// modulus `r_j` as a nearest point; the candidate list flips the sign of the
    /// first zero component only and uses phase zero elsewhere.
    fn project(&self, x: &Point) -> Result<Vec<Point>> {
        self.check(x)?;
        let mut y = x.clone();
        let mut first_zero = None;
        match self.kind {
            ScalarKind::Real => {
                for (j, (v, r)) in y.as_mut_slice().iter_mut().zip(&self.radii).enumerate() {
                    if *v == 0.0 {
                        first_zero.get_or_insert(j);
                        *v = *r;
                    } else {
                        *v = r * v.signum();
                    }
                }
            }
            ScalarKind::Complex => {
                for (j, (c, r)) in y.as_mut_slice().chunks_exact_mut(2).zip(&self.radii).enumerate()
                {
                    let m = c[0].hypot(c[1]);
                    if m == 0.0 {
                        first_zero.get_or_insert(j);
                        c[0] = *r;
                        c[1] = 0.0;
                    } else {
                        c[0] *= r / m;
                        c[1] *= r / m;
                    }
                }
            }
        }
        let mut out = vec![y.clone()];
        if let Some(j) = first_zero {
            if self.radii[j] > 0.0 {
                let idx = match self.kind {
                    ScalarKind::Real => j,
                    ScalarKind::Complex => 2 * j,
                };
                let mut flipped = y;
                flipped.as_mut_slice()[idx] = -self.radii[j];
                out.push(flipped);
            }
        }
        Ok(out)
    }

    fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        self.check(x)?;
        let ok = match self.kind {
            ScalarKind::Real => {
                x.as_slice().iter().zip(&self.radii).all(|(v, r)| (v.abs() - r).abs() <= tol)
            }
            ScalarKind::Complex => x
                .as_slice()
                .chunks_exact(2)
                .zip(&self.radii)
                .all(|(c, r)| (c[0].hypot(c[1]) - r).abs() <= tol),
        };
        Ok(ok)
    }

    fn membership_tol(&self) -> f64 {
        self.tol
    }

    /// Real case: the set is locally a point, so the whole space is normal.
    /// Complex case: the radial direction of each circle (everything where `r_j = 0`).
    fn normal_cone(&self, base: &Point) -> Result<NormalCone> {
        self.check(base)?;
        match self.kind {
            ScalarKind::Real => {
                Ok(NormalCone::Coordinates(vec![CoordCone::Free; self.radii.len()]))
            }
            ScalarKind::Complex => {
                let n = self.dim();
                let mut basis = Vec::new();
                for (j, c) in base.as_slice().chunks_exact(2).enumerate() {
                    let m = c[0].hypot(c[1]);
                    if self.radii[j] == 0.0 || m == 0.0 {
                        for off in 0..2 {
                            let mut e = vec![0.0; n];
                            e[2 * j + off] = 1.0;
                            basis.push(e);
                        }
                    } else {
                        let mut e = vec![0.0; n];
                        e[2 * j] = c[0] / m;
                        e[2 * j + 1] = c[1] / m;
                        basis.push(e);
                    }
                }
                Ok(NormalCone::Subspace(basis))
            }
        }
    }

    fn is_prox_regular(&self) -> bool {
        true
    }

    fn ray_entry(&self, from: &Point, to: &Point) -> Result<Point> {
        if self.contains(from, self.tol)? {
            Ok(from.clone())
        } else {
            Ok(to.clone())
        }
    }
}

pub fn project_magnitude(s: &BoxMagnitudeSet, x: &Point) -> Result<Vec<Point>> {
    s.project(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn sign_formula() {
        let s = BoxMagnitudeSet::new(vec![2.0, 5.0], ScalarKind::Real).unwrap();
        let p = project_magnitude(&s, &Point::real(vec![3.0, -4.0])).unwrap();
        assert_eq!(p, vec![Point::real(vec![2.0, -5.0])]);
    }

    #[test]
    fn zero_component_gives_both_signs() {
        let s = BoxMagnitudeSet::new(vec![2.0], ScalarKind::Real).unwrap();
        let p = project_magnitude(&s, &Point::real(vec![0.0])).unwrap();
        assert_eq!(p, vec![Point::real(vec![2.0]), Point::real(vec![-2.0])]);
    }

    #[test]
    fn candidate_set_is_capped() {
        let s = BoxMagnitudeSet::new(vec![1.0; 4], ScalarKind::Real).unwrap();
        let p = project_magnitude(&s, &Point::real(vec![0.0, 0.5, 0.0, 0.0])).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].as_slice(), &[-1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn idempotent_on_members() {
        let s = BoxMagnitudeSet::new(vec![1.5, 0.5], ScalarKind::Complex).unwrap();
        let x = Point::from_complex(&[
            Complex64::from_polar(1.5, 0.3),
            Complex64::from_polar(0.5, -2.0),
        ]);
        let p = project_magnitude(&s, &x).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p[0].max_abs_diff(&x) < 1e-15);
        assert!(s.contains(&p[0], 1e-12).unwrap());
    }

    #[test]
    fn complex_residual_is_radial() {
        let s = BoxMagnitudeSet::new(vec![1.0, 2.0], ScalarKind::Complex).unwrap();
        let x = Point::from_complex(&[Complex64::new(3.0, 1.0), Complex64::new(-0.5, 0.2)]);
        let p = s.project_point(&x).unwrap();
        let dir = x.sub(&p).normalized().unwrap();
        assert!(s.normal_cone_distance(&p, &dir).unwrap() < 1e-12);
    }
}
