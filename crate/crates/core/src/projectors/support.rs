use crate::error::{Error, Result};
use crate::point::{Point, ScalarKind};
use crate::set::{CoordCone, NormalCone, SetOracle, DEFAULT_MEMBERSHIP_TOL};

/// `{ x real, x >= 0, x_j = 0 for j in J }`, embedded in the real or complex space.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportNonnegSet {
    /// `true` for indices in `J`.
    forced_zero: Vec<bool>,
    kind: ScalarKind,
    tol: f64,
}

impl SupportNonnegSet {
    pub fn new(forced_zero: Vec<bool>, kind: ScalarKind) -> Result<Self> {
        if forced_zero.is_empty() {
            return Err(Error::InvalidParameter("empty index set".into()));
        }
        Ok(SupportNonnegSet { forced_zero, kind, tol: DEFAULT_MEMBERSHIP_TOL })
    }

    /// Builds `J` as the complement of an allowed-support mask.
    pub fn from_support(support: &[bool], kind: ScalarKind) -> Result<Self> {
        SupportNonnegSet::new(support.iter().map(|s| !s).collect(), kind)
    }

    pub fn forced_zero(&self) -> &[bool] {
        &self.forced_zero
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

    fn stride(&self) -> usize {
        match self.kind {
            ScalarKind::Real => 1,
            ScalarKind::Complex => 2,
        }
    }
}

impl SetOracle for SupportNonnegSet {
    fn dim(&self) -> usize {
        self.stride() * self.forced_zero.len()
    }

    fn project(&self, x: &Point) -> Result<Vec<Point>> {
        self.check(x)?;
        let s = self.stride();
        let mut y = x.clone();
        for (c, &zero) in y.as_mut_slice().chunks_exact_mut(s).zip(&self.forced_zero) {
            c[0] = if zero { 0.0 } else { c[0].max(0.0) };
            if s == 2 {
                c[1] = 0.0;
            }
        }
        Ok(vec![y])
    }

    fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        self.check(x)?;
        let s = self.stride();
        Ok(x.as_slice().chunks_exact(s).zip(&self.forced_zero).all(|(c, &zero)| {
            let re_ok = if zero { c[0].abs() <= tol } else { c[0] >= -tol };
            re_ok && (s == 1 || c[1].abs() <= tol)
        }))
    }

    fn membership_tol(&self) -> f64 {
        self.tol
    }

    fn normal_cone(&self, base: &Point) -> Result<NormalCone> {
        self.check(base)?;
        let s = self.stride();
        let mut cones = Vec::with_capacity(self.dim());
        for (c, &zero) in base.as_slice().chunks_exact(s).zip(&self.forced_zero) {
            cones.push(if zero {
                CoordCone::Free
            } else if c[0] <= self.tol {
                CoordCone::NonPositive
            } else {
                CoordCone::Zero
            });
            if s == 2 {
                cones.push(CoordCone::Free);
            }
        }
        Ok(NormalCone::Coordinates(cones))
    }

    fn is_prox_regular(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn zeroes_and_clamps() {
        let s = SupportNonnegSet::new(vec![false, true, false], ScalarKind::Real).unwrap();
        let p = s.project_point(&Point::real(vec![-1.0, 3.0, 2.0])).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 0.0, 2.0]);
        let again = s.project_point(&p).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn complex_input_keeps_real_part() {
        let s = SupportNonnegSet::new(vec![false, false], ScalarKind::Complex).unwrap();
        let x = Point::from_complex(&[Complex64::new(1.5, -2.0), Complex64::new(-0.5, 1.0)]);
        let p = s.project_point(&x).unwrap();
        assert_eq!(p.as_slice(), &[1.5, 0.0, 0.0, 0.0]);
        assert!(s.contains(&p, 0.0).unwrap());
    }

    #[test]
    fn residual_lies_in_normal_cone() {
        let s = SupportNonnegSet::new(vec![true, false, false], ScalarKind::Real).unwrap();
        let x = Point::real(vec![4.0, -3.0, 1.0]);
        let p = s.project_point(&x).unwrap();
        let dir = x.sub(&p).normalized().unwrap();
        assert!(s.normal_cone_distance(&p, &dir).unwrap() < 1e-15);
    }
}
