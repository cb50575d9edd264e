use super::AffineSet;
use crate::error::{Error, Result};
use crate::point::Point;
use crate::set::SetOracle;

/// Inexact projector onto an affine set: the step from `x` is rotated by a
/// fixed angle `phi` away from the normal, tilting the landing point away
/// from `anchor` along the set. The normalized step then sits at distance
/// `sin(phi)` from the normal space when the set is a hyperplane.
#[derive(Debug, Clone)]
pub struct TiltedProjector {
    set: AffineSet,
    angle: f64,
    anchor: Point,
}

impl TiltedProjector {
    pub fn new(set: AffineSet, angle: f64, anchor: Point) -> Result<Self> {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&angle) {
            return Err(Error::InvalidParameter(format!(
                "tilt angle must lie in [0, pi/2), got {angle}"
            )));
        }
        anchor.ensure_dim(set.dim())?;
        Ok(TiltedProjector { set, angle, anchor })
    }

    /// Tilt with `sin(phi) = gamma`.
    pub fn with_gamma(set: AffineSet, gamma: f64, anchor: Point) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        TiltedProjector::new(set, gamma.asin(), anchor)
    }

    pub fn set(&self) -> &AffineSet {
        &self.set
    }

    pub fn gamma(&self) -> f64 {
        self.angle.sin()
    }

    pub fn step(&self, x: &Point) -> Result<Point> {
        let p = self.set.project_one(x)?;
        let d = x.distance(&p);
        let Some(t) = p.sub(&self.anchor).normalized() else {
            return Ok(p);
        };
        // keep the tangent inside the set's direction space
        let shift = self.set.project_one(&self.anchor.add(&t))?.sub(&self.anchor);
        let Some(t) = shift.normalized() else {
            return Ok(p);
        };
        Ok(p.add(&t.scale(d * self.angle.tan())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilt_hits_line_at_expected_angle() {
        let line = AffineSet::line_2d(0.0, [0.0, 0.0]).unwrap();
        let gamma = 0.3;
        let tp =
            TiltedProjector::with_gamma(line.clone(), gamma, Point::real(vec![0.0, 0.0])).unwrap();
        let x = Point::real(vec![2.0, 1.0]);
        let q = tp.step(&x).unwrap();
        assert!(line.contains(&q, 1e-12).unwrap());
        assert!(q.as_slice()[0] > 2.0);
        let dir = x.sub(&q).normalized().unwrap();
        let residual = line.normal_cone_distance(&q, &dir).unwrap();
        assert!((residual - gamma).abs() < 1e-12);
    }
}
