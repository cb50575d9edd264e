use crate::error::{Error, Result};
use crate::point::Point;
use crate::set::{NormalCone, SetOracle, DEFAULT_MEMBERSHIP_TOL};

/// `{ x : <a, x> <= beta }`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    normal: Point,
    unit: Vec<f64>,
    offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let normal = Point::real(normal);
        let unit = normal
            .normalized()
            .ok_or_else(|| Error::InvalidParameter("halfspace normal must be nonzero".into()))?
            .into_vec();
        Ok(Halfspace { normal, unit, offset })
    }

    fn excess(&self, x: &Point) -> f64 {
        self.normal.dot(x) - self.offset
    }
}

impl SetOracle for Halfspace {
    fn dim(&self) -> usize {
        self.normal.dim()
    }

    fn project(&self, x: &Point) -> Result<Vec<Point>> {
        x.ensure_dim(self.dim())?;
        let e = self.excess(x);
        if e <= 0.0 {
            return Ok(vec![x.clone()]);
        }
        Ok(vec![x.sub(&self.normal.scale(e / self.normal.norm_sq()))])
    }

    fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        x.ensure_dim(self.dim())?;
        Ok(self.excess(x) <= tol * self.normal.norm())
    }

    fn normal_cone(&self, base: &Point) -> Result<NormalCone> {
        base.ensure_dim(self.dim())?;
        if self.excess(base) < -DEFAULT_MEMBERSHIP_TOL * self.normal.norm() {
            Ok(NormalCone::Zero)
        } else {
            Ok(NormalCone::Ray(self.unit.clone()))
        }
    }

    fn is_prox_regular(&self) -> bool {
        true
    }
}

/// Closed Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius must be > 0, got {radius}")));
        }
        Ok(Ball { center: Point::real(center), radius })
    }
}

impl SetOracle for Ball {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn project(&self, x: &Point) -> Result<Vec<Point>> {
        x.ensure_dim(self.dim())?;
        let d = x.sub(&self.center);
        let n = d.norm();
        if n <= self.radius {
            return Ok(vec![x.clone()]);
        }
        Ok(vec![self.center.add(&d.scale(self.radius / n))])
    }

    fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        x.ensure_dim(self.dim())?;
        Ok(x.distance(&self.center) <= self.radius + tol)
    }

    fn normal_cone(&self, base: &Point) -> Result<NormalCone> {
        base.ensure_dim(self.dim())?;
        let d = base.sub(&self.center);
        if d.norm() < self.radius - DEFAULT_MEMBERSHIP_TOL {
            return Ok(NormalCone::Zero);
        }
        Ok(NormalCone::Ray(d.normalized().ok_or(Error::Unsupported)?.into_vec()))
    }

    fn is_prox_regular(&self) -> bool {
        true
    }
}
