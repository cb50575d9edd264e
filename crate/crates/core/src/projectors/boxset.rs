use crate::error::{Error, Result};
use crate::point::Point;
use crate::set::{CoordCone, NormalCone, SetOracle, DEFAULT_MEMBERSHIP_TOL};

/// Axis-aligned box `{ x : lower <= x <= upper }`. Infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u {
                return Err(Error::InvalidParameter(format!("empty box side {i}: [{l}, {u}]")));
            }
        }
        Ok(BoxSet { lower, upper })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

impl SetOracle for BoxSet {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn project(&self, x: &Point) -> Result<Vec<Point>> {
        x.ensure_dim(self.dim())?;
        let p = x
            .as_slice()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| v.clamp(*l, *u))
            .collect();
        Ok(vec![Point::real(p)])
    }

    fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        x.ensure_dim(self.dim())?;
        Ok(x.as_slice()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol))
    }

    fn normal_cone(&self, base: &Point) -> Result<NormalCone> {
        base.ensure_dim(self.dim())?;
        let tol = DEFAULT_MEMBERSHIP_TOL;
        let cones: Vec<CoordCone> = base
            .as_slice()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| {
                let at_l = (v - l).abs() <= tol;
                let at_u = (v - u).abs() <= tol;
                match (at_l, at_u) {
                    (true, true) => CoordCone::Free,
                    (true, false) => CoordCone::NonPositive,
                    (false, true) => CoordCone::NonNegative,
                    (false, false) => CoordCone::Zero,
                }
            })
            .collect();
        if cones.iter().all(|c| *c == CoordCone::Zero) {
            return Ok(NormalCone::Zero);
        }
        Ok(NormalCone::Coordinates(cones))
    }

    fn is_prox_regular(&self) -> bool {
        true
    }
}
