use crate::divergence::{bregman_line_boundary, RegularizedSet};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::set::SetOracle;

/// Line-segment approximation of the projection onto `M_eps`: project onto
/// the unregularized set, then walk back from the anchor to the first point of
/// `M_eps` on the segment. Returns the point and the segment parameter `tau`.
pub fn project_regularized_approx<S: SetOracle + ?Sized>(
    m: &RegularizedSet,
    unreg: &S,
    x: &Point,
) -> Result<(Point, f64)> {
    let r = m.residual(x)?;
    if r <= m.level() {
        return Err(Error::InvalidParameter(format!(
            "point already lies in the regularized set (residual {r:e})"
        )));
    }
    let x0 = unreg.project_point(x)?;
    let (tau, p) = bregman_line_boundary(m, x, &x0)?;
    Ok((p, tau))
}
