use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{basis_matrix, orthogonal_complement, orthonormal_columns};
use crate::point::Point;
use crate::set::{NormalCone, SetOracle, DEFAULT_MEMBERSHIP_TOL};

/// `{ x : A x = b }` for a full-row-rank `A`.
#[derive(Debug, Clone)]
pub struct AffineSet {
    a: DMatrix<f64>,
    b: DVector<f64>,
    gram: Cholesky<f64, Dyn>,
    normal_basis: Vec<Vec<f64>>,
    tol: f64,
}

impl AffineSet {
    pub fn new(a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
        }
        if a.nrows() == 0 || a.nrows() > a.ncols() {
            return Err(Error::RankDeficient);
        }
        let normal_basis = orthonormal_columns(&a.transpose());
        if normal_basis.len() < a.nrows() {
            return Err(Error::RankDeficient);
        }
        let gram = Cholesky::new(&a * a.transpose()).ok_or(Error::RankDeficient)?;
        Ok(AffineSet {
            a,
            b: DVector::from_vec(b),
            gram,
            normal_basis,
            tol: DEFAULT_MEMBERSHIP_TOL,
        })
    }

    /// Hyperplane `{ x : <normal, x> = offset }`.
    pub fn hyperplane(normal: &[f64], offset: f64) -> Result<Self> {
        AffineSet::new(DMatrix::from_row_slice(1, normal.len(), normal), vec![offset])
    }

    /// `origin + span(columns of basis)`.
    pub fn from_span(basis: &DMatrix<f64>, origin: &[f64]) -> Result<Self> {
        let n = basis.nrows();
        if origin.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: origin.len() });
        }
        let q = orthonormal_columns(basis);
        let comp = orthogonal_complement(&q, n);
        if comp.is_empty() {
            return Err(Error::InvalidParameter(
                "span covers the whole space; use an unconstrained set".into(),
            ));
        }
        let a = basis_matrix(&comp, n).transpose();
        let b = (&a * DVector::from_column_slice(origin)).as_slice().to_vec();
        AffineSet::new(a, b)
    }

    /// Line in the plane through `point` with direction angle `theta`.
    pub fn line_2d(theta: f64, point: [f64; 2]) -> Result<Self> {
        let normal = [-theta.sin(), theta.cos()];
        AffineSet::hyperplane(&normal, normal[0] * point[0] + normal[1] * point[1])
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        self.b.as_slice()
    }

    pub fn residual_norm(&self, x: &Point) -> f64 {
        (&self.a * DVector::from_column_slice(x.as_slice()) - &self.b).norm()
    }

    /// `(I - A^T (A A^T)^{-1} A) z + A^T (A A^T)^{-1} b`.
    pub fn project_one(&self, z: &Point) -> Result<Point> {
        z.ensure_dim(self.a.ncols())?;
        let zv = DVector::from_column_slice(z.as_slice());
        let r = &self.a * &zv - &self.b;
        let y = self.gram.solve(&r);
        let p = zv - self.a.transpose() * y;
        Ok(Point::real(p.as_slice().to_vec()))
    }
}

impl SetOracle for AffineSet {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn project(&self, x: &Point) -> Result<Vec<Point>> {
        Ok(vec![self.project_one(x)?])
    }

    fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        x.ensure_dim(self.dim())?;
        Ok(self.residual_norm(x) <= tol)
    }

    fn membership_tol(&self) -> f64 {
        self.tol
    }

    /// The row space of `A`, identical at every point.
    fn normal_cone(&self, base: &Point) -> Result<NormalCone> {
        base.ensure_dim(self.dim())?;
        Ok(NormalCone::Subspace(self.normal_basis.clone()))
    }

    fn is_prox_regular(&self) -> bool {
        true
    }

    /// An affine set meets a segment ending on it either along the whole
    /// segment or only at the endpoint.
    fn ray_entry(&self, from: &Point, to: &Point) -> Result<Point> {
        if self.contains(from, self.tol)? {
            Ok(from.clone())
        } else {
            Ok(to.clone())
        }
    }
}

pub fn project_affine(s: &AffineSet, z: &Point) -> Result<Point> {
    s.project_one(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set::{distance, proximal_normal_residual};

    #[test]
    fn projection_examples() {
        let s = AffineSet::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), vec![1.0]).unwrap();
        let p = project_affine(&s, &Point::real(vec![0.0, 0.0])).unwrap();
        assert!(p.max_abs_diff(&Point::real(vec![1.0, 0.0])) < 1e-15);
        let q = project_affine(&s, &p).unwrap();
        assert!(q.max_abs_diff(&p) < 1e-15);

        let full = AffineSet::new(DMatrix::identity(3, 3), vec![1.0, -2.0, 0.5]).unwrap();
        let p = project_affine(&full, &Point::real(vec![9.0, 9.0, 9.0])).unwrap();
        assert!(p.max_abs_diff(&Point::real(vec![1.0, -2.0, 0.5])) < 1e-14);
    }

    #[test]
    fn rank_deficient_rejected() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(AffineSet::new(a, vec![0.0, 0.0]).unwrap_err(), Error::RankDeficient);
    }

    #[test]
    fn distance_examples() {
        // line x2 = 1
        let line = AffineSet::hyperplane(&[0.0, 1.0], 1.0).unwrap();
        assert!((distance(&Point::real(vec![0.0, 0.0]), &line).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(distance(&Point::real(vec![7.0, 1.0]), &line).unwrap(), 0.0);
        // the point {0} as the span of nothing is awkward; use A = I, b = 0
        let origin = AffineSet::new(DMatrix::identity(2, 2), vec![0.0, 0.0]).unwrap();
        assert!((distance(&Point::real(vec![3.0, 4.0]), &origin).unwrap() - 5.0).abs() < 1e-14);
        assert!(matches!(
            distance(&Point::real(vec![1.0, 2.0, 3.0]), &line),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn brute_force_distance_to_line() {
        // minimise |x - (t, 1)| over a fine grid of t
        let line = AffineSet::hyperplane(&[0.0, 1.0], 1.0).unwrap();
        let x = Point::real(vec![0.3, -0.4]);
        let brute = (-20_000..=20_000)
            .map(|i| {
                let t = i as f64 * 1e-4;
                ((x.as_slice()[0] - t).powi(2) + (x.as_slice()[1] - 1.0).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((distance(&x, &line).unwrap() - brute).abs() < 1e-8);
    }

    #[test]
    fn orthogonal_directions_are_normal() {
        let basis = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]);
        let s = AffineSet::from_span(&basis, &[0.0, 0.0, 1.0]).unwrap();
        let base = Point::real(vec![2.0, 2.0, 1.0]);
        let dir = Point::real(vec![1.0, -1.0, 0.0]).normalized().unwrap();
        assert!(proximal_normal_residual(&s, &base, &dir).unwrap() < 1e-14);
        let tangent = Point::real(vec![1.0, 1.0, 0.0]).normalized().unwrap();
        assert!((proximal_normal_residual(&s, &base, &tangent).unwrap() - 1.0).abs() < 1e-14);
    }
}
