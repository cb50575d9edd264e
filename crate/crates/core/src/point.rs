//! Dense vectors of the ambient Euclidean space.
//!
//! Complex vectors are stored as interleaved `(re, im)` pairs so every norm and
//! inner product is the real Euclidean one on `R^{2n}`.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarKind {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    data: Vec<f64>,
    kind: ScalarKind,
}

impl Point {
    pub fn real(data: Vec<f64>) -> Self {
        Point { data, kind: ScalarKind::Real }
    }

    pub fn from_complex(values: &[Complex64]) -> Self {
        let mut data = Vec::with_capacity(2 * values.len());
        for z in values {
            data.push(z.re);
            data.push(z.im);
        }
        Point { data, kind: ScalarKind::Complex }
    }

    /// Builds a point from raw storage, rejecting empty or non-finite input.
    pub fn checked(data: Vec<f64>, kind: ScalarKind) -> Result<Self> {
        if data.is_empty() || (kind == ScalarKind::Complex && !data.len().is_multiple_of(2)) {
            return Err(Error::InvalidParameter(format!(
                "storage length {} is invalid for {:?} points",
                data.len(),
                kind
            )));
        }
        let p = Point { data, kind };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(dim: usize, kind: ScalarKind) -> Self {
        let len = match kind {
            ScalarKind::Real => dim,
            ScalarKind::Complex => 2 * dim,
        };
        Point { data: vec![0.0; len], kind }
    }

    pub fn validate(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn kind(&self) -> ScalarKind {
        self.kind
    }

    pub fn is_complex(&self) -> bool {
        self.kind == ScalarKind::Complex
    }

    /// Length of the real storage, i.e. the real dimension of the ambient space.
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    /// Number of scalar components (`dim / 2` for complex points).
    pub fn len(&self) -> usize {
        match self.kind {
            ScalarKind::Real => self.data.len(),
            ScalarKind::Complex => self.data.len() / 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Same storage reinterpreted with another kind.
    pub fn with_kind(self, kind: ScalarKind) -> Self {
        Point { kind, ..self }
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        match self.kind {
            ScalarKind::Real => self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            ScalarKind::Complex => {
                self.data.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
            }
        }
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Point) -> Point {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Point) -> Point {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Point {
        Point { data: self.data.iter().map(|v| s * v).collect(), kind: self.kind }
    }

    /// `(1 - t) * self + t * other`.
    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        self.zip_map(other, |a, b| (1.0 - t) * a + t * b)
    }

    /// Unit vector along `self`, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Point> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale(1.0 / n))
    }

    pub fn max_abs_diff(&self, other: &Point) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn lexicographic_cmp(&self, other: &Point) -> Ordering {
        for (a, b) in self.data.iter().zip(&other.data) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.data.len().cmp(&other.data.len())
    }

    pub fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got: self.dim() })
        }
    }

    fn zip_map(&self, other: &Point, f: impl Fn(f64, f64) -> f64) -> Point {
        debug_assert_eq!(self.data.len(), other.data.len());
        Point {
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
            kind: self.kind,
        }
    }
}

impl From<Vec<f64>> for Point {
    fn from(data: Vec<f64>) -> Self {
        Point::real(data)
    }
}

/// Deterministic selection from a multivalued projection: the lexicographically
/// smallest candidate.
pub fn first_candidate(mut candidates: Vec<Point>) -> Option<Point> {
    candidates.sort_by(|a, b| a.lexicographic_cmp(b));
    candidates.into_iter().next()
}
