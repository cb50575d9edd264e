//! Unitary two-dimensional DFT on row-major complex grids.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Plans for an `n1 x n2` grid. One-dimensional signals use `n1 = 1`.
#[derive(Clone)]
pub struct Fft2 {
    n1: usize,
    n2: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2").field("n1", &self.n1).field("n2", &self.n2).finish()
    }
}

impl PartialEq for Fft2 {
    fn eq(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }
}

impl Fft2 {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter(format!("empty grid {n1}x{n2}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Fft2 {
            n1,
            n2,
            row_fwd: planner.plan_fft_forward(n2),
            row_inv: planner.plan_fft_inverse(n2),
            col_fwd: planner.plan_fft_forward(n1),
            col_inv: planner.plan_fft_inverse(n1),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) -> Result<()> {
        self.apply(data, &self.row_fwd, &self.col_fwd)
    }

    pub fn inverse(&self, data: &mut [Complex64]) -> Result<()> {
        self.apply(data, &self.row_inv, &self.col_inv)
    }

    fn apply(
        &self,
        data: &mut [Complex64],
        row: &Arc<dyn Fft<f64>>,
        col: &Arc<dyn Fft<f64>>,
    ) -> Result<()> {
        if data.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: data.len() });
        }
        if self.n2 > 1 {
            row.process(data);
        }
        if self.n1 > 1 {
            let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
            transpose(data, &mut t, self.n1, self.n2);
            col.process(&mut t);
            transpose(&t, data, self.n2, self.n1);
        }
        let s = 1.0 / (self.len() as f64).sqrt();
        for v in data.iter_mut() {
            *v *= s;
        }
        Ok(())
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct O(n^2) unitary DFT.
    fn naive_dft(x: &[Complex64], n1: usize, n2: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n1 * n2];
        let norm = 1.0 / ((n1 * n2) as f64).sqrt();
        for k1 in 0..n1 {
            for k2 in 0..n2 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j1 in 0..n1 {
                    for j2 in 0..n2 {
                        let ang = -2.0
                            * std::f64::consts::PI
                            * ((k1 * j1) as f64 / n1 as f64 + (k2 * j2) as f64 / n2 as f64);
                        acc += x[j1 * n2 + j2] * Complex64::from_polar(1.0, ang);
                    }
                }
                out[k1 * n2 + k2] = acc * norm;
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft_and_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n1, n2) in [(1, 7), (4, 6), (5, 3)] {
            let fft = Fft2::new(n1, n2).unwrap();
            let x: Vec<Complex64> = (0..n1 * n2)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let mut y = x.clone();
            fft.forward(&mut y).unwrap();
            let reference = naive_dft(&x, n1, n2);
            for (a, b) in y.iter().zip(&reference) {
                assert!((a - b).norm() < 1e-12);
            }
            fft.inverse(&mut y).unwrap();
            for (a, b) in y.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn delta_has_flat_spectrum() {
        let fft = Fft2::new(4, 4).unwrap();
        let mut x = vec![Complex64::new(0.0, 0.0); 16];
        x[5] = Complex64::new(2.0, 0.0);
        fft.forward(&mut x).unwrap();
        for v in &x {
            assert!((v.norm_sqr() - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_wrong_length() {
        let fft = Fft2::new(2, 2).unwrap();
        let mut x = vec![Complex64::new(0.0, 0.0); 3];
        assert!(fft.forward(&mut x).is_err());
    }
}
