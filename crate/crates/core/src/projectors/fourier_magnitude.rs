use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::Fft2;
use crate::point::{Point, ScalarKind};
use crate::set::{NormalCone, SetOracle, DEFAULT_MEMBERSHIP_TOL};

/// `M_0 = { x in C^n : |F x|^2 = b }` for the unitary 2-D DFT `F`.
#[derive(Debug, Clone)]
pub struct FourierMagnitudeSet {
    fft: Fft2,
    intensities: Vec<f64>,
    magnitudes: Vec<f64>,
    tol: f64,
}

impl FourierMagnitudeSet {
    pub fn new(shape: (usize, usize), intensities: Vec<f64>) -> Result<Self> {
        let fft = Fft2::new(shape.0, shape.1)?;
        if intensities.len() != fft.len() {
            return Err(Error::DimensionMismatch { expected: fft.len(), got: intensities.len() });
        }
        if intensities.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("intensities must be >= 0".into()));
        }
        let magnitudes = intensities.iter().map(|v| v.sqrt()).collect();
        Ok(FourierMagnitudeSet { fft, intensities, magnitudes, tol: DEFAULT_MEMBERSHIP_TOL })
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    fn spectrum(&self, x: &Point) -> Result<Vec<Complex64>> {
        if x.len() != self.fft.len() {
            return Err(Error::DimensionMismatch { expected: self.fft.len(), got: x.len() });
        }
        let mut y = x.to_complex();
        self.fft.forward(&mut y)?;
        Ok(y)
    }

    /// Keeps the phase of `F x` and replaces its modulus by `sqrt(b)`.
    /// Zero coefficients get phase zero.
    pub fn project_one(&self, x: &Point) -> Result<Point> {
        let mut y = self.spectrum(x)?;
        for (v, r) in y.iter_mut().zip(&self.magnitudes) {
            let m = v.norm();
            *v = if m == 0.0 { Complex64::new(*r, 0.0) } else { *v * (r / m) };
        }
        self.fft.inverse(&mut y)?;
        Ok(Point::from_complex(&y))
    }

    /// `max_k | |F x|_k^2 - b_k |`.
    pub fn intensity_error(&self, x: &Point) -> Result<f64> {
        let y = self.spectrum(x)?;
        Ok(y.iter()
            .zip(&self.intensities)
            .map(|(v, b)| (v.norm_sqr() - b).abs())
            .fold(0.0, f64::max))
    }

    fn scale(&self) -> f64 {
        self.intensities.iter().fold(1.0f64, |a, &b| a.max(b))
    }
}

impl SetOracle for FourierMagnitudeSet {
    fn dim(&self) -> usize {
        2 * self.fft.len()
    }

    fn project(&self, x: &Point) -> Result<Vec<Point>> {
        Ok(vec![self.project_one(x)?])
    }

    /// Relative to the largest intensity.
    fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        Ok(self.intensity_error(x)? <= tol * self.scale())
    }

    fn membership_tol(&self) -> f64 {
        self.tol
    }

    /// Span of the radial directions `F^* (e_k u_k)`, `u_k` the unit phase of
    /// `(F x)_k`; both real directions of `C` where `b_k = 0`. Dense, small grids only.
    fn normal_cone(&self, base: &Point) -> Result<NormalCone> {
        let y = self.spectrum(base)?;
        let n = self.fft.len();
        let mut basis = Vec::new();
        let mut push = |k: usize, u: Complex64| -> Result<()> {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[k] = u;
            self.fft.inverse(&mut e)?;
            basis.push(Point::from_complex(&e).into_vec());
            Ok(())
        };
        for (k, v) in y.iter().enumerate() {
            let m = v.norm();
            if self.magnitudes[k] == 0.0 || m == 0.0 {
                push(k, Complex64::new(1.0, 0.0))?;
                push(k, Complex64::new(0.0, 1.0))?;
            } else {
                push(k, v / m)?;
            }
        }
        Ok(NormalCone::Subspace(basis))
    }

    /// Evaluated in Fourier space, where the cone is a product of radial lines.
    fn normal_cone_distance(&self, base: &Point, dir: &Point) -> Result<f64> {
        let y = self.spectrum(base)?;
        let d = self.spectrum(&dir.clone().with_kind(ScalarKind::Complex))?;
        let mut acc = 0.0;
        for (k, (v, dk)) in y.iter().zip(&d).enumerate() {
            let m = v.norm();
            if self.magnitudes[k] == 0.0 || m == 0.0 {
                continue;
            }
            let u = v / m;
            let radial = (dk * u.conj()).re;
            acc += (dk - u * radial).norm_sqr();
        }
        Ok(acc.sqrt())
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

pub fn project_fourier_magnitude(s: &FourierMagnitudeSet, x: &Point) -> Result<Point> {
    s.project_one(x)
}
