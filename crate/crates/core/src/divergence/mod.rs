//! Bregman distance kernels and the regularized level sets they define.

mod regularized;

pub use regularized::{bregman_line_boundary, residual, ForwardMap, RegularizedSet};

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to intensities before taking logarithms.
pub const KL_FLOOR: f64 = 1e-300;

static KL_CLIPS: AtomicU64 = AtomicU64::new(0);

/// Number of times a KL evaluation has clipped an argument at [`KL_FLOOR`]
/// since process start.
pub fn kl_clip_count() -> u64 {
    KL_CLIPS.load(Ordering::Relaxed)
}

#[inline]
fn clip(v: f64, clips: &mut u64) -> f64 {
    if v < KL_FLOOR {
        *clips += 1;
        KL_FLOOR
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BregmanDistance {
    /// `phi = 1/2 |.|^2`, so `d(z, y) = 1/2 |z - y|^2`.
    Euclidean,
    /// `phi(y) = sum y_j log y_j - y_j`.
    KullbackLeibler,
}

impl BregmanDistance {
    /// `d_phi(z, y)`.
    pub fn evaluate(self, z: &[f64], y: &[f64]) -> Result<f64> {
        check_len(z, y)?;
        match self {
            BregmanDistance::Euclidean => {
                Ok(0.5 * z.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            }
            BregmanDistance::KullbackLeibler => {
                check_kl_domain(z, y)?;
                let mut clips = 0u64;
                let total = z
                    .iter()
                    .zip(y)
                    .map(|(&zj, &yj)| {
                        let yj = clip(yj, &mut clips);
                        kl_term(zj, yj)
                    })
                    .sum();
                if clips > 0 {
                    KL_CLIPS.fetch_add(clips, Ordering::Relaxed);
                }
                Ok(total)
            }
        }
    }

    /// Gradient of `d_phi(., y)` at `z`.
    pub fn gradient_first_arg(self, z: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_len(z, y)?;
        match self {
            BregmanDistance::Euclidean => Ok(z.iter().zip(y).map(|(a, b)| a - b).collect()),
            BregmanDistance::KullbackLeibler => {
                check_kl_domain(z, y)?;
                let mut clips = 0u64;
                let g = z
                    .iter()
                    .zip(y)
                    .map(|(&zj, &yj)| (clip(zj, &mut clips) / clip(yj, &mut clips)).ln())
                    .collect();
                if clips > 0 {
                    KL_CLIPS.fetch_add(clips, Ordering::Relaxed);
                }
                Ok(g)
            }
        }
    }

    /// Diagonal of the Hessian of `d_phi(., y)` at `z` (`phi` is separable).
    pub fn hessian_diag_first_arg(self, z: &[f64]) -> Result<Vec<f64>> {
        match self {
            BregmanDistance::Euclidean => Ok(vec![1.0; z.len()]),
            BregmanDistance::KullbackLeibler => {
                if let Some(j) = z.iter().position(|&v| v < 0.0) {
                    return Err(Error::Domain(format!("negative intensity at {j}")));
                }
                let mut clips = 0u64;
                let h = z.iter().map(|&v| 1.0 / clip(v, &mut clips)).collect();
                if clips > 0 {
                    KL_CLIPS.fetch_add(clips, Ordering::Relaxed);
                }
                Ok(h)
            }
        }
    }
}

/// `z log(z/y) + y - z` with `0 log 0 = 0`, evaluated as `y h(z/y - 1)` for
/// `h(t) = (1+t) log(1+t) - t` near `z = y` to avoid cancellation.
fn kl_term(z: f64, y: f64) -> f64 {
    if z == 0.0 {
        return y;
    }
    let t = (z - y) / y;
    if t.abs() < 0.5 {
        y * ((1.0 + t) * t.ln_1p() - t)
    } else {
        z * (z.ln() - y.ln()) + y - z
    }
}

fn check_len(z: &[f64], y: &[f64]) -> Result<()> {
    if z.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), got: z.len() });
    }
    Ok(())
}

fn check_kl_domain(z: &[f64], y: &[f64]) -> Result<()> {
    if let Some(j) = z.iter().position(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Domain(format!("intensity {} at index {j}", z[j])));
    }
    if let Some(j) = y.iter().position(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Domain(format!("data value {} at index {j}", y[j])));
    }
    Ok(())
}

/// Kullback-Leibler divergence `sum z_j log(z_j / y_j) + y_j - z_j` for
/// `z >= 0` and strictly positive `y`.
pub fn kl_divergence(z: &[f64], y: &[f64]) -> Result<f64> {
    check_len(z, y)?;
    if let Some(j) = z.iter().position(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Domain(format!("negative component {} of z at {j}", z[j])));
    }
    if let Some(j) = y.iter().position(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::Domain(format!("nonpositive component {} of y at {j}", y[j])));
    }
    Ok(z.iter().zip(y).map(|(&a, &b)| kl_term(a, b)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        let v = kl_divergence(&[2.0], &[1.0]).unwrap();
        assert!((v - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!((v - 0.386294).abs() < 1e-6);
        assert_eq!(kl_divergence(&[0.0], &[1.0]).unwrap(), 1.0);
        // the 0 log 0 convention is the limit from the right
        let near = kl_divergence(&[1e-12], &[1.0]).unwrap();
        assert!((near - 1.0).abs() < 1e-10);
    }

    /// Bregman definition with `phi(t) = t log t - t`, where
    /// `d(z, y) = int_y^z (z - s) phi''(s) ds = int_y^z (z - s)/s ds`, by Simpson's rule.
    fn kl_by_quadrature(z: f64, y: f64) -> f64 {
        let n = 20_000;
        let h = (z - y) / n as f64;
        let f = |s: f64| (z - s) / s;
        let mut acc = f(y) + f(z);
        for i in 1..n {
            let s = y + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(s);
        }
        acc * h / 3.0
    }

    #[test]
    fn kl_matches_bregman_quadrature() {
        let q = kl_by_quadrature(2.0, 1.0);
        assert!((q - 0.386294).abs() < 1e-6, "{q}");
        for (z, y) in [(0.3, 1.7), (5.0, 0.2), (1.0, 1.0001)] {
            let exact = kl_divergence(&[z], &[y]).unwrap();
            assert!((exact - kl_by_quadrature(z, y)).abs() < 1e-9);
        }
    }

    #[test]
    fn kl_errors() {
        assert!(matches!(kl_divergence(&[-1.0], &[1.0]), Err(Error::Domain(_))));
        assert!(matches!(kl_divergence(&[1.0], &[0.0]), Err(Error::Domain(_))));
        assert!(matches!(kl_divergence(&[1.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn evaluation_clips_zero_data_and_counts() {
        let before = kl_clip_count();
        let v = BregmanDistance::KullbackLeibler.evaluate(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(v, KL_FLOOR);
        assert!(kl_clip_count() > before);
        assert!(BregmanDistance::KullbackLeibler.evaluate(&[-0.1], &[1.0]).is_err());
    }

    #[test]
    fn euclidean_is_half_squared_distance() {
        let v = BregmanDistance::Euclidean.evaluate(&[1.0, 2.0], &[4.0, -2.0]).unwrap();
        assert_eq!(v, 12.5);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let z = [0.7, 2.2, 1.3];
        let y = [1.0, 1.5, 0.4];
        for kernel in [BregmanDistance::Euclidean, BregmanDistance::KullbackLeibler] {
            let g = kernel.gradient_first_arg(&z, &y).unwrap();
            for j in 0..3 {
                let h = 1e-6;
                let mut zp = z;
                let mut zm = z;
                zp[j] += h;
                zm[j] -= h;
                let fd = (kernel.evaluate(&zp, &y).unwrap() - kernel.evaluate(&zm, &y).unwrap())
                    / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-7);
            }
        }
    }

    fn domain_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..8).prop_flat_map(|n| {
            (prop::collection::vec(0.0f64..50.0, n), prop::collection::vec(1e-3f64..50.0, n))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn bregman_nonnegative_and_separating((z, y) in domain_pair()) {
            for kernel in [BregmanDistance::Euclidean, BregmanDistance::KullbackLeibler] {
                let d = kernel.evaluate(&z, &y).unwrap();
                prop_assert!(d >= 0.0);
                prop_assert_eq!(kernel.evaluate(&y, &y).unwrap(), 0.0);
                if z != y {
                    let sep = z.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    if sep > 1e-6 {
                        prop_assert!(d > 0.0);
                    }
                }
            }
        }
    }
}
