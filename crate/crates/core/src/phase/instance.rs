use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::divergence::{BregmanDistance, ForwardMap, RegularizedSet};
use crate::error::{Error, Result};
use crate::fourier::Fft2;
use crate::point::{Point, ScalarKind};
use crate::projectors::{FourierMagnitudeSet, SupportNonnegSet};

const MAGIC: &[u8; 4] = b"RAPI";
const VERSION: u32 = 1;

/// Synthetic diffraction data: a real nonnegative object with known support,
/// its noiseless Fourier intensities and a Poisson-sampled observation.
/// Grids are row-major `n1 x n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseInstance {
    pub shape: (usize, usize),
    pub object: Vec<f64>,
    pub noiseless: Vec<f64>,
    pub observed: Vec<f64>,
    /// `true` where the object may be nonzero.
    pub support: Vec<bool>,
    pub seed: u64,
    pub photon_scale: f64,
}

/// Metadata written next to a binary instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSidecar {
    pub format: String,
    pub version: u32,
    pub n1: usize,
    pub n2: usize,
    pub seed: u64,
    pub photon_scale: f64,
    pub support_size: usize,
    pub total_photons: f64,
    pub kl_noiseless_observed: f64,
}

/// `|F x|^2` under the unitary 2-D DFT.
pub fn fourier_intensities(shape: (usize, usize), x: &[f64]) -> Result<Vec<f64>> {
    let fft = Fft2::new(shape.0, shape.1)?;
    if x.len() != fft.len() {
        return Err(Error::DimensionMismatch { expected: fft.len(), got: x.len() });
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf)?;
    Ok(buf.iter().map(|c| c.norm_sqr()).collect())
}

/// Binary cup: two walls and a floor in the central half of the grid.
pub fn cup_object(shape: (usize, usize)) -> Vec<f64> {
    let (n1, n2) = shape;
    let (top, bottom) = (n1 / 4, (3 * n1 / 4).max(n1 / 4 + 1));
    let (left, right) = (n2 / 4, (3 * n2 / 4).max(n2 / 4 + 1));
    let wall = (n2 / 16).max(1);
    let floor = (n1 / 16).max(1);
    let mut out = vec![0.0; n1 * n2];
    for i in top..bottom {
        for j in left..right {
            if j < left + wall || j + wall >= right || i + floor >= bottom {
                out[i * n2 + j] = 1.0;
            }
        }
    }
    out
}

/// Bounding box of the nonzero pixels grown by `margin`, clipped to the grid.
pub fn box_support(shape: (usize, usize), object: &[f64], margin: usize) -> Vec<bool> {
    let (n1, n2) = shape;
    let (mut r0, mut r1, mut c0, mut c1) = (n1, 0, n2, 0);
    for i in 0..n1 {
        for j in 0..n2 {
            if object[i * n2 + j] != 0.0 {
                r0 = r0.min(i);
                r1 = r1.max(i);
                c0 = c0.min(j);
                c1 = c1.max(j);
            }
        }
    }
    let mut mask = vec![false; n1 * n2];
    if r0 > r1 {
        return mask;
    }
    let (r0, c0) = (r0.saturating_sub(margin), c0.saturating_sub(margin));
    let (r1, c1) = ((r1 + margin).min(n1 - 1), (c1 + margin).min(n2 - 1));
    for i in r0..=r1 {
        for j in c0..=c1 {
            mask[i * n2 + j] = true;
        }
    }
    mask
}

/// Random object on `support` with values in `[0.5, 1.5)`, observed through
/// Poisson noise at `photon_scale`.
pub fn synthesize(
    shape: (usize, usize),
    support: &[bool],
    photon_scale: f64,
    seed: u64,
) -> Result<PhaseInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let object: Vec<f64> =
        support.iter().map(|&s| if s { rng.random_range(0.5..1.5) } else { 0.0 }).collect();
    build(shape, object, support.to_vec(), photon_scale, seed, &mut rng)
}

/// Poisson observation of a given object. The object must vanish off `support`.
pub fn synthesize_from_object(
    shape: (usize, usize),
    object: Vec<f64>,
    support: &[bool],
    photon_scale: f64,
    seed: u64,
) -> Result<PhaseInstance> {
    if object.len() != support.len() {
        return Err(Error::DimensionMismatch { expected: support.len(), got: object.len() });
    }
    if let Some(j) = object
        .iter()
        .zip(support)
        .position(|(&v, &s)| v < 0.0 || !v.is_finite() || (!s && v != 0.0))
    {
        return Err(Error::InvalidParameter(format!(
            "object must be nonnegative and vanish off the support (pixel {j})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build(shape, object, support.to_vec(), photon_scale, seed, &mut rng)
}

fn build(
    shape: (usize, usize),
    object: Vec<f64>,
    support: Vec<bool>,
    photon_scale: f64,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<PhaseInstance> {
    if !(photon_scale > 0.0 && photon_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "photon scale must be positive, got {photon_scale}"
        )));
    }
    if support.len() != shape.0 * shape.1 {
        return Err(Error::DimensionMismatch { expected: shape.0 * shape.1, got: support.len() });
    }
    if !support.iter().any(|&s| s) {
        return Err(Error::InvalidParameter("support is empty".into()));
    }
    let noiseless = fourier_intensities(shape, &object)?;
    let observed = noiseless
        .iter()
        .map(|&i| {
            let lambda = photon_scale * i;
            if lambda <= 0.0 {
                return Ok(0.0);
            }
            let d = Poisson::new(lambda)
                .map_err(|e| Error::InvalidParameter(format!("poisson rate {lambda}: {e}")))?;
            Ok(d.sample(rng) / photon_scale)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(PhaseInstance { shape, object, noiseless, observed, support, seed, photon_scale })
}

impl PhaseInstance {
    pub fn len(&self) -> usize {
        self.shape.0 * self.shape.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `KL(I, b)` between the noiseless and observed intensities.
    pub fn noise_divergence(&self) -> Result<f64> {
        BregmanDistance::KullbackLeibler.evaluate(&self.noiseless, &self.observed)
    }

    /// Level `kappa * KL(I, b)`, the noise-relative choice of `eps`.
    pub fn epsilon_for(&self, kappa: f64) -> Result<f64> {
        Ok(kappa * self.noise_divergence()?)
    }

    pub fn object_point(&self) -> Point {
        let values: Vec<Complex64> = self.object.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Point::from_complex(&values)
    }

    pub fn support_set(&self) -> Result<SupportNonnegSet> {
        SupportNonnegSet::from_support(&self.support, ScalarKind::Complex)
    }

    pub fn magnitude_set(&self) -> Result<FourierMagnitudeSet> {
        FourierMagnitudeSet::new(self.shape, self.observed.clone())
    }

    /// `{x : KL(|F x|^2, b) <= eps}` over complex grids.
    pub fn regularized_set(&self, epsilon: f64) -> Result<RegularizedSet> {
        let map = ForwardMap::FourierIntensity(Fft2::new(self.shape.0, self.shape.1)?);
        Ok(RegularizedSet::new(
            map,
            self.observed.clone(),
            BregmanDistance::KullbackLeibler,
            epsilon,
            self.len(),
            ScalarKind::Complex,
        )?
        .assume_prox_regular())
    }

    pub fn sidecar(&self) -> Result<InstanceSidecar> {
        Ok(InstanceSidecar {
            format: "regap-phase-instance".into(),
            version: VERSION,
            n1: self.shape.0,
            n2: self.shape.1,
            seed: self.seed,
            photon_scale: self.photon_scale,
            support_size: self.support.iter().filter(|&&s| s).count(),
            total_photons: self.observed.iter().sum::<f64>() * self.photon_scale,
            kl_noiseless_observed: self.noise_divergence()?,
        })
    }

    /// Little-endian container:
    ///
    /// ```text
    /// b"RAPI" | u32 version | u32 n1 | u32 n2 | u64 seed | f64 photon_scale
    /// support bitmap, ceil(n1*n2/8) bytes, row-major, least significant bit first
    /// f64[n1*n2] object | f64[n1*n2] noiseless | f64[n1*n2] observed
    /// ```
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for n in [self.shape.0, self.shape.1] {
            let n = u32::try_from(n).map_err(|_| Error::Format("grid too large".into()))?;
            w.write_all(&n.to_le_bytes())?;
        }
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.photon_scale.to_le_bytes())?;
        let mut bits = vec![0u8; self.len().div_ceil(8)];
        for (i, _) in self.support.iter().enumerate().filter(|(_, &s)| s) {
            bits[i / 8] |= 1 << (i % 8);
        }
        w.write_all(&bits)?;
        for grid in [&self.object, &self.noiseless, &self.observed] {
            for v in grid.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a phase instance file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported instance version {version}")));
        }
        let n1 = read_u32(&mut r)? as usize;
        let n2 = read_u32(&mut r)? as usize;
        let n = n1
            .checked_mul(n2)
            .filter(|&n| n > 0 && n <= 1 << 24)
            .ok_or_else(|| Error::Format(format!("implausible grid {n1}x{n2}")))?;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let photon_scale = f64::from_le_bytes(b8);
        let mut bits = vec![0u8; n.div_ceil(8)];
        r.read_exact(&mut bits)?;
        let support = (0..n).map(|i| bits[i / 8] >> (i % 8) & 1 == 1).collect();
        let mut grids = Vec::with_capacity(3);
        for _ in 0..3 {
            let mut g = vec![0.0; n];
            for v in g.iter_mut() {
                r.read_exact(&mut b8)?;
                *v = f64::from_le_bytes(b8);
            }
            grids.push(g);
        }
        let observed = grids.pop().unwrap();
        let noiseless = grids.pop().unwrap();
        let object = grids.pop().unwrap();
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes", rest.len())));
        }
        Ok(PhaseInstance {
            shape: (n1, n2),
            object,
            noiseless,
            observed,
            support,
            seed,
            photon_scale,
        })
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
