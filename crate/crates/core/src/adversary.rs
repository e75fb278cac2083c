//! The colluding eavesdropper: one circular aperture pointed at each
//! intercepted propagation path, side-lobe interference, pointing error, and
//! phase-adjusted combining into an estimate of Bob's envelope.
//!
//! Each aperture's directional response is the Airy pattern
//! `2 J1(pi d sin(beta) / lambda) / (pi d sin(beta) / lambda)`, normalized to
//! 1 on boresight. The intercepted ray sits on boresight up to a Gaussian
//! pointing error; every other path reaching the aperture arrives at an
//! independent uniform off-axis angle and leaks in through the side lobes.
//! The per-aperture adjusting phase (Eve knows the detector-to-Bob distance
//! offsets and Bob's motion) is modeled as exactly restoring the intercepted
//! ray's Doppler-and-delay phase, and Eve's detectors are stationary.

use crate::fading::{add_receiver_noise, DopplerConfig, NoiseLevel, ScatteringRealization};
use crate::special_math::bessel_j1;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AdversaryError {
    #[error("aperture diameter must be positive, got {0}")]
    NonPositiveDiameter(f64),
    #[error("wavelength must be positive, got {0}")]
    NonPositiveWavelength(f64),
    #[error("pointing error std must be non-negative, got {0}")]
    NegativePointingSigma(f64),
    #[error("intercepted path index {index} out of range for {n_paths} paths")]
    IndexOutOfRange { index: usize, n_paths: usize },
    #[error("intercepted path index {0} listed twice")]
    DuplicateIndex(usize),
}

/// Geometry and imperfection parameters of Eve's apertures (all apertures
/// share one configuration).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureConfig {
    pub diameter_m: f64,
    pub wavelength_m: f64,
    pub pointing_sigma_rad: f64,
    pub eve_noise: NoiseLevel,
    pub obliquity_enabled: bool,
    /// Number of paths reaching each aperture; one is the intercepted ray,
    /// the rest are side-lobe interference.
    pub interference_paths: usize,
}

impl ApertureConfig {
    pub fn validate(&self) -> Result<(), AdversaryError> {
        if !(self.diameter_m > 0.0) {
            return Err(AdversaryError::NonPositiveDiameter(self.diameter_m));
        }
        if !(self.wavelength_m > 0.0) {
            return Err(AdversaryError::NonPositiveWavelength(self.wavelength_m));
        }
        if !(self.pointing_sigma_rad >= 0.0) {
            return Err(AdversaryError::NegativePointingSigma(
                self.pointing_sigma_rad,
            ));
        }
        Ok(())
    }

    fn side_terms(&self) -> usize {
        self.interference_paths.saturating_sub(1)
    }
}

/// Which of the realization's paths Eve's apertures have locked onto.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterceptionPlan {
    intercepted: Vec<usize>,
}

impl InterceptionPlan {
    pub fn new(intercepted: Vec<usize>, n_paths: usize) -> Result<Self, AdversaryError> {
        let mut seen = vec![false; n_paths];
        for &i in &intercepted {
            if i >= n_paths {
                return Err(AdversaryError::IndexOutOfRange {
                    index: i,
                    n_paths,
                });
            }
            if seen[i] {
                return Err(AdversaryError::DuplicateIndex(i));
            }
            seen[i] = true;
        }
        Ok(Self { intercepted })
    }

    /// The first `k` paths; with i.i.d. paths any subset of size `k` is
    /// statistically equivalent.
    pub fn first_k(k: usize, n_paths: usize) -> Result<Self, AdversaryError> {
        Self::new((0..k).collect(), n_paths)
    }

    pub fn indices(&self) -> &[usize] {
        &self.intercepted
    }

    pub fn is_empty(&self) -> bool {
        self.intercepted.is_empty()
    }
}

/// Airy-pattern amplitude gain at off-axis angle `beta`, normalized to 1 on
/// boresight; multiplied by the obliquity factor `(1 + cos beta)/2` when
/// enabled. Magnitude never exceeds 1.
pub fn aperture_gain(beta: f64, cfg: &ApertureConfig) -> f64 {
    let x = PI * cfg.diameter_m * beta.sin() / cfg.wavelength_m;
    let airy = if x.abs() < 1e-3 {
        // series limit of 2 J1(x)/x; the x^4 term keeps the branch join
        // below 1e-16
        let x2 = x * x;
        1.0 - x2 / 8.0 + x2 * x2 / 192.0
    } else {
        2.0 * bessel_j1(x).expect("finite aperture argument") / x
    };
    if cfg.obliquity_enabled {
        airy * (1.0 + beta.cos()) / 2.0
    } else {
        airy
    }
}

/// Eve's reconstruction of Bob's envelope at time `t`.
///
/// For each intercepted path `n` the aperture contributes the main term
/// `gain(eps_n) * exp(j (w_d t cos(alpha_n) + phi_n))` (pointing error
/// `eps_n ~ N(0, sigma^2)` is drawn even when sigma is zero, keeping the
/// random stream layout independent of the pointing setting) plus
/// `interference_paths - 1` side terms `gain(beta_k) * exp(j phi_k)` with
/// `beta_k`, `phi_k` i.i.d. uniform on `[-pi, pi)`. The sum is scaled by
/// `1/sqrt(N)` and Eve's receiver noise is added afterwards.
pub fn intercept_and_combine<R: Rng>(
    real: &ScatteringRealization,
    plan: &InterceptionPlan,
    cfg: &ApertureConfig,
    dop: &DopplerConfig,
    t: f64,
    rng: &mut R,
) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for &n in &plan.intercepted {
        let path = real.paths()[n];
        let z: f64 = rng.sample(StandardNormal);
        let eps = cfg.pointing_sigma_rad * z;
        let main_arg = dop.w_d * t * path.aoa.cos() + path.phase;
        sum += aperture_gain(eps, cfg) * Complex64::from_polar(1.0, main_arg);
        for _ in 0..cfg.side_terms() {
            let beta = rng.gen_range(-PI..PI);
            let phi = rng.gen_range(-PI..PI);
            sum += aperture_gain(beta, cfg) * Complex64::from_polar(1.0, phi);
        }
    }
    sum /= (real.n_paths() as f64).sqrt();
    add_receiver_noise(sum, cfg.eve_noise, rng)
}
