//! Sum-of-sinusoids multipath fading: scattering realizations, the complex
//! baseband envelope shared reciprocally by Alice and Bob, receiver noise,
//! and autocorrelation estimation.
//!
//! The envelope of one realization with `N` equal-amplitude paths is
//!
//! ```text
//! g(t) = (1/sqrt(N)) * sum_n exp(j (w_d t cos(alpha_n) + phi_n))
//! ```
//!
//! with angle of arrival `alpha_n` and phase `phi_n`. Two ways of drawing the
//! angles are supported: the classic 2D isotropic model (`Clarke`), where
//! `alpha_n` and `phi_n` are i.i.d. uniform on `[-pi, pi)`, and the refined
//! wide-sense-stationary variant (`Refined`), which stratifies the angles as
//! `alpha_n = (2 pi n + theta_n) / N` with `theta_n` uniform. Both converge to
//! a Rayleigh amplitude as `N` grows; the two share the same single-time
//! amplitude distribution at any `N`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FadingError {
    #[error("a scattering realization needs at least one path")]
    ZeroPaths,
    #[error("angle {0} outside [-pi, pi)")]
    AngleOutOfRange(f64),
    #[error("series of length {len} too short for max lag {max_lag}")]
    SeriesTooShort { len: usize, max_lag: usize },
    #[error("doppler rate must be non-negative, got {0}")]
    NegativeDoppler(f64),
}

/// How the angles of arrival are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatteringModel {
    Clarke,
    Refined,
}

/// Receiver noise switch: either off, or an SNR relative to the unit-power
/// envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    Noiseless,
    SnrDb(f64),
}

impl NoiseLevel {
    /// Total complex noise power relative to unit signal power.
    pub fn noise_power(&self) -> f64 {
        match self {
            NoiseLevel::Noiseless => 0.0,
            NoiseLevel::SnrDb(s) => 10f64.powf(-s / 10.0),
        }
    }
}

/// One propagation path: angle of arrival and phase, both in `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub aoa: f64,
    pub phase: f64,
}

/// One draw of the multipath environment, shared by Alice and Bob.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringRealization {
    paths: Vec<PathComponent>,
    model: ScatteringModel,
}

impl ScatteringRealization {
    pub fn new(paths: Vec<PathComponent>, model: ScatteringModel) -> Result<Self, FadingError> {
        if paths.is_empty() {
            return Err(FadingError::ZeroPaths);
        }
        for p in &paths {
            for a in [p.aoa, p.phase] {
                if !(-PI..PI).contains(&a) {
                    return Err(FadingError::AngleOutOfRange(a));
                }
            }
        }
        Ok(Self { paths, model })
    }

    pub fn paths(&self) -> &[PathComponent] {
        &self.paths
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn model(&self) -> ScatteringModel {
        self.model
    }
}

/// Maximum Doppler rate `w_d = 2 pi v / lambda_c` in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerConfig {
    pub w_d: f64,
}

impl DopplerConfig {
    pub fn new(w_d: f64) -> Result<Self, FadingError> {
        if !(w_d >= 0.0) {
            return Err(FadingError::NegativeDoppler(w_d));
        }
        Ok(Self { w_d })
    }

    pub fn from_hz(f_hz: f64) -> Result<Self, FadingError> {
        Self::new(2.0 * PI * f_hz)
    }
}

/// In-phase/quadrature decomposition of a complex envelope sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratures {
    pub r_i: f64,
    pub r_q: f64,
    pub amplitude: f64,
    pub phase: f64,
}

fn wrap_angle(a: f64) -> f64 {
    let w = a - (2.0 * PI) * ((a + PI) / (2.0 * PI)).floor();
    // guard the half-open interval against rounding at the boundary
    if w >= PI {
        w - 2.0 * PI
    } else if w < -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Draws one scattering realization. The per-path draw order is fixed
/// (angle material first, then phase) so that parallel trial streams stay
/// reproducible.
pub fn draw_realization<R: Rng>(
    n_paths: usize,
    model: ScatteringModel,
    rng: &mut R,
) -> Result<ScatteringRealization, FadingError> {
    if n_paths == 0 {
        return Err(FadingError::ZeroPaths);
    }
    let mut paths = Vec::with_capacity(n_paths);
    match model {
        ScatteringModel::Clarke => {
            for _ in 0..n_paths {
                let aoa = rng.gen_range(-PI..PI);
                let phase = rng.gen_range(-PI..PI);
                paths.push(PathComponent { aoa, phase });
            }
        }
        ScatteringModel::Refined => {
            let n = n_paths as f64;
            for k in 1..=n_paths {
                let theta = rng.gen_range(-PI..PI);
                let aoa = wrap_angle((2.0 * PI * k as f64 + theta) / n);
                let phase = rng.gen_range(-PI..PI);
                paths.push(PathComponent { aoa, phase });
            }
        }
    }
    Ok(ScatteringRealization { paths, model })
}

/// Evaluates the normalized envelope `g(t)` of a realization.
pub fn envelope_at(real: &ScatteringRealization, dop: &DopplerConfig, t: f64) -> Complex64 {
    let norm = 1.0 / (real.paths.len() as f64).sqrt();
    let mut sum = Complex64::new(0.0, 0.0);
    for p in &real.paths {
        let arg = dop.w_d * t * p.aoa.cos() + p.phase;
        sum += Complex64::from_polar(1.0, arg);
    }
    norm * sum
}

pub fn quadratures_of(g: Complex64) -> Quadratures {
    Quadratures {
        r_i: g.re,
        r_q: g.im,
        amplitude: g.norm(),
        phase: g.im.atan2(g.re),
    }
}

/// Adds circularly-symmetric complex Gaussian receiver noise with total power
/// `10^(-snr/10)` relative to the unit-power envelope (half per quadrature).
/// The noiseless setting returns `g` unchanged and consumes no randomness.
pub fn add_receiver_noise<R: Rng>(g: Complex64, level: NoiseLevel, rng: &mut R) -> Complex64 {
    match level {
        NoiseLevel::Noiseless => g,
        NoiseLevel::SnrDb(_) => {
            let sigma = (level.noise_power() / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g + Complex64::new(sigma * re, sigma * im)
        }
    }
}

/// Per-lag autocorrelation estimates from one envelope time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcfPoint {
    /// `Re E[g(t) g*(t+tau)]`, normalized so lag 0 is exactly 1.
    pub first_order: f64,
    /// `E[|g(t)|^2 |g(t+tau)|^2]`, unnormalized.
    pub squared_envelope: f64,
}

/// Estimates first-order and squared-envelope autocorrelations of a single
/// uniformly sampled series, one entry per lag in `0..=max_lag`. Estimates
/// from many independent realizations are averaged by the caller.
pub fn empirical_acf(series: &[Complex64], max_lag: usize) -> Result<Vec<AcfPoint>, FadingError> {
    if series.len() <= max_lag {
        return Err(FadingError::SeriesTooShort {
            len: series.len(),
            max_lag,
        });
    }
    let powers: Vec<f64> = series.iter().map(|g| g.norm_sqr()).collect();
    let mean_power = powers.iter().sum::<f64>() / powers.len() as f64;
    let mut out = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let n = series.len() - lag;
        let mut first = 0.0;
        let mut sq = 0.0;
        for i in 0..n {
            first += (series[i] * series[i + lag].conj()).re;
            sq += powers[i] * powers[i + lag];
        }
        out.push(AcfPoint {
            first_order: first / (n as f64 * mean_power),
            squared_envelope: sq / n as f64,
        });
    }
    Ok(out)
}
