//! Threshold quantization of amplitude measurements into key symbols.
//!
//! Alice and Bob decide `Zero` below `m - T` and `One` above `m + T + s`,
//! dropping anything in the guard band between. The median `m` comes from a
//! calibration sample of the amplitude distribution, `T` is chosen from the
//! receiver noise level, and the entropy offset `s` balances the two kept
//! tails so that kept symbols are equiprobable:
//!
//! ```text
//! P(r < m - T) = P(r > m + T + s)
//! ```
//!
//! Eve always decides, splitting at the public median (the `s = T = 0` rule).

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KeygenError {
    #[error("calibration sample set is empty")]
    EmptySamples,
    #[error("calibration sample {0} is negative")]
    NegativeSample(f64),
    #[error("threshold {threshold} must lie below the sample median {median}")]
    ThresholdAboveMedian { threshold: f64, median: f64 },
    #[error("amplitude {0} must be non-negative and finite")]
    InvalidAmplitude(f64),
    #[error("scheme parameters invalid: m={m}, t={t}, s={s}")]
    InvalidScheme { m: f64, t: f64, s: f64 },
}

/// Calibrated quantizer parameters. All public, printed in experiment output
/// headers for reproducibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdScheme {
    pub median_m: f64,
    pub threshold_t: f64,
    pub entropy_s: f64,
}

impl ThresholdScheme {
    pub fn new(median_m: f64, threshold_t: f64, entropy_s: f64) -> Result<Self, KeygenError> {
        let ok = median_m.is_finite()
            && threshold_t.is_finite()
            && entropy_s.is_finite()
            && median_m >= 0.0
            && threshold_t >= 0.0
            && entropy_s >= 0.0
            && median_m - threshold_t >= 0.0;
        if !ok {
            return Err(KeygenError::InvalidScheme {
                m: median_m,
                t: threshold_t,
                s: entropy_s,
            });
        }
        Ok(Self {
            median_m,
            threshold_t,
            entropy_s,
        })
    }

    /// Lower decision boundary `m - T`.
    pub fn lower(&self) -> f64 {
        self.median_m - self.threshold_t
    }

    /// Upper decision boundary `m + T + s`.
    pub fn upper(&self) -> f64 {
        self.median_m + self.threshold_t + self.entropy_s
    }
}

/// Ternary decision of the legitimate parties; Eve never produces `Drop`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Zero,
    One,
    Drop,
}

impl Symbol {
    /// Bit value for kept symbols.
    pub fn bit(&self) -> Option<u8> {
        match self {
            Symbol::Zero => Some(0),
            Symbol::One => Some(1),
            Symbol::Drop => None,
        }
    }
}

/// Linear-interpolation empirical quantile of a sorted sample.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    } else {
        sorted[n - 1]
    }
}

/// Calibrates a scheme from amplitude samples of the operating distribution.
///
/// `median_m` is the empirical median; the entropy offset is the empirical
/// quantile solution of the tail-balance equation,
/// `s = q(1 - P(r < m - T)) - m - T`, clamped at zero.
pub fn calibrate(amplitude_samples: &[f64], threshold_t: f64) -> Result<ThresholdScheme, KeygenError> {
    if amplitude_samples.is_empty() {
        return Err(KeygenError::EmptySamples);
    }
    for &x in amplitude_samples {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(KeygenError::NegativeSample(x));
        }
    }
    if !(threshold_t >= 0.0) || !threshold_t.is_finite() {
        return Err(KeygenError::InvalidAmplitude(threshold_t));
    }
    let mut sorted = amplitude_samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = quantile_sorted(&sorted, 0.5);
    if threshold_t >= median {
        return Err(KeygenError::ThresholdAboveMedian {
            threshold: threshold_t,
            median,
        });
    }
    let lower = median - threshold_t;
    let below = sorted.partition_point(|&x| x < lower);
    let p_low = below as f64 / sorted.len() as f64;
    let s = (quantile_sorted(&sorted, 1.0 - p_low) - median - threshold_t).max(0.0);
    let scheme = ThresholdScheme::new(median, threshold_t, s)?;
    debug_assert!({
        let above = sorted.len() - sorted.partition_point(|&x| x <= scheme.upper());
        let balance = (p_low - above as f64 / sorted.len() as f64).abs();
        balance <= 2.0 / (sorted.len() as f64).sqrt()
    });
    Ok(scheme)
}

/// Alice/Bob decision: `Zero` below `m - T`, `One` above `m + T + s`, `Drop`
/// in between (boundary points drop).
pub fn quantize_legit(r: f64, scheme: &ThresholdScheme) -> Result<Symbol, KeygenError> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(KeygenError::InvalidAmplitude(r));
    }
    Ok(if r < scheme.lower() {
        Symbol::Zero
    } else if r > scheme.upper() {
        Symbol::One
    } else {
        Symbol::Drop
    })
}

/// Eve's always-decide rule: split at the public median, ties go to `One`.
pub fn quantize_eve(r: f64, scheme: &ThresholdScheme) -> Result<Symbol, KeygenError> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(KeygenError::InvalidAmplitude(r));
    }
    Ok(if r < scheme.median_m {
        Symbol::Zero
    } else {
        Symbol::One
    })
}
