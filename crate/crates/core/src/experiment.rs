//! Calibrated Monte Carlo experiments: the aperture-diameter sweep of the
//! key-rate bound, the low-path-count amplitude pdf comparison, and the
//! autocorrelation validation.
//!
//! Determinism contract: every random draw comes from a ChaCha stream derived
//! from `(seed, experiment tag, grid point, item index)`, trials accumulate
//! into integer count tables merged by cellwise addition, and floating-point
//! reductions either run on merged integer counts or in a fixed order. A
//! sweep therefore produces bit-identical output for any worker count.

use crate::adversary::{intercept_and_combine, ApertureConfig, InterceptionPlan};
use crate::fading::{
    add_receiver_noise, draw_realization, empirical_acf, envelope_at, DopplerConfig, NoiseLevel,
    ScatteringModel,
};
use crate::infotheory::{
    conditional_mi, empirical_pdf, kl_divergence, mutual_information, Histogram, InfoError,
    JointCounts,
};
use crate::keygen::{calibrate, quantize_eve, quantize_legit, KeygenError, Symbol, ThresholdScheme};
use crate::special_math::{bessel_j0, rayleigh_cdf, RayleighParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Number of batches used for standard-error estimation by batch splitting.
const BATCHES: usize = 20;
/// Trailing samples appended to each autocorrelation series so every lag
/// averages over at least this many products per realization.
const ACF_EXTRA_SAMPLES: usize = 150;

const STREAM_CALIBRATION: u64 = 1;
const STREAM_SWEEP: u64 = 2;
const STREAM_PDF: u64 = 3;
const STREAM_ACF: u64 = 4;
pub(crate) const STREAM_VALIDATE: u64 = 5;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid value for `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: String },
    #[error("calibration failed: {0}")]
    Calibration(#[from] KeygenError),
    #[error("estimation failed: {0}")]
    Estimation(#[from] InfoError),
    #[error("no kept trials at diameter {diameter_m} m; raise `trials` or lower `threshold_multiple`")]
    NoKeptTrials { diameter_m: f64 },
    #[error("worker pool: {0}")]
    Pool(String),
}

fn bad(key: &'static str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::InvalidConfig {
        key,
        reason: reason.into(),
    }
}

/// Full parameter set of one sweep run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_paths: usize,
    pub intercepted_count: usize,
    pub model: ScatteringModel,
    /// Alice's and Bob's receiver SNR.
    pub snr_db: NoiseLevel,
    /// Eve's receiver SNR.
    pub eve_snr_db: NoiseLevel,
    pub doppler_hz: f64,
    pub wavelength_m: f64,
    pub pointing_sigma_rad: f64,
    /// Guard threshold in units of the amplitude noise std (per-quadrature).
    pub threshold_multiple: f64,
    pub diameters_m: Vec<f64>,
    pub trials: u64,
    pub calibration_samples: u64,
    pub seed: u64,
    pub obliquity_enabled: bool,
    /// Paths reaching each of Eve's apertures (1 intercepted + the rest
    /// side-lobe interference).
    pub interference_paths: usize,
}

/// 21 logarithmic points from 0.1 m to 10 m.
pub fn default_diameter_grid() -> Vec<f64> {
    (0..21).map(|i| 0.1 * 10f64.powf(i as f64 / 10.0)).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_paths: 6,
            intercepted_count: 6,
            model: ScatteringModel::Clarke,
            snr_db: NoiseLevel::SnrDb(17.0),
            eve_snr_db: NoiseLevel::SnrDb(17.0),
            doppler_hz: 10.0,
            wavelength_m: 0.1,
            pointing_sigma_rad: 0.002,
            threshold_multiple: 3.0,
            diameters_m: default_diameter_grid(),
            trials: 100_000,
            calibration_samples: 1_000_000,
            seed: 1,
            obliquity_enabled: false,
            interference_paths: 6,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_paths == 0 {
            return Err(bad("n_paths", "must be at least 1"));
        }
        if self.intercepted_count > self.n_paths {
            return Err(bad(
                "intercepted_count",
                format!(
                    "{} exceeds n_paths = {}",
                    self.intercepted_count, self.n_paths
                ),
            ));
        }
        if self.trials == 0 {
            return Err(bad("trials", "must be at least 1"));
        }
        if self.trials >= 1 << 40 {
            return Err(bad("trials", "must fit the per-trial stream space (< 2^40)"));
        }
        if self.calibration_samples == 0 {
            return Err(bad("calibration_samples", "must be at least 1"));
        }
        if self.calibration_samples >= 1 << 40 {
            return Err(bad("calibration_samples", "must be < 2^40"));
        }
        if self.diameters_m.is_empty() {
            return Err(bad("diameters_m", "needs at least one diameter"));
        }
        if self.diameters_m.len() > u16::MAX as usize {
            return Err(bad("diameters_m", "too many grid points (max 65535)"));
        }
        if let Some(d) = self
            .diameters_m
            .iter()
            .find(|d| !d.is_finite() || **d <= 0.0)
        {
            return Err(bad("diameters_m", format!("diameter {d} not positive")));
        }
        if !(self.wavelength_m > 0.0) || !self.wavelength_m.is_finite() {
            return Err(bad("wavelength_m", "must be positive"));
        }
        if !(self.pointing_sigma_rad >= 0.0) || !self.pointing_sigma_rad.is_finite() {
            return Err(bad("pointing_sigma_rad", "must be non-negative"));
        }
        if !(self.threshold_multiple >= 0.0) || !self.threshold_multiple.is_finite() {
            return Err(bad("threshold_multiple", "must be non-negative"));
        }
        if !(self.doppler_hz >= 0.0) || !self.doppler_hz.is_finite() {
            return Err(bad("doppler_hz", "must be non-negative"));
        }
        for (key, level) in [("snr_db", self.snr_db), ("eve_snr_db", self.eve_snr_db)] {
            if let NoiseLevel::SnrDb(s) = level {
                if !s.is_finite() {
                    return Err(bad(key, "must be finite or `noiseless`"));
                }
            }
        }
        Ok(())
    }

    fn aperture(&self, diameter_m: f64) -> ApertureConfig {
        ApertureConfig {
            diameter_m,
            wavelength_m: self.wavelength_m,
            pointing_sigma_rad: self.pointing_sigma_rad,
            eve_noise: self.eve_snr_db,
            obliquity_enabled: self.obliquity_enabled,
            interference_paths: self.interference_paths,
        }
    }

    /// Guard threshold `T`: `threshold_multiple` times the per-quadrature
    /// noise std `sqrt(noise power / 2)` of the legitimate receivers.
    pub fn guard_threshold(&self) -> f64 {
        self.threshold_multiple * (self.snr_db.noise_power() / 2.0).sqrt()
    }
}

/// One Monte Carlo trial's symbols; `kept` iff neither Alice nor Bob dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub alice: Symbol,
    pub bob: Symbol,
    pub eve: Symbol,
    pub kept: bool,
}

/// One diameter grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub diameter_m: f64,
    pub cmi_bits: f64,
    pub cmi_stderr: f64,
    pub mi_bits: f64,
    pub mi_stderr: f64,
    pub key_rate_bound_bits: f64,
    pub kept_fraction: f64,
    pub ab_mismatch: f64,
    pub eve_bob_agreement: f64,
    pub trials_kept: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub scheme: ThresholdScheme,
    pub rows: Vec<SweepRow>,
}

/// Derives the ChaCha stream for one work item. Streams differ in the cipher
/// stream id, never the seed, so any (tag, point, index) triple is an
/// independent generator.
fn stream_rng(seed: u64, tag: u64, point: u64, index: u64) -> ChaCha8Rng {
    debug_assert!(tag <= 0xff && point <= 0xffff && index < (1 << 40));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag << 56 | point << 40 | index);
    rng
}

fn make_pool(workers: usize) -> Result<rayon::ThreadPool, ExperimentError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))
}

/// Draws one calibration amplitude: `|g + noise|` under the configured path
/// count, model, and legitimate-receiver SNR.
fn calibration_amplitude(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> f64 {
    let real = draw_realization(cfg.n_paths, cfg.model, rng).expect("validated n_paths");
    let g = envelope_at(&real, &DopplerConfig { w_d: 0.0 }, 0.0);
    add_receiver_noise(g, cfg.snr_db, rng).norm()
}

/// Calibrates the threshold scheme for a configuration by sampling the
/// operating amplitude distribution.
pub fn calibrate_scheme(cfg: &ExperimentConfig, workers: usize) -> Result<ThresholdScheme, ExperimentError> {
    cfg.validate()?;
    let pool = make_pool(workers)?;
    let samples: Vec<f64> = pool.install(|| {
        (0..cfg.calibration_samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(cfg.seed, STREAM_CALIBRATION, 0, i);
                calibration_amplitude(cfg, &mut rng)
            })
            .collect()
    });
    Ok(calibrate(&samples, cfg.guard_threshold())?)
}

/// The empirical CDF of the calibration amplitude distribution, for oracle
/// checks of keep rates.
pub fn calibration_cdf_at(cfg: &ExperimentConfig, workers: usize, r: f64) -> Result<f64, ExperimentError> {
    cfg.validate()?;
    let pool = make_pool(workers)?;
    let below: u64 = pool.install(|| {
        (0..cfg.calibration_samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(cfg.seed, STREAM_CALIBRATION, 0, i);
                u64::from(calibration_amplitude(cfg, &mut rng) <= r)
            })
            .sum()
    });
    Ok(below as f64 / cfg.calibration_samples as f64)
}

fn trial_with(
    cfg: &ExperimentConfig,
    plan: &InterceptionPlan,
    aperture: &ApertureConfig,
    dop: &DopplerConfig,
    scheme: &ThresholdScheme,
    rng: &mut ChaCha8Rng,
) -> TrialRecord {
    let real = draw_realization(cfg.n_paths, cfg.model, rng).expect("validated n_paths");
    let g = envelope_at(&real, dop, 0.0);
    let alice_amp = add_receiver_noise(g, cfg.snr_db, rng).norm();
    let bob_amp = add_receiver_noise(g, cfg.snr_db, rng).norm();
    let eve_amp = intercept_and_combine(&real, plan, aperture, dop, 0.0, rng).norm();
    let alice = quantize_legit(alice_amp, scheme).expect("amplitude is non-negative");
    let bob = quantize_legit(bob_amp, scheme).expect("amplitude is non-negative");
    let eve = quantize_eve(eve_amp, scheme).expect("amplitude is non-negative");
    TrialRecord {
        alice,
        bob,
        eve,
        kept: alice != Symbol::Drop && bob != Symbol::Drop,
    }
}

/// Runs a single trial at the given diameter under an already calibrated
/// scheme.
pub fn run_trial(
    cfg: &ExperimentConfig,
    diameter_m: f64,
    scheme: &ThresholdScheme,
    rng: &mut ChaCha8Rng,
) -> Result<TrialRecord, ExperimentError> {
    cfg.validate()?;
    let plan = InterceptionPlan::first_k(cfg.intercepted_count, cfg.n_paths)
        .expect("validated intercepted_count");
    let aperture = cfg.aperture(diameter_m);
    let dop = DopplerConfig::from_hz(cfg.doppler_hz).expect("validated doppler");
    Ok(trial_with(cfg, &plan, &aperture, &dop, scheme, rng))
}

fn merge_batches(
    mut a: [JointCounts; BATCHES],
    b: [JointCounts; BATCHES],
) -> [JointCounts; BATCHES] {
    for (x, y) in a.iter_mut().zip(&b) {
        x.merge(y);
    }
    a
}

fn batch_stderr(tables: &[JointCounts; BATCHES], f: impl Fn(&JointCounts) -> f64) -> f64 {
    let vals: Vec<f64> = tables
        .iter()
        .filter(|t| t.total() > 0)
        .map(|t| f(t))
        .collect();
    if vals.len() < 2 {
        return 0.0;
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

fn summarize_row(
    cfg: &ExperimentConfig,
    diameter_m: f64,
    tables: &[JointCounts; BATCHES],
) -> Result<SweepRow, ExperimentError> {
    let mut full = JointCounts::new();
    for t in tables {
        full.merge(t);
    }
    if full.total() == 0 {
        return Err(ExperimentError::NoKeptTrials { diameter_m });
    }
    let kept = full.total();
    let cmi_bits = conditional_mi(&full)?;
    let mi_bits = mutual_information(&full)?;
    let cmi_stderr = batch_stderr(tables, |t| conditional_mi(t).unwrap_or(0.0));
    let mi_stderr = batch_stderr(tables, |t| mutual_information(t).unwrap_or(0.0));
    let mismatch: u64 = (0..2)
        .flat_map(|z| [(0, 1, z), (1, 0, z)])
        .map(|(x, y, z)| full.count(x, y, z))
        .sum();
    let agree: u64 = (0..2)
        .flat_map(|x| [(x, 0, 0), (x, 1, 1)])
        .map(|(x, y, z)| full.count(x, y, z))
        .sum();
    Ok(SweepRow {
        diameter_m,
        cmi_bits,
        cmi_stderr,
        mi_bits,
        mi_stderr,
        key_rate_bound_bits: cmi_bits.min(mi_bits),
        kept_fraction: kept as f64 / cfg.trials as f64,
        ab_mismatch: mismatch as f64 / kept as f64,
        eve_bob_agreement: agree as f64 / kept as f64,
        trials_kept: kept,
    })
}

/// Calibrates, then estimates the key-rate bound at every diameter with
/// exactly `cfg.trials` trials per grid point.
pub fn run_sweep(cfg: &ExperimentConfig, workers: usize) -> Result<SweepResult, ExperimentError> {
    cfg.validate()?;
    let scheme = calibrate_scheme(cfg, workers)?;
    let pool = make_pool(workers)?;
    let plan = InterceptionPlan::first_k(cfg.intercepted_count, cfg.n_paths)
        .expect("validated intercepted_count");
    let dop = DopplerConfig::from_hz(cfg.doppler_hz).expect("validated doppler");
    let mut rows = Vec::with_capacity(cfg.diameters_m.len());
    for (point, &diameter_m) in cfg.diameters_m.iter().enumerate() {
        let aperture = cfg.aperture(diameter_m);
        let tables = pool.install(|| {
            (0..cfg.trials)
                .into_par_iter()
                .fold(
                    || [JointCounts::new(); BATCHES],
                    |mut acc, i| {
                        let mut rng = stream_rng(cfg.seed, STREAM_SWEEP, point as u64, i);
                        let rec = trial_with(cfg, &plan, &aperture, &dop, &scheme, &mut rng);
                        if rec.kept {
                            let (x, y, z) = (
                                rec.alice.bit().expect("kept"),
                                rec.bob.bit().expect("kept"),
                                rec.eve.bit().expect("eve always decides"),
                            );
                            acc[(i % BATCHES as u64) as usize].record(x, y, z);
                        }
                        acc
                    },
                )
                .reduce(|| [JointCounts::new(); BATCHES], merge_batches)
        });
        rows.push(summarize_row(cfg, diameter_m, &tables)?);
    }
    Ok(SweepResult { scheme, rows })
}

/// Settings of the amplitude-pdf experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfSettings {
    /// Path counts to draw empirical amplitude pdfs for; the interception
    /// curve removes `missing_for_eve` paths from the first entry.
    pub n_paths_list: Vec<usize>,
    pub missing_for_eve: usize,
    pub samples: u64,
    pub bins: usize,
    pub range_hi: f64,
    /// Apply add-half smoothing to the empirical histograms before the KL
    /// readouts.
    pub smoothing: bool,
}

impl Default for PdfSettings {
    fn default() -> Self {
        Self {
            n_paths_list: vec![6],
            missing_for_eve: 1,
            samples: 1_000_000,
            bins: 100,
            range_hi: 3.0,
            smoothing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdfCurve {
    pub label: String,
    pub histogram: Histogram,
    pub kl_vs_rayleigh_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdfResult {
    /// Analytic unit-power Rayleigh bin masses (tail folded into the last
    /// bin), the infinite-path reference curve.
    pub rayleigh: Histogram,
    pub curves: Vec<PdfCurve>,
}

/// Analytic Rayleigh histogram on `[0, hi]` with out-of-range mass folded
/// into the last bin, mirroring how `empirical_pdf` clamps samples.
pub fn rayleigh_histogram(bins: usize, hi: f64) -> Result<Histogram, InfoError> {
    if bins < 2 || !(hi > 0.0) {
        return Err(InfoError::BadHistogramSpec(format!(
            "bins {bins}, hi {hi}"
        )));
    }
    let p = RayleighParams::unit_power();
    // edge expression mirrors empirical_pdf bit for bit so the histograms
    // stay comparable
    let width = hi / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
    let mut masses: Vec<f64> = edges
        .windows(2)
        .map(|w| rayleigh_cdf(w[1], p).unwrap() - rayleigh_cdf(w[0], p).unwrap())
        .collect();
    masses[bins - 1] += 1.0 - rayleigh_cdf(*edges.last().unwrap(), p).unwrap();
    Histogram::new(edges, masses)
}

/// Draws the empirical amplitude pdfs for each path count plus the
/// partial-interception curve, with KL readouts against the analytic
/// Rayleigh reference.
pub fn run_pdf_experiment(
    settings: &PdfSettings,
    model: ScatteringModel,
    seed: u64,
    workers: usize,
) -> Result<PdfResult, ExperimentError> {
    if settings.n_paths_list.is_empty() {
        return Err(bad("pdf_n_paths_list", "needs at least one path count"));
    }
    if settings.n_paths_list.iter().any(|&n| n == 0) {
        return Err(bad("pdf_n_paths_list", "path counts must be at least 1"));
    }
    if settings.samples < 10_000 {
        return Err(bad("pdf_samples", "needs at least 10000 samples"));
    }
    if settings.samples >= 1 << 40 {
        return Err(bad("pdf_samples", "must be < 2^40"));
    }
    if settings.bins < 2 {
        return Err(bad("pdf_bins", "needs at least 2 bins"));
    }
    if !(settings.range_hi > 0.0) || !settings.range_hi.is_finite() {
        return Err(bad("pdf_range_hi", "must be positive"));
    }
    let base_paths = settings.n_paths_list[0];
    if settings.missing_for_eve >= base_paths {
        return Err(bad(
            "pdf_missing_for_eve",
            format!("must leave at least one of the {base_paths} paths"),
        ));
    }
    let rayleigh = rayleigh_histogram(settings.bins, settings.range_hi)?;
    let pool = make_pool(workers)?;

    let mut specs: Vec<(String, usize, usize)> = settings
        .n_paths_list
        .iter()
        .map(|&n| (format!("paths_{n}"), n, n))
        .collect();
    let kept_paths = base_paths - settings.missing_for_eve;
    specs.push((
        format!("intercept_{kept_paths}of{base_paths}"),
        base_paths,
        kept_paths,
    ));

    let mut curves = Vec::with_capacity(specs.len());
    for (curve_idx, (label, n_paths, summed)) in specs.into_iter().enumerate() {
        let amplitudes: Vec<f64> = pool.install(|| {
            (0..settings.samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(seed, STREAM_PDF, curve_idx as u64, i);
                    let real = draw_realization(n_paths, model, &mut rng).expect("n >= 1");
                    // perfect interception of a subset: the same normalized
                    // sum restricted to the paths Eve holds
                    let partial: num_complex::Complex64 = real.paths()[..summed]
                        .iter()
                        .map(|p| num_complex::Complex64::from_polar(1.0, p.phase))
                        .sum();
                    (partial / (n_paths as f64).sqrt()).norm()
                })
                .collect()
        });
        let hist = empirical_pdf(&amplitudes, settings.bins, (0.0, settings.range_hi))?;
        let readout = if settings.smoothing {
            hist.add_half_smoothed(settings.samples)
        } else {
            hist.clone()
        };
        let kl = kl_divergence(&readout, &rayleigh)?;
        curves.push(PdfCurve {
            label,
            histogram: hist,
            kl_vs_rayleigh_bits: kl,
        });
    }
    Ok(PdfResult { rayleigh, curves })
}

/// Settings of the autocorrelation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfSettings {
    pub max_lag_rad: f64,
    pub lag_step_rad: f64,
    pub realizations: u64,
}

impl Default for AcfSettings {
    fn default() -> Self {
        Self {
            max_lag_rad: 10.0,
            lag_step_rad: 0.1,
            realizations: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcfRow {
    /// Lag in Doppler phase units `w_d * tau`.
    pub lag_rad: f64,
    pub first_order: f64,
    pub first_order_theory: f64,
    pub squared_envelope: f64,
    pub squared_envelope_theory: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcfResult {
    pub rows: Vec<AcfRow>,
    pub rmse_first_order: f64,
    pub rmse_squared_envelope: f64,
    /// Residual of the same empirical curve against the infinite-path
    /// formula `1 + J0^2`, which lacks the `-J0^2/N` correction.
    pub rmse_squared_envelope_vs_infinite: f64,
}

/// Estimates the envelope autocorrelations on a uniform `w_d tau` grid by
/// evolving each realization in time and averaging across realizations.
pub fn run_acf_experiment(
    cfg: &ExperimentConfig,
    settings: &AcfSettings,
    workers: usize,
) -> Result<AcfResult, ExperimentError> {
    cfg.validate()?;
    if settings.realizations < 1_000 {
        return Err(bad("acf_realizations", "needs at least 1000 realizations"));
    }
    if settings.realizations >= 1 << 40 {
        return Err(bad("acf_realizations", "must be < 2^40"));
    }
    if !(settings.lag_step_rad > 0.0) {
        return Err(bad("acf_lag_step_rad", "must be positive"));
    }
    if settings.max_lag_rad < settings.lag_step_rad {
        return Err(bad("acf_max_lag_rad", "must be at least one lag step"));
    }
    if !(cfg.doppler_hz > 0.0) {
        return Err(bad("doppler_hz", "must be positive for the ACF experiment"));
    }
    let dop = DopplerConfig::from_hz(cfg.doppler_hz).expect("validated doppler");
    let n_lags = (settings.max_lag_rad / settings.lag_step_rad).round() as usize;
    let series_len = n_lags + 1 + ACF_EXTRA_SAMPLES;
    let dt = settings.lag_step_rad / dop.w_d;
    let pool = make_pool(workers)?;

    // Fixed-size chunks keep the cross-realization reduction in a
    // deterministic order regardless of worker count.
    const CHUNK: u64 = 256;
    let n_chunks = settings.realizations.div_ceil(CHUNK);
    let partials: Vec<(Vec<f64>, Vec<f64>)> = pool.install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(settings.realizations);
                let mut first = vec![0.0; n_lags + 1];
                let mut sq = vec![0.0; n_lags + 1];
                for r in lo..hi {
                    let mut rng = stream_rng(cfg.seed, STREAM_ACF, 0, r);
                    let real =
                        draw_realization(cfg.n_paths, cfg.model, &mut rng).expect("n >= 1");
                    let series: Vec<num_complex::Complex64> = (0..series_len)
                        .map(|i| envelope_at(&real, &dop, i as f64 * dt))
                        .collect();
                    let acf = empirical_acf(&series, n_lags).expect("series long enough");
                    for (l, pt) in acf.iter().enumerate() {
                        first[l] += pt.first_order;
                        sq[l] += pt.squared_envelope;
                    }
                }
                (first, sq)
            })
            .collect()
    });
    let mut first = vec![0.0; n_lags + 1];
    let mut sq = vec![0.0; n_lags + 1];
    for (f, s) in &partials {
        for l in 0..=n_lags {
            first[l] += f[l];
            sq[l] += s[l];
        }
    }
    let n = settings.realizations as f64;
    let inv_n_correction = 1.0 - 1.0 / cfg.n_paths as f64;
    let mut rows = Vec::with_capacity(n_lags + 1);
    let (mut se_first, mut se_sq, mut se_sq_inf) = (0.0, 0.0, 0.0);
    for l in 0..=n_lags {
        let lag_rad = l as f64 * settings.lag_step_rad;
        let j0 = bessel_j0(lag_rad).expect("finite lag");
        let row = AcfRow {
            lag_rad,
            first_order: first[l] / n,
            first_order_theory: j0,
            squared_envelope: sq[l] / n,
            squared_envelope_theory: 1.0 + j0 * j0 * inv_n_correction,
        };
        se_first += (row.first_order - row.first_order_theory).powi(2);
        se_sq += (row.squared_envelope - row.squared_envelope_theory).powi(2);
        se_sq_inf += (row.squared_envelope - (1.0 + j0 * j0)).powi(2);
        rows.push(row);
    }
    let m = (n_lags + 1) as f64;
    Ok(AcfResult {
        rows,
        rmse_first_order: (se_first / m).sqrt(),
        rmse_squared_envelope: (se_sq / m).sqrt(),
        rmse_squared_envelope_vs_infinite: (se_sq_inf / m).sqrt(),
    })
}
