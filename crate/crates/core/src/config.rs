//! Flat key-value configuration: one `key = value` per line, `#` comments.
//! Every key maps 1:1 onto a run parameter; command-line overrides are just
//! extra lines applied after the file. The canonical echo emitted into output
//! headers re-parses to an equivalent configuration.
//!
//! Units are carried in the key names: angles in radians, frequencies in Hz,
//! lengths in meters.

use crate::experiment::{AcfSettings, ExperimentConfig, ExperimentError, PdfSettings};
use crate::fading::{NoiseLevel, ScatteringModel};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("line {line} is not `key = value`: `{content}`")]
    BadSyntax { line: usize, content: String },
    #[error("bad value for `{key}`: `{value}` is not {expected}")]
    TypeMismatch {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error(transparent)]
    Constraint(#[from] ExperimentError),
    #[error("no config echo block found")]
    MissingEcho,
}

/// Everything a run needs: the sweep parameters plus the pdf/ACF experiment
/// settings and an optional worker count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FullConfig {
    pub experiment: ExperimentConfig,
    pub pdf: PdfSettings,
    pub acf: AcfSettings,
    /// Not echoed into outputs: the worker count must never influence them.
    pub workers: Option<usize>,
}

fn parse_scalar<T: std::str::FromStr>(
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::TypeMismatch {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

fn parse_noise(key: &str, value: &str) -> Result<NoiseLevel, ConfigError> {
    if value.eq_ignore_ascii_case("noiseless") {
        Ok(NoiseLevel::Noiseless)
    } else {
        Ok(NoiseLevel::SnrDb(parse_scalar(
            key,
            value,
            "a number of dB or `noiseless`",
        )?))
    }
}

fn parse_model(key: &str, value: &str) -> Result<ScatteringModel, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "clarke" => Ok(ScatteringModel::Clarke),
        "refined" => Ok(ScatteringModel::Refined),
        _ => Err(ConfigError::TypeMismatch {
            key: key.to_string(),
            value: value.to_string(),
            expected: "`clarke` or `refined`",
        }),
    }
}

fn parse_list<T: std::str::FromStr>(
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_scalar(key, s, expected))
        .collect()
}

fn noise_str(level: NoiseLevel) -> String {
    match level {
        NoiseLevel::Noiseless => "noiseless".to_string(),
        NoiseLevel::SnrDb(s) => format!("{s}"),
    }
}

fn model_str(model: ScatteringModel) -> &'static str {
    match model {
        ScatteringModel::Clarke => "clarke",
        ScatteringModel::Refined => "refined",
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

struct Parser {
    cfg: FullConfig,
    interference_set: bool,
}

impl Parser {
    fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let e = &mut self.cfg.experiment;
        match key {
            "n_paths" => e.n_paths = parse_scalar(key, value, "a positive integer")?,
            "intercepted_count" => {
                e.intercepted_count = parse_scalar(key, value, "a non-negative integer")?
            }
            "model" => e.model = parse_model(key, value)?,
            "snr_db" => e.snr_db = parse_noise(key, value)?,
            "eve_snr_db" => e.eve_snr_db = parse_noise(key, value)?,
            "doppler_hz" => e.doppler_hz = parse_scalar(key, value, "a number in Hz")?,
            "wavelength_m" => e.wavelength_m = parse_scalar(key, value, "a length in meters")?,
            "pointing_sigma_rad" => {
                e.pointing_sigma_rad = parse_scalar(key, value, "an angle in radians")?
            }
            "threshold_multiple" => {
                e.threshold_multiple = parse_scalar(key, value, "a non-negative number")?
            }
            "diameters_m" => {
                e.diameters_m = parse_list(key, value, "a comma-separated list of meters")?
            }
            "trials" => e.trials = parse_scalar(key, value, "a positive integer")?,
            "calibration_samples" => {
                e.calibration_samples = parse_scalar(key, value, "a positive integer")?
            }
            "seed" => e.seed = parse_scalar(key, value, "a 64-bit unsigned integer")?,
            "obliquity_enabled" => {
                e.obliquity_enabled = parse_scalar(key, value, "`true` or `false`")?
            }
            "interference_paths" => {
                e.interference_paths = parse_scalar(key, value, "a non-negative integer")?;
                self.interference_set = true;
            }
            "workers" => self.cfg.workers = Some(parse_scalar(key, value, "a positive integer")?),
            "pdf_n_paths_list" => {
                self.cfg.pdf.n_paths_list =
                    parse_list(key, value, "a comma-separated list of path counts")?
            }
            "pdf_missing_for_eve" => {
                self.cfg.pdf.missing_for_eve = parse_scalar(key, value, "a non-negative integer")?
            }
            "pdf_samples" => self.cfg.pdf.samples = parse_scalar(key, value, "a positive integer")?,
            "pdf_bins" => self.cfg.pdf.bins = parse_scalar(key, value, "an integer >= 2")?,
            "pdf_range_hi" => {
                self.cfg.pdf.range_hi = parse_scalar(key, value, "a positive number")?
            }
            "pdf_smoothing" => {
                self.cfg.pdf.smoothing = parse_scalar(key, value, "`true` or `false`")?
            }
            "acf_max_lag_rad" => {
                self.cfg.acf.max_lag_rad = parse_scalar(key, value, "a positive number")?
            }
            "acf_lag_step_rad" => {
                self.cfg.acf.lag_step_rad = parse_scalar(key, value, "a positive number")?
            }
            "acf_realizations" => {
                self.cfg.acf.realizations = parse_scalar(key, value, "a positive integer")?
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }
}

/// Parses config text; later assignments win, so overrides are just appended
/// lines. The result passes the experiment constraint checks.
pub fn parse_str(text: &str) -> Result<FullConfig, ConfigError> {
    parse_lines(text.lines())
}

/// Parses a config followed by override lines (`key = value` or `key=value`).
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<FullConfig, ConfigError> {
    parse_lines(text.lines().chain(overrides.iter().map(String::as_str)))
}

fn parse_lines<'a>(lines: impl Iterator<Item = &'a str>) -> Result<FullConfig, ConfigError> {
    let mut p = Parser {
        cfg: FullConfig::default(),
        interference_set: false,
    };
    for (idx, raw) in lines.enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::BadSyntax {
            line: idx + 1,
            content: line.to_string(),
        })?;
        p.apply(key.trim(), value.trim())?;
    }
    if !p.interference_set {
        // paths per aperture follow the channel path count unless pinned
        p.cfg.experiment.interference_paths = p.cfg.experiment.n_paths;
    }
    p.cfg.experiment.validate()?;
    Ok(p.cfg)
}

/// Canonical `key = value` serialization. Excludes `workers`: outputs must be
/// identical for any worker count.
pub fn canonical_echo(cfg: &FullConfig) -> String {
    let e = &cfg.experiment;
    let mut s = String::new();
    let _ = writeln!(s, "n_paths = {}", e.n_paths);
    let _ = writeln!(s, "intercepted_count = {}", e.intercepted_count);
    let _ = writeln!(s, "model = {}", model_str(e.model));
    let _ = writeln!(s, "snr_db = {}", noise_str(e.snr_db));
    let _ = writeln!(s, "eve_snr_db = {}", noise_str(e.eve_snr_db));
    let _ = writeln!(s, "doppler_hz = {}", e.doppler_hz);
    let _ = writeln!(s, "wavelength_m = {}", e.wavelength_m);
    let _ = writeln!(s, "pointing_sigma_rad = {}", e.pointing_sigma_rad);
    let _ = writeln!(s, "threshold_multiple = {}", e.threshold_multiple);
    let _ = writeln!(s, "diameters_m = {}", join(&e.diameters_m));
    let _ = writeln!(s, "trials = {}", e.trials);
    let _ = writeln!(s, "calibration_samples = {}", e.calibration_samples);
    let _ = writeln!(s, "seed = {}", e.seed);
    let _ = writeln!(s, "obliquity_enabled = {}", e.obliquity_enabled);
    let _ = writeln!(s, "interference_paths = {}", e.interference_paths);
    let _ = writeln!(s, "pdf_n_paths_list = {}", join(&cfg.pdf.n_paths_list));
    let _ = writeln!(s, "pdf_missing_for_eve = {}", cfg.pdf.missing_for_eve);
    let _ = writeln!(s, "pdf_samples = {}", cfg.pdf.samples);
    let _ = writeln!(s, "pdf_bins = {}", cfg.pdf.bins);
    let _ = writeln!(s, "pdf_range_hi = {}", cfg.pdf.range_hi);
    let _ = writeln!(s, "pdf_smoothing = {}", cfg.pdf.smoothing);
    let _ = writeln!(s, "acf_max_lag_rad = {}", cfg.acf.max_lag_rad);
    let _ = writeln!(s, "acf_lag_step_rad = {}", cfg.acf.lag_step_rad);
    let _ = writeln!(s, "acf_realizations = {}", cfg.acf.realizations);
    s
}

pub const ECHO_BEGIN: &str = "# config-begin";
pub const ECHO_END: &str = "# config-end";

/// Recovers the configuration from the commented echo block of an output
/// file.
pub fn parse_echo_from_csv(text: &str) -> Result<FullConfig, ConfigError> {
    let mut inside = false;
    let mut block = String::new();
    for line in text.lines() {
        if line.trim() == ECHO_BEGIN {
            inside = true;
            continue;
        }
        if line.trim() == ECHO_END {
            return parse_str(&block);
        }
        if inside {
            block.push_str(line.strip_prefix("# ").unwrap_or(line));
            block.push('\n');
        }
    }
    Err(ConfigError::MissingEcho)
}
