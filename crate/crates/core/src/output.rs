//! Plot-ready CSV output: metadata as `#` comment lines (build version,
//! seed, calibrated scheme, full config echo), then a header row and data
//! rows with floats at 6 significant digits.

use crate::config::{canonical_echo, FullConfig, ECHO_BEGIN, ECHO_END};
use crate::experiment::{AcfResult, PdfResult, SweepResult};
use crate::keygen::ThresholdScheme;
use std::io::{self, Write};

/// Formats a float with 6 significant digits (`%.6g`-style).
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        format!("{x:.5e}")
    } else {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

fn write_meta(
    w: &mut impl Write,
    kind: &str,
    cfg: &FullConfig,
    scheme: Option<&ThresholdScheme>,
) -> io::Result<()> {
    writeln!(w, "# fadekey {kind} output")?;
    writeln!(w, "# version = {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# seed = {}", cfg.experiment.seed)?;
    if let Some(s) = scheme {
        writeln!(
            w,
            "# scheme: median_m = {} threshold_t = {} entropy_s = {}",
            s.median_m, s.threshold_t, s.entropy_s
        )?;
    }
    writeln!(w, "{ECHO_BEGIN}")?;
    for line in canonical_echo(cfg).lines() {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "{ECHO_END}")?;
    Ok(())
}

pub fn write_sweep_csv(
    w: &mut impl Write,
    cfg: &FullConfig,
    result: &SweepResult,
) -> io::Result<()> {
    write_meta(w, "sweep", cfg, Some(&result.scheme))?;
    writeln!(
        w,
        "diameter_m,cmi_bits,cmi_stderr,mi_bits,mi_stderr,key_rate_bound_bits,kept_fraction,ab_mismatch,eve_bob_agreement,trials_kept"
    )?;
    for r in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            sig6(r.diameter_m),
            sig6(r.cmi_bits),
            sig6(r.cmi_stderr),
            sig6(r.mi_bits),
            sig6(r.mi_stderr),
            sig6(r.key_rate_bound_bits),
            sig6(r.kept_fraction),
            sig6(r.ab_mismatch),
            sig6(r.eve_bob_agreement),
            r.trials_kept
        )?;
    }
    Ok(())
}

pub fn write_pdf_csv(w: &mut impl Write, cfg: &FullConfig, result: &PdfResult) -> io::Result<()> {
    write_meta(w, "pdf", cfg, None)?;
    let mut header = String::from("bin_center,rayleigh");
    for c in &result.curves {
        header.push(',');
        header.push_str(&c.label);
    }
    writeln!(w, "{header}")?;
    let centers = result.rayleigh.bin_centers();
    for (i, center) in centers.iter().enumerate() {
        let mut line = format!("{},{}", sig6(*center), sig6(result.rayleigh.masses()[i]));
        for c in &result.curves {
            line.push(',');
            line.push_str(&sig6(c.histogram.masses()[i]));
        }
        writeln!(w, "{line}")?;
    }
    for c in &result.curves {
        writeln!(w, "# kl_bits {} = {}", c.label, sig6(c.kl_vs_rayleigh_bits))?;
    }
    Ok(())
}

pub fn write_acf_csv(w: &mut impl Write, cfg: &FullConfig, result: &AcfResult) -> io::Result<()> {
    write_meta(w, "acf", cfg, None)?;
    writeln!(
        w,
        "lag_rad,first_order,first_order_theory,squared_envelope,squared_envelope_theory"
    )?;
    for r in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            sig6(r.lag_rad),
            sig6(r.first_order),
            sig6(r.first_order_theory),
            sig6(r.squared_envelope),
            sig6(r.squared_envelope_theory)
        )?;
    }
    writeln!(w, "# rmse_first_order = {}", sig6(result.rmse_first_order))?;
    writeln!(
        w,
        "# rmse_squared_envelope = {}",
        sig6(result.rmse_squared_envelope)
    )?;
    writeln!(
        w,
        "# rmse_squared_envelope_vs_infinite = {}",
        sig6(result.rmse_squared_envelope_vs_infinite)
    )?;
    Ok(())
}
