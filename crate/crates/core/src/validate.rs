//! Self-validation battery: fading statistics against closed forms,
//! autocorrelations against their Bessel expressions, and estimator
//! self-tests. Backs the `validate` CLI subcommand.

use crate::experiment::{run_acf_experiment, AcfSettings, ExperimentConfig};
use crate::fading::{draw_realization, envelope_at, DopplerConfig, ScatteringModel};
use crate::infotheory::{
    conditional_mi_entropy_route, conditional_mi_kl_route, entropy_of, mutual_information,
    JointCounts, VarSet,
};
use crate::keygen::calibrate;
use crate::special_math::{rayleigh_cdf, rayleigh_quantile, RayleighParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// One validation check: `value` compared against `threshold` under `op`.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckReport {
    fn upper(name: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            name,
            value,
            threshold,
            pass: value < threshold,
        }
    }
}

/// Kolmogorov-Smirnov statistic of a sorted sample against a CDF.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut ks = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        ks = ks.max((f - i as f64 / n).abs());
        ks = ks.max((f - (i + 1) as f64 / n).abs());
    }
    ks
}

/// Two-sample Kolmogorov-Smirnov statistic of two sorted samples. Ties
/// advance both sides together.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j, mut ks) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        ks = ks.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    ks
}

/// Envelope amplitudes from independent realizations, deterministically
/// derived from the seed (validation stream).
pub fn draw_amplitudes(
    n_paths: usize,
    model: ScatteringModel,
    count: u64,
    seed: u64,
    workers: usize,
) -> Vec<f64> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(crate::experiment::STREAM_VALIDATE << 56 | i);
                let real = draw_realization(n_paths, model, &mut rng).expect("n >= 1");
                envelope_at(&real, &DopplerConfig { w_d: 0.0 }, 0.0).norm()
            })
            .collect()
    })
}

/// KS statistic of the simulated amplitude distribution against the
/// unit-power Rayleigh CDF.
pub fn rayleigh_ks(n_paths: usize, model: ScatteringModel, count: u64, seed: u64, workers: usize) -> f64 {
    let mut amps = draw_amplitudes(n_paths, model, count, seed, workers);
    amps.sort_by(f64::total_cmp);
    let p = RayleighParams::unit_power();
    ks_statistic(&amps, |r| rayleigh_cdf(r, p).unwrap())
}

/// Deterministic stratified sample of the unit-power Rayleigh distribution.
pub fn stratified_rayleigh(n: usize) -> Vec<f64> {
    let p = RayleighParams::unit_power();
    (0..n)
        .map(|i| rayleigh_quantile((i as f64 + 0.5) / n as f64, p).unwrap())
        .collect()
}

/// Synthetic binary-symmetric-channel triples: X uniform, Y = X flipped with
/// probability `flip`, Z an independent uniform bit.
pub fn bsc_counts(flip: f64, samples: u64, seed: u64) -> JointCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(crate::experiment::STREAM_VALIDATE << 56 | 1 << 40);
    let mut c = JointCounts::new();
    for _ in 0..samples {
        let x: u8 = rng.gen_range(0..2);
        let y = if rng.gen_bool(flip) { 1 - x } else { x };
        let z: u8 = rng.gen_range(0..2);
        c.record(x, y, z);
    }
    c
}

/// Worst disagreement between the two conditional-MI routes over random
/// count tables, together with the worst chain-rule inconsistency of the
/// mutual information.
pub fn estimator_route_divergence(tables: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(crate::experiment::STREAM_VALIDATE << 56 | 2 << 40);
    let mut worst_cmi = 0.0_f64;
    let mut worst_chain = 0.0_f64;
    for _ in 0..tables {
        let mut c = JointCounts::new();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    for _ in 0..rng.gen_range(0..100u64) {
                        c.record(x, y, z);
                    }
                }
            }
        }
        if c.total() == 0 {
            continue;
        }
        let a = conditional_mi_entropy_route(&c).unwrap();
        let b = conditional_mi_kl_route(&c).unwrap();
        worst_cmi = worst_cmi.max((a - b).abs());
        let mi = mutual_information(&c).unwrap();
        let via_h = entropy_of(&c, VarSet::X).unwrap() + entropy_of(&c, VarSet::Y).unwrap()
            - entropy_of(&c, VarSet::X | VarSet::Y).unwrap();
        worst_chain = worst_chain.max((mi - via_h).abs());
    }
    (worst_cmi, worst_chain)
}

/// Runs the full validation battery.
pub fn run_validation(seed: u64, workers: usize) -> Vec<CheckReport> {
    let mut out = Vec::new();

    out.push(CheckReport::upper(
        "rayleigh_ks_n20_clarke",
        rayleigh_ks(20, ScatteringModel::Clarke, 100_000, seed, workers),
        0.01,
    ));
    out.push(CheckReport::upper(
        "rayleigh_ks_n20_refined",
        rayleigh_ks(20, ScatteringModel::Refined, 100_000, seed + 1, workers),
        0.01,
    ));

    {
        let mut a = draw_amplitudes(8, ScatteringModel::Clarke, 100_000, seed + 2, workers);
        let mut b = draw_amplitudes(8, ScatteringModel::Refined, 100_000, seed + 3, workers);
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        out.push(CheckReport::upper(
            "model_equivalence_two_sample_ks_n8",
            two_sample_ks(&a, &b),
            0.01,
        ));
    }

    {
        let cfg = ExperimentConfig {
            n_paths: 20,
            intercepted_count: 0,
            seed,
            ..ExperimentConfig::default()
        };
        let acf = run_acf_experiment(&cfg, &AcfSettings::default(), workers).unwrap();
        out.push(CheckReport::upper(
            "acf_first_order_rmse_n20",
            acf.rmse_first_order,
            0.02,
        ));
    }
    {
        let cfg = ExperimentConfig {
            n_paths: 6,
            intercepted_count: 0,
            seed: seed + 4,
            ..ExperimentConfig::default()
        };
        let settings = AcfSettings {
            realizations: 30_000,
            ..AcfSettings::default()
        };
        let acf = run_acf_experiment(&cfg, &settings, workers).unwrap();
        out.push(CheckReport::upper(
            "acf_squared_envelope_rmse_n6",
            acf.rmse_squared_envelope,
            0.05,
        ));
        out.push(CheckReport::upper(
            "acf_squared_envelope_lag0_error_n6",
            (acf.rows[0].squared_envelope - (2.0 - 1.0 / 6.0)).abs(),
            0.02,
        ));
        out.push(CheckReport::upper(
            "acf_finite_path_term_resolved_n6",
            acf.rmse_squared_envelope,
            acf.rmse_squared_envelope_vs_infinite,
        ));
    }

    {
        let samples = stratified_rayleigh(1_000_000);
        let scheme = calibrate(&samples, 0.1).unwrap();
        out.push(CheckReport::upper(
            "calibration_entropy_offset_error",
            (scheme.entropy_s - 0.00493).abs(),
            0.002,
        ));
        let below = samples.iter().filter(|&&r| r < scheme.lower()).count() as f64;
        let above = samples.iter().filter(|&&r| r > scheme.upper()).count() as f64;
        out.push(CheckReport::upper(
            "calibration_tail_balance",
            (below - above).abs() / samples.len() as f64,
            2e-3,
        ));
    }

    {
        let counts = bsc_counts(0.11, 1_000_000, seed + 5);
        let cmi = crate::infotheory::conditional_mi(&counts).unwrap();
        let hb = -0.11f64 * 0.11f64.log2() - 0.89 * 0.89f64.log2();
        out.push(CheckReport::upper(
            "estimator_bsc_cmi_error",
            (cmi - (1.0 - hb)).abs(),
            0.01,
        ));
        let (route_div, chain_div) = estimator_route_divergence(1000, seed + 6);
        out.push(CheckReport::upper(
            "estimator_cmi_route_agreement",
            route_div,
            1e-10,
        ));
        out.push(CheckReport::upper(
            "estimator_mi_chain_consistency",
            chain_div,
            1e-10,
        ));
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_statistic_on_exact_grid_is_small() {
        let samples = stratified_rayleigh(10_000);
        let p = RayleighParams::unit_power();
        let ks = ks_statistic(&samples, |r| rayleigh_cdf(r, p).unwrap());
        assert!(ks < 1e-3, "ks = {ks}");
    }

    #[test]
    fn two_sample_ks_identical_samples() {
        let a = stratified_rayleigh(5_000);
        assert!(two_sample_ks(&a, &a) < 1e-9);
    }

    #[test]
    fn bsc_counts_are_balanced() {
        let c = bsc_counts(0.11, 100_000, 3);
        assert_eq!(c.total(), 100_000);
        let ones: u64 = (0..2)
            .flat_map(|y| (0..2).map(move |z| (y, z)))
            .map(|(y, z)| c.count(1, y, z))
            .sum();
        let frac = ones as f64 / c.total() as f64;
        assert!((frac - 0.5).abs() < 0.01);
    }
}
