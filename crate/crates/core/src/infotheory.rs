//! Plug-in discrete estimators: entropies, mutual information, conditional
//! mutual information, and Kullback-Leibler divergence, all in bits.
//!
//! The conditional mutual information is evaluated through two algebraically
//! equivalent routes that must agree to 1e-10:
//!
//! ```text
//! I(X;Y|Z) = H(X,Z) + H(Y,Z) - H(Z) - H(X,Y,Z)
//!          = D( p(x,y,z) || p(x,z) p(y,z) / p(z) )
//! ```
//!
//! Estimation is maximum-likelihood with no bias correction; at the sample
//! sizes used here the plug-in bias is far below the reported tolerances.
//! Zero cells contribute zero (`0 log 0 = 0`).

use crate::keygen::Symbol;
use std::ops::BitOr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum InfoError {
    #[error("no records to accumulate")]
    EmptyRecords,
    #[error("record contains a Drop symbol")]
    DropSymbol,
    #[error("count table is empty")]
    EmptyCounts,
    #[error("empty marginal variable set")]
    EmptyMargin,
    #[error("histograms have different bin edges")]
    EdgesMismatch,
    #[error("absolute continuity violated: p > 0 where q = 0 in bin {bin}")]
    AbsoluteContinuity { bin: usize },
    #[error("no samples to bin")]
    EmptySamples,
    #[error("bad histogram spec: {0}")]
    BadHistogramSpec(String),
}

/// Subset of the variables (X, Y, Z) selected for a marginal entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarSet(u8);

impl VarSet {
    pub const X: VarSet = VarSet(1);
    pub const Y: VarSet = VarSet(2);
    pub const Z: VarSet = VarSet(4);

    pub fn contains(&self, other: VarSet) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }
}

impl BitOr for VarSet {
    type Output = VarSet;
    fn bitor(self, rhs: VarSet) -> VarSet {
        VarSet(self.0 | rhs.0)
    }
}

/// 2x2x2 joint counts of (alice, bob, eve) bits. Tables from independent
/// workers merge by cellwise addition, identical to sequential accumulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct JointCounts {
    cells: [[[u64; 2]; 2]; 2],
    total: u64,
}

impl JointCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, x: u8, y: u8, z: u8) {
        debug_assert!(x < 2 && y < 2 && z < 2);
        self.cells[x as usize][y as usize][z as usize] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &JointCounts) {
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    self.cells[x][y][z] += other.cells[x][y][z];
                }
            }
        }
        self.total += other.total;
    }

    pub fn count(&self, x: usize, y: usize, z: usize) -> u64 {
        self.cells[x][y][z]
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Builds a count table from kept symbol triples; any `Drop` is rejected.
pub fn accumulate<I>(records: I) -> Result<JointCounts, InfoError>
where
    I: IntoIterator<Item = (Symbol, Symbol, Symbol)>,
{
    let mut counts = JointCounts::new();
    for (x, y, z) in records {
        let (x, y, z) = match (x.bit(), y.bit(), z.bit()) {
            (Some(x), Some(y), Some(z)) => (x, y, z),
            _ => return Err(InfoError::DropSymbol),
        };
        counts.record(x, y, z);
    }
    if counts.total == 0 {
        return Err(InfoError::EmptyRecords);
    }
    Ok(counts)
}

fn neg_p_log2_p(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Plug-in Shannon entropy of the requested marginal, in bits.
pub fn entropy_of(counts: &JointCounts, margin: VarSet) -> Result<f64, InfoError> {
    if margin.is_empty() {
        return Err(InfoError::EmptyMargin);
    }
    if counts.total == 0 {
        return Err(InfoError::EmptyCounts);
    }
    let mut bins = [0u64; 8];
    for x in 0..2usize {
        for y in 0..2usize {
            for z in 0..2usize {
                let mut key = 0usize;
                if margin.contains(VarSet::X) {
                    key = key << 1 | x;
                }
                if margin.contains(VarSet::Y) {
                    key = key << 1 | y;
                }
                if margin.contains(VarSet::Z) {
                    key = key << 1 | z;
                }
                bins[key] += counts.cells[x][y][z];
            }
        }
    }
    let total = counts.total as f64;
    Ok(bins.iter().map(|&c| neg_p_log2_p(c as f64 / total)).sum())
}

fn clamp_small(v: f64) -> f64 {
    debug_assert!(v > -1e-12, "estimate {v} below the clamp floor");
    if v.abs() < 1e-12 {
        0.0
    } else {
        v.max(0.0)
    }
}

/// `I(X;Y|Z)` through the four-entropy identity.
pub fn conditional_mi_entropy_route(counts: &JointCounts) -> Result<f64, InfoError> {
    let hxz = entropy_of(counts, VarSet::X | VarSet::Z)?;
    let hyz = entropy_of(counts, VarSet::Y | VarSet::Z)?;
    let hz = entropy_of(counts, VarSet::Z)?;
    let hxyz = entropy_of(counts, VarSet::X | VarSet::Y | VarSet::Z)?;
    Ok(clamp_small(hxz + hyz - hz - hxyz))
}

/// `I(X;Y|Z)` as `D( p(x,y,z) || p(x,z) p(y,z) / p(z) )`.
pub fn conditional_mi_kl_route(counts: &JointCounts) -> Result<f64, InfoError> {
    if counts.total == 0 {
        return Err(InfoError::EmptyCounts);
    }
    let total = counts.total as f64;
    let mut sum = 0.0;
    for x in 0..2usize {
        for y in 0..2usize {
            for z in 0..2usize {
                let c = counts.cells[x][y][z];
                if c == 0 {
                    continue;
                }
                let p_xyz = c as f64 / total;
                let p_xz = (counts.cells[x][0][z] + counts.cells[x][1][z]) as f64 / total;
                let p_yz = (counts.cells[0][y][z] + counts.cells[1][y][z]) as f64 / total;
                let p_z: u64 = (0..2).flat_map(|a| (0..2).map(move |b| (a, b)))
                    .map(|(a, b)| counts.cells[a][b][z])
                    .sum();
                let p_z = p_z as f64 / total;
                sum += p_xyz * (p_xyz * p_z / (p_xz * p_yz)).log2();
            }
        }
    }
    Ok(clamp_small(sum))
}

/// Conditional mutual information `I(X;Y|Z)` in bits. Both computation routes
/// are evaluated and must agree to 1e-10.
pub fn conditional_mi(counts: &JointCounts) -> Result<f64, InfoError> {
    let via_entropy = conditional_mi_entropy_route(counts)?;
    let via_kl = conditional_mi_kl_route(counts)?;
    assert!(
        (via_entropy - via_kl).abs() <= 1e-10,
        "conditional MI routes disagree: {via_entropy} vs {via_kl}"
    );
    Ok(via_entropy)
}

/// Mutual information `I(X;Y)` in bits, from the (X, Y) marginal.
pub fn mutual_information(counts: &JointCounts) -> Result<f64, InfoError> {
    if counts.total == 0 {
        return Err(InfoError::EmptyCounts);
    }
    let total = counts.total as f64;
    let mut xy = [[0u64; 2]; 2];
    for x in 0..2usize {
        for y in 0..2usize {
            xy[x][y] = counts.cells[x][y][0] + counts.cells[x][y][1];
        }
    }
    let mut sum = 0.0;
    for x in 0..2usize {
        for y in 0..2usize {
            if xy[x][y] == 0 {
                continue;
            }
            let p_xy = xy[x][y] as f64 / total;
            let p_x = (xy[x][0] + xy[x][1]) as f64 / total;
            let p_y = (xy[0][y] + xy[1][y]) as f64 / total;
            sum += p_xy * (p_xy / (p_x * p_y)).log2();
        }
    }
    Ok(clamp_small(sum))
}

/// Normalized histogram over strictly increasing bin edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    edges: Vec<f64>,
    masses: Vec<f64>,
}

impl Histogram {
    pub fn new(edges: Vec<f64>, masses: Vec<f64>) -> Result<Self, InfoError> {
        if edges.len() < 3 || masses.len() + 1 != edges.len() {
            return Err(InfoError::BadHistogramSpec(format!(
                "{} edges for {} masses",
                edges.len(),
                masses.len()
            )));
        }
        if !edges.windows(2).all(|w| w[0] < w[1]) {
            return Err(InfoError::BadHistogramSpec(
                "edges not strictly increasing".into(),
            ));
        }
        if masses.iter().any(|&m| !(m >= 0.0)) {
            return Err(InfoError::BadHistogramSpec("negative mass".into()));
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(InfoError::BadHistogramSpec(format!(
                "masses sum to {sum}"
            )));
        }
        Ok(Self { edges, masses })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn bin_count(&self) -> usize {
        self.masses.len()
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Add-half smoothing for empirical histograms with empty bins:
    /// rebuilds masses as `(count + 1/2) / (n + bins/2)` given the sample
    /// count `n` the histogram was estimated from.
    pub fn add_half_smoothed(&self, n_samples: u64) -> Histogram {
        let n = n_samples as f64;
        let k = self.masses.len() as f64;
        let masses = self
            .masses
            .iter()
            .map(|&m| (m * n + 0.5) / (n + 0.5 * k))
            .collect();
        Histogram {
            edges: self.edges.clone(),
            masses,
        }
    }
}

/// `D(p || q)` in bits. Requires identical bin edges and `q > 0` wherever
/// `p > 0`; a violation of the latter is a distinct error.
pub fn kl_divergence(p: &Histogram, q: &Histogram) -> Result<f64, InfoError> {
    if p.edges != q.edges {
        return Err(InfoError::EdgesMismatch);
    }
    let mut sum = 0.0;
    for (bin, (&pm, &qm)) in p.masses.iter().zip(&q.masses).enumerate() {
        if pm > 0.0 {
            if qm <= 0.0 {
                return Err(InfoError::AbsoluteContinuity { bin });
            }
            sum += pm * (pm / qm).log2();
        }
    }
    Ok(sum.max(0.0))
}

/// Bins samples into a normalized histogram on `[lo, hi]`; out-of-range
/// samples accumulate in the edge bins.
pub fn empirical_pdf(
    samples: &[f64],
    bin_count: usize,
    range: (f64, f64),
) -> Result<Histogram, InfoError> {
    let (lo, hi) = range;
    if samples.is_empty() {
        return Err(InfoError::EmptySamples);
    }
    if bin_count < 2 {
        return Err(InfoError::BadHistogramSpec(format!(
            "bin_count {bin_count} < 2"
        )));
    }
    if !(lo < hi) {
        return Err(InfoError::BadHistogramSpec(format!(
            "empty range [{lo}, {hi}]"
        )));
    }
    let width = (hi - lo) / bin_count as f64;
    let mut counts = vec![0u64; bin_count];
    for &x in samples {
        let idx = ((x - lo) / width).floor();
        let idx = if idx < 0.0 {
            0
        } else {
            (idx as usize).min(bin_count - 1)
        };
        counts[idx] += 1;
    }
    let n = samples.len() as f64;
    let edges = (0..=bin_count).map(|i| lo + i as f64 * width).collect();
    let masses = counts.iter().map(|&c| c as f64 / n).collect();
    Histogram::new(edges, masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn uniform_counts(per_cell: u64) -> JointCounts {
        let mut c = JointCounts::new();
        for _ in 0..per_cell {
            for x in 0..2 {
                for y in 0..2 {
                    for z in 0..2 {
                        c.record(x, y, z);
                    }
                }
            }
        }
        c
    }

    #[test]
    fn accumulate_counts_triples() {
        use Symbol::*;
        assert_eq!(accumulate(vec![]).unwrap_err(), InfoError::EmptyRecords);
        let c = accumulate(vec![(Zero, Zero, Zero)]).unwrap();
        assert_eq!(c.count(0, 0, 0), 1);
        assert_eq!(c.total(), 1);
        let c = accumulate(std::iter::repeat((One, One, Zero)).take(100)).unwrap();
        assert_eq!(c.count(1, 1, 0), 100);
        assert_eq!(c.total(), 100);
        assert_eq!(
            accumulate(vec![(Zero, Drop, One)]).unwrap_err(),
            InfoError::DropSymbol
        );
    }

    #[test]
    fn entropy_basic_values() {
        let c = uniform_counts(3);
        let all = VarSet::X | VarSet::Y | VarSet::Z;
        assert_eq!(entropy_of(&c, all).unwrap(), 3.0);
        assert_eq!(entropy_of(&c, VarSet::X).unwrap(), 1.0);
        assert!(entropy_of(&c, VarSet(0)).is_err());

        let mut point = JointCounts::new();
        point.record(1, 0, 1);
        assert_eq!(entropy_of(&point, all).unwrap(), 0.0);
        assert_eq!(entropy_of(&point, VarSet::Y).unwrap(), 0.0);
    }

    #[test]
    fn cmi_determined_and_independent_cases() {
        // Z = X = Y uniform: conditioning removes everything.
        let mut c = JointCounts::new();
        for _ in 0..50 {
            c.record(0, 0, 0);
            c.record(1, 1, 1);
        }
        assert_eq!(conditional_mi(&c).unwrap(), 0.0);

        // X = Y uniform, Z independent uniform: one full bit survives.
        let mut c = JointCounts::new();
        for _ in 0..50 {
            for z in 0..2 {
                c.record(0, 0, z);
                c.record(1, 1, z);
            }
        }
        assert!((conditional_mi(&c).unwrap() - 1.0).abs() < 1e-12);
        assert!((mutual_information(&c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cmi_zero_when_eve_copies_bob() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let mut c = JointCounts::new();
        for _ in 0..10_000 {
            let x: u8 = rng.gen_range(0..2);
            let y: u8 = if rng.gen_bool(0.9) { x } else { 1 - x };
            c.record(x, y, y);
        }
        assert_eq!(conditional_mi(&c).unwrap(), 0.0);
    }

    #[test]
    fn bsc_synthetic_matches_binary_entropy_oracle() {
        // X uniform, Y = X flipped with p = 0.11, Z independent:
        // I(X;Y|Z) = I(X;Y) = 1 - Hb(0.11).
        let flip = 0.11;
        let hb = -flip * f64::log2(flip) - (1.0 - flip) * f64::log2(1.0 - flip);
        let expect = 1.0 - hb;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut c = JointCounts::new();
        for _ in 0..1_000_000 {
            let x: u8 = rng.gen_range(0..2);
            let y = if rng.gen_bool(flip) { 1 - x } else { x };
            let z: u8 = rng.gen_range(0..2);
            c.record(x, y, z);
        }
        let cmi = conditional_mi(&c).unwrap();
        let mi = mutual_information(&c).unwrap();
        assert!((cmi - expect).abs() < 0.01, "cmi {cmi} expect {expect}");
        assert!((mi - expect).abs() < 0.01, "mi {mi}");
    }

    #[test]
    fn mi_trivial_cases() {
        let mut c = JointCounts::new();
        for _ in 0..10 {
            c.record(0, 0, 0);
            c.record(1, 1, 0);
        }
        assert!((mutual_information(&c).unwrap() - 1.0).abs() < 1e-12);

        let mut indep = JointCounts::new();
        for x in 0..2 {
            for y in 0..2 {
                for _ in 0..25 {
                    indep.record(x, y, 0);
                }
            }
        }
        assert_eq!(mutual_information(&indep).unwrap(), 0.0);
    }

    #[test]
    fn chain_consistency() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let mut c = JointCounts::new();
            for x in 0..2 {
                for y in 0..2 {
                    for z in 0..2 {
                        for _ in 0..rng.gen_range(0..40u64) {
                            c.record(x, y, z);
                        }
                    }
                }
            }
            if c.total() == 0 {
                continue;
            }
            let mi = mutual_information(&c).unwrap();
            let via_h = entropy_of(&c, VarSet::X).unwrap() + entropy_of(&c, VarSet::Y).unwrap()
                - entropy_of(&c, VarSet::X | VarSet::Y).unwrap();
            assert!((mi - via_h).abs() <= 1e-10, "{mi} vs {via_h}");
        }
    }

    #[test]
    fn cmi_routes_agree_on_random_tables() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..1000 {
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
            assert!((a - b).abs() <= 1e-10, "routes {a} vs {b}");
            assert!(a >= 0.0 && b >= 0.0);
        }
    }

    #[test]
    fn kl_basic_values() {
        let edges = vec![0.0, 1.0, 2.0];
        let p = Histogram::new(edges.clone(), vec![1.0, 0.0]).unwrap();
        let q = Histogram::new(edges.clone(), vec![0.5, 0.5]).unwrap();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert!((kl_divergence(&p, &q).unwrap() - 1.0).abs() < 1e-12);
        let p2 = Histogram::new(edges.clone(), vec![0.75, 0.25]).unwrap();
        assert!((kl_divergence(&p2, &q).unwrap() - 0.18872).abs() < 1e-5);
        // absolute-continuity violation is its own error
        assert_eq!(
            kl_divergence(&q, &p).unwrap_err(),
            InfoError::AbsoluteContinuity { bin: 1 }
        );
        // mismatched edges
        let other = Histogram::new(vec![0.0, 0.5, 2.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(
            kl_divergence(&p, &other).unwrap_err(),
            InfoError::EdgesMismatch
        );
    }

    #[test]
    fn empirical_pdf_basics() {
        assert_eq!(
            empirical_pdf(&[], 10, (0.0, 1.0)).unwrap_err(),
            InfoError::EmptySamples
        );
        let h = empirical_pdf(&[0.35; 500], 10, (0.0, 1.0)).unwrap();
        assert_eq!(h.masses()[3], 1.0);
        assert_eq!(h.masses().iter().filter(|&&m| m > 0.0).count(), 1);
        // out-of-range samples land in the edge bins
        let h = empirical_pdf(&[-5.0, 0.5, 99.0, 99.0], 4, (0.0, 1.0)).unwrap();
        assert_eq!(h.masses()[0], 0.25);
        assert_eq!(h.masses()[3], 0.5);
    }

    #[test]
    fn empirical_pdf_uniform_masses() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let n = 200_000;
        let samples: Vec<f64> = (0..n).map(|_| rng.gen_range(2.0..4.0)).collect();
        let bins = 20;
        let h = empirical_pdf(&samples, bins, (2.0, 4.0)).unwrap();
        let tol = 3.0 * (1.0 / (bins as f64 * n as f64)).sqrt();
        for &m in h.masses() {
            assert!((m - 1.0 / bins as f64).abs() < tol, "mass {m}");
        }
    }

    #[test]
    fn empirical_rayleigh_close_to_analytic_bins() {
        use crate::special_math::{rayleigh_cdf, rayleigh_quantile, RayleighParams};
        let p = RayleighParams::unit_power();
        let n = 1_000_000;
        let samples: Vec<f64> = (0..n)
            .map(|i| rayleigh_quantile((i as f64 + 0.5) / n as f64, p).unwrap())
            .collect();
        let bins = 100;
        let emp = empirical_pdf(&samples, bins, (0.0, 3.0)).unwrap();
        // analytic bin masses, tail folded into the last bin
        let mut masses: Vec<f64> = (0..bins)
            .map(|i| {
                let lo = 3.0 * i as f64 / bins as f64;
                let hi = 3.0 * (i + 1) as f64 / bins as f64;
                rayleigh_cdf(hi, p).unwrap() - rayleigh_cdf(lo, p).unwrap()
            })
            .collect();
        let tail = 1.0 - rayleigh_cdf(3.0, p).unwrap();
        masses[bins - 1] += tail;
        let analytic = Histogram::new(emp.edges().to_vec(), masses).unwrap();
        let kl = kl_divergence(&emp, &analytic).unwrap();
        assert!(kl < 0.001, "KL = {kl}");
    }

    #[test]
    fn merge_equals_sequential() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        let triples: Vec<(u8, u8, u8)> = (0..5000)
            .map(|_| (rng.gen_range(0..2), rng.gen_range(0..2), rng.gen_range(0..2)))
            .collect();
        let mut sequential = JointCounts::new();
        for &(x, y, z) in &triples {
            sequential.record(x, y, z);
        }
        let mut merged = JointCounts::new();
        for chunk in triples.chunks(137) {
            let mut part = JointCounts::new();
            for &(x, y, z) in chunk {
                part.record(x, y, z);
            }
            merged.merge(&part);
        }
        assert_eq!(sequential, merged);
    }

    proptest! {
        #[test]
        fn smoothing_keeps_histogram_valid(masses in proptest::collection::vec(0u64..1000, 5..30)) {
            let total: u64 = masses.iter().sum();
            prop_assume!(total > 0);
            let k = masses.len();
            let edges: Vec<f64> = (0..=k).map(|i| i as f64).collect();
            let m: Vec<f64> = masses.iter().map(|&c| c as f64 / total as f64).collect();
            let h = Histogram::new(edges, m).unwrap();
            let s = h.add_half_smoothed(total);
            let sum: f64 = s.masses().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(s.masses().iter().all(|&v| v > 0.0));
        }

        #[test]
        fn kl_non_negative_and_zero_iff_equal(
            a in proptest::collection::vec(1u64..500, 8),
            b in proptest::collection::vec(1u64..500, 8),
        ) {
            let edges: Vec<f64> = (0..=8).map(|i| i as f64).collect();
            let ta: u64 = a.iter().sum();
            let tb: u64 = b.iter().sum();
            let pa = Histogram::new(edges.clone(), a.iter().map(|&c| c as f64 / ta as f64).collect()).unwrap();
            let pb = Histogram::new(edges, b.iter().map(|&c| c as f64 / tb as f64).collect()).unwrap();
            let d = kl_divergence(&pa, &pb).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert_eq!(kl_divergence(&pa, &pa).unwrap(), 0.0);
        }
    }
}
