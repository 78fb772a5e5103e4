//! Photon sources, coincidence counting statistics and the figures of merit
//! computed from counts.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, validation, Result};
use crate::fock::{OccupationVector, PureState};
use crate::grid::BinGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Pair,
    HeraldedSingle,
    Bell,
}

/// Photon-pair source. Bins are grid indices. `car = None` is an ideal
/// source without accidental coincidences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub signal_bin: i32,
    pub idler_bin: i32,
    /// `[f1, f2, f3, f4]` with `f1 < f2 < f3 < f4`; qubit A is `{f1, f2}` with
    /// `|0⟩_A = f1`, qubit B is `{f4, f3}` with `|0⟩_B = f4`.
    pub bell_bins: [i32; 4],
    pub photon_linewidth_mhz: f64,
    pub pair_rate_hz: f64,
    pub car: Option<f64>,
    pub indistinguishability: f64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec {
            kind: SourceKind::Pair,
            signal_bin: 0,
            idler_bin: 1,
            bell_bins: [0, 1, 2, 3],
            photon_linewidth_mhz: 202.0,
            pair_rate_hz: 1.0e6,
            car: None,
            indistinguishability: 1.0,
        }
    }
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(car) = self.car {
            if !(car > 1.0) {
                return Err(validation(format!("coincidence-to-accidental ratio {car} must exceed 1")));
            }
        }
        if !(0.0..=1.0).contains(&self.indistinguishability) {
            return Err(validation(format!("indistinguishability {} outside [0, 1]", self.indistinguishability)));
        }
        if !(self.pair_rate_hz >= 0.0 && self.pair_rate_hz.is_finite()) {
            return Err(validation("pair rate must be non-negative"));
        }
        if !(self.photon_linewidth_mhz >= 0.0) {
            return Err(validation("photon linewidth must be non-negative"));
        }
        match self.kind {
            SourceKind::Pair | SourceKind::HeraldedSingle if self.signal_bin == self.idler_bin => {
                Err(validation("signal and idler bins must differ"))
            }
            SourceKind::Bell if !self.bell_bins.windows(2).all(|w| w[0] < w[1]) => {
                Err(validation("Bell bins must be strictly increasing f1 < f2 < f3 < f4"))
            }
            _ => Ok(()),
        }
    }
}

/// Input state produced by the source on `grid`.
///
/// * pair: `|1_s 1_i⟩`
/// * heralded single: `|1_s⟩` (the herald is bookkeeping in the count model)
/// * bell: `(|1_f1 1_f4⟩ + |1_f2 1_f3⟩)/√2`, i.e. `(|00⟩ + |11⟩)/√2` with the
///   two terms energy-matched (`f1 + f4 = f2 + f3` on a uniform grid).
pub fn make_source_state(s: &SourceSpec, grid: Arc<BinGrid>) -> Result<PureState> {
    s.validate()?;
    let n = grid.n_modes();
    match s.kind {
        SourceKind::Pair => {
            let occ = OccupationVector::from_modes(n, &[grid.mode_of(s.signal_bin)?, grid.mode_of(s.idler_bin)?]);
            PureState::fock(grid, occ)
        }
        SourceKind::HeraldedSingle => {
            let occ = OccupationVector::from_modes(n, &[grid.mode_of(s.signal_bin)?]);
            PureState::fock(grid, occ)
        }
        SourceKind::Bell => {
            let [f1, f2, f3, f4] = s.bell_bins;
            if f1 + f4 != f2 + f3 {
                return Err(validation("Bell bins are not energy matched (f1 + f4 != f2 + f3)"));
            }
            let m = |b| grid.mode_of(b);
            let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
            let terms = [
                (OccupationVector::from_modes(n, &[m(f1)?, m(f4)?]), a),
                (OccupationVector::from_modes(n, &[m(f2)?, m(f3)?]), a),
            ];
            PureState::from_terms(grid, terms)
        }
    }
}

/// Probability that exactly one photon lands in `pattern_a` and exactly one in
/// `pattern_b`; every other mode (sidebands, loss bins) is marginalised.
pub fn coincidence_probability(state: &PureState, pattern_a: &BTreeSet<usize>, pattern_b: &BTreeSet<usize>) -> Result<f64> {
    if !pattern_a.is_disjoint(pattern_b) {
        return Err(domain("coincidence patterns overlap"));
    }
    let n = state.grid().n_modes();
    if let Some(&m) = pattern_a.iter().chain(pattern_b).find(|&&m| m >= n) {
        return Err(config(format!("mode {m} is not on the grid")));
    }
    let count = |occ: &OccupationVector, set: &BTreeSet<usize>| set.iter().map(|&m| occ[m] as usize).sum::<usize>();
    Ok(state
        .amplitudes()
        .iter()
        .filter(|(occ, _)| count(occ, pattern_a) == 1 && count(occ, pattern_b) == 1)
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        .clamp(0.0, 1.0))
}

/// `v · p_indist + (1 − v) · p_dist`.
pub fn indistinguishability_mix(p_indist: f64, p_dist: f64, v: f64) -> f64 {
    v * p_indist + (1.0 - v) * p_dist
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSpec {
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub coincidence_window_ps: f64,
    pub integration_s: f64,
    /// Grating-coupler transmission per photon.
    pub insertion_loss: f64,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        DetectorSpec {
            efficiency: 0.8,
            dark_rate_hz: 0.0,
            coincidence_window_ps: 512.0,
            integration_s: 100.0,
            insertion_loss: 0.25,
        }
    }
}

impl DetectorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(validation(format!("detector efficiency {} outside (0, 1]", self.efficiency)));
        }
        if !(self.insertion_loss > 0.0 && self.insertion_loss <= 1.0) {
            return Err(validation(format!("insertion loss {} outside (0, 1]", self.insertion_loss)));
        }
        if !(self.dark_rate_hz >= 0.0) {
            return Err(validation("dark rate must be non-negative"));
        }
        if !(self.coincidence_window_ps > 0.0) || !(self.integration_s > 0.0) {
            return Err(validation("coincidence window and integration time must be positive"));
        }
        Ok(())
    }

    /// Per-photon collection probability.
    pub fn collection(&self) -> f64 {
        self.efficiency * self.insertion_loss
    }
}

/// One coincidence channel between detectors `a` and `b`.
///
/// `singles_a` / `singles_b` are the mean photon numbers per pair reaching
/// each detector (1.0 at the reference operating point); they scale the
/// accidental background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceChannel {
    pub p_true: f64,
    pub singles_a: f64,
    pub singles_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub p_true: f64,
    pub true_coincidences: u64,
    pub accidental_coincidences: u64,
    pub singles: [u64; 2],
    pub expected_true: f64,
    pub expected_accidental: f64,
    pub singles_rate_hz: [f64; 2],
    pub seed: u64,
}

impl CountRecord {
    pub fn coincidences(&self) -> u64 {
        self.true_coincidences + self.accidental_coincidences
    }

    pub fn expected(&self) -> f64 {
        self.expected_true + self.expected_accidental
    }
}

/// Singles level reproducing the source CAR at the reference point
/// (`p_true = 1`, unit singles on both detectors): `S² τ = R μ² / CAR`.
pub fn reference_singles_rate(d: &DetectorSpec, s: &SourceSpec) -> f64 {
    match s.car {
        None => 0.0,
        Some(car) => (s.pair_rate_hz * d.collection().powi(2) / (car * d.coincidence_window_ps * 1e-12)).sqrt(),
    }
}

/// Expected `(true, accidental, singles rates)` for a channel.
pub fn expected_counts(ch: &CoincidenceChannel, d: &DetectorSpec, s: &SourceSpec) -> (f64, f64, [f64; 2]) {
    let mu = d.collection();
    let lambda_t = s.pair_rate_hz * d.integration_s * ch.p_true.clamp(0.0, 1.0) * mu * mu;
    let s_ref = reference_singles_rate(d, s);
    let rates = [s_ref * ch.singles_a + d.dark_rate_hz, s_ref * ch.singles_b + d.dark_rate_hz];
    let lambda_a = rates[0] * rates[1] * d.coincidence_window_ps * 1e-12 * d.integration_s;
    (lambda_t, lambda_a, rates)
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// Counts for a channel at the reference singles level.
pub fn sample_counts(p_true: f64, d: &DetectorSpec, s: &SourceSpec, seed: u64) -> CountRecord {
    sample_channel(&CoincidenceChannel { p_true, singles_a: 1.0, singles_b: 1.0 }, d, s, seed)
}

/// Draws true and accidental coincidences and singles for one channel.
/// Deterministic in `seed`.
pub fn sample_channel(ch: &CoincidenceChannel, d: &DetectorSpec, s: &SourceSpec, seed: u64) -> CountRecord {
    let (lambda_t, lambda_a, rates) = expected_counts(ch, d, s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let true_coincidences = poisson(&mut rng, lambda_t);
    let accidental_coincidences = poisson(&mut rng, lambda_a);
    let singles = [poisson(&mut rng, rates[0] * d.integration_s), poisson(&mut rng, rates[1] * d.integration_s)];
    CountRecord {
        p_true: ch.p_true,
        true_coincidences,
        accidental_coincidences,
        singles,
        expected_true: lambda_t,
        expected_accidental: lambda_a,
        singles_rate_hz: rates,
        seed,
    }
}

/// Seed for sweep point `index` derived from a base seed (SplitMix64 mix), so
/// results do not depend on evaluation order.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Coherence time `1/(2π Δν)` of a Lorentzian photon, in ps.
pub fn coherence_time_ps(linewidth_mhz: f64) -> f64 {
    1e6 / (2.0 * PI * linewidth_mhz)
}

/// Integral of `exp(-|u|/τ)` from 0 to `u` (odd in `u`).
fn exp_cdf(u: f64, tau: f64) -> f64 {
    u.signum() * tau * (1.0 - (-u.abs() / tau).exp())
}

/// Two-sided exponential `exp(-|τ|/τ_c)` convolved with a unit-area
/// rectangular window of width `window_ps`. Its integral is `2 τ_c` for any
/// window.
pub fn g2_profile(tau_grid_ps: &[f64], linewidth_mhz: f64, window_ps: f64) -> Vec<f64> {
    let tc = coherence_time_ps(linewidth_mhz);
    let half = window_ps / 2.0;
    tau_grid_ps
        .iter()
        .map(|&t| {
            if half <= 0.0 {
                (-t.abs() / tc).exp()
            } else {
                (exp_cdf(t + half, tc) - exp_cdf(t - half, tc)) / window_ps
            }
        })
        .collect()
}

/// Coincidence histogram shape normalised to a peak of one.
pub fn g2_histogram(tau_grid_ps: &[f64], linewidth_mhz: f64, window_ps: f64) -> Vec<f64> {
    let peak = g2_profile(&[0.0], linewidth_mhz, window_ps)[0];
    g2_profile(tau_grid_ps, linewidth_mhz, window_ps).into_iter().map(|v| v / peak).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub value: f64,
    pub sigma: f64,
    pub method: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Uncertainty {
    /// Inputs are intensities; no statistical error.
    None,
    /// Inputs are Poisson counts.
    Poisson,
}

/// `(max − min)/(max + min)` over a series.
pub fn visibility_minmax(values: &[f64], uncertainty: Uncertainty) -> Result<MetricResult> {
    if values.len() < 2 {
        return Err(domain("visibility needs at least two values"));
    }
    if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(domain("visibility inputs must be finite and non-negative"));
    }
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    if max + min <= 0.0 {
        return Err(domain("visibility of an all-zero series is undefined"));
    }
    let value = (max - min) / (max + min);
    let sigma = match uncertainty {
        Uncertainty::None => 0.0,
        Uncertainty::Poisson => {
            let s2 = (max + min).powi(4);
            ((4.0 * min * min * max + 4.0 * max * max * min) / s2).sqrt()
        }
    };
    let method = match uncertainty {
        Uncertainty::None => "minmax",
        Uncertainty::Poisson => "minmax-poisson",
    };
    Ok(MetricResult { value, sigma, method: method.into() })
}

/// `(N_max − N_min)/N_max` without background subtraction.
pub fn visibility_hom(n_max: f64, n_min: f64) -> Result<MetricResult> {
    if !(n_max > 0.0) {
        return Err(domain("HOM visibility needs a positive maximum count"));
    }
    if !(n_min >= 0.0) {
        return Err(domain("HOM minimum count must be non-negative"));
    }
    let value = (n_max - n_min) / n_max;
    let sigma = (n_min * n_min / n_max.powi(3) + n_min / (n_max * n_max)).sqrt();
    Ok(MetricResult { value, sigma, method: "hom-poisson".into() })
}

fn check_table(t: &[Vec<f64>], name: &str) -> Result<()> {
    if t.len() != 4 || t.iter().any(|r| r.len() != 4) {
        return Err(validation(format!("{name} truth table must be 4x4")));
    }
    Ok(())
}

/// Mean probability of the ideal outcome over the four inputs of a
/// row-normalised truth table.
pub fn truth_table_fidelity(measured: &[Vec<f64>], ideal: &[Vec<f64>]) -> Result<MetricResult> {
    check_table(measured, "measured")?;
    check_table(ideal, "ideal")?;
    for (i, row) in measured.iter().enumerate() {
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(validation(format!("measured row {i} sums to {s}, expected 1")));
        }
    }
    let value = measured
        .iter()
        .zip(ideal)
        .map(|(m, id)| m.iter().zip(id).map(|(a, b)| a * b).sum::<f64>())
        .sum::<f64>()
        / 4.0;
    Ok(MetricResult { value, sigma: 0.0, method: "mean-ideal-outcome".into() })
}

/// Row-normalises a count table and attaches a binomial error to the fidelity.
pub fn truth_table_fidelity_from_counts(counts: &[Vec<f64>], ideal: &[Vec<f64>]) -> Result<MetricResult> {
    check_table(counts, "count")?;
    let mut table = Vec::with_capacity(4);
    let mut var = 0.0;
    for (row, id) in counts.iter().zip(ideal) {
        let n: f64 = row.iter().sum();
        if !(n > 0.0) {
            return Err(domain("a truth-table row has no counts"));
        }
        let probs: Vec<f64> = row.iter().map(|c| c / n).collect();
        let p: f64 = probs.iter().zip(id).map(|(a, b)| a * b).sum();
        var += p * (1.0 - p) / n;
        table.push(probs);
    }
    let mut m = truth_table_fidelity(&table, ideal)?;
    m.sigma = var.sqrt() / 4.0;
    m.method = "mean-ideal-outcome-binomial".into();
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HofmannBound {
    pub value: f64,
    pub sigma: f64,
    /// Set when `F_XZ + F_ZX − 1` was negative and clamped to zero.
    pub clamped: bool,
}

/// Process-fidelity lower bound `F_XZ + F_ZX − 1` from two complementary
/// truth tables.
pub fn hofmann_bound(f_xz: f64, f_zx: f64) -> HofmannBound {
    let raw = f_xz + f_zx - 1.0;
    HofmannBound { value: raw.max(0.0), sigma: 0.0, clamped: raw < 0.0 }
}

pub fn hofmann_bound_metric(xz: &MetricResult, zx: &MetricResult) -> HofmannBound {
    let mut b = hofmann_bound(xz.value, zx.value);
    b.sigma = xz.sigma.hypot(zx.sigma);
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_states() {
        let g = Arc::new(BinGrid::uniform(4, 0).unwrap());
        let pair = make_source_state(&SourceSpec::default(), g.clone()).unwrap();
        assert_eq!(pair.amplitudes().len(), 1);
        assert!((pair.amplitude(&OccupationVector(vec![1, 1, 0, 0])) - 1.0).norm() < 1e-15);

        let bell = make_source_state(&SourceSpec { kind: SourceKind::Bell, ..Default::default() }, g.clone()).unwrap();
        for occ in [vec![1, 0, 0, 1], vec![0, 1, 1, 0]] {
            assert!((bell.amplitude(&OccupationVector(occ)).re - FRAC_1_SQRT_2).abs() < 1e-15);
        }
        // Projecting A onto |0⟩ (f1) leaves B deterministically in |0⟩ (f4).
        let a0: BTreeSet<usize> = [0].into();
        let b0: BTreeSet<usize> = [3].into();
        let b1: BTreeSet<usize> = [2].into();
        assert!((coincidence_probability(&bell, &a0, &b0).unwrap() - 0.5).abs() < 1e-15);
        assert!(coincidence_probability(&bell, &a0, &b1).unwrap() < 1e-15);

        let bad = SourceSpec { kind: SourceKind::Bell, bell_bins: [0, 1, 2, 4], ..Default::default() };
        assert!(make_source_state(&bad, g.clone()).is_err());
        let off = SourceSpec { signal_bin: 9, ..Default::default() };
        assert!(make_source_state(&off, g).is_err());
    }

    #[test]
    fn coincidence_ignores_sideband_photons() {
        let g = Arc::new(BinGrid::uniform(2, 1).unwrap());
        let s = g.mode_of(-1).unwrap();
        let c0 = g.mode_of(0).unwrap();
        let c1 = g.mode_of(1).unwrap();
        let psi = PureState::fock(g.clone(), OccupationVector::from_modes(g.n_modes(), &[s, c1])).unwrap();
        let p = coincidence_probability(&psi, &[c0].into(), &[c1].into()).unwrap();
        assert_eq!(p, 0.0);
        assert!(coincidence_probability(&psi, &[c0].into(), &[c0, c1].into()).is_err());
    }

    #[test]
    fn mixing() {
        assert_eq!(indistinguishability_mix(0.1, 0.5, 1.0), 0.1);
        assert_eq!(indistinguishability_mix(0.1, 0.5, 0.0), 0.5);
        // Balanced HOM: p_indist = 0, p_dist = 1/2.
        let p = indistinguishability_mix(0.0, 0.5, 0.949);
        assert!(((0.5 - p) / 0.5 - 0.949).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_and_ideal_source_give_no_counts() {
        let d = DetectorSpec::default();
        let s = SourceSpec::default();
        let ch = CoincidenceChannel { p_true: 0.0, singles_a: 1.0, singles_b: 1.0 };
        let r = sample_channel(&ch, &d, &s, 7);
        assert_eq!(r.coincidences(), 0);
        assert_eq!(r.singles, [0, 0]);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let d = DetectorSpec::default();
        let s = SourceSpec { car: Some(20.0), ..Default::default() };
        let ch = CoincidenceChannel { p_true: 0.3, singles_a: 0.8, singles_b: 0.6 };
        assert_eq!(sample_channel(&ch, &d, &s, 42), sample_channel(&ch, &d, &s, 42));
        assert_ne!(sample_channel(&ch, &d, &s, 42), sample_channel(&ch, &d, &s, 43));
    }

    #[test]
    fn car_is_reproduced_at_the_reference_point() {
        let d = DetectorSpec::default();
        let s = SourceSpec { car: Some(12.5), ..Default::default() };
        let ch = CoincidenceChannel { p_true: 1.0, singles_a: 1.0, singles_b: 1.0 };
        let (t, a, _) = expected_counts(&ch, &d, &s);
        assert!((t / a - 12.5).abs() < 1e-9);
    }

    #[test]
    fn poisson_mean_property() {
        // λ_t = 1000 exactly; sample mean over 200 seeds lies within 3σ.
        let d = DetectorSpec { efficiency: 1.0, insertion_loss: 1.0, integration_s: 1.0, ..Default::default() };
        let s = SourceSpec { pair_rate_hz: 1000.0, ..Default::default() };
        let ch = CoincidenceChannel { p_true: 1.0, singles_a: 1.0, singles_b: 1.0 };
        let n = 200;
        let mean = (0..n).map(|k| sample_channel(&ch, &d, &s, derive_seed(5, k)).true_coincidences as f64).sum::<f64>()
            / n as f64;
        let sigma = (1000.0f64 / n as f64).sqrt();
        assert!((mean - 1000.0).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: BTreeSet<u64> = (0..1000).map(|i| derive_seed(1, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn histogram_shape() {
        assert!((coherence_time_ps(202.0) - 787.9).abs() < 0.1);
        let taus: Vec<f64> = (-200..=200).map(|k| k as f64 * 25.0).collect();
        let h = g2_histogram(&taus, 202.0, 512.0);
        assert!((h[200] - 1.0).abs() < 1e-15);
        for k in 0..=200 {
            assert!((h[200 - k] - h[200 + k]).abs() < 1e-12);
        }
        assert!(h.iter().all(|&v| v <= 1.0 + 1e-15));
        // Zero window reduces to the bare exponential.
        let bare = g2_histogram(&[788.0], 202.0, 0.0)[0];
        assert!((bare - (-788.0 / coherence_time_ps(202.0)).exp()).abs() < 1e-12);
    }

    #[test]
    fn histogram_area_is_window_independent() {
        let dx = 0.5;
        let taus: Vec<f64> = (-60000..=60000).map(|k| k as f64 * dx).collect();
        let area = |w: f64| {
            let p = g2_profile(&taus, 202.0, w);
            dx * (p.iter().sum::<f64>() - 0.5 * (p[0] + p[p.len() - 1]))
        };
        let (a, b, c) = (area(100.0), area(512.0), area(2000.0));
        let exact = 2.0 * coherence_time_ps(202.0);
        assert!(((a - b) / exact).abs() < 1e-9);
        assert!(((b - c) / exact).abs() < 1e-9);
        assert!(((b - exact) / exact).abs() < 1e-9);
    }

    #[test]
    fn visibility_examples() {
        let v = visibility_minmax(&[100.0, 2.0], Uncertainty::Poisson).unwrap();
        assert!((v.value - 0.9608).abs() < 1e-4);
        assert!(v.sigma > 0.0);
        assert_eq!(visibility_minmax(&[3.0, 3.0, 3.0], Uncertainty::None).unwrap().value, 0.0);
        assert!(visibility_minmax(&[0.0, 0.0], Uncertainty::None).is_err());
        assert!(visibility_minmax(&[1.0], Uncertainty::None).is_err());
        let fringe: Vec<f64> =
            (0..=3600).map(|k| 5.0 * (1.0 + 0.83 * (k as f64 * 2.0 * PI / 3600.0).sin())).collect();
        assert!((visibility_minmax(&fringe, Uncertainty::None).unwrap().value - 0.83).abs() < 1e-6);
    }

    #[test]
    fn hom_visibility_examples() {
        assert_eq!(visibility_hom(1000.0, 0.0).unwrap().value, 1.0);
        assert!((visibility_hom(1000.0, 51.0).unwrap().value - 0.949).abs() < 1e-12);
        assert!(visibility_hom(0.0, 0.0).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let ideal: Vec<Vec<f64>> =
            (0..4).map(|i| (0..4).map(|j| if j == (i + 1) % 4 { 1.0 } else { 0.0 }).collect()).collect();
        assert_eq!(truth_table_fidelity(&ideal, &ideal).unwrap().value, 1.0);
        let uniform = vec![vec![0.25; 4]; 4];
        assert!((truth_table_fidelity(&uniform, &ideal).unwrap().value - 0.25).abs() < 1e-15);
        assert!(truth_table_fidelity(&uniform[..3], &ideal).is_err());
        let unnormalised = vec![vec![0.5; 4]; 4];
        assert!(truth_table_fidelity(&unnormalised, &ideal).is_err());
        let counts: Vec<Vec<f64>> = ideal.iter().map(|r| r.iter().map(|p| 90.0 * p + 10.0 * (1.0 - p) / 3.0).collect()).collect();
        let f = truth_table_fidelity_from_counts(&counts, &ideal).unwrap();
        assert!((f.value - 0.9).abs() < 1e-12);
        assert!((f.sigma - (0.9f64 * 0.1 / 100.0).sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn hofmann_examples() {
        assert_eq!(hofmann_bound(1.0, 1.0).value, 1.0);
        let b = hofmann_bound(0.95, 0.964);
        assert!((b.value - 0.914).abs() < 1e-12 && !b.clamped);
        let b = hofmann_bound(0.4, 0.4);
        assert_eq!(b.value, 0.0);
        assert!(b.clamped);
    }
}
