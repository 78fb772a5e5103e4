use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{mean_occupation, single_photon_distribution, sweep, Chip, ChipConfig, ExperimentKind, ExperimentResult};
use crate::counting::{
    coincidence_probability, hofmann_bound_metric, indistinguishability_mix, truth_table_fidelity,
    truth_table_fidelity_from_counts, CoincidenceChannel, HofmannBound, MetricResult,
};
use crate::elements::attenuator_transform;
use crate::error::{domain, validation, Result};
use crate::fock::{apply_all, ModeTransform, OccupationVector, PureState};

/// Measurement basis of (control, target).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CzBasis {
    Zz,
    Xz,
    Zx,
}

impl CzBasis {
    fn x_on(self) -> [bool; 2] {
        match self {
            CzBasis::Zz => [false, false],
            CzBasis::Xz => [true, false],
            CzBasis::Zx => [false, true],
        }
    }

    fn labels(self) -> [[&'static str; 2]; 2] {
        self.x_on().map(|x| if x { ["+", "-"] } else { ["0", "1"] })
    }
}

/// `|⟨out|G|in⟩|²` for the ideal gate `G = diag(1, 1, −1, 1)` (phase on
/// control `|1⟩`, target `|0⟩`), rows and columns ordered
/// `(c, t) = 00, 01, 10, 11` in the basis's labels.
pub fn ideal_truth_table(basis: CzBasis) -> Vec<Vec<f64>> {
    let s = FRAC_1_SQRT_2;
    let vec_of = |x: bool, label: usize| -> [f64; 2] {
        match (x, label) {
            (false, 0) => [1.0, 0.0],
            (false, _) => [0.0, 1.0],
            (true, 0) => [s, s],
            (true, _) => [s, -s],
        }
    };
    let [xc, xt] = basis.x_on();
    let state = |i: usize| -> [f64; 4] {
        let (c, t) = (vec_of(xc, i / 2), vec_of(xt, i % 2));
        [c[0] * t[0], c[0] * t[1], c[1] * t[0], c[1] * t[1]]
    };
    let gate = [1.0, 1.0, -1.0, 1.0];
    (0..4)
        .map(|i| {
            let inp = state(i);
            (0..4)
                .map(|o| {
                    let out = state(o);
                    // Entries are exactly 0 or 1 for these bases.
                    (0..4).map(|k| out[k] * gate[k] * inp[k]).sum::<f64>().powi(2).round()
                })
                .collect()
        })
        .collect()
}

pub fn run_cz(cfg: &ChipConfig, basis: CzBasis, seed: u64) -> Result<ExperimentResult> {
    run(cfg, basis, seed, false)
}

/// As [`run_cz`] without requiring the standard `T = 1/3` and `1/3`
/// attenuator settings.
pub fn run_cz_nonstandard(cfg: &ChipConfig, basis: CzBasis, seed: u64) -> Result<ExperimentResult> {
    run(cfg, basis, seed, true)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn run(cfg: &ChipConfig, basis: CzBasis, seed: u64, allow_nonstandard: bool) -> Result<ExperimentResult> {
    let chip = Chip::new(cfg)?;
    if !allow_nonstandard {
        if !close(cfg.dr2.transmissivity, 1.0 / 3.0) {
            return Err(validation(format!("CZ needs DR2 at T = 1/3, got {}", cfg.dr2.transmissivity)));
        }
        if !close(cfg.r1, 1.0 / 3.0) || !close(cfg.r2, 1.0 / 3.0) {
            return Err(validation(format!("CZ needs R1 = R2 = 1/3 power transmission, got {} and {}", cfg.r1, cfg.r2)));
        }
    }
    let mut result = ExperimentResult::new(ExperimentKind::Cz, "input", cfg, seed);
    let lb = cfg.logical_bins;
    let pairs = [[lb[0], lb[1]], [lb[2], lb[3]]];
    let modes = [[chip.mode(lb[0])?, chip.mode(lb[1])?], [chip.mode(lb[2])?, chip.mode(lb[3])?]];
    let x_on = basis.x_on();

    let mut circuit: Vec<ModeTransform> = Vec::new();
    let mut analysis: Option<ModeTransform> = None;
    for q in 0..2 {
        if x_on[q] {
            for (name, dr) in [("dr1", &cfg.dr1), ("dr3", &cfg.dr3)] {
                if !close(dr.transmissivity, 0.5) {
                    result.notes.push(format!("warning: {name} Hadamard is not balanced (T = {})", dr.transmissivity));
                }
            }
            circuit.push(chip.fbs(&cfg.dr1, pairs[q][0], cfg.dr1.transmissivity, cfg.dr1.phase_theta)?);
            analysis = Some(chip.fbs(&cfg.dr3, pairs[q][0], cfg.dr3.transmissivity, cfg.dr3.phase_theta)?);
        }
    }
    circuit.push(attenuator_transform(modes[0][0], cfg.r1)?);
    circuit.push(attenuator_transform(modes[1][1], cfg.r2)?);
    circuit.push(chip.fbs(&cfg.dr2, lb[1], cfg.dr2.transmissivity, cfg.dr2.phase_theta)?);
    circuit.extend(analysis);

    // X-basis `+` is prepared from the upper bin and read out on the lower.
    let inject = |q: usize, label: usize| if x_on[q] { modes[q][1 - label] } else { modes[q][label] };
    let readout = |q: usize, label: usize| modes[q][label];

    let det = chip.detection(chip.photon_linewidth_ghz())?;
    let v = chip.indistinguishability();
    let n = chip.grid.n_modes();
    let logical: [BTreeSet<usize>; 2] = [modes[0].into_iter().collect(), modes[1].into_iter().collect()];

    let points = sweep(4, |i| {
        let (mc, mt) = (inject(0, i / 2), inject(1, i % 2));
        let input = PureState::fock(Arc::clone(&chip.grid), OccupationVector::from_modes(n, &[mc, mt]))?;
        let out = apply_all(&input, &circuit)?;
        let success = coincidence_probability(&out, &logical[0], &logical[1])?;
        let p_ind = det.pair_probabilities(&out)?;
        let p_dist = det.distinguishable_pair_probabilities(
            &single_photon_distribution(&chip.grid, mc, &circuit)?,
            &single_photon_distribution(&chip.grid, mt, &circuit)?,
        );
        let singles = det.singles(&mean_occupation(&out));
        let mut probs = Vec::with_capacity(4);
        let mut channels = Vec::with_capacity(4);
        for o in 0..4 {
            let (ka, kb) = (det.detector_of(readout(0, o / 2))?, det.detector_of(readout(1, o % 2))?);
            let p = indistinguishability_mix(p_ind[(ka, kb)], p_dist[(ka, kb)], v);
            probs.push(p);
            channels.push(CoincidenceChannel { p_true: p, singles_a: singles[ka], singles_b: singles[kb] });
        }
        // Post-selected success with ideal detection, per logical outcome.
        let mut ideal_outcomes = Vec::with_capacity(4);
        for o in 0..4 {
            let a: BTreeSet<usize> = [readout(0, o / 2)].into();
            let b: BTreeSet<usize> = [readout(1, o % 2)].into();
            ideal_outcomes.push(coincidence_probability(&out, &a, &b)?);
        }
        Ok((probs, chip.sample(&channels, seed, i), success, ideal_outcomes))
    })?;

    let labels = basis.labels();
    let name = |i: usize| format!("{}{}", labels[0][i / 2], labels[1][i % 2]);
    result.sweep_values = (0..4).map(|i| i as f64).collect();
    result.channels = (0..4).map(|o| format!("out_{}", name(o))).collect();
    let mut success = Vec::new();
    let mut outcome_table = Vec::new();
    for (p, c, s, ideal) in points {
        result.probabilities.push(p);
        result.counts.push(c);
        success.push(s);
        outcome_table.push(ideal);
    }
    result.notes.push(format!("inputs in order: {}", (0..4).map(name).collect::<Vec<_>>().join(", ")));
    result.series.insert("success_probability".into(), success);
    for (o, col) in (0..4).map(|o| (o, outcome_table.iter().map(|r| r[o]).collect::<Vec<f64>>())) {
        result.series.insert(format!("postselected_{}", name(o)), col);
    }

    let ideal = ideal_truth_table(basis);
    let counts: Vec<Vec<f64>> = result.counts.iter().map(|r| r.iter().map(|c| c.coincidences() as f64).collect()).collect();
    let expected: Vec<Vec<f64>> = result
        .counts
        .iter()
        .map(|r| {
            let e: Vec<f64> = r.iter().map(|c| c.expected()).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|x| x / s).collect()
        })
        .collect();
    match truth_table_fidelity_from_counts(&counts, &ideal) {
        Ok(f) => {
            result.metrics.insert("fidelity".into(), f);
        }
        Err(e) => result.notes.push(format!("no fidelity from counts: {e}")),
    }
    match truth_table_fidelity(&expected, &ideal) {
        Ok(f) => {
            result.metrics.insert("fidelity_expected".into(), f);
        }
        Err(e) => result.notes.push(format!("no expected fidelity: {e}")),
    }
    Ok(result)
}

/// Both complementary truth tables and the process-fidelity bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzCharacterization {
    pub xz: ExperimentResult,
    pub zx: ExperimentResult,
    /// From sampled counts.
    pub bound: HofmannBound,
    /// From expected counts.
    pub bound_expected: HofmannBound,
}

pub fn cz_characterization(cfg: &ChipConfig, seed: u64, allow_nonstandard: bool) -> Result<CzCharacterization> {
    let xz = run(cfg, CzBasis::Xz, crate::counting::derive_seed(seed, 0), allow_nonstandard)?;
    let zx = run(cfg, CzBasis::Zx, crate::counting::derive_seed(seed, 1), allow_nonstandard)?;
    let get = |r: &ExperimentResult, basis: &str, name: &str| -> Result<MetricResult> {
        r.metrics.get(name).cloned().ok_or_else(|| domain(format!("{basis} truth table has no {name}")))
    };
    let bound = hofmann_bound_metric(&get(&xz, "XZ", "fidelity")?, &get(&zx, "ZX", "fidelity")?);
    let bound_expected =
        hofmann_bound_metric(&get(&xz, "XZ", "fidelity_expected")?, &get(&zx, "ZX", "fidelity_expected")?);
    Ok(CzCharacterization { xz, zx, bound, bound_expected })
}

impl CzCharacterization {
    pub fn bound_metric(&self) -> MetricResult {
        MetricResult { value: self.bound.value, sigma: self.bound.sigma, method: "F_XZ + F_ZX - 1".into() }
    }
}
