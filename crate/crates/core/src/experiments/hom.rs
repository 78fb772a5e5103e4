use std::sync::Arc;

use super::{mean_occupation, single_photon_distribution, sweep, Chip, ChipConfig, ExperimentKind, ExperimentResult};
use crate::counting::{indistinguishability_mix, visibility_hom, CoincidenceChannel, MetricResult};
use crate::error::{validation, Result};
use crate::fock::{apply_transform, OccupationVector, PureState};

/// `2R(1−R) / (R² + (1−R)²)`.
pub fn hom_visibility_law(r: f64) -> f64 {
    2.0 * r * (1.0 - r) / (r * r + (1.0 - r) * (1.0 - r))
}

/// Photon pair in the two interferometer bins through DR3 at `T = 1 − R`.
///
/// Per reflectivity two channels are recorded: the coincidence with the
/// photons' actual indistinguishability `v_indist` and the fully
/// distinguishable reference. `V = (N_dist − N)/N_dist` without background
/// subtraction.
pub fn run_hom(cfg: &ChipConfig, reflectivities: &[f64], v_indist: f64, seed: u64) -> Result<ExperimentResult> {
    let chip = Chip::new(cfg)?;
    if let Some(r) = reflectivities.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(validation(format!("reflectivity {r} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&v_indist) {
        return Err(validation(format!("indistinguishability {v_indist} outside [0, 1]")));
    }
    let (lo, hi) = (cfg.logical_bins[0], cfg.logical_bins[1]);
    let (m_lo, m_hi) = (chip.mode(lo)?, chip.mode(hi)?);
    let det = chip.detection(chip.photon_linewidth_ghz())?;
    let (ka, kb) = (det.detector_of(m_lo)?, det.detector_of(m_hi)?);
    let n = chip.grid.n_modes();
    let input = PureState::fock(Arc::clone(&chip.grid), OccupationVector::from_modes(n, &[m_lo, m_hi]))?;

    let points = sweep(reflectivities.len(), |i| {
        let bs = chip.fbs(&cfg.dr3, lo, 1.0 - reflectivities[i], cfg.dr3.phase_theta)?;
        let out = apply_transform(&input, &bs)?;
        let p_ind = det.pair_probabilities(&out)?[(ka, kb)];
        let circuit = [bs];
        let p_dist = det.distinguishable_pair_probabilities(
            &single_photon_distribution(&chip.grid, m_lo, &circuit)?,
            &single_photon_distribution(&chip.grid, m_hi, &circuit)?,
        )[(ka, kb)];
        let p = indistinguishability_mix(p_ind, p_dist, v_indist);
        let singles = det.singles(&mean_occupation(&out));
        let channels = [
            CoincidenceChannel { p_true: p, singles_a: singles[ka], singles_b: singles[kb] },
            CoincidenceChannel { p_true: p_dist, singles_a: singles[ka], singles_b: singles[kb] },
        ];
        Ok((vec![p, p_dist], chip.sample(&channels, seed, i)))
    })?;

    let mut result = ExperimentResult::new(ExperimentKind::Hom, "reflectivity", cfg, seed);
    result.sweep_values = reflectivities.to_vec();
    result.channels = vec!["coincidence".into(), "distinguishable".into()];
    let (mut vis, mut vis_expected, mut p_cc) = (Vec::new(), Vec::new(), Vec::new());
    for (p, c) in points {
        let n_max = c[1].coincidences() as f64;
        vis.push(if n_max > 0.0 { visibility_hom(n_max, c[0].coincidences() as f64)?.value } else { 0.0 });
        vis_expected.push(if c[1].expected() > 0.0 { visibility_hom(c[1].expected(), c[0].expected())?.value } else { 0.0 });
        p_cc.push(p[0]);
        result.probabilities.push(p);
        result.counts.push(c);
    }
    result.series.insert("p_cc".into(), p_cc);
    result.series.insert("visibility".into(), vis);
    result.series.insert("visibility_expected".into(), vis_expected);

    // Headline figure at the reflectivity closest to balanced.
    if let Some(i) = (0..reflectivities.len()).min_by(|&a, &b| {
        (reflectivities[a] - 0.5).abs().total_cmp(&(reflectivities[b] - 0.5).abs())
    }) {
        let c = &result.counts[i];
        if c[1].coincidences() > 0 {
            let mut m = visibility_hom(c[1].coincidences() as f64, c[0].coincidences() as f64)?;
            m.method = format!("hom-poisson at R = {}", reflectivities[i]);
            result.metrics.insert("visibility_hom".into(), m);
        }
        result.metrics.insert(
            "visibility_hom_expected".into(),
            MetricResult { value: result.series["visibility_expected"][i], sigma: 0.0, method: "expected counts".into() },
        );
    }
    Ok(result)
}
