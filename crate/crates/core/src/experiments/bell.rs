use std::sync::Arc;

use super::{mean_occupation, sweep, Chip, ChipConfig, ExperimentKind, ExperimentResult};
use crate::counting::{make_source_state, visibility_minmax, CoincidenceChannel, MetricResult, SourceKind, Uncertainty};
use crate::error::Result;
use crate::fock::{apply_all, PureState};

/// Bell state `(|f1 f4⟩ + |f2 f3⟩)/√2` projected by DR1 on `{f1, f2}` and DR2
/// on `{f3, f4}`, with the swept phase on DR2's drive (`θ = φ`).
///
/// Outcome signs: `+_A = f1`, `−_A = f2`, `+_B = f3`, `−_B = f4`, giving
/// `p_±± = (1 + cos φ)/4` and `p_±∓ = (1 − cos φ)/4` ideally. Reduced
/// coherence `v` between the two pair terms mixes in the dephased state.
pub fn run_bell(cfg: &ChipConfig, phases: &[f64], seed: u64) -> Result<ExperimentResult> {
    let chip = Chip::new(cfg)?;
    let mut result = ExperimentResult::new(ExperimentKind::Bell, "phase_rad", cfg, seed);
    for (name, dr) in [("dr1", &cfg.dr1), ("dr2", &cfg.dr2)] {
        if (dr.transmissivity - 0.5).abs() > 1e-9 {
            result.notes.push(format!("warning: {name} is not balanced (T = {})", dr.transmissivity));
        }
    }
    let [f1, f2, f3, f4] = cfg.logical_bins;
    let source = crate::counting::SourceSpec { kind: SourceKind::Bell, bell_bins: cfg.logical_bins, ..cfg.source.clone() };
    let coherent = make_source_state(&source, Arc::clone(&chip.grid))?;
    let terms: Vec<PureState> = coherent
        .amplitudes()
        .keys()
        .map(|occ| PureState::fock(Arc::clone(&chip.grid), occ.clone()))
        .collect::<Result<_>>()?;
    let v = chip.indistinguishability();
    let det = chip.detection(chip.photon_linewidth_ghz())?;
    let k = |b: i32| -> Result<usize> { det.detector_of(chip.mode(b)?) };
    let outcomes = [(k(f1)?, k(f3)?), (k(f1)?, k(f4)?), (k(f2)?, k(f3)?), (k(f2)?, k(f4)?)];
    let dr1 = chip.fbs(&cfg.dr1, f1, cfg.dr1.transmissivity, cfg.dr1.phase_theta)?;

    let points = sweep(phases.len(), |i| {
        let circuit = [dr1.clone(), chip.fbs(&cfg.dr2, f3, cfg.dr2.transmissivity, phases[i])?];
        let out = apply_all(&coherent, &circuit)?;
        let p_coh = det.pair_probabilities(&out)?;
        let mut p_mix = nalgebra::DMatrix::zeros(p_coh.nrows(), p_coh.ncols());
        for t in &terms {
            p_mix += det.pair_probabilities(&apply_all(t, &circuit)?)? * 0.5;
        }
        let singles = det.singles(&mean_occupation(&out));
        let probs: Vec<f64> = outcomes.iter().map(|&(a, b)| v * p_coh[(a, b)] + (1.0 - v) * p_mix[(a, b)]).collect();
        let channels: Vec<CoincidenceChannel> = outcomes
            .iter()
            .zip(&probs)
            .map(|(&(a, b), &p)| CoincidenceChannel { p_true: p, singles_a: singles[a], singles_b: singles[b] })
            .collect();
        Ok((probs, chip.sample(&channels, seed, i)))
    })?;

    result.sweep_values = phases.to_vec();
    result.channels = ["pp", "pm", "mp", "mm"].map(String::from).to_vec();
    for (p, c) in points {
        result.probabilities.push(p);
        result.counts.push(c);
    }
    let mut vis = Vec::new();
    let mut vis_expected = Vec::new();
    for c in 0..4 {
        let counts = result.coincidence_series(c);
        let expected: Vec<f64> = result.counts.iter().map(|r| r[c].expected()).collect();
        if phases.len() >= 2 {
            let m = visibility_minmax(&counts, Uncertainty::Poisson)?;
            result.metrics.insert(format!("visibility_{}", result.channels[c]), m.clone());
            vis.push(m);
            vis_expected.push(visibility_minmax(&expected, Uncertainty::None)?.value);
        }
    }
    if !vis.is_empty() {
        let n = vis.len() as f64;
        result.metrics.insert(
            "visibility_ave".into(),
            MetricResult {
                value: vis.iter().map(|m| m.value).sum::<f64>() / n,
                sigma: vis.iter().map(|m| m.sigma * m.sigma).sum::<f64>().sqrt() / n,
                method: "mean of the four fringe visibilities".into(),
            },
        );
        result.metrics.insert(
            "visibility_ave_expected".into(),
            MetricResult { value: vis_expected.iter().sum::<f64>() / n, sigma: 0.0, method: "expected counts".into() },
        );
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ideal_fringes() {
        let cfg = ChipConfig::ideal(ExperimentKind::Bell);
        let phases: Vec<f64> = (0..=36).map(|k| k as f64 * PI / 18.0).collect();
        let r = run_bell(&cfg, &phases, 4).unwrap();
        assert!(r.notes.is_empty());
        for (phi, p) in phases.iter().zip(&r.probabilities) {
            let (c, a) = ((1.0 + phi.cos()) / 4.0, (1.0 - phi.cos()) / 4.0);
            for (got, want) in p.iter().zip([c, a, a, c]) {
                assert!((got - want).abs() < 1e-10);
            }
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        assert!((r.metric("visibility_ave_expected").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dephasing_sets_visibility() {
        let mut cfg = ChipConfig::ideal(ExperimentKind::Bell);
        cfg.imperfections.distinguishability = true;
        cfg.source.indistinguishability = 0.9;
        let r = run_bell(&cfg, &[0.0, PI], 4).unwrap();
        assert!((r.metric("visibility_ave_expected").unwrap() - 0.9).abs() < 1e-12);
    }
}
