use serde::{Deserialize, Serialize};

use super::{single_photon_distribution, sweep, Chip, ChipConfig, ExperimentKind, ExperimentResult};
use crate::counting::{visibility_minmax, CoincidenceChannel, MetricResult, Uncertainty};
use crate::elements::phase_transform;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FmziMode {
    /// CW laser light; intensities without shot noise.
    Classical,
    /// Heralded single photons; counts against the herald.
    Quantum,
}

/// Frequency Mach-Zehnder: DR1 f-BS, phase `φ` on the upper bin, DR3 f-BS,
/// filters. Light enters the lower or the upper interferometer bin; port 1
/// and port 2 are the detectors on those bins. Ideal fringes are
/// `(1 ∓ cos φ)/2`.
pub fn run_fmzi(cfg: &ChipConfig, phases: &[f64], mode: FmziMode, seed: u64) -> Result<ExperimentResult> {
    let chip = Chip::new(cfg)?;
    let (lo, hi) = (cfg.logical_bins[0], cfg.logical_bins[1]);
    let (m_lo, m_hi) = (chip.mode(lo)?, chip.mode(hi)?);
    let mut result = ExperimentResult::new(ExperimentKind::Fmzi, "phase_rad", cfg, seed);
    for (name, dr) in [("dr1", &cfg.dr1), ("dr3", &cfg.dr3)] {
        if (dr.transmissivity - 0.5).abs() > 1e-9 {
            result.notes.push(format!("warning: {name} is not balanced (T = {})", dr.transmissivity));
        }
    }
    let linewidth = match mode {
        FmziMode::Classical => 0.0,
        FmziMode::Quantum => chip.photon_linewidth_ghz(),
    };
    let det = chip.detection(linewidth)?;
    let ports = [det.detector_of(m_lo)?, det.detector_of(m_hi)?];
    let dr1 = chip.fbs(&cfg.dr1, lo, cfg.dr1.transmissivity, cfg.dr1.phase_theta)?;
    let dr3 = chip.fbs(&cfg.dr3, lo, cfg.dr3.transmissivity, cfg.dr3.phase_theta)?;

    let points = sweep(phases.len(), |i| {
        let circuit = [dr1.clone(), phase_transform(m_hi, phases[i])?, dr3.clone()];
        let mut probs = Vec::with_capacity(4);
        for input in [m_lo, m_hi] {
            let clicks = det.single_photon(&single_photon_distribution(&chip.grid, input, &circuit)?);
            probs.extend(ports.iter().map(|&k| clicks[k]));
        }
        let counts = match mode {
            FmziMode::Classical => Vec::new(),
            FmziMode::Quantum => {
                // Herald (idler) is one photon per pair; the signal singles
                // follow the fringe.
                let channels: Vec<CoincidenceChannel> =
                    probs.iter().map(|&p| CoincidenceChannel { p_true: p, singles_a: 1.0, singles_b: p }).collect();
                chip.sample(&channels, seed, i)
            }
        };
        Ok((probs, counts))
    })?;

    result.sweep_values = phases.to_vec();
    result.channels = ["in_lo_port1", "in_lo_port2", "in_hi_port1", "in_hi_port2"].map(String::from).to_vec();
    for (p, c) in points {
        result.probabilities.push(p);
        result.counts.push(c);
    }
    let mut per_curve = Vec::with_capacity(4);
    for (c, name) in result.channels.clone().iter().enumerate() {
        let curve: Vec<f64> = result.probabilities.iter().map(|p| p[c]).collect();
        result.series.insert(name.clone(), curve.clone());
        if phases.len() < 2 {
            continue;
        }
        let v = match mode {
            FmziMode::Classical => visibility_minmax(&curve, Uncertainty::None)?,
            FmziMode::Quantum => visibility_minmax(&result.coincidence_series(c), Uncertainty::Poisson)?,
        };
        result.metrics.insert(format!("visibility_{name}"), v.clone());
        per_curve.push(v);
    }
    if !per_curve.is_empty() {
        let n = per_curve.len() as f64;
        result.metrics.insert(
            "visibility_ave".into(),
            MetricResult {
                value: per_curve.iter().map(|m| m.value).sum::<f64>() / n,
                sigma: per_curve.iter().map(|m| m.sigma * m.sigma).sum::<f64>().sqrt() / n,
                method: "mean of per-port minmax visibilities".into(),
            },
        );
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn phases() -> Vec<f64> {
        (0..=72).map(|k| k as f64 * 2.0 * PI / 72.0).collect()
    }

    #[test]
    fn ideal_fringes() {
        let cfg = ChipConfig::ideal(ExperimentKind::Fmzi);
        let r = run_fmzi(&cfg, &phases(), FmziMode::Classical, 1).unwrap();
        for (phi, p) in r.sweep_values.iter().zip(&r.probabilities) {
            assert!((p[0] - (1.0 - phi.cos()) / 2.0).abs() < 1e-12);
            assert!((p[1] - (1.0 + phi.cos()) / 2.0).abs() < 1e-12);
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
            assert!((p[2] + p[3] - 1.0).abs() < 1e-12);
        }
        assert!((r.metric("visibility_ave").unwrap() - 1.0).abs() < 1e-9);
        assert!(r.notes.is_empty());
    }

    #[test]
    fn ports_sum_to_total_efficiency_with_lossy_splitters() {
        let mut cfg = ChipConfig::ideal(ExperimentKind::Fmzi);
        cfg.imperfections.efficiency = true;
        let r = run_fmzi(&cfg, &phases(), FmziMode::Classical, 1).unwrap();
        let eta = cfg.global_efficiency * cfg.global_efficiency;
        for p in &r.probabilities {
            assert!((p[0] + p[1] - eta).abs() < 1e-12);
        }
    }

    #[test]
    fn unbalanced_splitter_is_annotated() {
        let mut cfg = ChipConfig::ideal(ExperimentKind::Fmzi);
        cfg.dr1.transmissivity = 0.6;
        let r = run_fmzi(&cfg, &phases(), FmziMode::Classical, 1).unwrap();
        assert_eq!(r.notes.len(), 1);
        assert!(r.metric("visibility_ave").unwrap() < 1.0);
    }

    #[test]
    fn quantum_mode_is_seed_deterministic() {
        let cfg = ChipConfig::default();
        let a = run_fmzi(&cfg, &phases(), FmziMode::Quantum, 9).unwrap();
        let b = run_fmzi(&cfg, &phases(), FmziMode::Quantum, 9).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.counts.len(), phases().len());
        assert_eq!(a.counts[0].len(), 4);
    }
}
