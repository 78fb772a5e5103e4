use serde::{Deserialize, Serialize};

use super::{Chip, ChipConfig, ExperimentKind, ExperimentResult};
use crate::counting::MetricResult;
use crate::elements::filter_response;
use crate::error::{domain, Result};
use crate::fit::fit_doublet;
use crate::resonator::{dr_through_spectrum, voltage_for_reflectivity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectroscopyTarget {
    Dr1,
    Dr2,
    Dr3,
    Filters,
}

fn metric(value: f64, method: &str) -> MetricResult {
    MetricResult { value, sigma: 0.0, method: method.into() }
}

/// Laser scan across a DR doublet (through port, then fitted) or across the
/// filter comb (drop and through of R3..R6). Detuning in GHz, relative to the
/// DR's cold resonance or to the lowest computational bin.
pub fn run_spectroscopy(cfg: &ChipConfig, scan: &[f64], target: SpectroscopyTarget) -> Result<ExperimentResult> {
    let chip = Chip::new(cfg)?;
    if scan.len() < 2 {
        return Err(domain("scan needs at least two points"));
    }
    let mut result = ExperimentResult::new(ExperimentKind::Spectroscopy, "detuning_ghz", cfg, 0);
    result.sweep_values = scan.to_vec();
    result.counts = vec![Vec::new(); scan.len()];
    match target {
        SpectroscopyTarget::Dr1 | SpectroscopyTarget::Dr2 | SpectroscopyTarget::Dr3 => {
            let dr = match target {
                SpectroscopyTarget::Dr1 => &cfg.dr1,
                SpectroscopyTarget::Dr2 => &cfg.dr2,
                _ => &cfg.dr3,
            };
            let t = dr_through_spectrum(&dr.resonator, scan);
            result.channels = vec!["transmission".into()];
            result.probabilities = t.iter().map(|&x| vec![x]).collect();
            result.series.insert("transmission".into(), t.clone());
            result.metrics.insert("eo_coeff_ghz_per_v".into(), metric(dr.resonator.eo_coeff_ghz_per_v, "configured"));
            result.metrics.insert(
                "drive_voltage_v".into(),
                metric(voltage_for_reflectivity(&dr.drive.calib, 1.0 - dr.transmissivity)?, "calibration curve inverse"),
            );
            match fit_doublet(scan, &t) {
                Ok(fit) => {
                    for (name, v) in [
                        ("two_g_ghz", fit.two_g),
                        ("center_ghz", fit.center_ghz),
                        ("kappa1_ghz", fit.linewidths.0),
                        ("kappa2_ghz", fit.linewidths.1),
                        ("kappa_ex_ghz", fit.kappa_ex),
                        ("thermal_detune_ghz", fit.thermal_detune),
                        ("dip_depth_lo", fit.dip_depths.0),
                        ("dip_depth_hi", fit.dip_depths.1),
                        ("fit_rms_residual", fit.residual),
                    ] {
                        result.metrics.insert(name.into(), metric(v, "doublet fit"));
                    }
                }
                Err(e) => result.notes.push(format!("fit failed: {e}")),
            }
        }
        SpectroscopyTarget::Filters => {
            let spacing = chip.grid.spacing_ghz();
            let filters = cfg.filters();
            for (k, f) in filters.iter().enumerate() {
                let (drop, through): (Vec<f64>, Vec<f64>) = scan
                    .iter()
                    .map(|&x| {
                        let (d, t) = filter_response(f, x - k as f64 * spacing);
                        (d.norm_sqr(), t.norm_sqr())
                    })
                    .unzip();
                result.series.insert(format!("r{}_drop", k + 3), drop);
                result.series.insert(format!("r{}_through", k + 3), through);
                let peak = filter_response(f, 0.0).0.norm_sqr();
                let next = filter_response(f, spacing).0.norm_sqr();
                result.metrics.insert(format!("r{}_adjacent_crosstalk", k + 3), metric(next / peak, "Lorentzian drop ratio"));
                result.metrics.insert(format!("r{}_peak_drop", k + 3), metric(peak, "drop power at resonance"));
            }
            result.channels = (0..4).map(|k| format!("r{}_drop", k + 3)).collect();
            result.probabilities =
                (0..scan.len()).map(|i| (0..4).map(|k| result.series[&format!("r{}_drop", k + 3)][i]).collect()).collect();
            result.metrics.insert("adjacent_crosstalk".into(), result.metrics["r3_adjacent_crosstalk"].clone());
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan() -> Vec<f64> {
        (0..=800).map(|i| -25.0 + i as f64 / 16.0).collect()
    }

    #[test]
    fn doublet_is_fitted() {
        let mut cfg = ChipConfig::default();
        cfg.dr1.resonator.g_ghz = 13.49 / 2.0;
        let r = run_spectroscopy(&cfg, &scan(), SpectroscopyTarget::Dr1).unwrap();
        assert!((r.metric("two_g_ghz").unwrap() - 13.49).abs() < 0.07);
        assert_eq!(r.metric("eo_coeff_ghz_per_v"), Some(0.226));
    }

    #[test]
    fn eo_slopes_are_echoed() {
        let cfg = ChipConfig::default();
        for (t, want) in [(SpectroscopyTarget::Dr1, 0.226), (SpectroscopyTarget::Dr2, 0.255), (SpectroscopyTarget::Dr3, 0.222)] {
            let r = run_spectroscopy(&cfg, &scan(), t).unwrap();
            assert_eq!(r.metric("eo_coeff_ghz_per_v"), Some(want));
        }
    }

    #[test]
    fn filter_comb_crosstalk() {
        let cfg = ChipConfig::default();
        let r = run_spectroscopy(&cfg, &scan(), SpectroscopyTarget::Filters).unwrap();
        assert!((r.metric("adjacent_crosstalk").unwrap() - 0.0233).abs() < 5e-4);
        assert_eq!(r.probabilities[0].len(), 4);
    }
}
