//! Coupled double-resonator (DR) spectra, electro-optic tuning and the
//! drive-to-splitting calibration curve.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Parameters of a bus-coupled ring (1) coupled to an inner ring (2).
/// Rates are energy decay rates in GHz, so `kappa1` is the FWHM of ring 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DrParams {
    pub omega0_thz: f64,
    /// Inter-ring field coupling; the doublet splitting is `2g`.
    pub g_ghz: f64,
    pub kappa1_ghz: f64,
    pub kappa_ex_ghz: f64,
    pub kappa2_ghz: f64,
    pub eo_coeff_ghz_per_v: f64,
    /// Detuning of ring 2 relative to ring 1.
    pub thermal_detune_ghz: f64,
}

impl Default for DrParams {
    fn default() -> Self {
        DrParams {
            omega0_thz: 192.026995,
            g_ghz: 6.475,
            kappa1_ghz: 2.0,
            kappa_ex_ghz: 1.5,
            kappa2_ghz: 2.0,
            eo_coeff_ghz_per_v: 0.226,
            thermal_detune_ghz: 0.0,
        }
    }
}

impl DrParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [self.g_ghz, self.kappa1_ghz, self.kappa_ex_ghz, self.kappa2_ghz];
        if rates.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(validation("DR rates must be positive and finite"));
        }
        if self.kappa_ex_ghz > self.kappa1_ghz {
            return Err(validation(format!(
                "bus coupling {} GHz exceeds the total linewidth {} GHz",
                self.kappa_ex_ghz, self.kappa1_ghz
            )));
        }
        Ok(())
    }

    /// Complex through-port amplitude at detuning `delta_ghz` from `omega0`.
    pub fn through_amplitude(&self, delta_ghz: f64) -> Complex64 {
        let inner = Complex64::new(self.kappa2_ghz / 2.0, delta_ghz - self.thermal_detune_ghz);
        let denom = Complex64::new(self.kappa1_ghz / 2.0, delta_ghz) + self.g_ghz * self.g_ghz / inner;
        Complex64::new(1.0, 0.0) - self.kappa_ex_ghz / denom
    }
}

/// `|t(δ)|²` of the coupled-mode through port on each detuning.
pub fn dr_through_spectrum(p: &DrParams, detunings_ghz: &[f64]) -> Vec<f64> {
    detunings_ghz.iter().map(|&d| p.through_amplitude(d).norm_sqr()).collect()
}

/// Local minima of the through spectrum within `±span_ghz`, located on a
/// fine grid and refined by parabolic interpolation.
pub fn dip_positions(p: &DrParams, span_ghz: f64) -> Vec<f64> {
    let step = 1e-3;
    let n = (2.0 * span_ghz / step).ceil() as usize + 1;
    let xs: Vec<f64> = (0..n).map(|i| -span_ghz + i as f64 * step).collect();
    let ys = dr_through_spectrum(p, &xs);
    let mut dips = Vec::new();
    for i in 1..n - 1 {
        if ys[i] < ys[i - 1] && ys[i] <= ys[i + 1] {
            let (a, b, c) = (ys[i - 1], ys[i], ys[i + 1]);
            let curv = a - 2.0 * b + c;
            let shift = if curv > 0.0 { 0.5 * (a - c) / curv } else { 0.0 };
            dips.push(xs[i] + shift * step);
        }
    }
    dips
}

/// Resonance shift under a DC bias, `Δν = coeff · V`.
pub fn eo_resonance_shift(voltage_v: f64, coeff_ghz_per_v: f64) -> f64 {
    coeff_ghz_per_v * voltage_v
}

/// Conversion curve of the driven DR: `R = r_peak · 4C/(1+C)²`, `C = (βV)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibCurve {
    pub beta_per_v: f64,
    pub r_peak: f64,
}

impl Default for CalibCurve {
    fn default() -> Self {
        CalibCurve { beta_per_v: 0.1, r_peak: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveSpec {
    pub drive_freq_ghz: f64,
    pub drive_voltage_v: f64,
    pub drive_phase_rad: f64,
    pub calib: CalibCurve,
}

impl Default for DriveSpec {
    fn default() -> Self {
        DriveSpec { drive_freq_ghz: 12.95, drive_voltage_v: 0.0, drive_phase_rad: 0.0, calib: CalibCurve::default() }
    }
}

impl DriveSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.drive_voltage_v >= 0.0 && self.drive_voltage_v.is_finite()) {
            return Err(validation(format!("drive voltage {} must be non-negative", self.drive_voltage_v)));
        }
        if !(self.calib.r_peak > 0.0 && self.calib.r_peak <= 1.0) {
            return Err(validation(format!("peak reflectivity {} outside (0, 1]", self.calib.r_peak)));
        }
        if !(self.calib.beta_per_v > 0.0) {
            return Err(validation("conversion slope must be positive"));
        }
        Ok(())
    }
}

/// `(T, R)` produced by the drive; `R + T = 1` and `R ≤ r_peak`.
pub fn drive_to_splitting(d: &DriveSpec) -> (f64, f64) {
    let c = (d.calib.beta_per_v * d.drive_voltage_v).powi(2);
    let r = d.calib.r_peak * 4.0 * c / ((1.0 + c) * (1.0 + c));
    (1.0 - r, r)
}

/// Smallest drive voltage reaching reflectivity `r` on the rising branch.
pub fn voltage_for_reflectivity(calib: &CalibCurve, r: f64) -> Result<f64> {
    if !(0.0..=calib.r_peak).contains(&r) {
        return Err(validation(format!("reflectivity {r} unreachable with peak {}", calib.r_peak)));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let x = r / calib.r_peak;
    let c = (2.0 - x - 2.0 * (1.0 - x).max(0.0).sqrt()) / x;
    Ok(c.sqrt() / calib.beta_per_v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(span: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn doublet_separation_tracks_two_g() {
        let p = DrParams { g_ghz: 6.745, kappa_ex_ghz: 2.0, ..DrParams::default() };
        let dips = dip_positions(&p, 20.0);
        assert_eq!(dips.len(), 2);
        let sep = dips[1] - dips[0];
        assert!((sep - 13.49).abs() / 13.49 < 0.02, "separation {sep}");
    }

    #[test]
    fn critically_coupled_single_ring_reaches_zero() {
        // Critical coupling is κ_ex = κ₁/2 in this rate convention.
        let p = DrParams { g_ghz: 1e-9, kappa_ex_ghz: 1.0, ..DrParams::default() };
        let t = dr_through_spectrum(&p, &[0.0])[0];
        assert!(t < 1e-12);
        let dips = dip_positions(&p, 10.0);
        assert_eq!(dips.len(), 1);
        assert!(dips[0].abs() < 1e-3);
        // κ_ex = κ₁ is the lossless all-pass case.
        let p = DrParams { kappa_ex_ghz: 2.0, ..p };
        assert!((dr_through_spectrum(&p, &[0.0])[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_thermal_detuning_leaves_one_deep_and_one_shallow_dip() {
        let p = DrParams { g_ghz: 2.0, kappa_ex_ghz: 1.0, thermal_detune_ghz: 30.0, ..DrParams::default() };
        let dips = dip_positions(&p, 45.0);
        assert_eq!(dips.len(), 2);
        let depth = dr_through_spectrum(&p, &dips);
        assert!(dips[0].abs() < 0.5, "deep dip near zero, got {}", dips[0]);
        assert!((dips[1] - 30.0).abs() < 0.5);
        assert!(depth[0] < 0.05 && depth[1] > 0.8);
    }

    #[test]
    fn symmetric_at_zero_detuning() {
        let p = DrParams::default();
        let xs = grid(30.0, 601);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let a = dr_through_spectrum(&p, &xs);
        let b = dr_through_spectrum(&p, &neg);
        let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-9);
    }

    #[test]
    fn eo_shift_examples() {
        assert_eq!(eo_resonance_shift(0.0, 0.226), 0.0);
        assert!((eo_resonance_shift(10.0, 0.226) - 2.26).abs() < 1e-12);
        assert!((eo_resonance_shift(-5.0, 0.222) + 1.11).abs() < 1e-12);
    }

    #[test]
    fn drive_calibration_examples() {
        let mut d = DriveSpec::default();
        assert_eq!(drive_to_splitting(&d), (1.0, 0.0));
        d.drive_voltage_v = 1.0 / d.calib.beta_per_v;
        let (_, r) = drive_to_splitting(&d);
        assert!((r - d.calib.r_peak).abs() < 1e-15);
        let d = DriveSpec { drive_voltage_v: 0.5, calib: CalibCurve { beta_per_v: 1.0, r_peak: 1.0 }, ..d };
        let (t, r) = drive_to_splitting(&d);
        assert!((r - 0.64).abs() < 1e-15);
        assert_eq!(t + r, 1.0);
    }

    #[test]
    fn inverse_calibration() {
        let calib = CalibCurve { beta_per_v: 0.08, r_peak: 0.9 };
        for r in [0.0, 0.1, 0.5, 2.0 / 3.0, 0.9] {
            let v = voltage_for_reflectivity(&calib, r).unwrap();
            let d = DriveSpec { drive_voltage_v: v, calib, ..DriveSpec::default() };
            assert!((drive_to_splitting(&d).1 - r).abs() < 1e-9);
            assert!(v <= 1.0 / calib.beta_per_v + 1e-9);
        }
        assert!(voltage_for_reflectivity(&calib, 0.95).is_err());
    }

    #[test]
    fn validation() {
        assert!(DrParams::default().validate().is_ok());
        assert!(DrParams { kappa_ex_ghz: 3.0, ..DrParams::default() }.validate().is_err());
        assert!(DrParams { g_ghz: 0.0, ..DrParams::default() }.validate().is_err());
        assert!(DriveSpec { drive_voltage_v: -1.0, ..DriveSpec::default() }.validate().is_err());
    }
}
