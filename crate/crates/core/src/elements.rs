//! Physical elements expressed as [`ModeTransform`]s.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, validation, Result};
use crate::fock::ModeTransform;
use crate::grid::BinGrid;

/// Measured higher-order sideband suppression of the driven doublet, dB.
pub const DEFAULT_SIDEBAND_SUPPRESSION_DB: f64 = 24.0;

/// Frequency beam splitter between two adjacent bins, with first-order
/// sideband leakage into the next bins out.
///
/// Suppression is taken relative to the converted (reflected) power.
#[derive(Debug, Clone, PartialEq)]
pub struct FbsSpec {
    pub bin_lo: usize,
    pub bin_hi: usize,
    pub sideband_lo: usize,
    pub sideband_hi: usize,
    pub transmissivity: f64,
    pub phase_theta: f64,
    pub efficiency: f64,
    /// `f64::INFINITY` disables leakage.
    pub sideband_suppression_db: f64,
}

impl FbsSpec {
    /// Resolves the four modes around the doublet whose lower bin has grid
    /// index `lo_index`.
    pub fn on_grid(grid: &BinGrid, lo_index: i32, transmissivity: f64, phase_theta: f64) -> Result<Self> {
        Ok(FbsSpec {
            bin_lo: grid.mode_of(lo_index)?,
            bin_hi: grid.mode_of(lo_index + 1)?,
            sideband_lo: grid.mode_of(lo_index - 1)?,
            sideband_hi: grid.mode_of(lo_index + 2)?,
            transmissivity,
            phase_theta,
            efficiency: 1.0,
            sideband_suppression_db: f64::INFINITY,
        })
    }

    pub fn with_efficiency(mut self, eta: f64) -> Self {
        self.efficiency = eta;
        self
    }

    pub fn with_suppression_db(mut self, s: f64) -> Self {
        self.sideband_suppression_db = s;
        self
    }

    pub fn reflectivity(&self) -> f64 {
        1.0 - self.transmissivity
    }

    /// Power fraction of an input photon that leaks to its outer sideband,
    /// before column renormalisation: `R * 10^(-S/10)`.
    pub fn leakage_power(&self) -> f64 {
        if self.sideband_suppression_db.is_infinite() {
            0.0
        } else {
            self.reflectivity() * 10f64.powf(-self.sideband_suppression_db / 10.0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.transmissivity) {
            return Err(validation(format!("transmissivity {} outside [0, 1]", self.transmissivity)));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(validation(format!("efficiency {} outside (0, 1]", self.efficiency)));
        }
        if !(self.sideband_suppression_db >= 0.0) {
            return Err(validation(format!(
                "sideband suppression {} dB must be non-negative",
                self.sideband_suppression_db
            )));
        }
        if !self.phase_theta.is_finite() {
            return Err(validation("f-BS phase must be finite"));
        }
        let m = [self.sideband_lo, self.bin_lo, self.bin_hi, self.sideband_hi];
        if (0..4).any(|i| (i + 1..4).any(|j| m[i] == m[j])) {
            return Err(config("f-BS bins and sidebands must be four distinct modes"));
        }
        Ok(())
    }
}

/// The beam-splitter matrix
/// `[[√T, e^{iθ}√R], [−e^{−iθ}√R, √T]]` scaled by `√η`, embedded in the modes
/// `[sideband_lo, bin_lo, bin_hi, sideband_hi]`.
///
/// Each doublet input leaks amplitude `ε = sqrt(R 10^{-S/10})` into its outer
/// sideband; the remaining two columns complete the matrix to `√η` times a
/// unitary, so sideband inputs couple back into the doublet reciprocally.
pub fn fbs_transform(spec: &FbsSpec) -> Result<ModeTransform> {
    spec.validate()?;
    let t = spec.transmissivity.sqrt();
    let r = spec.reflectivity().sqrt();
    let e = spec.leakage_power().sqrt();
    let s = spec.efficiency.sqrt() / (1.0 + e * e).sqrt();
    let z = Complex64::new(0.0, 0.0);
    let re = |x: f64| Complex64::new(x, 0.0);
    let fwd = Complex64::from_polar(r, spec.phase_theta);
    let back = -Complex64::from_polar(r, -spec.phase_theta);
    // Columns: inputs sideband_lo, bin_lo, bin_hi, sideband_hi.
    #[rustfmt::skip]
    let cols = [
        [re(1.0), re(-e * t), -back * e, z],
        [re(e), re(t), back, z],
        [z, fwd, re(t), re(e)],
        [z, -fwd * e, re(-e * t), re(1.0)],
    ];
    let m = DMatrix::from_fn(4, 4, |row, col| cols[col][row] * s);
    ModeTransform::new(vec![spec.sideband_lo, spec.bin_lo, spec.bin_hi, spec.sideband_hi], m)
}

/// Add-drop microring filter with a Lorentzian comb response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterParams {
    pub resonance_offset_ghz: f64,
    pub linewidth_fwhm_ghz: f64,
    pub fsr_ghz: f64,
    pub drop_efficiency: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams { resonance_offset_ghz: 0.0, linewidth_fwhm_ghz: 4.0, fsr_ghz: 100.0, drop_efficiency: 0.946 }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth_fwhm_ghz > 0.0 && self.linewidth_fwhm_ghz < self.fsr_ghz) {
            return Err(validation(format!(
                "filter linewidth {} GHz must lie in (0, FSR = {} GHz)",
                self.linewidth_fwhm_ghz, self.fsr_ghz
            )));
        }
        if !(self.drop_efficiency > 0.0 && self.drop_efficiency <= 1.0) {
            return Err(validation(format!("drop efficiency {} outside (0, 1]", self.drop_efficiency)));
        }
        if !self.resonance_offset_ghz.is_finite() {
            return Err(validation("filter offset must be finite"));
        }
        Ok(())
    }

    /// Detuning from the nearest comb resonance, in `[-FSR/2, FSR/2)`.
    pub fn wrapped_detuning(&self, detuning_ghz: f64) -> f64 {
        let d = detuning_ghz - self.resonance_offset_ghz;
        d - self.fsr_ghz * (d / self.fsr_ghz).round()
    }
}

/// Drop and through amplitudes at `detuning_ghz` from the filter's target bin.
///
/// `drop = √η_d L(δ)` and `through = 1 − √η_d L(δ)` with
/// `L(δ) = (Γ/2) / (Γ/2 + iδ)`, which is lossless exactly when `η_d = 1`.
pub fn filter_response(p: &FilterParams, detuning_ghz: f64) -> (Complex64, Complex64) {
    let half = p.linewidth_fwhm_ghz / 2.0;
    let dw = p.wrapped_detuning(detuning_ghz);
    let lorentz = Complex64::new(half, 0.0) / Complex64::new(half, dw);
    let a = p.drop_efficiency.sqrt();
    (lorentz * a, Complex64::new(1.0, 0.0) - lorentz * a)
}

/// Power transmission of an attenuating element. An "attenuation of 2/3"
/// is `power_transmission = 1/3`.
pub fn attenuator_transform(mode: usize, power_transmission: f64) -> Result<ModeTransform> {
    if !(0.0..=1.0).contains(&power_transmission) {
        return Err(validation(format!("power transmission {power_transmission} outside [0, 1]")));
    }
    ModeTransform::new(vec![mode], DMatrix::from_element(1, 1, Complex64::new(power_transmission.sqrt(), 0.0)))
}

pub fn phase_transform(mode: usize, phi: f64) -> Result<ModeTransform> {
    let phi = phi.rem_euclid(2.0 * PI);
    ModeTransform::new(vec![mode], DMatrix::from_element(1, 1, Complex64::from_polar(1.0, phi)))
}
