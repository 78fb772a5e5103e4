//! Uniform frequency grid holding the optical modes of a circuit.
//!
//! Every mode is one frequency bin centred at `anchor + index * spacing`.
//! Modes are addressed by their position in the grid (sorted by bin index),
//! which is what transforms and occupation vectors use.

use serde::{Deserialize, Serialize};

use crate::error::{config, validation, Result};

/// Bin spacing of the photon-pair comb and the DR doublets, in GHz.
pub const DEFAULT_SPACING_GHZ: f64 = 12.95;
/// Absolute frequency of bin index 0 (the lower bin of the characterised doublet), THz.
pub const DEFAULT_ANCHOR_THZ: f64 = 192.02052;
/// Grating-coupler operating window, THz.
pub const COUPLER_WINDOW_THZ: (f64, f64) = (190.1734, 192.6459);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinRole {
    Computational,
    Sideband,
    Loss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub index: i32,
    pub role: BinRole,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinGrid {
    spacing_ghz: f64,
    anchor_thz: f64,
    check_window: bool,
    bins: Vec<Bin>,
}

impl BinGrid {
    /// Builds a grid, sorting bins by index. Fails on duplicate indices, fewer
    /// than two computational bins, non-positive spacing, or (when
    /// `check_window` is set) computational bins outside the coupler window.
    pub fn new(spacing_ghz: f64, anchor_thz: f64, check_window: bool, mut bins: Vec<Bin>) -> Result<Self> {
        if !(spacing_ghz > 0.0 && spacing_ghz.is_finite()) {
            return Err(validation(format!("bin spacing must be positive, got {spacing_ghz}")));
        }
        bins.sort_by_key(|b| b.index);
        if bins.windows(2).any(|w| w[0].index == w[1].index) {
            return Err(config("bin indices must be unique"));
        }
        let n_comp = bins.iter().filter(|b| b.role == BinRole::Computational).count();
        if n_comp < 2 {
            return Err(config(format!("grid needs at least 2 computational bins, got {n_comp}")));
        }
        let grid = BinGrid { spacing_ghz, anchor_thz, check_window, bins };
        if check_window {
            let (lo, hi) = COUPLER_WINDOW_THZ;
            for b in grid.bins.iter().filter(|b| b.role == BinRole::Computational) {
                let f = grid.frequency_thz(b.index);
                if f < lo || f > hi {
                    return Err(config(format!(
                        "computational bin {} at {f:.5} THz lies outside the coupler window [{lo}, {hi}] THz",
                        b.label
                    )));
                }
            }
        }
        Ok(grid)
    }

    /// Consecutive computational bins `0..n_comp` labelled `c0, c1, ...`,
    /// padded on each side by `sideband_pad` sideband bins.
    pub fn uniform(n_comp: usize, sideband_pad: usize) -> Result<Self> {
        let mut bins = Vec::with_capacity(n_comp + 2 * sideband_pad);
        for k in 1..=sideband_pad {
            bins.push(Bin { index: -(k as i32), role: BinRole::Sideband, label: format!("s-{k}") });
            bins.push(Bin {
                index: (n_comp + k - 1) as i32,
                role: BinRole::Sideband,
                label: format!("s+{k}"),
            });
        }
        for i in 0..n_comp {
            bins.push(Bin { index: i as i32, role: BinRole::Computational, label: format!("c{i}") });
        }
        BinGrid::new(DEFAULT_SPACING_GHZ, DEFAULT_ANCHOR_THZ, true, bins)
    }

    pub fn with_spacing(mut self, spacing_ghz: f64) -> Result<Self> {
        let bins = std::mem::take(&mut self.bins);
        self = BinGrid::new(spacing_ghz, self.anchor_thz, self.check_window, bins)?;
        Ok(self)
    }

    pub fn spacing_ghz(&self) -> f64 {
        self.spacing_ghz
    }

    pub fn anchor_thz(&self) -> f64 {
        self.anchor_thz
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn n_modes(&self) -> usize {
        self.bins.len()
    }

    pub fn frequency_thz(&self, index: i32) -> f64 {
        self.anchor_thz + index as f64 * self.spacing_ghz * 1e-3
    }

    /// Offset of a mode from bin index 0, in GHz.
    pub fn offset_ghz(&self, mode: usize) -> f64 {
        self.bins[mode].index as f64 * self.spacing_ghz
    }

    /// Mode position of the bin with the given index.
    pub fn mode_of(&self, index: i32) -> Result<usize> {
        self.bins
            .binary_search_by_key(&index, |b| b.index)
            .map_err(|_| config(format!("bin index {index} is not on the grid")))
    }

    pub fn role(&self, mode: usize) -> BinRole {
        self.bins[mode].role
    }

    pub fn modes_with_role(&self, role: BinRole) -> Vec<usize> {
        (0..self.bins.len()).filter(|&m| self.bins[m].role == role).collect()
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.bins.len() {
            Ok(())
        } else {
            Err(config(format!("mode {mode} is not on a grid of {} modes", self.bins.len())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_is_sorted_with_sidebands() {
        let g = BinGrid::uniform(4, 1).unwrap();
        let idx: Vec<i32> = g.bins().iter().map(|b| b.index).collect();
        assert_eq!(idx, vec![-1, 0, 1, 2, 3, 4]);
        assert_eq!(g.modes_with_role(BinRole::Computational), vec![1, 2, 3, 4]);
        assert_eq!(g.mode_of(2).unwrap(), 3);
        assert!(g.mode_of(7).is_err());
        let f: Vec<f64> = idx.iter().map(|&i| g.frequency_thz(i)).collect();
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        assert!((g.frequency_thz(1) - 192.03347).abs() < 1e-9);
    }

    #[test]
    fn rejects_duplicates_and_too_few_computational_bins() {
        let b = |index, role| Bin { index, role, label: String::new() };
        let dup = vec![b(0, BinRole::Computational), b(0, BinRole::Computational)];
        assert!(matches!(BinGrid::new(12.95, 192.0, false, dup), Err(crate::Error::Config(_))));
        let one = vec![b(0, BinRole::Computational), b(1, BinRole::Sideband)];
        assert!(BinGrid::new(12.95, 192.0, false, one).is_err());
    }

    #[test]
    fn coupler_window_is_enforced() {
        let b = |index| Bin { index, role: BinRole::Computational, label: String::new() };
        assert!(BinGrid::new(12.95, 192.64, true, vec![b(0), b(1)]).is_err());
        assert!(BinGrid::new(12.95, 192.64, false, vec![b(0), b(1)]).is_ok());
    }
}
