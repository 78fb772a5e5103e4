//! Frequency-resolved detection behind a cascade of add-drop filters.
//!
//! Filters sit on one bus in ascending frequency order; each drops its target
//! bin to its own detector. A photon in mode `m` reaches detector `k` with
//! probability `|drop_k|² Π_{j<k} |through_j|²`, averaged over the photon's
//! Lorentzian spectrum. Photons in different bins never interfere after the
//! circuit, so routing is applied photon by photon.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::elements::{filter_response, FilterParams};
use crate::error::{config, domain, Result};
use crate::fock::PureState;
use crate::grid::BinGrid;

/// Quadrature points for the spectral average.
const SPECTRAL_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Target mode of each detector.
    targets: Vec<usize>,
    /// `routing[(k, m)]`: probability a photon in mode `m` clicks detector `k`.
    routing: DMatrix<f64>,
}

impl Detection {
    /// Each detector sees only its own bin, with the filter's drop efficiency.
    pub fn ideal(grid: &BinGrid, filters: &[(usize, FilterParams)]) -> Result<Self> {
        let n = grid.n_modes();
        let mut routing = DMatrix::zeros(filters.len(), n);
        for (k, (target, f)) in filters.iter().enumerate() {
            grid.check_mode(*target)?;
            f.validate()?;
            routing[(k, *target)] = f.drop_efficiency;
        }
        Self::build(filters, routing)
    }

    /// Full Lorentzian cascade. `photon_linewidth_ghz = 0` is monochromatic
    /// (classical CW) light.
    pub fn cascade(grid: &BinGrid, filters: &[(usize, FilterParams)], photon_linewidth_ghz: f64) -> Result<Self> {
        if !(photon_linewidth_ghz >= 0.0 && photon_linewidth_ghz.is_finite()) {
            return Err(domain("photon linewidth must be finite and non-negative"));
        }
        for (target, f) in filters {
            grid.check_mode(*target)?;
            f.validate()?;
        }
        // Bus order: ascending target frequency.
        let mut order: Vec<usize> = (0..filters.len()).collect();
        order.sort_by(|&a, &b| grid.offset_ghz(filters[a].0).total_cmp(&grid.offset_ghz(filters[b].0)));

        let samples: Vec<f64> = if photon_linewidth_ghz == 0.0 {
            vec![0.0]
        } else {
            let half = photon_linewidth_ghz / 2.0;
            (0..SPECTRAL_POINTS)
                .map(|i| half * (PI * ((i as f64 + 0.5) / SPECTRAL_POINTS as f64 - 0.5)).tan())
                .collect()
        };

        let n = grid.n_modes();
        let mut routing = DMatrix::zeros(filters.len(), n);
        for m in 0..n {
            let nu_m = grid.offset_ghz(m);
            for &x in &samples {
                let mut pass = 1.0;
                for &k in &order {
                    let (target, f) = &filters[k];
                    let (drop, through) = filter_response(f, nu_m + x - grid.offset_ghz(*target));
                    routing[(k, m)] += pass * drop.norm_sqr();
                    pass *= through.norm_sqr();
                }
            }
        }
        routing /= samples.len() as f64;
        Self::build(filters, routing)
    }

    fn build(filters: &[(usize, FilterParams)], routing: DMatrix<f64>) -> Result<Self> {
        let targets: Vec<usize> = filters.iter().map(|(t, _)| *t).collect();
        if (0..targets.len()).any(|i| targets[i + 1..].contains(&targets[i])) {
            return Err(config("two filters target the same bin"));
        }
        Ok(Detection { targets, routing })
    }

    pub fn n_detectors(&self) -> usize {
        self.targets.len()
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn routing(&self) -> &DMatrix<f64> {
        &self.routing
    }

    /// Detector index whose filter targets `mode`.
    pub fn detector_of(&self, mode: usize) -> Result<usize> {
        self.targets
            .iter()
            .position(|&t| t == mode)
            .ok_or_else(|| config(format!("no detector on mode {mode}")))
    }

    /// Click probability of each detector for one photon with mode
    /// distribution `p_mode`.
    pub fn single_photon(&self, p_mode: &[f64]) -> Vec<f64> {
        (0..self.n_detectors()).map(|k| (0..p_mode.len()).map(|m| self.routing[(k, m)] * p_mode[m]).sum()).collect()
    }

    /// Mean photon number per detector given mean mode occupations.
    pub fn singles(&self, mean_occupation: &[f64]) -> Vec<f64> {
        self.single_photon(mean_occupation)
    }

    /// `P[(k1, k2)]`, symmetric, for one photon at each of two distinct
    /// detectors given a two-photon state.
    pub fn pair_probabilities(&self, state: &PureState) -> Result<DMatrix<f64>> {
        if state.photon_number() != 2 {
            return Err(domain(format!("pair detection needs two photons, state has {}", state.photon_number())));
        }
        let d = self.n_detectors();
        let mut p = DMatrix::zeros(d, d);
        for (occ, amp) in state.amplitudes() {
            let w = amp.norm_sqr();
            let modes = occ.photon_modes();
            let (a, b) = (modes[0], modes[1]);
            for k1 in 0..d {
                for k2 in k1 + 1..d {
                    let x = w
                        * (self.routing[(k1, a)] * self.routing[(k2, b)] + self.routing[(k2, a)] * self.routing[(k1, b)]);
                    p[(k1, k2)] += x;
                    p[(k2, k1)] += x;
                }
            }
        }
        Ok(p)
    }

    /// Same as [`Self::pair_probabilities`] for two distinguishable photons
    /// with independent mode distributions.
    pub fn distinguishable_pair_probabilities(&self, p_a: &[f64], p_b: &[f64]) -> DMatrix<f64> {
        let a = self.single_photon(p_a);
        let b = self.single_photon(p_b);
        let d = self.n_detectors();
        DMatrix::from_fn(d, d, |k1, k2| if k1 == k2 { 0.0 } else { a[k1] * b[k2] + a[k2] * b[k1] })
    }
}
