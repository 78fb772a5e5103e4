//! Damped least-squares (Levenberg-Marquardt) fit of a measured doublet to
//! the coupled-mode through-port model.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::resonator::{dip_positions, dr_through_spectrum, DrParams};

pub const MAX_ITERATIONS: usize = 200;
pub const RELATIVE_TOLERANCE: f64 = 1e-10;
pub const MIN_SAMPLES: usize = 50;

/// Parameter order used by the solver.
const N_PARAMS: usize = 6;
const CENTER: usize = 0;
const G: usize = 1;
const KAPPA1: usize = 2;
const KAPPA2: usize = 3;
const KAPPA_EX: usize = 4;
const DETUNE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubletFit {
    pub two_g: f64,
    pub center_ghz: f64,
    /// `(kappa1, kappa2)`.
    pub linewidths: (f64, f64),
    pub kappa_ex: f64,
    pub thermal_detune: f64,
    /// `1 - T_min` at the lower and upper dip of the fitted model.
    pub dip_depths: (f64, f64),
    /// Dip positions of the fitted model, absolute detuning.
    pub dip_positions: (f64, f64),
    /// RMS residual.
    pub residual: f64,
    pub iterations: usize,
}

impl DoubletFit {
    pub fn params(&self) -> DrParams {
        DrParams {
            g_ghz: self.two_g / 2.0,
            kappa1_ghz: self.linewidths.0,
            kappa2_ghz: self.linewidths.1,
            kappa_ex_ghz: self.kappa_ex,
            thermal_detune_ghz: self.thermal_detune,
            ..DrParams::default()
        }
    }
}

fn to_params(p: &DVector<f64>) -> DrParams {
    DrParams {
        g_ghz: p[G],
        kappa1_ghz: p[KAPPA1],
        kappa2_ghz: p[KAPPA2],
        kappa_ex_ghz: p[KAPPA_EX],
        thermal_detune_ghz: p[DETUNE],
        ..DrParams::default()
    }
}

fn residuals(p: &DVector<f64>, x: &[f64], y: &[f64]) -> DVector<f64> {
    let dr = to_params(p);
    DVector::from_iterator(x.len(), x.iter().zip(y).map(|(&xi, &yi)| dr.through_amplitude(xi - p[CENTER]).norm_sqr() - yi))
}

fn jacobian(p: &DVector<f64>, x: &[f64]) -> DMatrix<f64> {
    let i = Complex64::new(0.0, 1.0);
    let (g, k1, k2, kex, det) = (p[G], p[KAPPA1], p[KAPPA2], p[KAPPA_EX], p[DETUNE]);
    let mut jac = DMatrix::zeros(x.len(), N_PARAMS);
    for (row, &xi) in x.iter().enumerate() {
        let d = xi - p[CENTER];
        let e = Complex64::new(k2 / 2.0, d - det);
        let big_d = Complex64::new(k1 / 2.0, d) + g * g / e;
        let t = 1.0 - kex / big_d;
        let dt_dd = kex / (big_d * big_d);
        let dd_de = -(g * g) / (e * e);
        let grads = [
            dt_dd * (-i + dd_de * (-i)),
            dt_dd * (2.0 * g / e),
            dt_dd * 0.5,
            dt_dd * dd_de * 0.5,
            -1.0 / big_d,
            dt_dd * dd_de * (-i),
        ];
        for (col, gr) in grads.iter().enumerate() {
            jac[(row, col)] = 2.0 * (t.conj() * gr).re;
        }
    }
    jac
}

fn rms(r: &DVector<f64>) -> f64 {
    (r.norm_squared() / r.len() as f64).sqrt()
}

/// Initial guess from the two deepest, well-separated minima of the data.
fn initial_guess(x: &[f64], y: &[f64]) -> Result<DVector<f64>> {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let baseline = sorted[(0.9 * (sorted.len() - 1) as f64) as usize];
    let flat_residual = (y.iter().map(|v| (v - baseline).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let argmin = |mask: &dyn Fn(usize) -> bool| {
        (0..y.len()).filter(|&k| mask(k)).min_by(|&a, &b| y[a].total_cmp(&y[b]))
    };
    let i1 = argmin(&|_| true).expect("non-empty");
    let depth1 = baseline - y[i1];
    if depth1 < 0.1 * baseline.abs().max(1e-12) {
        return Err(Error::Fit { message: "no resonance dip found in spectrum".into(), best_residual: flat_residual });
    }
    let fwhm = |k: usize| {
        let half = y[k] + (baseline - y[k]) / 2.0;
        let mut lo = k;
        while lo > 0 && y[lo] < half {
            lo -= 1;
        }
        let mut hi = k;
        while hi + 1 < y.len() && y[hi] < half {
            hi += 1;
        }
        (x[hi] - x[lo]).abs()
    };
    let w1 = fwhm(i1).max((x[1] - x[0]).abs() * 3.0);
    let i2 = argmin(&|k| (x[k] - x[i1]).abs() > 1.5 * w1)
        .ok_or_else(|| Error::Fit { message: "spectrum too narrow for a doublet".into(), best_residual: flat_residual })?;
    let depth2 = baseline - y[i2];
    if depth2 < 0.1 * depth1 {
        return Err(Error::Fit { message: "only one resonance dip found".into(), best_residual: flat_residual });
    }
    let w = 0.5 * (w1 + fwhm(i2).max(w1 * 0.25));
    let y_min = (0.5 * (y[i1] + y[i2]) / baseline).clamp(0.0, 1.0);
    let kex = (w * (1.0 - y_min.sqrt())).clamp(0.05 * w, 0.99 * w);
    let mut p = DVector::zeros(N_PARAMS);
    p[CENTER] = 0.5 * (x[i1] + x[i2]);
    p[G] = 0.5 * (x[i1] - x[i2]).abs();
    p[KAPPA1] = w;
    p[KAPPA2] = w;
    p[KAPPA_EX] = kex;
    p[DETUNE] = 0.0;
    Ok(p)
}

/// Fits a doublet spectrum. Needs at least [`MIN_SAMPLES`] points spanning
/// both dips; detunings in GHz, transmission normalised to an off-resonance
/// level of one.
pub fn fit_doublet(detuning: &[f64], transmission: &[f64]) -> Result<DoubletFit> {
    if detuning.len() != transmission.len() {
        return Err(domain("detuning and transmission series differ in length"));
    }
    if detuning.len() < MIN_SAMPLES {
        return Err(domain(format!("need at least {MIN_SAMPLES} samples, got {}", detuning.len())));
    }
    if detuning.iter().chain(transmission).any(|v| !v.is_finite()) {
        return Err(domain("spectrum contains non-finite values"));
    }
    let (x, y) = (detuning, transmission);
    let mut p = initial_guess(x, y)?;
    let mut r = residuals(&p, x, y);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let jac = jacobian(&p, x);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let mut accepted = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for k in 0..N_PARAMS {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &p + &step;
            let physical = [G, KAPPA1, KAPPA2, KAPPA_EX].iter().all(|&k| trial[k] > 0.0);
            let r_trial = residuals(&trial, x, y);
            let c_trial = r_trial.norm_squared();
            if physical && c_trial.is_finite() && c_trial < cost {
                let rel = (cost - c_trial) / cost;
                p = trial;
                r = r_trial;
                cost = c_trial;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if rel <= RELATIVE_TOLERANCE || cost < 1e-26 {
                    converged = true;
                }
                break;
            }
            lambda *= 2.0;
        }
        if !accepted {
            // No descent direction left at any damping: stationary point.
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::Fit {
            message: format!("no convergence after {MAX_ITERATIONS} iterations"),
            best_residual: rms(&r),
        });
    }
    let dr = to_params(&p);
    let span = dr.g_ghz + 5.0 * dr.kappa1_ghz.max(dr.kappa2_ghz) + dr.thermal_detune_ghz.abs();
    let dips = dip_positions(&dr, span);
    let (lo, hi) = match dips.as_slice() {
        [a, .., b] => (*a, *b),
        [a] => (*a, *a),
        [] => (-dr.g_ghz, dr.g_ghz),
    };
    let depth = dr_through_spectrum(&dr, &[lo, hi]);
    Ok(DoubletFit {
        two_g: 2.0 * dr.g_ghz,
        center_ghz: p[CENTER],
        linewidths: (dr.kappa1_ghz, dr.kappa2_ghz),
        kappa_ex: dr.kappa_ex_ghz,
        thermal_detune: dr.thermal_detune_ghz,
        dip_depths: (1.0 - depth[0], 1.0 - depth[1]),
        dip_positions: (lo + p[CENTER], hi + p[CENTER]),
        residual: rms(&r),
        iterations,
    })
}
