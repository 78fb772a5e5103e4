//! Fixed-photon-number Fock states and their evolution under linear (possibly
//! lossy) mode transforms.
//!
//! A [`ModeTransform`] acts on creation operators as
//! `a†_i -> Σ_j M[j][i] a†_j`, so column `i` of the matrix is the output
//! amplitude distribution of a photon entering mode `i`. Subunitary matrices
//! are applied directly: the amplitude that leaks out of the retained modes is
//! simply dropped, which is exactly the post-selected physics of n-fold
//! coincidence detection.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, validation, Result};
use crate::grid::BinGrid;

/// Amplitudes below this magnitude are dropped from sparse states.
pub const PRUNE_THRESHOLD: f64 = 1e-15;
/// Largest photon number handled by the Fock layer.
pub const MAX_PHOTONS: usize = 4;

const NORM_TOL: f64 = 1e-9;

pub(crate) fn factorial(n: u8) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

/// Photon counts, one per grid mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OccupationVector(pub Vec<u8>);

impl OccupationVector {
    pub fn vacuum(n_modes: usize) -> Self {
        OccupationVector(vec![0; n_modes])
    }

    /// One photon in each listed mode (repeats stack).
    pub fn from_modes(n_modes: usize, modes: &[usize]) -> Self {
        let mut v = vec![0u8; n_modes];
        for &m in modes {
            v[m] += 1;
        }
        OccupationVector(v)
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    /// Mode list with multiplicity, e.g. `[2, 0, 1]` -> `[0, 0, 2]`.
    pub fn photon_modes(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(m, &c)| std::iter::repeat_n(m, c as usize))
            .collect()
    }
}

impl std::ops::Index<usize> for OccupationVector {
    type Output = u8;
    fn index(&self, i: usize) -> &u8 {
        &self.0[i]
    }
}

/// Complex coupling matrix acting on an ordered subset of grid modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTransform {
    modes: Vec<usize>,
    matrix: DMatrix<Complex64>,
    unitary: bool,
}

impl ModeTransform {
    /// Validates squareness, distinct modes and physicality (spectral norm ≤ 1).
    pub fn new(modes: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = modes.len();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(validation(format!(
                "transform on {d} modes needs a {d}x{d} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let distinct: BTreeSet<_> = modes.iter().collect();
        if distinct.len() != d {
            return Err(config("transform mode subset contains duplicates"));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(validation("transform matrix has non-finite entries"));
        }
        let norm = spectral_norm(&matrix);
        if norm > 1.0 + NORM_TOL {
            return Err(validation(format!("non-physical transform: spectral norm {norm:.12} > 1")));
        }
        let gram = matrix.adjoint() * &matrix;
        let unitary = (0..d).all(|i| {
            (0..d).all(|j| {
                let target = if i == j { 1.0 } else { 0.0 };
                (gram[(i, j)] - Complex64::new(target, 0.0)).norm() <= NORM_TOL
            })
        });
        Ok(ModeTransform { modes, matrix, unitary })
    }

    pub fn identity(modes: Vec<usize>) -> Result<Self> {
        let d = modes.len();
        ModeTransform::new(modes, DMatrix::identity(d, d))
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    /// Entry coupling grid mode `from` into grid mode `to` (zero if either is
    /// outside the subset and they differ; one on the diagonal outside it).
    pub fn coupling(&self, to: usize, from: usize) -> Complex64 {
        let pos = |m| self.modes.iter().position(|&x| x == m);
        match (pos(to), pos(from)) {
            (Some(j), Some(i)) => self.matrix[(j, i)],
            (None, None) if to == from => Complex64::new(1.0, 0.0),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// The same action written as a full `n_modes x n_modes` matrix.
    pub fn embed(&self, n_modes: usize) -> Result<DMatrix<Complex64>> {
        if let Some(&m) = self.modes.iter().find(|&&m| m >= n_modes) {
            return Err(config(format!("mode {m} is outside a grid of {n_modes} modes")));
        }
        let mut full = DMatrix::identity(n_modes, n_modes);
        for (a, &ma) in self.modes.iter().enumerate() {
            for (b, &mb) in self.modes.iter().enumerate() {
                full[(ma, mb)] = self.matrix[(a, b)];
            }
        }
        Ok(full)
    }

    /// `later ∘ self` on a shared mode subset (the matrix product `later * self`).
    pub fn then(&self, later: &ModeTransform) -> Result<ModeTransform> {
        if self.modes != later.modes {
            return Err(domain("composition requires identical mode subsets"));
        }
        ModeTransform::new(self.modes.clone(), &later.matrix * &self.matrix)
    }
}

fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Sparse superposition of occupation vectors with a fixed total photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    grid: Arc<BinGrid>,
    amplitudes: BTreeMap<OccupationVector, Complex64>,
    photon_number: usize,
}

impl PureState {
    /// Builds a state from (occupation, amplitude) terms. Repeated occupations
    /// are summed. The result must be non-empty, share one photon number and
    /// have squared norm in (0, 1].
    pub fn from_terms(
        grid: Arc<BinGrid>,
        terms: impl IntoIterator<Item = (OccupationVector, Complex64)>,
    ) -> Result<Self> {
        let n_modes = grid.n_modes();
        let mut amplitudes = BTreeMap::new();
        let mut photon_number = None;
        for (occ, amp) in terms {
            if occ.len() != n_modes {
                return Err(config(format!(
                    "occupation vector has {} entries but the grid has {n_modes} modes",
                    occ.len()
                )));
            }
            let n = occ.total();
            if n > MAX_PHOTONS {
                return Err(domain(format!("{n} photons exceed the supported maximum of {MAX_PHOTONS}")));
            }
            match photon_number {
                None => photon_number = Some(n),
                Some(p) if p != n => {
                    return Err(domain(format!("mixed photon numbers {p} and {n} in one state")));
                }
                _ => {}
            }
            *amplitudes.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        amplitudes.retain(|_, a: &mut Complex64| a.norm() >= PRUNE_THRESHOLD);
        let state = PureState { grid, amplitudes, photon_number: photon_number.unwrap_or(0) };
        let norm = state.norm_sqr();
        if state.amplitudes.is_empty() || norm <= 0.0 {
            return Err(domain("state has no non-zero amplitude"));
        }
        if norm > 1.0 + NORM_TOL {
            return Err(validation(format!("state squared norm {norm} exceeds 1")));
        }
        Ok(state)
    }

    /// The single basis state `|occ⟩`.
    pub fn fock(grid: Arc<BinGrid>, occ: OccupationVector) -> Result<Self> {
        PureState::from_terms(grid, [(occ, Complex64::new(1.0, 0.0))])
    }

    pub fn grid(&self) -> &Arc<BinGrid> {
        &self.grid
    }

    pub fn photon_number(&self) -> usize {
        self.photon_number
    }

    pub fn amplitudes(&self) -> &BTreeMap<OccupationVector, Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, occ: &OccupationVector) -> Complex64 {
        self.amplitudes.get(occ).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Rescaled copy with unit norm.
    pub fn normalized(&self) -> PureState {
        let s = self.norm_sqr().sqrt();
        let amplitudes = self.amplitudes.iter().map(|(k, a)| (k.clone(), a / s)).collect();
        PureState { grid: self.grid.clone(), amplitudes, photon_number: self.photon_number }
    }

    /// One-body density matrix `G[i][j] = ⟨a†_i a_j⟩`.
    pub fn one_body_density(&self) -> DMatrix<Complex64> {
        let n = self.grid.n_modes();
        let mut g = DMatrix::zeros(n, n);
        for (occ, &c) in &self.amplitudes {
            for j in 0..n {
                let nj = occ[j];
                if nj == 0 {
                    continue;
                }
                for i in 0..n {
                    let mut other = occ.clone();
                    other.0[j] -= 1;
                    other.0[i] += 1;
                    if let Some(&c2) = self.amplitudes.get(&other) {
                        let coef = (nj as f64 * other[i] as f64).sqrt();
                        g[(i, j)] += c2.conj() * c * coef;
                    }
                }
            }
        }
        g
    }
}

/// Evolves `state` under `t`. Photon number is conserved; with a unitary
/// transform so is the norm, otherwise the squared norm drops by the weight of
/// branches where a photon left the retained modes.
pub fn apply_transform(state: &PureState, t: &ModeTransform) -> Result<PureState> {
    let n_modes = state.grid.n_modes();
    for &m in t.modes() {
        state.grid.check_mode(m)?;
    }
    let modes = t.modes();
    let mut local = vec![None; n_modes];
    for (k, &m) in modes.iter().enumerate() {
        local[m] = Some(k);
    }
    let mut out: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
    for (occ, &amp) in &state.amplitudes {
        let mut base = occ.0.clone();
        let mut photons = Vec::with_capacity(state.photon_number);
        let mut norm_in = 1.0;
        for &m in modes {
            let n = base[m];
            photons.extend(std::iter::repeat_n(local[m].unwrap_or(0), n as usize));
            norm_in *= factorial(n);
            base[m] = 0;
        }
        // Expand the product of transformed creation operators monomial by monomial.
        let mut partial: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        partial.insert(base, amp / norm_in.sqrt());
        for &i in &photons {
            let mut next: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
            for (o, a) in &partial {
                for (j, &mj) in modes.iter().enumerate() {
                    let mji = t.matrix[(j, i)];
                    if mji.norm() == 0.0 {
                        continue;
                    }
                    let mut o2 = o.clone();
                    o2[mj] += 1;
                    *next.entry(o2).or_default() += a * mji;
                }
            }
            partial = next;
        }
        for (o, a) in partial {
            let norm_out: f64 = modes.iter().map(|&m| factorial(o[m])).product();
            *out.entry(o).or_default() += a * norm_out.sqrt();
        }
    }
    let amplitudes: BTreeMap<_, _> = out
        .into_iter()
        .filter(|(_, a)| a.norm() >= PRUNE_THRESHOLD)
        .map(|(k, a)| (OccupationVector(k), a))
        .collect();
    if amplitudes.is_empty() {
        return Err(domain("every photon was absorbed by the transform"));
    }
    Ok(PureState { grid: state.grid.clone(), amplitudes, photon_number: state.photon_number })
}

/// Applies transforms in order.
pub fn apply_all<'a>(state: &PureState, ts: impl IntoIterator<Item = &'a ModeTransform>) -> Result<PureState> {
    let mut s = state.clone();
    for t in ts {
        s = apply_transform(&s, t)?;
    }
    Ok(s)
}

/// Born-rule probability of seeing `pattern` on the observed modes (all modes
/// not in `marginal_modes`), summed over every occupation of the marginal modes.
/// Pattern entries on marginal modes must be zero.
pub fn project_probability(
    state: &PureState,
    pattern: &OccupationVector,
    marginal_modes: &BTreeSet<usize>,
) -> Result<f64> {
    let n = state.grid.n_modes();
    if pattern.len() != n {
        return Err(config(format!("pattern has {} entries, grid has {n} modes", pattern.len())));
    }
    if let Some(&m) = marginal_modes.iter().find(|&&m| m >= n) {
        return Err(config(format!("marginal mode {m} is not on the grid")));
    }
    if let Some(&m) = marginal_modes.iter().find(|&&m| pattern[m] != 0) {
        return Err(domain(format!("mode {m} is both observed by the pattern and marginalised")));
    }
    let p: f64 = state
        .amplitudes
        .iter()
        .filter(|(occ, _)| (0..n).all(|m| marginal_modes.contains(&m) || occ[m] == pattern[m]))
        .map(|(_, a)| a.norm_sqr())
        .sum();
    Ok(p.clamp(0.0, 1.0))
}

/// Mean photon number per output mode after the full-grid linear map `m`,
/// including branches in which other photons were lost.
pub fn mean_occupations(state: &PureState, m: &DMatrix<Complex64>) -> Vec<f64> {
    let g = state.one_body_density();
    let n = g.nrows();
    (0..m.nrows())
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    acc += m[(k, i)].conj() * m[(k, j)] * g[(i, j)];
                }
            }
            acc.re
        })
        .collect()
}
