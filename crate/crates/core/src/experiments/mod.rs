//! End-to-end experiment pipelines on the fixed chip topology: three
//! double-resonator f-BSs (DR1 preparation, DR2 gate, DR3 analysis), two
//! attenuators (R1, R2) and four drop filters (R3..R6) feeding detectors.

mod bell;
mod cz;
mod fmzi;
mod hom;
mod spectroscopy;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{derive_seed, sample_channel, CoincidenceChannel, CountRecord, DetectorSpec, MetricResult, SourceSpec};
use crate::detection::Detection;
use crate::elements::{fbs_transform, FbsSpec, FilterParams};
use crate::error::{config, validation, Result};
use crate::fock::{ModeTransform, PureState};
use crate::grid::{BinGrid, BinRole, DEFAULT_ANCHOR_THZ, DEFAULT_SPACING_GHZ};
use crate::resonator::{DrParams, DriveSpec};

pub use bell::run_bell;
pub use cz::{cz_characterization, ideal_truth_table, run_cz, run_cz_nonstandard, CzBasis, CzCharacterization};
pub use fmzi::{run_fmzi, FmziMode};
pub use hom::{hom_visibility_law, run_hom};
pub use spectroscopy::{run_spectroscopy, SpectroscopyTarget};

/// Source settings at which the imperfect pipelines land on the measured
/// device figures.
pub mod calibration {
    use super::{ChipConfig, ExperimentKind, Imperfections};

    /// Heralded f-MZI: coincidence-to-accidental ratio of the pair source.
    pub const FMZI_CAR: f64 = 20.0;
    /// HOM: scalar indistinguishability of the two photons.
    pub const HOM_INDISTINGUISHABILITY: f64 = 0.949;
    /// CZ: coincidence-to-accidental ratio alone accounting for the measured
    /// process bound.
    pub const CZ_CAR: f64 = 28.0;
    /// Bell: coincidence-to-accidental ratio of the entangled source.
    pub const BELL_CAR: f64 = 45.0;
    /// Bell: residual coherence between the two pair terms.
    pub const BELL_COHERENCE: f64 = 0.99;

    /// Noise setting per experiment: the f-MZI keeps every mechanism, HOM
    /// keeps only distinguishability, CZ only accidentals and Bell both.
    pub fn documented(kind: ExperimentKind) -> ChipConfig {
        let mut c = match kind {
            ExperimentKind::Fmzi | ExperimentKind::Spectroscopy => ChipConfig::for_experiment(kind),
            _ => ChipConfig::ideal(kind),
        };
        match kind {
            ExperimentKind::Fmzi => c.source.car = Some(FMZI_CAR),
            ExperimentKind::Hom => {
                c.imperfections = Imperfections { distinguishability: true, ..Imperfections::none() };
                c.source.indistinguishability = HOM_INDISTINGUISHABILITY;
            }
            ExperimentKind::Cz => {
                c.imperfections = Imperfections { accidentals: true, ..Imperfections::none() };
                c.source.car = Some(CZ_CAR);
            }
            ExperimentKind::Bell => {
                c.imperfections = Imperfections { accidentals: true, distinguishability: true, ..Imperfections::none() };
                c.source.car = Some(BELL_CAR);
                c.source.indistinguishability = BELL_COHERENCE;
            }
            ExperimentKind::Spectroscopy => {}
        }
        c
    }
}

/// Independent switches for each non-ideal mechanism. The values come from
/// the rest of [`ChipConfig`]; a switched-off mechanism is ideal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Imperfections {
    /// f-BS columns scaled by `global_efficiency`.
    pub efficiency: bool,
    /// First-order sideband leakage at each DR's suppression ratio.
    pub sideband_leakage: bool,
    /// Lorentzian filter cascade instead of ideal bin-selective detection.
    pub filter_crosstalk: bool,
    /// Partial photon distinguishability from the source.
    pub distinguishability: bool,
    /// Accidental coincidences (source CAR) and dark counts.
    pub accidentals: bool,
}

impl Default for Imperfections {
    fn default() -> Self {
        Imperfections {
            efficiency: true,
            sideband_leakage: true,
            filter_crosstalk: true,
            distinguishability: true,
            accidentals: true,
        }
    }
}

impl Imperfections {
    pub fn none() -> Self {
        Imperfections {
            efficiency: false,
            sideband_leakage: false,
            filter_crosstalk: false,
            distinguishability: false,
            accidentals: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub spacing_ghz: f64,
    pub anchor_thz: f64,
    pub n_computational: usize,
    pub sideband_pad: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { spacing_ghz: DEFAULT_SPACING_GHZ, anchor_thz: DEFAULT_ANCHOR_THZ, n_computational: 4, sideband_pad: 1 }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<BinGrid> {
        let base = BinGrid::uniform(self.n_computational, self.sideband_pad)?;
        BinGrid::new(self.spacing_ghz, self.anchor_thz, true, base.bins().to_vec())
    }
}

/// One driven double resonator: its f-BS setting, its cold-cavity
/// parameters and the microwave drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DrConfig {
    #[serde(rename = "transmissivity_T")]
    pub transmissivity: f64,
    pub phase_theta: f64,
    pub sideband_suppression_db: f64,
    pub resonator: DrParams,
    pub drive: DriveSpec,
}

impl Default for DrConfig {
    fn default() -> Self {
        DrConfig {
            transmissivity: 0.5,
            phase_theta: 0.0,
            sideband_suppression_db: crate::elements::DEFAULT_SIDEBAND_SUPPRESSION_DB,
            resonator: DrParams::default(),
            drive: DriveSpec::default(),
        }
    }
}

impl DrConfig {
    fn with(transmissivity: f64, eo: f64) -> Self {
        let mut d = DrConfig { transmissivity, ..DrConfig::default() };
        d.resonator.eo_coeff_ghz_per_v = eo;
        d
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(0.0..=1.0).contains(&self.transmissivity) {
            return Err(validation(format!("{name}: transmissivity {} outside [0, 1]", self.transmissivity)));
        }
        if !(self.sideband_suppression_db >= 0.0) || !self.phase_theta.is_finite() {
            return Err(validation(format!("{name}: suppression must be >= 0 dB and phase finite")));
        }
        self.resonator.validate()?;
        self.drive.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Fmzi,
    Hom,
    Cz,
    Bell,
    Spectroscopy,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] =
        [ExperimentKind::Fmzi, ExperimentKind::Hom, ExperimentKind::Cz, ExperimentKind::Bell, ExperimentKind::Spectroscopy];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fmzi => "fmzi",
            ExperimentKind::Hom => "hom",
            ExperimentKind::Cz => "cz",
            ExperimentKind::Bell => "bell",
            ExperimentKind::Spectroscopy => "spectroscopy",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::Fmzi => "frequency Mach-Zehnder fringes through DR1 and DR3, classical or heralded single photons",
            ExperimentKind::Hom => "two-photon Hong-Ou-Mandel dip versus DR3 reflectivity",
            ExperimentKind::Cz => "post-selected CZ gate truth tables in the XZ and ZX bases and the process-fidelity bound",
            ExperimentKind::Bell => "frequency-bin Bell state fringes under DR1/DR2 projections",
            ExperimentKind::Spectroscopy => "DR doublet and filter comb transmission scans with doublet fitting",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Full chip configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChipConfig {
    pub grid: GridConfig,
    /// Four consecutive bins `[f1, f2, f3, f4]`. CZ reads them as
    /// `|0⟩_C, |1⟩_C, |0⟩_T, |1⟩_T`; the Bell source as `f1 < f2 < f3 < f4`;
    /// the interferometers use `f1, f2`.
    pub logical_bins: [i32; 4],
    pub dr1: DrConfig,
    pub dr2: DrConfig,
    pub dr3: DrConfig,
    /// Power transmission of the attenuator on `|0⟩_C`.
    pub r1: f64,
    /// Power transmission of the attenuator on `|1⟩_T`.
    pub r2: f64,
    /// Drop filters on the four computational bins in ascending order.
    pub r3: FilterParams,
    pub r4: FilterParams,
    pub r5: FilterParams,
    pub r6: FilterParams,
    pub global_efficiency: f64,
    pub source: SourceSpec,
    pub detector: DetectorSpec,
    pub imperfections: Imperfections,
}

impl Default for ChipConfig {
    fn default() -> Self {
        ChipConfig {
            grid: GridConfig::default(),
            logical_bins: [0, 1, 2, 3],
            dr1: DrConfig::with(0.5, 0.226),
            dr2: DrConfig::with(1.0 / 3.0, 0.255),
            dr3: DrConfig::with(0.5, 0.222),
            r1: 1.0 / 3.0,
            r2: 1.0 / 3.0,
            r3: FilterParams::default(),
            r4: FilterParams::default(),
            r5: FilterParams::default(),
            r6: FilterParams::default(),
            global_efficiency: 0.69,
            source: SourceSpec::default(),
            detector: DetectorSpec::default(),
            imperfections: Imperfections::default(),
        }
    }
}

impl ChipConfig {
    /// Device defaults with the DR settings each experiment expects
    /// (DR2 is balanced for the Bell projections, `T = 1/3` otherwise).
    pub fn for_experiment(kind: ExperimentKind) -> Self {
        let mut c = ChipConfig::default();
        if kind == ExperimentKind::Bell {
            c.dr2.transmissivity = 0.5;
        }
        c
    }

    /// Lossless elements, no leakage, ideal detection and sources.
    pub fn ideal(kind: ExperimentKind) -> Self {
        let mut c = ChipConfig::for_experiment(kind);
        c.imperfections = Imperfections::none();
        for f in [&mut c.r3, &mut c.r4, &mut c.r5, &mut c.r6] {
            f.drop_efficiency = 1.0;
        }
        c
    }

    pub fn filters(&self) -> [&FilterParams; 4] {
        [&self.r3, &self.r4, &self.r5, &self.r6]
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build()?;
        let lb = self.logical_bins;
        if lb.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(config(format!("logical bins {lb:?} must be four consecutive ascending bins")));
        }
        for b in lb {
            let m = grid.mode_of(b)?;
            if grid.role(m) != BinRole::Computational {
                return Err(config(format!("logical bin {b} is not a computational bin")));
            }
            // Every f-BS on the logical pairs needs both neighbours on the grid.
            grid.mode_of(b - 1)?;
            grid.mode_of(b + 1)?;
        }
        if grid.modes_with_role(BinRole::Computational).len() != 4 {
            return Err(config("the chip has exactly four drop filters, so four computational bins"));
        }
        self.dr1.validate("dr1")?;
        self.dr2.validate("dr2")?;
        self.dr3.validate("dr3")?;
        for (name, r) in [("r1", self.r1), ("r2", self.r2)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(validation(format!("{name}: power transmission {r} outside [0, 1]")));
            }
        }
        for f in self.filters() {
            f.validate()?;
        }
        if !(self.global_efficiency > 0.0 && self.global_efficiency <= 1.0) {
            return Err(validation(format!("global efficiency {} outside (0, 1]", self.global_efficiency)));
        }
        self.source.validate()?;
        self.detector.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub sweep_variable: String,
    pub sweep_values: Vec<f64>,
    /// Names of the per-point outcome channels.
    pub channels: Vec<String>,
    /// `[point][channel]` true-event probability, detection included.
    pub probabilities: Vec<Vec<f64>>,
    /// `[point][channel]`; empty rows for noiseless (classical) runs.
    pub counts: Vec<Vec<CountRecord>>,
    /// Derived per-point series.
    pub series: BTreeMap<String, Vec<f64>>,
    pub metrics: BTreeMap<String, MetricResult>,
    pub notes: Vec<String>,
    pub seed: u64,
    pub config: ChipConfig,
}

impl ExperimentResult {
    fn new(kind: ExperimentKind, sweep_variable: &str, cfg: &ChipConfig, seed: u64) -> Self {
        ExperimentResult {
            experiment: kind.name().into(),
            sweep_variable: sweep_variable.into(),
            sweep_values: Vec::new(),
            channels: Vec::new(),
            probabilities: Vec::new(),
            counts: Vec::new(),
            series: BTreeMap::new(),
            metrics: BTreeMap::new(),
            notes: Vec::new(),
            seed,
            config: cfg.clone(),
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).map(|m| m.value)
    }

    /// Per-channel series of total (true + accidental) coincidences.
    pub fn coincidence_series(&self, channel: usize) -> Vec<f64> {
        self.counts.iter().map(|row| row[channel].coincidences() as f64).collect()
    }
}

/// Runtime view of a validated configuration.
pub(crate) struct Chip<'a> {
    pub cfg: &'a ChipConfig,
    pub grid: Arc<BinGrid>,
}

impl<'a> Chip<'a> {
    pub fn new(cfg: &'a ChipConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Chip { cfg, grid: Arc::new(cfg.grid.build()?) })
    }

    pub fn mode(&self, bin: i32) -> Result<usize> {
        self.grid.mode_of(bin)
    }

    /// f-BS of `dr` acting on the doublet whose lower bin is `lo_bin`.
    pub fn fbs(&self, dr: &DrConfig, lo_bin: i32, transmissivity: f64, theta: f64) -> Result<ModeTransform> {
        let imp = &self.cfg.imperfections;
        let mut spec = FbsSpec::on_grid(&self.grid, lo_bin, transmissivity, theta)?;
        if imp.efficiency {
            spec = spec.with_efficiency(self.cfg.global_efficiency);
        }
        if imp.sideband_leakage {
            spec = spec.with_suppression_db(dr.sideband_suppression_db);
        }
        fbs_transform(&spec)
    }

    /// Filters R3..R6 on the computational bins; `linewidth_ghz` is the
    /// photon linewidth (0 for CW light).
    pub fn detection(&self, linewidth_ghz: f64) -> Result<Detection> {
        let comp = self.grid.modes_with_role(BinRole::Computational);
        let filters: Vec<(usize, FilterParams)> = comp.into_iter().zip(self.cfg.filters()).map(|(m, f)| (m, *f)).collect();
        if self.cfg.imperfections.filter_crosstalk {
            Detection::cascade(&self.grid, &filters, linewidth_ghz)
        } else {
            Detection::ideal(&self.grid, &filters)
        }
    }

    pub fn photon_linewidth_ghz(&self) -> f64 {
        self.cfg.source.photon_linewidth_mhz * 1e-3
    }

    /// Source as seen by the count model (accidentals switched off → ideal).
    pub fn source(&self) -> SourceSpec {
        let mut s = self.cfg.source.clone();
        if !self.cfg.imperfections.accidentals {
            s.car = None;
        }
        s
    }

    pub fn detector(&self) -> DetectorSpec {
        let mut d = self.cfg.detector;
        if !self.cfg.imperfections.accidentals {
            d.dark_rate_hz = 0.0;
        }
        d
    }

    pub fn indistinguishability(&self) -> f64 {
        if self.cfg.imperfections.distinguishability {
            self.cfg.source.indistinguishability
        } else {
            1.0
        }
    }

    /// Counts for every channel of one sweep point.
    pub fn sample(&self, channels: &[CoincidenceChannel], seed: u64, point: usize) -> Vec<CountRecord> {
        let (d, s) = (self.detector(), self.source());
        let point_seed = derive_seed(seed, point as u64);
        channels.iter().enumerate().map(|(c, ch)| sample_channel(ch, &d, &s, derive_seed(point_seed, c as u64))).collect()
    }
}

/// Evaluates sweep points in parallel, keeping their order.
pub(crate) fn sweep<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(f).collect()
}

/// Output mode distribution of a single photon injected in `mode`.
pub(crate) fn single_photon_distribution(grid: &Arc<BinGrid>, mode: usize, circuit: &[ModeTransform]) -> Result<Vec<f64>> {
    let n = grid.n_modes();
    let psi = PureState::fock(grid.clone(), crate::fock::OccupationVector::from_modes(n, &[mode]))?;
    let out = crate::fock::apply_all(&psi, circuit)?;
    Ok(mean_occupation(&out))
}

/// `⟨n_m⟩` for every mode.
pub(crate) fn mean_occupation(state: &PureState) -> Vec<f64> {
    let mut n = vec![0.0; state.grid().n_modes()];
    for (occ, a) in state.amplitudes() {
        for (m, &c) in occ.counts().iter().enumerate() {
            n[m] += c as f64 * a.norm_sqr();
        }
    }
    n
}
