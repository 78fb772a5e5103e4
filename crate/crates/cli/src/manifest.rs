//! Run manifests: strict JSON parsing, experiment defaults and validation.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use freqbin::experiments::{calibration, ChipConfig, ExperimentKind, FmziMode, SpectroscopyTarget};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// Parse or validation failure located by a JSON pointer into the manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestError {
    pub pointer: String,
    pub message: String,
}

impl ManifestError {
    fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        ManifestError { pointer: pointer.into(), message: message.into() }
    }
}

impl fmt::Display for ManifestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "manifest error at {at}: {}", self.message)
    }
}

impl std::error::Error for ManifestError {}

/// Swept values: an explicit list, or `points` evenly spaced values from
/// `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl SweepSpec {
    pub fn range(start: f64, stop: f64, points: usize) -> Self {
        SweepSpec { start: Some(start), stop: Some(stop), points: Some(points), values: None }
    }

    pub fn default_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Fmzi | ExperimentKind::Bell => SweepSpec::range(0.0, 2.0 * PI, 73),
            ExperimentKind::Hom => SweepSpec::range(0.0, 1.0, 101),
            ExperimentKind::Cz => SweepSpec::range(0.0, 3.0, 4),
            ExperimentKind::Spectroscopy => SweepSpec::range(-25.0, 25.0, 801),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        match (self.start, self.stop, self.points) {
            (Some(a), Some(b), Some(1)) if a == b => vec![a],
            (Some(a), Some(b), Some(n)) => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            _ => Vec::new(),
        }
    }

    fn validate(&self) -> Result<(), ManifestError> {
        let range = [self.start.is_some(), self.stop.is_some(), self.points.is_some()];
        match (&self.values, range) {
            (Some(v), [false, false, false]) => {
                if v.is_empty() {
                    return Err(ManifestError::new("/sweep/values", "sweep needs at least one value"));
                }
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    return Err(ManifestError::new(format!("/sweep/values/{i}"), "sweep values must be finite"));
                }
            }
            (None, [true, true, true]) => {
                let (a, b, n) = (self.start.unwrap(), self.stop.unwrap(), self.points.unwrap());
                if !a.is_finite() || !b.is_finite() {
                    return Err(ManifestError::new("/sweep", "sweep bounds must be finite"));
                }
                if n == 0 || (n == 1 && a != b) {
                    return Err(ManifestError::new("/sweep/points", "a range needs two or more points unless start = stop"));
                }
            }
            _ => return Err(ManifestError::new("/sweep", "give either `values` or all of `start`, `stop`, `points`")),
        }
        Ok(())
    }
}

/// Starting point for `config` overrides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Device defaults with every imperfection on.
    #[default]
    Device,
    /// Lossless elements and ideal detection and sources.
    Ideal,
    /// The noise setting that reproduces the measured device figures.
    Calibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunOptions {
    pub preset: Preset,
    /// f-MZI only.
    pub fmzi_mode: FmziMode,
    /// Spectroscopy only.
    pub spectroscopy_target: SpectroscopyTarget,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { preset: Preset::Device, fmzi_mode: FmziMode::Quantum, spectroscopy_target: SpectroscopyTarget::Dr1 }
    }
}

/// Fully resolved manifest: `config` holds every chip parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub options: RunOptions,
    pub config: ChipConfig,
    pub sweep: SweepSpec,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// As written by the user; everything but `experiment` is optional.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    #[serde(default = "default_schema")]
    schema_version: u32,
    experiment: String,
    #[serde(default)]
    options: RunOptions,
    #[serde(default)]
    config: Option<Value>,
    #[serde(default)]
    sweep: Option<SweepSpec>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    path.iter()
        .filter_map(|s| match s {
            Segment::Seq { index } => Some(index.to_string()),
            Segment::Map { key } => Some(escape(key)),
            Segment::Enum { variant } => Some(escape(variant)),
            Segment::Unknown => None,
        })
        .map(|t| format!("/{t}"))
        .collect()
}

fn strict<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, ManifestError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let pointer = format!("{prefix}{}", pointer_of(e.path()));
        ManifestError::new(pointer, e.into_inner().to_string())
    })
}

/// Recursively overlays `overrides` onto `base`; objects merge, anything
/// else replaces.
fn merge(base: &mut Value, overrides: &Value) {
    match (base, overrides) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

fn base_config(kind: ExperimentKind, preset: Preset) -> ChipConfig {
    match preset {
        Preset::Device => ChipConfig::for_experiment(kind),
        Preset::Ideal => ChipConfig::ideal(kind),
        Preset::Calibrated => calibration::documented(kind),
    }
}

fn resolve(base: &Value, overrides: &Value) -> Result<ChipConfig, ManifestError> {
    let mut merged = base.clone();
    merge(&mut merged, overrides);
    strict(merged, "/config")
}

fn nest(path: &[String], leaf: Value) -> Value {
    path.iter().rev().fold(leaf, |acc, k| Value::Object(Map::from_iter([(k.clone(), acc)])))
}

fn pointer_to(path: &[String]) -> String {
    path.iter().map(|k| format!("/{}", escape(k))).collect()
}

/// Narrows a failed validation to the deepest override that fails on its own.
fn locate(base: &Value, overrides: &Value, path: &mut Vec<String>) -> String {
    if let Value::Object(map) = overrides {
        for (k, v) in map {
            path.push(k.clone());
            let mut merged = base.clone();
            merge(&mut merged, &nest(&path[1..], v.clone()));
            let fails = serde_json::from_value::<ChipConfig>(merged).map(|c| c.validate().is_err()).unwrap_or(true);
            if fails {
                return locate(base, v, path);
            }
            path.pop();
        }
    }
    pointer_to(path)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

/// Settings the post-selected CZ gate depends on.
fn check_cz(cfg: &ChipConfig) -> Result<(), ManifestError> {
    if !close(cfg.dr2.transmissivity, 1.0 / 3.0) {
        return Err(ManifestError::new(
            "/config/dr2/transmissivity_T",
            format!("CZ requires DR2 at T = 1/3, got {} (pass --allow-nonstandard to run anyway)", cfg.dr2.transmissivity),
        ));
    }
    for (name, r) in [("r1", cfg.r1), ("r2", cfg.r2)] {
        if !close(r, 1.0 / 3.0) {
            return Err(ManifestError::new(
                format!("/config/{name}"),
                format!("CZ requires {name} = 1/3 power transmission, got {r} (pass --allow-nonstandard to run anyway)"),
            ));
        }
    }
    Ok(())
}

/// Parses and validates a manifest, applying the experiment's defaults.
pub fn parse_manifest(text: &str, allow_nonstandard: bool) -> Result<RunManifest, ManifestError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| ManifestError::new("", format!("malformed JSON at line {}, column {}: {e}", e.line(), e.column())))?;
    if !value.is_object() {
        return Err(ManifestError::new("", "a manifest is a JSON object"));
    }
    let raw: RawManifest = strict(value, "")?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(ManifestError::new(
            "/schema_version",
            format!("unsupported schema version {} (supported: {SCHEMA_VERSION})", raw.schema_version),
        ));
    }
    let kind = ExperimentKind::from_name(&raw.experiment).ok_or_else(|| {
        let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
        ManifestError::new("/experiment", format!("unknown experiment `{}` (one of: {})", raw.experiment, names.join(", ")))
    })?;
    let overrides = raw.config.unwrap_or_else(|| Value::Object(Map::new()));
    if !overrides.is_object() {
        return Err(ManifestError::new("/config", "config must be an object"));
    }
    let base = serde_json::to_value(base_config(kind, raw.options.preset)).expect("config serializes");
    let config = resolve(&base, &overrides)?;
    if let Err(e) = config.validate() {
        return Err(ManifestError::new(locate(&base, &overrides, &mut vec!["config".into()]), e.to_string()));
    }
    if kind == ExperimentKind::Cz && !allow_nonstandard {
        check_cz(&config)?;
    }
    if kind == ExperimentKind::Cz && raw.sweep.as_ref().is_some_and(|s| *s != SweepSpec::default_for(kind)) {
        return Err(ManifestError::new("/sweep", "the CZ inputs are fixed; omit `sweep`"));
    }
    let sweep = raw.sweep.unwrap_or_else(|| SweepSpec::default_for(kind));
    sweep.validate()?;
    if kind == ExperimentKind::Hom {
        if let Some((i, r)) = sweep.values().into_iter().enumerate().find(|(_, r)| !(0.0..=1.0).contains(r)) {
            return Err(ManifestError::new("/sweep", format!("reflectivity {r} at point {i} outside [0, 1]")));
        }
    }
    Ok(RunManifest {
        schema_version: raw.schema_version,
        experiment: kind,
        options: raw.options,
        config,
        sweep,
        seed: raw.seed,
        output_dir: raw.output_dir,
    })
}
