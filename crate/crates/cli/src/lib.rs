//! Manifest-driven front end for the freqbin simulator.

pub mod manifest;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use freqbin::counting::{derive_seed, MetricResult};
use freqbin::experiments::{
    cz_characterization, run_bell, run_cz, run_cz_nonstandard, run_fmzi, run_hom, run_spectroscopy, CzBasis,
    ExperimentKind, ExperimentResult, FmziMode, SpectroscopyTarget,
};
use freqbin::fit::{fit_doublet, DoubletFit};
use serde::{Deserialize, Serialize};

pub use manifest::{parse_manifest, ManifestError, RunManifest};

/// Contents of `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub experiment: String,
    /// The resolved manifest without its output location.
    pub manifest: RunManifest,
    pub results: Vec<ExperimentResult>,
    /// Headline metrics of the run.
    pub summary: BTreeMap<String, MetricResult>,
}

/// Everything a run writes, as text.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub output: RunOutput,
    pub result_json: String,
    pub sweep_csv: String,
    pub report: String,
}

pub fn list_experiments() -> String {
    let mut s = String::new();
    for k in ExperimentKind::ALL {
        let _ = writeln!(s, "{:<14}{}", k.name(), k.description());
    }
    s
}

fn indistinguishability(m: &RunManifest) -> f64 {
    if m.config.imperfections.distinguishability {
        m.config.source.indistinguishability
    } else {
        1.0
    }
}

fn summarize(output: &mut RunOutput, names: &[&str]) {
    for name in names {
        if let Some(v) = output.results[0].metrics.get(*name) {
            output.summary.insert((*name).to_string(), v.clone());
        }
    }
}

/// Runs the manifest's experiment.
pub fn execute(m: &RunManifest, allow_nonstandard: bool) -> Result<RunOutput> {
    let cfg = &m.config;
    let xs = m.sweep.values();
    let mut echo = m.clone();
    echo.output_dir = None;
    let mut out = RunOutput { experiment: m.experiment.name().into(), manifest: echo, results: Vec::new(), summary: BTreeMap::new() };
    match m.experiment {
        ExperimentKind::Fmzi => {
            out.results.push(run_fmzi(cfg, &xs, m.options.fmzi_mode, m.seed)?);
            summarize(&mut out, &["visibility_ave"]);
        }
        ExperimentKind::Hom => {
            out.results.push(run_hom(cfg, &xs, indistinguishability(m), m.seed)?);
            summarize(&mut out, &["visibility_hom", "visibility_hom_expected"]);
        }
        ExperimentKind::Bell => {
            out.results.push(run_bell(cfg, &xs, m.seed)?);
            summarize(&mut out, &["visibility_ave", "visibility_ave_expected"]);
        }
        ExperimentKind::Cz => {
            let zz_seed = derive_seed(m.seed, 2);
            let zz = if allow_nonstandard { run_cz_nonstandard(cfg, CzBasis::Zz, zz_seed)? } else { run_cz(cfg, CzBasis::Zz, zz_seed)? };
            let c = cz_characterization(cfg, m.seed, allow_nonstandard)?;
            let bound = |b: &freqbin::counting::HofmannBound, method: &str| MetricResult {
                value: b.value,
                sigma: b.sigma,
                method: if b.clamped { format!("{method}, clamped at 0") } else { method.into() },
            };
            for (basis, r) in [("zz", &zz), ("xz", &c.xz), ("zx", &c.zx)] {
                for (name, suffix) in [("fidelity", ""), ("fidelity_expected", "_expected")] {
                    if let Some(v) = r.metrics.get(name) {
                        out.summary.insert(format!("fidelity_{basis}{suffix}"), v.clone());
                    }
                }
            }
            out.summary.insert("process_bound".into(), bound(&c.bound, "F_XZ + F_ZX - 1 from counts"));
            out.summary.insert("process_bound_expected".into(), bound(&c.bound_expected, "F_XZ + F_ZX - 1 from expected counts"));
            out.results.extend([zz, c.xz, c.zx]);
        }
        ExperimentKind::Spectroscopy => {
            out.results.push(run_spectroscopy(cfg, &xs, m.options.spectroscopy_target)?);
            let names: Vec<String> = out.results[0].metrics.keys().cloned().collect();
            summarize(&mut out, &names.iter().map(String::as_str).collect::<Vec<_>>());
        }
    }
    Ok(out)
}

fn csv_row(w: &mut csv::Writer<Vec<u8>>, cells: &[String]) -> Result<()> {
    w.write_record(cells)?;
    Ok(())
}

fn num(x: f64) -> Result<String> {
    if !x.is_finite() {
        bail!("non-finite value {x} in sweep output");
    }
    Ok(format!("{x}"))
}

/// Plot data, one row per sweep point. Column sets are listed in
/// `schema/csv_columns.json`.
pub fn sweep_csv(out: &RunOutput) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let r = &out.results[0];
    match out.manifest.experiment {
        ExperimentKind::Hom => {
            csv_row(&mut w, &["reflectivity", "p_cc", "visibility"].map(String::from))?;
            for (i, x) in r.sweep_values.iter().enumerate() {
                csv_row(&mut w, &[num(*x)?, num(r.series["p_cc"][i])?, num(r.series["visibility"][i])?])?;
            }
        }
        ExperimentKind::Fmzi | ExperimentKind::Bell => {
            let quantum = !(out.manifest.experiment == ExperimentKind::Fmzi && out.manifest.options.fmzi_mode == FmziMode::Classical);
            let mut header = vec!["phase_rad".to_string()];
            header.extend(r.channels.iter().map(|c| format!("p_{c}")));
            if quantum {
                header.extend(r.channels.iter().map(|c| format!("n_{c}")));
            }
            csv_row(&mut w, &header)?;
            for (i, x) in r.sweep_values.iter().enumerate() {
                let mut row = vec![num(*x)?];
                for p in &r.probabilities[i] {
                    row.push(num(*p)?);
                }
                if quantum {
                    row.extend(r.counts[i].iter().map(|c| c.coincidences().to_string()));
                }
                csv_row(&mut w, &row)?;
            }
        }
        ExperimentKind::Cz => {
            csv_row(&mut w, &["basis", "input", "outcome", "probability", "postselected", "coincidences"].map(String::from))?;
            for (basis, r) in ["zz", "xz", "zx"].iter().zip(&out.results) {
                let inputs: Vec<String> = r.channels.iter().map(|c| c.trim_start_matches("out_").to_string()).collect();
                for (i, input) in inputs.iter().enumerate() {
                    for (o, outcome) in inputs.iter().enumerate() {
                        csv_row(
                            &mut w,
                            &[
                                basis.to_string(),
                                input.clone(),
                                outcome.clone(),
                                num(r.probabilities[i][o])?,
                                num(r.series[&format!("postselected_{outcome}")][i])?,
                                r.counts[i][o].coincidences().to_string(),
                            ],
                        )?;
                    }
                }
            }
        }
        ExperimentKind::Spectroscopy => {
            let names: Vec<&String> = match out.manifest.options.spectroscopy_target {
                SpectroscopyTarget::Filters => r.series.keys().collect(),
                _ => vec![r.series.keys().find(|k| *k == "transmission").expect("transmission series")],
            };
            let mut header = vec!["detuning_ghz".to_string()];
            header.extend(names.iter().map(|s| s.to_string()));
            csv_row(&mut w, &header)?;
            for (i, x) in r.sweep_values.iter().enumerate() {
                let mut row = vec![num(*x)?];
                for n in &names {
                    row.push(num(r.series[*n][i])?);
                }
                csv_row(&mut w, &row)?;
            }
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Measured device figure each headline metric is compared with.
fn target(kind: ExperimentKind, fmzi_mode: FmziMode, metric: &str) -> Option<&'static str> {
    Some(match (kind, metric) {
        (ExperimentKind::Fmzi, "visibility_ave") => match fmzi_mode {
            FmziMode::Classical => "0.972",
            FmziMode::Quantum => "0.971 +- 0.006",
        },
        (ExperimentKind::Hom, "visibility_hom" | "visibility_hom_expected") => "0.949 +- 0.018",
        (ExperimentKind::Bell, "visibility_ave" | "visibility_ave_expected") => "0.969 +- 0.006",
        (ExperimentKind::Cz, "process_bound" | "process_bound_expected") => "0.914 +- 0.014 (>= 0.989 at high CAR)",
        (ExperimentKind::Spectroscopy, "two_g_ghz") => "13.49",
        (ExperimentKind::Spectroscopy, "adjacent_crosstalk") => "< 0.03",
        _ => return None,
    })
}

/// Metrics table with the comparison figure per row.
pub fn report(out: &RunOutput) -> String {
    let m = &out.manifest;
    let mut s = String::new();
    let _ = writeln!(s, "experiment: {}", out.experiment);
    let _ = writeln!(s, "seed: {}", m.seed);
    let _ = writeln!(s, "preset: {}", serde_json::to_string(&m.options.preset).unwrap_or_default().trim_matches('"'));
    let imp = &m.config.imperfections;
    let _ = writeln!(
        s,
        "imperfections: efficiency={} sideband_leakage={} filter_crosstalk={} distinguishability={} accidentals={}",
        imp.efficiency, imp.sideband_leakage, imp.filter_crosstalk, imp.distinguishability, imp.accidentals
    );
    let car = m.config.source.car.map_or("infinite".to_string(), |c| c.to_string());
    let _ = writeln!(s, "car: {car}");
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<28} {:>12} {:>12}  target", "metric", "value", "sigma");
    for (name, v) in &out.summary {
        let t = target(m.experiment, m.options.fmzi_mode, name).unwrap_or("-");
        let _ = writeln!(s, "{:<28} {:>12.6} {:>12.6}  {}", name, v.value, v.sigma, t);
    }
    let notes: Vec<&String> = out.results.iter().flat_map(|r| &r.notes).collect();
    if !notes.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "notes:");
        for n in notes {
            let _ = writeln!(s, "  {n}");
        }
    }
    s
}

pub fn render(out: RunOutput) -> Result<Artifacts> {
    let mut result_json = serde_json::to_string_pretty(&out)?;
    result_json.push('\n');
    Ok(Artifacts { sweep_csv: sweep_csv(&out)?, report: report(&out), result_json, output: out })
}

pub fn write_artifacts(a: &Artifacts, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, text) in [("result.json", &a.result_json), ("sweep.csv", &a.sweep_csv), ("report.txt", &a.report)] {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct SpectrumRow {
    detuning_ghz: f64,
    transmission: f64,
}

/// Reads a `detuning_ghz,transmission` CSV and fits the doublet model.
pub fn fit_csv(path: &Path) -> Result<DoubletFit> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["detuning_ghz", "transmission"] {
        bail!("expected header `detuning_ghz,transmission`, got `{}`", headers.iter().collect::<Vec<_>>().join(","));
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (i, row) in reader.deserialize::<SpectrumRow>().enumerate() {
        let row = row.with_context(|| format!("row {}", i + 2))?;
        x.push(row.detuning_ghz);
        y.push(row.transmission);
    }
    Ok(fit_doublet(&x, &y)?)
}
