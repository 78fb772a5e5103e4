use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use freqbin::experiments::{ChipConfig, ExperimentKind};
use freqbin::resonator::{dr_through_spectrum, DrParams};
use freqbin_cli::{execute, parse_manifest, render, RunOutput};
use proptest::prelude::*;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_freqbin"));
    c.env_remove("FREQBIN_OUT");
    c
}

fn manifests() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("manifests")
}

fn run_manifest(manifest: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(manifest).arg("--out").arg(out).args(extra).output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn sha256(path: &Path) -> Vec<u8> {
    Sha256::digest(fs::read(path).unwrap()).to_vec()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn minimal_manifest_takes_every_default() {
    let m = parse_manifest(r#"{"experiment":"hom"}"#, false).unwrap();
    assert_eq!(m.schema_version, 1);
    assert_eq!(m.experiment, ExperimentKind::Hom);
    assert_eq!(m.config, ChipConfig::for_experiment(ExperimentKind::Hom));
    assert_eq!(m.seed, 0);
    assert_eq!(m.sweep.values().len(), 101);
    let c = &m.config;
    assert_eq!(c.grid.spacing_ghz, 12.95);
    assert_eq!(c.r3.linewidth_fwhm_ghz, 4.0);
    assert_eq!(c.r3.fsr_ghz, 100.0);
    assert_eq!(c.dr1.sideband_suppression_db, 24.0);
    assert_eq!(c.global_efficiency, 0.69);
    assert_eq!(c.detector.coincidence_window_ps, 512.0);
}

#[test]
fn cz_requires_the_standard_splitting() {
    let text = r#"{"experiment":"cz","config":{"dr2":{"transmissivity_T":0.5}}}"#;
    let e = parse_manifest(text, false).unwrap_err();
    assert_eq!(e.pointer, "/config/dr2/transmissivity_T");
    assert!(parse_manifest(text, true).is_ok());
    let e = parse_manifest(r#"{"experiment":"cz","config":{"r2":0.5}}"#, false).unwrap_err();
    assert_eq!(e.pointer, "/config/r2");
}

#[test]
fn parse_errors_carry_json_pointers() {
    let cases = [
        (r#"{"experiment":"hom","confg":{}}"#, "/confg"),
        (r#"{"experiment":"hom","config":{"dr3":{"phase_thetaa":1}}}"#, "/config/dr3/phase_thetaa"),
        (r#"{"experiment":"hom","config":{"r4":{"linewidth_fwhm_ghz":-1}}}"#, "/config/r4/linewidth_fwhm_ghz"),
        (r#"{"experiment":"hom","config":{"global_efficiency":1.5}}"#, "/config/global_efficiency"),
        (r#"{"experiment":"hom","config":{"logical_bins":[0,1,2,"x"]}}"#, "/config/logical_bins/3"),
        (r#"{"experiment":"hom","sweep":{"values":[0.2,1.5]}}"#, "/sweep"),
        (r#"{"experiment":"tomography"}"#, "/experiment"),
        (r#"{"experiment":"hom","schema_version":7}"#, "/schema_version"),
        (r#"{"config":{}}"#, ""),
        (r#"{"experiment":"hom""#, ""),
        (r#"[1, 2]"#, ""),
    ];
    for (text, pointer) in cases {
        let e = parse_manifest(text, false).unwrap_err();
        assert_eq!(e.pointer, pointer, "{text}: {e}");
    }
}

#[test]
fn shipped_manifests_parse() {
    for entry in fs::read_dir(manifests()).unwrap() {
        let text = fs::read_to_string(entry.unwrap().path()).unwrap();
        parse_manifest(&text, false).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn strict_parse_round_trips(
        kind in 0usize..5, seed in any::<u64>(), eta in 0.1f64..=1.0, car in proptest::option::of(1.5f64..1e4),
        s_db in 0.0f64..60.0, v in 0.0f64..=1.0, points in 2usize..50, ideal in any::<bool>(),
    ) {
        let kind = ExperimentKind::ALL[kind];
        let car = car.map_or("null".to_string(), |c| c.to_string());
        let sweep = if kind == ExperimentKind::Cz { String::new() } else {
            format!(r#","sweep":{{"start":0.0,"stop":1.0,"points":{points}}}"#)
        };
        let text = format!(
            r#"{{"experiment":"{}","seed":{seed},"options":{{"preset":"{}"}}{sweep},
                "config":{{"global_efficiency":{eta},"source":{{"car":{car},"indistinguishability":{v}}},
                "dr1":{{"sideband_suppression_db":{s_db}}}}}}}"#,
            kind.name(),
            if ideal { "ideal" } else { "device" },
        );
        let m = parse_manifest(&text, false).unwrap();
        let again = parse_manifest(&serde_json::to_string(&m).unwrap(), false).unwrap();
        prop_assert_eq!(&again, &m);
        let pretty = parse_manifest(&serde_json::to_string_pretty(&m).unwrap(), false).unwrap();
        prop_assert_eq!(pretty, m);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    for name in ["hom", "cz", "bell"] {
        let m = manifests().join(format!("{name}.json"));
        let (a, b, c) = (dir.path().join(format!("{name}_a")), dir.path().join(format!("{name}_b")), dir.path().join(format!("{name}_c")));
        assert!(run_manifest(&m, &a, &[]).status.success());
        assert!(run_manifest(&m, &b, &[]).status.success());
        assert!(run_manifest(&m, &c, &["--seed", "12345"]).status.success());
        assert_eq!(sha256(&a.join("result.json")), sha256(&b.join("result.json")), "{name}");
        assert_ne!(sha256(&a.join("result.json")), sha256(&c.join("result.json")), "{name}");
        assert_eq!(fs::read(a.join("sweep.csv")).unwrap(), fs::read(b.join("sweep.csv")).unwrap());
    }
}

#[test]
fn hom_sweep_csv_schema() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("hom");
    assert!(run_manifest(&manifests().join("hom.json"), &out, &[]).status.success());
    let mut reader = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["reflectivity", "p_cc", "visibility"]);
    let rows: Vec<Vec<f64>> = reader.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().flatten().all(|x: &f64| x.is_finite()));
    let balanced = rows.iter().find(|r| r[0] == 0.5).unwrap();
    // Calibrated preset: indistinguishability 0.949 leaves (1 - v)/2 at balance.
    assert!((balanced[1] - 0.051 / 2.0).abs() < 1e-12);
    assert!((balanced[2] - 0.949).abs() < 0.002);
}

#[test]
fn csv_headers_match_the_schema_file() {
    let schema: BTreeMap<String, Vec<String>> =
        serde_json::from_str(&fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/csv_columns.json")).unwrap())
            .unwrap();
    let cases = [
        ("fmzi_quantum", r#"{"experiment":"fmzi","sweep":{"start":0,"stop":3.14,"points":3}}"#),
        ("fmzi_classical", r#"{"experiment":"fmzi","options":{"fmzi_mode":"classical"},"sweep":{"start":0,"stop":3.14,"points":3}}"#),
        ("hom", r#"{"experiment":"hom","sweep":{"values":[0.5]}}"#),
        ("cz", r#"{"experiment":"cz"}"#),
        ("bell", r#"{"experiment":"bell","sweep":{"start":0,"stop":3.14,"points":3}}"#),
        ("spectroscopy_dr", r#"{"experiment":"spectroscopy","options":{"spectroscopy_target":"dr2"}}"#),
        ("spectroscopy_filters", r#"{"experiment":"spectroscopy","options":{"spectroscopy_target":"filters"}}"#),
    ];
    for (key, text) in cases {
        let m = parse_manifest(text, false).unwrap();
        let a = render(execute(&m, false).unwrap()).unwrap();
        let header = a.sweep_csv.lines().next().unwrap();
        assert_eq!(header, schema[key].join(","), "{key}");
        let mut reader = csv::Reader::from_reader(a.sweep_csv.as_bytes());
        for record in reader.records() {
            for cell in record.unwrap().iter() {
                if let Ok(x) = cell.parse::<f64>() {
                    assert!(x.is_finite());
                }
            }
        }
    }
    assert_eq!(schema.len(), cases.len());
}

#[test]
fn result_json_embeds_the_resolved_config() {
    let dir = TempDir::new().unwrap();
    let manifest = write(&dir, "m.json", r#"{"experiment":"bell","config":{"global_efficiency":0.5},"sweep":{"values":[0,1]}}"#);
    let out = dir.path().join("o");
    assert!(run_manifest(&manifest, &out, &[]).status.success());
    let result: RunOutput = serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    let mut want = ChipConfig::for_experiment(ExperimentKind::Bell);
    want.global_efficiency = 0.5;
    assert_eq!(result.manifest.config, want);
    assert_eq!(result.results[0].config, want);
    let raw: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert!(raw["manifest"]["config"]["dr3"]["resonator"]["kappa2_ghz"].is_number());
}

#[test]
fn cz_report_lists_the_bound_against_its_target() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cz");
    let o = run_manifest(&manifests().join("cz.json"), &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    let header = report.lines().find(|l| l.starts_with("metric")).unwrap();
    assert!(header.contains("value") && header.contains("sigma") && header.contains("target"));
    let bound = report.lines().find(|l| l.starts_with("process_bound ")).unwrap();
    let value: f64 = bound.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((0.90..=0.93).contains(&value), "{bound}");
    assert!(bound.contains("0.914"));
}

#[test]
fn nonstandard_cz_needs_the_flag() {
    let dir = TempDir::new().unwrap();
    let manifest = write(&dir, "m.json", r#"{"experiment":"cz","config":{"dr2":{"transmissivity_T":0.5}}}"#);
    let o = run_manifest(&manifest, &dir.path().join("a"), &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("/config/dr2/transmissivity_T"));
    assert!(!dir.path().join("a").exists());
    let o = run_manifest(&manifest, &dir.path().join("b"), &["--allow-nonstandard"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("b/result.json").exists());
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = TempDir::new().unwrap();
    let manifest = write(&dir, "m.json", r#"{"experiment":"hom","sweep":{"values":[0.5]}}"#);
    let env_out = dir.path().join("from_env");
    let o = bin().arg("run").arg(&manifest).env("FREQBIN_OUT", &env_out).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(env_out.join("sweep.csv").exists());

    let manifest = write(&dir, "m2.json", &format!(r#"{{"experiment":"hom","sweep":{{"values":[0.5]}},"output_dir":{:?}}}"#, dir.path().join("from_manifest")));
    let o = bin().arg("run").arg(&manifest).env("FREQBIN_OUT", &env_out).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("from_manifest/report.txt").exists());
}

#[test]
fn bad_manifests_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    for (name, text) in [("malformed", r#"{"experiment":"#), ("unknown", r#"{"experiment":"hom","extra":1}"#)] {
        let o = run_manifest(&write(&dir, name, text), &dir.path().join(name).with_extension("out"), &[]);
        assert!(!o.status.success());
        assert!(stderr(&o).contains("manifest error"));
    }
    let o = run_manifest(&dir.path().join("missing.json"), &dir.path().join("x"), &[]);
    assert!(!o.status.success());
}

#[test]
fn list_names_five_experiments() {
    let o = bin().arg("list").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    for k in ExperimentKind::ALL {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(k.name())));
    }
}

#[test]
fn fit_reads_a_spectrum_csv() {
    let dir = TempDir::new().unwrap();
    let x: Vec<f64> = (0..=800).map(|i| -25.0 + i as f64 / 16.0).collect();
    let t = dr_through_spectrum(&DrParams { g_ghz: 6.745, ..DrParams::default() }, &x);
    let mut w = csv::Writer::from_path(dir.path().join("s.csv")).unwrap();
    w.write_record(["detuning_ghz", "transmission"]).unwrap();
    for (a, b) in x.iter().zip(&t) {
        w.write_record([a.to_string(), b.to_string()]).unwrap();
    }
    w.flush().unwrap();
    let o = bin().arg("fit").arg(dir.path().join("s.csv")).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let fit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((fit["two_g"].as_f64().unwrap() - 13.49).abs() < 0.07);

    let bad = write(&dir, "bad.csv", "freq,t\n0,1\n");
    let o = bin().arg("fit").arg(bad).output().unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("detuning_ghz,transmission"));
}
