//! End-to-end runs of the shipped configs and of the `fluxlab` binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use fluxlab::analysis::is_strictly_decreasing;
use fluxlab_cli::report::convergence;
use fluxlab_cli::table::Cell;
use fluxlab_cli::{load_config, parse_config, run, ExperimentKind, RunOptions};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn column(t: &fluxlab_cli::table::Table, name: &str) -> Vec<f64> {
    let i = t.columns.iter().position(|c| *c == name).expect("column exists");
    t.rows
        .iter()
        .map(|r| match r[i] {
            Cell::Num(x) => x,
            Cell::Int(n) => n as f64,
            _ => panic!("non-numeric cell"),
        })
        .collect()
}

#[test]
fn every_shipped_config_parses() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            load_config(&path).unwrap_or_else(|e| panic!("{}: {e:?}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 10);
}

#[test]
fn fas_scan_gap_shrinks_with_radius() {
    let config = load_config(&configs_dir().join("c1_fas_scan_g1.toml")).unwrap();
    let art = run(&config, &RunOptions::default()).unwrap();
    let gaps = column(&art.tables[0], "gap");
    assert_eq!(gaps.len(), 3);
    assert!(is_strictly_decreasing(&gaps), "{gaps:?}");
    let json = art.summary();
    let first = json["tables"][0]["rows"][0]["gap"].as_f64().unwrap();
    assert_eq!(first, gaps[0]);
}

#[test]
fn sict_csv_matches_golden_and_is_reproducible() {
    let config = load_config(&configs_dir().join("c6_sict_g1.toml")).unwrap();
    let a = run(&config, &RunOptions::default()).unwrap().tables[0].to_csv().unwrap();
    let b = run(&config, &RunOptions::default()).unwrap().tables[0].to_csv().unwrap();
    assert_eq!(a, b);
    let golden = golden_dir().join("sict_g1.csv");
    if std::env::var_os("FLUXLAB_BLESS").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&golden, &a).unwrap();
    }
    let expected = std::fs::read_to_string(&golden).expect("golden file exists; set FLUXLAB_BLESS=1 to create it");
    assert_eq!(a, expected);
}

const SMALL_BOHM: &str = r#"
experiment = "bohm"
[packet]
preset = "G2"
[cone]
axis = [0, 0, 1]
half_angle_deg = 30
[scan]
radii = [10]
[ensemble]
n = 300
seed = 5
"#;

#[test]
fn bohm_is_deterministic_per_seed() {
    let config = parse_config(SMALL_BOHM).unwrap();
    let a = run(&config, &RunOptions::default()).unwrap();
    let b = run(&config, &RunOptions::default()).unwrap();
    assert_eq!(a.tables, b.tables);
    let c = run(
        &config,
        &RunOptions {
            seed: Some(6),
            dump_crossings: true,
        },
    )
    .unwrap();
    assert_eq!(column(&c.tables[0], "seed"), [6.0]);
    assert_eq!(c.seed, Some(6));
    let dump = &c.tables[1];
    assert_eq!(dump.name, "crossings");
    let trajectories: std::collections::BTreeSet<i64> = dump
        .rows
        .iter()
        .map(|r| match r[1] {
            Cell::Int(i) => i,
            _ => panic!(),
        })
        .collect();
    assert_eq!(trajectories.len(), 300);
}

#[test]
fn window_report_has_steep_slope() {
    let config = load_config(&configs_dir().join("c5_window_g1.toml")).unwrap();
    let art = run(&config, &RunOptions::default()).unwrap();
    let csv = art.tables[0].to_csv().unwrap();
    let c = convergence("window", &csv, Some("R"), &["window_flux".into()]).unwrap();
    assert!(c.slope("window_flux").unwrap() <= -0.8);
}

#[test]
fn remainder_report_slope_for_the_single_gaussian() {
    let config = load_config(&configs_dir().join("c4_remainder_g1.toml")).unwrap();
    let art = run(&config, &RunOptions::default()).unwrap();
    assert_eq!(art.experiment, ExperimentKind::Remainder);
    let csv = art.tables[0].to_csv().unwrap();
    let c = convergence("remainder", &csv, None, &["fas_distance".into()]).unwrap();
    let slope = c.slope("fas_distance").unwrap();
    // The 1/R term cancels for this packet, so the decay is steeper than 1/R.
    assert!(slope <= -0.9, "{slope}");
    assert_eq!(column(&art.tables[1], "violations"), [0.0]);
}

fn fluxlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fluxlab"))
}

#[test]
fn binary_reports_every_config_error_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "experiment = \"sict\"\n[packet]\npreset = \"G1\"\n[cone]\naxis = [0, 0, 1]\nhalf_angle_deg = 200\n[scan]\ntimes = [1]\nspeed = 3\n",
    )
    .unwrap();
    let out = fluxlab()
        .args(["sict", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
    let paths: Vec<&str> = err["issues"].as_array().unwrap().iter().map(|i| i["path"].as_str().unwrap()).collect();
    assert_eq!(paths, ["cone.half_angle_deg", "scan.speed"]);
}

#[test]
fn binary_runs_sict_and_reports_it() {
    let dir = tempfile::tempdir().unwrap();
    let status = fluxlab()
        .args(["sict", "--workers", "2", "--config"])
        .arg(configs_dir().join("c6_sict_full_cone_g1.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = dir.path().join("sict.csv");
    assert!(dir.path().join("sict.json").exists());
    let out = fluxlab().arg("report").arg(&csv).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("slope"));
}

#[test]
fn binary_rejects_mismatched_subcommand_and_empty_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxlab()
        .args(["bohm", "--config"])
        .arg(configs_dir().join("c6_sict_g1.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "# fluxlab-csv v1 table=fas-scan\nR,gap\n").unwrap();
    let out = fluxlab().arg("report").arg(&empty).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty CSV"));
}
