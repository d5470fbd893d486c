use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use multicurve_cli::config::RunConfig;
use multicurve_cli::{cmd_bond, cmd_fra};
use multicurve_core::pricing::fair_rate_risky;
use multicurve_core::{AffineModel, CapletContract, Curve, FactorSpec, FraContract};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multicurve"))
}

fn write_config(dir: &Path, cfg: &RunConfig) -> PathBuf {
    let path = dir.join("run.json");
    fs::write(&path, cfg.to_json()).unwrap();
    path
}

fn run(dir: &Path, cfg: &RunConfig, args: &[&str]) -> Output {
    let config = write_config(dir, cfg);
    bin()
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.simulation.n_paths = 2000;
    cfg.simulation.n_steps_per_year = 16;
    cfg
}

#[test]
fn config_round_trips_and_rejects_unknown_keys() {
    let cfg = RunConfig::default();
    assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    let mut value: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
    value["simulation"]["n_path"] = 5.into();
    let err = RunConfig::from_json(&value.to_string()).unwrap_err();
    assert_eq!(err.exit_code(), 2);

    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), value.to_string()).unwrap();
    let out = bin()
        .args(["bond", "--config"])
        .arg(dir.path().join("bad.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
}

#[test]
fn bond_table_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    ok(&run(dir.path(), &cfg, &["bond"]));
    let (header, rows) = read_csv(&dir.path().join("out/bond.csv"));
    assert_eq!(header, ["T", "p", "p_bar", "spread"]);
    let expected = cmd_bond(&cfg, &cfg.bond.maturities).unwrap();
    assert_eq!(rows.len(), expected.len());
    let model = AffineModel::new(cfg.model).unwrap();
    let s = cfg.model.initial_state();
    for (row, e) in rows.iter().zip(&expected) {
        let t = num(&row[0]);
        assert_eq!(
            num(&row[1]),
            model.bond_price(Curve::RiskFree, &s, t).unwrap()
        );
        assert_eq!(num(&row[2]), model.bond_price(Curve::Risky, &s, t).unwrap());
        assert_eq!(num(&row[3]), e.spread);
        if t == 0.0 {
            assert_eq!((num(&row[1]), num(&row[2])), (1.0, 1.0));
        }
    }
}

#[test]
fn uncorrelated_bond_curve_is_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.model.kappa = 0.0;
    ok(&run(
        dir.path(),
        &cfg,
        &[
            "bond",
            "--maturities",
            "0,0.25,1,3,7,15,30",
            "--format",
            "json",
        ],
    ));
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/bond.json")).unwrap())
            .unwrap();
    assert_eq!(rows.len(), 7);
    for r in rows {
        assert!(
            r["p_bar"].as_f64().unwrap() <= r["p"].as_f64().unwrap(),
            "{r}"
        );
    }
}

#[test]
fn fra_report_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.model.kappa = 0.0;
    let model = AffineModel::new(cfg.model).unwrap();
    let fair = fair_rate_risky(&model, &cfg.model.initial_state(), 1.0, 0.5).unwrap();
    cfg.fras = vec![
        FraContract {
            maturity: 1.0,
            delta: 0.5,
            strike: fair,
            notional: 1.0,
        },
        FraContract {
            maturity: 3.0,
            delta: 0.25,
            strike: 0.01,
            notional: 1e6,
        },
    ];
    ok(&run(dir.path(), &cfg, &["fra"]));
    let (header, rows) = read_csv(&dir.path().join("out/fra.csv"));
    let col = |name| column(&header, name);
    for row in &rows {
        assert_eq!(num(&row[col("corr_exponential")]), 1.0);
        let product = num(&row[col("nu_single")]) * num(&row[col("adjustment")]);
        assert!((product / num(&row[col("nu_bar")]) - 1.0).abs() < 1e-15);
        assert!((num(&row[col("nu_bar_direct")]) / num(&row[col("nu_bar")]) - 1.0).abs() < 1e-8);
        assert!(num(&row[col("k_risky")]) >= num(&row[col("k_single")]));
    }
    assert!(num(&rows[0][col("value")]).abs() < 1e-15);
    let lib = cmd_fra(&cfg).unwrap();
    assert_eq!(num(&rows[1][col("value")]), lib[1].value);
}

#[test]
fn caplet_report_with_monte_carlo_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    // No spread: factor 3 frozen at zero and κ = 0.
    cfg.model.kappa = 0.0;
    cfg.model.factor3 = FactorSpec::square_root(1e-12, 0.8, 1e-6, 0.0);
    cfg.simulation.n_paths = 20_000;
    let model = AffineModel::new(cfg.model).unwrap();
    let atm = fair_rate_risky(&model, &cfg.model.initial_state(), 1.0, 0.5).unwrap();
    cfg.caplets = vec![
        CapletContract {
            maturity: 1.0,
            delta: 0.5,
            strike: atm,
        },
        CapletContract {
            maturity: 1.0,
            delta: 0.5,
            strike: 5.0,
        },
    ];
    ok(&run(dir.path(), &cfg, &["caplet", "--mc"]));
    let (header, rows) = read_csv(&dir.path().join("out/caplet.csv"));
    for name in ["price", "R", "v_max", "n_points", "mc_mean", "mc_se"] {
        column(&header, name);
    }
    assert_eq!(rows[0][column(&header, "mc_check")], "PASS");
    assert!(num(&rows[0][column(&header, "price")]) > 0.0);
    assert!(num(&rows[1][column(&header, "price")]) < 1e-12);
}

#[test]
fn forced_invalid_damping_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &small_config(), &["caplet", "--damping", "0.8"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("R = 0.8"));
    assert!(!dir.path().join("out/caplet.csv").exists());
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.paths.checkpoints = vec![0.5];
    let files = ["psi1.csv", "psi2.csv", "psi3.csv", "estimates.json"];
    ok(&run(dir.path(), &cfg, &["simulate", "--seed", "11"]));
    let first: Vec<Vec<u8>> = files
        .iter()
        .map(|f| fs::read(dir.path().join("out").join(f)).unwrap())
        .collect();
    ok(&run(dir.path(), &cfg, &["simulate", "--seed", "11"]));
    for (f, bytes) in files.iter().zip(&first) {
        assert_eq!(
            &fs::read(dir.path().join("out").join(f)).unwrap(),
            bytes,
            "{f}"
        );
    }
    let report: serde_json::Value = serde_json::from_slice(&first[3]).unwrap();
    assert_eq!(report["seed"], 11);
    assert_eq!(report["bonds"].as_array().unwrap().len(), 2);
    let (header, rows) = read_csv(&dir.path().join("out/psi2.csv"));
    assert_eq!(rows.len(), 2000);
    assert_eq!(header.len(), 1 + 16 + 1);
}

#[test]
fn calibrate_on_generated_quotes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    ok(&run(dir.path(), &cfg, &["calibrate"]));
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/calibration.json")).unwrap())
            .unwrap();
    assert_eq!(result["converged"], true);
    assert!(result["max_zcb_log_residual"].as_f64().unwrap() < 1e-8);
    assert!(result["max_fra_residual"].as_f64().unwrap() < 1e-8);

    // The written quotes can be fed back in.
    let quotes = dir.path().join("out/quotes.csv");
    let again = dir.path().join("again");
    let out = bin()
        .arg("calibrate")
        .arg("--config")
        .arg(write_config(dir.path(), &cfg))
        .arg("--quotes")
        .arg(&quotes)
        .arg("--out")
        .arg(&again)
        .output()
        .unwrap();
    ok(&out);
    assert!(again.join("calibration.json").exists());
    assert!(!again.join("quotes.csv").exists());
}

#[test]
fn missing_quote_file_is_a_clean_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &small_config(),
        &["calibrate", "--quotes", "/does/not/exist.csv"],
    );
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.contains("exist.csv"));
    assert!(!dir.path().join("out/calibration.json").exists());
}
