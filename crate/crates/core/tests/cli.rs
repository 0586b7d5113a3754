use std::fs;
use std::path::Path;
use std::process::Command;

use hgt::samplers::RandomStream;
use hgt::sim::{generate_covid_like, CovidLikeConfig};

fn hgt(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hgt"))
        .args(args)
        .env_remove("HGT_THREADS")
        .output()
        .expect("binary runs")
}

fn small_dataset(dir: &Path) {
    let config = CovidLikeConfig {
        days: 10,
        regions: 3,
        ..CovidLikeConfig::default()
    };
    let data = generate_covid_like(&config, &mut RandomStream::new(5, 0)).unwrap();
    data.dataset
        .write_csv_path(&dir.join("series.csv"))
        .unwrap();
}

fn write_config(dir: &Path, extra: &str) -> String {
    let text = format!(
        "data.path = \"series.csv\"\n\
         split.train_end = 8\n\
         split.validation_days = [9]\n\
         split.test_days = [10]\n\
         basis.region_knots = 3\n\
         basis.shared_knots = 4\n\
         chain.iterations = 60\n\
         chain.burn_in = 30\n\
         forecast.draws = 40\n{extra}"
    );
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn fit_forecast_diagnose_and_export_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path());
    let cfg = write_config(dir.path(), "link.mode = \"linear\"\n");
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();

    let fit = hgt(&[
        "fit",
        "--config",
        &cfg,
        "--out",
        out_s,
        "--chains",
        "2",
        "--threads",
        "1",
    ]);
    assert!(
        fit.status.success(),
        "{}",
        String::from_utf8_lossy(&fit.stderr)
    );
    for f in [
        "chain_0.dump",
        "chain_1.dump",
        "summary.csv",
        "rhat.csv",
        "residuals.csv",
        "fitted_vs_observed.csv",
        "shared_effect.csv",
        "kappa.csv",
        "forecast.csv",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert!(!out.join("FAILED").exists());
    let forecast = fs::read_to_string(out.join("forecast.csv")).unwrap();
    assert!(forecast.starts_with("row,series,day,observed,mean,variance,lower,upper\n"));
    // 1 gaussian + 1 binomial + 3 regions x 3 count series on the test day.
    assert_eq!(forecast.lines().count(), 1 + 11);

    let again = hgt(&[
        "forecast", "--config", &cfg, "--out", out_s, "--chains", "2",
    ]);
    assert!(
        again.status.success(),
        "{}",
        String::from_utf8_lossy(&again.stderr)
    );

    let diag = hgt(&["diagnose", "--out", out_s]);
    assert!(
        diag.status.success(),
        "{}",
        String::from_utf8_lossy(&diag.stderr)
    );
    let residuals = fs::read_to_string(out.join("residuals.csv")).unwrap();
    assert!(residuals.starts_with("cell,median,lower,upper,contains_zero\n"));

    let basis_out = dir.path().join("basis");
    let export = hgt(&[
        "export-basis",
        "--config",
        &cfg,
        "--out",
        basis_out.to_str().unwrap(),
    ]);
    assert!(
        export.status.success(),
        "{}",
        String::from_utf8_lossy(&export.stderr)
    );
    let basis = fs::read_to_string(basis_out.join("basis.csv")).unwrap();
    assert!(basis.starts_with("row,col,value\n"));
    assert!(basis_out.join("design.csv").exists());
}

#[test]
fn failing_stage_sets_exit_code_and_marker() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path());
    // Linear link without validation days is rejected while configuring.
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "data.path = \"series.csv\"\nlink.mode = \"linear\"\n").unwrap();
    let out = dir.path().join("out");
    let run = hgt(&[
        "fit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!run.status.success());
    let marker = fs::read_to_string(out.join("FAILED")).unwrap();
    assert!(marker.starts_with("stage: config\n"), "{marker}");
}

#[test]
fn malformed_input_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("series.csv"),
        "series,value,trials,region,day,death_flag,recovery_flag\n\
         binomial,101,100,,1,,\n",
    )
    .unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("out");
    let run = hgt(&["fit", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(!run.status.success());
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("line 2"), "{stderr}");
    assert!(fs::read_to_string(out.join("FAILED"))
        .unwrap()
        .starts_with("stage: ingest"));
}

#[test]
fn simulate_smoke_run_writes_benchmark_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.toml");
    fs::write(
        &cfg,
        "sim.replicates = 1\nsim.iterations = 10\nsim.burn_in = 5\nsim.methods = [\"hgt-sme\", \"saturated\", \"truth\"]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let start = std::time::Instant::now();
    let run = hgt(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(start.elapsed().as_secs() < 60);
    let table = fs::read_to_string(out.join("benchmark.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next(),
        Some("replicate,method,rmse,containment_fraction,wall_seconds")
    );
    assert_eq!(lines.count(), 3);
    assert!(out.join("residual_vs_x2.csv").exists());
}

#[test]
fn unknown_method_lists_the_available_ones() {
    let dir = tempfile::tempdir().unwrap();
    let run = hgt(&[
        "simulate",
        "--methods",
        "bart",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!run.status.success());
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("hgt-sme, saturated, truth"), "{stderr}");
}

#[test]
fn thread_variable_must_be_numeric() {
    let dir = tempfile::tempdir().unwrap();
    let run = Command::new(env!("CARGO_BIN_EXE_hgt"))
        .args(["diagnose", "--out", dir.path().to_str().unwrap()])
        .env("HGT_THREADS", "many")
        .output()
        .unwrap();
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("HGT_THREADS"));
}
