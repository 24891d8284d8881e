//! End-to-end tests of the das-sim binary: flags, config files, output
//! formats, determinism, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use das_sim::output::{parse_rows, render, CellAverageRow, RateCurveRow};
use das_sim::spec::OutputFormat;

fn das_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_das-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn das_sim_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_das-sim"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn modes_sizes_for_reference_systems() {
    let text = stdout_of(&das_sim(&["modes", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["ideal"]["size"], 4);
    assert_eq!(v["proposed"]["size"], 2);

    let text = stdout_of(&das_sim(&[
        "modes",
        "--n-ports",
        "5",
        "--k-users",
        "5",
        "--format",
        "json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["ideal"]["size"], 7625);
    assert_eq!(v["ideal"]["count_formula"], 7625);
    assert_eq!(v["proposed"]["size"], 27);

    let text = stdout_of(&das_sim(&[
        "modes",
        "--n-ports",
        "1",
        "--k-users",
        "1",
        "--format",
        "json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["ideal"]["modes"], serde_json::json!([[1]]));
}

#[test]
fn modes_csv_has_set_and_mode_columns() {
    let text = stdout_of(&das_sim(&["modes"]));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "set,size,mode");
    assert!(text.contains("ideal,4,\"[1,1]\""));
    assert!(text.contains("proposed,2,"));
}

#[test]
fn rate_curve_reproduces_crossover_labels() {
    let text = stdout_of(&das_sim(&[
        "rate-curve",
        "--snr",
        "10,40",
        "--realizations",
        "100",
    ]));
    let rows: Vec<RateCurveRow> = parse_rows(text.as_bytes(), OutputFormat::Csv).unwrap();
    assert_eq!(rows.len(), 8);
    let best = |snr: f64| {
        rows.iter()
            .filter(|r| r.snr_db == snr)
            .max_by(|a, b| a.closed_form_rate.total_cmp(&b.closed_form_rate))
            .unwrap()
            .mode
            .clone()
    };
    assert_eq!(best(10.0), "[1,2]");
    assert_eq!(best(40.0), "[1,1]");
}

#[test]
fn rate_curve_single_point_grid() {
    let text = stdout_of(&das_sim(&[
        "rate-curve",
        "--snr",
        "20",
        "--realizations",
        "60",
    ]));
    let rows: Vec<RateCurveRow> = parse_rows(text.as_bytes(), OutputFormat::Csv).unwrap();
    assert_eq!(rows.len(), 4);
}

#[test]
fn rate_curve_rerun_is_byte_identical() {
    let args = [
        "rate-curve",
        "--snr",
        "0,30",
        "--realizations",
        "150",
        "--seed",
        "9",
    ];
    let a = stdout_of(&das_sim(&args));
    let b = stdout_of(&das_sim(&args));
    assert_eq!(a, b);
}

#[test]
fn cell_average_smoke_run_single_drop() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("smoke.csv");
    let status = das_sim(&[
        "cell-average",
        "--drops",
        "1",
        "--realizations",
        "50",
        "--snr",
        "10",
        "--selector",
        "proposed",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let rows: Vec<CellAverageRow> =
        parse_rows(&std::fs::read(&out).unwrap(), OutputFormat::Csv).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].drops, 1);
    assert!(rows[0].std_error >= 0.0);
}

#[test]
fn cell_average_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, path: &Path| {
        let out = das_sim_with_env(
            &[
                "cell-average",
                "--drops",
                "16",
                "--realizations",
                "120",
                "--snr",
                "0,20,40",
                "--selector",
                "proposed",
                "--selector",
                "ideal-mc",
                "--seed",
                "5",
                "--out",
                path.to_str().unwrap(),
            ],
            &[("RAYON_NUM_THREADS", threads)],
        );
        assert!(out.status.success());
        std::fs::read(path).unwrap()
    };
    let single = run("1", &dir.path().join("t1.csv"));
    let multi = run("4", &dir.path().join("t4.csv"));
    assert_eq!(single, multi);
}

#[test]
fn csv_output_round_trips_byte_identically() {
    let text = stdout_of(&das_sim(&[
        "cell-average",
        "--drops",
        "3",
        "--realizations",
        "40",
        "--snr",
        "0,10",
    ]));
    let rows: Vec<CellAverageRow> = parse_rows(text.as_bytes(), OutputFormat::Csv).unwrap();
    let again = render(&rows, OutputFormat::Csv).unwrap();
    assert_eq!(text.as_bytes(), &again[..]);
}

#[test]
fn json_output_round_trips_byte_identically() {
    let text = stdout_of(&das_sim(&[
        "rate-curve",
        "--snr",
        "10",
        "--realizations",
        "40",
        "--format",
        "json",
    ]));
    let rows: Vec<RateCurveRow> = parse_rows(text.as_bytes(), OutputFormat::Json).unwrap();
    let again = render(&rows, OutputFormat::Json).unwrap();
    assert_eq!(text.as_bytes(), &again[..]);
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        r#"
scenario = "cell_average"

[geometry]
n_ports = 2
k_users = 2

[run]
drops = 5
realizations = 30
snr_grid_db = [0.0, 10.0]
selectors = ["proposed"]
"#,
    )
    .unwrap();
    let text = stdout_of(&das_sim(&[
        "cell-average",
        "--config",
        config.to_str().unwrap(),
        "--drops",
        "2",
    ]));
    let rows: Vec<CellAverageRow> = parse_rows(text.as_bytes(), OutputFormat::Csv).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].drops, 2, "flag must override the config file");
    assert_eq!(rows[0].realizations, 30, "config value must survive");
}

#[test]
fn desk_scale_preset() {
    let text = stdout_of(&das_sim(&[
        "cell-average",
        "--desk-scale",
        "--snr",
        "10",
        "--selector",
        "proposed",
    ]));
    let rows: Vec<CellAverageRow> = parse_rows(text.as_bytes(), OutputFormat::Csv).unwrap();
    assert_eq!(rows[0].drops, 200);
    assert_eq!(rows[0].realizations, 250);
}

#[test]
fn validate_quick_checks_pass() {
    let out = das_sim(&[
        "validate",
        "--checks",
        "counts,e1_bracket,pathloss_edge,crossover",
    ]);
    let text = stdout_of(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
    assert!(!text.contains("FAIL"));
}

#[test]
fn validate_fault_injection_reports_fallback() {
    let out = das_sim(&[
        "validate",
        "--checks",
        "conditioning",
        "--disable-tie-perturbation",
    ]);
    let text = stdout_of(&out);
    assert!(text.contains("PASS conditioning"));
    assert!(text.contains("tie spread off"));
    assert!(
        text.contains("Quadrature") || text.contains("MonteCarloFallback"),
        "fallback method not reported: {text}"
    );
}

#[test]
fn validate_empty_check_selection_is_noop() {
    let out = das_sim(&["validate", "--checks", ""]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn validate_unknown_check_is_config_error() {
    let out = das_sim(&["validate", "--checks", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_geometry_exits_with_config_code() {
    // rate-curve without user positions outside the 2x2 default scenario.
    let out = das_sim(&["rate-curve", "--n-ports", "3", "--k-users", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));

    let out = das_sim(&["cell-average", "--cell-radius", "-1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = das_sim(&["cell-average", "--config", "/no/such/file.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oversize_enumeration_exits_with_numerical_code() {
    let out = das_sim(&["modes", "--n-ports", "10", "--k-users", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical failure"));
}

#[test]
fn explicit_positions_flow_through() {
    let text = stdout_of(&das_sim(&[
        "modes",
        "--users",
        "-2.5,-2;3,4.5",
        "--ports",
        "4,0;-4,0",
        "--format",
        "json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["proposed"]["modes"][0], serde_json::json!([2, 1]));
}
