//! End-to-end tests of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

fn physchan(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_physchan"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_qpt_fidelity_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    assert_ok(&physchan(
        &[
            "simulate", "--channel", "depolarizing:0.05", "--n-photons", "20000", "--seed", "3",
            "--output", "data.json",
        ],
        d,
    ));
    assert_ok(&physchan(&["qpt", "--input", "data.json", "--output", "recon"], d));

    let recon = read_json(&d.join("recon.json"));
    assert_eq!(recon["command"], "qpt");
    assert_eq!(recon["physical"], true);
    assert!(recon["chi"]["re"].as_array().unwrap().len() == 4);
    let eigs = recon["eigenvalues"].as_array().unwrap();
    assert_eq!(eigs.len(), 4);
    assert!(eigs.iter().all(|e| e.as_f64().unwrap() >= -1e-9));

    let trace = std::fs::read_to_string(d.join("recon_trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,objective"));
    assert!(trace.lines().count() > 2);
    assert!(d.join("recon_eigenvalues.csv").exists());

    assert_ok(&physchan(
        &["fidelity", "--input", "recon.json", "--target", "ideal", "--output", "fid"],
        d,
    ));
    let fid = read_json(&d.join("fid.json"))["metrics"]["process_fidelity"].as_f64().unwrap();
    assert!((0.9..=1.0).contains(&fid), "fidelity {fid}");
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (name, seed) in [("a.json", "7"), ("b.json", "7"), ("c.json", "8")] {
        assert_ok(&physchan(
            &["simulate", "--channel", "bitflip:0.1", "--seed", seed, "--output", name],
            d,
        ));
    }
    let a = std::fs::read(d.join("a.json")).unwrap();
    let b = std::fs::read(d.join("b.json")).unwrap();
    let c = std::fs::read(d.join("c.json")).unwrap();
    assert_eq!(a, b, "same seed must produce byte-identical datasets");
    assert_ne!(a, c, "different seeds should differ");
}

#[test]
fn montecarlo_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&physchan(
        &["simulate", "--channel", "depolarizing:0.1", "--n-photons", "2000", "--output", "data.json"],
        d,
    ));
    for name in ["mc1", "mc2"] {
        assert_ok(&physchan(
            &[
                "montecarlo", "--input", "data.json", "--trials", "20", "--seed", "42",
                "--output", name,
            ],
            d,
        ));
    }
    let one = read_json(&d.join("mc1.json"));
    let two = read_json(&d.join("mc2.json"));
    assert_eq!(one["monte_carlo"], two["monte_carlo"]);
    assert_eq!(one["metrics"], two["metrics"]);
    let std_dev = one["metrics"]["fidelity_std"].as_f64().unwrap();
    assert!(std_dev > 0.0);
}

#[test]
fn six_by_six_analysis_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&physchan(
        &[
            "simulate", "--channel", "phaseflip:0.2", "--grid", "6x6", "--n-photons", "5000",
            "--output", "data.json",
        ],
        d,
    ));
    assert_ok(&physchan(
        &["qpt", "--input", "data.json", "--check-relaxation", "--output", "recon"],
        d,
    ));
    let recon = read_json(&d.join("recon.json"));
    assert!(recon["metrics"]["trace_relaxation_distance"].as_f64().unwrap() < 1e-2);

    assert_ok(&physchan(
        &["residual", "--input", "data.json", "--chi", "recon.json", "--output", "res"],
        d,
    ));
    let res = read_json(&d.join("res.json"));
    assert_eq!(res["residuals"]["residuals"].as_array().unwrap().len(), 36);
    assert!(res["metrics"]["residual_sigma"].as_f64().unwrap() >= 0.0);
    let csv = std::fs::read_to_string(d.join("res_residuals.csv")).unwrap();
    assert_eq!(csv.lines().count(), 37); // header + 36 cells

    assert_ok(&physchan(
        &["deviation", "--input", "data.json", "--chi", "recon.json", "--output", "dev"],
        d,
    ));
    let dev = read_json(&d.join("dev.json"))["metrics"]["average_state_deviation"]
        .as_f64()
        .unwrap();
    assert!((0.0..0.01).contains(&dev), "deviation {dev}");

    assert_ok(&physchan(&["eigreport", "--input", "recon.json", "--output", "eig"], d));
    assert_eq!(read_json(&d.join("eig.json"))["physical"], true);
}

#[test]
fn inversion_commands_flag_unphysical_results() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Low counts on a near-identity channel: the inversion is essentially
    // always unphysical (seed picked arbitrarily; property tested elsewhere).
    assert_ok(&physchan(
        &[
            "simulate", "--channel", "depolarizing:0.02", "--n-photons", "100", "--seed", "2",
            "--output", "data.json",
        ],
        d,
    ));
    assert_ok(&physchan(&["invert-qpt", "--input", "data.json", "--output", "inv"], d));
    let inv = read_json(&d.join("inv.json"));
    assert_eq!(inv["unconstrained"], true);
    assert_eq!(inv["command"], "invert-qpt");
    assert!(inv["eigenvalues"].as_array().unwrap().len() == 4);

    // The solver on the same data must report a physical spectrum.
    assert_ok(&physchan(&["qpt", "--input", "data.json", "--output", "recon"], d));
    assert_eq!(read_json(&d.join("recon.json"))["physical"], true);
}

#[test]
fn qst_commands_run_on_state_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let dataset = serde_json::json!({
        "schema_version": "1",
        "kind": "state_counts",
        "n_default": 1000,
        "records": [
            {"projector": "H", "count": 510},
            {"projector": "V", "count": 490},
            {"projector": "D", "count": 980},
            {"projector": "R", "count": 505},
        ],
    });
    std::fs::write(d.join("state.json"), serde_json::to_string_pretty(&dataset).unwrap()).unwrap();

    assert_ok(&physchan(&["qst", "--input", "state.json", "--output", "rho"], d));
    let rho = read_json(&d.join("rho.json"));
    let diag0 = rho["rho"]["re"][0][0].as_f64().unwrap();
    let diag1 = rho["rho"]["re"][1][1].as_f64().unwrap();
    assert!((diag0 + diag1 - 1.0).abs() < 1e-9);
    // Strong D component: large positive real off-diagonal.
    assert!(rho["rho"]["re"][0][1].as_f64().unwrap() > 0.3);

    assert_ok(&physchan(&["invert-qst", "--input", "state.json", "--output", "rho_inv"], d));
    assert_eq!(read_json(&d.join("rho_inv.json"))["unconstrained"], true);
}

#[test]
fn malformed_input_fails_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.json"), "{ not json").unwrap();
    let out = physchan(&["qpt", "--input", "bad.json", "--output", "x"], d);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error[E_PARSE]"), "stderr: {stderr}");
}

#[test]
fn missing_grid_cell_fails_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&physchan(
        &["simulate", "--channel", "identity", "--output", "data.json"],
        d,
    ));
    let mut v = read_json(&d.join("data.json"));
    let records = v["records"].as_array_mut().unwrap();
    records.retain(|r| !(r["input"] == "V" && r["projector"] == "D"));
    std::fs::write(d.join("data.json"), serde_json::to_string(&v).unwrap()).unwrap();

    let out = physchan(&["qpt", "--input", "data.json", "--output", "x"], d);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error[E_VALIDATE]"), "stderr: {stderr}");
    assert!(stderr.contains("(V, D)"), "stderr should name the missing cell: {stderr}");
}

#[test]
fn missing_file_fails_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = physchan(&["qpt", "--input", "nope.json", "--output", "x"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error[E_IO]"), "stderr: {stderr}");
}

#[test]
fn fidelity_accepts_result_file_targets() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&physchan(
        &["simulate", "--channel", "identity", "--noise", "none", "--output", "data.json"],
        d,
    ));
    assert_ok(&physchan(&["qpt", "--input", "data.json", "--output", "a"], d));
    assert_ok(&physchan(&["qpt", "--input", "data.json", "--output", "b"], d));
    assert_ok(&physchan(
        &["fidelity", "--input", "a.json", "--target", "b.json", "--output", "fid"],
        d,
    ));
    let fid = read_json(&d.join("fid.json"))["metrics"]["process_fidelity"].as_f64().unwrap();
    assert!(fid > 1.0 - 1e-6, "self-comparison fidelity {fid}");
}
