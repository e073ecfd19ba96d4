//! End-to-end checks of the `routeswap` binary: exit codes, file outputs,
//! and the bundled data files staying in sync with the built-in fixture.

use std::path::Path;
use std::process::Command;

use routeswap::io::{load_flow_state, load_network, save_network};
use routeswap::scenarios::{build_example_network, example_reference_ue};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_routeswap"))
}

fn data(file: &str) -> String {
    format!("{}/data/{file}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn bundled_network_file_matches_builtin_fixture() {
    let shipped = load_network(Path::new(&data("example_network.json"))).unwrap();
    let builtin = build_example_network();
    assert_eq!(shipped.num_links(), builtin.num_links());
    assert_eq!(shipped.num_routes(), builtin.num_routes());
    for (a, b) in shipped.links().iter().zip(builtin.links()) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.free_flow_time.to_bits(), b.free_flow_time.to_bits());
        assert_eq!(a.capacity.to_bits(), b.capacity.to_bits());
    }
    for (a, b) in shipped.routes().iter().zip(builtin.routes()) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.od_pair, b.od_pair);
        assert_eq!(a.links, b.links);
    }
    let reference = load_flow_state(Path::new(&data("example_reference_ue.json")), &builtin).unwrap();
    assert_eq!(reference.flows, example_reference_ue().flows);
}

#[test]
fn bundled_scenarios_resolve() {
    for file in ["scr_sweep.json", "acr_sweep.json", "scr_small.json"] {
        let path = data(file);
        let config = routeswap::io::load_scenario_config(Path::new(&path)).unwrap();
        let spec = config.resolve(Path::new(&path)).unwrap();
        spec.validate().unwrap();
        assert!(!spec.theta_grid.is_empty());
    }
    // the full sweeps cover the 30 x 9 grid
    let path = data("scr_sweep.json");
    let config = routeswap::io::load_scenario_config(Path::new(&path)).unwrap();
    let spec = config.resolve(Path::new(&path)).unwrap();
    assert_eq!(spec.theta_grid.len() * spec.cap_grid.len(), 270);
}

#[test]
fn validate_exit_codes_and_messages() {
    let ok = bin().args(["validate", &data("example_network.json")]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let mut broken = build_example_network().data().clone();
    broken.routes[2].links.push("ghost".into());
    let bad = dir.path().join("bad.json");
    save_network(&bad, &broken).unwrap();
    let out = bin().args(["validate"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("route `3`"), "stderr names the route: {stderr}");
    assert!(stderr.contains("ghost"), "stderr names the missing link: {stderr}");

    let garbled = dir.path().join("garbled.json");
    std::fs::write(&garbled, "{").unwrap();
    let out = bin().args(["validate"]).arg(&garbled).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_outputs_and_converges_without_disruption() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "simulate",
            &data("scr_small.json"),
            "--theta",
            "0.1",
            "--cap-fraction",
            "0",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["termination"], "converged");
    assert_eq!(summary["days"], 1);
    assert_eq!(summary["ad"], 0.0);
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("day,f_1,"));
    assert!(header.ends_with("step_norm,rbap_value,lyapunov_value"));
}

#[test]
fn simulate_refuses_infeasible_reference() {
    let dir = tempfile::tempdir().unwrap();
    save_network(&dir.path().join("net.json"), build_example_network().data()).unwrap();
    std::fs::write(
        dir.path().join("ref.json"),
        r#"{"flows": {"1": 99, "2": 20, "3": 25, "4": 25, "5": 25, "6": 25, "7": 20, "8": 20}}"#,
    )
    .unwrap();
    let scenario = dir.path().join("scenario.json");
    std::fs::write(
        &scenario,
        r#"{
            "network": "net.json",
            "protocol": {"variant": "npsd", "theta": 0.1},
            "stepper": {"max_days": 10, "convergence_tol": 1e-8},
            "reductions": [{"link": "11", "fraction": 0.5}],
            "theta_grid": [0.1],
            "cap_grid": [0.5],
            "reference": "ref.json"
        }"#,
    )
    .unwrap();
    let out = bin().args(["simulate"]).arg(&scenario).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("demand"), "names the violated constraint: {stderr}");
}

#[test]
fn classify_roundtrips_sweep_output() {
    let dir = tempfile::tempdir().unwrap();
    let sweep_out = dir.path().join("sweep");
    let status = bin()
        .args(["sweep", &data("scr_small.json"), "--jobs", "2", "--out"])
        .arg(&sweep_out)
        .status()
        .unwrap();
    assert!(status.success());
    let classify_out = dir.path().join("classify");
    let out = bin()
        .args(["classify"])
        .arg(sweep_out.join("sweep.csv"))
        .arg("--out")
        .arg(&classify_out)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let direct = std::fs::read(sweep_out.join("phases.json")).unwrap();
    let rederived = std::fs::read(classify_out.join("phases.json")).unwrap();
    assert_eq!(direct, rederived);
}

#[test]
fn ue_reports_symmetric_link_flows() {
    let out = bin()
        .args(["ue", &data("example_network.json"), "--tol", "1e-10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["is_wardrop_ue"], true);
    let flows = &report["link_flows"];
    for (a, b) in [("1", "4"), ("2", "3"), ("9", "13"), ("10", "12"), ("14", "17")] {
        let (va, vb) = (flows[a].as_f64().unwrap(), flows[b].as_f64().unwrap());
        assert!((va - vb).abs() < 1e-6, "link {a} {va} vs link {b} {vb}");
    }

    // unreachable tolerance: nonzero exit, gap reported
    let out = bin()
        .args([
            "ue",
            &data("example_network.json"),
            "--tol",
            "1e-30",
            "--max-iters",
            "5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("relative gap"));
}
