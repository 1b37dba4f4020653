use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aqualoc::harness::seeds::{child_seed, Stream};
use aqualoc::harness::{parse_scenario, run_simulation, ScenarioError, Simulation, EPOCH_COLUMNS};

fn scenario_file(name: &str) -> String {
    format!("{}/scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn stationary() -> String {
    fs::read_to_string(scenario_file("stationary_noiseless.toml")).unwrap()
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aqualoc")).args(args).output().unwrap()
}

fn write_scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn noiseless_stationary_fixes_within_a_decimeter() {
    let scenario = parse_scenario(&stationary()).unwrap();
    let (records, summary) = run_simulation(&scenario).unwrap();
    assert_eq!(records.len(), 10);
    assert_eq!(summary.fixes, 10);
    for r in &records {
        let err = r.raw_error.unwrap();
        assert!(err < 0.1, "epoch {}: {err}", r.epoch);
    }
}

#[test]
fn silent_channel_gives_only_fix_gaps() {
    let text = stationary().replace("detection_threshold = 10.0", "detection_threshold = 1e6");
    let scenario = parse_scenario(&text).unwrap();
    let (records, summary) = run_simulation(&scenario).unwrap();
    assert_eq!(summary.fixes, 0);
    assert_eq!(summary.fix_gaps, records.len());
    assert_eq!(summary.detection_rate, 0.0);
    assert!(summary.raw_rmse.is_none());
    assert!(summary.fused_rmse_all.is_some());
    for r in &records {
        assert!(r.estimate.is_none() && r.raw_error.is_none());
    }
}

#[test]
fn filter_time_follows_epochs() {
    let text = stationary().replace("detection_threshold = 10.0", "detection_threshold = 1e6");
    let scenario = parse_scenario(&text).unwrap();
    let (gaps, _) = run_simulation(&scenario).unwrap();
    let (fixes, _) = run_simulation(&parse_scenario(&stationary()).unwrap()).unwrap();
    for records in [gaps, fixes] {
        let mut last = f64::NEG_INFINITY;
        for r in &records {
            assert_eq!(r.fused.timestamp, r.timestamp);
            assert!(r.fused.timestamp > last);
            last = r.fused.timestamp;
        }
    }
}

#[test]
fn runs_are_reproducible_and_seed_sensitive() {
    let text = fs::read_to_string(scenario_file("canonical_noisy.toml")).unwrap();
    // first 12 epochs keep the test quick
    let short = text.replace("t = 119.0", "t = 11.0").replace("t = 80.0", "t = 8.0").replace("t = 40.0", "t = 4.0");
    let scenario = parse_scenario(&short).unwrap();
    let sim = Simulation::new(&scenario).unwrap();
    assert_eq!(sim.epoch_count(), 12);
    let a = sim.run().unwrap();
    let b = Simulation::new(&scenario).unwrap().run().unwrap();
    assert_eq!(a, b);

    let mut reseeded = scenario.clone();
    reseeded.set_seed(scenario.seed() + 1);
    let c = run_simulation(&reseeded).unwrap();
    assert_ne!(a.0[0].estimate, c.0[0].estimate);
    assert_eq!(c.1.master_seed, scenario.seed() + 1);
}

#[test]
fn epoch_inputs_do_not_depend_on_order() {
    let text = fs::read_to_string(scenario_file("canonical_noisy.toml")).unwrap();
    let scenario = parse_scenario(&text).unwrap();
    let sim = Simulation::new(&scenario).unwrap();
    let late_first = sim.epoch_inputs(7).unwrap();
    let _ = sim.epoch_inputs(3).unwrap();
    let late_again = sim.epoch_inputs(7).unwrap();
    assert_eq!(late_first.measurements, late_again.measurements);
    assert_eq!(late_first.anchors, late_again.anchors);
    assert_eq!(late_first.ga.seed, child_seed(scenario.seed(), Stream::Ga, scenario.file.ga.seed, 7));
    assert!(sim.epoch_inputs(sim.epoch_count()).is_err());
}

#[test]
fn validation_errors_name_the_key() {
    let three = {
        let text = stationary();
        let cut = text.rfind("[[anchors]]").unwrap();
        let end = text[cut..].find("[[trajectory]]").unwrap() + cut;
        format!("{}{}", &text[..cut], &text[end..])
    };
    let err = parse_scenario(&three).unwrap_err();
    assert!(err.to_string().contains("at least 4 anchors"), "{err}");

    let unknown = stationary().replace("ping_interval = 1.0", "ping_interval = 1.0\nping_intreval = 2.0");
    let err = parse_scenario(&unknown).unwrap_err();
    assert!(matches!(err, ScenarioError::Parse(_)));
    assert!(err.to_string().contains("ping_intreval"), "{err}");

    let backwards = stationary().replace("t = 9.0", "t = 0.0");
    assert!(parse_scenario(&backwards).unwrap_err().to_string().contains("trajectory[1].t"));
}

#[test]
fn cli_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = cli(&["run", &scenario_file("stationary_noiseless.toml"), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("epochs.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), EPOCH_COLUMNS.join(","));
    assert_eq!(lines.count(), 10);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for key in ["epochs", "fixes", "detection_rate", "raw_rmse", "fused_rmse", "origin", "master_seed"] {
        assert!(summary.get(key).is_some(), "{key}");
    }
    assert_eq!(fs::read_to_string(out.join("scenario.toml")).unwrap(), stationary());

    let reseeded = dir.path().join("reseeded");
    let res =
        cli(&["run", &scenario_file("stationary_noiseless.toml"), "--out", reseeded.to_str().unwrap(), "--seed", "5"]);
    assert!(res.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(reseeded.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["master_seed"], 5);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = scenario_file("stationary_noiseless.toml");

    assert_eq!(cli(&["profile", &good]).status.code(), Some(0));
    assert_eq!(cli(&["ping", &good, "--src", "0,0,-50", "--dst", "100,100,0"]).status.code(), Some(0));
    assert_eq!(cli(&["localize", &good, "--epoch", "1"]).status.code(), Some(0));

    // validation
    assert_eq!(cli(&["profile", "/nonexistent/scenario.toml"]).status.code(), Some(1));
    let bad = write_scenario(dir.path(), &stationary().replace("seed = 11", "seed = 11\nbogus = 1"));
    let res = cli(&["profile", &bad]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("bogus"));
    assert_eq!(cli(&["localize", &good, "--epoch", "10"]).status.code(), Some(1));
    assert_eq!(cli(&["ping", &good, "--src", "0,0", "--dst", "1,1,0"]).status.code(), Some(1));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(1));

    // runtime
    assert_eq!(cli(&["ping", &good, "--src", "0,0,-500", "--dst", "1,1,0"]).status.code(), Some(2));
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let res = cli(&["run", &good, "--out", blocker.join("out").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("blocker"));
}

#[test]
fn cli_ping_reports_budget() {
    let res = cli(&["ping", &scenario_file("stationary_noiseless.toml"), "--src", "0,0,-50", "--dst", "100,100,0"]);
    let text = String::from_utf8(res.stdout).unwrap();
    let field = |name: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(name).map(|v| v.trim().parse().unwrap()))
            .unwrap_or_else(|| panic!("{name} missing in {text}"))
    };
    let snr = field("snr_db");
    assert!((snr - (field("source_level_db") - field("transmission_loss_db") - field("noise_level_db"))).abs() < 1e-12);
    assert!(field("tof_s") > 150.0 / 1520.0);
}
