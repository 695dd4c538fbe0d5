use std::path::Path;
use std::process::{Command, Output};

use num_complex::Complex64;
use proptest::prelude::*;
use rti_core::amplitudes::CouplingConstant;
use rti_core::engine::Scenario;
use rti_core::substratum::{AbsorberState, BoundStateSpec, Channel, ChannelId, DetectorSpec, EmitterState};
use rti_core::Count;
use rti_sim::builtin::{builtin, NAMES};
use rti_sim::{parse_scenario, scenario_to_json};
use serde_json::{json, Value};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rti-sim"));
    cmd.env_remove("RTI_SIM_SEED");
    cmd
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not one JSON object ({e}): {text}"))
}

fn write_json(dir: &Path, name: &str, v: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn ladder_file() -> Value {
    json!({
        "max_ticks": 200,
        "alpha": 0.3,
        "channels": [
            {"id": "L", "label": "left", "re": 0.6, "im": 0.0},
            {"id": "R", "label": "right", "re": 0.0, "im": 0.8}
        ],
        "emitters": [{
            "id": "E", "levels": [0, 1, 2, 3], "allowed": [[3, 2], [2, 1], [1, 0]],
            "matrix_elements": {"3-2": 0.1, "2-1": 0.1, "1-0": 0.1}, "initial_level": 3
        }],
        "absorbers": [
            {"id": "A", "channel": "L", "levels": [0, 1, 2], "allowed": [[0, 1], [1, 2]], "initial_level": 0},
            {"id": "B", "channel": "R", "levels": [0, 1, 2], "allowed": [[0, 1], [1, 2]], "initial_level": 0}
        ],
        "detectors": [{"id": "D", "channel": "R", "n": "1e3", "gap": 1.0, "active_from": 5}]
    })
}

fn run_in(dir: &Path, scenario: &str, extra: &[&str]) -> Output {
    bin()
        .args(["run", "--scenario", scenario, "--out", dir.to_str().unwrap()])
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn gate_rejection_is_structured() {
    let out = bin().args(["run", "--scenario", "maudlin-as-proposed"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "GateRejection");
    assert_eq!(err["error"]["rule"], "NotAnOfferWave");
    assert!(out.stdout.is_empty());
}

#[test]
fn schema_errors_carry_the_json_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut bad = ladder_file();
    bad["pseudotime"] = json!(3);
    let path = write_json(dir.path(), "bad.json", &bad);
    let out = run_in(dir.path(), &path, &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "SchemaError");
    assert_eq!(err["error"]["path"], "$.pseudotime");

    let mut typo = ladder_file();
    typo["channels"][1]["im"] = json!("0.8");
    let path = write_json(dir.path(), "typo.json", &typo);
    let err = stderr_json(&run_in(dir.path(), &path, &[]));
    assert_eq!(err["error"]["path"], "$.channels[1].im");
}

#[test]
fn all_zero_amplitudes_fail_normalization() {
    let dir = tempfile::tempdir().unwrap();
    let mut zero = ladder_file();
    zero["channels"][0]["re"] = json!(0.0);
    zero["channels"][1]["im"] = json!(0.0);
    let path = write_json(dir.path(), "zero.json", &zero);
    let out = run_in(dir.path(), &path, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "NormalizationError");
}

#[test]
fn io_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let out = run_in(dir.path(), missing.to_str().unwrap(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "IoError");

    // the output "directory" is a regular file
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, b"x").unwrap();
    let out = run_in(&blocker, "certain-response", &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_one_and_json() {
    let out = bin().args(["classify"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "InvalidInput");
    let out = bin().args(["amplitude", "--m", "1", "--tau", "1", "--detuning", "0", "--omega", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["classify", "--n", "1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn certain_response_writes_one_detection() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "certain-response", &["--runs", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("detections.csv")).unwrap();
    assert_eq!(csv, "run,tick,channel,absorber_id,is_null\n0,1,L,A,false\n");
    let stats: Value = serde_json::from_slice(&std::fs::read(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["transactions"], 1);
    assert_eq!(stats["channel_frequencies"]["L"], 1.0);
    let dot = std::fs::read_to_string(dir.path().join("causet.dot")).unwrap();
    assert!(dot.contains("0 -> 1;"));
}

#[test]
fn format_selects_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "certain-response", &["--format", "json"]);
    assert!(out.status.success());
    assert!(dir.path().join("stats.json").exists());
    assert!(!dir.path().join("detections.csv").exists());
    assert!(!dir.path().join("causet.dot").exists());
}

#[test]
fn reruns_are_byte_identical_and_seeds_resolve_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_json(dir.path(), "ladder.json", &ladder_file());
    let mut pinned = ladder_file();
    pinned["seed"] = json!(77);
    let pinned = write_json(dir.path(), "pinned.json", &pinned);
    let outputs = |name: &str, scenario: &str, extra: &[&str], env: Option<&str>| {
        let out_dir = dir.path().join(name);
        let mut cmd = bin();
        if let Some(seed) = env {
            cmd.env("RTI_SIM_SEED", seed);
        }
        let out = cmd
            .args(["run", "--scenario", scenario, "--runs", "300", "--out", out_dir.to_str().unwrap()])
            .args(extra)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        ["stats.json", "detections.csv", "causet.dot"].map(|f| std::fs::read(out_dir.join(f)).unwrap())
    };
    let a = outputs("a", &file, &["--seed", "5"], None);
    assert_eq!(a, outputs("b", &file, &["--seed", "5"], None));
    assert_eq!(a, outputs("env", &file, &[], Some("5")));
    assert_eq!(a, outputs("flag-beats-env", &file, &["--seed", "5"], Some("6")));
    assert_ne!(a, outputs("other", &file, &["--seed", "6"], None));
    let file_seed = outputs("file", &pinned, &[], Some("5"));
    assert_eq!(file_seed, outputs("explicit", &file, &["--seed", "77"], None));
    let stats: Value = serde_json::from_slice(&a[0]).unwrap();
    assert_eq!(stats["seed"], 5);
    let default: Value = serde_json::from_slice(&outputs("default", &file, &[], None)[0]).unwrap();
    assert_eq!(default["seed"], 0xC0FFEE);
}

#[test]
fn export_causet_can_continue_past_the_first_transaction() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_json(dir.path(), "ladder.json", &ladder_file());
    let export = |extra: &[&str]| {
        let out = bin()
            .args(["export-causet", "--scenario", &file, "--seed", "3", "--format", "json"])
            .args(extra)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice::<Value>(&out.stdout).unwrap()
    };
    let first = export(&[]);
    let full = export(&["--continue"]);
    assert_eq!(first["events"].as_array().unwrap().len(), 2);
    // three quanta, capacity 2 + 2 + detector
    assert_eq!(full["events"].as_array().unwrap().len(), 6);
    let target = dir.path().join("c.dot");
    let out = bin()
        .args(["export-causet", "--scenario", &file, "--continue", "--out", target.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(std::fs::read_to_string(target).unwrap().starts_with("digraph {\n"));
}

#[test]
fn classify_and_amplitude_print_json() {
    let out = bin().args(["classify", "--n", "6.02E23"]).output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["class"], "Macro");
    assert_eq!(v["n"], "602000000000000000000000");
    let out = bin().args(["classify", "--n", "1967", "--target", "0.999999"]).output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["threshold_count"], 1967);

    let out = bin()
        .args(["amplitude", "--m", "0.1", "--tau", "2", "--e-initial", "0", "--e-final", "1", "--omega", "1", "--sign", "absorption"])
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["prob"].as_f64().unwrap() - 0.04).abs() < 1e-15);
    assert_eq!(v["breakdown"], false);

    let out = bin().args(["amplitude", "--m", "1", "--tau", "6.283185307179586", "--detuning", "2", "--sweep", "5"]).output().unwrap();
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "tau,prob");
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[1], "0,0");
}

#[test]
fn builtins_round_trip_through_the_file_format() {
    for name in NAMES.iter().filter(|n| **n != "maudlin-as-proposed") {
        let s = builtin(name).unwrap().unwrap();
        let bytes = serde_json::to_vec(&scenario_to_json(&s)).unwrap();
        assert_eq!(parse_scenario(&bytes).unwrap(), s, "{name}");
    }
}

fn arb_scenario() -> impl Strategy<Value = Scenario> {
    let channels = prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..4);
    let absorbers = prop::collection::vec((1usize..4, 0usize..3, 0u64..5, prop::option::of(1e-3f64..3.0)), 0..5);
    let detectors = prop::collection::vec((0usize..3, 1u128..u128::MAX, 0u64..3), 0..3);
    (channels, 2usize..5, 0.1f64..3.0, absorbers, detectors, 1e-6f64..1.0, any::<u64>(), 1u64..10_000).prop_map(
        |(amps, levels, gap, absorbers, detectors, alpha, seed, max_ticks)| {
            let k = amps.len();
            let channels = amps
                .iter()
                .enumerate()
                .map(|(i, &(re, im))| Channel::new(format!("c{i}"), format!("label {i}"), Complex64::new(re + 3.0, im)))
                .collect();
            let emitter = EmitterState::new("E", BoundStateSpec::ladder(levels, gap, 0.37).unwrap(), levels - 1).unwrap();
            let absorbers = absorbers
                .into_iter()
                .enumerate()
                .map(|(i, (extra, ch, active, m))| {
                    let energies: Vec<f64> = (0..=extra).map(|l| l as f64 * gap * 1.1).collect();
                    let transitions = (0..extra).map(|l| ((l, l + 1), m.unwrap_or(1.0)));
                    let spec = BoundStateSpec::new(&energies, transitions).unwrap();
                    AbsorberState::new(format!("a{i}"), spec, 0, ChannelId::new(format!("c{}", ch % k)))
                        .unwrap()
                        .with_active_from(active)
                })
                .collect();
            let detectors = detectors
                .into_iter()
                .enumerate()
                .map(|(i, (ch, n, active))| DetectorSpec {
                    id: format!("d{i}"),
                    channel: ChannelId::new(format!("c{}", ch % k)),
                    n: Count(n),
                    gap,
                    active_from: active,
                })
                .collect();
            let mut s = Scenario::new(vec![emitter], absorbers, detectors, channels)
                .with_alpha(CouplingConstant::new(alpha).unwrap())
                .with_seed(seed)
                .with_max_ticks(max_ticks);
            s.energy_tol = 1e-7;
            s
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn parse_serialize_parse_is_stable(s in arb_scenario()) {
        let first = parse_scenario(&serde_json::to_vec(&scenario_to_json(&s)).unwrap()).unwrap();
        let text = serde_json::to_string(&scenario_to_json(&first)).unwrap();
        let second = parse_scenario(text.as_bytes()).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(text, serde_json::to_string(&scenario_to_json(&second)).unwrap());
        let total: f64 = first.channels.iter().map(|c| c.weight()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }
}
