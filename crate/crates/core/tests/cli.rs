use std::path::PathBuf;
use std::process::{Command, Output};

use mie_core::cli::config::ExperimentConfig;
use serde_json::Value;

fn mielab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mielab")).args(args).output().expect("binary runs")
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mielab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn thresholds_report_the_closed_form_constants() {
    let out = mielab(&["thresholds"]);
    assert!(out.status.success());
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    let s = &rep["summary"];
    assert_eq!(s["S_crit_nats"], 1.94);
    assert!((s["S_crit_bits"].as_f64().unwrap() - 1.94 / std::f64::consts::LN_2).abs() < 1e-12);
    assert_eq!(s["chi_crit"], 7);
    assert_eq!(s["advantage_m"], 6);
    let checks = s["advantage_checks"].as_array().unwrap();
    let by_m = |m: u64| checks.iter().find(|c| c["m"] == m).unwrap();
    assert_eq!(by_m(5)["pass"], false);
    assert_eq!(by_m(6)["pass"], true);
    assert!((by_m(6)["nu"].as_f64().unwrap() - 0.3298).abs() < 1e-4);
    assert_eq!(rep["header"]["subcommand"], "thresholds");
}

#[test]
fn reports_are_byte_identical_across_runs_and_threads() {
    let cfg = scratch(
        "mie.json",
        r#"{"mie_sim": {"lattice": {"width": 3, "height": 2}, "n_circuits": 6, "n_outcomes": 5}}"#,
    );
    let cfg = cfg.to_str().unwrap();
    for format in ["json", "csv"] {
        let runs: Vec<Vec<u8>> = ["1", "3", "1"]
            .iter()
            .map(|t| {
                let out = mielab(&["--config", cfg, "--seed", "11", "--threads", t, "--format", format, "mie-sim"]);
                assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
                out.stdout
            })
            .collect();
        assert!(!runs[0].is_empty());
        assert!(runs.iter().all(|r| r == &runs[0]), "{format} output differs");
    }
    let other = mielab(&["--config", cfg, "--seed", "12", "mie-sim"]).stdout;
    let base = mielab(&["--config", cfg, "--seed", "11", "mie-sim"]).stdout;
    assert_ne!(other, base);
}

#[test]
fn csv_output_carries_a_commented_header() {
    let out = mielab(&["--format", "csv", "--seed", "5", "saw-enum"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# mielab"));
    assert_eq!(lines.next().unwrap(), "# seed: 5");
    assert!(text.lines().filter(|l| !l.starts_with('#')).count() >= 2);
}

#[test]
fn out_directory_receives_the_report() {
    let dir = std::env::temp_dir().join(format!("mielab-out-{}", std::process::id()));
    let out = mielab(&["--out", dir.to_str().unwrap(), "thresholds"]);
    assert!(out.status.success() && out.stdout.is_empty());
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("thresholds.json")).unwrap()).unwrap();
    assert_eq!(rep["summary"]["chi_crit"], 7);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn bad_configs_fail_with_a_location() {
    let unknown = scratch("unknown.json", "{\n  \"zsaw\": {\n    \"betta\": 1\n  }\n}\n");
    let out = mielab(&["--config", unknown.to_str().unwrap(), "zsaw"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("betta") && err.contains("line 3"), "{err}");

    let version = scratch("version.json", r#"{"schema_version": 2}"#);
    let out = mielab(&["--config", version.to_str().unwrap(), "thresholds"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema_version"));

    // a single site has no room for two regions
    let tiny = scratch("tiny.json", r#"{"zsaw": {"lattice": {"width": 1, "height": 1}}}"#);
    let out = mielab(&["--config", tiny.to_str().unwrap(), "zsaw"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

fn resolve<'a>(schema: &'a Value, node: &'a Value, value: &Value) -> &'a Value {
    if let Some(r) = node.get("$ref").and_then(Value::as_str) {
        let name = r.trim_start_matches("#/$defs/");
        return resolve(schema, &schema["$defs"][name], value);
    }
    if let Some(branches) = node.get("oneOf").and_then(Value::as_array) {
        // tagged unions select their branch by the constant tag field
        return branches
            .iter()
            .find(|b| {
                b["properties"].as_object().is_some_and(|props| {
                    props.iter().any(|(k, p)| p.get("const").is_some_and(|c| value.get(k) == Some(c)))
                })
            })
            .unwrap_or_else(|| panic!("no branch matches {value}"));
    }
    node
}

fn check_keys(schema: &Value, node: &Value, value: &Value, path: &str) {
    let node = resolve(schema, node, value);
    let Value::Object(map) = value else { return };
    let props = node["properties"].as_object().unwrap_or_else(|| panic!("{path} is not an object in the schema"));
    assert_eq!(node["additionalProperties"], false, "{path} allows extra keys");
    let mut want: Vec<&String> = props.keys().collect();
    let mut got: Vec<&String> = map.keys().collect();
    want.sort();
    got.sort();
    assert_eq!(got, want, "keys differ at {path}");
    for (k, v) in map {
        check_keys(schema, &props[k], v, &format!("{path}.{k}"));
    }
}

#[test]
fn schema_matches_the_default_config() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schema/config.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let defaults = serde_json::to_value(ExperimentConfig::default()).unwrap();
    check_keys(&schema, &schema, &defaults, "config");
    // the defaults round-trip through the strict parser
    let again = ExperimentConfig::from_json(&defaults.to_string()).unwrap();
    assert_eq!(serde_json::to_value(again).unwrap(), defaults);
}
