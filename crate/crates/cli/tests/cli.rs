//! End-to-end tests of the command-line interface.

use assert_cmd::Command;
use serde_json::Value;

fn berkline() -> Command {
    let mut c = Command::cargo_bin("berkline").unwrap();
    c.env_remove("BERKLINE_PRECISION");
    c
}

fn json_of(args: &[&str]) -> Value {
    let out = berkline().args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn gauss_cycle_report() {
    let v = json_of(&["berk", "cycle", "--map", "example", "--d", "2", "--seed", "gauss"]);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["period"], 2);
    assert_eq!(v["classification"], "repelling");
    assert_eq!(v["localDegrees"], serde_json::json!([2, 1]));
    assert_eq!(v["points"], serde_json::json!(["gauss", "xi(\"1\"; 1)"]));
    assert_eq!(v["firstReturn"], "0.5 + 0.5*u^2");
}

#[test]
fn gauss_cycle_golden_json() {
    // first return ((a1 + 1) u^2 + 1 - a1)/(a1 u^2 + 2 - a1) at a1 = 3/2, made monic in the denominator
    let out = berkline()
        .args(["berk", "cycle", "--d", "2", "--g", "1.5"])
        .output()
        .unwrap();
    let golden = r#"{
  "classification": "repelling",
  "firstReturn": "(-0.333333333333 + 1.66666666667*u^2)/(0.333333333333 + u^2)",
  "localDegrees": [
    2,
    1
  ],
  "passed": true,
  "period": 2,
  "points": [
    "gauss",
    "xi(\"1\"; 1)"
  ],
  "powerMapConjugate": false,
  "powerMapResidual": "inf",
  "radii": [
    "0",
    "1"
  ],
  "rescalingLimit": "(-0.333333333333 + 1.66666666667*z^2)/(0.333333333333 + z^2)",
  "schema": 1
}
"#;
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);
}

#[test]
fn output_is_deterministic() {
    let args = ["example", "verify", "--d", "3"];
    let a = berkline().args(args).output().unwrap();
    let b = berkline().args(args).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn basilica_census() {
    let v = json_of(&["census", "--map", "z^2-1", "--max-period", "4"]);
    assert_eq!(v["finiteNonrepellingCount"], 1);
    assert_eq!(v["nonrepellingCount"], 2);
    assert_eq!(v["bound"], 2);
    assert_eq!(v["gammaLower"], 0);
    assert_eq!(v["deltaUpper"], 0);
    assert_eq!(v["complete"], true);
}

#[test]
fn csv_carries_the_json_values() {
    let v = json_of(&["census", "--map", "z^2-1", "--max-period", "2"]);
    let out = berkline()
        .args(["census", "--map", "z^2-1", "--max-period", "2", "--format", "csv"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    let cycles = v["cycles"].as_array().unwrap();
    assert_eq!(rows.len(), cycles.len());
    for (row, c) in rows.iter().zip(cycles) {
        assert_eq!(row[2], *c["multiplier"].as_str().unwrap());
    }
}

#[test]
fn precision_flag_env_and_precedence() {
    let v = json_of(&["--precision", "4", "series", "eval", "1 + t + t^9 + O(t^10)"]);
    assert_eq!(v["series"], "1 + t + O(t^4)");
    let out = berkline()
        .env("BERKLINE_PRECISION", "3/2")
        .args(["series", "eval", "1 + t + t^9 + O(t^10)"])
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["series"], "1 + t + O(t^(3/2))");
    let out = berkline()
        .env("BERKLINE_PRECISION", "3/2")
        .args(["--precision", "2", "series", "eval", "1 + t + t^9 + O(t^10)"])
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["series"], "1 + t + O(t^2)");
}

#[test]
fn series_value_at_t() {
    let v = json_of(&["series", "eval", "2 - 3*t^(1/2)", "--t", "0.04"]);
    assert_eq!(v["value"], "1.4");
    assert_eq!(v["valuation"], "0");
    assert_eq!(v["ramification"], 2);
}

#[test]
fn tolerance_override_keeps_results() {
    let a = json_of(&["census", "--map", "z^2+0.2", "--max-period", "3"]);
    let b = json_of(&["--tolerance", "1e-11,1e-8,1e-6", "census", "--map", "z^2+0.2", "--max-period", "3"]);
    assert_eq!(a, b);
}

#[test]
fn config_file_selects_the_family() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "family = \"example\"\nd = 3\ng = [\"0.5\", \"1-1i\"]\nprecision = \"5\"\n").unwrap();
    let v = json_of(&["--config", path.to_str().unwrap(), "berk", "cycle"]);
    assert_eq!(v["localDegrees"], serde_json::json!([3, 1]));
    let v = json_of(&["--config", path.to_str().unwrap(), "map", "reduce"]);
    assert!(v["map"].as_str().unwrap().contains("O(t^5)"));
}

#[test]
fn literal_map_reduction() {
    let v = json_of(&[
        "map",
        "reduce",
        "--map",
        "ratmap { num = [\"1 + t\", \"0\", \"-1\"], den = [\"1\", \"0\", \"-1\"] }",
        "--iterate",
        "2",
    ]);
    assert_eq!(v["holeCount"], 2);
    let pts: Vec<&str> = v["holes"].as_array().unwrap().iter().map(|h| h["point"].as_str().unwrap()).collect();
    assert!(pts.contains(&"1") && pts.contains(&"-1"));
}

#[test]
fn image_of_the_gauss_point() {
    let v = json_of(&["berk", "image", "--d", "2", "--point", "gauss"]);
    assert_eq!(v["image"], "xi(\"1\"; 1)");
    assert_eq!(v["localDegree"], 2);
}

#[test]
fn tree_as_dot() {
    let out = berkline()
        .args([
            "berk", "tree", "--map", "example", "--point", "xi(\"1\"; 1)", "--point", "xi(\"0\"; 2)", "--format", "dot",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.starts_with("graph skeleton {"));
    assert!(dot.contains("\"xi(\\\"0\\\"; 2)\" -- \"gauss\" [label=\"2\", hull=true, ramified=true];"));
    assert!(dot.contains("\"xi(\\\"1\\\"; 1)\" -- \"gauss\" [label=\"1\", hull=true, ramified=false];"));
}

#[test]
fn example_pipeline_for_cubic() {
    let v = json_of(&["example", "verify", "--d", "3"]);
    assert_eq!(v["passed"], true);
    let checks = v["checks"].as_array().unwrap();
    let three = checks.iter().find(|c| c["check"] == "threeCycle").unwrap();
    assert_eq!(three["detail"]["r"], "1/2");
    assert!(checks.iter().any(|c| c["check"] == "publishedCubicPair"));
}

#[test]
fn family_track_diverges_near_the_degenerate_line() {
    let v = json_of(&["family", "track", "--u", "0", "--v", "-1 + t", "--d", "2"]);
    assert_eq!(v["degeneracy"], "vLine");
    let sizes: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| r["size"].as_f64().unwrap()).collect();
    assert!(sizes.windows(2).all(|w| w[1] > w[0]), "{sizes:?}");
}

#[test]
fn rescale_check_passes_for_the_quadratic_example() {
    let v = json_of(&["rescale", "check", "--d", "2", "--g", "0.4+0.3i", "--radius", "2"]);
    assert_eq!(v["strictlyDecreasing"], true);
    assert!(v["finalError"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn failed_verification_exits_one() {
    berkline()
        .args(["rescale", "check", "--d", "3", "--solved", "--point", "xi(\"0\"; 1/2)", "--radius", "0.5"])
        .assert()
        .code(1);
}

#[test]
fn input_errors_exit_two_with_diagnostics() {
    let out = berkline().args(["census", "--map", "z^2+"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let e: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(e["schema"], 1);
    assert_eq!(e["error"]["kind"], "SyntaxError");
    berkline().args(["--tolerance", "x", "series", "eval", "1"]).assert().code(2);
    berkline().args(["no-such-command"]).assert().code(2);
    berkline().args(["--precision", "-1", "series", "eval", "1"]).assert().code(2);
    berkline().args(["series", "eval", "1", "--format", "dot"]).assert().code(2);
}
