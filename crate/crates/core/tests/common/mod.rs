#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use wristexo::json::round_significant;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn trials_dir() -> PathBuf {
    fixtures_dir().join("trials")
}

pub fn wristexo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wristexo"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Runs `analyze` on the bundled corpus and returns the report text.
pub fn analyze_fixture(out_dir: &Path) -> String {
    let report = out_dir.join("report.json");
    let out = wristexo(&[
        "analyze",
        path_str(&trials_dir()),
        "--out",
        path_str(&report),
        "--plots-dir",
        path_str(out_dir),
    ]);
    assert!(
        out.status.success(),
        "analyze failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    std::fs::read_to_string(report).expect("report written")
}

pub fn ground_truth() -> Value {
    let text = std::fs::read_to_string(fixtures_dir().join("ground_truth.json")).expect("ground truth present");
    serde_json::from_str(&text).expect("ground truth parses")
}

struct Checker {
    mismatches: Vec<String>,
    checked: usize,
}

impl Checker {
    fn num(&mut self, what: &str, report: &Value, truth: &Value) {
        self.checked += 1;
        match (report.as_f64(), truth.as_f64()) {
            (Some(r), Some(t)) if r == round_significant(t) || within_half_digit(r, t) => {}
            _ => self
                .mismatches
                .push(format!("{what}: report {report} vs truth {truth}")),
        }
    }

    fn exact(&mut self, what: &str, report: &Value, truth: &Value) {
        self.checked += 1;
        if report != truth {
            self.mismatches
                .push(format!("{what}: report {report} vs truth {truth}"));
        }
    }
}

/// True when `rounded` lies within half a unit of the sixth significant digit
/// of `exact`. A truth value sitting on a rounding tie can round either way
/// depending on the last bit of the computation.
fn within_half_digit(rounded: f64, exact: f64) -> bool {
    if exact == 0.0 {
        return rounded == 0.0;
    }
    let unit = 10f64.powi(exact.abs().log10().floor() as i32 - 5);
    (rounded - exact).abs() <= 0.5 * unit * (1.0 + 1e-9)
}

fn find(items: &Value, pred: impl Fn(&Value) -> bool) -> &Value {
    items
        .as_array()
        .and_then(|a| a.iter().find(|v| pred(v)))
        .unwrap_or(&Value::Null)
}

/// Compares every ground-truth value with the report after rounding the
/// truth to the report's six significant digits. Returns the mismatches and
/// the number of values checked.
pub fn compare_with_ground_truth(report: &Value, truth: &Value) -> (Vec<String>, usize) {
    let mut c = Checker {
        mismatches: Vec::new(),
        checked: 0,
    };
    c.exact("n_trials", &report["n_trials"], &truth["n_trials"]);

    let rejected: Vec<Value> = report["rejected"]
        .as_array()
        .map(|a| a.iter().map(|r| r["file"].clone()).collect())
        .unwrap_or_default();
    c.exact("rejected", &Value::Array(rejected), &truth["rejected"]);

    for (file, t) in truth["trials"].as_object().expect("trials object") {
        let r = find(&report["trials"], |v| v["file"] == *file);
        for key in ["participant", "posture", "load", "spring", "trial_index", "n_samples"] {
            c.exact(&format!("{file} {key}"), &r[key], &t[key]);
        }
        for key in [
            "rom_ab_deg",
            "rom_ad_deg",
            "rom_total_deg",
            "tau_rms_mNm",
            "joint_torque_Nm",
            "interpolated_fraction",
        ] {
            c.num(&format!("{file} {key}"), &r[key], &t[key]);
        }
    }

    for (spring, t) in truth["distributions"].as_object().expect("distributions object") {
        let r = find(&report["distributions"], |v| v["spring"] == *spring);
        for metric in ["rom_total_deg", "tau_rms_mNm"] {
            c.exact(&format!("{spring} {metric} n"), &r[metric]["n"], &t[metric]["n"]);
            for q in ["min", "q1", "median", "q3", "max"] {
                c.num(&format!("{spring} {metric} {q}"), &r[metric][q], &t[metric][q]);
            }
        }
    }

    let rep = &report["repeatability"];
    let trep = &truth["repeatability"];
    c.exact(
        "repeatability pairs",
        &Value::from(rep["pairs"].as_array().map_or(0, Vec::len)),
        &trep["n_pairs"],
    );
    let spread = |c: &mut Checker, what: &str, r: &Value, t: &Value| {
        c.exact(&format!("{what} n"), &r["n"], &t["n"]);
        c.num(&format!("{what} mean"), &r["mean_deg"], &t["mean_deg"]);
        c.num(&format!("{what} sd"), &r["sd_deg"], &t["sd_deg"]);
    };
    for (key, t) in trep["by_spring_posture"].as_object().expect("groups") {
        let (spring, posture) = key.split_once('/').expect("spring/posture key");
        let r = find(&rep["by_spring_posture"], |v| {
            v["spring"] == spring && v["posture"] == posture
        });
        spread(&mut c, key, r, t);
    }
    for (spring, t) in trep["by_spring"].as_object().expect("groups") {
        let r = find(&rep["by_spring"], |v| v["spring"] == *spring);
        spread(&mut c, spring, r, t);
    }
    spread(&mut c, "overall", &rep["overall"], &trep["overall"]);

    for (metric, t) in truth["friedman"].as_object().expect("friedman object") {
        let r = &report["friedman"][metric];
        c.num(&format!("friedman {metric} chi2"), &r["chi2"], &t["chi2"]);
        c.num(&format!("friedman {metric} p"), &r["p"], &t["p"]);
        c.exact(&format!("friedman {metric} df"), &r["df"], &t["df"]);
    }

    for (item, t) in truth["likert"].as_object().expect("likert object") {
        let r = find(&report["likert"], |v| v["item"] == *item);
        c.exact(&format!("likert {item} n"), &r["n"], &t["n"]);
        c.num(&format!("likert {item} mean"), &r["mean"], &t["mean"]);
        c.num(&format!("likert {item} sd"), &r["sd"], &t["sd"]);
    }
    (c.mismatches, c.checked)
}
