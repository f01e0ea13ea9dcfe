use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use trialbounds::records::write_records_csv;
use trialbounds::{bootstrap_ci, Estimand, Figure, ScenarioTag, TrialRecord};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trialbounds"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn result(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stdout).expect("json output");
    v["result"].clone()
}

const FIG1_POINT: &str =
    r#"{"p_x1":0.5,"p_y1_x":{"y0_x0":0.6,"y0_x1":0.3,"y1_x0":0.4,"y1_x1":0.7}}"#;

#[test]
fn complete_table_point_identifies_effect() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "t.json", FIG1_POINT);
    for fig in ["1a", "1b", "1c", "bw"] {
        let out = run(&["bounds", "--figure", fig, "--input", s(&input)]);
        assert_eq!(out.status.code(), Some(0), "{fig}");
        let r = result(&out);
        let lo = r["lower"].as_f64().unwrap();
        let hi = r["upper"].as_f64().unwrap();
        assert!(
            (lo - 0.3).abs() < 1e-12 && (hi - 0.3).abs() < 1e-12,
            "{fig}: [{lo}, {hi}]"
        );
    }
}

#[test]
fn provenance_header_and_csv_format() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "t.json", FIG1_POINT);
    let out = run(&[
        "bounds",
        "--figure",
        "1c",
        "--input",
        s(&input),
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let head = lines.next().unwrap();
    assert!(head.starts_with("# tool=trialbounds-cli"));
    assert!(head.contains("scenario=1c/theta"));
    assert!(head.contains("input_sha256="));
    assert!(lines.next().unwrap().starts_with("scenario,estimand"));
    assert!(lines.next().unwrap().starts_with("1c,theta,false,"));
}

fn trial_records() -> Vec<TrialRecord> {
    let mut recs = Vec::new();
    for (r, x_cells, missing) in [(false, [12, 18, 0, 0], 10), (true, [0, 0, 9, 27], 14)] {
        for (k, &n) in x_cells.iter().enumerate() {
            for _ in 0..n {
                recs.push(TrialRecord::observed(r, k >= 2, k % 2 == 1));
            }
        }
        for _ in 0..missing {
            recs.push(TrialRecord::missing(r));
        }
    }
    recs
}

#[test]
fn estimate_is_deterministic_and_matches_library() {
    let dir = TempDir::new().unwrap();
    let recs = trial_records();
    let mut buf = Vec::new();
    write_records_csv(&recs, &mut buf).unwrap();
    let input = write(&dir, "trial.csv", std::str::from_utf8(&buf).unwrap());
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    for out in [&out_a, &out_b] {
        let o = run(&[
            "estimate",
            "--figure",
            "1b",
            "--input",
            s(&input),
            "--seed",
            "42",
            "--replicates",
            "200",
            "--output",
            s(out),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let a = fs::read(&out_a).unwrap();
    assert_eq!(a, fs::read(&out_b).unwrap());

    let lib = bootstrap_ci(&recs, ScenarioTag::theta(Figure::F1b), 200, 0.95, 42).unwrap();
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["provenance"]["seed"], 42);
    let r = &v["result"];
    assert_eq!(r["lower"].as_f64().unwrap(), lib.point.lower);
    assert_eq!(r["upper"].as_f64().unwrap(), lib.point.upper);
    assert_eq!(r["lower_ci"][0].as_f64().unwrap(), lib.ci_lower_of_lower);
    assert_eq!(r["lower_ci"][1].as_f64().unwrap(), lib.ci_upper_of_lower);
    assert_eq!(r["upper_ci"][0].as_f64().unwrap(), lib.ci_lower_of_upper);
    assert_eq!(r["upper_ci"][1].as_f64().unwrap(), lib.ci_upper_of_upper);
    assert_eq!(r["replicates"], 200);
}

#[test]
fn estimate_requires_seed() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "trial.csv", "r,x,y,o\n0,0,1,1\n1,1,1,1\n");
    let o = run(&["estimate", "--figure", "1b", "--input", s(&input)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_all_fig2_noncompliance_models_passes() {
    let o = run(&[
        "verify",
        "--figure",
        "2cde",
        "--n-distributions",
        "25",
        "--seed",
        "7",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = result(&o);
    assert_eq!(r["passed"], true);
    assert_eq!(r["reports"].as_array().unwrap().len(), 3);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["bounds", "--figure", "1c"]).status.code(), Some(1));
    assert_eq!(
        run(&["bounds", "--figure", "9z", "--input", "x"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn validation_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = write(
        &dir,
        "bad.json",
        r#"{"p_x1":0.5,"p_y1_x":{"y0_x0":0.9,"y0_x1":0.3,"y1_x0":0.4,"y1_x1":0.7}}"#,
    );
    let o = run(&["bounds", "--figure", "1c", "--input", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let good = write(&dir, "t.json", FIG1_POINT);
    let o = run(&["bounds", "--figure", "2b", "--input", s(&good)]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "bounds",
        "--figure",
        "1c",
        "--no-defiers",
        "--input",
        s(&good),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(
        run(&["bounds", "--figure", "1c", "--input", s(&missing)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn crossing_bounds_exit_three_with_output() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "inc.json",
        r#"{"p_r1":0.5,"p_xy1_r":{"x0_y0_r0":0.02,"x0_y1_r0":0.23,"x1_y0_r0":0.07,"x1_y1_r0":0.32,"x0_y0_r1":0.001,"x0_y1_r1":0.001,"x1_y0_r1":0.95,"x1_y1_r1":0.03}}"#,
    );
    let o = run(&["bounds", "--figure", "2a", "--input", s(&input)]);
    assert_eq!(o.status.code(), Some(3));
    let r = result(&o);
    assert!(r["lower"].as_f64().unwrap() > r["upper"].as_f64().unwrap());
    assert_eq!(r["diagnostics"][0], "INCOMPATIBLE");
    assert!(String::from_utf8_lossy(&o.stderr).contains("INCOMPATIBLE"));
}

#[test]
fn tau_equals_counterpart_on_marginal_table() {
    let dir = TempDir::new().unwrap();
    // Arm-wise cells indexed by (x, y); each arm's remainder is missing.
    let arms = [[0.30, 0.10, 0.05, 0.25], [0.05, 0.10, 0.20, 0.45]];
    let mut fig2 = serde_json::Map::new();
    for (r, cells) in arms.iter().enumerate() {
        for (k, &p) in cells.iter().enumerate() {
            fig2.insert(format!("x{}_y{}_r{r}", k / 2, k % 2), p.into());
        }
    }
    let fig2 = serde_json::json!({"p_r1": 0.4, "p_xy1_r": fig2});
    let marg = |r: usize, y: usize| arms[r][y] + arms[r][2 + y];
    let fig1 = serde_json::json!({"p_x1": 0.4, "p_y1_x": {
        "y0_x0": marg(0, 0), "y0_x1": marg(1, 0), "y1_x0": marg(0, 1), "y1_x1": marg(1, 1),
    }});
    let in2 = write(&dir, "f2.json", &fig2.to_string());
    let in1 = write(&dir, "f1.json", &fig1.to_string());
    for (f2, f1) in [("2a", "1a"), ("2b", "1b"), ("2cde", "1c")] {
        let tau = run(&[
            "bounds",
            "--figure",
            f2,
            "--estimand",
            "tau",
            "--input",
            s(&in2),
        ]);
        let theta = run(&["bounds", "--figure", f1, "--input", s(&in1)]);
        assert_eq!(tau.status.code(), Some(0));
        assert_eq!(theta.status.code(), Some(0));
        let (a, b) = (result(&tau), result(&theta));
        for k in ["lower", "upper"] {
            let (x, y) = (a[k].as_f64().unwrap(), b[k].as_f64().unwrap());
            assert!((x - y).abs() < 1e-12, "{f2} {k}: {x} vs {y}");
        }
        assert_eq!(a["estimand"], Estimand::Tau.to_string());
    }
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let summary = dir.path().join(format!("{name}.json"));
        let o = run(&[
            "simulate",
            "--experiment",
            "relative-width",
            "--seed",
            "5",
            "--n-distributions",
            "30",
            "--format",
            "csv",
            "--output",
            s(&out),
            "--summary",
            s(&summary),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        outputs.push((fs::read(&out).unwrap(), fs::read(&summary).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(text.starts_with("# tool=trialbounds-cli"));
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("experiment,scenario,draw,statistic,value"));
    let summary: Value = serde_json::from_slice(&outputs[0].1).unwrap();
    assert_eq!(summary["provenance"]["seed"], 5);
}
