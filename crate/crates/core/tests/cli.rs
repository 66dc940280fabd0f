use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn serwalk(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_serwalk"))
        .args(args)
        .current_dir(dir)
        .env_remove("SERWALK_LOG")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generate_two_lines_matches_figure_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = serwalk(&["generate", "two-lines", "--phases", "3", "--out", "walk.csv"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("walk.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "index,phase,coord_0,coord_1");
    let sums: Vec<(String, String)> = rows[2..6]
        .iter()
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            (f[2].to_string(), f[3].to_string())
        })
        .collect();
    let expect = [("0.5", "0"), ("1", "0"), ("0.5", "0"), ("0", "0")];
    for (got, want) in sums.iter().zip(expect) {
        assert_eq!((got.0.as_str(), got.1.as_str()), want);
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("walk.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"][0], "walk.csv");
}

#[test]
fn zero_phases_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = serwalk(&["generate", "two-lines", "--phases", "0"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("phases must be ≥ 1"));
}

#[test]
fn unknown_generator_and_bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&serwalk(&["generate", "spiral"], dir.path())), 2);
    assert_eq!(code(&serwalk(&["generate", "two-lines", "--phases", "x"], dir.path())), 2);
    assert_eq!(code(&serwalk(&["generate", "c0-two-point", "--format", "csv"], dir.path())), 2);
}

#[test]
fn c0_two_point_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let o = serwalk(&["generate", "c0-two-point", "--phases", "1"], dir.path());
    assert_eq!(code(&o), 0);
    let lines: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[1]["entries"], serde_json::json!({"2": 1}));
    assert_eq!(lines[2]["entries"], serde_json::json!({"1": 1, "2": 1}));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let o = serwalk(&["generate", "chainable", "--phases", "3", "--seed", "9", "--out", name], dir.path());
        assert_eq!(code(&o), 0);
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn verify_vector_family_and_rp_instance() {
    let dir = tempfile::tempdir().unwrap();
    let o = serwalk(&["verify", "vector-family", "--k", "2"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("24 permutations"));

    let o = serwalk(&["generate", "no-rp", "--block", "1", "--out", "block1.json"], dir.path());
    assert_eq!(code(&o), 0);
    let o = serwalk(&["verify", "rp-instance", "--input", "block1.json", "--epsilon", "1"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("no balanced permutation"));
    // Twice the bound admits an ordering.
    let o = serwalk(&["verify", "rp-instance", "--input", "block1.json", "--epsilon", "2"], dir.path());
    assert_eq!(code(&o), 0);
}

#[test]
fn verify_dichotomy_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    serwalk(&["generate", "two-lines", "--phases", "6", "--out", "twolines.csv"], dir.path());
    let o = serwalk(&["verify", "dichotomy", "--input", "twolines.csv", "--out", "rep.json"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("all-components-escape"));
    let rep: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("rep.json")).unwrap()).unwrap();
    for key in ["resolution", "window", "points", "hit_counts", "verdicts"] {
        assert!(rep.get(key).is_some(), "report lacks {key}");
    }
    assert_eq!(rep["verdicts"]["dichotomy"], "all-components-escape");

    serwalk(&["generate", "c0-two-point", "--phases", "5", "--out", "c0.jsonl"], dir.path());
    let o = serwalk(&["verify", "dichotomy", "--input", "c0.jsonl", "--resolution", "0.2"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("violation"));
}

#[test]
fn verify_singleton_and_cauchy_on_divergent_walk() {
    let dir = tempfile::tempdir().unwrap();
    serwalk(&["generate", "c0-singleton", "--phases", "6", "--out", "s.jsonl"], dir.path());
    let o = serwalk(&["verify", "singleton", "--input", "s.jsonl", "--resolution", "0.2"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("diverges-with-singleton"));
    let o = serwalk(&["verify", "cauchy", "--input", "s.jsonl"], dir.path());
    assert_eq!(code(&o), 1);
    let o = serwalk(&["verify", "estimate", "--input", "s.jsonl", "--resolution", "0.2"], dir.path());
    assert_eq!(code(&o), 0);
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "index,phase,coord_0\n0,1,zz\n").unwrap();
    assert_eq!(code(&serwalk(&["verify", "estimate", "--input", "bad.csv"], dir.path())), 2);
    assert_eq!(code(&serwalk(&["verify", "estimate", "--input", "missing.csv"], dir.path())), 2);
    fs::write(dir.path().join("bad.json"), "{\"vectors\": 3}").unwrap();
    assert_eq!(code(&serwalk(&["verify", "rp-instance", "--input", "bad.json"], dir.path())), 2);
}

/// x coordinates (rounded) of vertical polyline segments.
fn vertical_strands(svg: &str) -> usize {
    let mut xs: Vec<i64> = Vec::new();
    for chunk in svg.split("points=\"").skip(1) {
        let pts: Vec<(f64, f64)> = chunk[..chunk.find('"').unwrap()]
            .split(' ')
            .map(|p| {
                let (x, y) = p.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect();
        for s in pts.windows(2) {
            if s[0].0 == s[1].0 && s[0].1 != s[1].1 {
                xs.push(s[0].0.round() as i64);
            }
        }
    }
    xs.sort_unstable();
    xs.dedup();
    xs.len()
}

#[test]
fn plot_outputs_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    serwalk(&["generate", "two-lines", "--phases", "3", "--out", "walk.csv"], dir.path());
    let o = serwalk(&["plot", "--input", "walk.csv", "--out", "fig.svg"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("fig.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("class=\"panel\"").count(), 3);
    for label in [">1/2<", ">1<", ">2<"] {
        assert!(svg.contains(label));
    }

    serwalk(&["generate", "halflines", "--abscissae", "0,1,2", "--phases", "2", "--out", "hl.csv"], dir.path());
    let o = serwalk(&["plot", "--input", "hl.csv", "--panels", "1", "--out", "hl.svg"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(vertical_strands(&fs::read_to_string(dir.path().join("hl.svg")).unwrap()), 3);

    fs::write(dir.path().join("empty.csv"), "").unwrap();
    assert_eq!(code(&serwalk(&["plot", "--input", "empty.csv"], dir.path())), 2);
    fs::write(dir.path().join("line.csv"), "index,phase,coord_0\n0,1,0\n1,1,1\n").unwrap();
    assert_eq!(code(&serwalk(&["plot", "--input", "line.csv"], dir.path())), 2);
}

#[test]
fn rearrange_singleton_converges() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.csv"), "x,y\n0.2,-0.1\n").unwrap();
    let args = ["rearrange", "--target", "a.csv", "--stages", "6", "--terms", "100000", "--exponent", "1", "--out", "r.csv"];
    let o = serwalk(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.report.json")).unwrap()).unwrap();
    assert_eq!(rep["convergence"]["verdict"], "converges-to");
    let perm: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.perm.json")).unwrap()).unwrap();
    let max_image = perm["tau"].as_array().unwrap().iter().filter_map(Value::as_u64).max().unwrap();
    assert_eq!(max_image, rep["terms_used"].as_u64().unwrap());
    let first = fs::read(dir.path().join("r.csv")).unwrap();
    serwalk(&args, dir.path());
    assert_eq!(first, fs::read(dir.path().join("r.csv")).unwrap());
}

#[test]
fn rearrange_circle_keeps_stage_errors_small() {
    let dir = tempfile::tempdir().unwrap();
    let n = 63;
    let mut text = String::from("x,y\n");
    for i in 0..n {
        let t = std::f64::consts::TAU * i as f64 / n as f64;
        text.push_str(&format!("{},{}\n", 0.5 * t.cos(), 0.5 * t.sin()));
    }
    fs::write(dir.path().join("circle.csv"), text).unwrap();
    let o = serwalk(
        &["rearrange", "--target", "circle.csv", "--stages", "3", "--terms", "600000", "--out", "c.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("c.report.json")).unwrap()).unwrap();
    let stages = rep["stages"].as_array().unwrap();
    assert!(!stages.is_empty());
    for s in stages {
        let (err, eta) = (s["stage_end_error"].as_f64().unwrap(), s["eta"].as_f64().unwrap());
        assert!(err < 4.0 * eta, "stage {}: {err} vs eta {eta}", s["stage"]);
    }
}

#[test]
fn unchainable_target_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("far.csv"), "0,0\n3,0\n").unwrap();
    let o = serwalk(
        &["rearrange", "--target", "far.csv", "--stages", "3", "--terms", "100000", "--gap", "0.01"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("stage 1"), "{}", stderr(&o));
}

#[test]
fn log_level_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_serwalk"))
        .args(["generate", "two-lines", "--phases", "2", "--out", "w.csv"])
        .current_dir(dir.path())
        .env("SERWALK_LOG", "info")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("generate"));
}
