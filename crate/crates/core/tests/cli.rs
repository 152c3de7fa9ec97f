use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn raysample(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_raysample")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| std::fs::write(dir.path().join(name), text).unwrap();
    write("sphere.json", r#"{"op": "sphere", "args": {"radius": 0.5}}"#);
    write("cube.json", r#"{"op": "box", "args": {"half_extents": [1, 1, 1]}}"#);
    write("torus.json", r#"{"op": "torus", "args": {"major": 0.5, "minor": 0.2}}"#);
    write("shell.json", r#"{"op": "abs", "args": {"child": {"op": "sphere", "args": {"radius": 0.5}}}}"#);
    write("far.json", r#"{"op": "sphere", "args": {"center": [5, 5, 5], "radius": 0.5}}"#);
    write("broken.json", r#"{"op": "sphere", "args": {"radius": "#);
    write("empty.obj", "");
    dir
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn ply_vertices(bytes: &[u8]) -> usize {
    let end = bytes.windows(11).position(|w| w == b"end_header\n").unwrap() + 11;
    let header = std::str::from_utf8(&bytes[..end]).unwrap();
    let n: usize = header.lines().find_map(|l| l.strip_prefix("element vertex ")).unwrap().parse().unwrap();
    assert_eq!(bytes.len() - end, n * 48);
    n
}

#[test]
fn sample_sphere_point_count_matches_expectation() {
    let dir = workspace();
    let o = raysample(dir.path(), &["sample", "--scene", "sphere.json", "--rays", "100000", "--seed", "7", "-o", "pts.ply", "--report", "r.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let n = ply_vertices(&std::fs::read(dir.path().join("pts.ply")).unwrap()) as f64;
    // K per ray is 0 or 2, with P(hit) = π/24
    let p = PI / 24.0;
    let (mean, sd) = (1e5 * 2.0 * p, 2.0 * (1e5 * p * (1.0 - p)).sqrt());
    assert!((n - mean).abs() < 3.0 * sd, "{n} vs {mean} ± {sd}");
    let r = json(dir.path().join("r.json"));
    assert_eq!(r["config"]["seed"], 7);
    assert_eq!(r["result"]["rays"], 100000);
    assert_eq!(r["result"]["hits"].as_f64().unwrap(), n);
    assert!(r["result"]["evals"].as_u64().unwrap() > 0);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn repeated_runs_are_byte_identical_across_thread_counts() {
    let dir = workspace();
    let mut outputs = vec![];
    for (i, threads) in ["1", "3", "1"].iter().enumerate() {
        let (pts, rep) = (format!("p{i}.ply"), format!("r{i}.json"));
        let args = ["--threads", threads, "sample", "--scene", "torus.json", "--samples", "20000", "--mode", "resample", "-o", &pts, "--report", &rep];
        assert_eq!(code(&raysample(dir.path(), &args)), 0);
        let report = std::fs::read_to_string(dir.path().join(&rep)).unwrap().replace(&pts, "");
        outputs.push((std::fs::read(dir.path().join(&pts)).unwrap(), report));
    }
    assert!(outputs.iter().all(|o| *o == outputs[0]));
}

#[test]
fn sample_argument_errors_exit_2() {
    let dir = workspace();
    for args in [
        vec!["sample", "--scene", "sphere.json", "--rays", "0"],
        vec!["sample", "--scene", "sphere.json"],
        vec!["sample", "--scene", "sphere.json", "--rays", "10", "--samples", "10"],
        vec!["sample", "--scene", "sphere.json", "--mode", "resample", "--rays", "100"],
        vec!["sample", "--scene", "sphere.json", "--mesh", "empty.obj", "--rays", "10"],
        vec!["sample", "--rays", "10"],
        vec!["sample", "--scene", "sphere.json", "--rays", "10", "--mode", "nope"],
        vec!["frobnicate"],
    ] {
        assert_eq!(code(&raysample(dir.path(), &args)), 2, "{args:?}");
    }
}

#[test]
fn scene_load_failures_exit_3() {
    let dir = workspace();
    for args in [
        vec!["sample", "--scene", "broken.json", "--rays", "10"],
        vec!["sample", "--scene", "missing.json", "--rays", "10"],
        vec!["sample", "--grid", "missing.isgf", "--rays", "10"],
        vec!["eval", "--mesh", "empty.obj", "--samples", "100"],
    ] {
        let o = raysample(dir.path(), &args);
        assert_eq!(code(&o), 3, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn empty_surface_exits_4() {
    let dir = workspace();
    assert_eq!(code(&raysample(dir.path(), &["sample", "--scene", "far.json", "--samples", "10"])), 4);
    assert_eq!(code(&raysample(dir.path(), &["sample", "--scene", "far.json", "--mode", "resample", "--samples", "10"])), 4);
}

#[test]
fn moments_report_and_unsigned_volume() {
    let dir = workspace();
    let o = raysample(dir.path(), &["moments", "--scene", "cube.json", "--rays", "200000", "--volume"]);
    assert_eq!(code(&o), 0);
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let area = r["result"]["area"]["value"].as_f64().unwrap();
    let volume = r["result"]["volume"]["value"].as_f64().unwrap();
    assert!((area - 24.0).abs() < 0.12 && (volume - 8.0).abs() < 0.04, "{area} {volume}");

    assert_eq!(code(&raysample(dir.path(), &["moments", "--scene", "shell.json", "--rays", "1000", "--volume"])), 5);
    let o = raysample(dir.path(), &["moments", "--scene", "shell.json", "--rays", "20000"]);
    assert_eq!(code(&o), 0);
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["result"]["volume"].is_null());
}

#[test]
fn eval_writes_one_row_per_method() {
    let dir = workspace();
    let o = raysample(dir.path(), &["eval", "--scene", "sphere.json", "--samples", "2000", "-o", "t.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "method,shape,N,TV,evals,seed");
    let methods: Vec<&str> = rows[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["ours", "rejection", "ground-truth"]);
    assert!(csv.starts_with("# "));

    assert_eq!(code(&raysample(dir.path(), &["eval", "--scene", "sphere.json", "--methods", "ours,magic"])), 2);
    assert_eq!(code(&raysample(dir.path(), &["eval", "--scene", "cube.json", "--samples", "10"])), 2);
}

#[test]
fn bluenoise_and_importance_outputs() {
    let dir = workspace();
    let o = raysample(dir.path(), &["bluenoise", "--scene", "sphere.json", "--rays", "20000", "--samples", "500", "-o", "b.xyz"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("b.xyz")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 500);

    let o = raysample(dir.path(), &["resample-importance", "--scene", "torus.json", "--rays", "20000", "--samples", "300", "-o", "i.xyz"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("i.xyz")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 300);

    std::fs::write(dir.path().join("w.txt"), "1 2 3\n").unwrap();
    let o = raysample(dir.path(), &["resample-importance", "--scene", "torus.json", "--rays", "20000", "--weights", "file:w.txt"]);
    assert_ne!(code(&o), 0);
    assert_eq!(code(&raysample(dir.path(), &["bluenoise", "--scene", "sphere.json", "--rays", "100", "--samples", "100000"])), 2);
}
