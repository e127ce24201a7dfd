use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn doubling(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_doubling"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_line_space(path: &Path, xs: &[f64]) {
    let points: Vec<Value> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| serde_json::json!({ "id": i, "coords": [x] }))
        .collect();
    let doc = serde_json::json!({ "points": points, "metric": { "type": "euclidean" } });
    fs::write(path, doc.to_string()).unwrap();
}

fn gen_f(dir: &Path) {
    let out = doubling(
        &["gen", "union", "cantor:1/3:4:[0,1]", "cantor:1/9:2:[1,2]", "--out", "f"],
        dir,
    );
    ok(&out);
}

#[test]
fn gen_cantor_writes_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    ok(&doubling(&["gen", "cantor", "--ratio", "1/3", "--level", "4", "--out", "c"], dir.path()));
    let doc = json(&dir.path().join("c/space.json"));
    assert_eq!(doc["points"].as_array().unwrap().len(), 32);
    assert_eq!(doc["metric"]["type"], "euclidean");
}

#[test]
fn gen_rejects_overlapping_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let out = doubling(&["gen", "cantor", "--ratio", "0.6", "--level", "2", "--out", "c"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_union_shares_the_touching_point() {
    let dir = tempfile::tempdir().unwrap();
    gen_f(dir.path());
    let doc = json(&dir.path().join("f/space.json"));
    assert_eq!(doc["points"].as_array().unwrap().len(), 32 + 8 - 1);
}

#[test]
fn failed_hypothesis_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    write_line_space(&dir.path().join("line.json"), &[0.26, 0.2, 0.0]);
    let out = doubling(
        &["measure", "--space", "line.json", "--out", "m", "--a", "2", "--s-prime", "0.6", "--t-prime", "0.5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hypothesis"));
}

#[test]
fn exponent_order_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    gen_f(dir.path());
    let out = doubling(
        &[
            "measure", "--space", "f/space.json", "--out", "m", "--s", "0.6", "--t", "0.3", "--s-prime", "0.5",
            "--t-prime", "0.2",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_rejects_measure_missing_a_point() {
    let dir = tempfile::tempdir().unwrap();
    write_line_space(&dir.path().join("line.json"), &[0.0, 1.0, 3.0]);
    let measure = serde_json::json!({
        "level": 0,
        "masses": [{ "id": 0, "mass": 0.5 }, { "id": 1, "mass": 0.5 }]
    });
    fs::write(dir.path().join("mu.json"), measure.to_string()).unwrap();
    let out = doubling(
        &[
            "verify", "--space", "line.json", "--measure", "mu.json", "--out", "v", "--gamma-upper", "1",
            "--gamma-lower", "0",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "command = \"dims\"\nspace = \"x\"\nout = \"y\"\nbogus = 1\n").unwrap();
    let out = doubling(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn measure_is_deterministic_and_config_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    gen_f(dir.path());
    let flags = [
        "measure", "--space", "f/space.json", "--a", "9", "--s-prime", "log5/log9", "--t-prime", "log2/log9", "--out",
    ];
    let mut first = flags.to_vec();
    first.push("m1");
    let mut second = flags.to_vec();
    second.push("m2");
    ok(&doubling(&first, dir.path()));
    ok(&doubling(&second, dir.path()));
    fs::create_dir(dir.path().join("cfg")).unwrap();
    fs::write(
        dir.path().join("cfg/run.toml"),
        "command = \"measure\"\nspace = \"../f/space.json\"\nout = \"../m3\"\na = 9\n\
         s_prime = \"log5/log9\"\nt_prime = \"log2/log9\"\n",
    )
    .unwrap();
    ok(&doubling(&["run", "--config", "cfg/run.toml"], dir.path()));

    let manifest = fs::read(dir.path().join("m1/manifest.json")).unwrap();
    assert_eq!(manifest, fs::read(dir.path().join("m2/manifest.json")).unwrap());
    assert_eq!(manifest, fs::read(dir.path().join("m3/manifest.json")).unwrap());
}

#[test]
fn manifest_hashes_match_files() {
    let dir = tempfile::tempdir().unwrap();
    gen_f(dir.path());
    ok(&doubling(&["dims", "--space", "f/space.json", "--out", "d"], dir.path()));
    let root = dir.path().join("d");
    let manifest = json(&root.join("manifest.json"));
    let files = manifest["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert_eq!(names, ["curves.tsv", "dims.json", "profile.tsv"]);
    for f in files {
        let bytes = fs::read(root.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
}

#[test]
fn verify_accepts_constructed_measure() {
    let dir = tempfile::tempdir().unwrap();
    gen_f(dir.path());
    ok(&doubling(
        &[
            "measure", "--space", "f/space.json", "--a", "9", "--s-prime", "log5/log9", "--t-prime", "log2/log9",
            "--out", "m",
        ],
        dir.path(),
    ));
    ok(&doubling(
        &[
            "verify", "--space", "f/space.json", "--measure", "m/measure.json", "--gamma-upper", "log5/log9",
            "--gamma-lower", "log2/log9", "--out", "v",
        ],
        dir.path(),
    ));
    let report = json(&dir.path().join("v/report.json"));
    assert!(report["u_fit"]["c"].as_f64().unwrap().is_finite());
    assert!(report["violations"].as_array().unwrap().is_empty());
}

#[test]
fn demo_level_zero_runs() {
    let dir = tempfile::tempdir().unwrap();
    ok(&doubling(&["demo", "--level", "0", "--out", "demo"], dir.path()));
    let summary = fs::read_to_string(dir.path().join("demo/summary.tsv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    for name in ["cantor", "disjoint", "touching"] {
        assert!(dir.path().join("demo").join(name).is_dir());
    }
}
