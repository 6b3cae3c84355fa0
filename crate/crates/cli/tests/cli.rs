//! End-to-end checks of the command-line interface: output values, the
//! exit-code contract, and run-manifest behavior.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_brw-spectra"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

const NN_1D: &str = r#"{"d":1,"kind":"finite_range","weights":[[[1],0.5],[[-1],0.5]]}"#;

#[test]
fn green_matches_closed_form() {
    let dir = tempdir("green");
    let cfg = dir.join("k.json");
    write(&cfg, NN_1D);
    let out = run(&[
        "green",
        "--config",
        cfg.to_str().unwrap(),
        "--lambda",
        "0.01",
        "--x",
        "0",
        "--y",
        "0",
    ]);
    assert!(out.status.success());
    // CSV: header then one row lambda,dx_1,value,err
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    let got: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    let exact = 1.0 / (0.01f64 * 0.01 + 0.02).sqrt();
    assert!((got - exact).abs() / exact < 1e-9, "got {got}, want {exact}");
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempdir("bad");
    let cfg = dir.join("k.json");
    write(&cfg, "{ not json");
    let out = run(&[
        "green",
        "--config",
        cfg.to_str().unwrap(),
        "--lambda",
        "0.01",
        "--x",
        "0",
        "--y",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_domain_exits_2() {
    let dir = tempdir("dom");
    let cfg = dir.join("k.json");
    write(&cfg, NN_1D);
    // lambda <= 0 violates a precondition, not a numerical tolerance
    let out = run(&[
        "green",
        "--config",
        cfg.to_str().unwrap(),
        "--lambda",
        "-1.0",
        "--x",
        "0",
        "--y",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exhausted_population_cap_exits_3() {
    let dir = tempdir("cap");
    let cfg = dir.join("sim.json");
    // cap 1 with overwhelming branching at the start point: every
    // replicate splits before it can leave the source and is censored, so
    // later grid times have no surviving data
    write(
        &cfg,
        r#"{"d":1,"kind":"finite_range","weights":[[[1],0.5],[[-1],0.5]],
            "sources":{"points":[[0]],"beta":1e6},
            "branching":{"b":{"2":1e6}},
            "t_max":1.0,"replicates":5,"seed":1,"cap":1}"#,
    );
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn manifest_written_and_digest_ignores_key_order() {
    let dir = tempdir("manifest");
    let cfg_a = dir.join("a.json");
    let cfg_b = dir.join("b.json");
    write(&cfg_a, NN_1D);
    // same config, different key order
    write(
        &cfg_b,
        r#"{"weights":[[[1],0.5],[[-1],0.5]],"kind":"finite_range","d":1}"#,
    );
    let mut digests = Vec::new();
    for (cfg, name) in [(&cfg_a, "oa.json"), (&cfg_b, "ob.json")] {
        let out_path = dir.join(name);
        let out = run(&[
            "beta-c",
            "--config",
            cfg.to_str().unwrap(),
            "--sources",
            source_file(&dir).to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(out_path.exists(), "missing result file");
        let manifest_path = out_path.with_extension("manifest.json");
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
        assert_eq!(manifest["subcommand"], "beta-c");
        digests.push(manifest["config_digest"].as_str().unwrap().to_string());
    }
    assert_eq!(digests[0], digests[1], "digest must ignore JSON key order");
}

#[test]
fn repro_reports_pass_for_green_law() {
    let out = run(&["repro", "--theorem", "1i"]);
    let v = stdout_json(&out);
    assert_eq!(v["label"], "1i");
    assert_eq!(v["pass"], true);
}

#[test]
fn unknown_theorem_label_exits_2() {
    let out = run(&["repro", "--theorem", "9z"]);
    assert_eq!(out.status.code(), Some(2));
}

fn source_file(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("sources.json");
    write(&p, r#"{"points":[[0]],"beta":0.1}"#);
    p
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let p = std::env::temp_dir().join(format!("brw-spectra-cli-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&p).unwrap();
    p
}
