use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_structcomp"))
        .args(args)
        .output()
        .unwrap()
}

fn p(dir: &Path, f: &str) -> String {
    dir.join(f).to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn theory_check_on_defaults_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "appc.json");
    let o = run(&["theory", "--check", "appc", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert!(report.is_object() || report.is_array());
    assert!(Path::new(&format!("{out}.manifest.json")).exists());
}

#[test]
fn missing_required_flag_is_usage_error() {
    let o = run(&["train", "--features", "x.bin", "--out", "p.bin"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("--graph"), "{err}");
    assert!(err.to_lowercase().contains("usage"), "{err}");
}

#[test]
fn unknown_flag_and_command_are_usage_errors() {
    assert_eq!(
        run(&["theory", "--check", "appc", "--bogus", "1", "--out", "x"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn corrupt_features_file_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = p(dir.path(), "data");
    assert_eq!(
        run(&["gen", "--nodes", "60", "--seed", "1", "--out", &data])
            .status
            .code(),
        Some(0)
    );
    let feats = p(dir.path(), "bad.bin");
    std::fs::write(&feats, b"NOPE\x01\x00\x00\x00garbage").unwrap();
    let o = run(&[
        "train",
        "--graph",
        &p(dir.path(), "data/edges.tsv"),
        "--features",
        &feats,
        "--out",
        &p(dir.path(), "w.bin"),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.bin") && err.contains("SCMF"), "{err}");
    assert!(!dir.path().join("w.bin").exists());
}

#[test]
fn generate_train_infer_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |args: &[&str]| {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    };
    ok(&[
        "gen",
        "--nodes",
        "200",
        "--feature-dim",
        "8",
        "--seed",
        "4",
        "--out",
        &p(d, "data"),
    ]);
    let (edges, feats, labels) = (
        p(d, "data/edges.tsv"),
        p(d, "data/features.bin"),
        p(d, "data/labels.txt"),
    );
    ok(&[
        "train",
        "--graph",
        &edges,
        "--features",
        &feats,
        "--model",
        "sce",
        "--epochs",
        "10",
        "--clusters",
        "20",
        "--out",
        &p(d, "w.bin"),
        "--history",
        &p(d, "h.csv"),
    ]);
    ok(&[
        "infer",
        "--graph",
        &edges,
        "--features",
        &feats,
        "--params",
        &p(d, "w.bin"),
        "--out",
        &p(d, "z.csv"),
    ]);
    ok(&[
        "eval",
        "--embeddings",
        &p(d, "z.csv"),
        "--labels",
        &labels,
        "--out",
        &p(d, "eval.json"),
    ]);

    let history = std::fs::read_to_string(p(d, "h.csv")).unwrap();
    assert_eq!(history.lines().count(), 11, "{history}");
    let z = std::fs::read_to_string(p(d, "z.csv")).unwrap();
    assert_eq!(z.lines().count(), 200);
    let eval: serde_json::Value =
        serde_json::from_slice(&std::fs::read(p(d, "eval.json")).unwrap()).unwrap();
    let text = eval.to_string();
    assert!(text.contains("accuracy"), "{text}");
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(p(d, "w.bin.manifest.json")).unwrap()).unwrap();
    assert_eq!(
        manifest["command"].as_str().map(|c| c.contains("train")),
        Some(true),
        "{manifest}"
    );
}
