use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn robin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robin"))
        .args(args)
        .env_remove("ROBIN_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = robin(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, name: &str, seed: &str, n: &str, missing: &str) -> PathBuf {
    let out = dir.join(name);
    ok(&[
        "synth",
        "--seed",
        seed,
        "--n",
        n,
        "--missing-rate",
        missing,
        "--out",
        p(&out),
    ]);
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read(synth(dir.path(), "a.csv", "5", "60", "0.1")).unwrap();
    let b = std::fs::read(synth(dir.path(), "b.csv", "5", "60", "0.1")).unwrap();
    let c = std::fs::read(synth(dir.path(), "c.csv", "6", "60", "0.1")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let manifest = read_json(&dir.path().join("a.csv.manifest.json"));
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["command"], "synth");
}

#[test]
fn zero_missing_rate_leaves_no_empty_cells() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(synth(dir.path(), "d.csv", "2", "80", "0")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let schema = robin_core::Schema::clinical();
    assert_eq!(header.split(',').count(), schema.attributes.len(), "{header}");
    let mut rows = 0;
    for line in lines {
        assert!(line.split(',').all(|c| !c.is_empty()), "{line}");
        rows += 1;
    }
    assert_eq!(rows, 80);
}

#[test]
fn single_run_has_zero_half_widths() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "e.csv", "3", "60", "0.1");
    let out = dir.path().join("eval.json");
    let stdout = ok(&[
        "evaluate",
        "--data",
        p(&data),
        "--variant",
        "mlp",
        "--runs",
        "1",
        "--epochs",
        "5",
        "--seed",
        "1",
        "--out",
        p(&out),
    ]);
    assert!(stdout.contains("| mlp |"), "{stdout}");
    let report = read_json(&out);
    let summary = report["reports"][0]["summary"].as_array().unwrap();
    assert!(!summary.is_empty());
    for m in summary {
        assert_eq!(m["half_width"], 0.0, "{m}");
    }
}

#[test]
fn zero_stress_equals_clean_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "f.csv", "4", "60", "0.1");
    let out = dir.path().join("stress");
    let stdout = ok(&[
        "stress",
        "--data",
        p(&data),
        "--variant",
        "dnn",
        "--kinds",
        "noise,erase",
        "--levels",
        "0,0.5",
        "--runs",
        "2",
        "--epochs",
        "5",
        "--widths",
        "8,4",
        "--seed",
        "2",
        "--out-dir",
        p(&out),
    ]);
    assert!(stdout.contains("collapse"), "{stdout}");
    let report = read_json(&out.join("stress_report.json"));
    let cells = report["cells"].as_array().unwrap();
    let find = |kind: &str, s: f64| {
        cells
            .iter()
            .find(|c| c["kind"] == kind && c["strength"].as_f64() == Some(s))
            .unwrap_or_else(|| panic!("{kind} {s}"))
    };
    let clean = &find("clean", 0.0)["summary"];
    assert_eq!(&find("noise", 0.0)["summary"], clean);
    assert_eq!(&find("erase", 0.0)["summary"], clean);
    assert_ne!(&find("noise", 0.5)["summary"], clean);
    for name in ["stress_report.csv", "stress_curves.csv", "manifest.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
}

#[test]
fn train_then_explain_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "g.csv", "7", "60", "0.1");
    let model = dir.path().join("model.json");
    let loss = dir.path().join("loss.csv");
    ok(&[
        "train",
        "--data",
        p(&data),
        "--epochs",
        "10",
        "--widths",
        "8,6",
        "--out-model",
        p(&model),
        "--loss-csv",
        p(&loss),
    ]);
    let loss_text = std::fs::read_to_string(&loss).unwrap();
    assert!(loss_text.starts_with("epoch,loss\n1,"));
    assert_eq!(loss_text.lines().count(), 11);

    let out = dir.path().join("explain");
    ok(&[
        "explain",
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--samples",
        "0,3",
        "--png",
        "--out-dir",
        p(&out),
    ]);
    let importance = std::fs::read_to_string(out.join("importance.csv")).unwrap();
    assert!(importance.starts_with("attribute,score\n"));
    assert_eq!(importance.lines().count(), 32);
    for i in [0, 3] {
        assert!(out.join(format!("heatmap_{i}.csv")).exists());
        assert!(out.join(format!("heatmap_{i}.png")).exists());
    }
    let reps = std::fs::read_to_string(out.join("representations.csv")).unwrap();
    assert_eq!(reps.lines().count(), 61);
}

#[test]
fn exit_codes_and_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(robin(&["bogus"]).status.code(), Some(1));
    assert_eq!(robin(&["--help"]).status.code(), Some(0));

    let missing = dir.path().join("nope.csv");
    let out = dir.path().join("cv.json");
    let r = robin(&["crossval", "--data", p(&missing), "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&r.stderr).is_empty());

    let data = synth(dir.path(), "h.csv", "1", "40", "0");
    let r = robin(&[
        "stress",
        "--data",
        p(&data),
        "--levels",
        "0.3",
        "--out-dir",
        p(&dir.path().join("s")),
    ]);
    assert_eq!(r.status.code(), Some(1));
    let r = robin(&[
        "crossval",
        "--data",
        p(&data),
        "--k",
        "500",
        "--epochs",
        "2",
        "--out",
        p(&out),
    ]);
    assert_ne!(r.status.code(), Some(0));
    let r = robin(&[
        "train",
        "--data",
        p(&data),
        "--epochs",
        "0",
        "--out-model",
        p(&dir.path().join("m.json")),
    ]);
    assert_eq!(r.status.code(), Some(1));

    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["h.csv", "h.csv.manifest.json"]);
}
