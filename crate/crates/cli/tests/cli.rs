use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fpeng(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpeng"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn mnist(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/mnist")
        .join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn train_render_export_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let images = mnist("mnist10k-images-idx3-ubyte.gz");
    let labels = mnist("mnist10k-labels-idx1-ubyte.gz");
    let r = fpeng(&[
        "train",
        "--dataset",
        s(&images),
        "--labels",
        s(&labels),
        "--limit",
        "500",
        "--out",
        s(&out),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let stats: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(stats["samples"], 500);
    assert!(stats["wall_time_ms"].is_number());
    let model = out.join("model.fpe.json");
    let text = std::fs::read_to_string(&model).unwrap();
    assert!(!text.contains("wall_time"));

    let seed_footprints = stats["clusters"][0]["cells"][0]["footprints"].as_u64().unwrap() as usize;
    let r = fpeng(&["render", "--model", s(&model), "--out", s(&out)]);
    assert!(r.status.success());
    let rendered = files_under(&out.join("render"));
    assert_eq!(rendered.len(), seed_footprints);

    let r = fpeng(&["export-dot", "--model", s(&model), "--out", s(&out)]);
    assert!(r.status.success());
    assert!(std::fs::read_to_string(out.join("cluster.dot"))
        .unwrap()
        .starts_with("digraph"));

    let r = fpeng(&["stats", "--model", s(&model), "--out", s(&out)]);
    assert!(r.status.success());
    let again: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(again["model_hash"], stats["model_hash"]);

    for f in files_under(dir.path()) {
        assert!(
            f.starts_with(&out),
            "{} written outside the output directory",
            f.display()
        );
    }
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("missing.fpe.json");
    assert_eq!(
        fpeng(&["stats", "--model", s(&missing), "--out", s(&out)])
            .status
            .code(),
        Some(3)
    );

    let garbage = dir.path().join("garbage.fpe.json");
    std::fs::write(&garbage, "{not json").unwrap();
    assert_eq!(
        fpeng(&["stats", "--model", s(&garbage), "--out", s(&out)])
            .status
            .code(),
        Some(4)
    );

    let bad = dir.path().join("bad.idx");
    std::fs::write(&bad, [0, 0, 8, 9, 0, 0, 0, 0]).unwrap();
    assert_eq!(
        fpeng(&["train", "--dataset", s(&bad), "--out", s(&out)]).status.code(),
        Some(4)
    );

    assert_eq!(fpeng(&["bogus-verb"]).status.code(), Some(2));

    let cfg = dir.path().join("zero.json");
    std::fs::write(&cfg, r#"{"sensorimotor": {"passes": 0}}"#).unwrap();
    let r = fpeng(&["demo-sensorimotor", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(6));
    let report: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(report["no_match"], true);
}

#[test]
fn demos_and_completion() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let r = fpeng(&["demo-sensorimotor", "--seed", "4", "--out", s(&out)]);
    assert!(r.status.success());
    let report: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(report["correct"], 8);
    for p in report["results"].as_array().unwrap() {
        assert!(p["decoded_motor"].is_number() && p["confidence"].is_number());
    }

    // Complete the motor from the sound alone.
    let model = out.join("sensorimotor.fpe.json");
    let sound = report["results"][0]["sound"].to_string();
    let input = format!("sound={sound}");
    let r = fpeng(&[
        "complete",
        "--model",
        s(&model),
        "--input",
        &input,
        "--target",
        "motor",
        "--out",
        s(&out),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let done: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(done["symbol"], report["results"][0]["expected_motor"]);

    let r = fpeng(&[
        "complete",
        "--model",
        s(&model),
        "--input",
        &input,
        "--target",
        "nope",
        "--out",
        s(&out),
    ]);
    assert_eq!(r.status.code(), Some(7));

    let r = fpeng(&["demo-episodic", "--out", s(&out)]);
    assert!(r.status.success());
    let first = std::fs::read(out.join("episodic_report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["reactive_identical"], true);
    let windows = report["episodic"].as_array().unwrap();
    assert_eq!(windows[0]["episode_len"], 2);
    assert_eq!(windows[1]["correct"], 2);
    fpeng(&["demo-episodic", "--out", s(&out)]);
    assert_eq!(first, std::fs::read(out.join("episodic_report.json")).unwrap());
}
