use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn dsf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsf"))
        .args(args)
        .env("RAYON_NUM_THREADS", "2")
        .output()
        .unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn annotate_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("annotated.jsonl");
    let f = fixtures();
    let res = dsf(&[
        "annotate",
        "--config",
        arg(&f.join("run.toml")),
        "--input",
        arg(&f.join("sentences.jsonl")),
        "--output",
        arg(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let got = std::fs::read_to_string(&out).unwrap();
    let want = std::fs::read_to_string(f.join("annotated.jsonl")).unwrap();
    assert_eq!(got, want);
}

#[test]
fn metrics_matches_hand_computed_scores() {
    let f = fixtures();
    let res = dsf(&["metrics", "--gold", arg(&f.join("gold.jsonl")), "--pred", arg(&f.join("predictions.jsonl"))]);
    assert!(res.status.success());
    let report: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    let f1 = [0.7, 12.0 / 19.0, 2.0 / 3.0];
    let want = [
        ("accuracy", 2.0 / 3.0),
        ("f1_macro", f1.iter().sum::<f64>() / 3.0),
        ("f1_pm_macro", (f1[0] + f1[1]) / 2.0),
        ("f1_pm_micro", 2.0 / 3.0),
    ];
    assert_eq!(report.as_object().unwrap().len(), 4);
    for (key, value) in want {
        let got = report[key].as_f64().unwrap();
        assert!((got - value).abs() < 1e-12, "{key}: {got} vs {value}");
    }
}

#[test]
fn metrics_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let f = fixtures();
    let res = dsf(&[
        "metrics",
        "--gold",
        arg(&f.join("gold.jsonl")),
        "--pred",
        arg(&f.join("predictions.jsonl")),
        "--output",
        arg(&out),
    ]);
    assert!(res.status.success());
    assert!(res.stdout.is_empty());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(report["accuracy"].is_f64());
}

const THREE_STEP: &str = r#"{
  "description": "general sample, then thematic sample, then the benchmark train set; weights frozen before each later stage",
  "stages": [
    {
      "name": "general",
      "dataset_path": "annotated.jsonl",
      "freeze_before": false
    },
    {
      "name": "thematic",
      "dataset_path": "sentences.jsonl",
      "freeze_before": true
    },
    {
      "name": "benchmark_train",
      "dataset_path": "gold.jsonl",
      "freeze_before": true
    }
  ]
}
"#;

#[test]
fn plan_matches_golden() {
    let f = fixtures();
    let res = dsf(&[
        "plan",
        "--variant",
        "three_step",
        "--dir",
        arg(&f),
        "--general",
        "annotated.jsonl",
        "--thematic",
        "sentences.jsonl",
        "--benchmark-train",
        "gold.jsonl",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(String::from_utf8(res.stdout).unwrap(), THREE_STEP);
}

#[test]
fn config_errors_exit_with_two() {
    let f = fixtures();
    let res = dsf(&["plan", "--variant", "bogus"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("unknown plan variant"));

    let res = dsf(&["plan", "--variant", "three_step", "--dir", arg(&f), "--general", "annotated.jsonl"]);
    assert_eq!(res.status.code(), Some(2));

    let res = dsf(&["run", "--config", arg(&f.join("run.toml")), "--set", "dedup.threshold=1.5"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_three() {
    let f = fixtures();
    let res = dsf(&["metrics", "--gold", arg(&f.join("gold.jsonl")), "--pred", arg(&f.join("missing.jsonl"))]);
    assert_eq!(res.status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("pred.jsonl");
    std::fs::write(&short, "{\"id\":\"e00\",\"label\":\"positive\"}\n").unwrap();
    let res = dsf(&["metrics", "--gold", arg(&f.join("gold.jsonl")), "--pred", arg(&short)]);
    assert_eq!(res.status.code(), Some(3));
    assert!(!res.stderr.is_empty());
}

#[test]
fn dedup_and_balance_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let input = f.join("annotated.jsonl");
    let deduped = dir.path().join("dedup.jsonl");
    let run_dedup = |extra: &[&str]| {
        let mut args = vec![
            "dedup",
            "--input",
            arg(&input),
            "--output",
            arg(&deduped),
            "--seed",
            "1",
        ];
        args.extend(extra);
        let res = dsf(&args);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        std::fs::read_to_string(&deduped).unwrap().lines().count()
    };
    // every near-identical pair here comes from one sentence
    assert_eq!(run_dedup(&[]), 16);
    let kept = run_dedup(&["--across-same-source", "--blocking", "none"]);
    assert!(kept < 16 && kept > 0, "{kept}");

    let sample = dir.path().join("sample.jsonl");
    let res = dsf(&[
        "balance",
        "--input",
        arg(&input),
        "--output",
        arg(&sample),
        "--total",
        "6",
        "--seed",
        "2",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows: Vec<serde_json::Value> = std::fs::read_to_string(&sample)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    for label in ["positive", "negative", "neutral"] {
        assert_eq!(rows.iter().filter(|r| r["label"] == label).count(), 2);
    }
}
