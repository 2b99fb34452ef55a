use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn fixture(name: &str) -> String {
    fixtures().join(name).to_str().unwrap().to_owned()
}

fn codemia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codemia"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = codemia(args);
    assert!(
        out.status.success(),
        "codemia {args:?} exited {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs mask, score, train-probes, infer and eval into `dir`.
fn full_run(dir: &Path, extra: &[&str]) {
    let (manifest, tokens, features) = (
        fixture("manifest.ndjson"),
        fixture("tokens.ndjson"),
        fixture("features.ndjson"),
    );
    fn with<'a>(args: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
        [args, extra].concat()
    }
    ok(&with(
        &[
            "mask",
            "--manifest",
            &manifest,
            "--out",
            s(&dir.join("masks.ndjson")),
        ],
        extra,
    ));
    ok(&with(
        &[
            "score",
            "--manifest",
            &manifest,
            "--masks",
            s(&dir.join("masks.ndjson")),
            "--tokens",
            &tokens,
            "--out",
            s(&dir.join("scores.ndjson")),
        ],
        extra,
    ));
    ok(&with(
        &[
            "train-probes",
            "--features",
            &features,
            "--manifest",
            &manifest,
            "--out",
            s(&dir.join("probes.bin")),
            "--report",
            s(&dir.join("layers.json")),
        ],
        extra,
    ));
    ok(&with(
        &[
            "infer",
            "--features",
            &features,
            "--bundle",
            s(&dir.join("probes.bin")),
            "--scores",
            s(&dir.join("scores.ndjson")),
            "--out",
            s(&dir.join("final.ndjson")),
        ],
        extra,
    ));
    ok(&with(
        &[
            "eval",
            "--scores",
            s(&dir.join("final.ndjson")),
            "--manifest",
            &manifest,
            "--out",
            s(&dir.join("report.json")),
        ],
        extra,
    ));
}

fn rows(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn full_pipeline_writes_scores_report_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    full_run(dir.path(), &[]);

    let scores = rows(&dir.path().join("final.ndjson"));
    assert_eq!(scores.len(), 40);
    for row in &scores {
        for key in ["anomaly", "probe", "fused", "loss", "mink"] {
            assert!(row[key].is_f64(), "{key} missing in {row}");
        }
    }
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    for method in ["anomaly", "probe", "fused", "loss", "mink"] {
        assert!(
            report["methods"][method]["overall_pooled"].is_f64(),
            "{method}"
        );
        let csv = std::fs::read_to_string(dir.path().join(format!("roc_{method}.csv"))).unwrap();
        assert!(csv.lines().count() > 2, "{method} curve too short");
    }
    let layers: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("layers.json")).unwrap())
            .unwrap();
    assert_eq!(layers.as_array().unwrap().len(), 4);
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    full_run(a.path(), &["--seed", "9", "--workers", "1"]);
    full_run(b.path(), &["--seed", "9", "--workers", "3"]);
    for name in [
        "masks.ndjson",
        "scores.ndjson",
        "probes.bin",
        "final.ndjson",
        "report.json",
        "roc_fused.csv",
    ] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn inputs_are_not_modified() {
    let names = ["manifest.ndjson", "tokens.ndjson", "features.ndjson"];
    let before: Vec<Vec<u8>> = names
        .iter()
        .map(|n| std::fs::read(fixtures().join(n)).unwrap())
        .collect();
    let dir = tempfile::tempdir().unwrap();
    full_run(dir.path(), &[]);
    for (n, b) in names.iter().zip(before) {
        assert_eq!(std::fs::read(fixtures().join(n)).unwrap(), b, "{n} changed");
    }
}

#[test]
fn output_over_input_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.ndjson");
    std::fs::copy(fixtures().join("manifest.ndjson"), &manifest).unwrap();
    let before = std::fs::read(&manifest).unwrap();
    let out = codemia(&["mask", "--manifest", s(&manifest), "--out", s(&manifest)]);
    assert_ne!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&manifest).unwrap(), before);
}

#[test]
fn missing_token_rows_score_as_null() {
    let dir = tempfile::tempdir().unwrap();
    let tokens = dir.path().join("tokens.ndjson");
    let kept: Vec<String> = std::fs::read_to_string(fixtures().join("tokens.ndjson"))
        .unwrap()
        .lines()
        .filter(|l| !l.contains("\"syn-00003\""))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&tokens, kept.concat()).unwrap();
    let manifest = fixture("manifest.ndjson");
    let masks = dir.path().join("masks.ndjson");
    let scores = dir.path().join("scores.ndjson");
    ok(&["mask", "--manifest", &manifest, "--out", s(&masks)]);
    let out = ok(&[
        "score",
        "--manifest",
        &manifest,
        "--masks",
        s(&masks),
        "--tokens",
        s(&tokens),
        "--out",
        s(&scores),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 without token records"));

    let rows = rows(&scores);
    assert_eq!(rows.len(), 40);
    let missing = rows.iter().find(|r| r["sample_id"] == "syn-00003").unwrap();
    assert!(missing["anomaly"].is_null() && missing["loss"].is_null() && missing["mink"].is_null());
    assert_eq!(rows.iter().filter(|r| r["anomaly"].is_null()).count(), 1);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "k_percent = 50.0\n").unwrap();
    let manifest = fixture("manifest.ndjson");
    let tokens = fixture("tokens.ndjson");
    let masks = dir.path().join("masks.ndjson");
    ok(&["mask", "--manifest", &manifest, "--out", s(&masks)]);
    let score = |out: &str, extra: &[&str]| {
        let path = dir.path().join(out);
        ok(&[
            &[
                "score",
                "--manifest",
                &manifest,
                "--masks",
                s(&masks),
                "--tokens",
                &tokens,
                "--out",
                s(&path),
            ],
            extra,
        ]
        .concat());
        std::fs::read(path).unwrap()
    };
    let from_file = score("file.ndjson", &["--config", s(&config)]);
    let flag_wins = score(
        "flag.ndjson",
        &["--config", s(&config), "--k-percent", "10"],
    );
    let flag_only = score("plain.ndjson", &["--k-percent", "10"]);
    let default = score("default.ndjson", &[]);
    assert_eq!(flag_wins, flag_only);
    assert_ne!(from_file, flag_only);
    assert_ne!(from_file, default);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "k_percnt = 50.0\n").unwrap();
    let out = codemia(&[
        "--config",
        s(&config),
        "mask",
        "--manifest",
        &fixture("manifest.ndjson"),
        "--out",
        s(&dir.path().join("m")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(codemia(&["--help"]).status.code(), Some(0));
    assert_eq!(codemia(&["score", "--help"]).status.code(), Some(0));
    assert_eq!(codemia(&["--version"]).status.code(), Some(0));
    assert_eq!(codemia(&[]).status.code(), Some(1));
    assert_eq!(codemia(&["mask", "--manifest"]).status.code(), Some(1));
    assert_eq!(codemia(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn malformed_input_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.ndjson");
    let mut text: Vec<String> = std::fs::read_to_string(fixtures().join("manifest.ndjson"))
        .unwrap()
        .lines()
        .take(4)
        .map(str::to_owned)
        .collect();
    text[2] = "{\"id\": \"broken\", \"language\":".to_owned();
    std::fs::write(&manifest, text.join("\n") + "\n").unwrap();
    let out = codemia(&[
        "mask",
        "--manifest",
        s(&manifest),
        "--out",
        s(&dir.path().join("m")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("manifest.ndjson:3"), "{stderr}");
}

#[test]
fn single_class_training_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.ndjson");
    let members: String = std::fs::read_to_string(fixtures().join("manifest.ndjson"))
        .unwrap()
        .lines()
        .filter(|l| l.contains("\"label\":1"))
        .map(|l| format!("{l}\n"))
        .collect();
    assert!(!members.is_empty());
    std::fs::write(&manifest, members).unwrap();
    let out = codemia(&[
        "train-probes",
        "--features",
        &fixture("features.ndjson"),
        "--manifest",
        s(&manifest),
        "--out",
        s(&dir.path().join("p.bin")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = codemia(&[
        "mask",
        "--manifest",
        s(&dir.path().join("absent.ndjson")),
        "--out",
        s(&dir.path().join("m")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn split_plan_restricts_training_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    full_run(dir.path(), &[]);
    let plan = dir.path().join("split.json");
    let manifest = fixture("manifest.ndjson");
    ok(&[
        "split",
        "--manifest",
        &manifest,
        "--out",
        s(&plan),
        "--per-language-n",
        "4",
    ]);
    let report = dir.path().join("split_report.json");
    ok(&[
        "eval",
        "--scores",
        s(&dir.path().join("final.ndjson")),
        "--manifest",
        &manifest,
        "--out",
        s(&report),
        "--split",
        s(&plan),
    ]);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let langs = report["methods"]["anomaly"]["languages"]
        .as_object()
        .unwrap();
    assert_eq!(langs.len(), 4);

    let too_many = codemia(&[
        "split",
        "--manifest",
        &manifest,
        "--out",
        s(&dir.path().join("x.json")),
        "--per-language-n",
        "20",
    ]);
    assert_eq!(too_many.status.code(), Some(2));
}
