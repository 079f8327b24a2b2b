use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn oralkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oralkit"))
        .current_dir(dir)
        .env_remove("ORALKIT_SEED")
        .args(args)
        .output()
        .expect("run oralkit")
}

fn toy() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy")
}

fn toy_file(name: &str) -> String {
    toy().join(name).to_string_lossy().into_owned()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        oralkit(dir.path(), &["no-such-command"]).status.code(),
        Some(2)
    );
    assert_eq!(oralkit(dir.path(), &["normalize"]).status.code(), Some(2));
    assert_eq!(
        oralkit(
            dir.path(),
            &["--threads", "0", "oracle-check", "--max-len", "2"]
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn data_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = oralkit(
        dir.path(),
        &["normalize", "--input", "missing.txt", "--output", "out.txt"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    std::fs::write(dir.path().join("bad.conllu"), "1\tx\n").unwrap();
    let out = oralkit(
        dir.path(),
        &[
            "parse-score",
            "--gold",
            "bad.conllu",
            "--pred",
            "bad.conllu",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bundled_toy_data_is_regenerable() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&oralkit(dir.path(), &["toy-data", "--out", "toy"]));
    for entry in std::fs::read_dir(toy()).unwrap() {
        let entry = entry.unwrap();
        let fresh = std::fs::read(dir.path().join("toy").join(entry.file_name())).unwrap();
        assert_eq!(
            fresh,
            std::fs::read(entry.path()).unwrap(),
            "{:?} differs",
            entry.file_name()
        );
    }
}

#[test]
fn oracle_check_short_lengths() {
    let dir = tempfile::tempdir().unwrap();
    let out = oralkit(
        dir.path(),
        &["oracle-check", "--max-len", "3", "--report", "r.json"],
    );
    assert_ok(&out);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "oracle-check");
    assert!(report["schema_version"].is_number() || report["schema_version"].is_string());
}

#[test]
fn slu_pipeline_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&oralkit(
        d,
        &[
            "slu-train",
            "--train",
            &toy_file("slu_train.tsv"),
            "--dev",
            &toy_file("slu_dev.tsv"),
            "--concepts",
            &toy_file("slu_concepts.txt"),
            "--epochs",
            "5",
            "--model",
            "slu.json",
        ],
    ));
    assert_ok(&oralkit(
        d,
        &[
            "slu-decode",
            "--model",
            "slu.json",
            "--input",
            &toy_file("slu_test.tsv"),
            "--output",
            "pred.tsv",
        ],
    ));
    for mode in ["cer", "cver"] {
        let out = oralkit(
            d,
            &[
                "slu-score",
                "--gold",
                &toy_file("slu_test.tsv"),
                "--pred",
                "pred.tsv",
                "--mode",
                mode,
                "--rules",
                &toy_file("slu_rules.json"),
                "--report",
                "score.json",
            ],
        );
        assert_ok(&out);
        let report: serde_json::Value =
            serde_json::from_slice(&std::fs::read(d.join("score.json")).unwrap()).unwrap();
        assert_eq!(report["command"], "slu-score");
    }
}

#[test]
fn classification_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |report: &str| {
        let out = oralkit(
            dir.path(),
            &[
                "--seed",
                "3",
                "classif-run",
                "--input",
                &toy_file("docs.jsonl"),
                "--splits",
                "3",
                "--train-size",
                "400",
                "--test-size",
                "100",
                "--report",
                report,
            ],
        );
        assert_ok(&out);
        (out.stdout, std::fs::read(dir.path().join(report)).unwrap())
    };
    let (a_out, a) = run("a.json");
    let (b_out, b) = run("b.json");
    assert_eq!(a_out, b_out);
    assert_eq!(a, b);
}

#[test]
fn text_tools_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&oralkit(
        d,
        &[
            "segment",
            "--input",
            &toy_file("turns.jsonl"),
            "--output",
            "utts.jsonl",
        ],
    ));
    assert_ok(&oralkit(
        d,
        &["repunc", "--input", "utts.jsonl", "--output", "p.jsonl"],
    ));
    assert_ok(&oralkit(
        d,
        &[
            "repunc", "--strip", "--input", "p.jsonl", "--output", "s.jsonl",
        ],
    ));
    assert_eq!(
        std::fs::read(d.join("utts.jsonl")).unwrap(),
        std::fs::read(d.join("s.jsonl")).unwrap()
    );
}
