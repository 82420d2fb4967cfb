use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn patmine(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patmine"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn fixture_run(work: &Path) -> Output {
    let config = fixtures().join("patmine.toml");
    patmine(
        &["--config", config.to_str().unwrap(), "--work-dir", work.to_str().unwrap(), "run"],
        work.parent().unwrap(),
    )
}

#[test]
fn fixture_run_matches_goldens() {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path().join("out");
    let out = fixture_run(&work);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "quantum_concept_matches_with_patterns.csv",
        "final_pattern_report.txt",
        "skipped_files.csv",
    ] {
        let got = fs::read(work.join(name)).unwrap();
        let want = fs::read(fixtures().join("golden").join(name)).unwrap();
        assert!(got == want, "{name} differs from golden");
    }
    let stderr = String::from_utf8_lossy(&out.stderr);
    for stage in ["kb-validate: ok", "convert: ok", "match: ok", "report: ok"] {
        assert!(stderr.contains(stage), "{stderr}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(work.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["stages"].as_array().unwrap().len(), 4);
    for table in ["report_overall_summary.csv", "report_gap_analysis.csv", "report_top_concepts.csv"] {
        assert!(work.join("report_tables").join(table).is_file());
    }
}

#[test]
fn empty_stage_set_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path().join("out");
    let out = patmine(&["--work-dir", work.to_str().unwrap(), "run", "--stages", ""], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(!work.exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "unknown_key = 1\n").unwrap();
    let out = patmine(&["--config", bad.to_str().unwrap(), "run"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    fs::write(&bad, "[match]\nname_threshold = 1.5\n").unwrap();
    let out = patmine(&["--config", bad.to_str().unwrap(), "match"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = patmine(&["run", "--stages", "nonsense"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = patmine(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn match_without_corpus_is_a_stage_error() {
    let dir = tempfile::tempdir().unwrap();
    let kb = fixtures().join("kb.csv");
    let work = dir.path().join("out");
    let out = patmine(
        &["--work-dir", work.to_str().unwrap(), "match", "--kb", kb.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("match"));
}

#[test]
fn extract_and_validate_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let csv_out = dir.path().join("qiskit.csv");
    let root = fixtures().join("frameworks/qiskit");
    let out = patmine(
        &[
            "--work-dir",
            dir.path().join("w").to_str().unwrap(),
            "extract",
            "--framework",
            "qiskit",
            "--source-root",
            root.to_str().unwrap(),
            "--output",
            csv_out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv_out).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.starts_with("framework,concept_path,summary,kind,deprecated\n"));

    let kb = fixtures().join("kb.csv");
    let out = patmine(
        &["--work-dir", dir.path().join("w").to_str().unwrap(), "kb", "validate", "--kb", kb.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(dir.path().join("w/kb_validation.txt")).unwrap(), "knowledge base OK\n");
}
