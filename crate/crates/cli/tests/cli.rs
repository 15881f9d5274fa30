use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bfclock::format::{emit_instance, parse_instance, parse_outcome};
use bfclock::harness::BenchReport;
use bfclock::{Instance, ValuationKind};

fn bfclock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bfclock"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn write_instance(dir: &Path, name: &str, inst: &Instance) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, emit_instance(inst)).unwrap();
    path
}

#[test]
fn run_writes_outcome_and_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let inst = Instance::new(1.0, vec![0.2, 0.3, 0.9], ValuationKind::Additive { values: vec![1.0, 2.0, 3.0] }).unwrap();
    let path = write_instance(dir.path(), "small.toml", &inst);
    let out = bfclock(&["run", p(&path), "--mechanism", "iterative-pruning"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let outcome = dir.path().join("small.iterative-pruning.outcome.json");
    let transcript = dir.path().join("small.iterative-pruning.transcript.tsv");
    assert!(outcome.exists() && transcript.exists());
    let parsed = parse_outcome(&fs::read_to_string(&outcome).unwrap()).unwrap();
    assert_eq!(parsed.mechanism, "iterative-pruning");

    let audit = bfclock(&["audit", p(&path), p(&transcript), p(&outcome)]);
    assert_eq!(code(&audit), 0, "{}", stdout(&audit));
    assert!(stdout(&audit).contains("violations=0"));
}

#[test]
fn run_honours_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = bfclock(&[
        "run",
        p(&fixture("random-cut-n8-s1.toml")),
        "--mechanism",
        "simultaneous",
        "--exact-submax-cap",
        "4",
        "--out",
        p(&out_dir),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out_dir.join("random-cut-n8-s1.simultaneous.transcript.tsv").exists());
}

#[test]
fn malformed_instance_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "schema = \"clock-auction-instance/1\"\nbudget = \"lots\"\n").unwrap();
    assert_eq!(code(&bfclock(&["run", p(&path), "--mechanism", "subadditive"])), 2);
    assert_eq!(code(&bfclock(&["run", p(&dir.path().join("missing.toml")), "--mechanism", "subadditive"])), 2);
    assert_eq!(code(&bfclock(&["run", p(&path), "--mechanism", "nope"])), 2);
}

#[test]
fn kind_mismatch_exits_3() {
    let out = bfclock(&["run", p(&fixture("random-additive-n8-s1.toml")), "--mechanism", "posted-price"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn gen_lemma3_has_704_bidders() {
    let dir = tempfile::tempdir().unwrap();
    let out = bfclock(&["gen", "lemma3", "--epsilon", "1/75", "--out", p(dir.path())]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("lemma3.toml")).unwrap();
    let inst = parse_instance(&text).unwrap();
    assert_eq!(inst.len(), 704);
    assert_eq!(inst.metadata.generator.as_deref(), Some("lemma3"));
    assert_eq!(text, fs::read_to_string(fixture("lemma3.toml")).unwrap());
}

#[test]
fn gen_is_deterministic_in_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = bfclock(&["gen", "random-coverage", "--n", "10", "--seed", "7", "--out", p(dir.path())]);
        assert_eq!(code(&out), 0);
    }
    let name = "random-coverage-n10-s7.toml";
    let text = fs::read_to_string(a.path().join(name)).unwrap();
    assert_eq!(text, fs::read_to_string(b.path().join(name)).unwrap());
    assert!(text.contains("seed = 7"));
}

#[test]
fn gen_additive_sqrt_writes_three_cases() {
    let dir = tempfile::tempdir().unwrap();
    let out = bfclock(&["gen", "additive-sqrt", "--n", "16", "--out", p(dir.path())]);
    assert_eq!(code(&out), 0);
    for case in ["case1", "case2", "case3"] {
        let text = fs::read_to_string(dir.path().join(format!("additive-sqrt-n16-{case}.toml"))).unwrap();
        assert_eq!(parse_instance(&text).unwrap().metadata.label.as_deref(), Some(case));
    }
}

#[test]
fn gen_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["gen", "lemma3", "--epsilon", "0.3"],
        vec!["gen", "symmetric-log", "--n", "100", "--k", "1"],
        vec!["gen", "additive-sqrt"],
        vec!["gen", "random-widgets", "--n", "4"],
        vec!["gen", "lemma3", "--epsilon", "1/0"],
    ] {
        let mut args = args;
        args.extend(["--out", p(dir.path())]);
        assert_eq!(code(&bfclock(&args)), 2, "{args:?}");
    }
}

#[test]
fn bench_coverage_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bfclock(&["gen", "random-coverage", "--n", "10", "--count", "200", "--out", p(dir.path())]);
    assert_eq!(code(&out), 0);
    let report_path = dir.path().join("report.json");
    let pattern = format!("{}/*.toml", p(dir.path()));
    let out = bfclock(&[
        "bench",
        &pattern,
        "--mechanism",
        "iterative-pruning",
        "--json-report",
        p(&report_path),
    ]);
    assert_eq!(code(&out), 0);
    let report: BenchReport = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 200);
    let max = report.rows.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
    assert!(max <= 4.75);
    assert_eq!(report.aggregates.len(), 1);
    assert_eq!(report.aggregates[0].max_ratio, Some(max));
}

#[test]
fn bench_lemma3_fixture_reports_its_ratio() {
    let out = bfclock(&["bench", p(&fixture("lemma3.toml")), "--mechanism", "iterative-pruning"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let row = text.lines().find(|l| l.contains("lemma3.toml")).unwrap();
    let ratio: f64 = row.split('\t').nth(6).unwrap().parse().unwrap();
    assert!((ratio - 4.416_666_666).abs() < 1e-6, "{ratio}");
}

#[test]
fn bench_empty_glob_is_empty_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("r.json");
    let pattern = format!("{}/*.toml", p(dir.path()));
    let out = bfclock(&["bench", &pattern, "--mechanism", "subadditive", "--json-report", p(&report_path)]);
    assert_eq!(code(&out), 0);
    let report: BenchReport = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report.rows.is_empty());
}

#[test]
fn bench_exits_1_when_a_row_exceeds_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let n = 8;
    let price = 1.0 / (2.0 * (n as f64).ln());
    let mut costs = vec![price + 1e-6; n];
    costs[0] = 0.0;
    costs[n - 1] = 0.0;
    let inst = Instance::new(1.0, costs, ValuationKind::Symmetric { marginals: vec![1.0; n] }).unwrap();
    let path = write_instance(dir.path(), "adversarial.toml", &inst);
    let out = bfclock(&["bench", p(&path), "--mechanism", "posted-price"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("VIOLATION"));
    // enough slack turns the row back into a pass
    let out = bfclock(&["bench", p(&path), "--mechanism", "posted-price", "--tolerance", "1"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn bench_skips_rows_without_an_exact_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = bfclock(&["gen", "random-coverage", "--n", "24", "--out", p(dir.path())]);
    assert_eq!(code(&out), 0);
    let pattern = format!("{}/*.toml", p(dir.path()));
    let out = bfclock(&["bench", &pattern, "--mechanism", "iterative-pruning"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("skipped="));
    assert!(stdout(&out).contains("skipped: exhaustive search"));
}

#[test]
fn audit_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let src = fixture("random-coverage-n8-s1.toml");
    let inst_path = dir.path().join("cov.toml");
    fs::copy(&src, &inst_path).unwrap();
    assert_eq!(code(&bfclock(&["run", p(&inst_path), "--mechanism", "iterative-pruning"])), 0);
    let transcript = dir.path().join("cov.iterative-pruning.transcript.tsv");
    let outcome = dir.path().join("cov.iterative-pruning.outcome.json");

    // a rising price
    let text = fs::read_to_string(&transcript).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let idx = lines.iter().position(|l| !l.starts_with('#')).unwrap();
    let mut fields: Vec<String> = lines[idx].split('\t').map(String::from).collect();
    fields[2] = "2.0".into();
    lines[idx] = fields.join("\t");
    let tampered = dir.path().join("tampered.tsv");
    fs::write(&tampered, lines.join("\n") + "\n").unwrap();
    let out = bfclock(&["audit", p(&inst_path), p(&tampered), p(&outcome)]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("violation"));

    // an outcome from a different instance
    let other = fixture("random-coverage-n8-s2.toml");
    let out = bfclock(&["audit", p(&other), p(&transcript), p(&outcome)]);
    assert_ne!(code(&out), 0);

    let out = bfclock(&["audit", p(&inst_path), p(&inst_path), p(&outcome)]);
    assert_eq!(code(&out), 2);
}
