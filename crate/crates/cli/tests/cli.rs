//! End-to-end runs of the `lrdpda` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lrdpda::fixtures;
use tempfile::TempDir;

const VOCAB: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/paren_vocab.txt");

fn lrdpda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrdpda"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes the paren grammar and compiles it with default options.
fn paren(dir: &TempDir) -> PathBuf {
    let grammar = dir.path().join("paren.bnf");
    std::fs::write(&grammar, fixtures::PAREN).unwrap();
    let out = lrdpda(&["compile", s(&grammar)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    dir.path().join("paren.dpda")
}

#[test]
fn compile_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let first = std::fs::read(paren(&dir)).unwrap();
    let other = dir.path().join("again.dpda");
    let out = lrdpda(&["compile", s(&dir.path().join("paren.bnf")), "-o", s(&other)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("states"));
    assert_eq!(std::fs::read(other).unwrap(), first);
}

#[test]
fn ambiguous_grammar_exits_2() {
    let dir = TempDir::new().unwrap();
    let grammar = dir.path().join("amb.bnf");
    std::fs::write(&grammar, fixtures::AMBIGUOUS).unwrap();
    let out = lrdpda(&["compile", s(&grammar)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("NotLR1Conflict"), "{}", stderr(&out));
    assert!(!dir.path().join("amb.dpda").exists());
}

#[test]
fn missing_and_malformed_grammars_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = lrdpda(&["compile", s(&dir.path().join("nope.bnf"))]);
    assert_eq!(out.status.code(), Some(2));
    let bad = dir.path().join("bad.bnf");
    std::fs::write(&bad, "S -> \"a").unwrap();
    assert_eq!(lrdpda(&["compile", s(&bad)]).status.code(), Some(2));
}

#[test]
fn check_reports_verdict_and_offset() {
    let dir = TempDir::new().unwrap();
    let a = paren(&dir);
    let ok = lrdpda(&["check", s(&a), "(a)"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok).trim(), "accepted");
    let bad = lrdpda(&["check", s(&a), "a)"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("offset 1"), "{}", stdout(&bad));
    // A proper prefix is rejected at its end.
    let short = lrdpda(&["check", s(&a), "(("]);
    assert_eq!(short.status.code(), Some(1));
    assert!(stdout(&short).contains("offset 2"));
}

#[test]
fn damaged_automaton_exits_4() {
    let dir = TempDir::new().unwrap();
    let a = paren(&dir);
    let bytes = std::fs::read(&a).unwrap();
    let cut = dir.path().join("cut.dpda");
    std::fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(lrdpda(&["check", s(&cut), "a"]).status.code(), Some(4));
    let mut flipped = bytes.clone();
    flipped[0] ^= 0xff;
    std::fs::write(&cut, &flipped).unwrap();
    assert_eq!(lrdpda(&["check", s(&cut), "a"]).status.code(), Some(4));
    assert_eq!(
        lrdpda(&["mask", s(&dir.path().join("none")), VOCAB])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn mask_prints_hex() {
    let dir = TempDir::new().unwrap();
    let a = paren(&dir);
    // Tokens: a ( ) (a a) (( aa, then end of sequence as the top bit.
    let empty = lrdpda(&["mask", s(&a), VOCAB]);
    assert_eq!(empty.status.code(), Some(0), "{}", stderr(&empty));
    assert_eq!(stdout(&empty).trim(), "2b");
    let after_a = lrdpda(&["mask", s(&a), VOCAB, "a"]);
    assert_eq!(stdout(&after_a).trim(), "80");
    let dead = lrdpda(&["mask", s(&a), VOCAB, ")"]);
    assert_eq!(dead.status.code(), Some(1));
    assert!(stdout(&dead).contains("offset 0"));
}

#[test]
fn bad_vocabulary_exits_4() {
    let dir = TempDir::new().unwrap();
    let a = paren(&dir);
    let v = dir.path().join("v.json");
    std::fs::write(&v, r#"["a", "a"]"#).unwrap();
    assert_eq!(lrdpda(&["mask", s(&a), s(&v)]).status.code(), Some(4));
    std::fs::write(&v, r#"["a""#).unwrap();
    assert_eq!(lrdpda(&["mask", s(&a), s(&v)]).status.code(), Some(4));
}

#[test]
fn bench_runs_and_rejects_zero_batch() {
    let dir = TempDir::new().unwrap();
    let a = paren(&dir);
    let out = lrdpda(&[
        "bench",
        s(&a),
        VOCAB,
        "--batch",
        "1",
        "--batch",
        "4",
        "--steps",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).lines().count() >= 3);
    let zero = lrdpda(&["bench", s(&a), VOCAB, "--batch", "0"]);
    assert_eq!(zero.status.code(), Some(64));
}

#[test]
fn export_dot_writes_graph() {
    let dir = TempDir::new().unwrap();
    let a = paren(&dir);
    let dot = dir.path().join("paren.dot");
    let out = lrdpda(&["export-dot", s(&a), s(&dot)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dot).unwrap();
    assert!(text.starts_with("digraph"));
    assert!(text.contains("->"));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(lrdpda(&[]).status.code(), Some(64));
    assert_eq!(lrdpda(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(lrdpda(&["check"]).status.code(), Some(64));
    assert_eq!(lrdpda(&["--help"]).status.code(), Some(0));
}
