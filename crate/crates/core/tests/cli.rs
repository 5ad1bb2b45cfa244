use std::path::PathBuf;

use valex::cli::{run, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};

fn model(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name);
    p.to_string_lossy().into_owned()
}

fn valex(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("valex").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn solve_conference() {
    let (code, out, _) = valex(&["solve", &model("conference.model")]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().filter(|l| l.starts_with("solution: ")).count(), 2);
    assert!(out.contains("solution: AM=2 MP=3 PM=1 MA=3\n"));
    assert!(out.contains("solution: AM=1 MP=3 PM=2 MA=3\n"));
    assert!(out.contains("branch PM=3: FAILURE"));
    assert!(out.ends_with("branches: 3, failures: 1\n"));
}

#[test]
fn solve_without_labeling_prints_reduced_domains() {
    let (code, out, _) = valex(&["solve", &model("chain.model")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("reduced: X∈{1} Y∈{2}\n"));
}

#[test]
fn all_branches_failing_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.model");
    std::fs::write(
        &p,
        "var X in 1..2\nvar Y in 1..2\nconstraint X < Y\nconstraint Y < X\nlabel X\n",
    )
    .unwrap();
    let (code, out, _) = valex(&["solve", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_FAILURE, "{out}");
    assert!(out.contains("failures: 2"));
}

#[test]
fn explain_mp2() {
    let (code, out, _) = valex(&["explain", &model("conference.model"), "--var", "MP", "--value", "2"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("context: {PM=1,PM=2,PM=3}\n"));
    assert!(out.trim_end().ends_with("{PM=1,PM=2,PM=3} |- (MP,2)"));
    // four restriction facts: two under PM=1, one each under PM=2 and PM=3
    assert_eq!(out.matches("[PM=1]").count(), 2);
    assert_eq!(out.matches("[PM=2]").count(), 1);
    assert_eq!(out.matches("[PM=3]").count(), 1);
    assert!(out.contains("[MERGE]"));
}

#[test]
fn explain_surviving_element() {
    let (code, out, _) = valex(&["explain", &model("chain.model"), "--var", "X", "--value", "1"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, "not removed in any branch\n");
}

#[test]
fn explain_bad_element_is_usage_error() {
    let (code, _, err) = valex(&["explain", &model("conference.model"), "--var", "MP", "--value", "7"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.starts_with("error: "));
    let (code, _, _) = valex(&["explain", &model("conference.model"), "--var", "ZZ", "--value", "1"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn failure_branch() {
    let (code, out, _) = valex(&["failure", &model("conference.model"), "--branch", "PM=3"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("failure at PM=3: AM is empty\n"));
    for v in 1..=3 {
        assert!(out.contains(&format!("{{PM=3}} |- (AM,{v})")));
    }
    let (code, _, err) = valex(&["failure", &model("conference.model"), "--branch", "PM=1"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("not a failure"));
}

#[test]
fn retract_chain() {
    let (code, out, _) = valex(&["retract", &model("chain.model"), "--constraint", "c2"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("reintroduced: (X,2) (Y,3)\n"));
    assert!(out.contains("after: X∈{1,2} Y∈{2,3}\n"));
    assert!(out.ends_with("verified: yes\n"));
    let (code, _, _) = valex(&["retract", &model("chain.model"), "--constraint", "c7"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("conf.json");
    let (code, out, _) = valex(&["export", &model("conference.model"), "-o", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{out}");
    let text = std::fs::read_to_string(&p).unwrap();
    let b = valex::Bundle::from_json(&text).unwrap();
    assert_eq!(b.to_json(), text);
    assert_eq!(b.solutions.len(), 2);
    let mp2 = b.proof_tree("MP", 2).unwrap();
    assert_eq!(mp2.judgment.context, ["PM=1", "PM=2", "PM=3"]);
    assert!(b.session.is_none());
}

#[test]
fn export_with_session() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("conf.json");
    let p = p.to_str().unwrap();
    let m = model("conference.model");
    let args = [
        "export",
        &m,
        "-o",
        p,
        "--session-var",
        "MP",
        "--session-value",
        "2",
        "--answer",
        "0=INCORRECT",
        "--answer",
        "5=incorrect",
        "--answer",
        "6=CORRECT",
    ];
    let (code, _, err) = valex(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    let b = valex::Bundle::from_json(&std::fs::read_to_string(p).unwrap()).unwrap();
    let t = b.session.unwrap();
    assert_eq!(t.conclusion.kind, "CONSTRAINT");
    assert_eq!(t.conclusion.constraint.as_deref(), Some("c4"));

    let (code, _, _) = valex(&["export", &m, "-o", p, "--answer", "0=CORRECT"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn diagnose_against_intended_model() {
    let (code, out, err) = valex(&[
        "diagnose",
        &model("conference_bug.model"),
        "--var",
        "MP",
        "--value",
        "3",
        "--intended",
        &model("conference.model"),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("#0 {PM=2,PM=3} |- (MP,3) : INCORRECT\n"), "{out}");
    assert!(
        out.ends_with("blame constraint c4 (MP > PM + 1) via c4/MP at {PM=2} |- (MP,3)\n"),
        "{out}"
    );

    let (_, out, _) = valex(&[
        "diagnose",
        &model("conference_bug.model"),
        "--var",
        "MP",
        "--value",
        "2",
        "--intended",
        &model("conference.model"),
    ]);
    assert!(out.ends_with("no blame: symptom not confirmed\n"));
}

#[test]
fn diagnose_with_answers() {
    let m = model("conference.model");
    let base = ["diagnose", &m, "--var", "MP", "--value", "2"];
    let (code, out, _) = valex(&[&base[..], &["--answer", "0=INCORRECT"]].concat());
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("pending; next query #1"), "{out}");
    let (code, _, err) = valex(&[&base[..], &["--answer", "3=CORRECT"]].concat());
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("error: "));
    let (code, _, _) = valex(&[&base[..], &["--answer", "0=MAYBE"]].concat());
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = valex(&base);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn check_verb() {
    let (code, out, _) = valex(&["check", &model("conference.model")]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 7);
    assert!(out.lines().all(|l| l.starts_with("ok ")), "{out}");
}

#[test]
fn usage_errors() {
    let (code, _, err) = valex(&["frobnicate"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("Usage"));
    let (code, _, _) = valex(&["solve", &model("conference.model"), "--bogus"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, err) = valex(&["solve", "/nonexistent/x.model"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("cannot read"));
    let (code, out, _) = valex(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("explain"));
}

#[test]
fn parse_errors_carry_position() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.model");
    std::fs::write(&p, "var X in 1..3\nvar Y in 1..3\nconstraint X ? Y\n").unwrap();
    let (code, _, err) = valex(&["solve", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("3:14"), "{err}");
}
