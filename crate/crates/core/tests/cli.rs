mod common;

use std::process::{Command, Output};

use blm::audit::AuditLog;
use common::{fixture, read_fixture};

fn blm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blm")).current_dir(fixture("")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn eval_xml_matches_golden_per_service() {
    for svc in ["billing", "transact"] {
        let o = blm(&["eval", &format!("{svc}.blm"), "--contract", "epay.ctr", "--format", "xml"]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o), read_fixture(&format!("golden/{svc}.blps.xml")));
    }
}

#[test]
fn blps_option_writes_the_document() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.xml");
    let o = blm(&["eval", "billing.blm", "--contract", "epay.ctr", "--blps", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(out).unwrap(), read_fixture("golden/billing.blps.xml"));
}

#[test]
fn text_report_lists_sets_in_property_order() {
    let o = blm(&["eval", "billing.blm", "--contract", "epay.ctr"]);
    let text = stdout(&o);
    assert!(text.contains("CF=BF1,BFf1,BFr1,BFr2,DR1,CRr1\n"), "{text}");
    assert!(text.contains("AF=BFf1,CRr1\n"), "{text}");
    assert!(text.contains("NAF=BF1,BFr1,BFr2,DR1\n"), "{text}");
}

#[test]
fn non_computable_selection_exits_one() {
    let o = blm(&["eval", "selfloop.blm"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("CF=\n"));
}

#[test]
fn empty_service_is_fine() {
    let o = blm(&["eval", "empty.blm"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn flow_reads_blps_input() {
    let o = blm(&["flow", "--abstract", "golden/billing.blps.xml"]);
    assert_eq!(stdout(&o), read_fixture("golden/billing.abstract.flow"));
}

#[test]
fn error_categories_and_codes() {
    let missing = blm(&["eval", "nope.blm"]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(stderr(&missing).starts_with("error: io: "));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.blm");
    std::fs::write(&bad, "service s {\n  BF1: frobnicate x\n}\n").unwrap();
    let parse = blm(&["parse", bad.to_str().unwrap()]);
    assert_eq!(parse.status.code(), Some(2));
    assert!(stderr(&parse).starts_with("error: parse: "), "{}", stderr(&parse));
    assert!(stderr(&parse).contains(":2:"), "{}", stderr(&parse));

    let usage = blm(&["integrate", "billing.blm", "transact.blm", "--bind", "oops", "--name", "x"]);
    assert_eq!(usage.status.code(), Some(4));
    let no_args = blm(&["eval"]);
    assert_eq!(no_args.status.code(), Some(4));
    assert!(stderr(&no_args).starts_with("error: usage: "));

    let arity = blm(&[
        "integrate",
        "billing.blm",
        "transact.blm",
        "--bind",
        "billing.BFf1->transact(amount)",
        "--contract",
        "epay.ctr",
        "--name",
        "x",
    ]);
    assert_eq!(arity.status.code(), Some(1));
    assert!(stderr(&arity).starts_with("error: integration: "));
}

#[test]
fn integrate_prints_qualified_sets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.xml");
    let o = blm(&[
        "integrate",
        "billing.blm",
        "transact.blm",
        "--bind",
        "billing.BFf1->transact(accno, amount, accno1)",
        "--contract",
        "epay.ctr",
        "--name",
        "e-billing",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("integrated e-billing\n"));
    assert!(text.contains("total_cost=14\n"));
    assert_eq!(std::fs::read_to_string(out).unwrap(), read_fixture("golden/e-billing.blps.xml"));
}

#[test]
fn audit_log_records_each_invocation() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("audit.log");
    let log_arg = log.to_str().unwrap();
    blm(&["--audit", log_arg, "--actor", "ops", "eval", "billing.blm"]);
    blm(&["--audit", log_arg, "diff", "transact.blm", "transact-no-drr2.blm"]);
    blm(&["--audit", log_arg, "eval", "missing.blm"]);
    let records = AuditLog::new(&log).read_all().unwrap();
    assert_eq!(records.len(), 3);
    assert_eq!(records[0].actor, "ops");
    assert_eq!(records[0].operation, "eval");
    assert_eq!(records[0].digest.len(), 64);
    assert_eq!(records[1].summary, "exit 1");
    assert_eq!(records[2].digest, "-");
    assert!(records.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
}
