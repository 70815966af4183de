use std::path::Path;
use std::process::{Command, Output};

fn rrl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rrl")).current_dir(dir).args(args).output().expect("spawn rrl")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn key<'a>(report: &'a str, k: &str) -> Option<&'a str> {
    report.lines().find_map(|l| l.strip_prefix(k)?.strip_prefix(" = "))
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tri.fam"), "fam 3 2\nbuiltin clique:1\n").unwrap();
    dir
}

#[test]
fn gen_is_deterministic_and_parses() {
    let dir = setup();
    let a = rrl(dir.path(), &["gen", "--r", "3", "--k", "2", "--n", "5", "--seed", "9"]);
    let b = rrl(dir.path(), &["gen", "--r", "3", "--k", "2", "--n", "5", "--seed", "9"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("cph 3 2\n"));
    let c = rrl(dir.path(), &["gen", "--kind", "constant", "--r", "3", "--k", "2", "--n", "2", "--colors", "0 1", "--out", "full.cph"]);
    assert!(c.status.success());
    let far = rrl(dir.path(), &["far", "--input", "full.cph", "--property", "tri.fam", "--method", "exact"]);
    // K(2,2,2): 8 triangles, every edge in 2 of them
    assert_eq!(key(&stdout(&far), "far.lower_bound"), Some("4"));
}

#[test]
fn tester_exit_codes_and_witness() {
    let dir = setup();
    rrl(dir.path(), &["gen", "--kind", "constant", "--r", "3", "--k", "2", "--n", "4", "--colors", "0 1", "--out", "full.cph"]);
    rrl(dir.path(), &["gen", "--kind", "constant", "--r", "3", "--k", "2", "--n", "4", "--colors", "0 0", "--out", "empty.cph"]);
    let rej = rrl(dir.path(), &["test", "--input", "full.cph", "--property", "tri.fam", "--c", "0.5", "--witness", "w.cph"]);
    assert_eq!(rej.status.code(), Some(1));
    assert_eq!(key(&stdout(&rej), "tester.round"), Some("0"));
    let w = std::fs::read_to_string(dir.path().join("w.cph")).unwrap();
    assert!(w.starts_with("cph 3 2\nparts 1 1 1\n"));
    let acc = rrl(dir.path(), &["test", "--input", "empty.cph", "--property", "tri.fam", "--c", "0.1", "--h0", "2"]);
    assert_eq!(acc.status.code(), Some(0));
    assert_eq!(key(&stdout(&acc), "tester.rounds"), Some("30"));
    assert_eq!(key(&stdout(&acc), "tester.verdict"), Some("accept"));
}

#[test]
fn usage_and_budget_codes() {
    let dir = setup();
    assert_eq!(rrl(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(rrl(dir.path(), &["test", "--input", "missing.cph", "--property", "tri.fam", "--c", "0.1"]).status.code(), Some(2));
    rrl(dir.path(), &["gen", "--r", "3", "--k", "2", "--n", "6", "--out", "g.cph"]);
    let far = rrl(dir.path(), &["far", "--input", "g.cph", "--property", "tri.fam", "--method", "exact", "--budget", "10"]);
    assert_eq!(far.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&far.stderr).contains("exceeds budget"));
}

#[test]
fn density_regularize_and_regularity() {
    let dir = setup();
    rrl(dir.path(), &["gen", "--r", "3", "--k", "2", "--n", "4", "--seed", "3", "--out", "g.cph"]);
    let d = rrl(dir.path(), &["density", "--input", "g.cph", "--index", "1", "--target", "0"]);
    assert_eq!(key(&stdout(&d), "density"), Some("1/1"));
    std::fs::write(dir.path().join("m.txt"), "0 0\n1 1\n2 2\n").unwrap();
    let r = rrl(dir.path(), &["regularize", "--input", "g.cph", "--s", "1", "--map", "m.txt", "--out", "h.cph"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let fit = rrl(dir.path(), &["reg-fit", "--input", "h.cph", "--out", "d.txt"]);
    assert!(fit.status.success());
    let eps = key(&stdout(&fit), "regularity.epsilon_fit").unwrap().to_string();
    let ok = rrl(dir.path(), &["reg-verify", "--input", "h.cph", "--delta", "d.txt", "--epsilon", &eps]);
    assert_eq!(ok.status.code(), Some(0));
    let strict = rrl(dir.path(), &["reg-verify", "--input", "h.cph", "--epsilon", "0"]);
    assert_eq!(strict.status.code(), Some(if eps == "0" { 0 } else { 1 }));
}

#[test]
fn edit_and_run_reports() {
    let dir = setup();
    rrl(dir.path(), &["gen", "--kind", "constant", "--r", "3", "--k", "2", "--n", "3", "--colors", "0 0", "--out", "empty.cph"]);
    let e = rrl(dir.path(), &["edit", "--input", "empty.cph", "--family", "tri.fam", "--out", "e.cph"]);
    assert!(e.status.success());
    assert_eq!(key(&stdout(&e), "branch"), Some("edited"));
    assert_eq!(key(&stdout(&e), "changed"), Some("0/1"));
    let cfg = "[experiment]\nkind = count\nseed = 5\n[graph]\ninput = empty.cph\n[family]\nfile = tri.fam\n";
    std::fs::write(dir.path().join("exp.cfg"), cfg).unwrap();
    let a = rrl(dir.path(), &["run", "exp.cfg"]);
    let b = rrl(dir.path(), &["run", "exp.cfg", "--report", "r.txt"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(stdout(&a), std::fs::read_to_string(dir.path().join("r.txt")).unwrap());
    assert_eq!(key(&stdout(&a), "member.0.exact"), Some("0"));
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = setup();
    rrl(dir.path(), &["gen", "--r", "3", "--k", "2", "--n", "8", "--seed", "1", "--out", "g.cph"]);
    let args = ["count", "--input", "g.cph", "--family", "tri.fam", "--mode", "sampled", "--samples", "5000", "--seed", "4"];
    let one = Command::new(env!("CARGO_BIN_EXE_rrl")).current_dir(dir.path()).env("RRL_THREADS", "1").args(args).output().unwrap();
    let many = rrl(dir.path(), &args);
    assert_eq!(one.stdout, many.stdout);
}
