//! Golden reports for the fixture systems plus certificate round trips.
//! Set GALINT_BLESS=1 to rewrite the expected files.

use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use galint::cli::{run, Command, RunOptions, RunReport};

fn dir(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(sub)
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(dir("fixtures").join(format!("{name}.gal"))).unwrap()
}

fn opts(params: &[(&str, f64)]) -> RunOptions {
    RunOptions { params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(), ..Default::default() }
}

fn golden(name: &str, cmd: Command, o: &RunOptions) -> RunReport {
    let tag = match &cmd {
        Command::Analyze => "analyze",
        Command::Integrate => "integrate",
        Command::Linearize => "linearize",
        Command::Verify(_) => "verify",
    };
    let rep = run(&cmd, &fixture(name), o).report;
    let json = rep.to_json();
    let path = dir("golden").join(format!("{name}.{tag}.json"));
    if std::env::var_os("GALINT_BLESS").is_some() {
        std::fs::create_dir_all(dir("golden")).unwrap();
        std::fs::write(&path, &json).unwrap();
    } else {
        let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}; run with GALINT_BLESS=1", path.display()));
        assert!(json == want, "{} differs from the golden file", path.display());
    }
    rep
}

fn verify_json(name: &str, cert: &str) -> RunReport {
    run(&Command::Verify(cert.to_string()), &fixture(name), &RunOptions::default()).report
}

fn failed(rep: &RunReport) -> Vec<&str> {
    rep.verification.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
}

#[test]
fn circle() {
    let a = golden("circle", Command::Analyze, &opts(&[]));
    let f = a.fuchsian.as_ref().unwrap();
    assert!(f.fuchsian);
    assert!(f.places.iter().any(|p| p.place == "s = 1" && p.ramification == 2));
    let sys = a.system.as_ref().unwrap();
    let pf = galint::cli::ProblemFile::parse(&fixture("circle")).unwrap();
    let q = galint::cli::report::q_env(1, 8, pf.tower.clone(), &[]);
    assert_eq!(sys.reduced[0], q.eval_str("-q1*s/w").unwrap().to_string());
    assert_eq!(sys.s_eq, q.eval_str("-q1 - w").unwrap().to_string());
    let i = golden("circle", Command::Integrate, &opts(&[]));
    assert_eq!(i.exit_code, 0);
    let v = verify_json("circle", &i.to_json());
    assert_eq!((v.exit_code, failed(&v).len()), (0, 0), "{}", v.verdict);
}

#[test]
fn section_32() {
    let a = golden("section32", Command::Analyze, &opts(&[("alpha", 0.37)]));
    assert_eq!(a.exit_code, 0);
    assert_eq!(a.resonance.as_ref().unwrap().rank, 0);
    assert_eq!(a.exceptional_parameters, vec!["alpha = -1", "alpha = -1/3"]);
    assert!(a.diophantine.is_some());
    assert!(a.flow.is_none(), "analyze reports no flow");
    let i = golden("section32", Command::Integrate, &opts(&[]));
    let c = i.certificate.as_ref().unwrap();
    assert_eq!((c.l, c.integrals.len()), (2, 0));
    let v = verify_json("section32", &i.to_json());
    assert_eq!(v.exit_code, 0, "{}", v.verdict);
    let l = golden("section32", Command::Linearize, &opts(&[]));
    assert_eq!(l.exit_code, 0);
}

#[test]
fn section_one() {
    let a = golden("section1", Command::Analyze, &opts(&[]));
    assert_eq!(a.resonance.as_ref().unwrap().basis[0].k, vec![1, 1]);
    let i = golden("section1", Command::Integrate, &opts(&[]));
    assert_eq!(i.exit_code, 1);
    let o = i.obstruction.as_ref().unwrap();
    assert_eq!((o.order, o.component, o.h_exponent.clone()), (3, 1, vec![1, 1]));
    assert!(o.rechecked);
    let l = golden("section1", Command::Linearize, &opts(&[]));
    assert_eq!((l.exit_code, l.obstruction.as_ref().unwrap().order), (1, 3));
}

#[test]
fn example_one() {
    let a = golden("example1", Command::Analyze, &opts(&[]));
    let f = a.fuchsian.as_ref().unwrap();
    let ramified: Vec<&str> = f.places.iter().filter(|p| p.ramification == 2).map(|p| p.place.as_str()).collect();
    assert_eq!(ramified.len(), 2, "s = +-i are the ramified places");
    assert_eq!(a.resonance.as_ref().unwrap().rank, 1);
    let i = golden("example1", Command::Integrate, &opts(&[]));
    assert_eq!(i.descent.as_deref(), Some("needs-covering(2)"));
    assert_eq!(i.exit_code, 0);
    let v = verify_json("example1", &i.to_json());
    assert_eq!(v.exit_code, 0, "{}", v.verdict);
}

#[test]
fn example_two_and_corruption() {
    let i = golden("example2", Command::Integrate, &opts(&[]));
    assert_eq!(i.descent.as_deref(), Some("base-field"));
    assert!(i.verification.iter().any(|c| c.name.starts_with("Galois fixed") && c.passed));
    let text = i.to_json();
    let v = verify_json("example2", &text);
    assert_eq!(v.exit_code, 0, "{}", v.verdict);

    // one coefficient of Y1 changed: the bracket with X and Y1 F1 break
    let bad = text.replacen("(-1/2)*q1^2*q2", "(-1/3)*q1^2*q2", 1);
    assert_ne!(bad, text);
    let v = verify_json("example2", &bad);
    assert_eq!(v.exit_code, 1);
    let f = failed(&v);
    assert!(f.contains(&"[Y1, Y2] = 0") && f.contains(&"Y1 F1 = 0"), "{f:?}");
    assert!(!f.contains(&"X is the last field"));
}

#[test]
fn example_three() {
    let i = golden("example3", Command::Integrate, &opts(&[]));
    let c = i.certificate.as_ref().unwrap();
    assert_eq!((c.fields.len(), c.integrals.len(), c.descent.as_str()), (3, 2, "base-field"));
    assert_eq!(i.exit_code, 0);
    let paper = std::fs::read_to_string(dir("fixtures").join("example3_paper.json")).unwrap();
    let v = verify_json("example3", &paper);
    assert_eq!(v.exit_code, 0, "{}", v.verdict);
    assert!(v.verification.iter().filter_map(|c| c.order).all(|o| o >= 4));
}

#[test]
fn non_fuchsian() {
    let a = golden("nonfuchsian", Command::Analyze, &opts(&[]));
    assert_eq!(a.exit_code, 2);
    assert!(!a.fuchsian.as_ref().unwrap().fuchsian);
    assert!(a.verdict.starts_with("cannot certify"));
}

#[test]
fn reports_are_deterministic() {
    let a = run(&Command::Integrate, &fixture("example1"), &RunOptions::default()).report.to_json();
    let b = run(&Command::Integrate, &fixture("example1"), &RunOptions::default()).report.to_json();
    assert_eq!(a, b);
}

#[test]
fn input_errors() {
    let r = run(&Command::Analyze, "[system]\ncoordinates = x, s\nx' = x*\ns' = 1\n", &RunOptions::default()).report;
    assert_eq!(r.exit_code, 3);
    assert!(r.verdict.contains("line 3"), "{}", r.verdict);
    assert_eq!(r.stages[0].stage, "parse");

    let r = run(&Command::Analyze, "[system]\ncoordinates = x, s\nx' = x + s\ns' = 1\n", &RunOptions::default()).report;
    assert_eq!(r.exit_code, 3, "not tangent: {}", r.verdict);
    assert_eq!(r.stages.last().unwrap().stage, "reduce");

    let r = run(&Command::Integrate, "[system]\ncoordinates = x, y, s\nx' = y/s\ny' = x/s\ns' = 1\n", &RunOptions::default()).report;
    assert_eq!(r.exit_code, 3);
    assert!(r.verdict.contains("gauge required"), "{}", r.verdict);

    let v = verify_json("example2", "{\"schema_version\": 7}");
    assert_eq!(v.exit_code, 3);
    assert!(v.verdict.contains("schema mismatch"));
    let i = run(&Command::Integrate, &fixture("example2"), &RunOptions::default()).report;
    let other = i.to_json().replace("\"schema_version\": 1,\n    \"n\"", "\"schema_version\": 2,\n    \"n\"");
    let v = verify_json("example2", &other);
    assert_eq!(v.exit_code, 3, "{}", v.verdict);
    let v = verify_json("example1", &i.to_json());
    assert_eq!(v.exit_code, 1, "a certificate for another system fails: {}", v.verdict);
}

#[test]
fn binary_writes_json_and_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_galint");
    let out = std::env::temp_dir().join(format!("galint-{}.json", std::process::id()));
    let st = Proc::new(exe)
        .args(["analyze", dir("fixtures").join("section32.gal").to_str().unwrap(), "--param", "alpha=0.37", "--json"])
        .arg(&out)
        .args(["--timing", "-q"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    let rep: RunReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rep.options.params.get("alpha"), Some(&0.37));
    assert!(rep.timing_ms.is_some());
    std::fs::remove_file(&out).ok();

    let st = Proc::new(exe).args(["integrate", dir("fixtures").join("section1.gal").to_str().unwrap(), "-q"]).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    let st = Proc::new(exe).args(["analyze", "/nonexistent/problem.gal"]).output().unwrap();
    assert_eq!(st.status.code(), Some(3));
}
