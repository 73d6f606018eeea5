use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn powsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_powsat")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden_scripts() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(golden_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "smt"))
        .collect();
    files.sort();
    files
}

#[test]
fn golden_outputs_and_exit_codes() {
    let scripts = golden_scripts();
    assert!(scripts.len() >= 10);
    for script in scripts {
        let path = script.to_str().unwrap();
        let out = powsat(&["solve", path]);
        let mut got = stdout(&out);
        got.push_str(&String::from_utf8_lossy(&out.stderr).replace(&format!("{path}:"), "FILE:"));
        got.push_str(&format!("exit {}\n", code(&out)));
        let expected = std::fs::read_to_string(script.with_extension("expected")).unwrap();
        assert_eq!(got, expected, "{}", script.display());
    }
}

#[test]
fn certificates_from_solve_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let mut checked = 0;
    for script in golden_scripts() {
        let path = script.to_str().unwrap();
        let cert = dir.path().join("cert");
        let out = powsat(&["solve", path, "--emit-certificate", cert.to_str().unwrap()]);
        if code(&out) != 0 {
            continue;
        }
        let check = powsat(&["check-cert", path, cert.to_str().unwrap()]);
        assert_eq!(stdout(&check), "accept\n", "{}", script.display());
        assert_eq!(code(&check), 0);
        std::fs::remove_file(&cert).unwrap();
        checked += 1;
    }
    assert!(checked >= 5);
}

#[test]
fn certificate_on_stdout_and_tampering() {
    let script = golden_dir().join("qfbapa_sat.smt");
    let out = powsat(&["solve", script.to_str().unwrap(), "--emit-certificate", "-"]);
    let text = stdout(&out);
    let cert = &text[text.find("(certificate").expect("certificate printed")..];
    assert!(cert.starts_with("(certificate QFBAPA"));
    let dir = tempfile::tempdir().unwrap();
    let forged = dir.path().join("forged");
    std::fs::write(&forged, cert.replace("(universe 5)", "(universe 4)")).unwrap();
    let check = powsat(&["check-cert", script.to_str().unwrap(), forged.to_str().unwrap()]);
    assert_eq!(code(&check), 1);
    assert!(stdout(&check).starts_with("reject"));
    std::fs::write(&forged, "(certificate QFBAPA (universe").unwrap();
    assert_eq!(code(&powsat(&["check-cert", script.to_str().unwrap(), forged.to_str().unwrap()])), 3);
}

#[test]
fn translation_is_a_runnable_script() {
    let dir = tempfile::tempdir().unwrap();
    for (name, verdict) in [("cal_sat.smt", 0), ("cal_unsat.smt", 1)] {
        let out = powsat(&["translate", "--from", "cal", golden_dir().join(name).to_str().unwrap()]);
        assert_eq!(code(&out), 0);
        let text = stdout(&out);
        assert!(text.starts_with("(set-logic QFBAPAI)"));
        let translated = dir.path().join(name);
        std::fs::write(&translated, text).unwrap();
        assert_eq!(code(&powsat(&["solve", translated.to_str().unwrap()])), verdict, "{name}");
    }
    let other = golden_dir().join("qfbapa_sat.smt");
    assert_eq!(code(&powsat(&["translate", "--from", "qfbapa", other.to_str().unwrap()])), 3);
}

#[test]
fn oracle_agrees_with_solver_on_golden_scripts() {
    for script in golden_scripts() {
        let path = script.to_str().unwrap();
        let solved = code(&powsat(&["solve", path]));
        let oracle = code(&powsat(&["oracle", path]));
        let name = script.file_name().unwrap().to_str().unwrap();
        match name {
            "power_unbounded.smt" => assert_eq!(oracle, 2),
            _ => assert_eq!(oracle, solved, "{name}"),
        }
    }
}

#[test]
fn capacity_override_limits_enumeration() {
    let script = golden_dir().join("qfbapai_sat.smt");
    let out = Command::new(env!("CARGO_BIN_EXE_powsat"))
        .args(["oracle", script.to_str().unwrap()])
        .env("POWSAT_CAPACITY", "3")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "{}", stdout(&out));
}

#[test]
fn timeout_flag_accepted() {
    let script = golden_dir().join("power_sat.smt");
    let out = powsat(&["solve", script.to_str().unwrap(), "--timeout-ms", "60000"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn fuzz_is_deterministic_and_clean() {
    let dir = tempfile::tempdir().unwrap();
    let repro = dir.path().to_str().unwrap();
    let run = || powsat(&["fuzz", "--logic", "power", "--count", "200", "--seed", "42", "--repro-dir", repro]);
    let (a, b) = (run(), run());
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("disagree 0"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn injected_bug_writes_repro_files() {
    let dir = tempfile::tempdir().unwrap();
    let repro = dir.path().join("repro");
    let out = powsat(&[
        "fuzz",
        "--logic",
        "qfbapa",
        "--count",
        "20",
        "--seed",
        "7",
        "--inject-bug",
        "--repro-dir",
        repro.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let files: Vec<_> = std::fs::read_dir(&repro).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!files.is_empty());
    for f in files {
        // Reproductions are scripts the solver accepts as-is.
        let c = code(&powsat(&["solve", f.to_str().unwrap()]));
        assert!(c == 0 || c == 1, "{}", f.display());
    }
}

#[test]
fn usage_errors_exit_3() {
    assert_eq!(code(&powsat(&["solve"])), 3);
    assert_eq!(code(&powsat(&["solve", "/nonexistent/script.smt"])), 3);
    assert_eq!(code(&powsat(&["fuzz", "--logic", "arrays", "--count", "1", "--seed", "0"])), 3);
    assert_eq!(code(&powsat(&["frobnicate"])), 3);
}
