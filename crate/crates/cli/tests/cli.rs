use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ffwb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffwb")).args(args).output().expect("spawn ffwb")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn aklt_verify_ff_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": {"kind": "fixture", "name": "aklt"}, "analysis": "verify-ff"}"#);
    let out = dir.path().join("out");
    let o = ffwb(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("verify-ff.csv")).unwrap();
    assert!(csv.starts_with("# generated by ffwb"));
    assert!(csv.lines().nth(1).unwrap() == "inner,outer,residual");
    let summary: serde_like::Summary = serde_like::parse(&fs::read_to_string(out.join("verify-ff.json")).unwrap());
    assert!(summary.ok);
}

#[test]
fn frustrated_fixture_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = ffwb(&["--fixture", "frustrated-random", "--analysis", "verify-ff", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAILED"));
}

#[test]
fn malformed_config_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{\n  \"model\": {\"kind\": \"fixture\", \"name\": \"aklt\"},\n  \"analysis\": \n}\n");
    let o = ffwb(&["--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4"), "{err}");
    assert!(err.contains("column"), "{err}");
}

#[test]
fn unknown_analysis_and_bad_jobs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(ffwb(&["--fixture", "aklt", "--analysis", "nope", "--out", d]).status.code(), Some(2));
    assert_eq!(ffwb(&["--fixture", "aklt", "--analysis", "trace", "--jobs", "0", "--out", d]).status.code(), Some(2));
    assert_eq!(ffwb(&["--fixture", "no-such-fixture", "--analysis", "trace", "--out", d]).status.code(), Some(2));
    assert_eq!(ffwb(&["--analysis", "trace"]).status.code(), Some(2));
}

#[test]
fn lists_fixtures() {
    let o = ffwb(&["--list-fixtures"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["aklt", "product", "two-product-meet", "frustrated-random", "vbs-chain", "vbs-square"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn help_lists_columns() {
    let o = ffwb(&["--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("window,epsilon,min,gap,corank"));
    assert!(text.contains("--no-timestamp"));
}

#[test]
fn output_is_deterministic_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, jobs: &str| {
        let out = dir.path().join(sub);
        let o = ffwb(&[
            "--fixture",
            "aklt",
            "--analysis",
            "spectra",
            "--no-timestamp",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read(out.join("spectra.csv")).unwrap(), fs::read(out.join("spectra.json")).unwrap())
    };
    let a = run("a", "1");
    let b = run("b", "4");
    assert_eq!(a, b);
    assert!(!String::from_utf8_lossy(&a.0).starts_with('#'));
}

/// Minimal reader for the `ok` field, so the test does not pull in a JSON crate.
mod serde_like {
    pub struct Summary {
        pub ok: bool,
    }

    pub fn parse(text: &str) -> Summary {
        let ok = text.lines().find(|l| l.trim_start().starts_with("\"ok\"")).expect("ok field");
        Summary { ok: ok.contains("true") }
    }
}
