use std::path::Path;
use std::process::{Command, Output};

fn embedcheck(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_embedcheck"))
        .args(args)
        .env("EMBEDCHECK_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn write_space(dir: &Path) -> String {
    let path = dir.join("space.json");
    std::fs::write(
        &path,
        r#"{"dim":2,"measures":[{"id":"m","kind":"lebesgue"},
            {"id":"h","kind":"hyperplane-weight","params":{"theta":0.5,"axis":0}}],
            "e":{"points":[[0,0],[0,0.5]]}}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn same_argv_gives_identical_bytes_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let space = write_space(dir.path());
    let args = [
        "--format", "csv", "theta", "scan", "--space", &space, "--mu", "m", "--nu", "h", "--p", "1", "--q", "1.5",
        "--radii", "0.2:0.002:6",
    ];
    let a = embedcheck(&args, "1");
    let b = embedcheck(&args, "4");
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.starts_with(b"# config: "));
}

#[test]
fn out_file_carries_the_same_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let args = ["scenario", "run", "lipschitz-trace", "--n", "3", "--p", "2"];
    let stdout = embedcheck(&args, "2");
    assert!(stdout.status.success());
    let mut with_out = vec!["--out", out.to_str().unwrap()];
    with_out.extend(args);
    assert!(embedcheck(&with_out, "2").status.success());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let w: serde_json::Value = serde_json::from_slice(&stdout.stdout).unwrap();
    // config echoes --out, so only the results must agree
    assert_eq!(v["result"], w["result"]);
    assert_eq!(v["result"]["quantities"]["q_star"], 4.0);
}

#[test]
fn exit_codes() {
    assert_eq!(embedcheck(&["--help"], "1").status.code(), Some(0));
    assert_eq!(embedcheck(&["theta", "scan"], "1").status.code(), Some(1));
    assert_eq!(embedcheck(&["scenario", "run", "no-such-scenario"], "1").status.code(), Some(1));
    let bad = embedcheck(&["scenario", "run", "lipschitz-trace", "--n", "2", "--p", "2"], "1");
    assert_eq!(bad.status.code(), Some(1));
    assert!(!bad.stderr.is_empty());
}
