use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_limitcurve"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn tmp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("limitcurve-cli-{}-{name}", std::process::id()))
}

#[test]
fn ball_ssr_reports_fos() {
    let out = tmp("ball");
    let cfg = configs().join("ball.json");
    let o = run(&["ssr-trace", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(out.join("ball_report.json")).unwrap();
    assert!(report.contains("\"fos\": 1.66666666"), "{report}");
    assert!(out.join("ball_trace.csv").exists());
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn psd_classify_is_unsolvable() {
    let out = tmp("psd");
    let cfg = configs().join("psd.json");
    let o = run(&["classify", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"unsolvable\""));
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn missing_config_exits_with_code_two() {
    let out = tmp("missing");
    let o = run(&["ll-trace", "--config", "does_not_exist.json"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("ERROR 2: config not found"));
}

#[test]
fn subcommand_must_match_analysis() {
    let out = tmp("mismatch");
    let cfg = configs().join("ball.json");
    let o = run(&["ll-trace", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_output() {
    let cfg = configs().join("square_solve.json");
    let mut reports = Vec::new();
    for threads in ["1", "4"] {
        let out = tmp(&format!("threads{threads}"));
        let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--threads", threads], &out);
        assert_eq!(o.status.code(), Some(0));
        reports.push(std::fs::read(out.join("square_solution.csv")).unwrap());
        std::fs::remove_dir_all(out).unwrap();
    }
    assert_eq!(reports[0], reports[1]);
}
