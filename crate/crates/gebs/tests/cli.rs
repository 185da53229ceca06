use std::process::{Command, Output};

fn gebs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gebs"))
        .args(args)
        .env_remove("GEBS_THREADS")
        .output()
        .expect("binary runs")
}

#[test]
fn ar1_csv_to_stdout() {
    let out = gebs(&[
        "run",
        "--experiment",
        "ar1",
        "--sims",
        "5",
        "--boots",
        "20",
        "--seed",
        "3",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("method,mean_var_est,var_var_est,fallback_rate\n"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn output_file_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    let args = [
        "run",
        "--experiment",
        "ar1",
        "--sims",
        "4",
        "--boots",
        "15",
        "--methods",
        "wb:rademacher,gbs-uniform",
        "--scheme-args",
        "uniform:0.2,1.8",
        "--format",
        "json",
        "--out",
    ];
    let mut a = args.to_vec();
    a.push(first.to_str().unwrap());
    assert_eq!(gebs(&a).status.code(), Some(0));
    let out = gebs(&[
        "run",
        "--experiment",
        "ar1",
        "--format",
        "json",
        "--replay",
        first.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let a = std::fs::read(&first).unwrap();
    assert_eq!(a, std::fs::read(&second).unwrap());
    let report = gebs::report::from_json(std::str::from_utf8(&a).unwrap()).unwrap();
    assert_eq!(report.config.scheme_args, ["uniform:0.2,1.8"]);
}

#[test]
fn worker_cap_does_not_change_output() {
    let args = ["run", "--experiment", "glm", "--sims", "3", "--boots", "20"];
    let plain = gebs(&args).stdout;
    let capped = Command::new(env!("CARGO_BIN_EXE_gebs"))
        .args(args)
        .args(["--threads", "3"])
        .env("GEBS_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(0));
    assert_eq!(plain, capped.stdout);
}

#[test]
fn configuration_errors_exit_with_two() {
    for args in [
        vec!["run", "--experiment", "ar1", "--boots", "5"],
        vec!["run", "--experiment", "ar1", "--methods", "bogus"],
        vec!["run", "--experiment", "glm", "--methods", "rb"],
        vec!["run", "--experiment", "nls", "--n", "30"],
    ] {
        let out = gebs(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = Command::new(env!("CARGO_BIN_EXE_gebs"))
        .args(["run", "--experiment", "ar1", "--sims", "2", "--boots", "10"])
        .env("GEBS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn degenerate_runs_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nls.csv");
    let out = gebs(&[
        "run",
        "--experiment",
        "nls",
        "--boots",
        "100",
        "--methods",
        "gbs-multinomial",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("method,parameter,bin,lower,upper,mass,mode\n"));
    assert!(text.contains("[degenerate runs: 1]"));
}
