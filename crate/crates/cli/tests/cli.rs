use std::fs;
use std::process::{Command, Output};

fn nlbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlbench"))
        .args(args)
        .output()
        .expect("spawn nlbench")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_lists_config_keys() {
    let o = nlbench(&["run", "--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for key in [
        "grids",
        "taus",
        "kernel_params",
        "lq",
        "lr",
        "fft_slices",
        "reference_tau",
    ] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn missing_experiment_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    fs::write(&cfg, "").unwrap();
    let o = nlbench(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("experiment required"));
}

#[test]
fn bad_tau_is_rejected() {
    let o = nlbench(&["run", "--experiment", "exp1", "--set", "taus=0.3"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("taus"), "{}", stderr(&o));
}

#[test]
fn unknown_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "experiment = exp1\n# comment\nbogus = 3\n").unwrap();
    let o = nlbench(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("line 3") && err.contains("bogus"), "{err}");
}

#[test]
fn small_sweep_writes_csv_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.cfg");
    fs::write(
        &cfg,
        "experiment = exp1\ngrids = 20\ntaus = 0.1\nkernel_params = 0.1, 0.2\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = nlbench(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--methods",
        "ptw,rr",
        "--out",
        out.to_str().unwrap(),
        "--single-thread",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("exp1.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("experiment,method,n,tau,kernel_param"));
    assert!(lines[1].starts_with("exp1,ptw,20,0.1,0.1,"));
    let dat = fs::read_to_string(out.join("plots").join("exp1_n20_tau0p1.dat")).unwrap();
    assert_eq!(dat.lines().count(), 3);
    assert!(out.join("plots").join("exp1_runtimes.gp").exists());
}

#[test]
fn verify_passes() {
    let o = nlbench(&["verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 failed"));
}
