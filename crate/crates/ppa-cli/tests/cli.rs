use std::path::Path;
use std::process::{Command, Output};

fn ppa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppa")).args(args).output().expect("spawn ppa")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_exit_codes() {
    for (example, want) in [("eg1", 0), ("eg2", 3), ("eg3", 3), ("l1x", 0), ("drs-lasso", 0), ("alm-basic", 0), ("admm-basic", 0)] {
        assert_eq!(code(&ppa(&["run", example])), want, "{example}");
    }
    assert_eq!(code(&ppa(&["run", "drs-lasso", "--max-iters", "3"])), 2);
}

#[test]
fn csv_schema() {
    let out = ppa(&["run", "drs-lasso"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,x_0,x_1,x_2,xr_0,xr_1,xr_2,q_residual,fejer_gap");
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 2 * 3 + 3);
        assert_eq!(cols[0], (i + 1).to_string());
        // 17 significant digits survive a round trip
        for c in &cols[1..] {
            let x: f64 = c.parse().unwrap();
            assert_eq!(format!("{x:.16e}"), *c);
        }
    }
}

#[test]
fn fejer_gaps_are_nonnegative_after_convergence() {
    let text = stdout(&ppa(&["run", "alm-basic"]));
    for line in text.lines().skip(1) {
        let gap: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(gap >= -1e-10, "{line}");
    }
}

#[test]
fn admm_reaches_the_known_solution() {
    let text = stdout(&ppa(&["run", "admm-basic"]));
    let last: Vec<f64> = text.lines().last().unwrap().split(',').skip(1).map(|c| c.parse().unwrap()).collect();
    assert!((last[0] - 2.0).abs() < 1e-9 && (last[1] - 2.0).abs() < 1e-9, "{last:?}");
}

#[test]
fn fixed_start_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let spec = stdout(&ppa(&["example", "drs-lasso"])).replace("x0 = [0.0, 0.0, 0.0]", "x0 = [2.0, 2.0, 1.0]");
    let path = write(dir.path(), "fixed.toml", &spec);
    let out = ppa(&["run", "--problem", &path]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn example_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["eg1", "eg2", "eg3", "l1x", "l1y", "drs-lasso", "alm-basic", "admm-basic"] {
        let spec = ppa(&["example", name]);
        assert_eq!(code(&spec), 0);
        let path = write(dir.path(), &format!("{name}.toml"), &stdout(&spec));
        let from_file = ppa(&["run", "--problem", &path]);
        let builtin = ppa(&["run", name]);
        assert_eq!(code(&from_file), code(&builtin), "{name}");
        assert_eq!(from_file.stdout, builtin.stdout, "{name}");
    }
}

#[test]
fn trace_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let out = ppa(&["run", "eg2", "--trace", trace.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 1);
}

#[test]
fn verify_reports() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.txt");
    let out = ppa(&["verify", "fne", "drs-lasso", "--n", "1000", "--seed", "7", "--report", report.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(text, stdout(&out));
    for key in ["check_name", "n_samples", "n_violations", "n_inconclusive", "worst_margin", "slack", "seed"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{key} = "))), "{key} missing:\n{text}");
    }
    assert!(text.contains("n_samples = 1000") && text.contains("seed = 7"));
    // same seed, same report
    let again = ppa(&["verify", "fne", "drs-lasso", "--n", "1000", "--seed", "7"]);
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn verify_verdicts() {
    for (args, want) in [
        (&["verify", "minty", "eg3"][..], 0),
        (&["verify", "sri", "eg1"], 0),
        (&["verify", "sri", "eg3"], 1),
        (&["verify", "single", "l1x", "--n", "20"], 1),
        (&["verify", "single", "l1y", "--n", "20"], 0),
        (&["verify", "moreau", "l1x", "--n", "50"], 0),
        (&["verify", "chain", "l1y", "--n", "50"], 0),
        (&["verify", "fejer", "drs-lasso"], 0),
        (&["verify", "lipschitz", "alm-basic", "--n", "500"], 0),
        (&["verify", "monotone", "drs-lasso", "--n", "500"], 0),
    ] {
        assert_eq!(code(&ppa(args)), want, "{args:?}");
    }
}

#[test]
fn usage_errors() {
    assert_eq!(code(&ppa(&["verify", "bogus", "eg1"])), 64);
    assert_eq!(code(&ppa(&["example", "bogus"])), 64);
    assert_eq!(code(&ppa(&["run", "bogus"])), 64);
    assert_eq!(code(&ppa(&["frobnicate"])), 64);
    assert_eq!(code(&ppa(&["run"])), 64);
    // checks that do not apply to the problem
    assert_eq!(code(&ppa(&["verify", "minty", "drs-lasso"])), 64);
    assert_eq!(code(&ppa(&["verify", "fixzer", "eg1"])), 64);
    assert_eq!(code(&ppa(&["verify", "fne", "admm-basic"])), 64);
}

#[test]
fn invalid_problems() {
    let dir = tempfile::tempdir().unwrap();
    let spec = stdout(&ppa(&["example", "drs-lasso"]));
    let bad_tau = write(dir.path(), "tau.toml", &spec.replace("tau = 1.0", "tau = -1.0"));
    let out = ppa(&["run", "--problem", &bad_tau]);
    assert_eq!(code(&out), 64);
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau"));
    let unknown = write(dir.path(), "unknown.toml", &format!("extra = 1\n{spec}"));
    assert_eq!(code(&ppa(&["run", "--problem", &unknown])), 64);
}

#[test]
fn io_errors() {
    assert_eq!(code(&ppa(&["run", "--problem", "/nonexistent/problem.toml"])), 4);
    assert_eq!(code(&ppa(&["run", "eg1", "--trace", "/nonexistent/dir/t.csv"])), 4);
    assert_eq!(code(&ppa(&["verify", "sri", "eg1", "--report", "/nonexistent/dir/r.txt"])), 4);
}
