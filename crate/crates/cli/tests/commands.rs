use std::path::Path;
use std::process::{Command, Output};

fn mnp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mnp"))
        .args(args)
        .current_dir(cwd)
        .env("MNP_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = mnp(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn simulate_default_shapes() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--output", "sim"], dir.path());
    let text = String::from_utf8(read(dir.path().join("sim/data.csv"))).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "choice,x_1_1,x_1_2,x_2_1,x_2_2");
    assert_eq!(lines.count(), 50);
}

#[test]
fn simulate_is_repeatable_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--seed", "11", "--output", "a"], dir.path());
    ok(&["simulate", "--seed", "11", "--output", "b"], dir.path());
    ok(&["simulate", "--seed", "12", "--output", "c"], dir.path());
    assert_eq!(read(dir.path().join("a/data.csv")), read(dir.path().join("b/data.csv")));
    assert_ne!(read(dir.path().join("a/data.csv")), read(dir.path().join("c/data.csv")));
}

#[test]
fn config_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.conf"), "# sim\nseed = 3\nn = 0\n").unwrap();
    let out = mnp(&["simulate", "--config", "bad.conf", "--output", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let out = mnp(&["simulate", "--output"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn incompatible_identification_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--output", "sim"], dir.path());
    std::fs::write(
        dir.path().join("fit.conf"),
        "variant = 3.1\nidentification = first_diagonal\n",
    )
    .unwrap();
    let out = mnp(
        &["fit", "--data", "sim/data.csv", "--config", "fit.conf", "--output", "f"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "choice,x_1_1\n0,1\n1,oops\n").unwrap();
    let out = mnp(&["fit", "--data", "bad.csv", "--output", "f"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    std::fs::write(dir.path().join("draws.csv"), "iteration,parameter\n").unwrap();
    let out = mnp(&["diagnose", "--draws", "draws.csv", "--output", "d"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let out = mnp(&["fit", "--data", "missing.csv", "--output", "f"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn stuck_chain_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--output", "sim"], dir.path());
    std::fs::write(dir.path().join("fit.conf"), "variant = 1.3\nmax_rejections = 1\n").unwrap();
    let out = mnp(
        &[
            "fit",
            "--data",
            "sim/data.csv",
            "--config",
            "fit.conf",
            "--iterations",
            "300",
            "--output",
            "f",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("iteration"));
}

#[test]
fn fit_protocol_keeps_ten_thousand_draws() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--output", "sim"], dir.path());
    ok(
        &["fit", "--data", "sim/data.csv", "--variant", "1.3", "--output", "f"],
        dir.path(),
    );
    let text = String::from_utf8(read(dir.path().join("f/draws.csv"))).unwrap();
    let betas = text.lines().filter(|l| l.contains(",beta_1,")).count();
    assert_eq!(betas, 10_000);
    assert!(text.lines().nth(1).unwrap().starts_with("5001,beta_1,"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--output", "sim"], dir.path());
    std::fs::write(
        dir.path().join("fit.conf"),
        "variant = 1.1\niterations = 900\nseed = 1\n",
    )
    .unwrap();
    ok(
        &[
            "fit",
            "--data",
            "sim/data.csv",
            "--config",
            "fit.conf",
            "--variant",
            "2.2",
            "--iterations",
            "500",
            "--burn-in",
            "100",
            "--thin",
            "4",
            "--seed",
            "6",
            "--output",
            "f",
        ],
        dir.path(),
    );
    let manifest = String::from_utf8(read(dir.path().join("f/manifest.json"))).unwrap();
    for needle in [
        "\"variant\": \"2.2\"",
        "\"iterations\": 500",
        "\"burn_in\": 100",
        "\"thin\": 4",
        "\"seed\": 6",
    ] {
        assert!(manifest.contains(needle), "{needle} missing");
    }
    let text = String::from_utf8(read(dir.path().join("f/draws.csv"))).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains(",beta_1,")).count(), 100);
}

#[test]
fn prices_mode_fits() {
    let dir = tempfile::tempdir().unwrap();
    let mut data = String::from("choice,price_0,price_1,price_2\n");
    for i in 0..60 {
        let p0 = 1.0 + (i % 7) as f64 * 0.1;
        let p1 = 1.2 + (i % 5) as f64 * 0.15;
        let p2 = 0.9 + (i % 3) as f64 * 0.2;
        data.push_str(&format!("{},{p0},{p1},{p2}\n", i % 3));
    }
    std::fs::write(dir.path().join("prices.csv"), data).unwrap();
    std::fs::write(
        dir.path().join("fit.conf"),
        "data_mode = prices\nlatent_indices = 1, 60\n",
    )
    .unwrap();
    ok(
        &[
            "fit",
            "--data",
            "prices.csv",
            "--config",
            "fit.conf",
            "--iterations",
            "600",
            "--output",
            "f",
        ],
        dir.path(),
    );
    let text = String::from_utf8(read(dir.path().join("f/draws.csv"))).unwrap();
    for label in [",beta_3,", ",w_1_2,", ",w_60_1,"] {
        assert!(text.contains(label), "{label} missing");
    }
}

#[test]
fn compare_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = String::from("iteration,parameter,value\n");
    let mut b = a.clone();
    for t in 1..=200 {
        a.push_str(&format!("{t},beta_1,{}\n", (t as f64 * 0.7).sin()));
        b.push_str(&format!("{t},beta_1,{}\n", (t as f64 * 0.3).sin()));
        b.push_str(&format!("{t},beta_2,{}\n", (t as f64 * 0.1).cos()));
    }
    std::fs::write(dir.path().join("a.csv"), a).unwrap();
    std::fs::write(dir.path().join("b.csv"), b).unwrap();
    let out = mnp(
        &["compare", "--a", "a.csv", "--b", "b.csv", "--output", "c"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("only in B [\"beta_2\"]"), "{err}");
    assert!(err.contains("constant in A []"), "{err}");
}

#[test]
fn diagnose_without_manifest_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = String::from("iteration,parameter,value\n");
    for t in 1..=500 {
        a.push_str(&format!("{t},x,{}\n", (t as f64 * 12.9898).sin() * 43758.5453 % 1.0));
    }
    std::fs::write(dir.path().join("a.csv"), a).unwrap();
    let out = ok(&["diagnose", "--draws", "a.csv", "--output", "d"], dir.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ESS per second omitted"));
}
