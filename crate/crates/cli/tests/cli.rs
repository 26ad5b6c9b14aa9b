use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lss")).args(args).output().expect("binary runs")
}

fn body(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

const VERIFY_I: &str = "# regime (i) with exact compound Poisson jumps
mode = verify_i
alpha = 0.3
driver = cp
rate = 5
sigma = step
sigma_breakpoints = 0.4
sigma_levels = 1, 2
p = 3
n_list = 256, 1024
replications = 6
seed = 3
";

const STABLE: &str = "mode = estimate
kernel = power
alpha = 0.2
driver = stable
beta = 1.5
n_list = 1000
replications = 2
seed = 1
";

#[test]
fn help_documents_keys_and_exit_codes() {
    let out = lss(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for key in ["n_list", "sigma_breakpoints", "tail_tol", "Exit codes"] {
        assert!(text.contains(key), "help lacks {key}");
    }
}

#[test]
fn simulate_powervar_estimate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lfsm.cfg");
    fs::write(&cfg, STABLE).unwrap();
    let path = dir.path().join("path.csv");
    let out = lss(&["simulate", "--config", cfg.to_str().unwrap(), "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let b = body(&path);
    assert!(b.starts_with("t,x\n"));
    assert_eq!(b.lines().count(), 1002);

    let var = dir.path().join("var.csv");
    let args = ["powervar", "--input", path.to_str().unwrap(), "--p", "1", "--regime", "ii", "--alpha", "0.2"];
    let out = lss(&[&args[..], &["--beta", "1.5", "--out", var.to_str().unwrap()]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let last = body(&var).lines().last().unwrap().to_string();
    let fields: Vec<f64> = last.split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields[0], 1.0);
    let expected = fields[1] * 1000f64.powf(-1.0 + (0.2 + 1.0 / 1.5));
    assert!((fields[2] - expected).abs() <= 1e-12 * expected);

    let est = dir.path().join("est.csv");
    let out = lss(&["estimate", "--input", path.to_str().unwrap(), "--out", est.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stderr).unwrap().contains("alpha_hat"));
    let b = body(&est);
    assert!(b.starts_with("quantity,value\n"));
    assert!(b.contains("beta_hat,") && b.contains("h_hat_ratio,"));
}

#[test]
fn verify_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("v.cfg");
    fs::write(&cfg, VERIFY_I).unwrap();
    let run = |name: &str, serial: bool| {
        let out_path = dir.path().join(format!("{name}.csv"));
        let samples = dir.path().join(format!("{name}_samples.csv"));
        let mut args = vec![
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
            "--samples",
            samples.to_str().unwrap(),
        ];
        if serial {
            args.push("--serial");
        }
        let out = lss(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (fs::read(&out_path).unwrap(), fs::read(&samples).unwrap(), body(&out_path))
    };
    let a = run("a", false);
    let b = run("b", false);
    let c = run("c", true);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert!(a.2.starts_with("n,statistic,mean,median,q05,q95,target,rel_error\n"));
    assert!(a.2.contains("1024,pass_fraction,"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    // p = beta sits on the critical boundary
    fs::write(&cfg, "mode = verify_ii\nalpha = 0.1\ndriver = stable\nbeta = 1.5\np = 1.5\nn_list = 64\n").unwrap();
    let out = lss(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("critical"));

    fs::write(&cfg, format!("{VERIFY_I}colour = blue\n")).unwrap();
    assert_eq!(lss(&["verify", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(lss(&["verify", "--config", "/nonexistent/file.cfg"]).status.code(), Some(2));
    assert_eq!(lss(&["oracle", "--alpha", "0.1"]).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_3() {
    // E|Z|^p diverges for p >= beta
    let out = lss(&["oracle", "--alpha", "0.1", "--p", "1.8", "--beta", "1.5"]);
    assert_eq!(out.status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.csv");
    fs::write(&flat, "t,x\n0,1\n0.5,1\n1,1\n").unwrap();
    assert_eq!(lss(&["estimate", "--input", flat.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn oracle_constants() {
    let out = lss(&["oracle", "--alpha", "0.1", "--p", "1", "--beta", "1.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("quantity,value\n"));
    assert!(text.contains("regime_ii,"));
    let mp: f64 = text.lines().find(|l| l.starts_with("mp_constant,")).unwrap()[12..].parse().unwrap();
    assert!(mp > 0.0 && mp.is_finite());

    let out = lss(&["oracle", "--alpha", "1", "--k", "2", "--p", "2", "--u", "0.5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let vm: f64 = text.lines().find(|l| l.starts_with("vm_series(u=0.5),")).unwrap()[17..].parse().unwrap();
    assert!((vm - 0.5).abs() < 1e-12);
}
