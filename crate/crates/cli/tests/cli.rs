use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const LINEAR: &str = "
[game]
sigma0 = 0.15
rho = 0.02
f_poly = 3, 1
c0 = 100
c1 = 15
g1 = 15
[grid]
x_max = 4
h = 1
[solver]
tol = 0
[sweep]
h = 1, 1/2, 1/4
";

fn symgame(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.cfg");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_symgame"))
        .arg("--config")
        .arg(&path)
        .arg("--output")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn payoffs(csv: &str) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn single_run_writes_solution_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = symgame(dir.path(), LINEAR, &[]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("outcome=ConvergedExact\n"));
    assert!(stdout.contains("iterations=17\n"));
    let csv = fs::read_to_string(dir.path().join("out/solution.csv")).unwrap();
    assert!(csv.starts_with("x,v,in_intervention,delta_star,impulse_target,residual\n"));
    assert_eq!(csv.lines().count(), 10);
    let report = fs::read_to_string(dir.path().join("out/solution_report.txt")).unwrap();
    assert_eq!(report, stdout);
}

#[test]
fn solver_choice_gives_the_same_payoff() {
    let dir = tempfile::tempdir().unwrap();
    symgame(dir.path(), LINEAR, &["--solver", "fppi"]);
    let fppi = payoffs(&fs::read_to_string(dir.path().join("out/solution.csv")).unwrap());
    let out = symgame(dir.path(), LINEAR, &["--solver", "howard", "--diagnostics", "full"]);
    assert_eq!(out.status.code(), Some(0));
    let howard = payoffs(&fs::read_to_string(dir.path().join("out/solution.csv")).unwrap());
    for (a, b) in fppi.iter().zip(&howard) {
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("symmetry=holds\n"));
}

#[test]
fn sweep_writes_table_and_reports_cycling() {
    let dir = tempfile::tempdir().unwrap();
    let out = symgame(dir.path(), LINEAR, &["--sweep"]);
    // h = 1/4 ends in a two-cycle.
    assert_eq!(out.status.code(), Some(2));
    let table = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("0.25,Cycled(2),"));
    for k in 0..3 {
        assert!(dir.path().join(format!("out/solution_{k}.csv")).exists());
    }
    let explicit = symgame(dir.path(), LINEAR, &["--sweep", "1,1/2"]);
    assert_eq!(explicit.status.code(), Some(0));
}

#[test]
fn iteration_cap_and_stagnation_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let capped = LINEAR.replace("tol = 0", "tol = 0\nmax_outer_iters = 3");
    assert_eq!(symgame(dir.path(), &capped, &[]).status.code(), Some(4));
    let degenerate = LINEAR
        .replace("g1 = 15", "g1 = 20")
        .replace("x_max = 4\nh = 1", "x_max = 16\nh = 1/2");
    assert_eq!(symgame(dir.path(), &degenerate, &[]).status.code(), Some(3));
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = LINEAR.replace("rho = 0.02", "rho = zero");
    let out = symgame(dir.path(), &bad, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 4"));

    let out = symgame(dir.path(), LINEAR, &["--solver", "newton"]);
    assert_eq!(out.status.code(), Some(1));

    let out = symgame(dir.path(), LINEAR, &["--sweep", "1,0.3"]);
    assert_eq!(out.status.code(), Some(1));

    let missing = Command::new(env!("CARGO_BIN_EXE_symgame"))
        .args(["--config", "/nonexistent/run.cfg"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}
