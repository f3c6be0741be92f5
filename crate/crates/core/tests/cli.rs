use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opinion-fp"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn solve_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "# short run\nlambda = 0.4\nm = 0\nt_end = 1\nn = 100\n");
    for out in ["a", "b"] {
        let status = bin()
            .args(["solve", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(out))
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    for file in ["decay.csv", "equilibrium.csv", "final_state.csv", "summary.txt"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
    let decay = fs::read_to_string(dir.path().join("a/decay.csv")).unwrap();
    assert!(decay.starts_with("t,H,fisher,K_fisher,l1,weighted_l2,mass,mean\n"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "lambda = 0.5\nt_end = 5\n");
    let out = dir.path().join("o");
    let status = bin()
        .args(["solve", "--n", "60", "--dt", "0.01", "--t-end", "0.5", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("n: 60\n") && summary.contains("steps: 50\n"), "{summary}");
    assert_eq!(fs::read_to_string(out.join("final_state.csv")).unwrap().lines().count(), 61);
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "lambda = 0.5\nbogus = 3\n");
    let output = bin().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("line 2"));

    let cfg = write_config(dir.path(), "lambda = 1\nls.lambdas = 1.9\nls.m = 0.5\n");
    let output = bin().args(["verify-ls", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(output.status.code(), Some(1));

    let status = bin().args(["transform-check", "--lambda", "1.9", "--m", "0.5"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let status = bin().args(["solve"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
    assert_eq!(bin().arg("--help").status().unwrap().code(), Some(0));
}

#[test]
fn fit_reads_decay_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "lambda = 0.5\nt_end = 2\nn = 100\n");
    let out = dir.path().join("o");
    assert!(bin().args(["solve", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap().success());
    let output = bin().arg("fit").arg(out.join("decay.csv")).args(["--column", "weighted_l2"]).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let slope: f64 = text.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(slope < -1.9, "{text}");
    let status = bin().arg("fit").arg(out.join("decay.csv")).args(["--column", "nope"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn mc_and_equilibrium_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "lambda = 0.5\nn = 100\nmc.agents = 4000\nmc.epsilon = 0.05\nmc.bins = 20\nmc.times = 0.5, 1\n",
    );
    let out = dir.path().join("o");
    assert!(bin().args(["mc", "--seed", "9", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap().success());
    let moments = fs::read_to_string(out.join("moments.csv")).unwrap();
    assert_eq!(moments.lines().count(), 4);
    assert_eq!(fs::read_to_string(out.join("mc_hist.csv")).unwrap().lines().count(), 1 + 3 * 20);
    assert!(bin().args(["equilibrium", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap().success());
    assert!(out.join("equilibrium.csv").exists());
}
