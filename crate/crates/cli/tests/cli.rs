use std::path::Path;
use std::process::{Command, Output};

fn sgvem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgvem")).args(args).output().expect("spawn sgvem")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn mesh_gen_writes_a_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.txt");
    let o = sgvem(&[
        "mesh", "gen", "--n", "40", "--lloyd", "5", "--domain", "-1,1,-2,0", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("40 cells"), "{stdout}");
    assert!(std::fs::metadata(&out).unwrap().len() > 0);
}

#[test]
fn solve_writes_csv_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        &format!(
            "test = \"test3\"\nmesh_sizes = [150]\nlloyd_iterations = 5\ndt = [0.1, 0.05]\nt_final = 0.5\noutput_dir = {:?}\n",
            outdir.to_str().unwrap()
        ),
    );
    let o = sgvem(&["solve", "--config", &cfg, "--no-timing"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(outdir.join("test3.csv")).unwrap();
    assert!(csv.lines().count() >= 3, "{csv}");
    assert!(outdir.join("config.toml").exists());
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "test = \"test1\"\nbogus = 1\n");
    let o = sgvem(&["solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert_eq!(sgvem(&["sweep", "--test", "solitons"]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_with_one() {
    // far too coarse for the convergence windows
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        &format!(
            "test = \"test3\"\nmesh_sizes = [30]\nlloyd_iterations = 2\ndt = [0.1, 0.05, 0.025, 0.0125]\nt_final = 0.5\noutput_dir = {:?}\n",
            outdir.to_str().unwrap()
        ),
    );
    let o = sgvem(&["solve", "--config", &cfg, "--no-timing", "--check"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL"), "{stdout}");
    assert_eq!(o.status.code(), Some(1));
    let o = sgvem(&["solve", "--config", &cfg, "--no-timing"]);
    assert!(o.status.success());
}
