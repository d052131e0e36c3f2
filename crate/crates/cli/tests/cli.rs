use std::path::Path;
use std::process::{Command, Output};

fn avs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avs")).args(args).output().expect("spawn avs")
}

fn config_file(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.cfg");
    std::fs::write(
        &path,
        "# quick matrix\ngrid = 8x8\nsims = 4\nparticles = 20\nepisodes = 3\nmax_steps = 40\n",
    )
    .unwrap();
    path
}

#[test]
fn writes_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path());
    let out = dir.path().join("out.csv");
    let o = avs(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("policy,obs_model,stage,n_sim,particles,episodes,found,mean_steps,std_steps,mean_time_s,failures")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("pomcp,grid,2d,4,20,3,"));
    assert!(rows[1].starts_with("random,grid,2d,0,0,3,"));
}

#[test]
fn no_time_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path());
    let run = |threads: &str| {
        let o = avs(&["run", "--config", cfg.to_str().unwrap(), "--out", "-", "--no-time", "--threads", threads]);
        assert!(o.status.success());
        o.stdout
    };
    let a = run("1");
    assert_eq!(a, run("1"));
    assert_eq!(a, run("3"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(9) == Some("0")));
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path());
    let o = avs(&[
        "run", "--config", cfg.to_str().unwrap(), "--out", "-", "--policy", "pomcp", "--sims", "2,3",
        "--episodes", "1", "--obs", "binary",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("pomcp,binary,2d,2,20,1,"));
    assert!(rows[1].starts_with("pomcp,binary,2d,3,20,1,"));
}

#[test]
fn bad_input_fails_with_a_message() {
    let o = avs(&["run", "--out", "-", "--policy", "greedy"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("greedy"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "sims = 4\nwhatever = 2\n").unwrap();
    let o = avs(&["run", "--config", cfg.to_str().unwrap(), "--out", "-"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("whatever"), "{err}");

    let o = avs(&["run", "--out", "-", "--map", dir.path().join("missing.map").to_str().unwrap()]);
    assert!(!o.status.success());
}
