use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subcell-eg"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("subcell-eg-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["converge", "--help"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["converge", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["converge", "--strategy", "h-cube"]).status.code(), Some(1));
    assert_eq!(run(&["converge", "--k", "3"]).status.code(), Some(1));
    assert_eq!(run(&["rotate", "--config", "/nonexistent/cfg.toml"]).status.code(), Some(1));
}

#[test]
fn converge_writes_csv() {
    let out = scratch_dir("converge").join("c.csv");
    let o = run(&["converge", "--k", "1", "--l", "0", "--m", "0", "--R-max", "2", "--r-max", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "k,l,m,R,r,dofs,l2_error,seconds");
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("1,0,0,1,1,"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("rate"));
}

#[test]
fn flags_override_config() {
    let dir = scratch_dir("config");
    let from_config = dir.join("from_config.csv");
    let from_flag = dir.join("from_flag.csv");
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "[converge]\nk = 1\nl = 0\nm = 0\nR-max = 1\nr-max = 3\nstrategy = \"fixed-H\"\nout = {:?}\n",
            from_config.to_str().unwrap()
        ),
    )
    .unwrap();

    let o = run(&["--config", cfg.to_str().unwrap(), "converge"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&from_config).unwrap();
    assert!(text.lines().skip(1).all(|row| row.starts_with("1,0,0,2,")));
    assert_eq!(text.lines().count(), 3);

    let o = run(&["converge", "--config", cfg.to_str().unwrap(), "--m", "-1", "--strategy", "table", "--r-max", "1", "--out", from_flag.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&from_flag).unwrap();
    assert_eq!(text.lines().nth(1).map(|r| &r[..9]), Some("1,0,-1,1,"));
    assert_eq!(text.lines().count(), 2);

    std::fs::write(&cfg, "[converge]\nstrategy = \"table\"\ncolour = 3\n").unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "converge"]).status.code(), Some(1));
}

#[test]
fn rotate_writes_outputs() {
    let prefix = scratch_dir("rotate").join("sb");
    let p = prefix.to_str().unwrap();
    let o = run(&["rotate", "--R", "2", "--r", "3", "--out-prefix", p]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for suffix in [".csv", ".vtk", "_cross_x.csv", "_cross_y.csv"] {
        assert!(std::fs::metadata(format!("{p}{suffix}")).is_ok(), "missing {suffix}");
    }
    let cross = std::fs::read_to_string(format!("{p}_cross_y.csv")).unwrap();
    assert_eq!(cross.lines().count(), 1025);
}

#[test]
fn instability_exits_with_two() {
    let prefix = scratch_dir("unstable").join("sb");
    let o = run(&["rotate", "--R", "4", "--r", "6", "--cfl", "3", "--out-prefix", prefix.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}
