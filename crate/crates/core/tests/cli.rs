use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybridfp"))
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn exec(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.cfg");
    std::fs::write(
        &path,
        "[mode1]\nn_a = 51\nn_b = 51\n[mode2]\nn_c = 51\n\
         [run]\nT = 1\nn_steps = 400\nsnapshot_stride = 200\n\
         [mc]\nn_particles = 4000\nseed = 5\n",
    )
    .unwrap();
    path
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn check_accepts_the_shipped_configs() {
    for name in ["reference.cfg", "desk.cfg"] {
        let out = exec(bin().arg("check").arg(configs_dir().join(name)));
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok:"));
    }
}

#[test]
fn validation_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("cfl.cfg", "[run]\nn_steps = 100\n"),
        ("band.cfg", "[mode1]\nn_a = 20\nn_b = 20\n"),
        ("key.cfg", "[run]\nbogus = 1\n"),
        ("neg.cfg", "[mode1]\nsigma1 = -1\n"),
    ];
    for (name, text) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let out = exec(bin().arg("check").arg(&path));
        assert_eq!(out.status.code(), Some(1), "{name}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(exec(bin().arg("frobnicate")).status.code(), Some(1));
}

#[test]
fn missing_config_exits_two() {
    let out = exec(bin().arg("run").arg("/nonexistent/x.cfg").arg("--out").arg("/tmp/unused"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/x.cfg"));
}

#[test]
fn run_mc_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let pde = dir.path().join("pde");
    let pde2 = dir.path().join("pde2");
    let mc = dir.path().join("mc");

    for out in [&pde, &pde2] {
        let r = exec(bin().arg("run").arg(&cfg).arg("--out").arg(out));
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let r = exec(bin().arg("mc").arg(&cfg).arg("--out").arg(&mc));
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));

    let files = listing(&pde);
    assert_eq!(files, listing(&pde2));
    assert!(files.contains(&"mass_pde.csv".to_string()));
    assert!(files.contains(&"snap_pde_mode1_step000200.csv".to_string()));
    assert!(files.contains(&"snap_pde_mode2_step000400.csv".to_string()));
    assert!(listing(&mc).contains(&"mass_mc.csv".to_string()));
    for f in &files {
        let a = std::fs::read(pde.join(f)).unwrap();
        let b = std::fs::read(pde2.join(f)).unwrap();
        assert!(a == b, "{f} differs between reruns");
    }

    let mass = std::fs::read_to_string(pde.join("mass_pde.csv")).unwrap();
    let mut lines = mass.lines();
    assert_eq!(lines.next(), Some("t,mass_mode1,mass_mode2,total"));
    assert_eq!(lines.count(), 401);

    let r = exec(bin().arg("compare").arg(&pde).arg(&mc));
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stdout));
    let r = exec(bin().arg("compare").arg(&pde).arg(&mc).arg("--threshold").arg("1e-9"));
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn zero_horizon_writes_initial_state_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.cfg");
    std::fs::write(&cfg, "[mode1]\nn_a = 51\nn_b = 51\n[mode2]\nn_c = 51\n[run]\nT = 0\nn_steps = 1\n").unwrap();
    let out = dir.path().join("out");
    let r = exec(bin().arg("run").arg(&cfg).arg("--out").arg(&out));
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let mass = std::fs::read_to_string(out.join("mass_pde.csv")).unwrap();
    let rows: Vec<&str> = mass.lines().collect();
    assert_eq!(rows.len(), 2);
    let fields: Vec<f64> = rows[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(fields[0], 0.0);
    assert_eq!(fields[2], 0.0);
    assert!((fields[1] - 1.0).abs() < 1e-12);
    assert_eq!(
        listing(&out),
        vec!["mass_pde.csv", "snap_pde_mode1_step000000.csv", "snap_pde_mode2_step000000.csv"]
    );
}
