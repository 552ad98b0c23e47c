use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use thinstrip::io::{read_sweep_csv, INCOMPLETE_MARKER};

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn quick(name: &str) -> PathBuf {
    manifest().join("examples/quick").join(format!("{name}.json"))
}

fn run(cmd: &str, config: &Path, out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_thinstrip"))
        .args([cmd, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--jobs", "2"])
        .output()
        .expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("cfg.json");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run("validate", &quick("harmonic"), tmp.path()).0, 0);

    let (code, _) = run("validate", &quick("broken_line"), tmp.path());
    assert_eq!(code, 0);
    let report = fs::read_to_string(tmp.path().join("validation.json")).unwrap();
    assert!(report.contains("vanishing_endpoints"));

    // right piece returns to M = 1 at x = 3
    let two_max = write_config(
        tmp.path(),
        r#"{"profile": {"kind": "custom_piecewise", "M": 1.0, "m": 2.0, "c_plus": 1.0, "c_minus": 1.0, "a": 1.0, "b": 3.0,
            "pieces": [{"start": -1.0, "end": 0.0, "terms": [[1.0, 0.0], [-1.0, 2.0]]},
                       {"start": 0.0, "end": 3.0, "terms": [[1.0, 0.0], [-1.0, 2.0], [0.6666666666666666, 3.0], [-0.1111111111111111, 4.0]]}]}}"#,
    );
    let (code, err) = run("validate", &two_max, tmp.path());
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("several points"), "{err}");
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write_config(
        tmp.path(),
        r#"{"profile": {"kind": "smooth_poly", "M": 2.0, "m": 2.0, "c_plus": 1.0, "c_minus": 1.0, "a": 1.0, "b": 1.0}, "epsilon": [0.1]}"#,
    );
    assert_eq!(run("sweep", &unknown, tmp.path()).0, 2);
    assert_eq!(run("sweep", &tmp.path().join("missing.json"), tmp.path()).0, 2);
    // too few eps values for a sweep
    let short = write_config(
        tmp.path(),
        r#"{"profile": {"kind": "smooth_poly", "M": 2.0, "m": 2.0, "c_plus": 1.0, "c_minus": 1.0, "a": 1.0, "b": 1.0}, "eps": [0.2, 0.1]}"#,
    );
    assert_eq!(run("sweep", &short, tmp.path()).0, 2);
    assert_eq!(run("bracket", &quick("harmonic"), tmp.path()).0, 2);
}

#[test]
fn solver_failure_keeps_marked_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    // one transverse unknown and six cells: too few unknowns for five modes
    let cfg = write_config(
        tmp.path(),
        r#"{"profile": {"kind": "smooth_poly", "M": 2.0, "m": 2.0, "c_plus": 1.0, "c_minus": 1.0, "a": 1.0, "b": 1.0},
            "eps": [0.2, 0.1, 0.05], "j": [5], "mesh": {"cells_per_scale": 1, "ns": 2, "h_points": 400}}"#,
    );
    let (code, err) = run("sweep", &cfg, tmp.path());
    assert_eq!(code, 4, "{err}");
    let text = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert!(text.lines().last().unwrap().starts_with(INCOMPLETE_MARKER), "{text}");
    assert!(read_sweep_csv(text.as_bytes()).is_ok());
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for cmd in ["sweep", "eigfun", "solve-1d", "solve-2d"] {
        assert_eq!(run(cmd, &quick("asymmetric"), a.path()).0, 0, "{cmd}");
        assert_eq!(run(cmd, &quick("asymmetric"), b.path()).0, 0, "{cmd}");
    }
    let (x, y) = (dir_bytes(a.path()), dir_bytes(b.path()));
    assert!(x.len() > 10);
    assert_eq!(x, y);
}

#[test]
fn thread_count_does_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let status = |jobs: &str, out: &Path| {
        Command::new(env!("CARGO_BIN_EXE_thinstrip"))
            .args(["sweep", "--jobs", jobs, "--config"])
            .arg(quick("harmonic"))
            .arg("--out")
            .arg(out)
            .stdout(Stdio::null())
            .status()
            .unwrap()
    };
    assert!(status("1", a.path()).success());
    assert!(status("4", b.path()).success());
    assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));
}

#[test]
fn outputs_match_golden_files() {
    let golden = manifest().join("examples/golden");
    for (name, cmds) in [
        ("harmonic", &["validate", "sweep"][..]),
        ("asymmetric", &["validate", "sweep"][..]),
        ("broken_line", &["validate", "bracket"][..]),
    ] {
        let tmp = tempfile::tempdir().unwrap();
        for cmd in cmds {
            assert_eq!(run(cmd, &quick(name), tmp.path()).0, 0, "{name} {cmd}");
        }
        for (file, bytes) in dir_bytes(&golden.join(name)) {
            let got = fs::read(tmp.path().join(&file)).unwrap();
            assert!(got == bytes, "{name}/{file} differs from the golden copy");
        }
    }
}

#[test]
fn sweep_on_vanishing_profile_runs_bracketing() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run("sweep", &quick("broken_line"), tmp.path()).0, 0);
    assert!(tmp.path().join("bracket.csv").exists());
    assert!(!tmp.path().join("sweep.csv").exists());
}

#[test]
fn eigfun_writes_aligned_functions() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run("eigfun", &quick("harmonic"), tmp.path()).0, 0);
    let table = fs::read_to_string(tmp.path().join("eigfun_e2_j1.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("x,chi,psi_Q,X_rescaled"));
    // sign-aligned: the three columns agree in sign at the peak
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    let peak = rows.iter().max_by(|a, b| a[2].abs().total_cmp(&b[2].abs())).unwrap();
    assert!(peak[1] * peak[2] > 0.0 && peak[2] * peak[3] > 0.0);
    let summary = fs::read_to_string(tmp.path().join("eigfun.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 3 * 3);
}
