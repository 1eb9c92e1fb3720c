use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_milac-radar");

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn bad_configurations_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write(dir.path(), "bad.json", r#"{"experiment": "crb_sweep", "geometry": {"nx": 0, "ny": 4}}"#);
    let res = run(&["crb_sweep", "--config", &cfg], &out);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("geometry"));

    let cfg = write(dir.path(), "cx.json", r#"{"experiment": "complexity"}"#);
    let res = run(&["crb_sweep", "--config", &cfg], &out);
    assert_eq!(res.status.code(), Some(2));

    let res = run(&["complexity", "--config", "/nonexistent/config.json"], &out);
    assert_ne!(res.status.code(), Some(0));
}

#[test]
fn repeated_runs_write_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "doa.json",
        r#"{"experiment": "doa_spectrum",
            "geometry": {"nx": 2, "ny": 2},
            "scene": {"targets_deg": [[45, 30]], "snr_db": [20]},
            "receiver": {"lx": 4, "ly": 4}}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let res = run(&["doa_spectrum", "--config", &cfg, "--seed", "7"], out);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}
