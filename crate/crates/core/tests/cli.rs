use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use widomlab::experiment::{load_solution, CSV_HEADER};

fn widomlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_widomlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn estar_config(dir: &Path, n_max: usize) -> String {
    let body = format!(
        r#"{{"set": [[-1.0, -0.6], [0.6, 1.0]], "n_range": [1, {n_max}], "output_dir": "{}",
            "cross_validate_up_to": 4, "almost_period_eps": null, "seed": 7}}"#,
        dir.join("out").display()
    );
    write_config(dir, "estar.json", &body)
}

#[test]
fn run_writes_artifacts_and_show_reads_them() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = estar_config(tmp.path(), 6);
    let out = widomlab(&["run", &cfg]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("out");
    for f in [
        "config.json",
        "diagnostics.csv",
        "comb.json",
        "summary.txt",
        "manifest.json",
        "solutions/n001.json",
    ] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let csv = fs::read_to_string(dir.join("diagnostics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with('#'));
    assert_eq!(lines[1], CSV_HEADER);
    assert_eq!(lines.len(), 2 + 6);

    let one = load_solution(&dir, 1).unwrap();
    assert_eq!(
        one.gap_zeros.values().copied().collect::<Vec<_>>(),
        vec![0.0]
    );
    assert!((one.widom.f_norm - 2.0).abs() < 1e-12);
    assert!((one.ratio - 1.25).abs() < 1e-12);
    let two = load_solution(&dir, 2).unwrap();
    assert!((two.t_n - 0.32).abs() < 1e-12);
    assert!(two.gap_zeros.is_empty());

    let shown = widomlab(&["show", dir.to_str().unwrap(), "1"]);
    assert_eq!(shown.status.code(), Some(0));
    let text = String::from_utf8(shown.stdout).unwrap();
    assert!(text.contains("gap 0: +0.000000000000000"), "{text}");
    assert!(text.contains("ratio = 1.250000000000000"), "{text}");
}

#[test]
fn out_flag_overrides_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = estar_config(tmp.path(), 3);
    let alt = tmp.path().join("elsewhere");
    let out = widomlab(&["run", &cfg, "--out", alt.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(alt.join("diagnostics.csv").exists());
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn repeated_runs_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = estar_config(tmp.path(), 10);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(
            widomlab(&["run", &cfg, "--out", d.to_str().unwrap()])
                .status
                .code(),
            Some(0)
        );
    }
    let read = |d: &Path| fs::read(d.join("diagnostics.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn interval_widom_factor_is_two() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{"set": [[-1.0, 1.0]], "n_range": [1, 30], "output_dir": "{}", "almost_period_eps": null}}"#,
        tmp.path().join("out").display()
    );
    let cfg = write_config(tmp.path(), "unit.json", &body);
    assert_eq!(widomlab(&["run", &cfg]).status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("out/diagnostics.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 30);
    for row in rows {
        let w: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!((w - 2.0).abs() < 1e-8, "{row}");
    }
}

#[test]
fn overlapping_intervals_exit_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"set": [[-1.0, 0.2], [0.1, 1.0]], "n_range": [1, 5], "output_dir": "x", "almost_period_eps": null}"#,
    );
    assert_eq!(widomlab(&["validate", &cfg]).status.code(), Some(1));
    assert_eq!(widomlab(&["run", &cfg]).status.code(), Some(1));
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn validate_accepts_shipped_configs() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(configs).unwrap() {
        let p = entry.unwrap().path();
        let out = widomlab(&["validate", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", p.display());
        seen += 1;
    }
    assert!(seen >= 3);
}

#[test]
fn unknown_fields_and_missing_runs_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "typo.json",
        r#"{"set": [[-1.0, 1.0]], "n_range": [1, 5], "output_dir": "x", "almost_period_eps": null, "sed": 1}"#,
    );
    assert_eq!(widomlab(&["validate", &cfg]).status.code(), Some(1));
    let missing = tmp.path().join("nothing");
    assert_eq!(
        widomlab(&["show", missing.to_str().unwrap(), "1"])
            .status
            .code(),
        Some(1)
    );
}
