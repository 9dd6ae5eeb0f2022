use std::path::Path;
use std::process::{Command, Output};

use wigner_pnr_cli::dataset::{Dataset, DatasetKind, Record, VERSION};
use wigner_pnr_cli::report::Report;

const SMALL: &str = r#"
[scan]
amplitude_steps = 6
phase_steps = 4
shots = 20000
origin_repeats = 4

[coincidence]
windows = 1000000

[calibration]
target_sigma = 0.01
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wigner-pnr"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn simulate_small(dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out_dir = dir.join("out");
    let mut args = vec!["simulate", "--config", cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn read_report(path: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_then_reconstruct_reproduces_the_report() {
    for format in ["csv", "jsonl"] {
        let tmp = tempfile::tempdir().unwrap();
        let out = simulate_small(tmp.path(), &["--format", format]);
        assert!(out.status.success(), "{}", stderr(&out));
        let out_dir = tmp.path().join("out");
        for f in ["wigner_grid.csv", "radial_profile.csv", "report.json"] {
            assert!(out_dir.join(f).exists(), "{f}");
        }
        let counts = out_dir.join(format!("counts.{format}"));
        let re_dir = tmp.path().join("re");
        let out = run(&["reconstruct", counts.to_str().unwrap(), "--out-dir", re_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));

        let inline = read_report(&out_dir.join("report.json"));
        let offline = read_report(&re_dir.join("reconstruction.json"));
        assert!(inline.simulation.is_some());
        assert!(offline.simulation.is_none());
        assert_eq!(inline.analysis, offline.analysis);
        for f in ["wigner_grid.csv", "radial_profile.csv"] {
            assert_eq!(std::fs::read(out_dir.join(f)).unwrap(), std::fs::read(re_dir.join(f)).unwrap());
        }
        assert_eq!(inline.analysis.grid.len(), 1 + 5 * 4);
        let origin = inline.analysis.origin.as_ref().unwrap();
        assert!(origin.w < 0.0);
        assert_eq!(origin.repeats, 4);
    }
}

#[test]
fn default_configuration_recovers_the_channel_efficiency() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = run(&["simulate", "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_report(&out_dir.join("report.json"));
    let fit = report.analysis.fit.unwrap();
    assert!((fit.eta - 0.58).abs() < 0.02, "{fit:?}");
    assert!(report.analysis.origin.unwrap().w < 0.0);
    let h = report.analysis.heralding_ratio.unwrap();
    assert!((h.value - 0.58).abs() < 0.03);
    assert!(stdout(&out).contains("W(0,0)"));

    let out = run(&["report", out_dir.join("report.json").to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("eta fit (grid)"));
}

#[test]
fn seed_controls_the_datasets() {
    let tmp = tempfile::tempdir().unwrap();
    let read = |sub: &str, seed: &str| {
        let dir = tmp.path().join(sub);
        std::fs::create_dir_all(&dir).unwrap();
        assert!(simulate_small(&dir, &["--seed", seed]).status.success());
        std::fs::read(dir.join("out/counts.csv")).unwrap()
    };
    let a = read("a", "5");
    let b = read("b", "5");
    let c = read("c", "6");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn invalid_configuration_exits_with_code_one() {
    let tmp = tempfile::tempdir().unwrap();
    for (text, needle) in [
        ("[scan]\nshots = 0\n", "scan.shots"),
        ("[scan]\nshotz = 10\n", "shotz"),
        ("[optics]\neta_tes = 2.0\n", "optics"),
    ] {
        let cfg = tmp.path().join("bad.toml");
        std::fs::write(&cfg, text).unwrap();
        let out = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out-dir", tmp.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{text}");
        assert!(stderr(&out).contains(needle), "{}", stderr(&out));
    }
}

#[test]
fn missing_files_exit_with_code_three() {
    let out = run(&["reconstruct", "/nonexistent/counts.csv"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["simulate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(3));
}

fn write_dataset(dir: &Path, kind: DatasetKind, records: Vec<Record>) -> std::path::PathBuf {
    let path = dir.join("hand.csv");
    Dataset::new(kind, 5, 0, None, records)
        .write(&path, wigner_pnr_cli::config::DatasetFormat::Csv)
        .unwrap();
    path
}

fn record(index: usize, amplitude: f64, counts: Vec<u64>) -> Record {
    Record {
        index,
        amplitude,
        phase: 0.0,
        seed: 0,
        repeat: 0,
        counts,
    }
}

#[test]
fn hand_built_origin_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_dataset(tmp.path(), DatasetKind::Tomography, vec![record(0, 0.0, vec![42_000, 58_000, 0, 0, 0, 0])]);
    let out_dir = tmp.path().join("re");
    let out = run(&["reconstruct", path.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_report(&out_dir.join("reconstruction.json"));
    let w = report.analysis.origin.unwrap().w;
    assert!((w - (-0.16 / std::f64::consts::PI)).abs() < 1e-15);
    assert!((w + 0.0509).abs() < 1e-4);
    assert!(report.analysis.fit.is_none());
}

#[test]
fn corrupt_and_newer_datasets_are_schema_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_dataset(
        tmp.path(),
        DatasetKind::Tomography,
        vec![record(0, 0.0, vec![5, 5, 0, 0, 0, 0]), record(1, 0.1, vec![5, 5, 1, 0, 0, 0])],
    );
    let text = std::fs::read_to_string(&path).unwrap();

    let truncated = tmp.path().join("truncated.csv");
    std::fs::write(&truncated, &text[..text.len() - 6]).unwrap();
    let out = run(&["reconstruct", truncated.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("schema error at record 1"), "{}", stderr(&out));

    let newer = tmp.path().join("newer.csv");
    std::fs::write(&newer, text.replace(&format!("# version={VERSION}"), &format!("# version={}", VERSION + 1))).unwrap();
    let out = run(&["reconstruct", newer.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("newer"), "{}", stderr(&out));
}

#[test]
fn calibrate_command() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(simulate_small(tmp.path(), &[]).status.success());
    let cal_dir = tmp.path().join("cal");
    let counts = tmp.path().join("out/calibration_counts.csv");
    let out = run(&["calibrate", counts.to_str().unwrap(), "--out-dir", cal_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = std::fs::read_to_string(cal_dir.join("calibration.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 5);
    assert!(table.lines().skip(1).all(|l| l.ends_with(",ok")), "{table}");

    // all vacuum: every point flagged, not fatal
    let vac = write_dataset(
        tmp.path(),
        DatasetKind::Calibration,
        (0..3).map(|k| record(k, 0.2 * (k + 1) as f64, vec![1000, 0, 0, 0, 0, 0])).collect(),
    );
    let out = run(&["calibrate", vac.to_str().unwrap(), "--out-dir", cal_dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).matches("insufficient_two_photon_events").count(), 3);

    // single amplitude at 0.5 from exact Poisson proportions
    let x: f64 = 0.25;
    let counts: Vec<u64> = (0..6)
        .map(|n| (1e7 * (-x).exp() * x.powi(n) / (1..=n).product::<i32>() as f64).round() as u64)
        .collect();
    let one = write_dataset(tmp.path(), DatasetKind::Calibration, vec![record(0, 0.5, counts)]);
    let out = run(&["calibrate", one.to_str().unwrap(), "--out-dir", cal_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let table = std::fs::read_to_string(cal_dir.join("calibration.csv")).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert!((row[2].parse::<f64>().unwrap() - 0.5).abs() < 1e-3);
    assert_eq!(row[6], "ok");

    // tomography data is not calibration data
    let out = run(&["calibrate", tmp.path().join("out/counts.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn shipped_default_config_matches_builtin_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let cfg = wigner_pnr_cli::config::RunConfig::load(&path).unwrap();
    assert_eq!(cfg, wigner_pnr_cli::config::RunConfig::default());
}
