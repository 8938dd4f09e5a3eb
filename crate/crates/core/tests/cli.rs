use std::fs;
use std::path::Path;
use std::process::Command;

use kldtgv::cli::{
    cmd_benchmark, cmd_degrade, cmd_estimate_direction, cmd_metrics, cmd_restore, sidecar_path, RunManifest,
};
use kldtgv::io::{read_image, read_key_values, write_image};
use kldtgv::metrics::rmse;
use kldtgv::Error;

fn manifest(pairs: &[(&str, &str)]) -> RunManifest {
    let mut m = RunManifest::default();
    for (k, v) in pairs {
        m.set(k, v).unwrap();
    }
    m
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn image_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let img = kldtgv::grid::ImageGrid::from_fn(7, 5, |r, c| (r * 5 + c) as f64 / 34.0);
    for name in ["a.png", "a.pgm"] {
        let p = dir.path().join(name);
        write_image(&p, &img).unwrap();
        let back = read_image(&p).unwrap();
        assert_eq!(back.shape(), (7, 5));
        assert!(rmse(&back, &img).unwrap() < 1e-5);
    }
    assert!(write_image(dir.path().join("a.bmpx"), &img).is_err());
}

#[test]
fn missing_input_names_the_path() {
    let m = manifest(&[("input", "/nonexistent/obs.png"), ("output", "/tmp/x.png"), ("lambda", "10")]);
    match cmd_restore(&m) {
        Err(Error::Io { path, .. }) => assert_eq!(path, Path::new("/nonexistent/obs.png")),
        other => panic!("expected an I/O error, got {other:?}"),
    }
    let err = cmd_estimate_direction(Path::new("/nonexistent/obs.png"), None).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/obs.png"));
}

#[test]
fn degrade_writes_a_reproducible_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let (obs, truth) = (dir.path().join("obs.png"), dir.path().join("truth.png"));
    let m = manifest(&[
        ("output", s(&obs)),
        ("truth", s(&truth)),
        ("size", "64"),
        ("psf", "disk:3"),
        ("snr", "40"),
        ("seed", "9"),
    ]);
    let first = cmd_degrade(&m).unwrap();
    let meta = read_key_values(sidecar_path(&obs)).unwrap();
    assert_eq!(meta["psf"], "disk:3");
    assert_eq!(meta["seed"], "9");
    assert!((meta["snr_realized"].parse::<f64>().unwrap() - 40.0).abs() < 1e-6);

    // Replaying the recorded settings gives the same observation.
    let again = dir.path().join("again.png");
    let replay = manifest(&[
        ("output", s(&again)),
        ("size", "64"),
        ("psf", &meta["psf"]),
        ("snr", &meta["snr"]),
        ("seed", &meta["seed"]),
    ]);
    assert_eq!(cmd_degrade(&replay).unwrap().b, first.b);
    assert_eq!(read_image(&obs).unwrap(), read_image(&again).unwrap());
    assert_eq!(read_image(&truth).unwrap().shape(), (64, 64));
}

#[test]
fn estimate_direction_with_debug_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.png");
    cmd_degrade(&manifest(&[("output", s(&obs)), ("size", "96"), ("phantom_theta", "30")])).unwrap();
    let dumps = dir.path().join("dumps");
    let est = cmd_estimate_direction(&obs, Some(&dumps)).unwrap();
    assert!((est.theta_degrees() - 30.0).abs() <= 2.0);
    for f in ["edges.png", "edges_masked.png", "hough.png"] {
        assert!(read_image(dumps.join(f)).is_ok(), "{f}");
    }
    let csv = fs::read_to_string(dumps.join("scores.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "eta,score");
    assert_eq!(lines.len(), 181);
    assert!(lines[1].starts_with("-90,"));
}

#[test]
fn blank_image_reports_no_direction() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("blank.png");
    write_image(&p, &kldtgv::grid::ImageGrid::filled(32, 32, 0.5)).unwrap();
    let err = cmd_estimate_direction(&p, None).unwrap_err();
    assert!(matches!(err, Error::NoDirection));
    assert!(err.to_string().contains("no dominant direction"));
}

#[test]
fn restore_picks_the_best_lambda_and_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let (obs, truth, out) = (dir.path().join("obs.png"), dir.path().join("truth.png"), dir.path().join("out.png"));
    cmd_degrade(&manifest(&[
        ("output", s(&obs)),
        ("truth", s(&truth)),
        ("size", "32"),
        ("stripes", "6"),
        ("psf", "gaussian:1"),
    ]))
    .unwrap();
    let m = manifest(&[
        ("input", s(&obs)),
        ("output", s(&out)),
        ("reference", s(&truth)),
        ("lambda_grid", "10, 57.5, 100"),
        ("kmax", "60"),
    ]);
    let r = cmd_restore(&m).unwrap();
    assert!(r.theta_estimated);
    assert_eq!(r.tuning.len(), 3);
    let best = r.tuning.iter().min_by(|a, b| a.rmse.total_cmp(&b.rmse)).unwrap();
    assert_eq!(r.lambda, best.lambda);
    assert_eq!(read_image(&out).unwrap().shape(), (32, 32));
    let csv = fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), r.report.iterations() + 1);
    assert!(csv.starts_with("iteration,objective,residual"));

    // A grid without a reference cannot be resolved.
    let m = manifest(&[("input", s(&obs)), ("output", s(&out)), ("lambda_grid", "10, 100")]);
    assert!(matches!(cmd_restore(&m), Err(Error::Manifest(_))));
}

#[test]
fn metrics_command() {
    let dir = tempfile::tempdir().unwrap();
    let (obs, truth) = (dir.path().join("obs.png"), dir.path().join("truth.png"));
    cmd_degrade(&manifest(&[("output", s(&obs)), ("truth", s(&truth)), ("size", "32")])).unwrap();
    let m = manifest(&[("input", s(&obs)), ("reference", s(&truth)), ("observed", s(&obs))]);
    let out = cmd_metrics(&m).unwrap();
    assert_eq!(out.isnr, Some(0.0));
    assert!(out.rmse.unwrap() > 0.0);
    let only = manifest(&[("input", s(&truth)), ("reference", s(&truth)), ("metrics", "mssim")]);
    let out = cmd_metrics(&only).unwrap();
    assert_eq!((out.rmse, out.isnr), (None, None));
    assert!((out.mssim.unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn benchmark_writes_one_row_per_model() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.csv");
    let m = manifest(&[
        ("output", s(&table)),
        ("size", "32"),
        ("stripes", "6"),
        ("blurs", "gaussian:1"),
        ("snrs", "40"),
        ("lambda_grid", "30, 100"),
        ("kmax", "40"),
    ]);
    let rows = cmd_benchmark(&m).unwrap();
    assert_eq!(rows.len(), 2);
    let csv = fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "Blur,SNR,Model,lambda,RMSE,ISNR,MSSIM,Iters,Time");
    assert!(lines[1].starts_with("Gaussian,40,DTGV,"));
    assert!(lines[2].starts_with("Gaussian,40,TGV,"));
}

#[test]
fn manifest_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.txt");
    fs::write(&path, "# restore settings\nlambda = 57.5\ntheta = -15\nregularizer = dtgv\n").unwrap();
    let mut m = RunManifest::from_file(&path).unwrap();
    assert!((m.theta.unwrap().to_degrees() + 15.0).abs() < 1e-12);
    m.set("lambda", "100").unwrap();
    assert_eq!(m.solver.lambda, 100.0);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_kldtgv");
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.png");

    let ok = Command::new(exe)
        .args(["degrade", "--output", s(&obs), "--size", "96", "--phantom-theta", "-20"])
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let est = Command::new(exe).args(["estimate-direction", "--input", s(&obs)]).output().unwrap();
    assert!(est.status.success());
    assert!(String::from_utf8_lossy(&est.stdout).contains("theta = -20"));

    let missing = Command::new(exe)
        .args(["restore", "--input", "/nonexistent/obs.png", "--output", "/tmp/o.png", "--lambda", "10"])
        .output()
        .unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/obs.png"));

    let bad = Command::new(exe).args(["restore", "--rho", "ten"]).output().unwrap();
    assert!(!bad.status.success());
}
