//! Batch commands behind the `kldtgv` binary.
//!
//! Every command reads a [`RunManifest`]: a flat `key = value` file whose
//! entries can each be overridden from the command line. Angles are given in
//! degrees.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::admm::{run_admm, Background, Regularizer, SolveReport, SolverConfig};
use crate::degrade::{degrade, make_stripe_phantom, DegradationConfig, PsfChoice, StripeProfile, DEFAULT_GAMMA};
use crate::direction::{estimate_direction, estimate_direction_traced, DirectionConfig, DirectionEstimate, ETA_MIN};
use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::io::{read_image, read_key_values, write_image, write_key_values};
use crate::metrics::{isnr, mssim, rmse};

/// Default `λ` grid for tuning when none is given: seven points, half a
/// decade apart.
pub const DEFAULT_LAMBDA_GRID: [f64; 7] = [1e2, 3.16e2, 1e3, 3.16e3, 1e4, 3.16e4, 1e5];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Rmse,
    Isnr,
    Mssim,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rmse" => Ok(Metric::Rmse),
            "isnr" => Ok(Metric::Isnr),
            "mssim" | "ssim" => Ok(Metric::Mssim),
            other => Err(Error::Manifest(format!("unknown metric '{other}'"))),
        }
    }
}

/// Everything a command needs: paths, degradation and solver settings,
/// the `λ` grid and the benchmark sweep.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub observed: Option<PathBuf>,
    pub report: Option<PathBuf>,
    /// Where `degrade` writes the clean image it used.
    pub truth: Option<PathBuf>,
    pub debug_dumps: Option<PathBuf>,

    pub psf: Option<PsfChoice>,
    pub snr: f64,
    pub seed: u64,

    pub solver: SolverConfig,
    pub lambda_given: bool,
    pub lambda_grid: Vec<f64>,
    /// Radians; `None` means estimate from the data.
    pub theta: Option<f64>,
    pub metrics: Vec<Metric>,

    pub size: usize,
    pub phantom_theta: f64,
    pub stripes: usize,
    pub profile: StripeProfile,

    pub blurs: Vec<PsfChoice>,
    pub snrs: Vec<f64>,
    pub models: Vec<Regularizer>,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            input: None,
            output: None,
            reference: None,
            observed: None,
            report: None,
            truth: None,
            debug_dumps: None,
            psf: None,
            snr: 43.0,
            seed: 0,
            solver: SolverConfig::default(),
            lambda_given: false,
            lambda_grid: Vec::new(),
            theta: None,
            metrics: vec![Metric::Rmse, Metric::Isnr, Metric::Mssim],
            size: 256,
            phantom_theta: 30f64.to_radians(),
            stripes: 14,
            profile: StripeProfile::Constant,
            blurs: vec![PsfChoice::OutOfFocus { radius: 5.0 }, PsfChoice::Gaussian { variance: 2.0 }],
            snrs: vec![43.0, 37.0],
            models: vec![Regularizer::Dtgv, Regularizer::Tgv],
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Manifest(format!("bad value '{value}' for '{key}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_with<T>(value: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
}

impl RunManifest {
    /// Recognized keys, in the order `to_text` writes them.
    pub const KEYS: &'static [&'static str] = &[
        "input", "output", "reference", "observed", "report", "truth", "debug_dumps", "psf", "snr", "seed",
        "lambda", "lambda_grid", "rho", "beta", "theta", "a", "tol", "kmax", "gamma", "regularizer", "metrics",
        "size", "phantom_theta", "stripes", "profile", "blurs", "snrs", "models",
    ];

    pub fn from_text(text: &str) -> Result<Self> {
        let mut m = Self::default();
        for (k, v) in crate::io::parse_key_values(text)? {
            m.set(&k, &v)?;
        }
        Ok(m)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut m = Self::default();
        for (k, v) in read_key_values(path)? {
            m.set(&k, &v)?;
        }
        Ok(m)
    }

    /// Sets one entry, as if it appeared in a manifest file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let path = || Some(PathBuf::from(value.trim()));
        match key.trim().replace('-', "_").as_str() {
            "input" => self.input = path(),
            "output" => self.output = path(),
            "reference" => self.reference = path(),
            "observed" => self.observed = path(),
            "report" => self.report = path(),
            "truth" => self.truth = path(),
            "debug_dumps" => self.debug_dumps = path(),
            "psf" => self.psf = Some(value.parse()?),
            "snr" => self.snr = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "lambda" => {
                self.solver.lambda = parse(key, value)?;
                self.lambda_given = true;
            }
            "lambda_grid" => self.lambda_grid = parse_list(key, value)?,
            "rho" => self.solver.rho = parse(key, value)?,
            "beta" => {
                let beta: f64 = parse(key, value)?;
                self.solver = self.solver.clone().with_beta(beta);
            }
            "theta" => {
                let v = value.trim();
                self.theta = if v.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse::<f64>(key, v)?.to_radians())
                };
            }
            "a" => self.solver.a = parse(key, value)?,
            "tol" => self.solver.tol = parse(key, value)?,
            "kmax" | "k_max" => self.solver.k_max = parse(key, value)?,
            "gamma" => self.solver.gamma = Background::Constant(parse(key, value)?),
            "regularizer" => self.solver.regularizer = value.parse()?,
            "metrics" => self.metrics = parse_with(value, Metric::from_str)?,
            "size" => self.size = parse(key, value)?,
            "phantom_theta" => self.phantom_theta = parse::<f64>(key, value)?.to_radians(),
            "stripes" => self.stripes = parse(key, value)?,
            "profile" => self.profile = value.parse()?,
            "blurs" => self.blurs = parse_with(value, PsfChoice::from_str)?,
            "snrs" => self.snrs = parse_list(key, value)?,
            "models" => self.models = parse_with(value, Regularizer::from_str)?,
            other => return Err(Error::Manifest(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Fails with the offending path if an input file is missing.
    pub fn check_inputs(&self) -> Result<()> {
        for p in [&self.input, &self.reference, &self.observed].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::io(p, "no such file"));
            }
        }
        Ok(())
    }

    fn require<'a>(&self, field: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        field
            .as_deref()
            .ok_or_else(|| Error::Manifest(format!("'{key}' is required")))
    }

    fn gamma_const(&self) -> f64 {
        match &self.solver.gamma {
            Background::Constant(g) => *g,
            Background::PerPixel(_) => DEFAULT_GAMMA,
        }
    }

    /// The image named by `input`, or a stripe phantom when none is given.
    pub fn source_image(&self) -> Result<ImageGrid> {
        match &self.input {
            Some(p) => read_image(p),
            None => make_stripe_phantom(self.size, self.size, self.phantom_theta, self.profile, self.stripes, self.seed),
        }
    }
}

/// `<path>.meta`, the key-value record written next to a degraded image.
pub fn sidecar_path(image: &Path) -> PathBuf {
    let mut s = image.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes `img` and removes it again if `then` fails, so no half-finished
/// output is left behind.
fn write_with<F: FnOnce() -> Result<()>>(path: &Path, img: &ImageGrid, then: F) -> Result<()> {
    write_image(path, img)?;
    then().inspect_err(|_| {
        let _ = fs::remove_file(path);
    })
}

#[derive(Clone, Debug)]
pub struct DegradeOutcome {
    pub u_true: ImageGrid,
    pub b: ImageGrid,
    pub scale: f64,
    pub snr: f64,
}

impl fmt::Display for DegradeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "scale {:.6e}, pre-noise SNR {:.3} dB", self.scale, self.snr)
    }
}

/// Blurs and corrupts the source image, then writes the result and its
/// `.meta` record.
pub fn cmd_degrade(m: &RunManifest) -> Result<DegradeOutcome> {
    m.check_inputs()?;
    let output = m.require(&m.output, "output")?;
    let u_true = m.source_image()?;
    let psf = m.psf.unwrap_or(PsfChoice::OutOfFocus { radius: 5.0 });
    let blur = psf.operator(u_true.height(), u_true.width())?;
    let config = DegradationConfig {
        gamma_const: m.gamma_const(),
        ..DegradationConfig::new(psf, m.snr, m.seed)
    };
    let d = degrade(&u_true, &config, &blur)?;

    let source = match &m.input {
        Some(p) => p.display().to_string(),
        None => format!(
            "phantom size={} theta={} stripes={} profile={:?}",
            m.size,
            m.phantom_theta.to_degrees(),
            m.stripes,
            m.profile
        ),
    };
    let meta = [
        ("source", source),
        ("psf", psf.to_string()),
        ("snr", m.snr.to_string()),
        ("snr_realized", d.snr.to_string()),
        ("scale", d.scale.to_string()),
        ("gamma", config.gamma_const.to_string()),
        ("seed", m.seed.to_string()),
    ];
    write_with(output, &d.b, || write_key_values(sidecar_path(output), &meta))?;
    if let Some(t) = &m.truth {
        write_image(t, &u_true)?;
    }
    Ok(DegradeOutcome {
        u_true,
        b: d.b,
        scale: d.scale,
        snr: d.snr,
    })
}

/// Estimates the dominant direction of an image. With `debug_dir`, also
/// writes the edge map, the masked edge map, the Hough accumulator and a
/// per-angle score table.
pub fn cmd_estimate_direction(image: &Path, debug_dir: Option<&Path>) -> Result<DirectionEstimate> {
    let b = read_image(image)?;
    let Some(dir) = debug_dir else {
        return estimate_direction(&b);
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let trace = estimate_direction_traced(&b, &DirectionConfig::default())?;
    let mag = trace.edges.magnitude_image();
    let peak = mag.max();
    write_image(dir.join("edges.png"), &mag.scaled(if peak > 0.0 { 1.0 / peak } else { 1.0 }))?;
    write_image(dir.join("edges_masked.png"), &trace.masked.flag_image())?;
    let acc = trace.accumulator.to_image();
    let peak = acc.max();
    write_image(dir.join("hough.png"), &acc.scaled(if peak > 0.0 { 1.0 / peak } else { 1.0 }))?;
    let mut csv = String::from("eta,score\n");
    for (j, s) in trace.estimate.scores.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", ETA_MIN + j as i32, s));
    }
    let path = dir.join("scores.csv");
    fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    Ok(trace.estimate)
}

/// One `λ` of a tuning sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct TuningPoint {
    pub lambda: f64,
    pub rmse: f64,
}

#[derive(Clone, Debug)]
pub struct RestoreOutcome {
    pub u: ImageGrid,
    pub report: SolveReport,
    pub lambda: f64,
    /// Radians, as used by the solver.
    pub theta: f64,
    pub theta_estimated: bool,
    pub tuning: Vec<TuningPoint>,
}

impl fmt::Display for RestoreOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tuning {
            writeln!(f, "lambda {:.6e}: RMSE {:.6e}", t.lambda, t.rmse)?;
        }
        write!(
            f,
            "lambda {:.6e}, theta {:.2} deg{}, {} iterations ({}), {:.2} s",
            self.lambda,
            self.theta.to_degrees(),
            if self.theta_estimated { " (estimated)" } else { "" },
            self.report.iterations(),
            self.report.stop_reason,
            self.report.total_seconds()
        )
    }
}

/// PSF for restoring `input`: the manifest's, else the one recorded by `degrade`.
fn restore_psf(m: &RunManifest, input: &Path) -> Result<PsfChoice> {
    if let Some(p) = m.psf {
        return Ok(p);
    }
    let meta = sidecar_path(input);
    if meta.exists() {
        if let Some(p) = read_key_values(&meta)?.get("psf") {
            return p.parse();
        }
    }
    Err(Error::Manifest(format!(
        "no 'psf' given and {} does not record one",
        meta.display()
    )))
}

/// Restores one observation. Returns `(u, report, λ, tuning points)`.
fn restore_core(
    b: &ImageGrid,
    psf: PsfChoice,
    solver: &SolverConfig,
    lambdas: &[f64],
    reference: Option<&ImageGrid>,
) -> Result<(ImageGrid, SolveReport, f64, Vec<TuningPoint>)> {
    let blur = psf.operator(b.height(), b.width())?;
    let ops = solver.operators(blur)?;
    let mut best: Option<(ImageGrid, SolveReport, f64, f64)> = None;
    let mut tuning = Vec::new();
    for &lambda in lambdas {
        let config = SolverConfig {
            lambda,
            ..solver.clone()
        };
        let (u, report) = run_admm(b, &config, &ops)?;
        let score = match reference {
            Some(r) => rmse(&u, r)?,
            None => f64::NAN,
        };
        if reference.is_some() {
            tuning.push(TuningPoint { lambda, rmse: score });
        }
        if best.as_ref().is_none_or(|(.., s)| score < *s) {
            best = Some((u, report, lambda, score));
        }
    }
    let (u, report, lambda, _) = best.ok_or_else(|| Error::Manifest("empty lambda grid".into()))?;
    Ok((u, report, lambda, tuning))
}

/// Restores `input`, writing the image and the iteration report.
///
/// With a `λ` grid and a reference image every grid point is run and the
/// smallest-RMSE result is kept; without a reference a single `λ` is needed.
pub fn cmd_restore(m: &RunManifest) -> Result<RestoreOutcome> {
    m.check_inputs()?;
    let input = m.require(&m.input, "input")?;
    let output = m.require(&m.output, "output")?;
    let b = read_image(input)?;
    let reference = m.reference.as_deref().map(read_image).transpose()?;
    let psf = restore_psf(m, input)?;

    let lambdas: Vec<f64> = if !m.lambda_grid.is_empty() {
        if reference.is_none() && m.lambda_grid.len() > 1 {
            return Err(Error::Manifest("a lambda grid needs a 'reference' image to choose from".into()));
        }
        m.lambda_grid.clone()
    } else if m.lambda_given {
        vec![m.solver.lambda]
    } else {
        return Err(Error::Manifest("give 'lambda' or 'lambda_grid'".into()));
    };

    let mut solver = m.solver.clone();
    let mut theta_estimated = false;
    if solver.regularizer == Regularizer::Dtgv {
        solver.theta = match m.theta {
            Some(t) => t,
            None => {
                theta_estimated = true;
                estimate_direction(&b)?.theta
            }
        };
    }
    let (u, report, lambda, tuning) = restore_core(&b, psf, &solver, &lambdas, reference.as_ref())?;

    let report_path = m.report.clone().unwrap_or_else(|| output.with_extension("csv"));
    let csv = report.to_csv();
    write_with(output, &u, || fs::write(&report_path, csv).map_err(|e| Error::io(&report_path, e)))?;
    Ok(RestoreOutcome {
        u,
        report,
        lambda,
        theta: solver.directional_spec().theta,
        theta_estimated,
        tuning,
    })
}

/// One line of a benchmark table.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRow {
    pub blur: String,
    pub snr: f64,
    pub model: Regularizer,
    pub lambda: f64,
    pub rmse: f64,
    pub isnr: f64,
    pub mssim: f64,
    pub iterations: usize,
    /// Seconds spent in the ADMM loop.
    pub time: f64,
}

impl BenchmarkRow {
    pub const CSV_HEADER: &'static str = "Blur,SNR,Model,lambda,RMSE,ISNR,MSSIM,Iters,Time";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6e},{:.6e},{:.4},{:.6},{},{:.3}",
            self.blur, self.snr, self.model, self.lambda, self.rmse, self.isnr, self.mssim, self.iterations, self.time
        )
    }
}

/// Runs degrade, estimate, restore and evaluate for every
/// (blur, SNR, model) cell. Models within a cell see the same noisy data.
pub fn cmd_benchmark(m: &RunManifest) -> Result<Vec<BenchmarkRow>> {
    m.check_inputs()?;
    let u_true = m.source_image()?;
    let (h, w) = u_true.shape();
    let lambdas: Vec<f64> = if !m.lambda_grid.is_empty() {
        m.lambda_grid.clone()
    } else if m.lambda_given {
        vec![m.solver.lambda]
    } else {
        DEFAULT_LAMBDA_GRID.to_vec()
    };

    let mut rows = Vec::new();
    for &psf in &m.blurs {
        let blur = psf.operator(h, w)?;
        for &snr in &m.snrs {
            let config = DegradationConfig {
                gamma_const: m.gamma_const(),
                ..DegradationConfig::new(psf, snr, m.seed)
            };
            let b = degrade(&u_true, &config, &blur)?.b;
            let theta = match m.theta {
                Some(t) => t,
                None => estimate_direction(&b)?.theta,
            };
            for &model in &m.models {
                let solver = SolverConfig {
                    regularizer: model,
                    theta,
                    ..m.solver.clone()
                };
                let (u, report, lambda, _) = restore_core(&b, psf, &solver, &lambdas, Some(&u_true))?;
                rows.push(BenchmarkRow {
                    blur: psf.label().to_string(),
                    snr,
                    model,
                    lambda,
                    rmse: rmse(&u, &u_true)?,
                    isnr: isnr(&b, &u, &u_true)?,
                    mssim: mssim(&u, &u_true)?,
                    iterations: report.iterations(),
                    time: report.records.iter().map(|r| r.seconds).sum(),
                });
            }
        }
    }
    if let Some(out) = &m.output {
        let mut csv = String::from(BenchmarkRow::CSV_HEADER);
        csv.push('\n');
        for r in &rows {
            csv.push_str(&r.to_csv_row());
            csv.push('\n');
        }
        fs::write(out, csv).map_err(|e| Error::io(out, e))?;
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsOutcome {
    pub rmse: Option<f64>,
    pub isnr: Option<f64>,
    pub mssim: Option<f64>,
}

impl fmt::Display for MetricsOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut lines = Vec::new();
        if let Some(v) = self.rmse {
            lines.push(format!("RMSE  {v:.6e}"));
        }
        if let Some(v) = self.isnr {
            lines.push(format!("ISNR  {v:.4} dB"));
        }
        if let Some(v) = self.mssim {
            lines.push(format!("MSSIM {v:.6}"));
        }
        f.write_str(&lines.join("\n"))
    }
}

/// Compares `input` against `reference`. ISNR also needs `observed`.
pub fn cmd_metrics(m: &RunManifest) -> Result<MetricsOutcome> {
    m.check_inputs()?;
    let u = read_image(m.require(&m.input, "input")?)?;
    let u_ref = read_image(m.require(&m.reference, "reference")?)?;
    let want = |k| m.metrics.contains(&k);
    let isnr_value = match (&m.observed, want(Metric::Isnr)) {
        (Some(p), true) => Some(isnr(&read_image(p)?, &u, &u_ref)?),
        (None, true) if m.metrics == [Metric::Isnr] => {
            return Err(Error::Manifest("ISNR needs the 'observed' image".into()))
        }
        _ => None,
    };
    Ok(MetricsOutcome {
        rmse: want(Metric::Rmse).then(|| rmse(&u, &u_ref)).transpose()?,
        isnr: isnr_value,
        mssim: want(Metric::Mssim).then(|| mssim(&u, &u_ref)).transpose()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_keys_round_trip() {
        let m = RunManifest::from_text(
            "lambda = 57.5\nlambda_grid = 10, 57.5, 100\ntheta = 30\nregularizer = tgv\nbeta = 0.5\nblurs = disk:7, gaussian:2\nkmax = 20\n",
        )
        .unwrap();
        assert!(m.lambda_given);
        assert_eq!(m.solver.lambda, 57.5);
        assert_eq!(m.lambda_grid, vec![10.0, 57.5, 100.0]);
        assert!((m.theta.unwrap() - 30f64.to_radians()).abs() < 1e-15);
        assert_eq!(m.solver.regularizer, Regularizer::Tgv);
        assert_eq!((m.solver.alpha0, m.solver.alpha1), (0.5, 0.5));
        assert_eq!(m.blurs[0], PsfChoice::OutOfFocus { radius: 7.0 });
        assert_eq!(m.solver.k_max, 20);
        assert!(RunManifest::from_text("colour = blue\n").is_err());
        assert!(RunManifest::from_text("rho = ten\n").is_err());
    }

    #[test]
    fn every_listed_key_is_accepted() {
        let mut m = RunManifest::default();
        for k in RunManifest::KEYS {
            let v = match *k {
                "psf" => "disk:3",
                "blurs" => "gaussian:1",
                "regularizer" | "models" => "dtgv",
                "metrics" => "rmse",
                "profile" => "affine",
                "lambda_grid" | "snrs" => "1,2",
                "beta" => "0.5",
                "tol" => "0.001",
                _ => "3",
            };
            m.set(k, v).unwrap_or_else(|e| panic!("{k}: {e}"));
        }
    }

    #[test]
    fn sidecar_is_appended() {
        assert_eq!(sidecar_path(Path::new("out/b.png")), PathBuf::from("out/b.png.meta"));
    }
}
