use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kldtgv::cli::{cmd_benchmark, cmd_degrade, cmd_estimate_direction, cmd_metrics, cmd_restore, RunManifest};
use kldtgv::Result;

#[derive(Parser)]
#[command(name = "kldtgv", version, about = "Directional TGV restoration of blurred Poisson images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Blur and add Poisson noise to an image (or a generated stripe phantom).
    Degrade(Opts),
    /// Print the dominant texture direction of an image.
    EstimateDirection(Opts),
    /// Restore an observed image with DTGV or TGV regularization.
    Restore(Opts),
    /// Degrade, restore and score every (blur, SNR, model) cell.
    Benchmark(Opts),
    /// RMSE, ISNR and MSSIM of an image against a reference.
    Metrics(Opts),
}

/// Each flag overrides the manifest key of the same name.
#[derive(Args)]
struct Opts {
    /// Key-value manifest file.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    observed: Option<String>,
    #[arg(long)]
    report: Option<String>,
    #[arg(long)]
    truth: Option<String>,
    /// Directory for intermediate images and tables.
    #[arg(long)]
    debug_dumps: Option<String>,
    /// gaussian:<variance>, disk:<radius> or none.
    #[arg(long)]
    psf: Option<String>,
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// Comma-separated values.
    #[arg(long)]
    lambda_grid: Option<String>,
    /// [default: 10]
    #[arg(long)]
    rho: Option<String>,
    /// [default: 2/3]
    #[arg(long)]
    beta: Option<String>,
    /// Degrees, or "auto".
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long)]
    a: Option<String>,
    /// [default: 1e-4]
    #[arg(long)]
    tol: Option<String>,
    /// [default: 500]
    #[arg(long)]
    kmax: Option<String>,
    /// [default: 1e-10]
    #[arg(long)]
    gamma: Option<String>,
    /// dtgv or tgv.
    #[arg(long)]
    regularizer: Option<String>,
    #[arg(long)]
    metrics: Option<String>,
    #[arg(long)]
    size: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    phantom_theta: Option<String>,
    #[arg(long)]
    stripes: Option<String>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    blurs: Option<String>,
    #[arg(long)]
    snrs: Option<String>,
    #[arg(long)]
    models: Option<String>,
}

impl Opts {
    fn manifest(&self) -> Result<RunManifest> {
        let mut m = match &self.manifest {
            Some(p) => RunManifest::from_file(p)?,
            None => RunManifest::default(),
        };
        let flags = [
            ("input", &self.input),
            ("output", &self.output),
            ("reference", &self.reference),
            ("observed", &self.observed),
            ("report", &self.report),
            ("truth", &self.truth),
            ("debug_dumps", &self.debug_dumps),
            ("psf", &self.psf),
            ("snr", &self.snr),
            ("seed", &self.seed),
            ("lambda", &self.lambda),
            ("lambda_grid", &self.lambda_grid),
            ("rho", &self.rho),
            ("beta", &self.beta),
            ("theta", &self.theta),
            ("a", &self.a),
            ("tol", &self.tol),
            ("kmax", &self.kmax),
            ("gamma", &self.gamma),
            ("regularizer", &self.regularizer),
            ("metrics", &self.metrics),
            ("size", &self.size),
            ("phantom_theta", &self.phantom_theta),
            ("stripes", &self.stripes),
            ("profile", &self.profile),
            ("blurs", &self.blurs),
            ("snrs", &self.snrs),
            ("models", &self.models),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                m.set(key, v)?;
            }
        }
        Ok(m)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Degrade(o) => println!("{}", cmd_degrade(&o.manifest()?)?),
        Command::EstimateDirection(o) => {
            let m = o.manifest()?;
            let input = m
                .input
                .as_deref()
                .ok_or_else(|| kldtgv::Error::Manifest("'input' is required".into()))?;
            let est = cmd_estimate_direction(input, m.debug_dumps.as_deref())?;
            println!("theta = {:.2} deg ({:.6} rad)", est.theta_degrees(), est.theta);
        }
        Command::Restore(o) => println!("{}", cmd_restore(&o.manifest()?)?),
        Command::Benchmark(o) => {
            println!("{}", kldtgv::cli::BenchmarkRow::CSV_HEADER);
            for row in cmd_benchmark(&o.manifest()?)? {
                println!("{}", row.to_csv_row());
            }
        }
        Command::Metrics(o) => println!("{}", cmd_metrics(&o.manifest()?)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
