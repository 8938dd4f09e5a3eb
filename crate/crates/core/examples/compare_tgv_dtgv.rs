//! Tunes `λ` for TGV² and the directional model on the same observation and
//! compares the best results of each.
//!
//! `cargo run --release --example compare_tgv_dtgv`

use kldtgv::cli::DEFAULT_LAMBDA_GRID;
use kldtgv::metrics::QualityRecord;
use kldtgv::prelude::*;

fn main() -> Result<()> {
    let n = 128;
    let u_true = make_stripe_phantom(n, n, 30f64.to_radians(), StripeProfile::Constant, 14, 7)?;
    let psf = PsfChoice::Gaussian { variance: 2.0 };
    let blur = psf.operator(n, n)?;
    let b = degrade(&u_true, &DegradationConfig::new(psf, 37.0, 7), &blur)?.b;
    let theta = estimate_direction(&b)?.theta;

    println!("{}", QualityRecord::CSV_HEADER);
    println!("{}", QualityRecord::evaluate("observed", &b, &b, &u_true)?.to_csv_row());
    for model in [Regularizer::Tgv, Regularizer::Dtgv] {
        let base = SolverConfig {
            regularizer: model,
            theta,
            ..Default::default()
        };
        let ops = base.operators(blur.clone())?;
        let mut best: Option<(f64, ImageGrid)> = None;
        for lambda in DEFAULT_LAMBDA_GRID {
            let (u, _) = run_admm(&b, &SolverConfig { lambda, ..base.clone() }, &ops)?;
            let e = rmse(&u, &u_true)?;
            eprintln!("{model} lambda {lambda:.3e}: RMSE {e:.4e}");
            if best.as_ref().is_none_or(|(be, _)| e < *be) {
                best = Some((e, u));
            }
        }
        let (_, u) = best.expect("nonempty grid");
        println!("{}", QualityRecord::evaluate(model.to_string(), &b, &u, &u_true)?.to_csv_row());
    }
    Ok(())
}
