//! Degrade, estimate the direction, restore with the directional model and
//! score the result.
//!
//! `cargo run --release --example restore_dtgv -- [lambda]`

use kldtgv::prelude::*;

fn main() -> Result<()> {
    let lambda: f64 = std::env::args().nth(1).map_or(3000.0, |s| s.parse().expect("lambda"));
    let n = 128;
    let u_true = make_stripe_phantom(n, n, 30f64.to_radians(), StripeProfile::Constant, 14, 7)?;
    let psf = PsfChoice::OutOfFocus { radius: 5.0 };
    let blur = psf.operator(n, n)?;
    let b = degrade(&u_true, &DegradationConfig::new(psf, 43.0, 7), &blur)?.b;

    let estimate = estimate_direction(&b)?;
    let config = SolverConfig {
        lambda,
        theta: estimate.theta,
        ..Default::default()
    };
    let (u, report) = run_admm(&b, &config, &config.operators(blur)?)?;

    println!("direction {:.1} deg", estimate.theta_degrees());
    println!(
        "{} iterations ({}), objective {:.4e} -> {:.4e}, residual {:.2e}, {:.2} s",
        report.iterations(),
        report.stop_reason,
        report.initial_objective,
        report.final_objective(),
        report.final_residual(),
        report.total_seconds()
    );
    println!("{}", QualityRecord::evaluate("observed", &b, &b, &u_true)?);
    println!("{}", QualityRecord::evaluate("restored", &b, &u, &u_true)?);
    Ok(())
}
