//! Recovers the stripe direction of noisy, blurred phantoms.
//!
//! `cargo run --release --example estimate_direction -- [angle_deg ...]`

use kldtgv::direction::{direction_error_degrees, estimate_direction_traced, DirectionConfig};
use kldtgv::prelude::*;

fn main() -> Result<()> {
    let angles: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("angle in degrees"))
        .collect();
    let angles = if angles.is_empty() { vec![-60.0, 0.0, 17.0, 45.0, 90.0] } else { angles };
    let n = 256;
    let psf = PsfChoice::OutOfFocus { radius: 7.0 };
    let blur = psf.operator(n, n)?;
    for (i, deg) in angles.into_iter().enumerate() {
        let u = make_stripe_phantom(n, n, deg.to_radians(), StripeProfile::Constant, 14, i as u64)?;
        let b = degrade(&u, &DegradationConfig::new(psf, 37.0, i as u64), &blur)?.b;
        let trace = estimate_direction_traced(&b, &DirectionConfig::default())?;
        let est = &trace.estimate;
        println!(
            "true {deg:6.1}  estimated {:6.1}  error {:.1} deg  ({} edge pixels inside the disk, eta_max {})",
            est.theta_degrees(),
            direction_error_degrees(est.theta, deg.to_radians()),
            trace.masked.flagged_count(),
            est.eta_max
        );
    }
    Ok(())
}
