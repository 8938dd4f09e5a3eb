//! RMSE, ISNR and MSSIM of a few synthetic reconstructions, plus the jointly
//! scaled error maps.
//!
//! `cargo run --release --example quality_metrics -- [out_dir]`

use std::path::PathBuf;

use kldtgv::io::write_image;
use kldtgv::metrics::joint_error_images;
use kldtgv::prelude::*;

fn main() -> Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("kldtgv-examples"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), message: e.to_string() })?;

    let n = 96;
    let u_true = make_stripe_phantom(n, n, 1.0, StripeProfile::Constant, 8, 3)?;
    let psf = PsfChoice::OutOfFocus { radius: 4.0 };
    let b = degrade(&u_true, &DegradationConfig::new(psf, 35.0, 3), &psf.operator(n, n)?)?.b;

    // Blends between the observation and the truth stand in for restorations.
    let blend = |t: f64| ImageGrid::from_fn(n, n, |r, c| t * b.get(r, c) + (1.0 - t) * u_true.get(r, c));
    let candidates = [("observed", b.clone()), ("blend 0.5", blend(0.5)), ("blend 0.1", blend(0.1))];
    for (label, u) in &candidates {
        println!("{}", QualityRecord::evaluate(*label, &b, u, &u_true)?);
    }
    let refs: Vec<&ImageGrid> = candidates.iter().map(|(_, u)| u).collect();
    for (i, e) in joint_error_images(&refs, &u_true)?.iter().enumerate() {
        write_image(dir.join(format!("error_{i}.png")), e)?;
    }
    println!("error maps in {}", dir.display());
    Ok(())
}
