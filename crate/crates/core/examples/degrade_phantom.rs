//! Generates a stripe phantom, blurs it and adds Poisson noise.
//!
//! `cargo run --release --example degrade_phantom -- [out_dir] [snr_db]`

use std::path::PathBuf;

use kldtgv::io::write_image;
use kldtgv::prelude::*;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("kldtgv-examples"));
    let snr: f64 = args.next().map_or(43.0, |s| s.parse().expect("SNR in dB"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), message: e.to_string() })?;

    let n = 256;
    let u = make_stripe_phantom(n, n, 30f64.to_radians(), StripeProfile::Affine, 14, 1)?;
    for psf in [PsfChoice::OutOfFocus { radius: 5.0 }, PsfChoice::Gaussian { variance: 2.0 }] {
        let d = degrade(&u, &DegradationConfig::new(psf, snr, 1), &psf.operator(n, n)?)?;
        let path = dir.join(format!("observed_{}.png", psf.label().to_lowercase()));
        write_image(&path, &d.b)?;
        println!(
            "{psf}: photon scale {:.3e}, SNR {:.2} dB, RMSE to truth {:.4} -> {}",
            d.scale,
            d.snr,
            rmse(&d.b, &u)?,
            path.display()
        );
    }
    write_image(dir.join("truth.png"), &u)?;
    Ok(())
}
