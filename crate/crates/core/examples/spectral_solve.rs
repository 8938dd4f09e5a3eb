//! The `x`-subproblem on its own: factor once, solve `min ‖Hx − v‖²` in the
//! Fourier domain, and check the normal equations.
//!
//! `cargo run --release --example spectral_solve`

use std::time::Instant;

use kldtgv::admm::{precompute_factors, solve_x_subproblem};
use kldtgv::grid::SplitVector;
use kldtgv::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let (h, w) = (256, 256);
    let blur = PsfChoice::Gaussian { variance: 2.0 }.operator(h, w)?;
    let ops = Operators::directional(blur, DirectionalSpec::new(0.6, 4.0)?)?;

    let t = Instant::now();
    let factors = precompute_factors(&ops)?;
    println!("factors for {h}x{w}: {:.1} ms", t.elapsed().as_secs_f64() * 1e3);

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut v = SplitVector::zeros(h, w);
    for part in v.parts_mut() {
        part.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
    }
    let t = Instant::now();
    let (u, f) = solve_x_subproblem(&v, &factors, &ops)?;
    println!("solve: {:.1} ms", t.elapsed().as_secs_f64() * 1e3);

    // HᵀH x and Hᵀ v should agree.
    let (lu, lf) = ops.apply_h_adjoint(&ops.apply_h(&u, &f)?)?;
    let (ru, rf) = ops.apply_h_adjoint(&v)?;
    let err = lu
        .data()
        .iter()
        .chain(lf.data())
        .zip(ru.data().iter().chain(rf.data()))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("max |HᵀHx − Hᵀv| = {err:.2e}");
    Ok(())
}
