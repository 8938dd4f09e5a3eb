mod common;

use kldtgv::admm::{precompute_factors, solve_x_subproblem};
use kldtgv::fft::Fft2;
use kldtgv::grid::{ImageGrid, SplitVector, StackedField2, StackedField4};
use kldtgv::operators::{make_forward_diff_spectra, norm21, BccbOperator, DirectionalSpec, Operators};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn split_dot(a: &SplitVector, b: &SplitVector) -> f64 {
    a.parts().iter().zip(b.parts()).map(|(x, y)| dot(x, y)).sum()
}

fn random_ops(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Operators {
    let blur = common::random_blur(rng, h, w);
    let spec = DirectionalSpec {
        theta: rng.random_range(-3.0..3.0),
        a: rng.random_range(0.2..5.0),
    };
    Operators::directional(blur, spec).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn h_adjoint_identity(seed in any::<u64>(), h in 3usize..9, w in 3usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops = random_ops(&mut rng, h, w);
        let u = common::random_image(&mut rng, h, w, -1.0, 1.0);
        let f = StackedField2::new(h, w, (0..2 * h * w).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let v = common::random_split(&mut rng, h, w);
        let lhs = split_dot(&ops.apply_h(&u, &f).unwrap(), &v);
        let (au, af) = ops.apply_h_adjoint(&v).unwrap();
        let rhs = dot(u.data(), au.data()) + dot(f.data(), af.data());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn component_adjoints(seed in any::<u64>(), h in 3usize..9, w in 3usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops = random_ops(&mut rng, h, w);
        let u = common::random_image(&mut rng, h, w, -1.0, 1.0);
        let v = common::random_image(&mut rng, h, w, -1.0, 1.0);
        let tol = 1e-10;

        let lhs = dot(ops.apply_blur(&u).unwrap().data(), v.data());
        let rhs = dot(u.data(), ops.apply_blur_adjoint(&v).unwrap().data());
        prop_assert!((lhs - rhs).abs() < tol);

        let g = StackedField2::new(h, w, (0..2 * h * w).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let lhs = dot(ops.apply_grad(&u).unwrap().data(), g.data());
        let rhs = dot(u.data(), ops.apply_grad_adjoint(&g).unwrap().data());
        prop_assert!((lhs - rhs).abs() < tol);

        let y = StackedField4::new(h, w, (0..4 * h * w).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let lhs = dot(ops.apply_sym_derivative(&g).unwrap().data(), y.data());
        let rhs = dot(g.data(), ops.apply_sym_derivative_adjoint(&y).unwrap().data());
        prop_assert!((lhs - rhs).abs() < tol);
    }

    #[test]
    fn norm21_is_a_norm(seed in any::<u64>(), s in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mk = |rng: &mut ChaCha8Rng| StackedField4::new(3, 4, (0..48).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let (x, y) = (mk(&mut rng), mk(&mut rng));
        let sum = StackedField4::new(3, 4, x.data().iter().zip(y.data()).map(|(a, b)| a + b).collect()).unwrap();
        prop_assert!(norm21(&sum) <= norm21(&x) + norm21(&y) + 1e-12);
        prop_assert!((norm21(&x.scaled(s)) - s.abs() * norm21(&x)).abs() < 1e-10);
        prop_assert!(norm21(&x) >= 0.0);
    }

    #[test]
    fn x_solve_matches_dense_normal_equations(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (h, w) = (rng.random_range(3..6), rng.random_range(3..6));
        let ops = random_ops(&mut rng, h, w);
        let v = common::random_split(&mut rng, h, w);
        let (u, f) = solve_x_subproblem(&v, &precompute_factors(&ops).unwrap(), &ops).unwrap();
        let dense = common::dense_x_solve(&ops, &v);
        for (a, b) in u.data().iter().chain(f.data()).zip(&dense) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn forward_differences_on_a_ramp() {
    // Interior forward differences of 2r + 3c are (3, 2); the last column
    // and row wrap around.
    let (h, w) = (5, 6);
    let u = ImageGrid::from_fn(h, w, |r, c| 2.0 * r as f64 + 3.0 * c as f64);
    let ops = Operators::tgv(BccbOperator::identity(h, w)).unwrap();
    let g = ops.apply_grad(&u).unwrap();
    let (dh, dv) = (g.block_image(0), g.block_image(1));
    for r in 0..h {
        for c in 0..w {
            let want_h = if c + 1 < w { 3.0 } else { -3.0 * (w - 1) as f64 };
            let want_v = if r + 1 < h { 2.0 } else { -2.0 * (h - 1) as f64 };
            assert!((dh.get(r, c) - want_h).abs() < 1e-10);
            assert!((dv.get(r, c) - want_v).abs() < 1e-10);
        }
    }
}

#[test]
fn unit_spec_reduces_to_plain_differences() {
    let (dh, dv) = make_forward_diff_spectra(6, 7).unwrap();
    let ops = Operators::directional(BccbOperator::identity(6, 7), DirectionalSpec::default()).unwrap();
    assert_eq!(ops.d_theta().spectrum(), dh.spectrum());
    assert_eq!(ops.d_perp().spectrum(), dv.spectrum());
}

#[test]
fn directional_derivative_vanishes_along_the_direction() {
    // A function of r only is constant along the horizontal direction.
    let (h, w) = (8, 8);
    let u = ImageGrid::from_fn(h, w, |r, _| (r as f64).sin());
    let ops = Operators::directional(BccbOperator::identity(h, w), DirectionalSpec::new(0.0, 3.0).unwrap()).unwrap();
    let g = ops.apply_grad(&u).unwrap();
    assert!(g.block(0).iter().all(|v| v.abs() < 1e-12));
    assert!(g.block(1).iter().any(|v| v.abs() > 0.1));
    // Vertical direction: functions of c only.
    let u = ImageGrid::from_fn(h, w, |_, c| (c as f64).cos());
    let ops = Operators::directional(
        BccbOperator::identity(h, w),
        DirectionalSpec::new(std::f64::consts::FRAC_PI_2, 3.0).unwrap(),
    )
    .unwrap();
    assert!(ops.apply_grad(&u).unwrap().block(0).iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn anisotropy_scales_the_perpendicular_derivative() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = common::random_image(&mut rng, 6, 6, 0.0, 1.0);
    let g1 = Operators::directional(BccbOperator::identity(6, 6), DirectionalSpec::new(0.7, 1.0).unwrap())
        .unwrap()
        .apply_grad(&u)
        .unwrap();
    let g3 = Operators::directional(BccbOperator::identity(6, 6), DirectionalSpec::new(0.7, 3.0).unwrap())
        .unwrap()
        .apply_grad(&u)
        .unwrap();
    for (a, b) in g1.block(0).iter().zip(g3.block(0)) {
        assert!((a - b).abs() < 1e-12);
    }
    for (a, b) in g1.block(1).iter().zip(g3.block(1)) {
        assert!((3.0 * a - b).abs() < 1e-12);
    }
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(DirectionalSpec::new(0.0, 0.0).is_err());
    assert!(DirectionalSpec::new(0.0, -1.0).is_err());
    assert!(DirectionalSpec::new(f64::NAN, 1.0).is_err());
}

#[test]
fn fft_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (h, w) in [(1, 1), (1, 7), (9, 1), (17, 33), (64, 40)] {
        let fft = Fft2::new(h, w);
        let x: Vec<f64> = (0..h * w).map(|_| rng.random_range(-1.0..1.0)).collect();
        let back = fft.inverse_real(fft.forward_real(&x), 1.0);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn stencil_and_spectrum_agree_with_direct_convolution() {
    // Circular convolution with a 3-tap horizontal kernel, done by hand.
    let (h, w) = (4, 5);
    let op = BccbOperator::from_stencil(h, w, &[(0, -1, 0.25), (0, 0, 0.5), (0, 1, 0.25)]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u = common::random_image(&mut rng, h, w, 0.0, 1.0);
    let out = op.apply(&Fft2::new(h, w), &u).unwrap();
    for r in 0..h {
        for c in 0..w {
            let want = 0.25 * u.get(r, (c + w - 1) % w) + 0.5 * u.get(r, c) + 0.25 * u.get(r, (c + 1) % w);
            assert!((out.get(r, c) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn shape_mismatch_is_an_error() {
    let ops = Operators::tgv(BccbOperator::identity(4, 4)).unwrap();
    assert!(ops.apply_blur(&ImageGrid::zeros(4, 5)).is_err());
    assert!(ops.apply_h(&ImageGrid::zeros(4, 4), &StackedField2::zeros(5, 4)).is_err());
}
