//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use kldtgv::degrade::PsfKernel;
use kldtgv::grid::{ImageGrid, SplitVector, StackedField2};
use kldtgv::operators::{make_blur_operator, BccbOperator, Operators};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// A random `size`x`size` PSF with positive weights summing to one.
pub fn random_psf(rng: &mut impl Rng, size: usize) -> PsfKernel {
    let weights = (0..size * size).map(|_| rng.random_range(0.05..1.0)).collect();
    PsfKernel::new(size, weights).unwrap().normalize().unwrap()
}

pub fn random_blur(rng: &mut impl Rng, h: usize, w: usize) -> BccbOperator {
    make_blur_operator(&random_psf(rng, 3), h, w).unwrap()
}

pub fn random_image(rng: &mut impl Rng, h: usize, w: usize, lo: f64, hi: f64) -> ImageGrid {
    ImageGrid::from_fn(h, w, |_, _| rng.random_range(lo..hi))
}

pub fn random_split(rng: &mut impl Rng, h: usize, w: usize) -> SplitVector {
    let mut v = SplitVector::zeros(h, w);
    for part in v.parts_mut() {
        part.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
    }
    v
}

fn flatten(v: &SplitVector) -> Vec<f64> {
    v.parts().iter().flat_map(|p| p.iter().copied()).collect()
}

/// `H` as a dense matrix, one column per unit vector of `(u, w1, w2)`.
pub fn dense_h(ops: &Operators) -> DMatrix<f64> {
    let (h, w) = ops.shape();
    let n = h * w;
    let rows = 8 * n;
    let mut m = DMatrix::zeros(rows, 3 * n);
    for j in 0..3 * n {
        let mut u = ImageGrid::zeros(h, w);
        let mut f = StackedField2::zeros(h, w);
        if j < n {
            u.data_mut()[j] = 1.0;
        } else {
            f.data_mut()[j - n] = 1.0;
        }
        let col = flatten(&ops.apply_h(&u, &f).unwrap());
        m.column_mut(j).copy_from_slice(&col);
    }
    m
}

/// Minimizer of `‖Hx − v‖²` from the dense normal equations, as a flat
/// vector `(u, w1, w2)`.
pub fn dense_x_solve(ops: &Operators, v: &SplitVector) -> Vec<f64> {
    let hm = dense_h(ops);
    let rhs = hm.transpose() * DVector::from_vec(flatten(v));
    let normal = hm.transpose() * &hm;
    let chol = normal.cholesky().expect("normal matrix is positive definite");
    chol.solve(&rhs).iter().copied().collect()
}

/// Golden-section minimizer over `z > −γ` of
/// `λ (z + γ − b ln(z + γ)) + ρ/2 (z − d)²`.
///
/// Points are compared through the difference of objective values, written
/// so that it stays accurate when the two points are close.
pub fn golden_prox(d: f64, b: f64, gamma: f64, lambda: f64, rho: f64) -> f64 {
    let diff = |x1: f64, x2: f64| {
        let log_term = if b == 0.0 {
            0.0
        } else {
            -b * ((x1 - x2) / (x2 + gamma)).ln_1p()
        };
        lambda * (log_term + (x1 - x2)) + 0.5 * rho * (x1 - x2) * (x1 + x2 - 2.0 * d)
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (-gamma, d.abs() + gamma + b + lambda / rho + 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    for _ in 0..400 {
        if hi - lo < 1e-14 * (1.0 + hi.abs()) {
            break;
        }
        if diff(x1, x2) < 0.0 {
            hi = x2;
            x2 = x1;
            x1 = hi - inv_phi * (hi - lo);
        } else {
            lo = x1;
            x1 = x2;
            x2 = lo + inv_phi * (hi - lo);
        }
    }
    0.5 * (lo + hi)
}

pub fn group_objective(y: &[f64], d: &[f64], c: f64) -> f64 {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    c * norm + 0.5 * y.iter().zip(d).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
}

/// Damped Newton iteration for `c‖y‖ + ½‖y − d‖²`, started at `d`.
/// Only meaningful where the minimizer is away from the origin.
pub fn newton_group_min(d: &[f64], c: f64) -> Vec<f64> {
    let k = d.len();
    let mut y = DVector::from_column_slice(d);
    let dv = DVector::from_column_slice(d);
    for _ in 0..100 {
        let norm = y.norm();
        let grad = &y * (c / norm) + &y - &dv;
        if grad.norm() < 1e-15 {
            break;
        }
        let hess = DMatrix::identity(k, k) * (1.0 + c / norm) - (&y * y.transpose()) * (c / norm.powi(3));
        let step = hess.lu().solve(&grad).expect("Hessian is positive definite off the origin");
        let f0 = group_objective(y.as_slice(), d, c);
        let mut t = 1.0;
        loop {
            let trial = &y - &step * t;
            if group_objective(trial.as_slice(), d, c) <= f0 || t < 1e-12 {
                y = trial;
                break;
            }
            t *= 0.5;
        }
    }
    y.iter().copied().collect()
}
