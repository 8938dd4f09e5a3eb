//! Closed-form `z`-updates and the KL data term.

use crate::error::{Error, Result};
use crate::grid::{ImageGrid, StackedField};

/// Generalized Kullback-Leibler divergence
/// `sum_i b_i ln(b_i / (v_i + γ_i)) + (v_i + γ_i) − b_i`, with the log term
/// dropped where `b_i = 0`.
pub fn kl_divergence(v: &ImageGrid, gamma: &ImageGrid, b: &ImageGrid) -> Result<f64> {
    v.ensure_same_shape(gamma)?;
    v.ensure_same_shape(b)?;
    let mut total = 0.0;
    for (i, ((&vi, &gi), &bi)) in v.data().iter().zip(gamma.data()).zip(b.data()).enumerate() {
        if bi < 0.0 {
            return Err(Error::Domain(format!("negative observation {bi} at pixel {i}")));
        }
        let m = vi + gi;
        if m < 0.0 || (m == 0.0 && bi > 0.0) || !m.is_finite() {
            return Err(Error::Domain(format!("v + gamma = {m} at pixel {i}")));
        }
        total += if bi == 0.0 { m } else { bi * (bi / m).ln() + m - bi };
    }
    Ok(total)
}

/// Minimizer over `z > −γ` of `λ (z + γ − b ln(z + γ)) + ρ/2 (z − d)²`.
///
/// With `s = z + γ` the stationarity condition is the quadratic
/// `s² + (λ/ρ − γ − d) s − (λ/ρ) b = 0`, whose larger root is taken in the
/// form that avoids cancellation. For `b = 0` the minimizer may sit on the
/// boundary `s = 0`.
pub fn prox_kl_scalar(d: f64, b: f64, gamma: f64, lambda: f64, rho: f64) -> f64 {
    let t = lambda / rho;
    let beta = t - gamma - d;
    let c = t * b;
    let disc = (beta * beta + 4.0 * c).sqrt();
    let s = if beta <= 0.0 {
        0.5 * (disc - beta)
    } else {
        2.0 * c / (beta + disc)
    };
    s - gamma
}

/// Pixelwise [`prox_kl_scalar`].
pub fn prox_kl(d: &ImageGrid, b: &ImageGrid, gamma: &ImageGrid, lambda: f64, rho: f64) -> Result<ImageGrid> {
    d.ensure_same_shape(b)?;
    d.ensure_same_shape(gamma)?;
    if let Some(i) = b.data().iter().position(|&v| v < 0.0) {
        return Err(Error::Domain(format!("negative observation at pixel {i}")));
    }
    if let Some(i) = gamma.data().iter().position(|&g| !(g > 0.0)) {
        return Err(Error::Domain(format!("nonpositive gamma at pixel {i}")));
    }
    let data = d
        .data()
        .iter()
        .zip(b.data())
        .zip(gamma.data())
        .map(|((&di, &bi), &gi)| prox_kl_scalar(di, bi, gi, lambda, rho))
        .collect();
    Ok(ImageGrid::from_vec_unchecked(d.height(), d.width(), data))
}

/// Shrinkage `max(1 − c/‖y‖, 0) y` of a single vector.
pub fn prox_group_vec(y: &[f64], c: f64) -> Vec<f64> {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= c {
        return vec![0.0; y.len()];
    }
    let f = (norm - c) / norm;
    y.iter().map(|v| v * f).collect()
}

/// Per-pixel shrinkage of the `K`-vectors of a stacked field.
pub fn prox_group<const K: usize>(d: &StackedField<K>, c: f64) -> StackedField<K> {
    let n = d.block_len();
    let mut out = d.clone();
    let data = out.data_mut();
    for j in 0..n {
        let norm = (0..K).map(|k| data[k * n + j].powi(2)).sum::<f64>().sqrt();
        let f = if norm <= c { 0.0 } else { (norm - c) / norm };
        for k in 0..K {
            data[k * n + j] *= f;
        }
    }
    out
}

pub fn project_nonneg(d: &ImageGrid) -> ImageGrid {
    d.map(|v| v.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StackedField2;

    /// Golden-section minimizer of the scalar prox objective, comparing
    /// function values through differences that stay accurate near the optimum.
    fn golden_prox(d: f64, b: f64, gamma: f64, lambda: f64, rho: f64) -> f64 {
        // f(x1) − f(x2) with x measured as z.
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
        for _ in 0..300 {
            if hi - lo < 1e-13 {
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

    #[test]
    fn kl_scalar_value() {
        let one = |v: f64| ImageGrid::filled(1, 1, v);
        let kl = kl_divergence(&one(0.5), &one(0.5), &one(2.0)).unwrap();
        assert!((kl - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn kl_zero_at_data() {
        let b = ImageGrid::from_fn(3, 4, |r, c| 0.1 + (r * c) as f64);
        let g = ImageGrid::filled(3, 4, 0.05);
        let v = ImageGrid::from_fn(3, 4, |r, c| b.get(r, c) - 0.05);
        assert!(kl_divergence(&v, &g, &b).unwrap().abs() < 1e-14);
    }

    #[test]
    fn kl_zero_count_contributes_mean() {
        let v = ImageGrid::filled(1, 1, 0.75);
        let g = ImageGrid::filled(1, 1, 0.25);
        let b = ImageGrid::zeros(1, 1);
        assert_eq!(kl_divergence(&v, &g, &b).unwrap(), 1.0);
    }

    #[test]
    fn kl_domain_errors() {
        let g = ImageGrid::filled(1, 1, 0.5);
        let b = ImageGrid::filled(1, 1, 1.0);
        assert!(kl_divergence(&ImageGrid::filled(1, 1, -0.5), &g, &b).is_err());
        assert!(kl_divergence(&ImageGrid::filled(1, 1, -1.0), &g, &ImageGrid::zeros(1, 1)).is_err());
        assert!(kl_divergence(&ImageGrid::zeros(1, 1), &g, &ImageGrid::filled(1, 1, -1.0)).is_err());
    }

    #[test]
    fn prox_kl_example_against_oracle() {
        let z = prox_kl_scalar(1.0, 2.0, 0.5, 1.0, 1.0);
        let oracle = golden_prox(1.0, 2.0, 0.5, 1.0, 1.0);
        assert!((z - oracle).abs() < 1e-8, "{z} vs {oracle}");
        assert!((z - ((0.5 + 8.25f64.sqrt()) / 2.0 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn prox_kl_zero_count() {
        // Interior case: z = d − λ/ρ.
        let z = prox_kl_scalar(3.0, 0.0, 0.1, 1.0, 2.0);
        assert!((z - 2.5).abs() < 1e-12);
        // Boundary case: z = −γ.
        let z = prox_kl_scalar(-1.0, 0.0, 0.1, 1.0, 2.0);
        assert_eq!(z, -0.1);
    }

    #[test]
    fn prox_kl_small_penalty_ratio() {
        let z = prox_kl_scalar(0.8, 3.0, 0.2, 1e-9, 1.0);
        assert!((z - 0.8).abs() < 1e-6);
    }

    #[test]
    fn prox_kl_rejects_negative_b() {
        let d = ImageGrid::zeros(1, 2);
        let b = ImageGrid::from_rows(&[&[1.0, -1.0]]).unwrap();
        let g = ImageGrid::filled(1, 2, 1.0);
        assert!(matches!(prox_kl(&d, &b, &g, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn group_shrinkage_hand_values() {
        let y = prox_group_vec(&[3.0, 4.0], 1.0);
        assert!((y[0] - 2.4).abs() < 1e-15 && (y[1] - 3.2).abs() < 1e-15);
        assert_eq!(prox_group_vec(&[0.3, 0.4], 0.5), vec![0.0, 0.0]);
        let d = StackedField2::new(1, 2, vec![3.0, 0.1, 4.0, 0.1]).unwrap();
        let p = prox_group(&d, 1.0);
        assert!((p.data()[0] - 2.4).abs() < 1e-15 && (p.data()[2] - 3.2).abs() < 1e-15);
        assert_eq!((p.data()[1], p.data()[3]), (0.0, 0.0));
    }

    #[test]
    fn projection() {
        let d = ImageGrid::from_rows(&[&[-1.0, 2.0]]).unwrap();
        let p = project_nonneg(&d);
        assert_eq!(p.data(), &[0.0, 2.0]);
        assert_eq!(project_nonneg(&p), p);
    }
}
