//! Exact solve of the `x`-subproblem `min_x ‖Hx − v‖²`.
//!
//! Per frequency, `HᵀH` reduces to the 3x3 Hermitian block matrix
//!
//! ```text
//!     [ Γ    −Δ* ]        Γ = 1 + |σ_A|² + |σ_θ|² + |σ_⊥|²
//!     [ −Δ    Φ  ]        Δ = (σ_θ, σ_⊥)ᵀ
//! ```
//!
//! with `Φ` the 2x2 block coming from `I + ẼᵀẼ`. Its inverse is assembled from
//! the two Schur complements `Ξ = Γ − Δ*Φ⁻¹Δ` and `Ω = Φ − ΔΓ⁻¹Δ*`.
//! Because the off-diagonal blocks carry a minus sign, both coupling terms in
//! the solve enter with a plus sign.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ImageGrid, SplitVector, StackedField2};
use crate::operators::Operators;

/// Determinants below this magnitude are treated as singular.
pub const SINGULAR_DET: f64 = 1e-14;
/// Allowed deviation of `M M⁻¹` from the identity, relative to `1 + |M|`.
pub const INVERSE_CHECK_TOL: f64 = 1e-8;

type C = Complex64;

/// Per-frequency factors of the `x`-subproblem.
#[derive(Clone, Debug)]
pub struct SpectralFactors {
    pub gamma: Vec<C>,
    pub delta_theta: Vec<C>,
    pub delta_perp: Vec<C>,
    /// `Φ⁻¹`, row-major 2x2.
    pub psi: [Vec<C>; 4],
    /// `Ξ⁻¹`.
    pub xi_inv: Vec<C>,
    /// `Ω⁻¹`, row-major 2x2.
    pub upsilon: [Vec<C>; 4],
}

fn inv2(m: [C; 4], index: usize) -> Result<[C; 4]> {
    let det = m[0] * m[3] - m[1] * m[2];
    if det.norm() < SINGULAR_DET {
        return Err(Error::SingularFactor { index, det: det.norm() });
    }
    Ok([m[3] / det, -m[1] / det, -m[2] / det, m[0] / det])
}

/// Precomputes all factors from the operator spectra and verifies the
/// reassembled inverse against the identity at every frequency.
///
/// The penalty `ρ` scales both sides of the normal equations and does not
/// appear here.
pub fn precompute_factors(ops: &Operators) -> Result<SpectralFactors> {
    let sa = ops.blur().spectrum();
    let st = ops.d_theta().spectrum();
    let sp = ops.d_perp().spectrum();
    let n = sa.len();

    let mut f = SpectralFactors {
        gamma: Vec::with_capacity(n),
        delta_theta: st.to_vec(),
        delta_perp: sp.to_vec(),
        psi: std::array::from_fn(|_| Vec::with_capacity(n)),
        xi_inv: Vec::with_capacity(n),
        upsilon: std::array::from_fn(|_| Vec::with_capacity(n)),
    };

    for k in 0..n {
        let (a, t, p) = (sa[k], st[k], sp[k]);
        let gamma = 1.0 + a.norm_sqr() + t.norm_sqr() + p.norm_sqr();
        let phi12 = 0.5 * p.conj() * t;
        let phi = [
            C::new(1.0 + t.norm_sqr() + 0.5 * p.norm_sqr(), 0.0),
            phi12,
            phi12.conj(),
            C::new(1.0 + 0.5 * t.norm_sqr() + p.norm_sqr(), 0.0),
        ];
        let psi = inv2(phi, k)?;

        // Ξ = Γ − Δ*ΨΔ
        let psi_delta = [psi[0] * t + psi[1] * p, psi[2] * t + psi[3] * p];
        let xi = gamma - (t.conj() * psi_delta[0] + p.conj() * psi_delta[1]);
        if xi.norm() < SINGULAR_DET {
            return Err(Error::SingularFactor { index: k, det: xi.norm() });
        }
        let xi_inv = 1.0 / xi;

        // Ω = Φ − ΔΓ⁻¹Δ*
        let omega = [
            phi[0] - t * t.conj() / gamma,
            phi[1] - t * p.conj() / gamma,
            phi[2] - p * t.conj() / gamma,
            phi[3] - p * p.conj() / gamma,
        ];
        let ups = inv2(omega, k)?;

        check_inverse(k, C::new(gamma, 0.0), t, p, &phi, xi_inv, &psi, &ups)?;

        f.gamma.push(C::new(gamma, 0.0));
        f.xi_inv.push(xi_inv);
        for i in 0..4 {
            f.psi[i].push(psi[i]);
            f.upsilon[i].push(ups[i]);
        }
    }
    Ok(f)
}

#[allow(clippy::too_many_arguments)]
fn check_inverse(
    index: usize,
    gamma: C,
    t: C,
    p: C,
    phi: &[C; 4],
    xi_inv: C,
    psi: &[C; 4],
    ups: &[C; 4],
) -> Result<()> {
    let m = [
        [gamma, -t.conj(), -p.conj()],
        [-t, phi[0], phi[1]],
        [-p, phi[2], phi[3]],
    ];
    // Columns of M⁻¹ obtained by solving against unit vectors.
    let mut inv = [[C::new(0.0, 0.0); 3]; 3];
    for j in 0..3 {
        let mut r = [C::new(0.0, 0.0); 3];
        r[j] = C::new(1.0, 0.0);
        let y = solve_point(gamma, t, p, xi_inv, psi, ups, r);
        for i in 0..3 {
            inv[i][j] = y[i];
        }
    }
    let scale = 1.0 + m.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    for i in 0..3 {
        for j in 0..3 {
            let prod: C = (0..3).map(|l| m[i][l] * inv[l][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            let err = (prod - target).norm();
            if !(err <= INVERSE_CHECK_TOL * scale) {
                return Err(Error::SingularFactor { index, det: err });
            }
        }
    }
    Ok(())
}

/// Solves the 3x3 system at a single frequency.
#[inline]
fn solve_point(gamma: C, t: C, p: C, xi_inv: C, psi: &[C; 4], ups: &[C; 4], r: [C; 3]) -> [C; 3] {
    let q2 = psi[0] * r[1] + psi[1] * r[2];
    let q3 = psi[2] * r[1] + psi[3] * r[2];
    let y1 = xi_inv * (r[0] + t.conj() * q2 + p.conj() * q3);
    let g = r[0] / gamma;
    let s2 = r[1] + t * g;
    let s3 = r[2] + p * g;
    [y1, ups[0] * s2 + ups[1] * s3, ups[2] * s2 + ups[3] * s3]
}

/// Spectra of the minimizer `(u, w1, w2)` of `‖Hx − v‖²`.
pub(crate) fn solve_x_spectra(v: &SplitVector, f: &SpectralFactors, ops: &Operators) -> [Vec<C>; 3] {
    let [r1, r2, r3] = ops.h_adjoint_spectra(v);
    let n = r1.len();
    let mut y = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for k in 0..n {
        let psi = [f.psi[0][k], f.psi[1][k], f.psi[2][k], f.psi[3][k]];
        let ups = [f.upsilon[0][k], f.upsilon[1][k], f.upsilon[2][k], f.upsilon[3][k]];
        let s = solve_point(
            f.gamma[k],
            f.delta_theta[k],
            f.delta_perp[k],
            f.xi_inv[k],
            &psi,
            &ups,
            [r1[k], r2[k], r3[k]],
        );
        for i in 0..3 {
            y[i].push(s[i]);
        }
    }
    y
}

/// Minimizer `(u, w)` of `‖Hx − v‖²`.
pub fn solve_x_subproblem(
    v: &SplitVector,
    factors: &SpectralFactors,
    ops: &Operators,
) -> Result<(ImageGrid, StackedField2)> {
    v.ensure_consistent()?;
    if v.shape() != ops.shape() {
        return Err(Error::ShapeMismatch {
            expected: ops.shape(),
            got: v.shape(),
        });
    }
    let [y1, y2, y3] = solve_x_spectra(v, factors, ops);
    Ok(spectra_to_x(ops, y1, y2, y3, v.norm()))
}

pub(crate) fn spectra_to_x(ops: &Operators, y1: Vec<C>, y2: Vec<C>, y3: Vec<C>, norm: f64) -> (ImageGrid, StackedField2) {
    let (h, w) = ops.shape();
    let u = ImageGrid::from_vec_unchecked(h, w, ops.inverse(y1, norm));
    let mut wf = StackedField2::zeros(h, w);
    wf.block_mut(0).copy_from_slice(&ops.inverse(y2, norm));
    wf.block_mut(1).copy_from_slice(&ops.inverse(y3, norm));
    (u, wf)
}
