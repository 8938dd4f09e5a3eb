//! Periodic (BCCB) linear operators stored as DFT spectra.
//!
//! Under periodic boundary conditions the blur `A`, the forward differences
//! `D_H`, `D_V` and every linear combination of them are diagonalized by the
//! 2-D DFT. An operator is therefore just its spectrum: the DFT of its
//! stencil embedded at the grid origin with circular wrap.

use num_complex::Complex64;

use crate::degrade::PsfKernel;
use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::{ImageGrid, SplitVector, StackedField, StackedField2, StackedField4};

/// A circular convolution operator on a `height x width` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BccbOperator {
    height: usize,
    width: usize,
    spectrum: Vec<Complex64>,
}

impl BccbOperator {
    /// Builds the operator `(K v)(p) = sum_q k(q) v(p - q)` from the sparse
    /// stencil `k`, given as `(row offset, col offset, weight)` triples.
    pub fn from_stencil(height: usize, width: usize, taps: &[(isize, isize, f64)]) -> Self {
        let mut kernel = vec![0.0; height * width];
        for &(dr, dc, weight) in taps {
            let r = dr.rem_euclid(height as isize) as usize;
            let c = dc.rem_euclid(width as isize) as usize;
            kernel[c * height + r] += weight;
        }
        let spectrum = Fft2::new(height, width).forward_real(&kernel);
        Self {
            height,
            width,
            spectrum,
        }
    }

    pub fn from_spectrum(height: usize, width: usize, spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != height * width {
            return Err(Error::InvalidGrid(format!(
                "spectrum of length {} for a {height}x{width} grid",
                spectrum.len()
            )));
        }
        Ok(Self {
            height,
            width,
            spectrum,
        })
    }

    /// The identity operator.
    pub fn identity(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            spectrum: vec![Complex64::new(1.0, 0.0); height * width],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// Applies the operator through `inverse(spectrum .* forward(v))`.
    pub fn apply(&self, fft: &Fft2, v: &ImageGrid) -> Result<ImageGrid> {
        self.apply_impl(fft, v, false)
    }

    /// Applies the transpose, whose spectrum is the complex conjugate.
    pub fn apply_adjoint(&self, fft: &Fft2, v: &ImageGrid) -> Result<ImageGrid> {
        self.apply_impl(fft, v, true)
    }

    fn apply_impl(&self, fft: &Fft2, v: &ImageGrid, adjoint: bool) -> Result<ImageGrid> {
        check_shape(self.shape(), v.shape())?;
        check_shape(self.shape(), fft.shape())?;
        let mut spec = fft.forward_real(v.data());
        for (x, s) in spec.iter_mut().zip(&self.spectrum) {
            *x *= if adjoint { s.conj() } else { *s };
        }
        let data = fft.inverse_real(spec, v.norm());
        Ok(ImageGrid::from_vec_unchecked(self.height, self.width, data))
    }

    fn ensure_same_grid(&self, other: &BccbOperator) -> Result<()> {
        check_shape(self.shape(), other.shape())
    }
}

fn check_shape(expected: (usize, usize), got: (usize, usize)) -> Result<()> {
    if expected != got {
        return Err(Error::ShapeMismatch { expected, got });
    }
    Ok(())
}

/// Periodic forward differences `D_H` (along columns, to the right) and
/// `D_V` (along rows, downward).
///
/// `(D_H u)(r, c) = u(r, c + 1 mod W) - u(r, c)` and
/// `(D_V u)(r, c) = u(r + 1 mod H, c) - u(r, c)`.
pub fn make_forward_diff_spectra(height: usize, width: usize) -> Result<(BccbOperator, BccbOperator)> {
    if height < 2 || width < 2 {
        return Err(Error::InvalidGrid(format!(
            "forward differences need at least 2x2 pixels, got {height}x{width}"
        )));
    }
    let h = height as isize;
    let w = width as isize;
    let dh = BccbOperator::from_stencil(height, width, &[(0, 0, -1.0), (0, w - 1, 1.0)]);
    let dv = BccbOperator::from_stencil(height, width, &[(0, 0, -1.0), (h - 1, 0, 1.0)]);
    Ok((dh, dv))
}

/// Angle and anisotropy of the directional gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionalSpec {
    /// Radians in `[-pi, pi]`, measured from the `D_H` axis toward `D_V`.
    pub theta: f64,
    /// Weight of the derivative orthogonal to `theta`.
    pub a: f64,
}

impl Default for DirectionalSpec {
    fn default() -> Self {
        Self { theta: 0.0, a: 1.0 }
    }
}

impl DirectionalSpec {
    pub fn new(theta: f64, a: f64) -> Result<Self> {
        let spec = Self { theta, a };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::InvalidParameter(format!("a must be positive, got {}", self.a)));
        }
        if !self.theta.is_finite() || self.theta.abs() > std::f64::consts::PI + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in [-pi, pi], got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

/// `D_theta = cos(theta) D_H + sin(theta) D_V` and
/// `D_perp = a (-sin(theta) D_H + cos(theta) D_V)`.
pub fn make_directional_spectra(
    dh: &BccbOperator,
    dv: &BccbOperator,
    spec: DirectionalSpec,
) -> Result<(BccbOperator, BccbOperator)> {
    spec.validate()?;
    dh.ensure_same_grid(dv)?;
    let (sin, cos) = spec.theta.sin_cos();
    let (theta, perp) = dh
        .spectrum
        .iter()
        .zip(&dv.spectrum)
        .map(|(&h, &v)| (h * cos + v * sin, (h * (-sin) + v * cos) * spec.a))
        .unzip();
    Ok((
        BccbOperator::from_spectrum(dh.height, dh.width, theta)?,
        BccbOperator::from_spectrum(dh.height, dh.width, perp)?,
    ))
}

/// Embeds `psf` with its center at the origin (circular wrap) and returns the
/// resulting convolution operator. The zero-frequency entry equals the sum of
/// the PSF weights.
pub fn make_blur_operator(psf: &PsfKernel, height: usize, width: usize) -> Result<BccbOperator> {
    let size = psf.size();
    if size > height || size > width {
        return Err(Error::InvalidParameter(format!(
            "{size}x{size} PSF does not fit a {height}x{width} grid"
        )));
    }
    if psf.weights().iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidParameter("PSF has negative weights".into()));
    }
    let half = (size / 2) as isize;
    let taps: Vec<_> = (0..size)
        .flat_map(|i| (0..size).map(move |j| (i, j)))
        .map(|(i, j)| (i as isize - half, j as isize - half, psf.weight(i, j)))
        .filter(|t| t.2 != 0.0)
        .collect();
    Ok(BccbOperator::from_stencil(height, width, &taps))
}

/// The operators of the model: blur `A` and the directional pair
/// `(D_theta, D_perp)` that defines the gradient and symmetrized derivative.
#[derive(Clone, Debug)]
pub struct Operators {
    fft: Fft2,
    blur: BccbOperator,
    d_theta: BccbOperator,
    d_perp: BccbOperator,
}

impl Operators {
    /// Directional operators for `spec`.
    pub fn directional(blur: BccbOperator, spec: DirectionalSpec) -> Result<Self> {
        let (h, w) = blur.shape();
        let (dh, dv) = make_forward_diff_spectra(h, w)?;
        let (d_theta, d_perp) = make_directional_spectra(&dh, &dv, spec)?;
        Self::from_parts(blur, d_theta, d_perp)
    }

    /// Plain TGV operators, `D_theta = D_H` and `D_perp = D_V`, built without
    /// going through the rotation.
    pub fn tgv(blur: BccbOperator) -> Result<Self> {
        let (h, w) = blur.shape();
        let (dh, dv) = make_forward_diff_spectra(h, w)?;
        Self::from_parts(blur, dh, dv)
    }

    pub fn from_parts(blur: BccbOperator, d_theta: BccbOperator, d_perp: BccbOperator) -> Result<Self> {
        blur.ensure_same_grid(&d_theta)?;
        blur.ensure_same_grid(&d_perp)?;
        let (h, w) = blur.shape();
        if h < 2 || w < 2 {
            return Err(Error::InvalidGrid(format!("{h}x{w} grid is too small")));
        }
        Ok(Self {
            fft: Fft2::new(h, w),
            blur,
            d_theta,
            d_perp,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.blur.shape()
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn blur(&self) -> &BccbOperator {
        &self.blur
    }

    pub fn d_theta(&self) -> &BccbOperator {
        &self.d_theta
    }

    pub fn d_perp(&self) -> &BccbOperator {
        &self.d_perp
    }

    fn check(&self, shape: (usize, usize)) -> Result<()> {
        check_shape(self.shape(), shape)
    }

    pub(crate) fn inverse(&self, spec: Vec<Complex64>, input_norm: f64) -> Vec<f64> {
        self.fft.inverse_real(spec, input_norm)
    }

    /// `A u`.
    pub fn apply_blur(&self, u: &ImageGrid) -> Result<ImageGrid> {
        self.blur.apply(&self.fft, u)
    }

    /// `A^T v`.
    pub fn apply_blur_adjoint(&self, v: &ImageGrid) -> Result<ImageGrid> {
        self.blur.apply_adjoint(&self.fft, v)
    }

    /// Directional gradient `(D_theta u, D_perp u)`.
    pub fn apply_grad(&self, u: &ImageGrid) -> Result<StackedField2> {
        self.check(u.shape())?;
        let (h, w) = self.shape();
        let uf = self.fft.forward_real(u.data());
        let norm = u.norm();
        let mut out = StackedField2::zeros(h, w);
        for (i, op) in [&self.d_theta, &self.d_perp].into_iter().enumerate() {
            let spec = mul(&uf, op, false);
            out.block_mut(i).copy_from_slice(&self.inverse(spec, norm));
        }
        Ok(out)
    }

    /// `D_theta^T v_1 + D_perp^T v_2`.
    pub fn apply_grad_adjoint(&self, v: &StackedField2) -> Result<ImageGrid> {
        self.check(v.shape())?;
        let (h, w) = self.shape();
        let f1 = self.fft.forward_real(v.block(0));
        let f2 = self.fft.forward_real(v.block(1));
        let spec = combine(&[(&f1, &self.d_theta, 1.0), (&f2, &self.d_perp, 1.0)], true);
        Ok(ImageGrid::from_vec_unchecked(h, w, self.inverse(spec, v.norm())))
    }

    /// Directional symmetrized derivative
    /// `(D_theta w1, (D_perp w1 + D_theta w2)/2, (D_perp w1 + D_theta w2)/2, D_perp w2)`.
    pub fn apply_sym_derivative(&self, w: &StackedField2) -> Result<StackedField4> {
        self.check(w.shape())?;
        let f1 = self.fft.forward_real(w.block(0));
        let f2 = self.fft.forward_real(w.block(1));
        Ok(self.sym_derivative_from_spectra(&f1, &f2, w.norm()))
    }

    pub(crate) fn sym_derivative_from_spectra(
        &self,
        f1: &[Complex64],
        f2: &[Complex64],
        norm: f64,
    ) -> StackedField4 {
        let (h, w) = self.shape();
        let mut out = StackedField4::zeros(h, w);
        let first = self.inverse(mul(f1, &self.d_theta, false), norm);
        let mixed = self.inverse(
            combine(&[(f1, &self.d_perp, 0.5), (f2, &self.d_theta, 0.5)], false),
            norm,
        );
        let last = self.inverse(mul(f2, &self.d_perp, false), norm);
        out.block_mut(0).copy_from_slice(&first);
        out.block_mut(1).copy_from_slice(&mixed);
        out.block_mut(2).copy_from_slice(&mixed);
        out.block_mut(3).copy_from_slice(&last);
        out
    }

    /// Transpose of [`Operators::apply_sym_derivative`]:
    /// `(D_theta^T y1 + D_perp^T (y2 + y3)/2, D_theta^T (y2 + y3)/2 + D_perp^T y4)`.
    pub fn apply_sym_derivative_adjoint(&self, y: &StackedField4) -> Result<StackedField2> {
        self.check(y.shape())?;
        let (h, w) = self.shape();
        let f1 = self.fft.forward_real(y.block(0));
        let mid: Vec<f64> = y.block(1).iter().zip(y.block(2)).map(|(a, b)| 0.5 * (a + b)).collect();
        let fm = self.fft.forward_real(&mid);
        let f4 = self.fft.forward_real(y.block(3));
        let norm = y.norm();
        let mut out = StackedField2::zeros(h, w);
        let b1 = combine(&[(&f1, &self.d_theta, 1.0), (&fm, &self.d_perp, 1.0)], true);
        let b2 = combine(&[(&fm, &self.d_theta, 1.0), (&f4, &self.d_perp, 1.0)], true);
        out.block_mut(0).copy_from_slice(&self.inverse(b1, norm));
        out.block_mut(1).copy_from_slice(&self.inverse(b2, norm));
        Ok(out)
    }

    /// `H x = (A u, grad u - w, E w, u)` for `x = (u, w)`.
    pub fn apply_h(&self, u: &ImageGrid, w: &StackedField2) -> Result<SplitVector> {
        self.check(u.shape())?;
        self.check(w.shape())?;
        let uf = self.fft.forward_real(u.data());
        let f1 = self.fft.forward_real(w.block(0));
        let f2 = self.fft.forward_real(w.block(1));
        Ok(self.apply_h_from_spectra(u, w, &uf, &f1, &f2))
    }

    /// `H x` reusing precomputed DFTs of `u`, `w1`, `w2`.
    pub(crate) fn apply_h_from_spectra(
        &self,
        u: &ImageGrid,
        w: &StackedField2,
        uf: &[Complex64],
        f1: &[Complex64],
        f2: &[Complex64],
    ) -> SplitVector {
        let (h, wd) = self.shape();
        let unorm = u.norm();
        let z1 = ImageGrid::from_vec_unchecked(h, wd, self.inverse(mul(uf, &self.blur, false), unorm));
        let mut z2 = StackedField2::zeros(h, wd);
        for (i, op) in [&self.d_theta, &self.d_perp].into_iter().enumerate() {
            let g = self.inverse(mul(uf, op, false), unorm);
            for ((dst, gv), wv) in z2.block_mut(i).iter_mut().zip(g).zip(w.block(i)) {
                *dst = gv - wv;
            }
        }
        let z3 = self.sym_derivative_from_spectra(f1, f2, w.norm());
        SplitVector {
            z1,
            z2,
            z3,
            z4: u.clone(),
        }
    }

    /// `H^T v`, returned as the `u`-block and the two `w`-blocks.
    pub fn apply_h_adjoint(&self, v: &SplitVector) -> Result<(ImageGrid, StackedField2)> {
        v.ensure_consistent()?;
        self.check(v.shape())?;
        let spectra = self.h_adjoint_spectra(v);
        let (h, w) = self.shape();
        let norm = v.norm();
        let [r1, r2, r3] = spectra;
        let u = ImageGrid::from_vec_unchecked(h, w, self.inverse(r1, norm));
        let mut wf = StackedField2::zeros(h, w);
        wf.block_mut(0).copy_from_slice(&self.inverse(r2, norm));
        wf.block_mut(1).copy_from_slice(&self.inverse(r3, norm));
        Ok((u, wf))
    }

    /// DFTs of the three `n`-blocks of `H^T v`.
    pub(crate) fn h_adjoint_spectra(&self, v: &SplitVector) -> [Vec<Complex64>; 3] {
        let fwd = |x: &[f64]| self.fft.forward_real(x);
        let v1 = fwd(v.z1.data());
        let v2a = fwd(v.z2.block(0));
        let v2b = fwd(v.z2.block(1));
        let v3a = fwd(v.z3.block(0));
        let mid: Vec<f64> = v
            .z3
            .block(1)
            .iter()
            .zip(v.z3.block(2))
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let v3m = fwd(&mid);
        let v3d = fwd(v.z3.block(3));
        let v4 = fwd(v.z4.data());

        let n = v1.len();
        let mut r1 = Vec::with_capacity(n);
        let mut r2 = Vec::with_capacity(n);
        let mut r3 = Vec::with_capacity(n);
        for k in 0..n {
            let a = self.blur.spectrum[k].conj();
            let t = self.d_theta.spectrum[k].conj();
            let p = self.d_perp.spectrum[k].conj();
            r1.push(a * v1[k] + t * v2a[k] + p * v2b[k] + v4[k]);
            r2.push(-v2a[k] + t * v3a[k] + p * v3m[k]);
            r3.push(-v2b[k] + t * v3m[k] + p * v3d[k]);
        }
        [r1, r2, r3]
    }
}

fn mul(x: &[Complex64], op: &BccbOperator, adjoint: bool) -> Vec<Complex64> {
    x.iter()
        .zip(&op.spectrum)
        .map(|(v, s)| if adjoint { v * s.conj() } else { v * s })
        .collect()
}

fn combine(terms: &[(&[Complex64], &BccbOperator, f64)], adjoint: bool) -> Vec<Complex64> {
    let n = terms[0].0.len();
    (0..n)
        .map(|k| {
            terms
                .iter()
                .map(|(x, op, c)| {
                    let s = if adjoint { op.spectrum[k].conj() } else { op.spectrum[k] };
                    x[k] * s * *c
                })
                .sum()
        })
        .collect()
}

/// `sum_j || (v_j, v_{n+j}, ...) ||_2` over the `K` blocks of a stacked field.
pub fn norm21<const K: usize>(v: &StackedField<K>) -> f64 {
    (0..v.block_len())
        .map(|j| v.pixel(j).iter().map(|x| x * x).sum::<f64>().sqrt())
        .sum()
}

pub fn norm21_2(v: &StackedField2) -> f64 {
    norm21(v)
}

pub fn norm21_4(y: &StackedField4) -> f64 {
    norm21(y)
}
