//! Two-dimensional DFT over column-major grids.
//!
//! Forward transforms are unnormalized, inverse transforms carry the `1/n`
//! factor, so `inverse(forward(v)) == v` and a BCCB operator with spectrum
//! `s` acts as `inverse(s .* forward(v))`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Imaginary residue tolerated when a real operator result is brought back
/// to the real domain, relative to the norm of the operator input.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Clone)]
pub struct Fft2 {
    height: usize,
    width: usize,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2")
            .field("height", &self.height)
            .field("width", &self.width)
            .finish()
    }
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.col_fwd, &self.row_fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.col_inv, &self.row_inv);
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform keeping only the real part.
    ///
    /// `input_norm` is the norm of the data the spectrum was derived from; the
    /// discarded imaginary part must stay below `IMAG_RESIDUE_TOL * input_norm`.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>, input_norm: f64) -> Vec<f64> {
        self.inverse(&mut spectrum);
        debug_assert!(
            {
                let residue = spectrum.iter().map(|c| c.im * c.im).sum::<f64>().sqrt();
                residue <= IMAG_RESIDUE_TOL * input_norm.max(f64::MIN_POSITIVE) + 1e-300
            },
            "imaginary residue exceeds tolerance; spectrum is not Hermitian"
        );
        spectrum.into_iter().map(|c| c.re).collect()
    }

    fn transform(&self, data: &mut [Complex64], col: &Arc<dyn Fft<f64>>, row: &Arc<dyn Fft<f64>>) {
        let (h, w) = (self.height, self.width);
        assert_eq!(data.len(), h * w, "buffer does not match the FFT grid");
        let mut scratch = vec![Complex64::default(); col.get_inplace_scratch_len().max(row.get_inplace_scratch_len())];
        // Columns are contiguous in column-major storage.
        col.process_with_scratch(data, &mut scratch[..col.get_inplace_scratch_len()]);
        if w == 1 {
            return;
        }
        // Rows go through a small strip buffer so the working set stays
        // close to the size of `data`.
        let mut strip = vec![Complex64::default(); ROW_STRIP * w];
        for r0 in (0..h).step_by(ROW_STRIP) {
            let nb = ROW_STRIP.min(h - r0);
            for c in 0..w {
                for (i, v) in data[c * h + r0..c * h + r0 + nb].iter().enumerate() {
                    strip[i * w + c] = *v;
                }
            }
            row.process_with_scratch(&mut strip[..nb * w], &mut scratch[..row.get_inplace_scratch_len()]);
            for c in 0..w {
                for (i, v) in data[c * h + r0..c * h + r0 + nb].iter_mut().enumerate() {
                    *v = strip[i * w + c];
                }
            }
        }
    }
}

/// Rows transformed together in one pass.
const ROW_STRIP: usize = 16;
