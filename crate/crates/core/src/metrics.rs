//! Restoration quality measures: RMSE, ISNR and mean SSIM.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// SSIM settings. Defaults: 11x11 Gaussian window with sigma 1.5,
/// `K1 = 0.01`, `K2 = 0.03`, dynamic range 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

pub fn rmse(u: &ImageGrid, u_ref: &ImageGrid) -> Result<f64> {
    u.ensure_same_shape(u_ref)?;
    let sq: f64 = u.data().iter().zip(u_ref.data()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((sq / u.len() as f64).sqrt())
}

/// Improvement in SNR of `u_rec` over the observation `b`, in dB.
///
/// Returns `+inf` when `u_rec == u_ref` (saturated).
pub fn isnr(b: &ImageGrid, u_rec: &ImageGrid, u_ref: &ImageGrid) -> Result<f64> {
    b.ensure_same_shape(u_ref)?;
    u_rec.ensure_same_shape(u_ref)?;
    let num: f64 = b.data().iter().zip(u_ref.data()).map(|(a, r)| (a - r).powi(2)).sum();
    let den: f64 = u_rec.data().iter().zip(u_ref.data()).map(|(a, r)| (a - r).powi(2)).sum();
    if den == 0.0 {
        return Ok(f64::INFINITY);
    }
    if num == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(10.0 * (num / den).log10())
}

pub fn mssim(u: &ImageGrid, u_ref: &ImageGrid) -> Result<f64> {
    mssim_with(u, u_ref, &SsimParams::default())
}

/// Mean of the local SSIM map over all fully covered window positions.
pub fn mssim_with(u: &ImageGrid, u_ref: &ImageGrid, params: &SsimParams) -> Result<f64> {
    u.ensure_same_shape(u_ref)?;
    let (h, w) = u.shape();
    let k = params.window;
    if k % 2 == 0 || h < k || w < k {
        return Err(Error::InvalidParameter(format!(
            "SSIM needs an odd window no larger than the image ({h}x{w}, window {k})"
        )));
    }
    let kernel = gaussian_window(k, params.sigma);
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);

    let x = u.data();
    let y = u_ref.data();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let filt = |img: &[f64]| valid_filter(img, h, w, &kernel);
    let (mx, my, sxx, syy, sxy) = (filt(x), filt(y), filt(&xx), filt(&yy), filt(&xy));

    let total: f64 = (0..mx.len())
        .map(|i| {
            let (mu_x, mu_y) = (mx[i], my[i]);
            let var_x = sxx[i] - mu_x * mu_x;
            let var_y = syy[i] - mu_y * mu_y;
            let cov = sxy[i] - mu_x * mu_y;
            ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2))
                / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))
        })
        .sum();
    Ok(total / mx.len() as f64)
}

/// Normalized separable Gaussian taps.
fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as f64;
    let taps: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Separable correlation keeping only positions where the window fits.
fn valid_filter(img: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    // Along columns (rows direction) first: result is oh x w.
    let mut tmp = vec![0.0; oh * w];
    for c in 0..w {
        let col = &img[c * h..(c + 1) * h];
        for r in 0..oh {
            tmp[c * oh + r] = taps.iter().zip(&col[r..r + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for c in 0..ow {
        for r in 0..oh {
            out[c * oh + r] = (0..k).map(|j| taps[j] * tmp[(c + j) * oh + r]).sum();
        }
    }
    out
}

/// One row of a quality table.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityRecord {
    pub label: String,
    pub rmse: f64,
    pub isnr: f64,
    pub mssim: f64,
}

impl QualityRecord {
    pub fn evaluate(label: impl Into<String>, b: &ImageGrid, u_rec: &ImageGrid, u_ref: &ImageGrid) -> Result<Self> {
        Ok(Self {
            label: label.into(),
            rmse: rmse(u_rec, u_ref)?,
            isnr: isnr(b, u_rec, u_ref)?,
            mssim: mssim(u_rec, u_ref)?,
        })
    }

    pub const CSV_HEADER: &'static str = "label,RMSE,ISNR,MSSIM";

    pub fn to_csv_row(&self) -> String {
        format!("{},{:.6e},{:.6},{:.6e}", self.label, self.rmse, self.isnr, self.mssim)
    }
}

impl fmt::Display for QualityRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: RMSE {:.4e}  ISNR {:.4} dB  MSSIM {:.4}",
            self.label, self.rmse, self.isnr, self.mssim
        )
    }
}

/// `|u - u_ref|` for each image, rescaled jointly so the smallest pixel over
/// all error images maps to 0 and the largest to 1.
pub fn joint_error_images(images: &[&ImageGrid], u_ref: &ImageGrid) -> Result<Vec<ImageGrid>> {
    let errors = images
        .iter()
        .map(|u| {
            u.ensure_same_shape(u_ref)?;
            Ok(ImageGrid::from_vec_unchecked(
                u.height(),
                u.width(),
                u.data().iter().zip(u_ref.data()).map(|(a, b)| (a - b).abs()).collect(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let lo = errors.iter().map(|e| e.min()).fold(f64::INFINITY, f64::min);
    let hi = errors.iter().map(|e| e.max()).fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    Ok(errors.into_iter().map(|e| e.map(|v| (v - lo) / span)).collect())
}
