//! Synthetic test problems: PSFs, stripe phantoms and the Poisson
//! degradation protocol (scale to a target SNR, blur, add background,
//! sample, normalize to max 1).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::operators::{make_blur_operator, BccbOperator};
use crate::fft::Fft2;

/// Background level added to every pixel of the blurred image.
pub const DEFAULT_GAMMA: f64 = 1e-10;

/// Subpixel samples per axis for the antialiased disk.
const DISK_SUBSAMPLES: usize = 8;

/// Odd-sized, nonnegative blur kernel stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PsfKernel {
    size: usize,
    weights: Vec<f64>,
    normalized: bool,
}

impl PsfKernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size % 2 == 0 {
            return Err(Error::InvalidParameter(format!("PSF size must be odd, got {size}")));
        }
        if weights.len() != size * size {
            return Err(Error::InvalidParameter(format!(
                "{size}x{size} PSF needs {} weights, got {}",
                size * size,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("PSF weights must be finite and >= 0".into()));
        }
        Ok(Self {
            size,
            weights,
            normalized: false,
        })
    }

    /// Rescales the weights to sum to one.
    pub fn normalize(mut self) -> Result<Self> {
        let total: f64 = self.weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("PSF has zero mass".into()));
        }
        self.weights.iter_mut().for_each(|w| *w /= total);
        self.normalized = true;
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at row `i`, column `j`; the center is `(size / 2, size / 2)`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.size + j]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }
}

/// Isotropic Gaussian PSF with the given variance on a centered
/// `size x size` lattice, normalized to unit mass.
pub fn gaussian_psf(variance: f64, size: usize) -> Result<PsfKernel> {
    if !(variance > 0.0) {
        return Err(Error::InvalidParameter(format!("variance must be > 0, got {variance}")));
    }
    if size % 2 == 0 {
        return Err(Error::InvalidParameter(format!("PSF size must be odd, got {size}")));
    }
    let half = (size / 2) as f64;
    let weights = (0..size * size)
        .map(|k| {
            let (i, j) = ((k / size) as f64 - half, (k % size) as f64 - half);
            (-(i * i + j * j) / (2.0 * variance)).exp()
        })
        .collect();
    PsfKernel::new(size, weights)?.normalize()
}

/// Uniform disk of the given radius with antialiased boundary pixels, each
/// weighted by the fraction of an 8x8 subpixel grid falling inside the disk.
pub fn out_of_focus_psf(radius: f64, size: usize) -> Result<PsfKernel> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be > 0, got {radius}")));
    }
    if size % 2 == 0 || (size as f64) < 2.0 * radius + 1.0 {
        return Err(Error::InvalidParameter(format!(
            "disk of radius {radius} needs an odd size >= {}, got {size}",
            (2.0 * radius + 1.0).ceil()
        )));
    }
    let half = (size / 2) as f64;
    let step = 1.0 / DISK_SUBSAMPLES as f64;
    let r2 = radius * radius;
    let weights = (0..size * size)
        .map(|k| {
            let (ci, cj) = ((k / size) as f64 - half, (k % size) as f64 - half);
            let mut inside = 0usize;
            for si in 0..DISK_SUBSAMPLES {
                for sj in 0..DISK_SUBSAMPLES {
                    let y = ci - 0.5 + (si as f64 + 0.5) * step;
                    let x = cj - 0.5 + (sj as f64 + 0.5) * step;
                    if x * x + y * y <= r2 {
                        inside += 1;
                    }
                }
            }
            inside as f64
        })
        .collect();
    PsfKernel::new(size, weights)?.normalize()
}

/// Named PSF choices with their parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PsfChoice {
    Gaussian { variance: f64 },
    OutOfFocus { radius: f64 },
    None,
}

impl PsfChoice {
    pub fn kernel(&self) -> Result<PsfKernel> {
        match *self {
            PsfChoice::Gaussian { variance } => {
                let sigma = variance.sqrt();
                gaussian_psf(variance, 2 * (4.0 * sigma).ceil() as usize + 1)
            }
            PsfChoice::OutOfFocus { radius } => out_of_focus_psf(radius, 2 * radius.ceil() as usize + 1),
            PsfChoice::None => PsfKernel::new(1, vec![1.0])?.normalize(),
        }
    }

    pub fn operator(&self, height: usize, width: usize) -> Result<BccbOperator> {
        make_blur_operator(&self.kernel()?, height, width)
    }

    /// Short label used in benchmark tables.
    pub fn label(&self) -> &'static str {
        match self {
            PsfChoice::Gaussian { .. } => "Gaussian",
            PsfChoice::OutOfFocus { .. } => "Out-of-focus",
            PsfChoice::None => "None",
        }
    }
}

impl fmt::Display for PsfChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsfChoice::Gaussian { variance } => write!(f, "gaussian:{variance}"),
            PsfChoice::OutOfFocus { radius } => write!(f, "disk:{radius}"),
            PsfChoice::None => write!(f, "none"),
        }
    }
}

impl FromStr for PsfChoice {
    type Err = Error;

    /// Parses `gaussian:<variance>`, `disk:<radius>` (alias `oof`) or `none`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(PsfChoice::None);
        }
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("PSF spec '{s}' is not kind:value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad PSF parameter in '{s}'")))?;
        match kind.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" => Ok(PsfChoice::Gaussian { variance: value }),
            "disk" | "oof" | "out-of-focus" => Ok(PsfChoice::OutOfFocus { radius: value }),
            other => Err(Error::InvalidParameter(format!("unknown PSF kind '{other}'"))),
        }
    }
}

/// Intensity profile inside each stripe of the phantom.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StripeProfile {
    Constant,
    Affine,
}

impl FromStr for StripeProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "constant" => Ok(StripeProfile::Constant),
            "affine" => Ok(StripeProfile::Affine),
            other => Err(Error::InvalidParameter(format!("unknown stripe profile '{other}'"))),
        }
    }
}

/// Directional phantom made of `num_stripes` bands of random width and
/// intensity, running along `(cos theta, sin theta)` in (column, row)
/// coordinates. Intensity depends only on the signed distance across the
/// stripes, so `D_theta` annihilates the interior of every band.
pub fn make_stripe_phantom(
    height: usize,
    width: usize,
    theta_true: f64,
    profile: StripeProfile,
    num_stripes: usize,
    seed: u64,
) -> Result<ImageGrid> {
    if num_stripes < 2 {
        return Err(Error::InvalidParameter("a phantom needs at least 2 stripes".into()));
    }
    if height == 0 || width == 0 {
        return Err(Error::InvalidGrid(format!("{height}x{width} phantom")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extent = ((height * height + width * width) as f64).sqrt() / 2.0 + 1.0;

    let widths: Vec<f64> = (0..num_stripes).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = widths.iter().sum();
    let mut edges = Vec::with_capacity(num_stripes + 1);
    edges.push(-extent);
    for w in &widths {
        edges.push(edges.last().unwrap() + 2.0 * extent * w / total);
    }

    // Alternate dark and bright bands so that neighbours always contrast.
    let bands: Vec<(f64, f64)> = (0..num_stripes)
        .map(|i| {
            let level = if i % 2 == 0 {
                rng.random_range(0.05..0.35)
            } else {
                rng.random_range(0.6..0.9)
            };
            let slope = match profile {
                StripeProfile::Constant => 0.0,
                StripeProfile::Affine => rng.random_range(-0.1..0.1),
            };
            (level, slope)
        })
        .collect();

    let (sin, cos) = theta_true.sin_cos();
    let cy = (height as f64 - 1.0) / 2.0;
    let cx = (width as f64 - 1.0) / 2.0;
    let img = ImageGrid::from_fn(height, width, |r, c| {
        let s = -sin * (c as f64 - cx) + cos * (r as f64 - cy);
        let k = edges[1..].partition_point(|&e| e <= s).min(num_stripes - 1);
        let (level, slope) = bands[k];
        let mid = 0.5 * (edges[k] + edges[k + 1]);
        let half = 0.5 * (edges[k + 1] - edges[k]);
        (level + slope * (s - mid) / half).clamp(0.0, 1.0)
    });
    // Peak at 1, the same scale as a max-normalized observation.
    let peak = img.max();
    Ok(img.scaled(1.0 / peak))
}

/// Settings for [`degrade`].
#[derive(Clone, Debug, PartialEq)]
pub struct DegradationConfig {
    pub psf: PsfChoice,
    /// Target SNR in dB.
    pub target_snr: f64,
    pub gamma_const: f64,
    pub seed: u64,
}

impl DegradationConfig {
    pub fn new(psf: PsfChoice, target_snr: f64, seed: u64) -> Self {
        Self {
            psf,
            target_snr,
            gamma_const: DEFAULT_GAMMA,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.target_snr.is_finite() {
            return Err(Error::InvalidParameter("target SNR must be finite".into()));
        }
        if !(self.gamma_const > 0.0) {
            return Err(Error::InvalidParameter("gamma must be > 0".into()));
        }
        Ok(())
    }
}

/// Result of [`degrade`].
#[derive(Clone, Debug)]
pub struct Degraded {
    /// Observed image, normalized to max 1.
    pub b: ImageGrid,
    /// Photon scale applied to the blurred image before sampling.
    pub scale: f64,
    /// SNR of the pre-noise intensities at `scale`.
    pub snr: f64,
    /// Largest sampled count; `b * peak_count` gives the raw counts.
    pub peak_count: f64,
}

/// Poisson SNR estimate `10 log10(N_exact / sqrt(N_exact + N_background))`.
pub fn poisson_snr(n_exact: f64, n_background: f64) -> f64 {
    10.0 * (n_exact / (n_exact + n_background).sqrt()).log10()
}

/// Scales `u_true` so that the blurred photon counts hit the target SNR, adds
/// the background, draws Poisson counts and normalizes the result to max 1.
pub fn degrade(u_true: &ImageGrid, config: &DegradationConfig, blur: &BccbOperator) -> Result<Degraded> {
    config.validate()?;
    if u_true.min() < 0.0 {
        return Err(Error::Domain("the reference image must be nonnegative".into()));
    }
    let fft = Fft2::new(u_true.height(), u_true.width());
    let blurred = blur.apply(&fft, u_true)?.map(|v| v.max(0.0));
    let n_image: f64 = blurred.sum();
    let n_background = config.gamma_const * blurred.len() as f64;
    let scale = snr_scale(n_image, n_background, config.target_snr)?;

    let means: Vec<f64> = blurred.data().iter().map(|&v| scale * v + config.gamma_const).collect();
    let mut counts = sample_poisson(&means, config.seed)?;
    let peak = counts.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        counts.iter_mut().for_each(|c| *c /= peak);
    }
    Ok(Degraded {
        b: ImageGrid::new(u_true.height(), u_true.width(), counts)?,
        scale,
        snr: poisson_snr(scale * n_image, n_background),
        peak_count: peak,
    })
}

/// One Poisson draw per mean, from a generator seeded with `seed`.
pub fn sample_poisson(means: &[f64], seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    means
        .iter()
        .map(|&mean| {
            Poisson::new(mean)
                .map(|dist| dist.sample(&mut rng))
                .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))
        })
        .collect()
}

/// Finds `s` with `poisson_snr(s * n_image, n_background) == target` by
/// bisection on `log s`; the SNR is strictly increasing in `s`.
fn snr_scale(n_image: f64, n_background: f64, target: f64) -> Result<f64> {
    if !(n_image > 0.0) {
        return Err(Error::UnreachableSnr {
            target,
            reason: "the blurred image carries no photons".into(),
        });
    }
    let snr_at = |log_s: f64| poisson_snr(log_s.exp() * n_image, n_background);
    let (mut lo, mut hi) = (-300.0_f64 * std::f64::consts::LN_10 / 10.0, 60.0 * std::f64::consts::LN_10);
    if !(snr_at(lo) <= target && snr_at(hi) >= target) {
        return Err(Error::UnreachableSnr {
            target,
            reason: "target outside the bracketed range".into(),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if snr_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}
