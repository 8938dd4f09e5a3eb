//! Estimation of the dominant texture direction.
//!
//! Pipeline: Sobel edge magnitude, Otsu binarization, a disk mask that
//! removes the corners (where diagonals would dominate the vote), a Hough
//! transform over integer angles, and a per-angle score equal to the squared
//! 2-norm of the accumulator column. The angle of the best column is the
//! normal of the detected lines and is mapped back to the stripe direction.
//!
//! Hough coordinates are centered at the grid center with `x` growing to the
//! right and `y` growing upward, so a returned `theta` is expressed in the
//! same (column, row) frame as `D_theta = cos(theta) D_H + sin(theta) D_V`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// Number of Otsu histogram bins.
const OTSU_BINS: usize = 256;

/// Angle columns of the accumulator: `eta` in `-90..=89` degrees.
pub const ETA_MIN: i32 = -90;
pub const NUM_ANGLES: usize = 180;

/// What each edge pixel contributes to the Hough accumulator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HoughWeighting {
    /// One vote per Otsu-flagged pixel.
    #[default]
    Flags,
    /// The Sobel magnitude of each flagged pixel.
    Magnitude,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DirectionConfig {
    pub weighting: HoughWeighting,
}

/// Sobel magnitude plus its binarization.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeImage {
    height: usize,
    width: usize,
    magnitude: Vec<f64>,
    flags: Vec<bool>,
}

impl EdgeImage {
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn magnitude_image(&self) -> ImageGrid {
        ImageGrid::from_vec_unchecked(self.height, self.width, self.magnitude.clone())
    }

    pub fn flag_image(&self) -> ImageGrid {
        ImageGrid::from_vec_unchecked(
            self.height,
            self.width,
            self.flags.iter().map(|&f| if f { 1.0 } else { 0.0 }).collect(),
        )
    }

    /// Builds an edge image from explicit flags; magnitudes are set to the
    /// flag values.
    pub fn from_flags(height: usize, width: usize, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != height * width {
            return Err(Error::InvalidGrid(format!(
                "{} flags for a {height}x{width} grid",
                flags.len()
            )));
        }
        Ok(Self {
            height,
            width,
            magnitude: flags.iter().map(|&f| if f { 1.0 } else { 0.0 }).collect(),
            flags,
        })
    }
}

/// Sobel gradient magnitude with replicated borders, binarized by Otsu.
///
/// A constant image yields zero magnitude and no flags.
pub fn sobel_edges(b: &ImageGrid) -> Result<EdgeImage> {
    let (h, w) = b.shape();
    if h < 3 || w < 3 {
        return Err(Error::InvalidGrid(format!("Sobel needs at least 3x3 pixels, got {h}x{w}")));
    }
    let at = |r: isize, c: isize| {
        let r = r.clamp(0, h as isize - 1) as usize;
        let c = c.clamp(0, w as isize - 1) as usize;
        b.get(r, c)
    };
    let mut magnitude = vec![0.0; h * w];
    for c in 0..w as isize {
        for r in 0..h as isize {
            let gx = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
            let gy = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
            magnitude[c as usize * h + r as usize] = gx.hypot(gy);
        }
    }
    let flags = otsu_flags(&magnitude);
    Ok(EdgeImage {
        height: h,
        width: w,
        magnitude,
        flags,
    })
}

/// Flags values strictly above the Otsu threshold of a 256-bin histogram
/// over `[0, max]`.
fn otsu_flags(values: &[f64]) -> Vec<bool> {
    let peak = values.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return vec![false; values.len()];
    }
    let bin = |v: f64| ((v / peak * OTSU_BINS as f64) as usize).min(OTSU_BINS - 1);
    let mut hist = [0usize; OTSU_BINS];
    for &v in values {
        hist[bin(v)] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &n)| i as f64 * n as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut threshold) = (-1.0, 0usize);
    for (t, &n) in hist.iter().enumerate() {
        w0 += n as f64;
        sum0 += t as f64 * n as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best {
            best = between;
            threshold = t;
        }
    }
    values.iter().map(|&v| bin(v) > threshold).collect()
}

/// Zeroes every pixel farther than `min(H, W) / 2` from the grid center.
pub fn apply_disk_mask(e: &EdgeImage) -> EdgeImage {
    let (h, w) = e.shape();
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let radius = h.min(w) as f64 / 2.0;
    let mut out = e.clone();
    for c in 0..w {
        for r in 0..h {
            let (dy, dx) = (r as f64 - cy, c as f64 - cx);
            if dx.hypot(dy) > radius {
                let i = c * h + r;
                out.magnitude[i] = 0.0;
                out.flags[i] = false;
            }
        }
    }
    out
}

/// Hough accumulator over `(r, eta)` with 1-pixel by 1-degree bins.
#[derive(Clone, Debug, PartialEq)]
pub struct HoughAccumulator {
    r_max: usize,
    counts: Vec<f64>,
}

impl HoughAccumulator {
    pub fn r_max(&self) -> usize {
        self.r_max
    }

    pub fn num_offsets(&self) -> usize {
        2 * self.r_max + 1
    }

    /// Column for angle `eta` (degrees), indexed by `r + r_max`.
    pub fn column(&self, eta: i32) -> &[f64] {
        let m = self.num_offsets();
        let j = (eta - ETA_MIN) as usize;
        &self.counts[j * m..(j + 1) * m]
    }

    pub fn get(&self, r: i64, eta: i32) -> f64 {
        self.column(eta)[(r + self.r_max as i64) as usize]
    }

    /// Builds an accumulator from explicit columns, mostly for tests.
    pub fn from_columns(r_max: usize, columns: &[Vec<f64>]) -> Result<Self> {
        if columns.len() != NUM_ANGLES || columns.iter().any(|c| c.len() != 2 * r_max + 1) {
            return Err(Error::InvalidParameter("accumulator needs 180 columns of 2 r_max + 1 bins".into()));
        }
        if columns.iter().flatten().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidParameter("accumulator entries must be >= 0".into()));
        }
        Ok(Self {
            r_max,
            counts: columns.concat(),
        })
    }

    /// The accumulator as an image: one row per offset, one column per angle.
    pub fn to_image(&self) -> ImageGrid {
        ImageGrid::from_vec_unchecked(self.num_offsets(), NUM_ANGLES, self.counts.clone())
    }
}

pub fn hough_transform(e: &EdgeImage) -> HoughAccumulator {
    hough_transform_with(e, HoughWeighting::Flags)
}

pub fn hough_transform_with(e: &EdgeImage, weighting: HoughWeighting) -> HoughAccumulator {
    let (h, w) = e.shape();
    let r_max = (((h * h + w * w) as f64).sqrt() / 2.0).ceil() as usize;
    let m = 2 * r_max + 1;
    let mut counts = vec![0.0; NUM_ANGLES * m];
    let trig: Vec<(f64, f64)> = (0..NUM_ANGLES)
        .map(|j| ((ETA_MIN + j as i32) as f64).to_radians().sin_cos())
        .collect();
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    for c in 0..w {
        for r in 0..h {
            let i = c * h + r;
            if !e.flags[i] {
                continue;
            }
            let vote = match weighting {
                HoughWeighting::Flags => 1.0,
                HoughWeighting::Magnitude => e.magnitude[i],
            };
            let x = c as f64 - cx;
            let y = cy - r as f64;
            for (j, &(sin, cos)) in trig.iter().enumerate() {
                let rho = (x * cos + y * sin).round() as i64;
                counts[j * m + (rho + r_max as i64) as usize] += vote;
            }
        }
    }
    HoughAccumulator { r_max, counts }
}

/// `score(eta) = sum_r h(r, eta)^2` for each of the 180 angle columns.
pub fn angle_scores(h: &HoughAccumulator) -> Vec<f64> {
    (0..NUM_ANGLES)
        .map(|j| h.column(ETA_MIN + j as i32).iter().map(|v| v * v).sum())
        .collect()
}

/// Maps the best line-normal angle (degrees) to the texture direction.
pub fn eta_to_theta(eta_max: i32) -> f64 {
    let eta = eta_max as f64;
    if eta_max >= 0 {
        (90.0 - eta) * PI / 180.0
    } else {
        (-90.0 - eta) * PI / 180.0
    }
}

/// Result of the direction estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionEstimate {
    /// Texture direction in radians.
    pub theta: f64,
    /// Winning Hough angle in degrees.
    pub eta_max: i32,
    /// Score of each angle `eta = -90 + index`.
    pub scores: Vec<f64>,
}

impl DirectionEstimate {
    pub fn theta_degrees(&self) -> f64 {
        self.theta.to_degrees()
    }
}

/// Every intermediate product of the estimator, for inspection and dumps.
#[derive(Clone, Debug)]
pub struct DirectionTrace {
    pub edges: EdgeImage,
    pub masked: EdgeImage,
    pub accumulator: HoughAccumulator,
    pub estimate: DirectionEstimate,
}

pub fn estimate_direction(b: &ImageGrid) -> Result<DirectionEstimate> {
    Ok(estimate_direction_traced(b, &DirectionConfig::default())?.estimate)
}

pub fn estimate_direction_with(b: &ImageGrid, config: &DirectionConfig) -> Result<DirectionEstimate> {
    Ok(estimate_direction_traced(b, config)?.estimate)
}

pub fn estimate_direction_traced(b: &ImageGrid, config: &DirectionConfig) -> Result<DirectionTrace> {
    let edges = sobel_edges(b)?;
    let masked = apply_disk_mask(&edges);
    let accumulator = hough_transform_with(&masked, config.weighting);
    let scores = angle_scores(&accumulator);
    let eta_max = best_angle(&scores).ok_or(Error::NoDirection)?;
    Ok(DirectionTrace {
        edges,
        masked,
        accumulator,
        estimate: DirectionEstimate {
            theta: eta_to_theta(eta_max),
            eta_max,
            scores,
        },
    })
}

/// Argmax of the scores; ties go to the smallest `|eta|`, then to positive
/// `eta`. `None` when every score is zero.
pub fn best_angle(scores: &[f64]) -> Option<i32> {
    let mut best: Option<(f64, i32)> = None;
    for (j, &s) in scores.iter().enumerate() {
        let eta = ETA_MIN + j as i32;
        let better = match best {
            None => true,
            Some((bs, be)) => s > bs || (s == bs && (eta.abs() < be.abs() || (eta.abs() == be.abs() && eta > be))),
        };
        if better {
            best = Some((s, eta));
        }
    }
    best.filter(|(s, _)| *s > 0.0).map(|(_, eta)| eta)
}

/// Smallest angle between two undirected directions, in degrees.
pub fn direction_error_degrees(theta_a: f64, theta_b: f64) -> f64 {
    let d = (theta_a - theta_b).to_degrees().rem_euclid(180.0);
    d.min(180.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_no_edges() {
        let e = sobel_edges(&ImageGrid::filled(6, 7, 3.0)).unwrap();
        assert!(e.magnitude().iter().all(|&m| m == 0.0));
        assert_eq!(e.flagged_count(), 0);
    }

    #[test]
    fn vertical_step_lights_two_columns() {
        let img = ImageGrid::from_fn(6, 8, |_, c| if c < 4 { 0.0 } else { 1.0 });
        let e = sobel_edges(&img).unwrap();
        for c in 0..8 {
            for r in 0..6 {
                let m = e.magnitude()[c * 6 + r];
                if c == 3 || c == 4 {
                    assert_eq!(m, 4.0);
                } else {
                    assert_eq!(m, 0.0);
                }
            }
        }
    }

    #[test]
    fn single_pixel_gives_ring_of_eight() {
        let mut img = ImageGrid::zeros(5, 5);
        img.set(2, 2, 1.0);
        let e = sobel_edges(&img).unwrap();
        let mag = e.magnitude_image();
        // Direct stencil: edge neighbours see weight 2, corners see (1, 1).
        for r in 0..5 {
            for c in 0..5 {
                let (dr, dc) = (r as i32 - 2, c as i32 - 2);
                let expected = match (dr.abs(), dc.abs()) {
                    (0, 0) => 0.0,
                    (1, 1) => 2f64.sqrt(),
                    (0, 1) | (1, 0) => 2.0,
                    _ => 0.0,
                };
                assert!((mag.get(r, c) - expected).abs() < 1e-12, "({r},{c})");
            }
        }
    }

    #[test]
    fn mask_drops_corners_keeps_center() {
        let e = EdgeImage::from_flags(9, 9, vec![true; 81]).unwrap();
        let m = apply_disk_mask(&e);
        assert!(!m.flags()[0]);
        assert!(m.flags()[4 * 9 + 4]);
    }

    #[test]
    fn center_pixel_votes_r_zero_everywhere() {
        let mut flags = vec![false; 49];
        flags[3 * 7 + 3] = true;
        let acc = hough_transform(&EdgeImage::from_flags(7, 7, flags).unwrap());
        for eta in ETA_MIN..ETA_MIN + NUM_ANGLES as i32 {
            assert_eq!(acc.get(0, eta), 1.0);
            assert_eq!(acc.column(eta).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn empty_edges_give_empty_accumulator_and_no_direction() {
        let acc = hough_transform(&EdgeImage::from_flags(5, 5, vec![false; 25]).unwrap());
        assert!(angle_scores(&acc).iter().all(|&s| s == 0.0));
        assert!(matches!(
            estimate_direction(&ImageGrid::zeros(16, 16)),
            Err(Error::NoDirection)
        ));
    }

    #[test]
    fn scores_are_column_sums_of_squares() {
        let mut cols = vec![vec![0.0; 3]; NUM_ANGLES];
        cols[10] = vec![3.0, 0.0, 4.0];
        let acc = HoughAccumulator::from_columns(1, &cols).unwrap();
        let s = angle_scores(&acc);
        assert_eq!(s[10], 25.0);
        cols[10] = vec![4.0, 3.0, 0.0];
        let permuted = HoughAccumulator::from_columns(1, &cols).unwrap();
        assert_eq!(angle_scores(&permuted), s);
    }

    #[test]
    fn eta_mapping_branches() {
        assert_eq!(eta_to_theta(90), 0.0);
        assert_eq!(eta_to_theta(-90), 0.0);
        assert!((eta_to_theta(-45) + PI / 4.0).abs() < 1e-15);
        assert!((eta_to_theta(0) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn ties_prefer_small_then_positive_eta() {
        let mut s = vec![0.0; NUM_ANGLES];
        s[(10 - ETA_MIN) as usize] = 5.0;
        s[(-10 - ETA_MIN) as usize] = 5.0;
        s[(40 - ETA_MIN) as usize] = 5.0;
        assert_eq!(best_angle(&s), Some(10));
        assert_eq!(best_angle(&vec![0.0; NUM_ANGLES]), None);
    }

    #[test]
    fn direction_error_wraps() {
        assert!((direction_error_degrees(89f64.to_radians(), (-89f64).to_radians()) - 2.0).abs() < 1e-9);
        assert!(direction_error_degrees(0.3, 0.3 + PI) < 1e-9);
    }
}
