//! Pixel containers.
//!
//! Every image is stored as a flat `Vec<f64>` in column-major order: pixel
//! `(row, col)` lives at index `col * height + row`. Stacked fields keep
//! their `K` blocks back to back in the same order, so block `i` of a
//! [`StackedField`] occupies `i * n .. (i + 1) * n`.

use crate::error::{Error, Result};

/// A real-valued `height x width` image.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidGrid(format!("{height}x{width} has no pixels")));
        }
        if data.len() != height * width {
            return Err(Error::InvalidGrid(format!(
                "{height}x{width} grid needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at index {i}")));
        }
        Ok(Self { height, width, data })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "empty grid");
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    /// Builds an image from `f(row, col)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "empty grid");
        let mut data = Vec::with_capacity(height * width);
        for c in 0..width {
            for r in 0..height {
                data.push(f(r, c));
            }
        }
        Self { height, width, data }
    }

    /// Builds an image from row-major nested rows, handy in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidGrid("ragged rows".into()));
        }
        Self::new(
            height,
            width,
            (0..width)
                .flat_map(|c| rows.iter().map(move |row| row[c]))
                .collect(),
        )
    }

    pub(crate) fn from_vec_unchecked(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self { height, width, data }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        col * self.height + row
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.height + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let h = self.height;
        self.data[col * h + row] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.data)
    }

    pub fn ensure_same_shape(&self, other: &ImageGrid) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                got: other.shape(),
            });
        }
        Ok(())
    }
}

/// `K` image-shaped blocks stored contiguously.
///
/// `StackedField<2>` holds gradient-like fields (`w`, `z2`), `StackedField<4>`
/// the symmetrized derivative output (`z3`).
#[derive(Clone, Debug, PartialEq)]
pub struct StackedField<const K: usize> {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

pub type StackedField2 = StackedField<2>;
pub type StackedField4 = StackedField<4>;

impl<const K: usize> StackedField<K> {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; K * height * width],
        }
    }

    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != K * height * width {
            return Err(Error::InvalidGrid(format!(
                "{K}-stack over {height}x{width} needs {} values, got {}",
                K * height * width,
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn from_blocks(blocks: [&ImageGrid; K]) -> Result<Self> {
        let (height, width) = blocks[0].shape();
        let mut data = Vec::with_capacity(K * height * width);
        for b in blocks {
            blocks[0].ensure_same_shape(b)?;
            data.extend_from_slice(b.data());
        }
        Ok(Self { height, width, data })
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn block_len(&self) -> usize {
        self.height * self.width
    }

    pub fn block(&self, i: usize) -> &[f64] {
        let n = self.block_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.block_len();
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn block_image(&self, i: usize) -> ImageGrid {
        ImageGrid::from_vec_unchecked(self.height, self.width, self.block(i).to_vec())
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.data)
    }

    /// The `K`-vector gathered across blocks at pixel `j`.
    pub fn pixel(&self, j: usize) -> [f64; K] {
        let n = self.block_len();
        std::array::from_fn(|i| self.data[i * n + j])
    }

    pub fn ensure_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                got: self.shape(),
            });
        }
        Ok(())
    }
}

/// A vector of the `8n`-dimensional splitting space, partitioned as
/// `(n, 2n, 4n, n)`. Holds `z` and the scaled multipliers `mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitVector {
    pub z1: ImageGrid,
    pub z2: StackedField2,
    pub z3: StackedField4,
    pub z4: ImageGrid,
}

impl SplitVector {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            z1: ImageGrid::zeros(height, width),
            z2: StackedField2::zeros(height, width),
            z3: StackedField4::zeros(height, width),
            z4: ImageGrid::zeros(height, width),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.z1.shape()
    }

    pub fn len(&self) -> usize {
        8 * self.z1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z1.is_empty()
    }

    pub fn ensure_consistent(&self) -> Result<()> {
        let shape = self.z1.shape();
        self.z1.ensure_same_shape(&self.z4)?;
        self.z2.ensure_shape(shape)?;
        self.z3.ensure_shape(shape)
    }

    /// Iterates the four partitions as flat slices.
    pub fn parts(&self) -> [&[f64]; 4] {
        [self.z1.data(), self.z2.data(), self.z3.data(), self.z4.data()]
    }

    pub fn parts_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.z1.data_mut(),
            self.z2.data_mut(),
            self.z3.data_mut(),
            self.z4.data_mut(),
        ]
    }

    /// Elementwise `self + sign * other`.
    pub fn combine(&self, other: &SplitVector, sign: f64) -> SplitVector {
        let mut out = self.clone();
        for (dst, src) in out.parts_mut().into_iter().zip(other.parts()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += sign * s;
            }
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.parts()
            .iter()
            .map(|p| p.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.parts().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
