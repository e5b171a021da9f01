use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Smallest admissible number of nodes per axis.
pub const MIN_NODES: usize = 8;

/// Tensor-product box `[0, L_0] x ... x [0, L_{d-1}]` sampled at the
/// cosine-collocation points `x_j = L (j + 1/2) / N`.
///
/// Node storage is row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    lengths: Vec<T>,
    counts: Vec<usize>,
}

impl<T: Real> GridSpec<T> {
    pub fn new(lengths: Vec<T>, counts: Vec<usize>) -> Result<Self> {
        if lengths.len() != counts.len() {
            return Err(Error::InvalidGrid(format!(
                "{} lengths but {} node counts",
                lengths.len(),
                counts.len()
            )));
        }
        if !(1..=3).contains(&counts.len()) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3 (got {})",
                counts.len()
            )));
        }
        if let Some(&n) = counts.iter().find(|&&n| n < MIN_NODES) {
            return Err(Error::InvalidGrid(format!(
                "every axis needs at least {MIN_NODES} nodes (got {n})"
            )));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > T::zero())) {
            return Err(Error::InvalidGrid(format!(
                "edge lengths must be positive and finite (got {l})"
            )));
        }
        Ok(Self { lengths, counts })
    }

    /// Square/cubic grid with equal edge length and node count on every axis.
    pub fn uniform(dim: usize, length: T, count: usize) -> Result<Self> {
        Self::new(vec![length; dim], vec![count; dim])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn lengths(&self) -> &[T] {
        &self.lengths
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> T {
        self.lengths[axis] / T::from_usize_lossy(self.counts[axis])
    }

    pub fn cell_volume(&self) -> T {
        (0..self.dim())
            .map(|a| self.spacing(a))
            .fold(T::one(), |acc, h| acc * h)
    }

    /// Measure of the domain.
    pub fn volume(&self) -> T {
        self.lengths.iter().fold(T::one(), |acc, &l| acc * l)
    }

    /// Coordinate of node `j` along `axis`.
    pub fn coordinate(&self, axis: usize, j: usize) -> T {
        self.spacing(axis) * (T::from_usize_lossy(j) + T::lit(0.5))
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for a in (0..self.dim().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.counts[a + 1];
        }
        strides
    }

    /// Multi-index of a flat node index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.counts[a];
            flat /= self.counts[a];
        }
        idx
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Physical coordinates of a flat node index.
    pub fn point(&self, flat: usize) -> Vec<T> {
        self.unravel(flat)
            .iter()
            .enumerate()
            .map(|(a, &j)| self.coordinate(a, j))
            .collect()
    }

    /// Distance from a node to the nearest face of the box.
    pub fn distance_to_boundary(&self, flat: usize) -> T {
        self.point(flat)
            .iter()
            .zip(&self.lengths)
            .map(|(&x, &l)| x.min(l - x))
            .fold(T::infinity(), T::min)
    }

    /// Same grid with every node count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            lengths: self.lengths.clone(),
            counts: self.counts.iter().map(|&n| n * factor).collect(),
        }
    }

    /// Evaluate `f` at every node, row-major.
    pub fn sample(&self, mut f: impl FnMut(&[T]) -> T) -> Vec<T> {
        (0..self.len()).map(|i| f(&self.point(i))).collect()
    }
}
