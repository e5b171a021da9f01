use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::real::Real;

/// Which basis the values of a [`ScalarField`] are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Point values at the collocation nodes.
    Nodal,
    /// Amplitudes `c_k` of the tensor cosine modes `prod_i cos(pi k_i x_i / L_i)`;
    /// `c_0` is the mean of the field.
    Spectral,
}

/// Real-valued field on a Neumann grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: GridSpec<T>,
    values: Vec<T>,
    repr: Representation,
}

impl<T: Real> ScalarField<T> {
    /// Nodal field; rejects NaN/Inf entries and wrong lengths.
    pub fn from_nodal(grid: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        Self::with_representation(grid, values, Representation::Nodal)
    }

    /// Field given by its cosine amplitudes.
    pub fn from_spectral(grid: GridSpec<T>, coefficients: Vec<T>) -> Result<Self> {
        Self::with_representation(grid, coefficients, Representation::Spectral)
    }

    pub fn with_representation(grid: GridSpec<T>, values: Vec<T>, repr: Representation) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values, repr })
    }

    /// Internal constructor for values already known to be finite.
    pub(crate) fn from_parts(grid: GridSpec<T>, values: Vec<T>, repr: Representation) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values, repr }
    }

    pub fn constant(grid: GridSpec<T>, value: T) -> Self {
        let n = grid.len();
        Self::from_parts(grid, vec![value; n], Representation::Nodal)
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Sample a function of the node coordinates.
    pub fn from_fn(grid: GridSpec<T>, f: impl FnMut(&[T]) -> T) -> Result<Self> {
        let values = grid.sample(f);
        Self::from_nodal(grid, values)
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn is_nodal(&self) -> bool {
        self.repr == Representation::Nodal
    }

    /// Mean value. Exact in both representations (`c_0` is the mean).
    pub fn mean(&self) -> T {
        match self.repr {
            Representation::Spectral => self.values[0],
            Representation::Nodal => self.values.iter().copied().sum::<T>() / T::from_usize_lossy(self.values.len()),
        }
    }

    /// Largest absolute value of the stored numbers.
    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Pointwise map of a nodal field.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_parts(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
            self.repr,
        )
    }

    /// `a * self + b * other`, both in the same representation.
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.ensure_same_grid(other)?;
        if self.repr != other.repr {
            return Err(Error::InvalidParameter(
                "operands are in different representations".into(),
            ));
        }
        Ok(Self::from_parts(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
            self.repr,
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpby(T::one(), other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpby(T::one(), other, -T::one())
    }

    pub fn scale(&self, a: T) -> Self {
        self.map(|v| a * v)
    }

    /// Quadrature `integral(f)`: collocation sum times cell volume (nodal only).
    pub fn integral(&self) -> T {
        debug_assert!(self.is_nodal());
        self.values.iter().copied().sum::<T>() * self.grid.cell_volume()
    }

    /// Largest pointwise difference to another field.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}
