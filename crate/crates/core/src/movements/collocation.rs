//! Grid on which the nonlinearity is evaluated: the computational grid, or
//! the twice-refined grid when dealiasing by zero padding is requested.

use crate::real::Real;
use crate::spectral::transform::CosineTransform;
use crate::spectral::{FractionalOperator, GridSpec};

#[derive(Debug, Clone)]
pub(crate) struct Collocation<T: Real> {
    transform: CosineTransform<T>,
    cell_volume: T,
    /// Position of each computational mode inside the padded spectrum.
    padded: Option<Vec<usize>>,
    len: usize,
}

impl<T: Real> Collocation<T> {
    pub fn new(op: &FractionalOperator<T>, dealias: bool) -> Self {
        let grid = op.grid();
        if !dealias {
            return Self {
                transform: op.transform().clone(),
                cell_volume: grid.cell_volume(),
                padded: None,
                len: grid.len(),
            };
        }
        let fine: GridSpec<T> = grid.refined(2);
        let map = (0..grid.len()).map(|k| fine.flat(&grid.unravel(k))).collect();
        Self {
            transform: CosineTransform::new(fine.counts()),
            cell_volume: fine.cell_volume(),
            padded: Some(map),
            len: fine.len(),
        }
    }

    /// Node values on the evaluation grid of a coefficient vector.
    pub fn nodal(&self, coeffs: &[T]) -> Vec<T> {
        let mut data = match &self.padded {
            None => coeffs.to_vec(),
            Some(map) => {
                let mut d = vec![T::zero(); self.len];
                for (&c, &i) in coeffs.iter().zip(map) {
                    d[i] = c;
                }
                d
            }
        };
        self.transform.inverse(&mut data);
        data
    }

    /// Coefficients (truncated to the computational modes) of node values on
    /// the evaluation grid.
    pub fn coefficients(&self, mut values: Vec<T>) -> Vec<T> {
        self.transform.forward(&mut values);
        match &self.padded {
            None => values,
            Some(map) => map.iter().map(|&i| values[i]).collect(),
        }
    }

    /// Quadrature over the evaluation grid.
    pub fn integral(&self, values: &[T]) -> T {
        values.iter().copied().sum::<T>() * self.cell_volume
    }
}
