//! Spectral realization of the Neumann Laplacian `A = -Δ` on a box and of
//! its real powers, acting diagonally on the tensor cosine basis.

use super::field::{Representation, ScalarField};
use super::grid::GridSpec;
use super::transform::{CosineTransform, Parity};
use crate::error::{Error, Result};
use crate::real::Real;

/// Default relative tolerance for membership in the mean-zero subspace.
pub const DEFAULT_MEAN_TOL: f64 = 1e-10;

/// Neumann Laplacian with eigenvalues `λ_k = Σ_i (π k_i / L_i)²`.
#[derive(Debug, Clone)]
pub struct FractionalOperator<T: Real> {
    grid: GridSpec<T>,
    eigenvalues: Vec<T>,
    weights: Vec<T>,
    transform: CosineTransform<T>,
    mean_tol: T,
}

impl<T: Real> FractionalOperator<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        let n = grid.len();
        let mut eigenvalues = vec![T::zero(); n];
        let mut weights = vec![T::one(); n];
        let wavenumbers: Vec<T> = (0..grid.dim()).map(|a| T::PI() / grid.lengths()[a]).collect();
        for flat in 0..n {
            for (a, &k) in grid.unravel(flat).iter().enumerate() {
                let q = wavenumbers[a] * T::from_usize_lossy(k);
                eigenvalues[flat] = eigenvalues[flat] + q * q;
                if k > 0 {
                    weights[flat] = weights[flat] * T::lit(0.5);
                }
            }
        }
        let transform = CosineTransform::new(grid.counts());
        Self {
            grid,
            eigenvalues,
            weights,
            transform,
            mean_tol: T::lit(DEFAULT_MEAN_TOL),
        }
    }

    pub fn with_mean_tol(mut self, tol: T) -> Self {
        self.mean_tol = tol;
        self
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn mean_tol(&self) -> T {
        self.mean_tol
    }

    /// Eigenvalues in row-major mode order.
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// Parseval weights: `‖f‖² = |Ω| Σ_k w_k c_k²` with `w_k = 2^{-#(k_i > 0)}`.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn transform(&self) -> &CosineTransform<T> {
        &self.transform
    }

    fn check_grid(&self, f: &ScalarField<T>) -> Result<()> {
        if f.grid() == &self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Spectral form of `f` (no-op when already spectral).
    pub fn to_spectral(&self, f: &ScalarField<T>) -> Result<ScalarField<T>> {
        self.check_grid(f)?;
        Ok(match f.representation() {
            Representation::Spectral => f.clone(),
            Representation::Nodal => {
                let mut data = f.values().to_vec();
                self.transform.forward(&mut data);
                ScalarField::from_parts(self.grid.clone(), data, Representation::Spectral)
            }
        })
    }

    /// Nodal form of `f` (no-op when already nodal).
    pub fn to_nodal(&self, f: &ScalarField<T>) -> Result<ScalarField<T>> {
        self.check_grid(f)?;
        Ok(match f.representation() {
            Representation::Nodal => f.clone(),
            Representation::Spectral => {
                let mut data = f.values().to_vec();
                self.transform.inverse(&mut data);
                ScalarField::from_parts(self.grid.clone(), data, Representation::Nodal)
            }
        })
    }

    /// Coefficients of `f` as a plain vector.
    pub fn coefficients(&self, f: &ScalarField<T>) -> Result<Vec<T>> {
        Ok(self.to_spectral(f)?.into_values())
    }

    /// Multiply mode `k` by `symbol(λ_k, k)`, returning a field in the
    /// representation of the input.
    pub fn apply_symbol(&self, f: &ScalarField<T>, symbol: impl Fn(T, usize) -> T) -> Result<ScalarField<T>> {
        let mut c = self.coefficients(f)?;
        for (k, (ck, &lam)) in c.iter_mut().zip(&self.eigenvalues).enumerate() {
            if *ck != T::zero() {
                *ck = *ck * symbol(lam, k);
            }
        }
        self.finish(c, f.representation())
    }

    fn finish(&self, mut coeffs: Vec<T>, repr: Representation) -> Result<ScalarField<T>> {
        if repr == Representation::Nodal {
            self.transform.inverse(&mut coeffs);
        }
        ScalarField::with_representation(self.grid.clone(), coeffs, repr)
    }

    /// `A^s f`.
    pub fn apply_power(&self, s: T, f: &ScalarField<T>) -> Result<ScalarField<T>> {
        if !(s.is_finite() && s >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "power must be finite and non-negative (got {s})"
            )));
        }
        if s == T::zero() {
            self.check_grid(f)?;
            return Ok(f.clone());
        }
        self.apply_symbol(f, |lam, _| lam.powf(s))
    }

    /// Relative mean-zero check against `mean_tol`.
    pub fn check_mean_zero(&self, f: &ScalarField<T>) -> Result<()> {
        let c = self.coefficients(f)?;
        self.check_mean_zero_coefficients(&c)
    }

    pub(crate) fn check_mean_zero_coefficients(&self, c: &[T]) -> Result<()> {
        let rms = self.weighted_norm_sq(c).sqrt();
        let tol = self.mean_tol * rms;
        if c[0].abs() > tol {
            return Err(Error::NotMeanZero {
                mean: c[0].to_f64_lossy(),
                tolerance: tol.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// `A^{-s} f` for mean-zero `f`; the output has zero mean.
    pub fn apply_inverse_power(&self, s: T, f: &ScalarField<T>) -> Result<ScalarField<T>> {
        if !(s.is_finite() && s > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "inverse power must be positive and finite (got {s})"
            )));
        }
        let mut c = self.coefficients(f)?;
        self.check_mean_zero_coefficients(&c)?;
        c[0] = T::zero();
        for (ck, &lam) in c.iter_mut().zip(&self.eigenvalues).skip(1) {
            *ck = *ck / lam.powf(s);
        }
        self.finish(c, f.representation())
    }

    /// Solve `(a A^s + b A + c I) g = rhs`.
    pub fn solve_diagonal(&self, s: T, a: T, b: T, c: T, rhs: &ScalarField<T>) -> Result<ScalarField<T>> {
        let mut coeffs = self.coefficients(rhs)?;
        for (k, (ck, &lam)) in coeffs.iter_mut().zip(&self.eigenvalues).enumerate() {
            let lam_s = if s == T::zero() { T::one() } else { lam.powf(s) };
            let d = a * lam_s + b * lam + c;
            if !(d > T::zero()) {
                return Err(Error::NonPositiveSymbol {
                    index: k,
                    value: d.to_f64_lossy(),
                });
            }
            *ck = *ck / d;
        }
        self.finish(coeffs, rhs.representation())
    }

    /// Mixed partial derivative with `orders[i]` derivatives along axis `i`,
    /// returned in nodal form.
    pub fn derivative(&self, f: &ScalarField<T>, orders: &[usize]) -> Result<ScalarField<T>> {
        if orders.len() != self.grid.dim() {
            return Err(Error::InvalidParameter(format!(
                "expected {} derivative orders, got {}",
                self.grid.dim(),
                orders.len()
            )));
        }
        let mut c = self.coefficients(f)?;
        let parity = self.differentiate_coefficients(&mut c, orders);
        self.transform.evaluate(&mut c, &parity);
        ScalarField::from_nodal(self.grid.clone(), c)
    }

    /// Scale cosine amplitudes in place by the derivative factors; returns
    /// the parity of the resulting series along each axis.
    pub(crate) fn differentiate_coefficients(&self, c: &mut [T], orders: &[usize]) -> Vec<Parity> {
        let dim = self.grid.dim();
        let wavenumbers: Vec<T> = (0..dim).map(|a| T::PI() / self.grid.lengths()[a]).collect();
        for (flat, ck) in c.iter_mut().enumerate() {
            let idx = self.grid.unravel(flat);
            let mut factor = T::one();
            for a in 0..dim {
                let m = orders[a];
                if m == 0 {
                    continue;
                }
                let q = wavenumbers[a] * T::from_usize_lossy(idx[a]);
                // d^m/dx^m cos(qx): + - - + pattern on cos, -sin, -cos, +sin
                let sign = match m % 4 {
                    0 | 3 => T::one(),
                    _ => -T::one(),
                };
                factor = factor * sign * q.powi(m as i32);
            }
            *ck = *ck * factor;
        }
        orders
            .iter()
            .map(|m| if m % 2 == 1 { Parity::Odd } else { Parity::Even })
            .collect()
    }

    /// Spectral gradient, one nodal field per axis.
    pub fn gradient(&self, f: &ScalarField<T>) -> Result<Vec<ScalarField<T>>> {
        let c = self.coefficients(f)?;
        let dim = self.grid.dim();
        (0..dim)
            .map(|axis| {
                let mut orders = vec![0; dim];
                orders[axis] = 1;
                let mut d = c.clone();
                let parity = self.differentiate_coefficients(&mut d, &orders);
                self.transform.evaluate(&mut d, &parity);
                ScalarField::from_nodal(self.grid.clone(), d)
            })
            .collect()
    }

    pub(crate) fn weighted_dot(&self, a: &[T], b: &[T]) -> T {
        let vol = self.grid.volume();
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((&x, &y), &w)| w * x * y)
            .sum::<T>()
            * vol
    }

    pub(crate) fn weighted_norm_sq(&self, a: &[T]) -> T {
        self.weighted_dot(a, a)
    }

    /// `L²` inner product (collocation quadrature).
    pub fn inner(&self, u: &ScalarField<T>, v: &ScalarField<T>) -> Result<T> {
        self.check_grid(u)?;
        self.check_grid(v)?;
        if u.representation() == v.representation() {
            return Ok(match u.representation() {
                Representation::Nodal => {
                    u.values().iter().zip(v.values()).map(|(&a, &b)| a * b).sum::<T>() * self.grid.cell_volume()
                }
                Representation::Spectral => self.weighted_dot(u.values(), v.values()),
            });
        }
        let cu = self.coefficients(u)?;
        let cv = self.coefficients(v)?;
        Ok(self.weighted_dot(&cu, &cv))
    }

    pub fn l2_norm(&self, f: &ScalarField<T>) -> Result<T> {
        Ok(self.inner(f, f)?.max(T::zero()).sqrt())
    }

    /// `a_s(u, v) = (A^{s/2} u, A^{s/2} v)`.
    pub fn bilinear_as(&self, s: T, u: &ScalarField<T>, v: &ScalarField<T>) -> Result<T> {
        if !(s.is_finite() && s >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "power must be finite and non-negative (got {s})"
            )));
        }
        let cu = self.coefficients(u)?;
        let cv = if std::ptr::eq(u, v) {
            cu.clone()
        } else {
            self.coefficients(v)?
        };
        let vol = self.grid.volume();
        let sum = cu
            .iter()
            .zip(&cv)
            .zip(self.weights.iter().zip(&self.eigenvalues))
            .map(|((&a, &b), (&w, &lam))| {
                let lam_s = if s == T::zero() { T::one() } else { lam.powf(s) };
                w * lam_s * a * b
            })
            .sum::<T>();
        Ok(sum * vol)
    }

    /// `‖f‖_{H^{-s}} = ‖A^{-s/2} f‖` for mean-zero `f`.
    pub fn norm_h_minus_s(&self, s: T, f: &ScalarField<T>) -> Result<T> {
        let c = self.coefficients(f)?;
        self.check_mean_zero_coefficients(&c)?;
        Ok(self.h_minus_s_norm_sq_coefficients(s, &c).sqrt())
    }

    pub(crate) fn h_minus_s_norm_sq_coefficients(&self, s: T, c: &[T]) -> T {
        let vol = self.grid.volume();
        c.iter()
            .zip(self.weights.iter().zip(&self.eigenvalues))
            .skip(1)
            .map(|(&ck, (&w, &lam))| w * ck * ck / lam.powf(s))
            .sum::<T>()
            * vol
    }
}
