//! Double-well potential, the energies built on it, and recovery-sequence
//! initial data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::spectral::{FractionalOperator, ScalarField};

/// Quartic double well `W(x) = (x² - 1)²` with the convex/concave splitting
/// `W = W̃ + W̄`, `W̃(x) = x⁴ + 1`, `W̄(x) = -2x²`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DoubleWell;

impl DoubleWell {
    #[inline]
    pub fn w<T: Real>(x: T) -> T {
        let y = x * x - T::one();
        y * y
    }

    #[inline]
    pub fn dw<T: Real>(x: T) -> T {
        T::lit(4.0) * x * (x * x - T::one())
    }

    #[inline]
    pub fn convex<T: Real>(x: T) -> T {
        x.powi(4) + T::one()
    }

    #[inline]
    pub fn convex_d1<T: Real>(x: T) -> T {
        T::lit(4.0) * x * x * x
    }

    #[inline]
    pub fn convex_d2<T: Real>(x: T) -> T {
        T::lit(12.0) * x * x
    }

    #[inline]
    pub fn concave<T: Real>(x: T) -> T {
        T::lit(-2.0) * x * x
    }

    #[inline]
    pub fn concave_d1<T: Real>(x: T) -> T {
        T::lit(-4.0) * x
    }
}

/// Which constant multiplies the interface measure in the sharp energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceTension {
    /// `c_W = ∫_{-1}^{1} W = 16/15`.
    WellIntegral,
    /// `σ_MM = ∫_{-1}^{1} √(2W) = 4√2/3`, the limit of the tanh recovery sequence.
    #[default]
    ModicaMortola,
}

impl SurfaceTension {
    pub fn value(self) -> f64 {
        match self {
            Self::WellIntegral => 16.0 / 15.0,
            Self::ModicaMortola => 4.0 * std::f64::consts::SQRT_2 / 3.0,
        }
    }

    /// Proportionality constant between chemical potential and curvature on
    /// the interface. For the Modica–Mortola constant the solvability
    /// condition of the inner expansion gives `σ_MM / 2`; `c_W`
    /// is used as written.
    pub fn gibbs_coefficient(self) -> f64 {
        match self {
            Self::WellIntegral => self.value(),
            Self::ModicaMortola => self.value() / 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::WellIntegral => "well_integral",
            Self::ModicaMortola => "modica_mortola",
        }
    }
}

/// `E^ε` split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown<T> {
    /// `M^ε(φ - σ)`.
    pub m_eps: T,
    /// `⟨σ, φ⟩`.
    pub f_coupling: T,
    /// `‖σ‖²/2`.
    pub f_sigma_l2: T,
    /// `a_s(σ, σ)/2`.
    pub f_as: T,
    pub total: T,
}

impl<T: Real> EnergyBreakdown<T> {
    pub fn new(m_eps: T, f_coupling: T, f_sigma_l2: T, f_as: T) -> Self {
        Self {
            m_eps,
            f_coupling,
            f_sigma_l2,
            f_as,
            total: m_eps + f_coupling + f_sigma_l2 + f_as,
        }
    }

    /// `F(φ, σ)`.
    pub fn coupling_total(&self) -> T {
        self.f_coupling + self.f_sigma_l2 + self.f_as
    }
}

/// Bulk and gradient contributions to `M^ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModicaMortolaParts<T> {
    /// `∫ W(u)/ε`.
    pub potential: T,
    /// `∫ ε/2 |∇u|²`.
    pub gradient: T,
}

impl<T: Real> ModicaMortolaParts<T> {
    pub fn total(&self) -> T {
        self.potential + self.gradient
    }
}

pub(crate) fn check_eps<T: Real>(eps: T) -> Result<()> {
    if eps.is_finite() && eps > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "interface width must be positive and finite (got {eps})"
        )))
    }
}

/// `∫ W(u)/ε` and `∫ ε/2 |∇u|²`; the gradient part is `ε/2 · a_1(u, u)`,
/// which equals the collocation quadrature of the spectral gradient.
pub fn modica_mortola_parts<T: Real>(
    op: &FractionalOperator<T>,
    u: &ScalarField<T>,
    eps: T,
) -> Result<ModicaMortolaParts<T>> {
    check_eps(eps)?;
    let u = op.to_nodal(u)?;
    let potential = u.map(DoubleWell::w).integral() / eps;
    let gradient = eps * T::lit(0.5) * op.bilinear_as(T::one(), &u, &u)?;
    Ok(ModicaMortolaParts { potential, gradient })
}

pub fn modica_mortola_energy<T: Real>(op: &FractionalOperator<T>, u: &ScalarField<T>, eps: T) -> Result<T> {
    Ok(modica_mortola_parts(op, u, eps)?.total())
}

/// Parts of `F(φ, σ)`: `(⟨σ, φ⟩, ‖σ‖²/2, a_s(σ, σ)/2)`.
pub fn coupling_parts<T: Real>(
    op: &FractionalOperator<T>,
    s: T,
    phi: &ScalarField<T>,
    sigma: &ScalarField<T>,
) -> Result<(T, T, T)> {
    phi.ensure_same_grid(sigma)?;
    let half = T::lit(0.5);
    Ok((
        op.inner(sigma, phi)?,
        half * op.inner(sigma, sigma)?,
        half * op.bilinear_as(s, sigma, sigma)?,
    ))
}

/// `F(φ, σ) = ⟨σ, φ⟩ + ‖σ‖²/2 + a_s(σ, σ)/2`.
pub fn coupling_energy<T: Real>(
    op: &FractionalOperator<T>,
    s: T,
    phi: &ScalarField<T>,
    sigma: &ScalarField<T>,
) -> Result<T> {
    let (a, b, c) = coupling_parts(op, s, phi, sigma)?;
    Ok(a + b + c)
}

/// `E^ε(φ, σ) = M^ε(φ - σ) + F(φ, σ)`.
pub fn total_energy_eps<T: Real>(
    op: &FractionalOperator<T>,
    s: T,
    phi: &ScalarField<T>,
    sigma: &ScalarField<T>,
    eps: T,
) -> Result<EnergyBreakdown<T>> {
    phi.ensure_same_grid(sigma)?;
    let phi = op.to_nodal(phi)?;
    let sigma = op.to_nodal(sigma)?;
    let u = phi.sub(&sigma)?;
    let m = modica_mortola_energy(op, &u, eps)?;
    let (a, b, c) = coupling_parts(op, s, &phi, &sigma)?;
    let e = EnergyBreakdown::new(m, a, b, c);
    if e.total.is_finite() {
        Ok(e)
    } else {
        Err(Error::InfiniteEnergy)
    }
}

/// Deviation of `u` from `{-1, 1}` tolerated by [`sharp_energy`].
pub const SHARP_TOL: f64 = 1e-6;

/// `E⁰ = st · |Γ| + F(φ, σ)` for a configuration with `u = φ - σ ∈ {-1, 1}`.
///
/// Nodes flagged in `band` (the declared interface layer) are exempt from the
/// two-valuedness check.
pub fn sharp_energy<T: Real>(
    op: &FractionalOperator<T>,
    s: T,
    interface_measure: T,
    phi: &ScalarField<T>,
    sigma: &ScalarField<T>,
    st: SurfaceTension,
    band: Option<&[bool]>,
) -> Result<T> {
    phi.ensure_same_grid(sigma)?;
    let phi = op.to_nodal(phi)?;
    let sigma = op.to_nodal(sigma)?;
    let u = phi.sub(&sigma)?;
    for (i, &ui) in u.values().iter().enumerate() {
        if band.is_some_and(|b| b[i]) {
            continue;
        }
        let deviation = (ui.abs() - T::one()).abs();
        if deviation > T::lit(SHARP_TOL) {
            return Err(Error::NotSharp {
                index: i,
                deviation: deviation.to_f64_lossy(),
            });
        }
    }
    Ok(T::lit(st.value()) * interface_measure + coupling_energy(op, s, &phi, &sigma)?)
}

/// `v = W'(u)/ε + ε A u`, nodal.
pub fn chemical_potential<T: Real>(op: &FractionalOperator<T>, u: &ScalarField<T>, eps: T) -> Result<ScalarField<T>> {
    check_eps(eps)?;
    let u = op.to_nodal(u)?;
    let au = op.apply_power(T::one(), &u)?;
    u.map(|x| DoubleWell::dw(x) / eps).axpby(T::one(), &au, eps)
}

/// `tanh(√2 d / ε)`, the one-dimensional optimal profile across the zero set
/// of the signed distance `d`.
pub fn optimal_profile<T: Real>(signed_distance: &ScalarField<T>, eps: T) -> Result<ScalarField<T>> {
    check_eps(eps)?;
    let k = T::SQRT_2() / eps;
    Ok(signed_distance.map(|d| (k * d).tanh()))
}

/// Interface-to-boundary clearance required by [`well_prepared_data`], in units of `ε`.
pub const BOUNDARY_CLEARANCE: f64 = 6.0;

/// Recovery data `u₀ = tanh(√2 d/ε)`, `φ₀ = u₀ + σ₀`.
///
/// The interface `{d = 0}` must stay at least `6ε` away from the boundary;
/// the clearance is estimated as `min_x (dist(x, ∂Ω) + |d(x)|)` up to one
/// cell diagonal.
pub fn well_prepared_data<T: Real>(
    signed_distance: &ScalarField<T>,
    sigma0: &ScalarField<T>,
    eps: T,
) -> Result<(ScalarField<T>, ScalarField<T>)> {
    check_eps(eps)?;
    signed_distance.ensure_same_grid(sigma0)?;
    if !signed_distance.is_nodal() || !sigma0.is_nodal() {
        return Err(Error::InvalidParameter("initial data must be nodal".into()));
    }
    let grid = signed_distance.grid();
    let diag = (0..grid.dim()).map(|a| grid.spacing(a).powi(2)).sum::<T>().sqrt();
    let margin = signed_distance
        .values()
        .iter()
        .enumerate()
        .map(|(i, &d)| grid.distance_to_boundary(i) + d.abs())
        .fold(T::infinity(), T::min);
    let required = T::lit(BOUNDARY_CLEARANCE) * eps;
    if margin + diag < required {
        return Err(Error::InterfaceNearBoundary {
            margin: margin.to_f64_lossy(),
            required: required.to_f64_lossy(),
        });
    }
    let u0 = optimal_profile(signed_distance, eps)?;
    let phi0 = u0.add(sigma0)?;
    Ok((phi0, sigma0.clone()))
}

/// Two sides of the coercivity bound `‖u‖⁴_{L⁴} ≤ 2(ε M^ε(u) + |Ω|)`, which
/// follows from `(x² - 1)² ≥ x⁴/2 - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityWitness<T> {
    pub l4_fourth: T,
    pub bound: T,
}

impl<T: Real> CoercivityWitness<T> {
    pub fn holds(&self) -> bool {
        self.l4_fourth <= self.bound
    }
}

pub fn coercivity_witness<T: Real>(
    op: &FractionalOperator<T>,
    u: &ScalarField<T>,
    eps: T,
) -> Result<CoercivityWitness<T>> {
    let u = op.to_nodal(u)?;
    let l4_fourth = u.map(|x| x.powi(4)).integral();
    let m = modica_mortola_energy(op, &u, eps)?;
    Ok(CoercivityWitness {
        l4_fourth,
        bound: T::lit(2.0) * (eps * m + op.grid().volume()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;

    fn op2(n: usize) -> FractionalOperator<f64> {
        FractionalOperator::new(GridSpec::uniform(2, 1.0, n).unwrap())
    }

    #[test]
    fn splitting_is_exact() {
        // identical polynomials; only rounding of the two evaluation orders differs
        let worst = (0..=6000)
            .map(|i| -3.0 + i as f64 * 1e-3)
            .map(|x: f64| (DoubleWell::w(x) - DoubleWell::convex(x) - DoubleWell::concave(x)).abs() / (x.powi(4) + 1.0))
            .fold(0.0, f64::max);
        assert!(worst <= 4.0 * f64::EPSILON, "{worst}");
        for i in 0..=6000 {
            let x = -3.0 + i as f64 * 1e-3;
            assert!(DoubleWell::convex_d2(x) >= 0.0);
            let fd = (DoubleWell::w(x + 1e-6) - DoubleWell::w(x - 1e-6)) / 2e-6;
            assert!((fd - DoubleWell::dw(x)).abs() < 1e-6 * (1.0 + x.abs().powi(3)));
            assert!((DoubleWell::convex_d1(x) + DoubleWell::concave_d1(x) - DoubleWell::dw(x)).abs() < 1e-12);
        }
        assert_eq!(DoubleWell::w(1.0), 0.0);
        assert_eq!(DoubleWell::w(-1.0), 0.0);
    }

    #[test]
    fn surface_tension_constants() {
        // c_W by Simpson's rule on the exact polynomial; σ_MM = ∫ √2 (1 - x²)
        let simpson = |f: &dyn Fn(f64) -> f64| {
            let n = 2000;
            let h = 2.0 / n as f64;
            (0..=n)
                .map(|i| {
                    let w = if i == 0 || i == n {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    w * f(-1.0 + i as f64 * h)
                })
                .sum::<f64>()
                * h
                / 3.0
        };
        let cw = simpson(&|x| DoubleWell::w(x));
        let mm = simpson(&|x| (2.0 * DoubleWell::w(x)).sqrt());
        assert!((SurfaceTension::WellIntegral.value() - cw).abs() < 1e-12);
        assert!((SurfaceTension::ModicaMortola.value() - mm).abs() < 1e-12);
        assert!((SurfaceTension::ModicaMortola.value() - 1.885618083164127).abs() < 1e-12);
    }

    #[test]
    fn constant_states() {
        let op = op2(16);
        let g = op.grid().clone();
        let one = ScalarField::constant(g.clone(), 1.0);
        assert_eq!(modica_mortola_energy(&op, &one, 0.1).unwrap(), 0.0);
        let zero = ScalarField::zeros(g.clone());
        let m = modica_mortola_energy(&op, &zero, 0.1).unwrap();
        assert!((m - 10.0).abs() < 1e-12);
        assert!(modica_mortola_energy(&op, &zero, 0.0).is_err());
        assert!(modica_mortola_energy(&op, &zero, -1.0).is_err());

        let phi = ScalarField::constant(g.clone(), 0.5);
        let sigma = ScalarField::constant(g.clone(), -0.5);
        let e = total_energy_eps(&op, 1.0, &phi, &sigma, 0.05).unwrap();
        assert!(e.m_eps.abs() < 1e-14);
        assert!((e.total + 0.125).abs() < 1e-14);
        let e0 = total_energy_eps(&op, 1.0, &zero, &zero, 0.05).unwrap();
        assert!((e0.total - 20.0).abs() < 1e-12);

        let c = ScalarField::constant(g, 0.7);
        assert!((coupling_energy(&op, 1.6, &zero, &c).unwrap() - 0.245).abs() < 1e-14);
        assert_eq!(coupling_energy(&op, 1.6, &c, &zero).unwrap(), 0.0);
    }

    #[test]
    fn breakdown_sums() {
        let e = EnergyBreakdown::new(1.25, -0.5, 0.125, 3.0);
        assert_eq!(e.total, 3.875);
        assert_eq!(e.coupling_total(), 2.625);
    }

    #[test]
    fn chemical_potential_of_constants() {
        let op = op2(8);
        let g = op.grid().clone();
        let v = chemical_potential(&op, &ScalarField::constant(g.clone(), 1.0), 0.1).unwrap();
        assert!(v.max_abs() < 1e-13);
        let v = chemical_potential(&op, &ScalarField::constant(g, 0.3), 0.1).unwrap();
        let expect = 4.0 * 0.3 * (0.09 - 1.0) / 0.1;
        assert!(v.values().iter().all(|&x| (x - expect).abs() < 1e-12));
    }

    #[test]
    fn chemical_potential_vanishes_on_the_flat_profile() {
        let eps = 0.05;
        let grid = GridSpec::<f64>::new(vec![1.0], vec![512]).unwrap();
        let op = FractionalOperator::new(grid.clone());
        let d = ScalarField::from_fn(grid.clone(), |x| x[0] - 0.5).unwrap();
        let u = optimal_profile(&d, eps).unwrap();
        let v = chemical_potential(&op, &u, eps).unwrap();
        // tanh tails at the walls are ~e^{-2√2·0.5/ε} below machine precision
        let interior = v
            .values()
            .iter()
            .enumerate()
            .filter(|(i, _)| grid.distance_to_boundary(*i) > 0.1)
            .fold(0.0f64, |m, (_, &x)| m.max(x.abs()));
        assert!(interior < 1e-3 / eps, "{interior}");
    }

    #[test]
    fn flat_profile_energy_is_the_modica_mortola_constant() {
        let eps = 0.02;
        let grid = GridSpec::new(vec![1.0, 0.5], vec![512, 16]).unwrap();
        let op = FractionalOperator::new(grid.clone());
        let d = ScalarField::from_fn(grid, |x| x[0] - 0.5).unwrap();
        let u = optimal_profile(&d, eps).unwrap();
        let m = modica_mortola_energy(&op, &u, eps).unwrap();
        let expect = SurfaceTension::ModicaMortola.value() * 0.5;
        assert!((m - expect).abs() < 0.01 * expect, "{m} vs {expect}");
    }

    #[test]
    fn circle_recovery_data() {
        let grid = GridSpec::<f64>::uniform(2, 1.5, 384).unwrap();
        let op = FractionalOperator::new(grid.clone());
        let d = ScalarField::from_fn(grid.clone(), |x| {
            0.25 - ((x[0] - 0.75).powi(2) + (x[1] - 0.75).powi(2)).sqrt()
        })
        .unwrap();
        let zero = ScalarField::zeros(grid.clone());
        let target = SurfaceTension::ModicaMortola.value() * 2.0 * std::f64::consts::PI * 0.25;
        let mut gaps = Vec::new();
        for eps in [0.08, 0.04, 0.02] {
            let (phi, sigma) = well_prepared_data(&d, &zero, eps).unwrap();
            assert_eq!(sigma, zero);
            for (&ui, &di) in phi.values().iter().zip(d.values()) {
                assert_eq!(ui > 0.0, di > 0.0);
                // tanh rounds to ±1 in the far field
                assert!(ui.abs() <= 1.0);
            }
            let m = modica_mortola_energy(&op, &phi, eps).unwrap();
            gaps.push((m - target).abs());
        }
        assert!(gaps[2] < 0.02 * target);
        // the profile energy error is exponentially small in R/ε, so it
        // decreases until it reaches round-off
        let floor = 1e-12 * target;
        assert!(gaps[1] < gaps[0]);
        assert!(gaps[2] < gaps[1].max(floor));
    }

    #[test]
    fn boundary_clearance_is_enforced() {
        let op = op2(64);
        let grid = op.grid().clone();
        let d = ScalarField::from_fn(grid.clone(), |x| {
            0.25 - ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt()
        })
        .unwrap();
        let zero = ScalarField::zeros(grid);
        assert!(well_prepared_data(&d, &zero, 0.03).is_ok());
        assert!(matches!(
            well_prepared_data(&d, &zero, 0.08),
            Err(Error::InterfaceNearBoundary { .. })
        ));
    }

    #[test]
    fn sharp_energy_cases() {
        let op = op2(32);
        let grid = op.grid().clone();
        let zero = ScalarField::zeros(grid.clone());
        let stripe = ScalarField::from_fn(grid.clone(), |x| if x[0] < 0.5 { -1.0 } else { 1.0 }).unwrap();
        let mm = sharp_energy(&op, 1.0, 1.0, &stripe, &zero, SurfaceTension::ModicaMortola, None).unwrap();
        assert!((mm - 1.885618).abs() < 1e-6);
        let cw = sharp_energy(&op, 1.0, 1.0, &stripe, &zero, SurfaceTension::WellIntegral, None).unwrap();
        assert!((cw - 1.066667).abs() < 1e-6);
        let one = ScalarField::constant(grid.clone(), 1.0);
        assert_eq!(
            sharp_energy(&op, 1.0, 0.0, &one, &zero, SurfaceTension::ModicaMortola, None).unwrap(),
            0.0
        );
        let smooth = ScalarField::from_fn(grid.clone(), |x| (10.0 * (x[0] - 0.5)).tanh()).unwrap();
        let err = sharp_energy(&op, 1.0, 1.0, &smooth, &zero, SurfaceTension::ModicaMortola, None).unwrap_err();
        assert!(err.to_string().contains("not a sharp configuration"));
        let band: Vec<bool> = (0..grid.len()).map(|_| true).collect();
        assert!(sharp_energy(
            &op,
            1.0,
            1.0,
            &smooth,
            &zero,
            SurfaceTension::ModicaMortola,
            Some(&band)
        )
        .is_ok());
    }

    #[test]
    fn coercivity_holds_for_rough_fields() {
        let op = op2(16);
        let grid = op.grid().clone();
        for amp in [0.1, 1.0, 3.0, 10.0] {
            let u = ScalarField::from_fn(grid.clone(), |x| amp * (7.0 * x[0]).sin() * (3.0 * x[1]).cos()).unwrap();
            assert!(coercivity_witness(&op, &u, 0.05).unwrap().holds());
        }
    }

    #[test]
    fn single_precision_energy() {
        let grid = GridSpec::<f32>::uniform(1, 1.0, 256).unwrap();
        let op = FractionalOperator::new(grid.clone());
        let d = ScalarField::from_fn(grid, |x| x[0] - 0.5).unwrap();
        let u = optimal_profile(&d, 0.05f32).unwrap();
        let m = modica_mortola_energy(&op, &u, 0.05f32).unwrap();
        assert!((m - 1.885618).abs() < 0.02);
    }
}
