//! Implicit minimizing-movements scheme for the `H^{-s} x L²` gradient flow.
//!
//! Each step first minimizes over `σ` with `φ` frozen, then over `φ` (in the
//! affine space of fixed mean) with the new `σ`. The convex part `W̃` of the
//! double well is implicit, the concave part `W̄` explicit, so both substeps
//! are strictly convex and the discrete energy law
//! `E_k + τ‖δσ/τ‖² + τ‖δφ/τ‖²_{H^{-s}} ≤ E_{k-1}` holds unconditionally.
//!
//! States are kept as cosine coefficients so that high powers of `A` never
//! act on transform round-off.

mod collocation;
mod ledger;
mod solver;

use std::ops::ControlFlow;

use collocation::Collocation;
use solver::{newton, NewtonOptions, NewtonProblem};

pub use ledger::{APrioriBounds, Ledger, LedgerRow};

use crate::error::{Error, Result};
use crate::potential::{check_eps, DoubleWell, EnergyBreakdown};
use crate::real::Real;
use crate::spectral::{FractionalOperator, Representation, ScalarField};

/// Phase-field state `(φ, σ)` together with the scheme parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<T: Real> {
    /// Stored as cosine coefficients.
    pub phi: ScalarField<T>,
    /// Stored as cosine coefficients.
    pub sigma: ScalarField<T>,
    pub t: T,
    pub eps: T,
    pub tau: T,
    pub s: T,
    /// Mean of `φ`, conserved by the flow.
    pub phi_mean0: T,
}

impl<T: Real> FlowState<T> {
    pub fn new(
        op: &FractionalOperator<T>,
        phi: &ScalarField<T>,
        sigma: &ScalarField<T>,
        eps: T,
        tau: T,
        s: T,
    ) -> Result<Self> {
        check_eps(eps)?;
        check_tau(tau)?;
        if !(s.is_finite() && s >= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "fractional order must be finite and at least 1 (got {s})"
            )));
        }
        let phi = op.to_spectral(phi)?;
        let sigma = op.to_spectral(sigma)?;
        let phi_mean0 = phi.mean();
        Ok(Self {
            phi,
            sigma,
            t: T::zero(),
            eps,
            tau,
            s,
            phi_mean0,
        })
    }

    /// Order parameter `u = φ - σ` (coefficients).
    pub fn u(&self) -> ScalarField<T> {
        self.phi
            .sub(&self.sigma)
            .expect("state fields share grid and representation")
    }

    pub fn with_tau(mut self, tau: T) -> Result<Self> {
        check_tau(tau)?;
        self.tau = tau;
        Ok(self)
    }

    pub fn with_time(mut self, t: T) -> Self {
        self.t = t;
        self
    }
}

fn check_tau<T: Real>(tau: T) -> Result<()> {
    if tau.is_finite() && tau > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "time step must be positive and finite (got {tau})"
        )))
    }
}

/// Solver and accounting parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSettings<T> {
    /// Newton stops once `‖residual‖ ≤ tol_newton · (1 + ‖data‖)`.
    pub tol_newton: T,
    pub max_newton_iters: usize,
    pub max_cg_iters: usize,
    /// Allowed per-step energy increase relative to `|E|`.
    pub ledger_tol: T,
    /// Allowed cumulative imbalance relative to `|E(0)|`.
    pub balance_tol: T,
    /// Number of times a failed step may be split in half.
    pub max_retries: usize,
    /// Evaluate the nonlinearity on the twice-refined grid.
    pub dealias: bool,
}

impl<T: Real> Default for FlowSettings<T> {
    fn default() -> Self {
        Self {
            tol_newton: T::lit(1e-10),
            max_newton_iters: 50,
            max_cg_iters: 500,
            ledger_tol: T::lit(1e-8),
            balance_tol: T::lit(1e-6),
            max_retries: 3,
            dealias: false,
        }
    }
}

/// Result of one convex substep.
#[derive(Debug, Clone)]
pub struct Substep<T: Real> {
    /// New field (coefficients).
    pub field: ScalarField<T>,
    pub iterations: usize,
    pub residual: T,
}

/// Ledger entry for one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<T> {
    pub energy_before: T,
    pub energy_after: T,
    /// `τ ‖(σ_k - σ_{k-1})/τ‖²`.
    pub diss_sigma: T,
    /// `τ ‖(φ_k - φ_{k-1})/τ‖²_{H^{-s}}`.
    pub diss_phi: T,
    pub newton_iters_sigma: usize,
    pub newton_iters_phi: usize,
    pub residual_sigma: T,
    pub residual_phi: T,
    pub breakdown_after: EnergyBreakdown<T>,
    /// Number of step halvings needed.
    pub retries: usize,
}

/// Residuals of the time-continuous system evaluated on difference quotients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeResidual<T> {
    /// `‖(φ_k - φ_{k-1})/τ + A^s(v_k + σ_k)‖_{H^{-s}}`.
    pub r_phi: T,
    /// `‖(σ_k - σ_{k-1})/τ + A^s σ_k - v_k + φ_k + σ_k‖`.
    pub r_sigma: T,
    /// `r_phi` assembled from the `(u, σ)` form `u̇ + A^s v = R`,
    /// `σ̇ + A^s σ = -R`, `R = 2σ + u - v`.
    pub r_phi_original: T,
}

/// Summary of a completed (or early-stopped) run.
#[derive(Debug, Clone)]
pub struct RunSummary<T: Real> {
    pub final_state: FlowState<T>,
    pub steps: usize,
    pub energy_initial: T,
    pub energy_final: T,
    pub diss_sigma_cum: T,
    pub diss_phi_cum: T,
    /// Largest `|mean(φ) - φ_mean0|` seen.
    pub max_mean_drift: T,
    pub retries: usize,
    pub stopped_early: bool,
}

impl<T: Real> RunSummary<T> {
    /// `E(0) - E(end) - Σ dissipation`; nonnegative up to solver accuracy.
    pub fn balance_gap(&self) -> T {
        self.energy_initial - self.energy_final - self.diss_sigma_cum - self.diss_phi_cum
    }
}

/// The scheme bound to one operator.
#[derive(Debug, Clone)]
pub struct GradientFlow<T: Real> {
    op: FractionalOperator<T>,
    settings: FlowSettings<T>,
    colloc: Collocation<T>,
}

impl<T: Real> GradientFlow<T> {
    pub fn new(op: FractionalOperator<T>, settings: FlowSettings<T>) -> Self {
        let colloc = Collocation::new(&op, settings.dealias);
        Self { op, settings, colloc }
    }

    pub fn op(&self) -> &FractionalOperator<T> {
        &self.op
    }

    pub fn settings(&self) -> &FlowSettings<T> {
        &self.settings
    }

    fn coeffs(&self, f: &ScalarField<T>) -> Result<Vec<T>> {
        self.op.coefficients(f)
    }

    fn spectral(&self, c: Vec<T>) -> Result<ScalarField<T>> {
        ScalarField::with_representation(self.op.grid().clone(), c, Representation::Spectral)
    }

    /// `E^ε` with the potential integrated on the scheme's evaluation grid.
    pub fn energy(&self, state: &FlowState<T>) -> Result<EnergyBreakdown<T>> {
        let cphi = self.coeffs(&state.phi)?;
        let csig = self.coeffs(&state.sigma)?;
        let cu: Vec<T> = cphi.iter().zip(&csig).map(|(&a, &b)| a - b).collect();
        let w: Vec<T> = self.colloc.nodal(&cu).into_iter().map(DoubleWell::w).collect();
        let vol = self.op.grid().volume();
        let half = T::lit(0.5);
        let mut grad = T::zero();
        let mut as_part = T::zero();
        for (k, (&lam, &wt)) in self.op.eigenvalues().iter().zip(self.op.weights()).enumerate() {
            grad = grad + wt * lam * cu[k] * cu[k];
            if k > 0 {
                as_part = as_part + wt * lam.powf(state.s) * csig[k] * csig[k];
            }
        }
        let m = self.colloc.integral(&w) / state.eps + half * state.eps * grad * vol;
        let e = EnergyBreakdown::new(
            m,
            self.op.weighted_dot(&csig, &cphi),
            half * self.op.weighted_norm_sq(&csig),
            half * as_part * vol,
        );
        if e.total.is_finite() {
            Ok(e)
        } else {
            Err(Error::InfiniteEnergy)
        }
    }

    /// `v = W'(u)/ε + ε A u` (nodal), with `A u` taken from the coefficients.
    /// Under dealiasing `W'(u)` is the projection of its padded-grid values,
    /// as in the scheme.
    pub fn chemical_potential(&self, state: &FlowState<T>) -> Result<ScalarField<T>> {
        let cu = self.coeffs(&state.u())?;
        let au: Vec<T> = cu
            .iter()
            .zip(self.op.eigenvalues())
            .map(|(&c, &lam)| c * lam * state.eps)
            .collect();
        if self.settings.dealias {
            let dw: Vec<T> = self.colloc.nodal(&cu).into_iter().map(DoubleWell::dw).collect();
            let c: Vec<T> = self
                .colloc
                .coefficients(dw)
                .into_iter()
                .zip(au)
                .map(|(d, a)| d / state.eps + a)
                .collect();
            return self.op.to_nodal(&self.spectral(c)?);
        }
        let u = self.op.to_nodal(&self.spectral(cu)?)?;
        let mut v = self.op.to_nodal(&self.spectral(au)?)?;
        for (vi, &ui) in v.values_mut().iter_mut().zip(u.values()) {
            *vi = *vi + DoubleWell::dw(ui) / state.eps;
        }
        Ok(v)
    }

    fn newton_options(&self, target: T, stage: &'static str) -> NewtonOptions<T> {
        NewtonOptions {
            target,
            max_iters: self.settings.max_newton_iters,
            max_cg_iters: self.settings.max_cg_iters,
            stage,
        }
    }

    /// Minimize over `σ` with `φ = φ_{k-1}` frozen.
    pub fn sigma_step(&self, state: &FlowState<T>) -> Result<Substep<T>> {
        let (eps, tau, s) = (state.eps, state.tau, state.s);
        let cphi = self.coeffs(&state.phi)?;
        let csig = self.coeffs(&state.sigma)?;
        let cu: Vec<T> = cphi.iter().zip(&csig).map(|(&a, &b)| a - b).collect();
        let explicit = self.colloc.coefficients(
            self.colloc
                .nodal(&cu)
                .into_iter()
                .map(|x| DoubleWell::concave_d1(x) / eps)
                .collect(),
        );
        let inv_tau = T::one() / tau;
        let lam = self.op.eigenvalues();
        let symbol: Vec<T> = lam
            .iter()
            .map(|&l| inv_tau + T::one() + eps * l + pow_or_zero(l, s))
            .collect();
        let constant: Vec<T> = (0..lam.len())
            .map(|k| -csig[k] * inv_tau - explicit[k] - eps * lam[k] * cphi[k] + cphi[k])
            .collect();
        let target = self.settings.tol_newton * (T::one() + self.op.weighted_norm_sq(&constant).sqrt());
        let mut problem = SigmaProblem {
            flow: self,
            phi_eval: self.colloc.nodal(&cphi),
            symbol,
            constant,
            inv_eps: T::one() / eps,
            d: Vec::new(),
            shift: T::zero(),
        };
        let out = newton(&mut problem, csig, self.newton_options(target, "sigma"))?;
        Ok(Substep {
            field: self.spectral(out.x)?,
            iterations: out.iterations,
            residual: out.residual,
        })
    }

    /// Minimize over `φ` in `{mean(φ) = φ_mean0}` with `σ = σ_k`.
    pub fn phi_step(&self, state: &FlowState<T>, sigma_k: &ScalarField<T>) -> Result<Substep<T>> {
        let (eps, tau, s) = (state.eps, state.tau, state.s);
        let cphi = self.coeffs(&state.phi)?;
        let csig = self.coeffs(sigma_k)?;
        let cbase: Vec<T> = cphi.iter().zip(&csig).map(|(&a, &b)| a - b).collect();
        let base_eval = self.colloc.nodal(&cbase);
        let explicit = self
            .colloc
            .coefficients(base_eval.iter().map(|&x| DoubleWell::concave_d1(x) / eps).collect());
        let inv_tau = T::one() / tau;
        let lam = self.op.eigenvalues();
        let mut symbol = vec![T::zero(); lam.len()];
        let mut constant = vec![T::zero(); lam.len()];
        for k in 1..lam.len() {
            symbol[k] = inv_tau / lam[k].powf(s) + eps * lam[k];
            constant[k] = eps * lam[k] * cbase[k] + csig[k] + explicit[k];
        }
        let target = self.settings.tol_newton * (T::one() + self.op.weighted_norm_sq(&constant).sqrt());
        let mut problem = PhiProblem {
            flow: self,
            base_eval,
            symbol,
            constant,
            inv_eps: T::one() / eps,
            d: Vec::new(),
            shift: T::zero(),
        };
        let out = newton(
            &mut problem,
            vec![T::zero(); lam.len()],
            self.newton_options(target, "phi"),
        )?;
        let phi: Vec<T> = cphi.iter().zip(&out.x).map(|(&a, &d)| a + d).collect();
        Ok(Substep {
            field: self.spectral(phi)?,
            iterations: out.iterations,
            residual: out.residual,
        })
    }

    /// One step without retries.
    fn try_step(&self, state: &FlowState<T>) -> Result<(FlowState<T>, StepReport<T>)> {
        let before = self.energy(state)?;
        let sig = self.sigma_step(state)?;
        let phi = self.phi_step(state, &sig.field)?;
        let cphi0 = self.coeffs(&state.phi)?;
        let csig0 = self.coeffs(&state.sigma)?;
        let dsig: Vec<T> = sig.field.values().iter().zip(&csig0).map(|(&a, &b)| a - b).collect();
        let dphi: Vec<T> = phi.field.values().iter().zip(&cphi0).map(|(&a, &b)| a - b).collect();
        let diss_sigma = self.op.weighted_norm_sq(&dsig) / state.tau;
        let diss_phi = self.op.h_minus_s_norm_sq_coefficients(state.s, &dphi) / state.tau;
        let next = FlowState {
            phi: phi.field,
            sigma: sig.field,
            t: state.t + state.tau,
            ..state.clone()
        };
        let after = self.energy(&next)?;
        let tolerance = self.settings.ledger_tol * before.total.abs().max(T::one());
        if after.total + diss_sigma + diss_phi > before.total + tolerance {
            return Err(Error::DissipationViolated {
                before: before.total.to_f64_lossy(),
                after: (after.total + diss_sigma + diss_phi).to_f64_lossy(),
                tolerance: tolerance.to_f64_lossy(),
            });
        }
        let report = StepReport {
            energy_before: before.total,
            energy_after: after.total,
            diss_sigma,
            diss_phi,
            newton_iters_sigma: sig.iterations,
            newton_iters_phi: phi.iterations,
            residual_sigma: sig.residual,
            residual_phi: phi.residual,
            breakdown_after: after,
            retries: 0,
        };
        Ok((next, report))
    }

    /// One step of size `state.tau`; a step whose Newton solve fails is
    /// replaced by two half steps, recursively up to `max_retries` times.
    pub fn step(&self, state: &FlowState<T>) -> Result<(FlowState<T>, StepReport<T>)> {
        self.step_with_retries(state, 0)
    }

    fn step_with_retries(&self, state: &FlowState<T>, depth: usize) -> Result<(FlowState<T>, StepReport<T>)> {
        match self.try_step(state) {
            Err(Error::NewtonFailed { .. }) if depth < self.settings.max_retries => {
                let half = state.clone().with_tau(state.tau * T::lit(0.5))?;
                let (mid, r1) = self.step_with_retries(&half, depth + 1)?;
                let (end, r2) = self.step_with_retries(&mid, depth + 1)?;
                let report = StepReport {
                    energy_before: r1.energy_before,
                    energy_after: r2.energy_after,
                    diss_sigma: r1.diss_sigma + r2.diss_sigma,
                    diss_phi: r1.diss_phi + r2.diss_phi,
                    newton_iters_sigma: r1.newton_iters_sigma + r2.newton_iters_sigma,
                    newton_iters_phi: r1.newton_iters_phi + r2.newton_iters_phi,
                    residual_sigma: r1.residual_sigma.max(r2.residual_sigma),
                    residual_phi: r1.residual_phi.max(r2.residual_phi),
                    breakdown_after: r2.breakdown_after,
                    retries: 1 + r1.retries + r2.retries,
                };
                Ok((end.with_tau(state.tau)?, report))
            }
            other => other,
        }
    }

    /// Advance to `t_end`, handing every accepted step to `observer`, which
    /// may stop the run early. The cumulative balance
    /// `E(0) - E(end) ≥ Σ dissipation - balance_tol |E(0)|` is checked at the end.
    pub fn run<F>(&self, initial: &FlowState<T>, t_end: T, mut observer: F) -> Result<RunSummary<T>>
    where
        F: FnMut(&FlowState<T>, &StepReport<T>) -> Result<ControlFlow<()>>,
    {
        if !(t_end > initial.t) {
            return Err(Error::InvalidParameter(format!(
                "end time {t_end} must exceed the start time {}",
                initial.t
            )));
        }
        let mut state = FlowState {
            phi: self.op.to_spectral(&initial.phi)?,
            sigma: self.op.to_spectral(&initial.sigma)?,
            ..initial.clone()
        };
        let tau = state.tau;
        let energy_initial = self.energy(&state)?.total;
        let mut summary = RunSummary {
            final_state: state.clone(),
            steps: 0,
            energy_initial,
            energy_final: energy_initial,
            diss_sigma_cum: T::zero(),
            diss_phi_cum: T::zero(),
            max_mean_drift: T::zero(),
            retries: 0,
            stopped_early: false,
        };
        // the last step is shortened to land on t_end
        let slack = tau * T::lit(1e-9);
        while state.t < t_end - slack {
            let remaining = t_end - state.t;
            let this_tau = if remaining < tau { remaining } else { tau };
            let input = state.clone().with_tau(this_tau)?;
            let (next, report) = self.step(&input)?;
            state = next.with_tau(tau)?;
            summary.steps += 1;
            summary.energy_final = report.energy_after;
            summary.diss_sigma_cum = summary.diss_sigma_cum + report.diss_sigma;
            summary.diss_phi_cum = summary.diss_phi_cum + report.diss_phi;
            summary.retries += report.retries;
            summary.max_mean_drift = summary.max_mean_drift.max((state.phi.mean() - state.phi_mean0).abs());
            if observer(&state, &report)?.is_break() {
                summary.stopped_early = true;
                break;
            }
        }
        let tolerance = self.settings.balance_tol * energy_initial.abs().max(T::one());
        if summary.balance_gap() < -tolerance {
            return Err(Error::DissipationViolated {
                before: energy_initial.to_f64_lossy(),
                after: (summary.energy_final + summary.diss_sigma_cum + summary.diss_phi_cum).to_f64_lossy(),
                tolerance: tolerance.to_f64_lossy(),
            });
        }
        summary.final_state = state;
        Ok(summary)
    }

    /// Residuals of the continuous system on the pair `(prev, cur)`.
    pub fn pde_residual(&self, prev: &FlowState<T>, cur: &FlowState<T>) -> Result<PdeResidual<T>> {
        let dt = cur.t - prev.t;
        check_tau(dt)?;
        let s = cur.s;
        let cphi = self.coeffs(&cur.phi)?;
        let csig = self.coeffs(&cur.sigma)?;
        let cphi0 = self.coeffs(&prev.phi)?;
        let csig0 = self.coeffs(&prev.sigma)?;
        let cv = self.coeffs(&self.chemical_potential(cur)?)?;
        let lam_s: Vec<T> = self.op.eigenvalues().iter().map(|&l| pow_or_zero(l, s)).collect();
        let n = cphi.len();
        let mut rphi = vec![T::zero(); n];
        let mut rsig = vec![T::zero(); n];
        let mut rphi_orig = vec![T::zero(); n];
        for k in 0..n {
            let dphi = (cphi[k] - cphi0[k]) / dt;
            let dsig = (csig[k] - csig0[k]) / dt;
            rphi[k] = dphi + lam_s[k] * (cv[k] + csig[k]);
            rsig[k] = dsig + lam_s[k] * csig[k] - cv[k] + cphi[k] + csig[k];
            let u = cphi[k] - csig[k];
            let du = (u - (cphi0[k] - csig0[k])) / dt;
            let r = T::lit(2.0) * csig[k] + u - cv[k];
            rphi_orig[k] = (du + lam_s[k] * cv[k] - r) + (dsig + lam_s[k] * csig[k] + r);
        }
        Ok(PdeResidual {
            r_phi: self.op.h_minus_s_norm_sq_coefficients(s, &rphi).sqrt(),
            r_sigma: self.op.weighted_norm_sq(&rsig).sqrt(),
            r_phi_original: self.op.h_minus_s_norm_sq_coefficients(s, &rphi_orig).sqrt(),
        })
    }

    /// `(‖σ‖² + a_s(σ, σ), ‖u‖⁴_{L⁴})`, the quantities controlled by [`APrioriBounds`].
    pub fn bounded_quantities(&self, state: &FlowState<T>) -> Result<(T, T)> {
        let csig = self.coeffs(&state.sigma)?;
        let hs = self.op.weighted_norm_sq(&csig) + self.op.bilinear_as(state.s, &state.sigma, &state.sigma)?;
        let cu = self.coeffs(&state.u())?;
        let l4: Vec<T> = self.colloc.nodal(&cu).into_iter().map(|x| x.powi(4)).collect();
        Ok((hs, self.colloc.integral(&l4)))
    }
}

fn pow_or_zero<T: Real>(lam: T, s: T) -> T {
    if lam == T::zero() {
        T::zero()
    } else {
        lam.powf(s)
    }
}

/// Diagonal-times-field product `F(d · F⁻¹ p)` on the evaluation grid.
fn diag_product<T: Real>(colloc: &Collocation<T>, d: &[T], p: &[T]) -> Vec<T> {
    let mut v = colloc.nodal(p);
    for (vi, &di) in v.iter_mut().zip(d) {
        *vi = *vi * di;
    }
    colloc.coefficients(v)
}

fn mean<T: Real>(d: &[T]) -> T {
    d.iter().copied().sum::<T>() / T::from_usize_lossy(d.len())
}

struct SigmaProblem<'a, T: Real> {
    flow: &'a GradientFlow<T>,
    phi_eval: Vec<T>,
    symbol: Vec<T>,
    constant: Vec<T>,
    inv_eps: T,
    d: Vec<T>,
    shift: T,
}

impl<T: Real> NewtonProblem<T> for SigmaProblem<'_, T> {
    fn residual(&mut self, x: &[T]) -> Vec<T> {
        let colloc = &self.flow.colloc;
        let sig = colloc.nodal(x);
        let mut n = Vec::with_capacity(sig.len());
        self.d.clear();
        for (&p, &q) in self.phi_eval.iter().zip(&sig) {
            let w = p - q;
            n.push(DoubleWell::convex_d1(w) * self.inv_eps);
            self.d.push(DoubleWell::convex_d2(w) * self.inv_eps);
        }
        self.shift = mean(&self.d);
        let nc = colloc.coefficients(n);
        (0..x.len())
            .map(|k| self.symbol[k] * x[k] + self.constant[k] - nc[k])
            .collect()
    }

    fn jacobian(&self, p: &[T]) -> Vec<T> {
        let dp = diag_product(&self.flow.colloc, &self.d, p);
        (0..p.len()).map(|k| self.symbol[k] * p[k] + dp[k]).collect()
    }

    fn precondition(&self, r: &[T]) -> Vec<T> {
        r.iter()
            .zip(&self.symbol)
            .map(|(&r, &sym)| r / (sym + self.shift))
            .collect()
    }

    fn dot(&self, a: &[T], b: &[T]) -> T {
        self.flow.op.weighted_dot(a, b)
    }
}

struct PhiProblem<'a, T: Real> {
    flow: &'a GradientFlow<T>,
    base_eval: Vec<T>,
    symbol: Vec<T>,
    constant: Vec<T>,
    inv_eps: T,
    d: Vec<T>,
    shift: T,
}

impl<T: Real> NewtonProblem<T> for PhiProblem<'_, T> {
    fn residual(&mut self, x: &[T]) -> Vec<T> {
        let colloc = &self.flow.colloc;
        let delta = colloc.nodal(x);
        let mut n = Vec::with_capacity(delta.len());
        self.d.clear();
        for (&b, &dl) in self.base_eval.iter().zip(&delta) {
            let w = b + dl;
            n.push(DoubleWell::convex_d1(w) * self.inv_eps);
            self.d.push(DoubleWell::convex_d2(w) * self.inv_eps);
        }
        self.shift = mean(&self.d);
        let nc = colloc.coefficients(n);
        let mut r: Vec<T> = (0..x.len())
            .map(|k| self.symbol[k] * x[k] + self.constant[k] + nc[k])
            .collect();
        r[0] = T::zero();
        r
    }

    fn jacobian(&self, p: &[T]) -> Vec<T> {
        let dp = diag_product(&self.flow.colloc, &self.d, p);
        let mut out: Vec<T> = (0..p.len()).map(|k| self.symbol[k] * p[k] + dp[k]).collect();
        out[0] = T::zero();
        out
    }

    fn precondition(&self, r: &[T]) -> Vec<T> {
        let mut z: Vec<T> = r
            .iter()
            .zip(&self.symbol)
            .map(|(&r, &sym)| r / (sym + self.shift))
            .collect();
        z[0] = T::zero();
        z
    }

    fn dot(&self, a: &[T], b: &[T]) -> T {
        self.flow.op.weighted_dot(a, b)
    }
}

#[cfg(test)]
mod tests;
