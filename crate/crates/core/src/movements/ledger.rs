//! Per-step energy bookkeeping and the a-priori bounds it must respect.

use serde::{Deserialize, Serialize};

use super::{FlowState, StepReport};
use crate::error::{Error, Result};
use crate::real::Real;

/// One line of the dissipation ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    pub e_eps: f64,
    pub m_eps: f64,
    pub f: f64,
    pub diss_sigma_cum: f64,
    pub diss_phi_cum: f64,
    pub mean_phi: f64,
    pub mean_sigma: f64,
    pub newton_iters: usize,
    pub residual_sigma: f64,
    pub residual_phi: f64,
}

/// Running sums of the dissipation terms.
#[derive(Debug, Clone, Default)]
pub struct Ledger {
    pub diss_sigma_cum: f64,
    pub diss_phi_cum: f64,
    pub steps: usize,
}

impl Ledger {
    pub fn record<T: Real>(&mut self, state: &FlowState<T>, report: &StepReport<T>) -> LedgerRow {
        self.diss_sigma_cum += report.diss_sigma.to_f64_lossy();
        self.diss_phi_cum += report.diss_phi.to_f64_lossy();
        self.steps += 1;
        let e = &report.breakdown_after;
        LedgerRow {
            t: state.t.to_f64_lossy(),
            e_eps: e.total.to_f64_lossy(),
            m_eps: e.m_eps.to_f64_lossy(),
            f: e.coupling_total().to_f64_lossy(),
            diss_sigma_cum: self.diss_sigma_cum,
            diss_phi_cum: self.diss_phi_cum,
            mean_phi: state.phi.mean().to_f64_lossy(),
            mean_sigma: state.sigma.mean().to_f64_lossy(),
            newton_iters: report.newton_iters_sigma + report.newton_iters_phi,
            residual_sigma: report.residual_sigma.to_f64_lossy(),
            residual_phi: report.residual_phi.to_f64_lossy(),
        }
    }

    pub fn total(&self) -> f64 {
        self.diss_sigma_cum + self.diss_phi_cum
    }
}

/// Upper bounds implied by the initial energy `E₀` for `ε ≤ 1`:
///
/// * `‖σ‖² + a_s(σ, σ) ≤ 2(E₀ + 17/64 |Ω|)` from `⟨σ, u⟩ ≥ -‖σ‖² - ‖u‖²/4` and `W(x) - x²/4 ≥ -17/64`;
/// * `‖u‖⁴_{L⁴} ≤ 2(E₀ + 97/72 |Ω|)` from `⟨σ, u⟩ ≥ -3/2 ‖σ‖² - ‖u‖²/6`;
/// * cumulative dissipation `≤ E₀ + 17/64 |Ω|`, since `E ≥ -17/64 |Ω|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct APrioriBounds {
    pub sigma_hs_sq: f64,
    pub u_l4_fourth: f64,
    pub dissipation: f64,
}

impl APrioriBounds {
    /// `None` when `ε > 1`, where `W/ε ≥ W` no longer holds.
    pub fn from_initial_energy(e0: f64, volume: f64, eps: f64) -> Option<Self> {
        if eps > 1.0 {
            return None;
        }
        let base = e0 + 17.0 / 64.0 * volume;
        Some(Self {
            sigma_hs_sq: 2.0 * base,
            u_l4_fourth: 2.0 * (e0 + 97.0 / 72.0 * volume),
            dissipation: base,
        })
    }

    pub fn check(&self, sigma_hs_sq: f64, u_l4_fourth: f64, dissipation: f64) -> Result<()> {
        let slack = 1e-9 * (1.0 + self.sigma_hs_sq.abs() + self.u_l4_fourth.abs());
        if sigma_hs_sq > self.sigma_hs_sq + slack {
            return Err(Error::BoundViolated(format!(
                "sigma H^s norm squared {sigma_hs_sq} exceeds {}",
                self.sigma_hs_sq
            )));
        }
        if u_l4_fourth > self.u_l4_fourth + slack {
            return Err(Error::BoundViolated(format!(
                "u L4 norm to the fourth {u_l4_fourth} exceeds {}",
                self.u_l4_fourth
            )));
        }
        if dissipation > self.dissipation + slack {
            return Err(Error::BoundViolated(format!(
                "cumulative dissipation {dissipation} exceeds {}",
                self.dissipation
            )));
        }
        Ok(())
    }
}
