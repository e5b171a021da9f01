//! Interface measurements and oracle predictions on flow states.

use fracflow::diagnostics::{
    bulk_residual, energy_measure_density, equipartition_defect, far_field_mask, gibbs_thomson_probe,
    measure_interface, radius_from_area, GibbsSample,
};
use fracflow::oracle::{radial_profile, radial_sharp_velocity, s2_jump_probe, Profile, RadialProblem};
use fracflow::potential::SurfaceTension;
use fracflow::{Field, Flow, State};
use serde::Serialize;

/// Width of the excluded interface layer, in units of `ε`.
pub const BAND_FACTOR: f64 = 4.0;

/// Offset range of the `s = 2` probe, in units of `ε`.
const PROBE_NEAR: f64 = 7.0;
const PROBE_FAR: f64 = 11.0;
/// Shortest inside range fitted by a line; shorter ranges use one offset.
const PROBE_MIN_SPAN: f64 = 2.0;

/// Radial bins per unit length used to feed the oracle.
const BINS_PER_UNIT: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterfaceSample {
    pub t: f64,
    pub radius: Option<f64>,
    pub contour_length: Option<f64>,
    pub kappa_mean: Option<f64>,
    pub v_mean: Option<f64>,
    pub coef: Option<f64>,
    pub correlation: Option<f64>,
    pub equipartition_defect: f64,
    pub energy_density: Option<f64>,
    pub bulk_residual: Option<f64>,
    #[serde(skip)]
    pub table: Vec<GibbsSample<f64>>,
}

/// All interface diagnostics of one state; contour quantities are absent
/// in 1D.
pub fn measure(flow: &Flow, state: &State) -> fracflow::Result<InterfaceSample> {
    let op = flow.op();
    let u = op.to_nodal(&state.u())?;
    let eps = state.eps;
    let equipartition = equipartition_defect(op, &u, eps)?.normalized;
    let mut sample = InterfaceSample {
        t: state.t,
        radius: None,
        contour_length: None,
        kappa_mean: None,
        v_mean: None,
        coef: None,
        correlation: None,
        equipartition_defect: equipartition,
        energy_density: None,
        bulk_residual: None,
        table: Vec::new(),
    };
    if op.grid().dim() != 2 {
        return Ok(sample);
    }
    let contour = measure_interface(op, &u)?;
    let gibbs = gibbs_thomson_probe(op, &u, eps, &contour)?;
    let v = flow.chemical_potential(state)?;
    let bulk = bulk_residual(op, state.s, &v, &state.phi, &state.sigma, &u, BAND_FACTOR * eps)?;
    sample.radius = Some(radius_from_area(&u)?);
    sample.contour_length = Some(contour.length());
    sample.kappa_mean = Some(gibbs.kappa_mean);
    sample.v_mean = Some(gibbs.v_mean);
    sample.coef = Some(gibbs.coef);
    sample.correlation = Some(gibbs.correlation);
    sample.energy_density = Some(energy_measure_density(op, &u, eps, &contour)?.density);
    sample.bulk_residual = Some(bulk.normalized);
    sample.table = gibbs.table;
    Ok(sample)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSample {
    pub t: f64,
    pub radius: f64,
    /// Inside-minus-outside jump of `∂_n v` (`s = 1`, radial oracle) or of
    /// `∂_n(Av)` measured on the diffuse state (`s ≥ 2`).
    pub jump: f64,
    /// `-jump / 2`.
    pub r_dot_oracle: f64,
}

/// Sharp-interface velocity prediction for a disc centred at `centre`.
///
/// For `s = 1` the radial oracle is fed with the radial averages of `φ + σ`
/// on both sides, outside the interface band, on the equal-area disc of the
/// box. Otherwise the jump of `∂_n(Av)` is read off the diffuse state and
/// extrapolated to the interface.
pub fn oracle_sample(
    flow: &Flow,
    state: &State,
    centre: [f64; 2],
    st: SurfaceTension,
) -> fracflow::Result<OracleSample> {
    let op = flow.op();
    let u = op.to_nodal(&state.u())?;
    let radius = radius_from_area(&u)?;
    let band = BAND_FACTOR * state.eps;
    let contour = measure_interface(op, &u)?;
    if state.s != 1.0 {
        let v = flow.chemical_potential(state)?;
        let (inside, outside) = probe_offsets(radius, state.eps);
        let jump = s2_jump_probe(op, &v, &contour, &inside, &outside, Some(radius))?;
        return Ok(OracleSample {
            t: state.t,
            radius,
            jump,
            r_dot_oracle: -jump / 2.0,
        });
    }
    let grid = op.grid();
    let outer = (grid.volume() / std::f64::consts::PI).sqrt();
    let source: Field = op.to_nodal(&state.phi)?.add(&op.to_nodal(&state.sigma)?)?;
    let mask = far_field_mask(grid, Some(&contour), band)?;
    let uv = u.values();
    let bins = |a: f64, b: f64| (((b - a) * BINS_PER_UNIT).ceil() as usize).max(4);
    let inner_hi = (radius - band).max(grid.spacing(0));
    let inside = radial_profile(&source, centre, 0.0, inner_hi, bins(0.0, inner_hi), |i| {
        mask[i] && uv[i] > 0.0
    })?;
    let outside = radial_profile(&source, centre, radius + band, outer, bins(radius + band, outer), |i| {
        mask[i] && uv[i] < 0.0
    })?;
    let problem = RadialProblem {
        radius,
        outer_radius: outer,
        s: 1.0,
        gibbs_coef: st.gibbs_coefficient(),
        phi_in: inside,
        phi_out: outside,
        sigma_in: Profile::Constant(0.0),
        sigma_out: Profile::Constant(0.0),
        nodes: 800,
    };
    let sol = radial_sharp_velocity(&problem)?;
    Ok(OracleSample {
        t: state.t,
        radius,
        jump: sol.jump,
        r_dot_oracle: sol.r_dot,
    })
}

/// Sample distances of the `s = 2` probe: `7ε..11ε` outside; inside the
/// same range cut at `R - 2ε`, or the single offset `7ε` once less than `2ε`
/// of it remains.
pub fn probe_offsets(radius: f64, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = (PROBE_NEAR * eps, PROBE_FAR * eps);
    let outside: Vec<f64> = (0..5).map(|j| lo + (hi - lo) * j as f64 / 4.0).collect();
    let top = hi.min(radius - 2.0 * eps);
    let inside = if top - lo >= PROBE_MIN_SPAN * eps {
        (0..5).map(|j| lo + (top - lo) * j as f64 / 4.0).collect()
    } else {
        vec![lo]
    };
    (inside, outside)
}

/// Central differences of `R(t)`; one-sided at the ends.
pub fn radius_rate(t: &[f64], r: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|k| {
            if n < 2 {
                return f64::NAN;
            }
            let (a, b) = match k {
                0 => (0, 1),
                k if k == n - 1 => (n - 2, n - 1),
                k => (k - 1, k + 1),
            };
            (r[b] - r[a]) / (t[b] - t[a])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_offsets_shrink_with_the_disc() {
        let (inside, outside) = probe_offsets(0.25, 0.02);
        assert_eq!(outside.len(), 5);
        assert!((outside[0] - 0.14).abs() < 1e-12 && (outside[4] - 0.22).abs() < 1e-12);
        assert!((inside[4] - 0.21).abs() < 1e-12);
        let (inside, _) = probe_offsets(0.24, 0.02);
        assert!((inside[4] - 0.2).abs() < 1e-12);
        assert_eq!(probe_offsets(0.21, 0.02).0, vec![0.14]);
    }

    #[test]
    fn radius_rate_of_a_quadratic() {
        let t: Vec<f64> = (0..6).map(|k| k as f64 * 0.1).collect();
        let r: Vec<f64> = t.iter().map(|t| 1.0 - t * t).collect();
        let d = radius_rate(&t, &r);
        for k in 1..5 {
            assert!((d[k] + 2.0 * t[k]).abs() < 1e-12);
        }
        assert!(radius_rate(&[0.0], &[1.0])[0].is_nan());
    }
}
