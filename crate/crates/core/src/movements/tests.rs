use std::f64::consts::PI;
use std::ops::ControlFlow;

use super::*;
use crate::potential::{optimal_profile, total_energy_eps};
use crate::spectral::GridSpec;

fn flow(n: usize) -> GradientFlow<f64> {
    let op = FractionalOperator::new(GridSpec::uniform(2, 1.0, n).unwrap());
    GradientFlow::new(op, FlowSettings::default())
}

fn stationary(fl: &GradientFlow<f64>, tau: f64, s: f64) -> FlowState<f64> {
    let g = fl.op().grid().clone();
    FlowState::new(
        fl.op(),
        &ScalarField::constant(g.clone(), 0.5),
        &ScalarField::constant(g, -0.5),
        0.1,
        tau,
        s,
    )
    .unwrap()
}

/// Circle of radius 0.25 with a smooth nutrient perturbation.
fn circle(fl: &GradientFlow<f64>, eps: f64, tau: f64, s: f64) -> FlowState<f64> {
    let g = fl.op().grid().clone();
    let d = ScalarField::from_fn(g.clone(), |x| {
        0.25 - ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt()
    })
    .unwrap();
    let u = optimal_profile(&d, eps).unwrap();
    let sigma = ScalarField::from_fn(g, |x| -0.3 + 0.1 * (2.0 * PI * x[0]).cos() * (PI * x[1]).cos()).unwrap();
    let phi = u.add(&sigma).unwrap();
    FlowState::new(fl.op(), &phi, &sigma, eps, tau, s).unwrap()
}

fn nodal(fl: &GradientFlow<f64>, f: &ScalarField<f64>) -> ScalarField<f64> {
    fl.op().to_nodal(f).unwrap()
}

#[test]
fn invalid_parameters_are_rejected() {
    let fl = flow(16);
    let g = fl.op().grid().clone();
    let z = ScalarField::zeros(g);
    assert!(FlowState::new(fl.op(), &z, &z, 0.0, 1e-3, 1.0).is_err());
    assert!(FlowState::new(fl.op(), &z, &z, 0.1, -1e-3, 1.0).is_err());
    assert!(FlowState::new(fl.op(), &z, &z, 0.1, f64::INFINITY, 1.0).is_err());
    assert!(FlowState::new(fl.op(), &z, &z, 0.1, 1e-3, 0.5).is_err());
    let other = ScalarField::zeros(GridSpec::uniform(2, 1.0, 8).unwrap());
    assert!(FlowState::new(fl.op(), &other, &z, 0.1, 1e-3, 1.0).is_err());
}

#[test]
fn scheme_energy_matches_the_energy_functional() {
    let fl = flow(32);
    let st = circle(&fl, 0.1, 1e-3, 1.3);
    let a = fl.energy(&st).unwrap();
    let b = total_energy_eps(fl.op(), 1.3, &st.phi, &st.sigma, 0.1).unwrap();
    assert!((a.total - b.total).abs() < 1e-12 * b.total.abs());
    assert!((a.f_as - b.f_as).abs() < 1e-12 * b.f_as.abs());
}

#[test]
fn stationary_state_is_a_fixed_point_of_both_substeps() {
    let fl = flow(16);
    for s in [1.0, 2.0] {
        let st = stationary(&fl, 1e-3, s);
        let sig = fl.sigma_step(&st).unwrap();
        assert!(sig.field.max_abs_diff(&st.sigma) < 1e-9);
        let phi = fl.phi_step(&st, &sig.field).unwrap();
        assert!(phi.field.max_abs_diff(&st.phi) < 1e-9);
    }
}

#[test]
fn stationary_state_survives_many_steps() {
    let fl = flow(16);
    let st = stationary(&fl, 1e-3, 1.0);
    let summary = fl.run(&st, 0.1, |_, _| Ok(ControlFlow::Continue(()))).unwrap();
    assert_eq!(summary.steps, 100);
    let end = &summary.final_state;
    assert!(nodal(&fl, &end.phi).max_abs_diff(&nodal(&fl, &st.phi)) <= 1e-9);
    assert!(nodal(&fl, &end.sigma).max_abs_diff(&nodal(&fl, &st.sigma)) <= 1e-9);
    assert!((end.t - 0.1).abs() < 1e-12);
}

#[test]
fn phi_step_preserves_the_mean() {
    let fl = flow(32);
    let st = circle(&fl, 0.08, 1e-2, 1.0);
    let sig = fl.sigma_step(&st).unwrap();
    let phi = fl.phi_step(&st, &sig.field).unwrap();
    assert_eq!(phi.field.mean(), st.phi.mean());
    assert!((nodal(&fl, &phi.field).mean() - st.phi_mean0).abs() <= 1e-12);
}

#[test]
fn phi_step_reproduces_the_linearized_decay_rate() {
    // frozen σ = -1/2, φ = 1/2 + δ e_1: φ̇ = -λ^s (W''(1)/ε + ελ) δ e_1
    let eps = 0.5;
    let tau = 1e-4;
    let grid = GridSpec::uniform(1, 1.0, 32).unwrap();
    let op = FractionalOperator::new(grid.clone());
    let fl = GradientFlow::new(op, FlowSettings::default());
    let delta = 1e-3;
    let phi = ScalarField::from_fn(grid.clone(), |x| 0.5 + delta * (PI * x[0]).cos()).unwrap();
    let sigma = ScalarField::constant(grid, -0.5);
    let st = FlowState::new(fl.op(), &phi, &sigma, eps, tau, 1.0).unwrap();
    let out = fl.phi_step(&st, &st.sigma).unwrap();
    let amp = out.field.values()[1];
    let measured = -(amp / delta).ln() / tau;
    let lam = PI * PI;
    let analytic = lam * (8.0 / eps + eps * lam);
    assert!(
        (measured - analytic).abs() < 0.05 * analytic,
        "{measured} vs {analytic}"
    );
}

#[test]
fn sigma_increment_is_first_order_in_tau() {
    let fl = flow(32);
    let mut norms = Vec::new();
    for tau in [4e-4, 2e-4, 1e-4] {
        let st = circle(&fl, 0.08, tau, 1.0);
        let sig = fl.sigma_step(&st).unwrap();
        let d = sig.field.sub(&st.sigma).unwrap();
        norms.push(fl.op().l2_norm(&d).unwrap());
    }
    for w in norms.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
    }
}

#[test]
fn mirror_symmetry_is_preserved() {
    let fl = flow(32);
    let st = circle(&fl, 0.08, 1e-3, 1.0);
    let (next, _) = fl.step(&st).unwrap();
    let g = fl.op().grid().clone();
    for f in [&next.phi, &next.sigma] {
        let v = nodal(&fl, f);
        for i in 0..32 {
            for j in 0..32 {
                let a = v.values()[g.flat(&[i, j])];
                let b = v.values()[g.flat(&[31 - i, j])];
                assert!((a - b).abs() < 1e-11);
            }
        }
    }
}

#[test]
fn steps_dissipate_energy() {
    let fl = flow(32);
    let mut st = circle(&fl, 0.08, 1e-3, 1.0);
    for _ in 0..5 {
        let (next, r) = fl.step(&st).unwrap();
        assert!(r.energy_after < r.energy_before);
        assert!(r.diss_sigma >= 0.0 && r.diss_phi >= 0.0);
        assert!(r.energy_after + r.diss_sigma + r.diss_phi <= r.energy_before + 1e-10);
        assert!(r.residual_sigma.is_finite() && r.residual_phi.is_finite());
        st = next;
    }
}

fn run_to(fl: &GradientFlow<f64>, st: &FlowState<f64>, t_end: f64) -> (FlowState<f64>, FlowState<f64>) {
    let mut prev = st.clone();
    let mut last = st.clone();
    fl.run(st, t_end, |x, _| {
        prev = std::mem::replace(&mut last, x.clone());
        Ok(ControlFlow::Continue(()))
    })
    .unwrap();
    (prev, last)
}

#[test]
fn halving_tau_gives_first_order_agreement() {
    let fl = flow(32);
    let ends: Vec<_> = [2e-4, 1e-4, 5e-5]
        .iter()
        .map(|&tau| run_to(&fl, &circle(&fl, 0.08, tau, 1.0), 0.02).1.phi)
        .collect();
    let e1 = fl.op().l2_norm(&ends[0].sub(&ends[1]).unwrap()).unwrap();
    let e2 = fl.op().l2_norm(&ends[1].sub(&ends[2]).unwrap()).unwrap();
    let ratio = e1 / e2;
    assert!((ratio - 2.0).abs() < 0.3, "{ratio}");
}

#[test]
fn pde_residual_cases() {
    let fl = flow(16);
    let st = stationary(&fl, 1e-3, 1.0);
    let (next, _) = fl.step(&st).unwrap();
    let r = fl.pde_residual(&st, &next).unwrap();
    assert!(r.r_phi <= 1e-8 && r.r_sigma <= 1e-8);

    // measured on the last step of runs that each used their own τ, past
    // the initial layer
    let fl = flow(32);
    let mut res = Vec::new();
    for tau in [2e-4, 1e-4] {
        let (prev, last) = run_to(&fl, &circle(&fl, 0.08, tau, 1.0), 0.01);
        let r = fl.pde_residual(&prev, &last).unwrap();
        assert!((r.r_phi - r.r_phi_original).abs() <= 1e-11 * r.r_phi.max(1.0));
        res.push(r);
    }
    let ratio_phi = res[0].r_phi / res[1].r_phi;
    let ratio_sigma = res[0].r_sigma / res[1].r_sigma;
    assert!((ratio_phi - 2.0).abs() < 0.3, "{ratio_phi}");
    assert!((ratio_sigma - 2.0).abs() < 0.3, "{ratio_sigma}");
}

#[test]
fn run_stops_when_the_observer_asks() {
    let fl = flow(16);
    let st = circle(&fl, 0.1, 1e-3, 1.0);
    let mut seen = 0;
    let s = fl
        .run(&st, 1.0, |_, _| {
            seen += 1;
            Ok(if seen == 3 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            })
        })
        .unwrap();
    assert!(s.stopped_early);
    assert_eq!(s.steps, 3);
    assert!(s.balance_gap() >= -1e-10);
    assert!(fl.run(&st, 0.0, |_, _| Ok(ControlFlow::Continue(()))).is_err());
}

#[test]
fn exhausted_retries_surface_the_solver_failure() {
    let op = FractionalOperator::new(GridSpec::uniform(2, 1.0, 32).unwrap());
    for max_retries in [0, 2] {
        let settings = FlowSettings {
            max_newton_iters: 1,
            max_retries,
            ..FlowSettings::default()
        };
        let fl = GradientFlow::new(op.clone(), settings);
        let st = circle(&fl, 0.05, 5e-2, 1.0);
        match fl.step(&st) {
            Err(Error::NewtonFailed { iterations, .. }) => assert_eq!(iterations, 1),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn dealiased_scheme_keeps_the_energy_law() {
    let op = FractionalOperator::new(GridSpec::uniform(2, 1.0, 32).unwrap());
    let fl = GradientFlow::new(
        op.clone(),
        FlowSettings {
            dealias: true,
            ..FlowSettings::default()
        },
    );
    let plain = GradientFlow::new(op, FlowSettings::default());
    let st = circle(&fl, 0.1, 1e-3, 1.0);
    let (a, r) = fl.step(&st).unwrap();
    assert!(r.energy_after + r.diss_sigma + r.diss_phi <= r.energy_before + 1e-10);
    let (b, _) = plain.step(&st).unwrap();
    // the profile is resolved, so aliasing is a small perturbation
    assert!(nodal(&fl, &a.phi).max_abs_diff(&nodal(&fl, &b.phi)) < 1e-3);
}

#[test]
fn a_priori_bounds_hold_along_a_run() {
    let fl = flow(32);
    let st = circle(&fl, 0.08, 1e-3, 1.6);
    let e0 = fl.energy(&st).unwrap().total;
    let bounds = APrioriBounds::from_initial_energy(e0, 1.0, 0.08).unwrap();
    let mut ledger = Ledger::default();
    fl.run(&st, 0.02, |s, r| {
        ledger.record(s, r);
        let (hs, l4) = fl.bounded_quantities(s)?;
        bounds.check(hs, l4, ledger.total())?;
        Ok(ControlFlow::Continue(()))
    })
    .unwrap();
    assert_eq!(ledger.steps, 20);
}

#[test]
fn single_precision_step() {
    let op = FractionalOperator::new(GridSpec::<f32>::uniform(2, 1.0, 16).unwrap());
    let settings = FlowSettings {
        tol_newton: 1e-4,
        ledger_tol: 1e-4,
        ..FlowSettings::default()
    };
    let fl = GradientFlow::new(op, settings);
    let g = fl.op().grid().clone();
    let phi = ScalarField::from_fn(g.clone(), |x| (6.0 * (x[0] - 0.5)).tanh()).unwrap();
    let sigma = ScalarField::zeros(g);
    let st = FlowState::new(fl.op(), &phi, &sigma, 0.2f32, 1e-3, 1.0).unwrap();
    let (_, r) = fl.step(&st).unwrap();
    assert!(r.energy_after <= r.energy_before);
}
