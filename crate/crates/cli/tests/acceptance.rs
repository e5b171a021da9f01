//! Acceptance suite: one line per criterion, run in sequence so that the
//! wall-clock limits measure each criterion alone.

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

use std::io::Write;
use std::ops::ControlFlow;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fracflow::diagnostics::equipartition_defect;
use fracflow::movements::FlowSettings;
use fracflow::potential::{modica_mortola_energy, optimal_profile};
use fracflow::spectral::ScalarField;
use fracflow::{Flow, Grid, Operator, State};
use fracflow_cli::commands::{build, cmd_gamma_sweep, cmd_gibbs_sweep, eigenfunction_error, GibbsCase, GibbsReport};
use fracflow_cli::measure::{oracle_sample, radius_rate};
use fracflow_cli::scenario::centre;
use fracflow_cli::{RunConfig, Scenario};

const SIGMA_MM: f64 = 1.885_618_083_164_126_7;
/// Box side of the sweeps: the disc of radius 1/4 keeps 6ε from the wall up to ε = 0.08.
const SWEEP_BOX: f64 = 1.5;

struct Outcome {
    passed: bool,
    detail: String,
    /// Best-effort criteria report but do not fail the suite.
    best_effort: bool,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self {
            passed,
            detail,
            best_effort: false,
        }
    }
}

fn line(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
    let _ = out.flush();
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let value = f();
    (value, start.elapsed())
}

fn spectral_exactness() -> Outcome {
    let (errs, time) = timed(|| {
        [(1, 256), (2, 256)].map(|(dim, n)| {
            let op = Operator::new(Grid::uniform(dim, 1.0, n).unwrap());
            eigenfunction_error(&op, &[1.0, 1.6, 2.0], n / 4).unwrap()
        })
    });
    let passed = errs.iter().all(|&e| e <= 1e-12) && time.as_secs_f64() < 5.0;
    Outcome::new(
        passed,
        format!(
            "max relative error 1D {:.2e}, 2D {:.2e} (limit 1e-12); {:.2} s (limit 5 s)",
            errs[0],
            errs[1],
            time.as_secs_f64()
        ),
    )
}

fn optimal_profile_energy() -> Outcome {
    let ((m, eq), time) = timed(|| {
        let eps = 0.02;
        let grid = Grid::uniform(1, 1.0, 2048).unwrap();
        let op = Operator::new(grid.clone());
        let d = ScalarField::from_fn(grid, |x| x[0] - 0.5).unwrap();
        let u = optimal_profile(&d, eps).unwrap();
        let m = modica_mortola_energy(&op, &u, eps).unwrap();
        (m, equipartition_defect(&op, &u, eps).unwrap().normalized)
    });
    let rel = (m / SIGMA_MM - 1.0).abs();
    Outcome::new(
        rel <= 0.01 && eq <= 0.02 && time.as_secs_f64() < 1.0,
        format!(
            "M = {m:.6} vs σ_MM = {SIGMA_MM:.6} (rel {rel:.1e}, limit 1e-2); equipartition {eq:.1e} (limit 2e-2); {:.3} s",
            time.as_secs_f64()
        ),
    )
}

fn gamma_limit() -> Outcome {
    let cfg = RunConfig {
        scenario: Scenario::Circle2d,
        ..RunConfig::default()
    }
    .with_box(SWEEP_BOX, 512);
    let (report, time) = timed(|| cmd_gamma_sweep(&cfg, &[0.08, 0.04, 0.02, 0.01]).unwrap());
    let gaps: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{:.2e}", r.gap_modica_mortola.abs()))
        .collect();
    let ratio = report.rows.last().unwrap().ratio_modica_mortola;
    Outcome::new(
        report.converging == Some(true) && (0.97..=1.03).contains(&ratio) && time.as_secs_f64() < 60.0,
        format!(
            "|E^ε - E⁰| = [{}] strictly decreasing: {}; final ratio {ratio:.5} (limit [0.97, 1.03]); {:.1} s",
            gaps.join(", "),
            report.converging == Some(true),
            time.as_secs_f64()
        ),
    )
}

struct DissipationRun {
    worst_rise: f64,
    balance: f64,
    energy_initial: f64,
    steps: usize,
    drift: f64,
    time: Duration,
}

fn dissipation_run() -> DissipationRun {
    let cfg = RunConfig {
        scenario: Scenario::Circle2d,
        eps: 0.05,
        tau: 1e-4,
        t_end: 0.2,
        ..RunConfig::default()
    }
    .with_box(SWEEP_BOX, 128);
    let ((summary, worst_rise), time) = timed(|| {
        let (flow, state) = build(&cfg).unwrap();
        let mut worst = f64::NEG_INFINITY;
        let summary = flow
            .run(&state, cfg.t_end, |_, r| {
                worst = worst.max((r.energy_after - r.energy_before) / r.energy_before.abs());
                Ok(ControlFlow::Continue(()))
            })
            .unwrap();
        (summary, worst)
    });
    DissipationRun {
        worst_rise,
        balance: summary.balance_gap(),
        energy_initial: summary.energy_initial,
        steps: summary.steps,
        drift: summary.max_mean_drift,
        time,
    }
}

fn dissipation(run: &DissipationRun) -> Outcome {
    let slack = 1e-6 * run.energy_initial.abs();
    Outcome::new(
        run.steps == 2000 && run.worst_rise <= 1e-8 && run.balance >= -slack && run.time.as_secs_f64() < 600.0,
        format!(
            "{} steps; largest relative energy change per step {:.2e} (limit 1e-8); E(0) - E(end) - Σ diss = {:.3e} (limit ≥ -{slack:.1e}); {:.1} s",
            run.steps,
            run.worst_rise,
            run.balance,
            run.time.as_secs_f64()
        ),
    )
}

struct StationaryRun {
    change: f64,
    drift: f64,
}

fn stationary_run() -> StationaryRun {
    let grid = Grid::uniform(2, 1.0, 64).unwrap();
    let op = Operator::new(grid.clone());
    let flow = Flow::new(op.clone(), FlowSettings::default());
    let phi = ScalarField::constant(grid.clone(), 0.5);
    let sigma = ScalarField::constant(grid, -0.5);
    let start = State::new(&op, &phi, &sigma, 0.05, 1e-3, 1.0).unwrap();
    let summary = flow.run(&start, 0.1, |_, _| Ok(ControlFlow::Continue(()))).unwrap();
    let end = &summary.final_state;
    let nodal = |f| op.to_nodal(f).unwrap();
    let change = nodal(&end.phi)
        .max_abs_diff(&nodal(&start.phi))
        .max(nodal(&end.sigma).max_abs_diff(&nodal(&start.sigma)));
    assert_eq!(summary.steps, 100);
    StationaryRun {
        change,
        drift: summary.max_mean_drift,
    }
}

fn gibbs_sweep() -> (GibbsReport, Duration) {
    let cfg = RunConfig {
        scenario: Scenario::Circle2d,
        s: 1.0,
        diagnostics_every: 0,
        ..RunConfig::default()
    }
    .with_box(SWEEP_BOX, 128);
    let cases = [
        GibbsCase::scaled(0.08, 128),
        GibbsCase::scaled(0.04, 256),
        GibbsCase::scaled(0.02, 512),
    ];
    timed(|| cmd_gibbs_sweep(&cfg, &cases).unwrap())
}

fn gibbs_thomson(report: &GibbsReport, time: Duration) -> Outcome {
    let target = report.coef_modica_mortola;
    let last = report.rows.last().unwrap();
    let rel = (last.coef / target - 1.0).abs();
    let coefs: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("ε={} coef={:.4} corr={:.3}", r.eps, r.coef, r.correlation))
        .collect();
    let diffs: Vec<String> = report
        .rows
        .iter()
        .filter_map(|r| r.cauchy_diff.map(|d| format!("{d:.4}")))
        .collect();
    Outcome::new(
        report.cauchy_decreasing == Some(true) && rel <= 0.15 && time.as_secs_f64() < 1800.0,
        format!(
            "[{}]; Cauchy differences [{}]; coef at ε=0.02 vs 2√2/3 = {target:.4}: rel {rel:.3} (limit 0.15); vs c_W = {:.4}: rel {:.3}; {:.0} s",
            coefs.join("; "),
            diffs.join(", "),
            report.coef_cw,
            (last.coef / report.coef_cw - 1.0).abs(),
            time.as_secs_f64()
        ),
    )
}

fn bulk_relation(report: &GibbsReport) -> Outcome {
    let last = report.rows.last().unwrap();
    Outcome::new(
        last.bulk_residual <= 0.05,
        format!(
            "far-field normalized residual at ε = {}: {:.4} (limit 0.05); ε = 0.08, 0.04: {:.4}, {:.4}",
            last.eps, last.bulk_residual, report.rows[0].bulk_residual, report.rows[1].bulk_residual
        ),
    )
}

/// Prediction and measured rate on the samples of the window
/// `0.15 ≤ R ≤ 0.25` after the inner-layer relaxation `t ≥ 5ε²`.
struct Window {
    predicted: Vec<f64>,
    measured: Vec<f64>,
    radius: (f64, f64),
    time: Duration,
}

fn window_run(s: f64) -> Window {
    let eps = 0.02;
    let cfg = RunConfig {
        scenario: Scenario::Circle2d,
        eps,
        tau: 1e-5,
        s,
        t_end: 0.08,
        ..RunConfig::default()
    }
    .with_box(1.0, 256);
    let (samples, time) = timed(|| {
        let (flow, state) = build(&cfg).unwrap();
        let mid = centre(flow.op().grid());
        let mut samples = Vec::new();
        let mut step = 0usize;
        let mut probe = |state: &State| {
            let o = oracle_sample(&flow, state, mid, cfg.surface_tension).unwrap();
            let stop = o.radius < 0.145;
            samples.push(o);
            stop
        };
        probe(&state);
        flow.run(&state, cfg.t_end, |state, _| {
            step += 1;
            if step.is_multiple_of(20) && probe(state) {
                return Ok(ControlFlow::Break(()));
            }
            Ok(ControlFlow::Continue(()))
        })
        .unwrap();
        samples
    });
    let t: Vec<f64> = samples.iter().map(|o| o.t).collect();
    let r: Vec<f64> = samples.iter().map(|o| o.radius).collect();
    let rate = radius_rate(&t, &r);
    let mut w = Window {
        predicted: Vec::new(),
        measured: Vec::new(),
        radius: (f64::INFINITY, f64::NEG_INFINITY),
        time,
    };
    // interior samples only, so that every rate is a central difference
    for k in 1..samples.len().saturating_sub(1) {
        let o = &samples[k];
        if (0.15..=0.25).contains(&o.radius) && o.t >= 5.0 * eps * eps {
            w.predicted.push(o.r_dot_oracle);
            w.measured.push(rate[k]);
            w.radius = (w.radius.0.min(o.radius), w.radius.1.max(o.radius));
        }
    }
    w
}

fn gaps(w: &Window) -> Vec<f64> {
    w.predicted
        .iter()
        .zip(&w.measured)
        .map(|(p, m)| (p - m).abs() / m.abs())
        .collect()
}

fn velocity_law(w: &Window) -> Outcome {
    let g = gaps(w);
    let worst = g.iter().copied().fold(0.0, f64::max);
    let mean = g.iter().sum::<f64>() / g.len().max(1) as f64;
    Outcome::new(
        !g.is_empty() && worst <= 0.25 && w.time.as_secs_f64() < 600.0,
        format!(
            "{} samples, R in [{:.3}, {:.3}]; radial-oracle Ṙ vs measured: worst rel gap {worst:.3}, mean {mean:.3} (limit 0.25); {:.0} s",
            g.len(),
            w.radius.0,
            w.radius.1,
            w.time.as_secs_f64()
        ),
    )
}

fn s2_probe(w: &Window) -> Outcome {
    let g = gaps(w);
    let same_sign = w
        .predicted
        .iter()
        .zip(&w.measured)
        .filter(|(p, m)| p.signum() == m.signum())
        .count();
    let worst = g.iter().copied().fold(0.0, f64::max);
    let mean = g.iter().sum::<f64>() / g.len().max(1) as f64;
    let mut out = Outcome::new(
        !g.is_empty() && same_sign == g.len() && worst <= 0.4,
        format!(
            "best effort; {} samples, R in [{:.3}, {:.3}]; sign agreement {same_sign}/{}; -[∂(Av)/∂n]/2 vs measured Ṙ: worst rel gap {worst:.3}, mean {mean:.3} (limit 0.4); {:.0} s",
            g.len(),
            w.radius.0,
            w.radius.1,
            g.len(),
            w.time.as_secs_f64()
        ),
    );
    out.best_effort = true;
    out
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        // libtest protocol: nothing to enumerate
        return ExitCode::SUCCESS;
    }
    let mut failures = Vec::new();
    let mut emit = |n: u32, o: Outcome| {
        let verdict = match (o.passed, o.best_effort) {
            (true, _) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (best effort)",
        };
        line(&format!("criterion {n}: {verdict}: {}", o.detail));
        if !o.passed && !o.best_effort {
            failures.push(n);
        }
    };

    emit(1, spectral_exactness());
    emit(2, optimal_profile_energy());
    emit(3, gamma_limit());
    let diss = dissipation_run();
    emit(4, dissipation(&diss));
    let stat = stationary_run();
    emit(
        5,
        Outcome::new(
            stat.change <= 1e-9,
            format!("‖Δstate‖_∞ after 100 steps: {:.2e} (limit 1e-9)", stat.change),
        ),
    );
    let (sweep, sweep_time) = gibbs_sweep();
    let drifts: Vec<f64> = [diss.drift, stat.drift]
        .into_iter()
        .chain(sweep.rows.iter().map(|r| r.mean_drift))
        .collect();
    let drift = drifts.iter().copied().fold(0.0, f64::max);
    emit(
        6,
        Outcome::new(
            drift <= 1e-12,
            format!(
                "largest mean(φ) drift over {} runs: {drift:.2e} (limit 1e-12)",
                drifts.len()
            ),
        ),
    );
    emit(7, gibbs_thomson(&sweep, sweep_time));
    emit(8, bulk_relation(&sweep));
    emit(9, velocity_law(&window_run(1.0)));
    emit(10, s2_probe(&window_run(2.0)));
    line("criterion 11: NOT ATTAINABLE: full 3D reproduction of the rigorous limit is out of desk scale; criteria 1-10 are the substitute suite");

    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        line(&format!("acceptance failures: {failures:?}"));
        ExitCode::FAILURE
    }
}
