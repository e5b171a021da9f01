//! The four subcommands as library functions.

use std::f64::consts::PI;
use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fracflow::movements::{FlowSettings, Ledger, LedgerRow, RunSummary};
use fracflow::potential::{modica_mortola_energy, optimal_profile, total_energy_eps, SurfaceTension};
use fracflow::spectral::{write_snapshot, ScalarField};
use fracflow::{Field, Flow, Grid, Operator, State};
use serde::Serialize;

use crate::config::{RunConfig, Scenario};
use crate::measure::{measure, oracle_sample, radius_rate, InterfaceSample, OracleSample};
use crate::scenario::{centre, initial_data, level_function};

/// Operator, flow and initial state for a configuration.
pub fn build(cfg: &RunConfig) -> Result<(Flow, State)> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let op = Operator::new(grid).with_mean_tol(cfg.mean_tol);
    let settings = FlowSettings {
        tol_newton: cfg.tol_newton,
        ledger_tol: cfg.ledger_tol,
        dealias: cfg.dealias,
        ..FlowSettings::default()
    };
    let (phi, sigma) = initial_data(cfg)?;
    let state = State::new(&op, &phi, &sigma, cfg.eps, cfg.tau, cfg.s)?;
    Ok((Flow::new(op, settings), state))
}

#[derive(Debug, Serialize)]
struct LedgerCsv<'a> {
    config_hash: &'a str,
    step: usize,
    #[serde(flatten)]
    row: &'a LedgerRow,
}

#[derive(Debug, Serialize)]
struct DiagnosticsCsv<'a> {
    config_hash: &'a str,
    t: f64,
    #[serde(rename = "R")]
    radius: Option<f64>,
    contour_length: Option<f64>,
    kappa_mean: Option<f64>,
    v_mean: Option<f64>,
    coef: Option<f64>,
    equipartition_defect: f64,
    energy_density: Option<f64>,
    bulk_residual: Option<f64>,
}

impl<'a> DiagnosticsCsv<'a> {
    fn new(config_hash: &'a str, s: &InterfaceSample) -> Self {
        Self {
            config_hash,
            t: s.t,
            radius: s.radius,
            contour_length: s.contour_length,
            kappa_mean: s.kappa_mean,
            v_mean: s.v_mean,
            coef: s.coef,
            equipartition_defect: s.equipartition_defect,
            energy_density: s.energy_density,
            bulk_residual: s.bulk_residual,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub config_hash: String,
    pub t: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub jump: f64,
    #[serde(rename = "R_dot_oracle")]
    pub r_dot_oracle: f64,
    #[serde(rename = "R_dot_measured")]
    pub r_dot_measured: f64,
    pub relative_gap: f64,
}

/// Pair oracle predictions with the measured rate of the same samples.
pub fn oracle_rows(hash: &str, samples: &[OracleSample]) -> Vec<OracleRow> {
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let r: Vec<f64> = samples.iter().map(|s| s.radius).collect();
    let rate = radius_rate(&t, &r);
    samples
        .iter()
        .zip(rate)
        .map(|(s, m)| OracleRow {
            config_hash: hash.to_string(),
            t: s.t,
            radius: s.radius,
            jump: s.jump,
            r_dot_oracle: s.r_dot_oracle,
            r_dot_measured: m,
            relative_gap: (s.r_dot_oracle - m).abs() / m.abs(),
        })
        .collect()
}

/// CSV writer with headers taken from the first serialized row. The csv
/// crate cannot flatten nested structs, so rows go through a JSON map.
struct Table {
    writer: csv::Writer<fs::File>,
    header: Option<Vec<String>>,
}

impl Table {
    fn create(path: &Path) -> Result<Self> {
        let writer = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self { writer, header: None })
    }

    fn write<R: Serialize>(&mut self, row: &R) -> Result<()> {
        let value = serde_json::to_value(row)?;
        let map = value.as_object().context("rows serialize to maps")?;
        if self.header.is_none() {
            let keys: Vec<String> = map.keys().cloned().collect();
            self.writer.write_record(&keys)?;
            self.header = Some(keys);
        }
        let header = self.header.as_ref().expect("header set above");
        let cells: Vec<String> = header
            .iter()
            .map(|k| match &map[k] {
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(s) => s.clone(),
                v => v.to_string(),
            })
            .collect();
        self.writer.write_record(&cells)?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: RunSummary<f64>,
    pub ledger: Vec<LedgerRow>,
    pub diagnostics: Vec<InterfaceSample>,
    pub oracle: Vec<OracleRow>,
    pub ledger_path: PathBuf,
    pub diagnostics_path: PathBuf,
    pub oracle_path: Option<PathBuf>,
}

/// Runs the configured scenario and writes `ledger.csv`, `diagnostics.csv`,
/// `oracle.csv` (circle only) and snapshots of `u` into the output directory.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome> {
    let (flow, state) = build(cfg)?;
    let hash = cfg.hash();
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let ledger_path = dir.join("ledger.csv");
    let diagnostics_path = dir.join("diagnostics.csv");
    let mut ledger_table = Table::create(&ledger_path)?;
    let mut diag_table = Table::create(&diagnostics_path)?;
    let with_oracle = cfg.scenario == Scenario::Circle2d;
    let mid = centre(flow.op().grid());

    let mut ledger = Ledger::default();
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    let mut oracle = Vec::new();
    let mut step = 0usize;

    let mut sample =
        |state: &State, diagnostics: &mut Vec<InterfaceSample>, oracle: &mut Vec<OracleSample>| -> Result<()> {
            // a vanished interface ends the measurements, not the run
            match measure(&flow, state) {
                Ok(s) => {
                    diag_table.write(&DiagnosticsCsv::new(&hash, &s))?;
                    diagnostics.push(s);
                }
                Err(fracflow::Error::NoInterface) => return Ok(()),
                Err(e) => return Err(e.into()),
            }
            if with_oracle {
                if let Ok(o) = oracle_sample(&flow, state, mid, cfg.surface_tension) {
                    oracle.push(o);
                }
            }
            Ok(())
        };
    if cfg.diagnostics_every > 0 {
        sample(&state, &mut diagnostics, &mut oracle)?;
    }
    let snapshot = |state: &State, step: usize| -> Result<()> {
        let u = flow.op().to_nodal(&state.u())?;
        write_snapshot(&dir.join(format!("u_{step:06}")), &u, state.t)?;
        Ok(())
    };
    if cfg.snapshot_every > 0 {
        snapshot(&state, 0)?;
    }
    let summary = flow.run(&state, cfg.t_end, |state, report| {
        step += 1;
        let row = ledger.record(state, report);
        let out = (|| -> Result<()> {
            ledger_table.write(&LedgerCsv {
                config_hash: &hash,
                step,
                row: &row,
            })?;
            if cfg.diagnostics_every > 0 && step.is_multiple_of(cfg.diagnostics_every) {
                sample(state, &mut diagnostics, &mut oracle)?;
            }
            if cfg.snapshot_every > 0 && step.is_multiple_of(cfg.snapshot_every) {
                snapshot(state, step)?;
            }
            Ok(())
        })();
        rows.push(row);
        out.map_err(|e| fracflow::Error::Io(format!("{e:#}")))?;
        Ok(ControlFlow::Continue(()))
    })?;
    ledger_table.finish()?;
    diag_table.finish()?;

    let oracle_rows = oracle_rows(&hash, &oracle);
    let oracle_path = if with_oracle {
        let path = dir.join("oracle.csv");
        let mut table = Table::create(&path)?;
        for r in &oracle_rows {
            table.write(r)?;
        }
        table.finish()?;
        Some(path)
    } else {
        None
    };
    Ok(RunOutcome {
        summary,
        ledger: rows,
        diagnostics,
        oracle: oracle_rows,
        ledger_path,
        diagnostics_path,
        oracle_path,
    })
}

/// Sharp energy of the scenario's limit data with constant `σ₀ = c`:
/// `E⁰ = st |Γ| + c ∫u⁰ + 3/2 c² |Ω|`, all terms exact for the geometry.
pub fn sharp_energy_exact(cfg: &RunConfig, st: SurfaceTension) -> Result<f64> {
    let l = &cfg.grid.lengths;
    let volume: f64 = l.iter().product();
    let (measure, plus) = match cfg.scenario {
        Scenario::Profile1d => (1.0, l[0] / 2.0),
        Scenario::Stripe2d => (2.0 * l[1], 2.0 * cfg.half_width * l[1]),
        Scenario::Circle2d => (2.0 * PI * cfg.radius, PI * cfg.radius * cfg.radius),
        Scenario::Random2d => bail!("random_2d has no closed-form sharp energy"),
    };
    let c = cfg.sigma0;
    let integral_u = plus - (volume - plus);
    Ok(st.value() * measure + c * integral_u + 1.5 * c * c * volume)
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaRow {
    pub config_hash: String,
    pub eps: f64,
    pub e_eps: f64,
    pub m_eps: f64,
    pub e0_modica_mortola: f64,
    pub e0_cw: f64,
    pub gap_modica_mortola: f64,
    pub gap_cw: f64,
    pub ratio_modica_mortola: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaReport {
    pub rows: Vec<GammaRow>,
    /// `|E^ε - E⁰(σ_MM)|` strictly decreasing along the list; absent for a
    /// single ε.
    pub converging: Option<bool>,
}

/// Recovery-sequence energies `E^ε` for fixed sharp data against `E⁰`.
pub fn cmd_gamma_sweep(cfg: &RunConfig, eps_list: &[f64]) -> Result<GammaReport> {
    if eps_list.is_empty() {
        bail!("empty eps list");
    }
    let e0_mm = sharp_energy_exact(cfg, SurfaceTension::ModicaMortola)?;
    let e0_cw = sharp_energy_exact(cfg, SurfaceTension::WellIntegral)?;
    let mut rows = Vec::new();
    for &eps in eps_list {
        let c = RunConfig { eps, ..cfg.clone() };
        c.validate()?;
        let grid = c.grid()?;
        let op = Operator::new(grid.clone());
        let (phi, sigma) = initial_data(&c)?;
        let e = total_energy_eps(&op, c.s, &phi, &sigma, eps)?;
        rows.push(GammaRow {
            config_hash: c.hash(),
            eps,
            e_eps: e.total,
            m_eps: e.m_eps,
            e0_modica_mortola: e0_mm,
            e0_cw,
            gap_modica_mortola: e.total - e0_mm,
            gap_cw: e.total - e0_cw,
            ratio_modica_mortola: e.total / e0_mm,
        });
    }
    let converging = (rows.len() > 1).then(|| {
        rows.windows(2)
            .all(|w| w[1].gap_modica_mortola.abs() < w[0].gap_modica_mortola.abs())
    });
    Ok(GammaReport { rows, converging })
}

/// One member of a Gibbs–Thomson sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GibbsCase {
    pub eps: f64,
    pub n: usize,
    pub tau: f64,
    pub t_end: f64,
}

impl GibbsCase {
    /// `τ = ε²/80`, `t_end = ε/5`: the splitting error in `v` scales like
    /// `τ/ε²`, and the inner layer relaxes within a few hundred steps.
    pub fn scaled(eps: f64, n: usize) -> Self {
        Self {
            eps,
            n,
            tau: eps * eps / 80.0,
            t_end: eps / 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GibbsRow {
    pub config_hash: String,
    pub eps: f64,
    pub n: usize,
    pub tau: f64,
    pub t_end: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub kappa_mean: f64,
    pub v_mean: f64,
    pub coef: f64,
    pub correlation: f64,
    pub cauchy_diff: Option<f64>,
    pub bulk_residual: f64,
    pub equipartition_defect: f64,
    pub energy_density: f64,
    pub mean_drift: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GibbsReport {
    pub rows: Vec<GibbsRow>,
    /// Predicted by the inner expansion: `σ_MM / 2`.
    pub coef_modica_mortola: f64,
    /// `c_W = 16/15`, for comparison.
    pub coef_cw: f64,
    /// Cauchy differences strictly decreasing; absent for fewer than three runs.
    pub cauchy_decreasing: Option<bool>,
    #[serde(skip)]
    pub samples: Vec<InterfaceSample>,
}

/// Short dynamics per ε, measured at the end of each run.
pub fn cmd_gibbs_sweep(cfg: &RunConfig, cases: &[GibbsCase]) -> Result<GibbsReport> {
    if cfg.scenario.dim() != 2 {
        bail!("gibbs sweep needs a 2D scenario");
    }
    let mut rows: Vec<GibbsRow> = Vec::new();
    let mut samples = Vec::new();
    for case in cases {
        let length = cfg.grid.lengths[0];
        let c = RunConfig {
            eps: case.eps,
            tau: case.tau,
            t_end: case.t_end,
            ..cfg.clone()
        }
        .with_box(length, case.n);
        let (flow, state) = build(&c)?;
        let summary = flow.run(&state, c.t_end, |_, _| Ok(ControlFlow::Continue(())))?;
        let s = measure(&flow, &summary.final_state)?;
        let coef = s.coef.context("no interface at the end of the run")?;
        rows.push(GibbsRow {
            config_hash: c.hash(),
            eps: case.eps,
            n: case.n,
            tau: case.tau,
            t_end: case.t_end,
            radius: s.radius.unwrap_or(f64::NAN),
            kappa_mean: s.kappa_mean.unwrap_or(f64::NAN),
            v_mean: s.v_mean.unwrap_or(f64::NAN),
            coef,
            correlation: s.correlation.unwrap_or(f64::NAN),
            cauchy_diff: rows.last().map(|p| (coef - p.coef).abs()),
            bulk_residual: s.bulk_residual.unwrap_or(f64::NAN),
            equipartition_defect: s.equipartition_defect,
            energy_density: s.energy_density.unwrap_or(f64::NAN),
            mean_drift: summary.max_mean_drift,
            steps: summary.steps,
        });
        samples.push(s);
    }
    let diffs: Vec<f64> = rows.iter().filter_map(|r| r.cauchy_diff).collect();
    let cauchy_decreasing = (diffs.len() >= 2).then(|| diffs.windows(2).all(|w| w[1] < w[0]));
    Ok(GibbsReport {
        rows,
        coef_modica_mortola: SurfaceTension::ModicaMortola.gibbs_coefficient(),
        coef_cw: SurfaceTension::WellIntegral.gibbs_coefficient(),
        cauchy_decreasing,
        samples,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            passed: value <= limit,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Upper bound on the worst relative error
/// `‖A^s e_k - λ_k^s e_k‖_∞ / λ_k^s` over the modes with every `k_i ≤ kmax`
/// (absolute for the constant mode).
///
/// `e_k` enters as a unit coefficient `δ_k`; with `c = A^s δ_k` computed by
/// the operator and `T⁻¹` the nodal evaluation,
/// `‖T⁻¹c - λ^s e_k‖_∞ ≤ ‖c - λ^s δ_k‖_1 + λ^s ‖T⁻¹δ_k - e_k‖_∞`
/// because every cosine product is bounded by one. The second term compares
/// the transform against the directly evaluated cosine product once per mode.
pub fn eigenfunction_error(op: &Operator, s: &[f64], kmax: usize) -> Result<f64> {
    let grid = op.grid();
    let dim = grid.dim();
    let counts = grid.counts().to_vec();
    if counts.iter().any(|&n| kmax >= n) {
        bail!("kmax = {kmax} exceeds the grid");
    }
    // per-axis cosine tables cos(π k x_j / L)
    let tables: Vec<Vec<Vec<f64>>> = (0..dim)
        .map(|a| {
            (0..=kmax)
                .map(|k| {
                    (0..counts[a])
                        .map(|j| (PI * k as f64 * grid.coordinate(a, j) / grid.lengths()[a]).cos())
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut worst = 0.0f64;
    let mut k = vec![0usize; dim];
    let mut coeffs = vec![0.0; grid.len()];
    let mut reference = Vec::with_capacity(grid.len());
    let mut scratch = Vec::with_capacity(grid.len());
    loop {
        let lam: f64 = (0..dim).map(|a| (PI * k[a] as f64 / grid.lengths()[a]).powi(2)).sum();
        let slot = grid.flat(&k);
        coeffs[slot] = 1.0;
        let e = Field::from_spectral(grid.clone(), coeffs.clone())?;
        coeffs[slot] = 0.0;

        let nodal = op.to_nodal(&e)?;
        // e_k at the nodes as a Kronecker product, last axis fastest
        reference.clear();
        reference.extend_from_slice(&tables[0][k[0]]);
        for a in 1..dim {
            scratch.clear();
            scratch.extend(
                reference
                    .iter()
                    .flat_map(|&r| tables[a][k[a]].iter().map(move |&t| r * t)),
            );
            std::mem::swap(&mut reference, &mut scratch);
        }
        let transform_err = nodal
            .values()
            .iter()
            .zip(&reference)
            .map(|(v, r)| (v - r).abs())
            .fold(0.0, f64::max);

        for &si in s {
            let image = op.apply_power(si, &e)?;
            let lam_s = if lam == 0.0 { 0.0 } else { lam.powf(si) };
            let coeff_err: f64 = image
                .values()
                .iter()
                .enumerate()
                .map(|(j, c)| if j == slot { (c - lam_s).abs() } else { c.abs() })
                .sum();
            let bound = coeff_err + lam_s * transform_err;
            worst = worst.max(if lam == 0.0 { bound } else { bound / lam_s });
        }
        // next multi-index
        let mut a = dim;
        loop {
            if a == 0 {
                return Ok(worst);
            }
            a -= 1;
            k[a] += 1;
            if k[a] <= kmax {
                break;
            }
            k[a] = 0;
        }
    }
}

/// Fast invariant suite on small grids.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let mut checks = Vec::new();

    for (dim, n) in [(1, 64), (2, 32)] {
        let op = Operator::new(Grid::uniform(dim, 1.0, n)?);
        let err = eigenfunction_error(&op, &[1.0, 1.6, 2.0], n / 4)?;
        let name = if dim == 1 {
            "spectral_exactness_1d"
        } else {
            "spectral_exactness_2d"
        };
        checks.push(Check::at_most(name, err, 1e-12));
    }

    // stationary state (u, σ) = (1, -1/2)
    let grid = Grid::uniform(2, 1.0, 16)?;
    let op = Operator::new(grid.clone());
    let settings = FlowSettings {
        tol_newton: cfg.tol_newton,
        ledger_tol: cfg.ledger_tol,
        ..FlowSettings::default()
    };
    let flow = Flow::new(op.clone(), settings);
    let phi = ScalarField::constant(grid.clone(), 0.5);
    let sigma = ScalarField::constant(grid.clone(), -0.5);
    let mut state = State::new(&op, &phi, &sigma, 0.05, 1e-3, 1.0)?;
    let start = state.clone();
    for _ in 0..100 {
        state = flow.step(&state)?.0;
    }
    let drift = op
        .to_nodal(&state.phi)?
        .max_abs_diff(&op.to_nodal(&start.phi)?)
        .max(op.to_nodal(&state.sigma)?.max_abs_diff(&op.to_nodal(&start.sigma)?));
    checks.push(Check::at_most("stationary_state", drift, 1e-9));

    // dissipation and mean conservation on a small circle
    let circle = RunConfig {
        scenario: Scenario::Circle2d,
        eps: 0.04,
        tau: 1e-4,
        t_end: 5e-3,
        tol_newton: cfg.tol_newton,
        ledger_tol: cfg.ledger_tol,
        ..RunConfig::default()
    }
    .with_box(1.0, 48);
    let (flow, state) = build(&circle)?;
    let mut worst_rise = f64::NEG_INFINITY;
    let summary = flow.run(&state, circle.t_end, |_, r| {
        let rise = (r.energy_after + r.diss_sigma + r.diss_phi - r.energy_before) / r.energy_before.abs().max(1.0);
        worst_rise = worst_rise.max(rise);
        Ok(ControlFlow::Continue(()))
    })?;
    checks.push(Check::at_most("energy_law", worst_rise, circle.ledger_tol));
    checks.push(Check::at_most(
        "cumulative_balance",
        -summary.balance_gap() / summary.energy_initial.abs(),
        1e-6,
    ));
    checks.push(Check::at_most("mean_conservation", summary.max_mean_drift, 1e-12));

    // Modica–Mortola constant of the optimal profile
    let line = RunConfig {
        scenario: Scenario::Profile1d,
        eps: 0.02,
        ..RunConfig::default()
    }
    .with_box(1.0, 1024);
    let grid = line.grid()?;
    let op = Operator::new(grid.clone());
    let u = optimal_profile(&level_function(&line, &grid)?, line.eps)?;
    let m = modica_mortola_energy(&op, &u, line.eps)?;
    let sigma_mm = SurfaceTension::ModicaMortola.value();
    checks.push(Check::at_most("profile_energy", (m / sigma_mm - 1.0).abs(), 0.01));

    Ok(VerifyReport { checks })
}
