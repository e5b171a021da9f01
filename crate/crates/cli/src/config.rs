//! Run configuration, JSON file format and up-front validation.

use std::path::PathBuf;

use fracflow::potential::{SurfaceTension, BOUNDARY_CLEARANCE};
use fracflow::Grid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// One tanh transition in the middle of an interval.
    #[serde(rename = "profile_1d")]
    Profile1d,
    /// Band `|x - L/2| < w` in the plane, walls to walls.
    #[serde(rename = "stripe_2d")]
    Stripe2d,
    /// Disc of radius `radius` in the centre of the box.
    #[serde(rename = "circle_2d")]
    Circle2d,
    /// Zero set of a seeded random low-mode field.
    #[serde(rename = "random_2d")]
    Random2d,
}

impl Scenario {
    pub fn dim(self) -> usize {
        match self {
            Self::Profile1d => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Profile1d => "profile_1d",
            Self::Stripe2d => "stripe_2d",
            Self::Circle2d => "circle_2d",
            Self::Random2d => "random_2d",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub lengths: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub grid: GridConfig,
    pub eps: f64,
    pub tau: f64,
    pub s: f64,
    pub t_end: f64,
    pub surface_tension: SurfaceTension,
    pub tol_newton: f64,
    pub ledger_tol: f64,
    pub mean_tol: f64,
    pub output_dir: PathBuf,
    /// Steps between snapshots; 0 disables them.
    pub snapshot_every: usize,
    /// Steps between diagnostics rows; 0 disables them.
    pub diagnostics_every: usize,
    pub seed: u64,
    /// Disc radius (`circle_2d`).
    pub radius: f64,
    /// Band half-width (`stripe_2d`).
    pub half_width: f64,
    /// Initial nutrient level.
    pub sigma0: f64,
    pub dealias: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Circle2d,
            grid: GridConfig {
                lengths: vec![1.0, 1.0],
                counts: vec![128, 128],
            },
            eps: 0.04,
            tau: 1e-4,
            s: 1.0,
            t_end: 0.01,
            surface_tension: SurfaceTension::ModicaMortola,
            tol_newton: 1e-10,
            ledger_tol: 1e-8,
            mean_tol: 1e-10,
            output_dir: PathBuf::from("out"),
            snapshot_every: 0,
            diagnostics_every: 10,
            seed: 0,
            radius: 0.25,
            half_width: 0.25,
            sigma0: -0.5,
            dealias: false,
        }
    }
}

/// One rejected field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigIssue {
    pub field: String,
    pub message: String,
}

/// Machine-readable validation outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigReport {
    pub valid: bool,
    pub issues: Vec<ConfigIssue>,
}

impl ConfigReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid configuration file: {0}")]
    Parse(String),
    #[error("configuration rejected ({} issue(s))", .0.issues.len())]
    Invalid(ConfigReport),
}

fn positive(issues: &mut Vec<ConfigIssue>, field: &str, x: f64) {
    if !(x.is_finite() && x > 0.0) {
        issues.push(ConfigIssue {
            field: field.into(),
            message: format!("must be positive and finite (got {x})"),
        });
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    /// Checks every field without allocating any simulation data.
    pub fn report(&self) -> ConfigReport {
        let mut issues = Vec::new();
        let mut issue = |field: &str, message: String| {
            issues.push(ConfigIssue {
                field: field.into(),
                message,
            })
        };
        let dim = self.scenario.dim();
        if self.grid.lengths.len() != dim || self.grid.counts.len() != dim {
            issue(
                "grid",
                format!(
                    "{} needs {dim} lengths and counts (got {} and {})",
                    self.scenario.name(),
                    self.grid.lengths.len(),
                    self.grid.counts.len()
                ),
            );
        }
        for (a, &l) in self.grid.lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                issue("grid.lengths", format!("axis {a}: length must be positive (got {l})"));
            }
        }
        for (a, &n) in self.grid.counts.iter().enumerate() {
            if n < 8 {
                issue("grid.counts", format!("axis {a}: at least 8 nodes required (got {n})"));
            }
        }
        if !(self.s.is_finite() && self.s >= 1.0) {
            issue("s", format!("fractional order must be at least 1 (got {})", self.s));
        }
        if self.snapshot_every > 0 && self.output_dir.as_os_str().is_empty() {
            issue("output_dir", "snapshots need an output directory".into());
        }
        let mut issues_pos = Vec::new();
        positive(&mut issues_pos, "eps", self.eps);
        positive(&mut issues_pos, "tau", self.tau);
        positive(&mut issues_pos, "t_end", self.t_end);
        positive(&mut issues_pos, "tol_newton", self.tol_newton);
        positive(&mut issues_pos, "ledger_tol", self.ledger_tol);
        positive(&mut issues_pos, "mean_tol", self.mean_tol);
        if !self.sigma0.is_finite() {
            issues_pos.push(ConfigIssue {
                field: "sigma0".into(),
                message: "must be finite".into(),
            });
        }
        issues.extend(issues_pos);

        let shape_ok = self.grid.lengths.len() == dim && self.grid.lengths.iter().all(|l| *l > 0.0);
        if shape_ok && self.eps > 0.0 {
            let clearance = BOUNDARY_CLEARANCE * self.eps;
            let short = self.grid.lengths.iter().copied().fold(f64::INFINITY, f64::min);
            match self.scenario {
                Scenario::Circle2d => {
                    if !(self.radius > 0.0) {
                        issues.push(ConfigIssue {
                            field: "radius".into(),
                            message: format!("must be positive (got {})", self.radius),
                        });
                    } else if short / 2.0 - self.radius < clearance {
                        issues.push(ConfigIssue {
                            field: "radius".into(),
                            message: format!(
                                "disc of radius {} leaves {:.4} to the wall, {clearance:.4} required",
                                self.radius,
                                short / 2.0 - self.radius
                            ),
                        });
                    }
                }
                Scenario::Stripe2d => {
                    let l = self.grid.lengths[0];
                    if !(self.half_width > 0.0) || l / 2.0 - self.half_width < clearance {
                        issues.push(ConfigIssue {
                            field: "half_width".into(),
                            message: format!(
                                "band half-width {} must be positive and leave {clearance:.4} to the wall",
                                self.half_width
                            ),
                        });
                    }
                }
                Scenario::Profile1d => {
                    if self.grid.lengths[0] / 2.0 < clearance {
                        issues.push(ConfigIssue {
                            field: "grid.lengths".into(),
                            message: format!("interval too short for eps = {}", self.eps),
                        });
                    }
                }
                Scenario::Random2d => {}
            }
        }
        ConfigReport {
            valid: issues.is_empty(),
            issues,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let report = self.report();
        if report.valid {
            Ok(())
        } else {
            Err(ConfigError::Invalid(report))
        }
    }

    pub fn grid(&self) -> fracflow::Result<Grid> {
        Grid::new(self.grid.lengths.clone(), self.grid.counts.clone())
    }

    /// Short SHA-256 of the canonical JSON form without the output
    /// directory; tags every output row.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
        }
        let canonical = serde_json::to_vec(&value).expect("config serializes");
        hex::encode(&Sha256::digest(&canonical)[..8])
    }

    /// Square box of side `length` with `n` nodes per axis, for the scenario's dimension.
    pub fn with_box(mut self, length: f64, n: usize) -> Self {
        let dim = self.scenario.dim();
        self.grid = GridConfig {
            lengths: vec![length; dim],
            counts: vec![n; dim],
        };
        self
    }
}
