//! Initial data for the scenario library.

use fracflow::potential::{optimal_profile, well_prepared_data};
use fracflow::spectral::ScalarField;
use fracflow::{Field, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, Scenario};

/// Highest mode index of the random scenario's level function.
const RANDOM_MODES: usize = 4;

/// Signed distance to the sharp interface (positive in `Ω⁺`), or the level
/// function of the random scenario.
pub fn level_function(cfg: &RunConfig, grid: &Grid) -> fracflow::Result<Field> {
    let l = grid.lengths().to_vec();
    match cfg.scenario {
        Scenario::Profile1d => ScalarField::from_fn(grid.clone(), |x| x[0] - l[0] / 2.0),
        Scenario::Stripe2d => ScalarField::from_fn(grid.clone(), |x| cfg.half_width - (x[0] - l[0] / 2.0).abs()),
        Scenario::Circle2d => ScalarField::from_fn(grid.clone(), |x| {
            cfg.radius - (x[0] - l[0] / 2.0).hypot(x[1] - l[1] / 2.0)
        }),
        Scenario::Random2d => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut modes = Vec::new();
            for i in 0..=RANDOM_MODES {
                for j in 0..=RANDOM_MODES {
                    if i + j == 0 {
                        continue;
                    }
                    let a: f64 = rng.gen_range(-1.0..1.0);
                    let k2 = (i * i + j * j) as f64;
                    modes.push((i as f64, j as f64, 0.3 * a / k2));
                }
            }
            let pi = std::f64::consts::PI;
            ScalarField::from_fn(grid.clone(), |x| {
                modes
                    .iter()
                    .map(|&(i, j, a)| a * (pi * i * x[0] / l[0]).cos() * (pi * j * x[1] / l[1]).cos())
                    .sum()
            })
        }
    }
}

/// `(φ₀, σ₀)` for the configured scenario.
pub fn initial_data(cfg: &RunConfig) -> fracflow::Result<(Field, Field)> {
    let grid = cfg.grid()?;
    let d = level_function(cfg, &grid)?;
    let sigma0 = ScalarField::constant(grid, cfg.sigma0);
    match cfg.scenario {
        // the random zero set may touch the walls, and the stripe meets the
        // y-walls at a right angle (its x clearance is checked by the config)
        Scenario::Random2d | Scenario::Stripe2d => {
            let u0 = optimal_profile(&d, cfg.eps)?;
            Ok((u0.add(&sigma0)?, sigma0))
        }
        _ => well_prepared_data(&d, &sigma0, cfg.eps),
    }
}

/// Centre of the box, where the circle scenario puts its disc.
pub fn centre(grid: &Grid) -> [f64; 2] {
    let l = grid.lengths();
    [l[0] / 2.0, l.get(1).copied().unwrap_or(0.0) / 2.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_builds() {
        for scenario in [
            Scenario::Profile1d,
            Scenario::Stripe2d,
            Scenario::Circle2d,
            Scenario::Random2d,
        ] {
            let cfg = RunConfig {
                scenario,
                ..RunConfig::default()
            }
            .with_box(1.0, 32);
            let (phi, sigma) = initial_data(&cfg).unwrap();
            let u = phi.sub(&sigma).unwrap();
            assert!(u.values().iter().all(|x| x.abs() <= 1.0));
            assert!(u.values().iter().any(|&x| x > 0.0) && u.values().iter().any(|&x| x < 0.0));
        }
    }

    #[test]
    fn random_data_is_seeded() {
        let cfg = RunConfig {
            scenario: Scenario::Random2d,
            ..RunConfig::default()
        }
        .with_box(1.0, 16);
        let a = initial_data(&cfg).unwrap();
        let b = initial_data(&cfg).unwrap();
        assert_eq!(a, b);
        let c = initial_data(&RunConfig { seed: 7, ..cfg }).unwrap();
        assert_ne!(a.0, c.0);
    }
}
