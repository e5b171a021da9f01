//! Damped Newton iteration with preconditioned conjugate gradients for the
//! strictly convex substeps. Everything lives in coefficient space, where the
//! Parseval-weighted dot product is the `L²` inner product.

use crate::error::{Error, Result};
use crate::real::Real;

/// A convex substep: residual, Jacobian action and preconditioner in
/// coefficient space.
pub(crate) trait NewtonProblem<T: Real> {
    /// Residual at `x`; also refreshes the Jacobian used by [`Self::jacobian`].
    fn residual(&mut self, x: &[T]) -> Vec<T>;
    fn jacobian(&self, p: &[T]) -> Vec<T>;
    fn precondition(&self, r: &[T]) -> Vec<T>;
    fn dot(&self, a: &[T], b: &[T]) -> T;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOptions<T> {
    pub target: T,
    pub max_iters: usize,
    pub max_cg_iters: usize,
    pub stage: &'static str,
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub residual: T,
}

const MAX_HALVINGS: usize = 30;

pub(crate) fn newton<T: Real, P: NewtonProblem<T>>(
    problem: &mut P,
    mut x: Vec<T>,
    opts: NewtonOptions<T>,
) -> Result<NewtonOutcome<T>> {
    let mut r = problem.residual(&x);
    let mut norm = problem.dot(&r, &r).sqrt();
    let initial = norm.max(T::min_positive_value());
    let mut iterations = 0;
    while norm > opts.target {
        if iterations == opts.max_iters || !norm.is_finite() {
            return Err(Error::NewtonFailed {
                stage: opts.stage,
                iterations,
                residual: norm.to_f64_lossy(),
                target: opts.target.to_f64_lossy(),
            });
        }
        iterations += 1;
        // forcing term: loose far from the root, never tighter than needed
        let eta = (norm / initial)
            .sqrt()
            .min(T::lit(0.1))
            .max(T::lit(0.05) * opts.target / norm);
        let neg: Vec<T> = r.iter().map(|&v| -v).collect();
        let dx = pcg(problem, &neg, eta, opts.max_cg_iters);

        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<T> = x.iter().zip(&dx).map(|(&a, &d)| a + alpha * d).collect();
            let r_trial = problem.residual(&trial);
            let n_trial = problem.dot(&r_trial, &r_trial).sqrt();
            if n_trial < norm {
                x = trial;
                r = r_trial;
                norm = n_trial;
                accepted = true;
                break;
            }
            alpha = alpha * T::lit(0.5);
        }
        if !accepted {
            // restore the Jacobian at the current iterate before giving up
            problem.residual(&x);
            return Err(Error::NewtonFailed {
                stage: opts.stage,
                iterations,
                residual: norm.to_f64_lossy(),
                target: opts.target.to_f64_lossy(),
            });
        }
    }
    Ok(NewtonOutcome {
        x,
        iterations,
        residual: norm,
    })
}

/// Preconditioned CG for `J x = b` to relative tolerance `rtol`.
pub(crate) fn pcg<T: Real, P: NewtonProblem<T>>(problem: &P, b: &[T], rtol: T, max_iters: usize) -> Vec<T> {
    let mut x = vec![T::zero(); b.len()];
    let mut r = b.to_vec();
    let b_norm = problem.dot(b, b).sqrt();
    if b_norm == T::zero() {
        return x;
    }
    let mut z = problem.precondition(&r);
    let mut p = z.clone();
    let mut rz = problem.dot(&r, &z);
    for _ in 0..max_iters {
        let jp = problem.jacobian(&p);
        let pjp = problem.dot(&p, &jp);
        if !(pjp > T::zero()) {
            break;
        }
        let alpha = rz / pjp;
        for i in 0..x.len() {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * jp[i];
        }
        if problem.dot(&r, &r).sqrt() <= rtol * b_norm {
            break;
        }
        z = problem.precondition(&r);
        let rz_new = problem.dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}
