//! Globalized semismooth Newton method with inexact conjugate gradient
//! directions and Armijo backtracking.
//!
//! Each iteration solves `V d = -g` by CG to the relative accuracy
//! `mu_j = min(eta0, eta1 * |g|)`, so the inner tolerance tightens as the
//! gradient shrinks and the local rate becomes quadratic.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NewtonError {
    #[error("conjugate gradient broke down with a non-finite value at iteration {0}")]
    CgBreakdown(usize),
    #[error("line search failed after {backtracks} backtracks at Newton iteration {iteration} (|grad| = {grad_norm:e})")]
    LineSearch { iteration: usize, backtracks: usize, grad_norm: f64 },
    #[error("non-finite gradient at Newton iteration {0}")]
    NonFinite(usize),
}

/// Smooth strongly convex subproblem with a semismooth gradient.
pub trait SubproblemOracle {
    fn dim(&self) -> usize;

    fn value(&self, w: &[f64]) -> f64;

    fn grad(&self, w: &[f64]) -> Vec<f64>;

    /// Rows selected by the generalized Jacobian at `w`.
    fn active_set(&self, w: &[f64]) -> Vec<usize>;

    /// Product of the generalized Hessian built from `active` with `h`.
    fn hvp(&self, active: &[usize], h: &[f64]) -> Vec<f64>;

    /// Gradient and active set together; oracles that share work between
    /// the two should override this.
    fn linearize(&self, w: &[f64]) -> (Vec<f64>, Vec<usize>) {
        (self.grad(w), self.active_set(w))
    }

    /// `value(w + alpha d) - value(w)`. Oracles with large values should
    /// override this with a cancellation-free difference.
    fn value_change(&self, w: &[f64], d: &[f64], alpha: f64) -> f64 {
        let trial: Vec<f64> = w.iter().zip(d).map(|(wi, di)| wi + alpha * di).collect();
        self.value(&trial) - self.value(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonParams {
    /// Backtracking factor.
    pub ls_rho: f64,
    /// Armijo sufficient-decrease constant.
    pub ls_c1: f64,
    pub max_backtracks: usize,
    pub cg_eta0: f64,
    pub cg_eta1: f64,
    pub cg_maxit: usize,
    pub max_iter: usize,
}

impl Default for NewtonParams {
    fn default() -> Self {
        Self {
            ls_rho: 0.5,
            ls_c1: 1e-4,
            max_backtracks: 50,
            cg_eta0: 0.9,
            cg_eta1: 0.1,
            cg_maxit: 200,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonStats {
    /// Accepted Newton steps.
    pub iterations: usize,
    pub cg_iterations_total: usize,
    pub cg_iterations: Vec<usize>,
    pub final_grad_norm: f64,
    /// `|grad|` at every visited iterate, including the last one.
    pub grad_norms: Vec<f64>,
    pub step_sizes: Vec<f64>,
    /// `|I(z)|` at every iterate where a Newton system was formed.
    pub active_set_sizes: Vec<usize>,
    /// Iterations where CG produced a non-descent direction and `-g` was used.
    pub steepest_fallbacks: usize,
    pub hit_iteration_cap: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Conjugate gradient for an SPD operator, starting from zero.
///
/// Stops once `|A x - rhs| <= tol_abs` or after `maxit` iterations. The
/// residual is recomputed from scratch every 50 iterations to limit drift.
/// A non-positive curvature `p^T A p` ends the iteration at the current
/// iterate.
pub fn cg_solve(
    hvp: impl Fn(&[f64]) -> Vec<f64>,
    rhs: &[f64],
    tol_abs: f64,
    maxit: usize,
) -> Result<(Vec<f64>, usize), NewtonError> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= tol_abs {
        return Ok((x, 0));
    }
    let mut p = r.clone();
    for it in 1..=maxit {
        let ap = hvp(&p);
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(NewtonError::CgBreakdown(it));
        }
        if pap <= 0.0 {
            return Ok((x, it - 1));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
        }
        if it % 50 == 0 {
            let ax = hvp(&x);
            for i in 0..n {
                r[i] = rhs[i] - ax[i];
            }
        } else {
            for i in 0..n {
                r[i] -= alpha * ap[i];
            }
        }
        let rr_new = dot(&r, &r);
        if !rr_new.is_finite() {
            return Err(NewtonError::CgBreakdown(it));
        }
        if rr_new.sqrt() <= tol_abs {
            return Ok((x, it));
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Ok((x, maxit))
}

/// Minimizes the oracle's function from `w0` until `|grad| <= tol` or the
/// iteration cap is reached (flagged in the stats, not an error).
pub fn newton_solve<O: SubproblemOracle + ?Sized>(
    oracle: &O,
    w0: &[f64],
    tol: f64,
    params: &NewtonParams,
) -> Result<(Vec<f64>, NewtonStats), NewtonError> {
    let mut w = w0.to_vec();
    let mut stats = NewtonStats::default();
    loop {
        let j = stats.iterations;
        let (g, active) = oracle.linearize(&w);
        let gnorm = norm(&g);
        if !gnorm.is_finite() {
            return Err(NewtonError::NonFinite(j));
        }
        stats.grad_norms.push(gnorm);
        stats.final_grad_norm = gnorm;
        if gnorm <= tol {
            break;
        }
        if j >= params.max_iter {
            stats.hit_iteration_cap = true;
            break;
        }
        stats.active_set_sizes.push(active.len());

        let mu = params.cg_eta0.min(params.cg_eta1 * gnorm);
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let (mut d, cg_its) = cg_solve(|h| oracle.hvp(&active, h), &rhs, mu * gnorm, params.cg_maxit)?;
        stats.cg_iterations.push(cg_its);
        stats.cg_iterations_total += cg_its;

        let mut slope = dot(&g, &d);
        if slope.is_nan() || slope >= 0.0 {
            d = rhs;
            slope = -gnorm * gnorm;
            stats.steepest_fallbacks += 1;
        }

        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=params.max_backtracks {
            if oracle.value_change(&w, &d, alpha) <= params.ls_c1 * alpha * slope {
                accepted = true;
                break;
            }
            alpha *= params.ls_rho;
        }
        if !accepted {
            return Err(NewtonError::LineSearch {
                iteration: j,
                backtracks: params.max_backtracks,
                grad_norm: gnorm,
            });
        }
        for (wi, di) in w.iter_mut().zip(&d) {
            *wi += alpha * di;
        }
        stats.step_sizes.push(alpha);
        stats.iterations += 1;
    }
    Ok((w, stats))
}
