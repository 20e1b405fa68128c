//! Proximal map `prox_{μF}(y) = argmin_x F(x) + ‖x − y‖²/(2μ)`.
//!
//! The returned point satisfies the stationarity condition
//! `x + μ∇F(x) = y`. On nonconvex objectives the solution is the local one
//! reached from `y`.

use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::Objective;

use super::{dense_hessian, stagnated, SolverConfig};

/// Closed form for separable quadratics with constant Hessian `diag(h_i)`
/// centered at `c`: `x_i = c_i + (y_i − c_i)/(1 + μ h_i)`.
pub fn prox_closed_form<O: Objective + ?Sized>(obj: &O, mu: f64, y: &[f64]) -> Option<Vec<f64>> {
    let diag = obj.quadratic_diagonal()?;
    let center = obj.quadratic_center()?;
    Some(
        y.iter()
            .zip(&diag)
            .zip(&center)
            .map(|((yi, hi), ci)| ci + (yi - ci) / (1.0 + mu * hi))
            .collect(),
    )
}

/// Proximal map. Uses the closed form when the objective is a separable
/// quadratic and the Newton iteration otherwise.
pub fn prox<O: Objective + ?Sized>(
    obj: &O,
    mu: f64,
    y: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    check_mu(mu)?;
    obj.check_dim(y)?;
    match prox_closed_form(obj, mu, y) {
        Some(x) => Ok(x),
        None => prox_iterative(obj, mu, y, cfg).map(|(x, _)| x),
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("prox parameter must be positive, got {mu}")));
    }
    Ok(())
}

struct Eval {
    x: Vec<f64>,
    g: Vec<f64>,
    r: Vec<f64>,
    rn: f64,
    phi: f64,
    scale: f64,
}

fn evaluate<O: Objective + ?Sized>(obj: &O, mu: f64, y: &[f64], x: Vec<f64>) -> Result<Eval> {
    let f = obj.value(&x)?;
    let g = obj.gradient(&x)?;
    let r: Vec<f64> = (0..x.len()).map(|i| x[i] + mu * g[i] - y[i]).collect();
    let rn = linalg::norm(&r);
    let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let phi = f + dist2 / (2.0 * mu);
    let scale = 1.0 + linalg::norm(&x) + mu * linalg::norm(&g) + linalg::norm(y);
    Ok(Eval { x, g, r, rn, phi, scale })
}

impl Eval {
    fn converged(&self, tol: f64) -> bool {
        self.rn <= tol * self.scale
    }
}

/// Newton iteration on `x + μ∇F(x) = y` started at `y`.
///
/// This is a descent method on the prox objective `φ`: where `I + μ∇²F` is
/// not safely positive definite it is shifted so that its smallest
/// eigenvalue is one, and steps must decrease either `φ` (Armijo) or the
/// residual norm.
/// Returns the point and the number of iterations used.
pub fn prox_iterative<O: Objective + ?Sized>(
    obj: &O,
    mu: f64,
    y: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, usize)> {
    check_mu(mu)?;
    obj.check_dim(y)?;
    let mut cur = evaluate(obj, mu, y, y.to_vec())?;
    let mut iterations = 0;
    let mut at_floor = false;

    while iterations < cfg.newton_max_iter && !cur.converged(cfg.newton_tol) {
        iterations += 1;
        let hess = dense_hessian(obj, &cur.x)?;
        let mut jac: Vec<Vec<f64>> = hess
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| mu * v + if i == j { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let jac_norm = jac.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let lmin = linalg::min_eigenvalue(&jac);
        if !(lmin > 1e-8 * jac_norm.max(1.0)) {
            let shift = 1.0 - lmin;
            for (i, row) in jac.iter_mut().enumerate() {
                row[i] += shift;
            }
        }
        let neg_r: Vec<f64> = cur.r.iter().map(|v| -v).collect();
        let Some(dir) = linalg::solve_spd(&jac, &neg_r) else {
            break;
        };
        if stagnated(&dir, &cur.x) {
            at_floor = true;
            break;
        }
        // ∇φ = r/μ, so the slope of φ along `dir` is <r, dir>/μ.
        let slope = linalg::dot(&cur.r, &dir) / mu;
        let mut t = 1.0;
        let mut next = None;
        while t > 1e-12 {
            let cand: Vec<f64> = cur.x.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            let e = evaluate(obj, mu, y, cand)?;
            let descent = e.phi <= cur.phi + 1e-4 * t * slope;
            // Near a solution φ stops resolving the decrease; the residual
            // still does.
            let residual_drop = e.rn < (1.0 - 1e-4 * t) * cur.rn;
            if e.rn.is_finite() && (descent || residual_drop || e.converged(cfg.newton_tol)) {
                next = Some(e);
                break;
            }
            t *= 0.5;
        }
        match next {
            Some(e) => cur = e,
            None => break,
        }
    }

    if !cur.converged(cfg.newton_tol) && !at_floor && cfg.fixed_point_fallback {
        // Gradient iteration on the prox objective with backtracking.
        for _ in 0..10 * cfg.newton_max_iter.max(1) {
            if cur.converged(cfg.newton_tol) {
                break;
            }
            iterations += 1;
            let dir: Vec<f64> = cur.r.iter().map(|v| -v).collect();
            let mut t = 1.0 / (1.0 + mu * linalg::norm_inf(&cur.g).max(1.0));
            let mut moved = false;
            while t > 1e-16 {
                let cand: Vec<f64> = cur.x.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
                let e = evaluate(obj, mu, y, cand)?;
                if e.phi < cur.phi || e.converged(cfg.newton_tol) {
                    cur = e;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
    }

    if !cur.converged(cfg.newton_tol) && !at_floor {
        return Err(Error::Solver {
            what: "proximal solve",
            iterations,
            residual: cur.rn,
        });
    }
    Ok((cur.x, iterations))
}
