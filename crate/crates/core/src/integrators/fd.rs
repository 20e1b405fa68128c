use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::Objective;

use super::{dense_hessian, stagnated, InertialState, SchemeParams, StepInfo};

/// Residual of the implicit step equation at candidate `z = x^{k+1}`:
///
/// ```text
/// k(z − 2x^k + x^{k−1}) + α(z − x^k) − α(F(z) − F^k)·1
///   + γ_k k h (∇F(z) − ∇F^k) + β_k k h² ∇F(z)
/// ```
///
/// Returns the residual together with the scale used for the relative
/// convergence test (sum of the norms of the individual terms).
pub fn fd_residual<O: Objective + ?Sized>(
    obj: &O,
    params: &SchemeParams,
    state: &InertialState,
    z: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let fz = obj.value(z)?;
    let gz = obj.gradient(z)?;
    Ok(residual_from(params, state, z, fz, &gz))
}

fn residual_from(
    params: &SchemeParams,
    state: &InertialState,
    z: &[f64],
    fz: f64,
    gz: &[f64],
) -> (Vec<f64>, f64) {
    let k = state.k as f64;
    let h = params.step;
    let a = params.alpha;
    let gamma_coef = params.gamma_k(state.k) * k * h;
    let beta_coef = params.beta_k(state.k) * k * h * h;
    let df = fz - state.f_curr;

    let mut r = Vec::with_capacity(z.len());
    for i in 0..z.len() {
        let xk = state.x_curr[i];
        let xm = state.x_prev[i];
        r.push(
            k * (z[i] - 2.0 * xk + xm) + a * (z[i] - xk) - a * df
                + gamma_coef * (gz[i] - state.g_curr[i])
                + beta_coef * gz[i],
        );
    }
    let sqrt_d = (z.len() as f64).sqrt();
    let scale = 1.0
        + (k + a) * linalg::norm(z)
        + (2.0 * k + a) * linalg::norm(&state.x_curr)
        + k * linalg::norm(&state.x_prev)
        + a * sqrt_d * (fz.abs() + state.f_curr.abs())
        + gamma_coef * (linalg::norm(gz) + linalg::norm(&state.g_curr))
        + beta_coef * linalg::norm(gz);
    (r, scale)
}

/// Jacobian `(k+α)I − α 1 ∇F(z)ᵀ + (γ_k k h + β_k k h²) ∇²F(z)`.
fn jacobian<O: Objective + ?Sized>(
    obj: &O,
    params: &SchemeParams,
    state: &InertialState,
    z: &[f64],
    gz: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let k = state.k as f64;
    let h = params.step;
    let a = params.alpha;
    let c = params.gamma_k(state.k) * k * h + params.beta_k(state.k) * k * h * h;
    let mut j = dense_hessian(obj, z)?;
    for (i, row) in j.iter_mut().enumerate() {
        for (l, v) in row.iter_mut().enumerate() {
            *v = c * *v - a * gz[l];
            if i == l {
                *v += k + a;
            }
        }
    }
    Ok(j)
}

/// One step of the fully implicit scheme.
///
/// Damped Newton from the predictor `2x^k − x^{k−1}`; if Newton stalls and
/// the fallback is enabled, monotone relaxation `z ← z − τ R(z)` starting
/// from `τ = h²/(k+α)` is tried.
pub fn fd_step<O: Objective + ?Sized>(
    obj: &O,
    params: &SchemeParams,
    state: &mut InertialState,
) -> Result<StepInfo> {
    if state.k == 0 {
        return Err(Error::Domain("fd step requires k ≥ 1".into()));
    }
    let cfg = &params.solver;
    let mut z: Vec<f64> = state
        .x_curr
        .iter()
        .zip(&state.x_prev)
        .map(|(a, b)| 2.0 * a - b)
        .collect();
    let mut fz = obj.value(&z)?;
    let mut gz = obj.gradient(&z)?;
    let (mut r, mut scale) = residual_from(params, state, &z, fz, &gz);
    let mut rn = linalg::norm(&r);

    if cfg.newton_max_iter == 0 {
        return Err(Error::Solver {
            what: "fd implicit solve",
            iterations: 0,
            residual: rn,
        });
    }

    let mut iterations = 0;
    let mut stalled = false;
    let mut at_floor = false;
    while iterations < cfg.newton_max_iter {
        if rn <= cfg.newton_tol * scale {
            break;
        }
        iterations += 1;
        let jac = jacobian(obj, params, state, &z, &gz)?;
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let Some(dz) = linalg::solve_dense(&jac, &neg_r) else {
            stalled = true;
            break;
        };
        if stagnated(&dz, &z) {
            at_floor = true;
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            let cand: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + t * b).collect();
            let fc = obj.value(&cand)?;
            let gc = obj.gradient(&cand)?;
            let (rc, sc) = residual_from(params, state, &cand, fc, &gc);
            let rcn = linalg::norm(&rc);
            if rcn.is_finite() && (rcn < (1.0 - 1e-4 * t) * rn || rcn <= cfg.newton_tol * sc) {
                z = cand;
                fz = fc;
                gz = gc;
                r = rc;
                rn = rcn;
                scale = sc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            stalled = true;
            break;
        }
    }

    let mut used_fallback = false;
    if rn > cfg.newton_tol * scale && stalled && cfg.fixed_point_fallback {
        used_fallback = true;
        // Relaxation, accepted only while it reduces the residual.
        let mut tau = params.step * params.step / (state.k as f64 + params.alpha);
        let mut budget = cfg.newton_max_iter;
        while budget > 0 && rn > cfg.newton_tol * scale && tau > 1e-16 {
            budget -= 1;
            let cand: Vec<f64> = z.iter().zip(&r).map(|(a, b)| a - tau * b).collect();
            let fc = obj.value(&cand)?;
            let gc = obj.gradient(&cand)?;
            let (rc, sc) = residual_from(params, state, &cand, fc, &gc);
            let rcn = linalg::norm(&rc);
            if !(rcn < rn) {
                tau *= 0.5;
                continue;
            }
            iterations += 1;
            z = cand;
            fz = fc;
            gz = gc;
            r = rc;
            rn = rcn;
            scale = sc;
        }
    }

    if !(rn <= cfg.newton_tol * scale) && !at_floor {
        return Err(Error::Solver {
            what: "fd implicit solve",
            iterations,
            residual: rn,
        });
    }
    state.advance_with(z, fz, gz);
    Ok(StepInfo {
        inner_iterations: iterations,
        residual: rn,
        tolerance_not_met: false,
        used_fallback,
    })
}
