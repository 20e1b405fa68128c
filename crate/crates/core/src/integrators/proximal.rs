//! Explicit extrapolation followed by a proximal map: Semi, FB and IPAHD.

use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::Objective;

use super::{prox, InertialState, SchemeParams, StepInfo};

/// Scalar interaction coefficient broadcast along `1`.
enum Interaction {
    /// `<∇F^k, x^k − x^{k−1}>`
    InnerProduct,
    /// `F^k − F^{k−1}`
    FunctionDifference,
}

/// Extrapolated point and prox parameter shared by Semi and FB:
///
/// ```text
/// y = x^k + k/(k+α)(x^k − x^{k−1}) + α/(k+α)·s·1 + kh/(k+α)·γ_k ∇F^k
/// μ = kh/(k+α)·(γ_k + β_k h)
/// ```
fn extrapolate(params: &SchemeParams, state: &InertialState, kind: Interaction) -> (Vec<f64>, f64) {
    let k = state.k as f64;
    let h = params.step;
    let a = params.alpha;
    let gamma = params.gamma_k(state.k);
    let beta = params.beta_k(state.k);
    let diff = linalg::sub(&state.x_curr, &state.x_prev);
    let s = match kind {
        Interaction::InnerProduct => linalg::dot(&state.g_curr, &diff),
        Interaction::FunctionDifference => state.f_curr - state.f_prev,
    };
    let c_mom = k / (k + a);
    let c_int = a / (k + a) * s;
    let c_grad = k * h / (k + a) * gamma;
    let y = (0..diff.len())
        .map(|i| state.x_curr[i] + c_mom * diff[i] + c_int + c_grad * state.g_curr[i])
        .collect();
    let mu = k * h / (k + a) * (gamma + beta * h);
    (y, mu)
}

fn require_k(state: &InertialState) -> Result<()> {
    if state.k == 0 {
        return Err(Error::Domain("proximal schemes require k ≥ 1".into()));
    }
    Ok(())
}

fn finish<O: Objective + ?Sized>(
    obj: &O,
    params: &SchemeParams,
    state: &mut InertialState,
    y: Vec<f64>,
    mu: f64,
) -> Result<StepInfo> {
    let x = prox(obj, mu, &y, &params.solver)?;
    let g = obj.gradient(&x)?;
    let residual = (0..x.len())
        .map(|i| x[i] + mu * g[i] - y[i])
        .map(|r| r * r)
        .sum::<f64>()
        .sqrt();
    let f = obj.value(&x)?;
    state.advance_with(x, f, g);
    Ok(StepInfo {
        inner_iterations: 1,
        residual,
        ..Default::default()
    })
}

/// Extrapolation of the Semi scheme (inner-product interaction).
pub(crate) fn semi_point(params: &SchemeParams, state: &InertialState) -> (Vec<f64>, f64) {
    extrapolate(params, state, Interaction::InnerProduct)
}

/// Extrapolation of the FB scheme (function-difference interaction).
pub(crate) fn fb_point(params: &SchemeParams, state: &InertialState) -> (Vec<f64>, f64) {
    extrapolate(params, state, Interaction::FunctionDifference)
}

pub fn semi_step<O: Objective + ?Sized>(
    obj: &O,
    params: &SchemeParams,
    state: &mut InertialState,
) -> Result<StepInfo> {
    require_k(state)?;
    let (y, mu) = semi_point(params, state);
    finish(obj, params, state, y, mu)
}

pub fn fb_step<O: Objective + ?Sized>(
    obj: &O,
    params: &SchemeParams,
    state: &mut InertialState,
) -> Result<StepInfo> {
    require_k(state)?;
    let (y, mu) = fb_point(params, state);
    finish(obj, params, state, y, mu)
}

/// Inertial proximal algorithm with Hessian damping, with `β^{IP}_k = γ_k`
/// and `b_k = β_k`:
///
/// ```text
/// μ = k/(k+α)(γ_k h + β_k h²)
/// y = x^k + (1 − α/(k+α))(x^k − x^{k−1}) + γ_k h (1 − α/(k+α)) ∇F^k
/// ```
pub fn ipahd_step<O: Objective + ?Sized>(
    obj: &O,
    params: &SchemeParams,
    state: &mut InertialState,
) -> Result<StepInfo> {
    require_k(state)?;
    let k = state.k as f64;
    let h = params.step;
    let a = params.alpha;
    let beta_ip = params.gamma_k(state.k);
    let b = params.beta_k(state.k);
    let m = 1.0 - a / (k + a);
    let mu = k / (k + a) * (beta_ip * h + h * h * b);
    let y = (0..state.dimension())
        .map(|i| {
            state.x_curr[i] + m * (state.x_curr[i] - state.x_prev[i]) + beta_ip * h * m * state.g_curr[i]
        })
        .collect();
    finish(obj, params, state, y, mu)
}
