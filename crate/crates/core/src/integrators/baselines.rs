use crate::error::Result;
use crate::objective::Objective;

use super::{momentum_factor, InertialState, StepInfo};

/// Classical Nesterov step with momentum `(k−1)/(k+2)`:
///
/// ```text
/// x^{k+1} = y^k − s ∇F(y^k)
/// y^{k+1} = x^{k+1} + k/(k+3)(x^{k+1} − x^k)
/// ```
///
/// `state.velocity` holds `y^k`; when absent it is taken as `x^k`.
pub fn nesterov_step<O: Objective + ?Sized>(
    obj: &O,
    s: f64,
    state: &mut InertialState,
) -> Result<StepInfo> {
    let y = state.velocity.take().unwrap_or_else(|| state.x_curr.clone());
    let gy = match obj.gradient(&y) {
        Ok(g) => g,
        Err(e) => {
            state.velocity = Some(y);
            return Err(e);
        }
    };
    let x_next: Vec<f64> = y.iter().zip(&gy).map(|(a, g)| a - s * g).collect();
    if let Err(e) = state.advance(obj, x_next) {
        state.velocity = Some(y);
        return Err(e);
    }
    let c = momentum_factor(state.k);
    let y_next = state
        .x_curr
        .iter()
        .zip(&state.x_prev)
        .map(|(a, b)| a + c * (a - b))
        .collect();
    state.velocity = Some(y_next);
    Ok(StepInfo::default())
}

/// Gradient descent `x^{k+1} = x^k − s ∇F(x^k)`.
pub fn gd_step<O: Objective + ?Sized>(
    obj: &O,
    s: f64,
    state: &mut InertialState,
) -> Result<StepInfo> {
    let x_next = state
        .x_curr
        .iter()
        .zip(&state.g_curr)
        .map(|(a, g)| a - s * g)
        .collect();
    state.advance(obj, x_next)?;
    Ok(StepInfo::default())
}
