use crate::diagnostics::delta_c;

use super::SchemeParams;

/// Per-step evaluation of the sufficient conditions for discrete energy
/// dissipation of the fully implicit scheme:
///
/// 1. `C_k < 0`
/// 2. `δ_{k+1} − δ_k + (α−1)C_k h − α C_k h √(2L) ≤ 0`
/// 3. `γ_k ≥ 0`
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub cond1_ok: Vec<bool>,
    /// `None` when no Lipschitz constant was supplied.
    pub cond2_ok: Option<Vec<bool>>,
    /// Condition 2 with `√(2Ld)` in place of `√(2L)`.
    pub cond2_dim_ok: Option<Vec<bool>>,
    /// Left-hand side of condition 2 per step.
    pub cond2_lhs: Option<Vec<f64>>,
    pub cond3_ok: Vec<bool>,
    pub warnings: Vec<String>,
}

impl ConditionReport {
    pub fn all_ok(&self) -> bool {
        self.cond1_ok.iter().all(|b| *b)
            && self.cond3_ok.iter().all(|b| *b)
            && self.cond2_ok.as_ref().map_or(true, |v| v.iter().all(|b| *b))
    }
}

/// Evaluates the three conditions for `k = 1..=horizon`.
pub fn check_theorem3_conditions(
    params: &SchemeParams,
    lipschitz: Option<f64>,
    horizon: usize,
    dim: usize,
) -> ConditionReport {
    let h = params.step;
    let a = params.alpha;
    let mut cond1 = Vec::with_capacity(horizon);
    let mut cond3 = Vec::with_capacity(horizon);
    let mut lhs = Vec::with_capacity(horizon);
    let mut lhs_dim = Vec::with_capacity(horizon);
    for k in 1..=horizon {
        let (c, d) = delta_c(params, k);
        let (_, d_next) = delta_c(params, k + 1);
        cond1.push(c < 0.0);
        cond3.push(params.gamma_k(k) >= 0.0);
        if let Some(l) = lipschitz {
            let base = d_next - d + (a - 1.0) * c * h;
            lhs.push(base - a * c * h * (2.0 * l).sqrt());
            lhs_dim.push(base - a * c * h * (2.0 * l * dim as f64).sqrt());
        }
    }
    let mut warnings = Vec::new();
    let (cond2_ok, cond2_dim_ok, cond2_lhs) = match lipschitz {
        Some(_) => (
            Some(lhs.iter().map(|v| *v <= 0.0).collect()),
            Some(lhs_dim.iter().map(|v| *v <= 0.0).collect()),
            Some(lhs),
        ),
        None => {
            warnings.push("no gradient Lipschitz constant: condition 2 skipped".to_string());
            (None, None, None)
        }
    };
    ConditionReport {
        cond1_ok: cond1,
        cond2_ok,
        cond2_dim_ok,
        cond2_lhs,
        cond3_ok: cond3,
        warnings,
    }
}
