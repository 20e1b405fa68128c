//! Single-agent update rules.
//!
//! All schemes advance an [`InertialState`] holding `x^k`, `x^{k−1}` and
//! cached oracle values. The three new-dynamics schemes discretize
//!
//! ```text
//! x'' + (α/t) x' − (α/t) <∇F, x'> 1 + γ(t) ∇²F x' + β(t) ∇F = 0
//! ```
//!
//! * [`fd_step`] – fully implicit, solved by damped Newton;
//! * [`imexrb_step`] – reduced-basis implicit–explicit Euler on the
//!   first-order system `(x, V)`;
//! * [`semi_step`] / [`fb_step`] – explicit extrapolation followed by a
//!   proximal map;
//!
//! and [`ipahd_step`], [`nesterov_step`], [`gd_step`] are baselines.

mod baselines;
mod conditions;
mod fd;
mod imexrb;
mod prox;
mod proximal;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baselines::{gd_step, nesterov_step};
pub use conditions::{check_theorem3_conditions, ConditionReport};
pub use fd::{fd_residual, fd_step};
pub use imexrb::{
    imexrb_advance, imexrb_step, orthonormal_basis, rhs_first_order, FnField, ImexStepReport,
    InertialField, VectorField,
};
pub use prox::{prox, prox_closed_form, prox_iterative};
pub use proximal::{fb_step, ipahd_step, semi_step};

use crate::error::{Error, Result};
use crate::objective::Objective;

/// Scheme selector with canonical names `fd`, `imexrb`, `semi`, `fb`,
/// `ipahd`, `nesterov`, `gd`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Fd,
    Imexrb,
    Semi,
    Fb,
    Ipahd,
    Nesterov,
    Gd,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 7] = [
        SchemeKind::Fd,
        SchemeKind::Imexrb,
        SchemeKind::Semi,
        SchemeKind::Fb,
        SchemeKind::Ipahd,
        SchemeKind::Nesterov,
        SchemeKind::Gd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Fd => "fd",
            SchemeKind::Imexrb => "imexrb",
            SchemeKind::Semi => "semi",
            SchemeKind::Fb => "fb",
            SchemeKind::Ipahd => "ipahd",
            SchemeKind::Nesterov => "nesterov",
            SchemeKind::Gd => "gd",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

/// A time-dependent control parameter, evaluated at `t = k h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Schedule {
    Constant { value: f64 },
    /// `scale / t`
    InverseTime { scale: f64 },
    /// `scale · t^exponent`
    Power { scale: f64, exponent: f64 },
}

impl Schedule {
    pub fn at_time(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { value } => value,
            Schedule::InverseTime { scale } => scale / t,
            Schedule::Power { scale, exponent } => scale * t.powf(exponent),
        }
    }

    pub fn at_step(&self, k: usize, h: f64) -> f64 {
        self.at_time(k as f64 * h)
    }
}

/// Inner-solve settings shared by the implicit and proximal schemes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Residual tolerance, relative to the magnitude of the terms entering
    /// the residual (with a floor of one).
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub fixed_point_fallback: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-12,
            newton_max_iter: 100,
            fixed_point_fallback: true,
        }
    }
}

/// Reduced-basis IMEX settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImexConfig {
    /// Projection-residual tolerance ε. `None` couples it to the step as
    /// `ε = 10⁻³ Δt`.
    pub eps_stab: Option<f64>,
    pub max_inner: usize,
    /// Relative norm below which a candidate basis column is rejected.
    pub qr_floor: f64,
    /// Number of past states in the QR window. `None` means `min(2d, 20)`.
    pub window: Option<usize>,
}

impl Default for ImexConfig {
    fn default() -> Self {
        ImexConfig {
            eps_stab: None,
            max_inner: 10,
            qr_floor: 1e-10,
            window: None,
        }
    }
}

impl ImexConfig {
    pub fn eps_for_step(&self, dt: f64) -> f64 {
        self.eps_stab.unwrap_or(1e-3 * dt)
    }

    /// Window length for a first-order system of `state_dim = 2d` unknowns.
    pub fn window_for(&self, state_dim: usize) -> usize {
        self.window.unwrap_or_else(|| state_dim.clamp(1, 20))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(eps) = self.eps_stab {
            if !(eps > 0.0) {
                return Err(Error::Config("IMEX ε must be positive".into()));
            }
        }
        if self.max_inner == 0 {
            return Err(Error::Config("IMEX max_inner must be at least 1".into()));
        }
        if !(self.qr_floor > 0.0) {
            return Err(Error::Config("QR floor must be positive".into()));
        }
        if self.window == Some(0) {
            return Err(Error::Config("IMEX window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Control parameters of every scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeParams {
    pub scheme: SchemeKind,
    /// Vanishing-damping coefficient α ≥ 1.
    pub alpha: f64,
    /// Time step h (Δt for IMEX-RB).
    pub step: f64,
    /// Hessian-damping weight γ.
    pub gamma: Schedule,
    /// Gradient forcing β.
    pub beta: Schedule,
    /// Gradient step of the gradient-descent baseline; `h²` when unset.
    pub gd_step: Option<f64>,
    pub solver: SolverConfig,
    pub imex: ImexConfig,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            scheme: SchemeKind::Fd,
            alpha: 2.0,
            step: 1.0,
            gamma: Schedule::Constant { value: 200.0 },
            beta: Schedule::InverseTime { scale: 500.0 },
            gd_step: None,
            solver: SolverConfig::default(),
            imex: ImexConfig::default(),
        }
    }
}

impl SchemeParams {
    pub fn with_scheme(scheme: SchemeKind, step: f64) -> Self {
        SchemeParams {
            scheme,
            step,
            ..Default::default()
        }
    }

    pub fn gamma_k(&self, k: usize) -> f64 {
        self.gamma.at_step(k, self.step)
    }

    pub fn beta_k(&self, k: usize) -> f64 {
        self.beta.at_step(k, self.step)
    }

    /// Step `s` used by the Nesterov (always `h²`) and gradient-descent
    /// baselines.
    pub fn gradient_step(&self) -> f64 {
        match self.scheme {
            SchemeKind::Gd => self.gd_step.unwrap_or(self.step * self.step),
            _ => self.step * self.step,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 1.0) {
            return Err(Error::Config(format!("alpha must be ≥ 1, got {}", self.alpha)));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!("step must be > 0, got {}", self.step)));
        }
        if !(self.solver.newton_tol > 0.0) {
            return Err(Error::Config("newton_tol must be positive".into()));
        }
        if let Some(s) = self.gd_step {
            if !(s >= 0.0) {
                return Err(Error::Config("gradient step must be non-negative".into()));
            }
        }
        self.imex.validate()
    }
}

/// Per-step solver diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepInfo {
    pub inner_iterations: usize,
    pub residual: f64,
    /// IMEX-RB accepted its last inner iterate without meeting ε.
    pub tolerance_not_met: bool,
    pub used_fallback: bool,
}

/// State of one agent between steps.
#[derive(Clone, Debug, PartialEq)]
pub struct InertialState {
    /// Index of `x_curr`.
    pub k: usize,
    pub x_curr: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub f_curr: f64,
    pub f_prev: f64,
    pub g_curr: Vec<f64>,
    /// `V^k` for IMEX-RB, `y^k` for Nesterov.
    pub velocity: Option<Vec<f64>>,
    /// Recent first-order states `(x, V)`, newest first (IMEX-RB only).
    pub history: VecDeque<Vec<f64>>,
}

impl InertialState {
    pub fn new<O: Objective + ?Sized>(
        obj: &O,
        k: usize,
        x_prev: Vec<f64>,
        x_curr: Vec<f64>,
    ) -> Result<Self> {
        let f_prev = obj.value(&x_prev)?;
        let f_curr = obj.value(&x_curr)?;
        let g_curr = obj.gradient(&x_curr)?;
        Ok(InertialState {
            k,
            x_curr,
            x_prev,
            f_curr,
            f_prev,
            g_curr,
            velocity: None,
            history: VecDeque::new(),
        })
    }

    /// `x⁰` plus the standard start `x¹ = x⁰ − 10⁻⁴ ∇F(x⁰)`, at `k = 1`.
    pub fn from_start<O: Objective + ?Sized>(obj: &O, x0: &[f64]) -> Result<Self> {
        let g0 = obj.gradient(x0)?;
        let x1: Vec<f64> = x0.iter().zip(&g0).map(|(x, g)| x - 1e-4 * g).collect();
        Self::new(obj, 1, x0.to_vec(), x1)
    }

    /// Prepares scheme-specific fields (velocities, IMEX history).
    pub fn prime(&mut self, params: &SchemeParams) {
        match params.scheme {
            SchemeKind::Imexrb => {
                let v: Vec<f64> = self
                    .x_curr
                    .iter()
                    .zip(&self.x_prev)
                    .map(|(a, b)| (a - b) / params.step)
                    .collect();
                let mut u = self.x_curr.clone();
                u.extend_from_slice(&v);
                self.velocity = Some(v);
                self.history.clear();
                self.history.push_front(u);
            }
            SchemeKind::Nesterov => {
                let c = momentum_factor(self.k);
                let y: Vec<f64> = self
                    .x_curr
                    .iter()
                    .zip(&self.x_prev)
                    .map(|(a, b)| a + c * (a - b))
                    .collect();
                self.velocity = Some(y);
            }
            _ => {}
        }
    }

    /// Shifts `x_curr` into `x_prev` and installs a new current point.
    pub(crate) fn advance<O: Objective + ?Sized>(&mut self, obj: &O, x_next: Vec<f64>) -> Result<()> {
        let f_next = obj.value(&x_next)?;
        let g_next = obj.gradient(&x_next)?;
        self.advance_with(x_next, f_next, g_next);
        Ok(())
    }

    pub fn advance_with(&mut self, x_next: Vec<f64>, f_next: f64, g_next: Vec<f64>) {
        self.x_prev = std::mem::replace(&mut self.x_curr, x_next);
        self.f_prev = self.f_curr;
        self.f_curr = f_next;
        self.g_curr = g_next;
        self.k += 1;
    }

    pub fn dimension(&self) -> usize {
        self.x_curr.len()
    }
}

/// Nesterov momentum `(k − 1)/(k + 2)`.
pub(crate) fn momentum_factor(k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        (k as f64 - 1.0) / (k as f64 + 2.0)
    }
}

/// Advances `state` by one step of `params.scheme`.
pub fn step<O: Objective + ?Sized>(
    obj: &O,
    params: &SchemeParams,
    state: &mut InertialState,
) -> Result<StepInfo> {
    match params.scheme {
        SchemeKind::Fd => fd_step(obj, params, state),
        SchemeKind::Imexrb => imexrb_step(obj, params, state),
        SchemeKind::Semi => semi_step(obj, params, state),
        SchemeKind::Fb => fb_step(obj, params, state),
        SchemeKind::Ipahd => ipahd_step(obj, params, state),
        SchemeKind::Nesterov => nesterov_step(obj, params.gradient_step(), state),
        SchemeKind::Gd => gd_step(obj, params.gradient_step(), state),
    }
}

/// A Newton correction smaller than this, relative to `1 + ‖x‖`, is below the
/// rounding resolution of the iterate: the residual has reached its noise
/// floor and the inner solve is treated as converged.
pub(crate) const STAGNATION: f64 = 64.0 * f64::EPSILON;

pub(crate) fn stagnated(step: &[f64], x: &[f64]) -> bool {
    crate::linalg::norm(step) <= STAGNATION * (1.0 + crate::linalg::norm(x))
}

/// Dense Hessian assembled column by column from Hessian-vector products.
pub(crate) fn dense_hessian<O: Objective + ?Sized>(obj: &O, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = x.len();
    let mut h = vec![vec![0.0; d]; d];
    let mut e = vec![0.0; d];
    for j in 0..d {
        e[j] = 1.0;
        let col = obj.hess_vec(x, &e)?;
        for i in 0..d {
            h[i][j] = col[i];
        }
        e[j] = 0.0;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_names_round_trip() {
        for s in SchemeKind::ALL {
            assert_eq!(s.name().parse::<SchemeKind>().unwrap(), s);
        }
        assert!("adam".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn default_schedules() {
        let p = SchemeParams::default();
        assert_eq!(p.gamma_k(7), 200.0);
        assert_eq!(p.beta_k(2), 250.0);
        let p = SchemeParams::with_scheme(SchemeKind::Fd, 0.5);
        assert_eq!(p.beta_k(4), 250.0);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = SchemeParams::default();
        p.alpha = 0.5;
        assert!(p.validate().is_err());
        let mut p = SchemeParams::default();
        p.step = 0.0;
        assert!(p.validate().is_err());
        let mut p = SchemeParams::default();
        p.imex.max_inner = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn momentum_at_first_step_is_zero() {
        assert_eq!(momentum_factor(1), 0.0);
        assert!((momentum_factor(1_000_000) - 1.0).abs() < 1e-5);
    }
}
