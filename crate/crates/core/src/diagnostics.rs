//! Energies, rate estimates and stopping tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::{InertialState, SchemeParams};
use crate::linalg;

/// Gaps at or below this value end the usable part of a gap sequence.
pub const GAP_FLOOR: f64 = 1e-15;

/// Absolute slack of [`dissipation_check`].
pub const DISSIPATION_ABS_FLOOR: f64 = 1e-12;

/// `(C_k, δ_k)` with `C_k = γ_{k+1} + k(γ_{k+1} − γ_k) − β_k k h` and
/// `δ_k = −C_k h (k+1)`.
pub fn delta_c(params: &SchemeParams, k: usize) -> (f64, f64) {
    let h = params.step;
    let kf = k as f64;
    let g0 = params.gamma_k(k);
    let g1 = params.gamma_k(k + 1);
    let c = g1 + kf * (g1 - g0) - params.beta_k(k) * kf * h;
    (c, -c * h * (kf + 1.0))
}

/// Discrete energy of the implicit scheme at the current iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct FdEnergy {
    pub energy: f64,
    pub v: Vec<f64>,
    pub kinetic: f64,
    pub delta: f64,
    pub c: f64,
}

/// `E^k = δ_k(F^k − F*) + ½‖v_k‖²` with
/// `v_k = (α−1)(x^k − x*) − α(F^k − F*)1 + k(x^k − x^{k−1} + γ_k h ∇F^k)`.
pub fn energy_fd(params: &SchemeParams, state: &InertialState, x_star: &[f64], f_star: f64) -> Result<FdEnergy> {
    if x_star.len() != state.dimension() {
        return Err(Error::DimensionMismatch { expected: state.dimension(), got: x_star.len() });
    }
    let k = state.k as f64;
    let a = params.alpha;
    let gh = params.gamma_k(state.k) * params.step;
    let gap = state.f_curr - f_star;
    let v: Vec<f64> = (0..x_star.len())
        .map(|i| {
            (a - 1.0) * (state.x_curr[i] - x_star[i]) - a * gap
                + k * (state.x_curr[i] - state.x_prev[i] + gh * state.g_curr[i])
        })
        .collect();
    let kinetic = 0.5 * linalg::dot(&v, &v);
    let (c, delta) = delta_c(params, state.k);
    Ok(FdEnergy { energy: delta * gap + kinetic, v, kinetic, delta, c })
}

/// Data needed for one agent's mechanical energy.
#[derive(Clone, Copy, Debug)]
pub struct AgentSnapshot<'a> {
    pub mass: f64,
    /// Velocity estimate (`(x^k − x^{k−1})/h`, `V`, or `y`).
    pub velocity: Option<&'a [f64]>,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SwarmEnergy {
    /// `½ m_i‖v̂_i‖² + a_i F_i` with `a_i = m_i`.
    pub per_agent: Vec<f64>,
    pub total: f64,
    /// `a_i(F_i − F*) + ½ m_i‖v̂_i‖²`, when `F*` is known.
    pub per_agent_shifted: Option<Vec<f64>>,
    pub total_shifted: Option<f64>,
    /// Some agent had no velocity; its kinetic term was taken as 0.
    pub kinetic_absent: bool,
}

pub fn swarm_energy(agents: &[AgentSnapshot<'_>], f_star: Option<f64>) -> SwarmEnergy {
    let mut out = SwarmEnergy::default();
    let mut shifted = Vec::new();
    for a in agents {
        let kin = match a.velocity {
            Some(v) => 0.5 * a.mass * linalg::dot(v, v),
            None => {
                out.kinetic_absent = true;
                0.0
            }
        };
        out.per_agent.push(kin + a.mass * a.value);
        if let Some(fs) = f_star {
            shifted.push(a.mass * (a.value - fs) + kin);
        }
    }
    out.total = out.per_agent.iter().sum();
    if f_star.is_some() {
        out.total_shifted = Some(shifted.iter().sum());
        out.per_agent_shifted = Some(shifted);
    }
    out
}

/// Per-step exponents fitting `F^k − F* ≈ A δ_k^{−p}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub p_k: Vec<f64>,
    pub p_bar: f64,
    /// Number of retained exponents.
    pub iterations: usize,
    /// The gap sequence reached the floor and was truncated there.
    pub exact_convergence: bool,
}

/// Single exponent `log(gap_k/gap_{k+1}) / log(δ_{k+1}/δ_k)`, or `None` if
/// either gap is at the floor or the δ ratio is 1.
pub fn rate_exponent(gap: f64, gap_next: f64, delta: f64, delta_next: f64) -> Option<f64> {
    if !(gap > GAP_FLOOR && gap_next > GAP_FLOOR) {
        return None;
    }
    let ratio = delta_next / delta;
    if !(ratio > 0.0) || ratio == 1.0 || !ratio.is_finite() {
        return None;
    }
    let p = (gap / gap_next).ln() / ratio.ln();
    p.is_finite().then_some(p)
}

/// Average exponent over the usable prefix of the gap sequence.
///
/// The sequence is cut at the first gap at or below [`GAP_FLOOR`]; pairs
/// whose δ ratio is 1 are skipped.
pub fn rate_estimate(f_gaps: &[f64], deltas: &[f64]) -> Result<RateEstimate> {
    if f_gaps.len() != deltas.len() {
        return Err(Error::Estimate(format!(
            "{} gaps but {} deltas",
            f_gaps.len(),
            deltas.len()
        )));
    }
    let usable = f_gaps.iter().position(|g| !(*g > GAP_FLOOR)).unwrap_or(f_gaps.len());
    if usable < 2 {
        return Err(Error::Estimate(format!("only {usable} usable gap values")));
    }
    let p_k: Vec<f64> = (0..usable - 1)
        .filter_map(|k| rate_exponent(f_gaps[k], f_gaps[k + 1], deltas[k], deltas[k + 1]))
        .collect();
    if p_k.is_empty() {
        return Err(Error::Estimate("no step with a non-unit δ ratio".into()));
    }
    let p_bar = p_k.iter().sum::<f64>() / p_k.len() as f64;
    Ok(RateEstimate {
        iterations: p_k.len(),
        p_k,
        p_bar,
        exact_convergence: usable < f_gaps.len(),
    })
}

/// One step of an [`EnergyTrace`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub f_gap: f64,
    pub delta_k: f64,
    pub c_k: f64,
    pub v_k: Vec<f64>,
    pub energy_fd: f64,
    /// `½‖v_k‖²`
    pub kinetic: f64,
    pub agent_energies: Vec<f64>,
    pub total_swarm_energy: Option<f64>,
    /// Exponent between this step and the next.
    pub p_k: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub rows: Vec<TraceRow>,
}

impl EnergyTrace {
    /// Appends the implicit-scheme energy of a single trajectory at its
    /// current iterate.
    pub fn record(&mut self, params: &SchemeParams, state: &InertialState, x_star: &[f64], f_star: f64) -> Result<()> {
        let e = energy_fd(params, state, x_star, f_star)?;
        self.rows.push(TraceRow {
            k: state.k,
            f_gap: state.f_curr - f_star,
            delta_k: e.delta,
            c_k: e.c,
            v_k: e.v,
            energy_fd: e.energy,
            kinetic: e.kinetic,
            ..Default::default()
        });
        Ok(())
    }

    /// Fills `p_k` from consecutive rows.
    pub fn fill_rates(&mut self) {
        for i in 0..self.rows.len() {
            self.rows[i].p_k = self.rows.get(i + 1).and_then(|next| {
                let r = &self.rows[i];
                rate_exponent(r.f_gap, next.f_gap, r.delta_k, next.delta_k)
            });
        }
    }

    pub fn energies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.energy_fd).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DissipationReport {
    /// Steps `k+1` at which `E^{k+1}` rose above `E^k`.
    pub violations: Vec<usize>,
    /// Largest `E^{k+1} − E^k` over the checked pairs.
    pub max_rise: f64,
}

impl DissipationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Flags every step with `E^{k+1} > E^k(1 + rel_tol) + 10⁻¹²`, for pairs
/// with `k ≥ 2`.
pub fn dissipation_check(trace: &EnergyTrace, rel_tol: f64) -> DissipationReport {
    let ks: Vec<usize> = trace.rows.iter().map(|r| r.k).collect();
    dissipation_check_series(&ks, &trace.energies(), rel_tol, 2)
}

/// [`dissipation_check`] on raw `(k, E)` series, starting at `min_k`.
pub fn dissipation_check_series(ks: &[usize], energies: &[f64], rel_tol: f64, min_k: usize) -> DissipationReport {
    let mut rep = DissipationReport { violations: Vec::new(), max_rise: f64::NEG_INFINITY };
    for i in 0..energies.len().saturating_sub(1) {
        if ks[i] < min_k {
            continue;
        }
        let (e0, e1) = (energies[i], energies[i + 1]);
        rep.max_rise = rep.max_rise.max(e1 - e0);
        if e1 > e0 * (1.0 + rel_tol) + DISSIPATION_ABS_FLOOR || !e1.is_finite() {
            rep.violations.push(ks[i + 1]);
        }
    }
    rep
}

/// Per-agent energy rises between two swarm steps, keyed by agent id,
/// ignoring `exclude` (the current best agent, whose energy may grow).
pub fn agent_dissipation(
    prev: &[(usize, f64)],
    next: &[(usize, f64)],
    exclude: Option<usize>,
    rel_tol: f64,
) -> Vec<usize> {
    next.iter()
        .filter(|(id, _)| Some(*id) != exclude)
        .filter_map(|(id, e1)| {
            let (_, e0) = prev.iter().find(|(j, _)| j == id)?;
            (*e1 > e0 + rel_tol * e0.abs() + DISSIPATION_ABS_FLOOR).then_some(*id)
        })
        .collect()
}

/// Tolerances of the stopping and success tests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopCriteria {
    pub tol_f: f64,
    pub tol_x: f64,
    pub tol_success: f64,
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria { tol_f: 1e-6, tol_x: 1e-6, tol_success: 1e-4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StopStatus {
    pub stop: bool,
    pub success: bool,
}

impl StopCriteria {
    /// Both consecutive differences are below tolerance (and, in swarm mode,
    /// a single agent remains).
    pub fn should_stop(&self, f_prev: f64, f_next: f64, x_prev: &[f64], x_next: &[f64], alive: Option<usize>) -> bool {
        alive.map_or(true, |n| n == 1)
            && (f_next - f_prev).abs() <= self.tol_f
            && linalg::distance(x_prev, x_next) <= self.tol_x
    }

    pub fn is_success(&self, f_out: f64, f_star: f64) -> bool {
        (f_out - f_star).abs() <= self.tol_success
    }

    pub fn check(
        &self,
        f_prev: f64,
        f_next: f64,
        x_prev: &[f64],
        x_next: &[f64],
        f_star: f64,
        alive: Option<usize>,
    ) -> StopStatus {
        StopStatus {
            stop: self.should_stop(f_prev, f_next, x_prev, x_next, alive),
            success: self.is_success(f_next, f_star),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{Schedule, SchemeKind};
    use crate::objective::{Benchmark, ObjectiveSpec};

    #[test]
    fn default_delta_c() {
        for h in [1.0, 0.5, 1.0 / 128.0] {
            let p = SchemeParams::with_scheme(SchemeKind::Fd, h);
            for k in [1, 2, 17, 1000] {
                let (c, d) = delta_c(&p, k);
                assert!((c + 300.0).abs() < 1e-9);
                assert!((d - 300.0 * h * (k as f64 + 1.0)).abs() < 1e-9 * d);
            }
        }
    }

    #[test]
    fn zero_schedules_give_zero() {
        let mut p = SchemeParams::default();
        p.gamma = Schedule::Constant { value: 0.0 };
        p.beta = Schedule::Constant { value: 0.0 };
        assert_eq!(delta_c(&p, 3), (0.0, 0.0));
    }

    #[test]
    fn energy_hand_value() {
        let obj = ObjectiveSpec::standard(Benchmark::Sphere, 1).unwrap();
        let p = SchemeParams::default();
        let s = InertialState::new(&obj, 1, vec![1.0], vec![1.0]).unwrap();
        let e = energy_fd(&p, &s, &[0.0], 0.0).unwrap();
        assert_eq!(e.v, vec![399.0]);
        assert!((e.energy - (600.0 + 0.5 * 399.0 * 399.0)).abs() < 1e-9);
    }

    #[test]
    fn energy_zero_at_minimizer() {
        let obj = ObjectiveSpec::standard(Benchmark::SumSquares, 2).unwrap();
        let s = InertialState::new(&obj, 5, vec![0.0; 2], vec![0.0; 2]).unwrap();
        let e = energy_fd(&SchemeParams::default(), &s, &[0.0; 2], 0.0).unwrap();
        assert_eq!(e.energy, 0.0);
    }

    #[test]
    fn swarm_energy_hand_value_and_linearity() {
        let v = [2.0];
        let one = [AgentSnapshot { mass: 1.0, velocity: Some(&v), value: 3.0 }];
        assert_eq!(swarm_energy(&one, None).total, 5.0);
        let half = [AgentSnapshot { mass: 0.5, velocity: Some(&v), value: 3.0 }];
        assert_eq!(swarm_energy(&half, None).total, 2.5);
        let none = [AgentSnapshot { mass: 1.0, velocity: None, value: 3.0 }];
        assert!(swarm_energy(&none, Some(0.0)).kinetic_absent);
    }

    #[test]
    fn estimator_recovers_power_law() {
        let h = 0.5;
        let deltas: Vec<f64> = (1..40).map(|k| 300.0 * h * (k as f64 + 1.0)).collect();
        let gaps: Vec<f64> = deltas.iter().map(|d| d.powf(-2.0)).collect();
        let r = rate_estimate(&gaps, &deltas).unwrap();
        assert!((r.p_bar - 2.0).abs() < 1e-10);
        assert!(!r.exact_convergence);
    }

    #[test]
    fn constant_gaps_give_zero_rate() {
        let deltas = [1.0, 2.0, 3.0];
        let r = rate_estimate(&[0.5; 3], &deltas).unwrap();
        assert_eq!(r.p_bar, 0.0);
    }

    #[test]
    fn zero_gap_truncates() {
        let deltas = [1.0, 2.0, 4.0, 8.0];
        let r = rate_estimate(&[1.0, 0.25, 0.0, 0.0], &deltas).unwrap();
        assert_eq!(r.p_k, vec![2.0]);
        assert!(r.exact_convergence);
        assert!(rate_estimate(&[0.0, 0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn unit_delta_ratio_skipped() {
        let r = rate_estimate(&[1.0, 0.5, 0.125], &[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(r.p_k, vec![2.0]);
    }

    #[test]
    fn spike_is_flagged() {
        let ks: Vec<usize> = (1..10).collect();
        let mut e: Vec<f64> = ks.iter().map(|k| 100.0 / *k as f64).collect();
        e[4] = 1000.0; // k = 5
        let r = dissipation_check_series(&ks, &e, 1e-10, 2);
        assert_eq!(r.violations, vec![5]);
        let clean: Vec<f64> = ks.iter().map(|k| 1.0 / *k as f64).collect();
        assert!(dissipation_check_series(&ks, &clean, 1e-10, 2).is_clean());
    }

    #[test]
    fn stop_and_success() {
        let c = StopCriteria::default();
        assert_eq!(
            c.check(0.0, 0.0, &[0.0], &[0.0], 0.0, None),
            StopStatus { stop: true, success: true }
        );
        assert_eq!(
            c.check(0.5, 0.5, &[1.0], &[1.0], 0.0, None),
            StopStatus { stop: true, success: false }
        );
        assert!(!c.check(1.0, 0.5, &[1.0], &[0.7], 0.0, None).stop);
        assert!(!c.should_stop(0.0, 0.0, &[0.0], &[0.0], Some(2)));
    }

    #[test]
    fn agent_rises_exclude_best() {
        let prev = [(0, 1.0), (1, 2.0), (2, 3.0)];
        let next = [(0, 5.0), (1, 2.5), (2, 2.0)];
        assert_eq!(agent_dissipation(&prev, &next, Some(0), 0.0), vec![1]);
    }
}
