//! Mass-transfer swarm driver.
//!
//! Every iteration runs three stages: communication (mass moves from worse
//! agents to the current best one, total mass stays 1), one inertial update
//! per agent, and merging of agents closer than `tol_merge`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{swarm_energy, AgentSnapshot, StopCriteria};
use crate::error::{Error, Result};
use crate::integrators::{self, InertialState, SchemeKind, SchemeParams};
use crate::linalg;
use crate::objective::{Objective, ObjectiveSpec};

/// One particle: a trajectory, a mass, and the bookkeeping needed by the
/// mass-coupled Nesterov update.
#[derive(Clone, Debug, PartialEq)]
pub struct Agent {
    pub id: usize,
    pub state: InertialState,
    pub mass: f64,
    /// Mass before the previous communication step.
    pub mass_prev: f64,
    /// Normalized loss at the previous communication step.
    pub eta_prev: f64,
}

impl Agent {
    pub fn value(&self) -> f64 {
        self.state.f_curr
    }

    pub fn position(&self) -> &[f64] {
        &self.state.x_curr
    }
}

/// Mass-transfer settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommParams {
    /// `φ_p(η) = η^p`
    pub p_exponent: f64,
    pub tol_mass: f64,
    pub tol_merge: f64,
    /// Forward-Euler step of the mass equation; the scheme step when unset.
    pub mass_dt: Option<f64>,
}

impl Default for CommParams {
    fn default() -> Self {
        CommParams {
            p_exponent: 1.0,
            tol_mass: 1e-6,
            tol_merge: 1e-3,
            mass_dt: None,
        }
    }
}

impl CommParams {
    pub fn phi(&self, eta: f64) -> f64 {
        if eta == 0.0 {
            0.0
        } else {
            eta.powf(self.p_exponent)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_exponent > 0.0) {
            return Err(Error::Config("p must be positive".into()));
        }
        if !(self.tol_mass > 0.0 && self.tol_merge > 0.0) {
            return Err(Error::Config("mass and merge tolerances must be positive".into()));
        }
        if let Some(dt) = self.mass_dt {
            if !(dt > 0.0) {
                return Err(Error::Config("mass step must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Settings of the mass-coupled Nesterov update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SBNesterovParams {
    /// Regularization in `a_i/(m_i + ε)`.
    pub eps_reg: f64,
    /// `Δt = √s`
    pub step: f64,
}

impl Default for SBNesterovParams {
    fn default() -> Self {
        SBNesterovParams { eps_reg: 1e-12, step: 0.1 }
    }
}

/// `η_i = (F_i − F_min)/(F_max − F_min)`, all zero when the range is empty.
pub fn eta(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) || !range.is_finite() {
        return vec![0.0; values.len()];
    }
    values.iter().map(|f| (f - lo) / range).collect()
}

/// Index of the smallest value; the first one wins ties.
fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if !(*v < values[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

/// What one communication step did. Vectors are aligned with the agents
/// that survived removal, in id order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CommReport {
    pub best_id: usize,
    pub removed: Vec<usize>,
    /// Agents whose mass was clamped because `dt·φ ≥ 1`.
    pub clamped: Vec<usize>,
    pub eta: Vec<f64>,
    pub mass_before: Vec<f64>,
}

/// Sum of the masses with the best agent added last, in the same order as
/// the conservation assignment, so that the result is exactly 1 right after
/// [`communicate`].
pub fn total_mass(agents: &[Agent], best_id: usize) -> f64 {
    let others: f64 = agents.iter().filter(|a| a.id != best_id).map(|a| a.mass).sum();
    match agents.iter().find(|a| a.id == best_id) {
        Some(b) => others + b.mass,
        None => others,
    }
}

/// Mass-transfer step.
///
/// Agents below `tol_mass` are removed first; every other agent except the
/// best decays as `m ← m − dt φ_p(η) m` and the best one receives
/// `1 − Σ_{others} m`.
pub fn communicate(agents: &mut Vec<Agent>, comm: &CommParams, dt: f64) -> Result<CommReport> {
    let mut report = CommReport::default();
    agents.retain(|a| {
        let keep = a.mass >= comm.tol_mass;
        if !keep {
            report.removed.push(a.id);
        }
        keep
    });
    if agents.is_empty() {
        return Err(Error::State("no agents left after mass removal".into()));
    }
    agents.sort_by_key(|a| a.id);
    let values: Vec<f64> = agents.iter().map(Agent::value).collect();
    let etas = eta(&values);
    let best = argmin(&values).expect("non-empty");
    report.best_id = agents[best].id;
    report.mass_before = agents.iter().map(|a| a.mass).collect();

    let mut others = 0.0;
    for (i, a) in agents.iter_mut().enumerate() {
        if i == best {
            continue;
        }
        let rate = dt * comm.phi(etas[i]);
        if rate >= 1.0 {
            a.mass = 0.5 * comm.tol_mass;
            report.clamped.push(a.id);
        } else {
            a.mass -= rate * a.mass;
        }
        others += a.mass;
    }
    agents[best].mass = 1.0 - others;
    report.eta = etas;
    Ok(report)
}

/// Removes agents that come within `tol_merge` of each other.
///
/// Pairs are visited in ascending `(i, j)` order; the agent with the larger
/// value (the larger id on ties) is dropped and its mass added to the other.
/// Returns the ids of removed agents.
pub fn merge(agents: &mut Vec<Agent>, comm: &CommParams) -> Vec<usize> {
    agents.sort_by_key(|a| a.id);
    let n = agents.len();
    let mut gone = vec![false; n];
    for i in 0..n {
        if gone[i] {
            continue;
        }
        for j in i + 1..n {
            if gone[j] {
                continue;
            }
            if linalg::distance(agents[i].position(), agents[j].position()) >= comm.tol_merge {
                continue;
            }
            let (keep, drop) = if agents[j].value() < agents[i].value() { (j, i) } else { (i, j) };
            let m = agents[drop].mass;
            agents[keep].mass += m;
            gone[drop] = true;
            if drop == i {
                break;
            }
        }
    }
    let mut removed = Vec::new();
    let mut k = 0;
    agents.retain(|a| {
        let keep = !gone[k];
        if !keep {
            removed.push(a.id);
        }
        k += 1;
        keep
    });
    removed
}

/// Outcome of [`sb_nesterov_update`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NesterovReport {
    /// Agents with `R_i − φ_p/2 < 0` this step.
    pub q_negative: Vec<usize>,
}

/// Mass-coupled Nesterov update of every agent after a [`communicate`]
/// call described by `comm_report`.
///
/// With `m^n` the masses before communication and `m^{n+1}` after:
///
/// ```text
/// R_i  = 3/(nΔt) + ½ φ_p(η_i^{n−1}) m_i^{n−1}/m_i^n
/// y_i ← y_i + Δt[(−R_i + ½ φ_p(η_i^n)) y_i − m_i^n/(m_i^n + ε) ∇F(x_i)]
/// x_i ← x_i + Δt y_i
/// ```
///
/// For the best agent the `φ_p` terms are replaced by the rates implied by
/// the conservation assignment.
pub fn sb_nesterov_update<O: Objective + ?Sized>(
    obj: &O,
    agents: &mut [Agent],
    comm_report: &CommReport,
    comm: &CommParams,
    params: &SBNesterovParams,
) -> Result<NesterovReport> {
    let dt = params.step;
    let mut report = NesterovReport::default();
    if agents.len() != comm_report.mass_before.len() {
        return Err(Error::State("agents changed since communication".into()));
    }
    let best = comm_report.best_id;
    let others_before: f64 = agents
        .iter()
        .zip(&comm_report.mass_before)
        .filter(|(a, _)| a.id != best)
        .map(|(_, m)| m)
        .sum();
    let others_after: f64 = agents.iter().filter(|a| a.id != best).map(|a| a.mass).sum();

    for (i, a) in agents.iter_mut().enumerate() {
        let n = a.state.k;
        if n == 0 {
            return Err(Error::Domain("step counter must be ≥ 1".into()));
        }
        let m_n = comm_report.mass_before[i];
        let eta_n = comm_report.eta[i];
        let base = 3.0 / (n as f64 * dt);
        let (r, slot) = if a.id == best {
            let r = base + 0.5 * ((1.0 - others_before) - a.mass_prev) / m_n;
            let slot = 0.5 * (1.0 - others_after - m_n) / m_n;
            (r, slot)
        } else {
            let r = base + 0.5 * comm.phi(a.eta_prev) * a.mass_prev / m_n;
            (r, 0.5 * comm.phi(eta_n))
        };
        if r - slot < 0.0 {
            report.q_negative.push(a.id);
        }
        let coef = m_n / (m_n + params.eps_reg);
        let y = a.state.velocity.take().unwrap_or_else(|| vec![0.0; a.state.dimension()]);
        let g = &a.state.g_curr;
        let y_next: Vec<f64> = (0..y.len())
            .map(|j| y[j] + dt * ((-r + slot) * y[j] - coef * g[j]))
            .collect();
        let x_next: Vec<f64> = a.state.x_curr.iter().zip(&y_next).map(|(x, v)| x + dt * v).collect();
        let f = obj.value(&x_next)?;
        let gn = obj.gradient(&x_next)?;
        a.state.advance_with(x_next, f, gn);
        a.state.velocity = Some(y_next);
        a.mass_prev = m_n;
        a.eta_prev = eta_n;
    }
    Ok(report)
}

/// Initial agent positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwarmInit {
    /// `n` agents drawn uniformly from the objective's box.
    UniformBox { agents: usize },
    /// Explicit positions.
    Points(Vec<Vec<f64>>),
}

/// Uniform samples in `bounds` by per-coordinate inverse transform.
pub fn sample_box(rng: &mut ChaCha8Rng, bounds: &[(f64, f64)], n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            bounds
                .iter()
                .map(|(lo, hi)| {
                    let u: f64 = rng.gen();
                    (lo + u * (hi - lo)).clamp(*lo, *hi)
                })
                .collect()
        })
        .collect()
}

/// Why a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    SolverFailure,
    Diverged,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
            Termination::SolverFailure => "solver-failure",
            Termination::Diverged => "diverged",
        }
    }
}

/// Per-iteration swarm summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmTraceRow {
    pub n: usize,
    pub alive: usize,
    pub best_value: f64,
    pub total_energy: f64,
    pub total_energy_shifted: f64,
}

/// Counters of soft solver events over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverFlags {
    pub mass_clamped: usize,
    pub tolerance_not_met: usize,
    pub fallback_used: usize,
    pub q_negative: usize,
}

/// Result of one swarm run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub f_gap: f64,
    /// Final value of the iteration counter (the loop starts at 2).
    pub iterations: usize,
    pub success: bool,
    pub termination: Termination,
    pub error: Option<String>,
    pub flags: SolverFlags,
    pub trace: Vec<SwarmTraceRow>,
    pub wall_seconds: f64,
}

/// Everything [`sbim_run`] needs besides the objective.
#[derive(Clone, Debug, PartialEq)]
pub struct SwarmConfig {
    pub params: SchemeParams,
    pub comm: CommParams,
    pub nesterov: SBNesterovParams,
    pub stop: StopCriteria,
    pub init: SwarmInit,
    pub max_iterations: usize,
    pub record_trace: bool,
}

impl SwarmConfig {
    pub fn new(params: SchemeParams, agents: usize) -> Self {
        SwarmConfig {
            nesterov: SBNesterovParams { step: params.step, ..Default::default() },
            params,
            comm: CommParams::default(),
            stop: StopCriteria::default(),
            init: SwarmInit::UniformBox { agents },
            max_iterations: 10_000,
            record_trace: false,
        }
    }
}

/// A population of agents.
#[derive(Clone, Debug, PartialEq)]
pub struct Swarm {
    pub agents: Vec<Agent>,
    /// Best agent of the last communication step.
    pub best_id: usize,
}

impl Swarm {
    /// Agents at `x⁰` with `x¹ = x⁰ − 10⁻⁴∇F(x⁰)` and equal masses.
    pub fn new<O: Objective + ?Sized>(obj: &O, params: &SchemeParams, points: &[Vec<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("a swarm needs at least one agent".into()));
        }
        let m = 1.0 / points.len() as f64;
        let mut agents = Vec::with_capacity(points.len());
        for (id, x0) in points.iter().enumerate() {
            let mut state = InertialState::from_start(obj, x0)?;
            if params.scheme == SchemeKind::Nesterov {
                let y = state
                    .x_curr
                    .iter()
                    .zip(&state.x_prev)
                    .map(|(a, b)| (a - b) / params.step)
                    .collect();
                state.velocity = Some(y);
            } else {
                state.prime(params);
            }
            agents.push(Agent { id, state, mass: m, mass_prev: m, eta_prev: 0.0 });
        }
        let values: Vec<f64> = agents.iter().map(Agent::value).collect();
        for (a, e) in agents.iter_mut().zip(eta(&values)) {
            a.eta_prev = e;
        }
        let best_id = agents[argmin(&values).expect("non-empty")].id;
        Ok(Swarm { agents, best_id })
    }

    pub fn total_mass(&self) -> f64 {
        total_mass(&self.agents, self.best_id)
    }

    pub fn best(&self) -> &Agent {
        let values: Vec<f64> = self.agents.iter().map(Agent::value).collect();
        &self.agents[argmin(&values).expect("non-empty swarm")]
    }

    fn energy(&self, params: &SchemeParams, f_star: f64) -> (f64, f64) {
        let vels: Vec<Vec<f64>> = self
            .agents
            .iter()
            .map(|a| match (&a.state.velocity, params.scheme) {
                (Some(v), SchemeKind::Nesterov) => v.clone(),
                (Some(v), SchemeKind::Imexrb) => v[..a.state.dimension()].to_vec(),
                _ => a
                    .state
                    .x_curr
                    .iter()
                    .zip(&a.state.x_prev)
                    .map(|(x, y)| (x - y) / params.step)
                    .collect(),
            })
            .collect();
        let snaps: Vec<AgentSnapshot<'_>> = self
            .agents
            .iter()
            .zip(&vels)
            .map(|(a, v)| AgentSnapshot { mass: a.mass, velocity: Some(v), value: a.value() })
            .collect();
        let e = swarm_energy(&snaps, Some(f_star));
        (e.total, e.total_shifted.unwrap_or(f64::NAN))
    }
}

/// Runs the communicate → update → merge loop until a single agent remains
/// and its last step moved less than the stopping tolerances.
///
/// Solver errors end the run early with [`Termination::SolverFailure`];
/// they are reported in the outcome rather than returned.
pub fn sbim_run(spec: &ObjectiveSpec, cfg: &SwarmConfig, seed: u64) -> Result<RunOutcome> {
    cfg.params.validate()?;
    cfg.comm.validate()?;
    let start = Instant::now();
    let points = match &cfg.init {
        SwarmInit::UniformBox { agents } => {
            if *agents == 0 {
                return Err(Error::Config("a swarm needs at least one agent".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_box(&mut rng, &spec.bounds, *agents)
        }
        SwarmInit::Points(p) => p.clone(),
    };
    let mut swarm = Swarm::new(spec, &cfg.params, &points)?;
    let dt_mass = cfg.comm.mass_dt.unwrap_or(cfg.params.step);
    let mut flags = SolverFlags::default();
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut error = None;
    let mut n = 1;

    while n < cfg.max_iterations.max(2) {
        n += 1;
        let rep = communicate(&mut swarm.agents, &cfg.comm, dt_mass)?;
        swarm.best_id = rep.best_id;
        flags.mass_clamped += rep.clamped.len();

        let step_result = if cfg.params.scheme == SchemeKind::Nesterov {
            sb_nesterov_update(spec, &mut swarm.agents, &rep, &cfg.comm, &cfg.nesterov).map(|r| {
                flags.q_negative += r.q_negative.len();
            })
        } else {
            swarm.agents.iter_mut().try_for_each(|a| {
                let info = integrators::step(spec, &cfg.params, &mut a.state)?;
                flags.tolerance_not_met += info.tolerance_not_met as usize;
                flags.fallback_used += info.used_fallback as usize;
                Ok(())
            })
        };
        if let Err(e) = step_result {
            termination = Termination::SolverFailure;
            error = Some(e.to_string());
            break;
        }
        if swarm.agents.iter().any(|a| !a.value().is_finite()) {
            termination = Termination::Diverged;
            break;
        }
        merge(&mut swarm.agents, &cfg.comm);

        if cfg.record_trace {
            let (e, es) = swarm.energy(&cfg.params, spec.min_value);
            trace.push(SwarmTraceRow {
                n,
                alive: swarm.agents.len(),
                best_value: swarm.best().value(),
                total_energy: e,
                total_energy_shifted: es,
            });
        }
        if swarm.agents.len() == 1 {
            let s = &swarm.agents[0].state;
            if cfg.stop.should_stop(s.f_prev, s.f_curr, &s.x_prev, &s.x_curr, Some(1)) {
                termination = Termination::Converged;
                break;
            }
        }
    }

    let best = swarm.best();
    let best_value = best.value();
    Ok(RunOutcome {
        best_x: best.position().to_vec(),
        best_value,
        f_gap: best_value - spec.min_value,
        iterations: n,
        success: termination != Termination::SolverFailure
            && cfg.stop.is_success(best_value, spec.min_value),
        termination,
        error,
        flags,
        trace,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Benchmark;

    fn agent(obj: &ObjectiveSpec, id: usize, x: f64, mass: f64) -> Agent {
        let state = InertialState::new(obj, 1, vec![x], vec![x]).unwrap();
        Agent { id, state, mass, mass_prev: mass, eta_prev: 0.0 }
    }

    fn sphere() -> ObjectiveSpec {
        ObjectiveSpec::standard(Benchmark::Sphere, 1).unwrap()
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(&[1.0, 1.0, 1.0]), vec![0.0; 3]);
        assert_eq!(eta(&[0.0, 5.0, 10.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(eta(&[7.0]), vec![0.0]);
    }

    #[test]
    fn two_agent_transfer() {
        // F = (0, 1) at x = (0, 1)
        let obj = sphere();
        let mut a = vec![agent(&obj, 0, 0.0, 0.5), agent(&obj, 1, 1.0, 0.5)];
        let rep = communicate(&mut a, &CommParams::default(), 0.1).unwrap();
        assert_eq!(rep.best_id, 0);
        assert!((a[1].mass - 0.45).abs() < 1e-15);
        assert!((a[0].mass - 0.55).abs() < 1e-15);
        assert_eq!(total_mass(&a, 0), 1.0);

        let mut a = vec![agent(&obj, 0, 0.0, 0.5), agent(&obj, 1, 1.0, 0.5)];
        let rep = communicate(&mut a, &CommParams::default(), 1.0).unwrap();
        assert_eq!(rep.clamped, vec![1]);
        assert_eq!(a[1].mass, 0.5e-6);
        assert_eq!(total_mass(&a, 0), 1.0);
    }

    #[test]
    fn equal_values_keep_masses() {
        let obj = sphere();
        let mut a = vec![agent(&obj, 0, 1.0, 0.25), agent(&obj, 1, -1.0, 0.75)];
        communicate(&mut a, &CommParams::default(), 1.0).unwrap();
        assert_eq!(a[0].mass, 0.25);
        assert_eq!(a[1].mass, 0.75);
    }

    #[test]
    fn light_agents_are_removed() {
        let obj = sphere();
        let mut a = vec![agent(&obj, 0, 0.0, 1.0 - 1e-7), agent(&obj, 1, 1.0, 1e-7)];
        let rep = communicate(&mut a, &CommParams::default(), 0.1).unwrap();
        assert_eq!(rep.removed, vec![1]);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].mass, 1.0);
    }

    #[test]
    fn empty_swarm_is_an_error() {
        let mut a: Vec<Agent> = Vec::new();
        assert!(communicate(&mut a, &CommParams::default(), 0.1).is_err());
    }

    #[test]
    fn merge_coincident_pair() {
        let obj = sphere();
        let mut a = vec![agent(&obj, 0, 0.5, 0.3), agent(&obj, 1, 0.5, 0.7)];
        merge(&mut a, &CommParams::default());
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].id, 0);
        assert_eq!(a[0].mass, 1.0);
    }

    #[test]
    fn merge_keeps_lower_value() {
        let obj = sphere();
        let mut a = vec![agent(&obj, 0, 0.5, 0.3), agent(&obj, 1, 0.4996, 0.7)];
        merge(&mut a, &CommParams::default());
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].id, 1);
        assert_eq!(a[0].position(), &[0.4996]);
    }

    #[test]
    fn merge_cascade() {
        let obj = sphere();
        let mut a = vec![
            agent(&obj, 0, 0.3, 0.2),
            agent(&obj, 1, 0.3002, 0.3),
            agent(&obj, 2, 0.2999, 0.5),
        ];
        let removed = merge(&mut a, &CommParams::default());
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].id, 2);
        assert_eq!(removed, vec![0, 1]);
        assert!((a[0].mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn far_agents_do_not_merge() {
        let obj = sphere();
        let mut a = vec![agent(&obj, 0, 0.0, 0.5), agent(&obj, 1, 1.0, 0.5)];
        assert!(merge(&mut a, &CommParams::default()).is_empty());
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn gd_single_agent_run() {
        let obj = sphere();
        let mut p = SchemeParams::with_scheme(SchemeKind::Gd, 1.0);
        p.gd_step = Some(0.5);
        let mut cfg = SwarmConfig::new(p, 1);
        cfg.init = SwarmInit::Points(vec![vec![3.0]]);
        let out = sbim_run(&obj, &cfg, 0).unwrap();
        assert_eq!(out.best_x, vec![0.0]);
        assert!(out.iterations <= 3);
        assert!(out.success);
    }

    #[test]
    fn swarm_at_minimizer_stops_at_two() {
        let obj = ObjectiveSpec::standard(Benchmark::Rastrigin, 1).unwrap();
        let p = SchemeParams::with_scheme(SchemeKind::Fb, 1.0);
        let mut cfg = SwarmConfig::new(p, 10);
        cfg.init = SwarmInit::Points(vec![vec![0.0]; 10]);
        let out = sbim_run(&obj, &cfg, 0).unwrap();
        assert_eq!(out.iterations, 2);
        assert!(out.success);
        assert_eq!(out.termination, Termination::Converged);
    }

    #[test]
    fn stationary_nesterov_agent_stays() {
        let obj = sphere();
        let mut a = vec![agent(&obj, 0, 0.0, 1.0)];
        a[0].state.velocity = Some(vec![0.0]);
        let rep = communicate(&mut a, &CommParams::default(), 0.1).unwrap();
        sb_nesterov_update(&obj, &mut a, &rep, &CommParams::default(), &SBNesterovParams::default()).unwrap();
        assert_eq!(a[0].position(), &[0.0]);
    }

    #[test]
    fn runs_are_deterministic() {
        let obj = ObjectiveSpec::standard(Benchmark::Rastrigin, 2).unwrap();
        let p = SchemeParams::with_scheme(SchemeKind::Fd, 1.0);
        let mut cfg = SwarmConfig::new(p, 5);
        cfg.record_trace = true;
        let a = sbim_run(&obj, &cfg, 11).unwrap();
        let b = sbim_run(&obj, &cfg, 11).unwrap();
        assert_eq!(a.best_x, b.best_x);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.iterations, b.iterations);
    }
}
