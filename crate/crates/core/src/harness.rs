//! Seeded experiment drivers and result export.
//!
//! Per-trial seeds are derived as `splitmix64(master_seed ⊕ splitmix64(t))`
//! (see [`trial_seed`]); agent positions are then drawn from a ChaCha8
//! stream seeded with that value. Both algorithms are fixed, so a
//! `(master_seed, t)` pair always yields the same trial.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{rate_estimate, EnergyTrace, StopCriteria, GAP_FLOOR};
use crate::error::{Error, Result};
use crate::integrators::{self, InertialState, SchemeKind, SchemeParams};
use crate::linalg;
use crate::objective::{Benchmark, ObjectiveSpec};
use crate::swarm::{sbim_run, CommParams, SBNesterovParams, SwarmConfig, SwarmInit, Termination};

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `t` in a batch.
pub fn trial_seed(master_seed: u64, t: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Converge,
    Swarm,
    EnergyTrace,
}

/// Starting point of single-trajectory runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartPoint {
    /// Every coordinate equal to the given value.
    Constant(f64),
    Point(Vec<f64>),
    /// A uniform sample from the box, drawn with the master seed.
    UniformBox,
}

impl Default for StartPoint {
    fn default() -> Self {
        StartPoint::Constant(3.0)
    }
}

/// Full description of an experiment. Every field has a default so that a
/// JSON config only needs the fields it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub function: Benchmark,
    pub dimension: usize,
    pub shift_b: f64,
    pub offset_c: f64,
    pub mode: Mode,
    pub params: SchemeParams,
    pub comm: CommParams,
    pub eps_reg: f64,
    pub stop: StopCriteria,
    pub agents: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub h_sweep: Vec<f64>,
    pub x0: StartPoint,
    pub max_iterations: usize,
    /// Worker threads for batches; all available cores when unset.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            function: Benchmark::RotatedHyperEllipsoid,
            dimension: 1,
            shift_b: 0.0,
            offset_c: 0.0,
            mode: Mode::Converge,
            params: SchemeParams::default(),
            comm: CommParams::default(),
            eps_reg: 1e-12,
            stop: StopCriteria::default(),
            agents: 10,
            trials: 1000,
            master_seed: 0,
            h_sweep: default_h_sweep(),
            x0: StartPoint::default(),
            max_iterations: 10_000,
            workers: None,
        }
    }
}

/// `{1, 1/2, …, 1/128}`
pub fn default_h_sweep() -> Vec<f64> {
    (0..8).map(|i| 1.0 / f64::from(1u32 << i)).collect()
}

/// Parses `1:1/128` (halving from the first to the last value) or a
/// comma-separated list such as `1,0.5,1/4`.
pub fn parse_h_sweep(s: &str) -> Result<Vec<f64>> {
    fn num(t: &str) -> Result<f64> {
        let t = t.trim();
        let v = match t.split_once('/') {
            Some((a, b)) => {
                let a: f64 = a.trim().parse().map_err(|_| Error::Config(format!("bad number `{t}`")))?;
                let b: f64 = b.trim().parse().map_err(|_| Error::Config(format!("bad number `{t}`")))?;
                a / b
            }
            None => t.parse().map_err(|_| Error::Config(format!("bad number `{t}`")))?,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("step sizes must be positive, got `{t}`")));
        }
        Ok(v)
    }
    if let Some((a, b)) = s.split_once(':') {
        let (hi, lo) = (num(a)?, num(b)?);
        if lo > hi {
            return Err(Error::Config(format!("sweep `{s}` must run from large to small")));
        }
        let mut out = vec![hi];
        while *out.last().unwrap() / 2.0 >= lo * (1.0 - 1e-12) {
            out.push(out.last().unwrap() / 2.0);
        }
        return Ok(out);
    }
    s.split(',').map(num).collect()
}

/// Default step of the swarm experiments for each scheme: Δt = 10⁻² for
/// IMEX-RB, h = 1 for everything else (NM and GD then use s = h²).
pub fn default_swarm_step(scheme: SchemeKind) -> f64 {
    match scheme {
        SchemeKind::Imexrb => 0.01,
        _ => 1.0,
    }
}

impl ExperimentConfig {
    pub fn spec(&self) -> Result<ObjectiveSpec> {
        ObjectiveSpec::new(self.function, self.dimension, self.shift_b, self.offset_c)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.comm.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.agents == 0 {
            return Err(Error::Config("agents must be at least 1".into()));
        }
        if self.h_sweep.is_empty() || self.h_sweep.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::Config("every step in the sweep must be positive".into()));
        }
        if !(self.eps_reg > 0.0) {
            return Err(Error::Config("regularization must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let f = File::open(path)?;
        Ok(serde_json::from_reader(BufReader::new(f))?)
    }

    pub fn start_point(&self, spec: &ObjectiveSpec) -> Result<Vec<f64>> {
        match &self.x0 {
            StartPoint::Constant(v) => Ok(vec![*v; self.dimension]),
            StartPoint::Point(p) => {
                if p.len() != self.dimension {
                    return Err(Error::Config(format!(
                        "start point has {} coordinates, dimension is {}",
                        p.len(),
                        self.dimension
                    )));
                }
                Ok(p.clone())
            }
            StartPoint::UniformBox => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.master_seed);
                Ok(crate::swarm::sample_box(&mut rng, &spec.bounds, 1).remove(0))
            }
        }
    }

    pub fn swarm_config(&self) -> SwarmConfig {
        SwarmConfig {
            params: self.params,
            comm: self.comm,
            nesterov: SBNesterovParams { eps_reg: self.eps_reg, step: self.params.step },
            stop: self.stop,
            init: SwarmInit::UniformBox { agents: self.agents },
            max_iterations: self.max_iterations,
            record_trace: false,
        }
    }
}

/// Outcome of one seeded swarm run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub iterations: usize,
    pub success: bool,
    pub final_gap: f64,
    pub wall_seconds: f64,
    pub termination: Termination,
    pub error: Option<String>,
    pub mass_clamped: usize,
    pub tolerance_not_met: usize,
    pub fallback_used: usize,
}

/// One aggregated row of a convergence or success-rate table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub function: String,
    pub dimension: usize,
    pub scheme: String,
    /// `h` for convergence sweeps, `B` for swarm batches.
    pub cell_name: String,
    pub cell: f64,
    pub p_bar: Option<f64>,
    pub exact_convergence: Option<bool>,
    pub success_rate: f64,
    pub successes: usize,
    pub trials: usize,
    pub avg_iterations: f64,
    pub avg_cpu_seconds: f64,
    pub final_gap: Option<f64>,
    pub failed: bool,
    pub reason: Option<String>,
}

/// A single trajectory recorded step by step.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub gaps: Vec<f64>,
    pub deltas: Vec<f64>,
    pub trace: EnergyTrace,
    pub iterations: usize,
    pub final_x: Vec<f64>,
    pub final_value: f64,
    pub termination: Termination,
    pub error: Option<String>,
    pub tolerance_not_met: usize,
}

/// Runs one scheme from `x0` until the stopping test holds, recording the
/// Lyapunov energy at every iterate `k ≥ 1`.
pub fn run_trajectory(
    spec: &ObjectiveSpec,
    params: &SchemeParams,
    stop: &StopCriteria,
    x0: &[f64],
    max_iterations: usize,
) -> Result<Trajectory> {
    params.validate()?;
    let mut state = InertialState::from_start(spec, x0)?;
    state.prime(params);
    let mut trace = EnergyTrace::default();
    trace.record(params, &state, &spec.minimizer, spec.min_value)?;
    let mut termination = Termination::MaxIterations;
    let mut error = None;
    let mut tolerance_not_met = 0;
    let mut iterations = 0;
    while iterations < max_iterations {
        match integrators::step(spec, params, &mut state) {
            Ok(info) => tolerance_not_met += info.tolerance_not_met as usize,
            Err(e) => {
                termination = Termination::SolverFailure;
                error = Some(e.to_string());
                break;
            }
        }
        iterations += 1;
        if !state.f_curr.is_finite() || state.x_curr.iter().any(|v| !v.is_finite()) {
            termination = Termination::Diverged;
            break;
        }
        trace.record(params, &state, &spec.minimizer, spec.min_value)?;
        if stop.should_stop(state.f_prev, state.f_curr, &state.x_prev, &state.x_curr, None) {
            termination = Termination::Converged;
            break;
        }
    }
    trace.fill_rates();
    let gaps = trace.rows.iter().map(|r| r.f_gap).collect();
    let deltas = trace.rows.iter().map(|r| r.delta_k).collect();
    Ok(Trajectory {
        gaps,
        deltas,
        trace,
        iterations,
        final_x: state.x_curr.clone(),
        final_value: state.f_curr,
        termination,
        error,
        tolerance_not_met,
    })
}

fn base_row(cfg: &ExperimentConfig, cell_name: &str, cell: f64) -> TableRow {
    TableRow {
        function: cfg.function.name().to_string(),
        dimension: cfg.dimension,
        scheme: cfg.params.scheme.name().to_string(),
        cell_name: cell_name.to_string(),
        cell,
        p_bar: None,
        exact_convergence: None,
        success_rate: 0.0,
        successes: 0,
        trials: 1,
        avg_iterations: 0.0,
        avg_cpu_seconds: 0.0,
        final_gap: None,
        failed: false,
        reason: None,
    }
}

/// Convergence-rate sweep: one row per step size in `h_sweep`.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Vec<TableRow>> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    let x0 = cfg.start_point(&spec)?;
    let mut rows = Vec::with_capacity(cfg.h_sweep.len());
    for &h in &cfg.h_sweep {
        let mut params = cfg.params;
        params.step = h;
        let start = Instant::now();
        let traj = run_trajectory(&spec, &params, &cfg.stop, &x0, cfg.max_iterations)?;
        let mut row = base_row(cfg, "h", h);
        row.avg_cpu_seconds = start.elapsed().as_secs_f64();
        row.avg_iterations = traj.iterations as f64;
        row.final_gap = Some(traj.final_value - spec.min_value);
        let success = traj.termination != Termination::SolverFailure
            && cfg.stop.is_success(traj.final_value, spec.min_value);
        row.successes = success as usize;
        row.success_rate = row.successes as f64;
        match rate_estimate(&traj.gaps, &traj.deltas) {
            Ok(r) => {
                row.p_bar = Some(r.p_bar);
                row.exact_convergence = Some(r.exact_convergence);
            }
            Err(_) => {
                let exact = traj.gaps.iter().any(|g| *g <= GAP_FLOOR);
                row.exact_convergence = Some(exact);
                if !exact {
                    row.reason = Some("no usable rate estimate".into());
                }
            }
        }
        if traj.termination != Termination::Converged {
            row.failed = true;
            row.reason = Some(traj.error.unwrap_or_else(|| traj.termination.name().to_string()));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Runs `cfg.trials` seeded swarm runs and aggregates them into one row.
pub fn run_swarm_batch(cfg: &ExperimentConfig) -> Result<(TableRow, Vec<TrialRecord>)> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    let scfg = cfg.swarm_config();
    let run = |t: u64| -> Result<TrialRecord> {
        let seed = trial_seed(cfg.master_seed, t);
        let out = sbim_run(&spec, &scfg, seed)?;
        Ok(TrialRecord {
            trial: t,
            seed,
            iterations: out.iterations,
            success: out.success,
            final_gap: out.f_gap,
            wall_seconds: out.wall_seconds,
            termination: out.termination,
            error: out.error,
            mass_clamped: out.flags.mass_clamped,
            tolerance_not_met: out.flags.tolerance_not_met,
            fallback_used: out.flags.fallback_used,
        })
    };
    let trials: Vec<u64> = (0..cfg.trials as u64).collect();
    let records: Vec<TrialRecord> = match cfg.workers {
        Some(1) => trials.iter().map(|t| run(*t)).collect::<Result<_>>()?,
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            pool.install(|| trials.par_iter().map(|t| run(*t)).collect::<Result<_>>())?
        }
        None => trials.par_iter().map(|t| run(*t)).collect::<Result<_>>()?,
    };
    Ok((aggregate(cfg, &records), records))
}

/// Folds trial records into a table row (in trial order).
pub fn aggregate(cfg: &ExperimentConfig, records: &[TrialRecord]) -> TableRow {
    let mut row = base_row(cfg, "B", cfg.shift_b);
    let n = records.len();
    row.trials = n;
    row.successes = records.iter().filter(|r| r.success).count();
    row.success_rate = if n == 0 { 0.0 } else { row.successes as f64 / n as f64 };
    let denom = n.max(1) as f64;
    row.avg_iterations = records.iter().map(|r| r.iterations as f64).sum::<f64>() / denom;
    row.avg_cpu_seconds = records.iter().map(|r| r.wall_seconds).sum::<f64>() / denom;
    let failures = records.iter().filter(|r| r.termination == Termination::SolverFailure).count();
    if 2 * failures > n {
        row.failed = true;
        row.reason = Some(format!("{failures} of {n} trials hit solver failures"));
    }
    row
}

/// One row of the `energy-trace` CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTraceRow {
    pub k: usize,
    pub f_gap: f64,
    pub delta_k: f64,
    pub c_k: f64,
    pub energy_fd: f64,
    pub kinetic: f64,
    pub total_swarm_energy: f64,
    pub p_k: Option<f64>,
}

/// Single-trajectory energy trace at `cfg.params.step`. The swarm energy
/// column is that of a lone unit-mass agent, `½‖(x^k − x^{k−1})/h‖² + F^k`.
pub fn run_energy_trace(cfg: &ExperimentConfig) -> Result<Vec<EnergyTraceRow>> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    let x0 = cfg.start_point(&spec)?;
    let params = cfg.params;
    let mut state = InertialState::from_start(&spec, &x0)?;
    state.prime(&params);
    let mut rows = Vec::new();
    let push = |s: &InertialState, rows: &mut Vec<EnergyTraceRow>| -> Result<()> {
        let e = crate::diagnostics::energy_fd(&params, s, &spec.minimizer, spec.min_value)?;
        let v = linalg::scale(&linalg::sub(&s.x_curr, &s.x_prev), 1.0 / params.step);
        rows.push(EnergyTraceRow {
            k: s.k,
            f_gap: s.f_curr - spec.min_value,
            delta_k: e.delta,
            c_k: e.c,
            energy_fd: e.energy,
            kinetic: e.kinetic,
            total_swarm_energy: 0.5 * linalg::dot(&v, &v) + s.f_curr,
            p_k: None,
        });
        Ok(())
    };
    push(&state, &mut rows)?;
    for _ in 0..cfg.max_iterations {
        integrators::step(&spec, &params, &mut state)?;
        push(&state, &mut rows)?;
        if cfg.stop.should_stop(state.f_prev, state.f_curr, &state.x_prev, &state.x_curr, None) {
            break;
        }
    }
    for i in 0..rows.len().saturating_sub(1) {
        rows[i].p_k = crate::diagnostics::rate_exponent(
            rows[i].f_gap,
            rows[i + 1].f_gap,
            rows[i].delta_k,
            rows[i + 1].delta_k,
        );
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// From a file extension; CSV unless it is `.json`.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format `{s}`"))),
        }
    }
}

/// Writes rows as CSV (one header line) or as a JSON array.
pub fn export<T: Serialize>(rows: &[T], path: &Path, format: Format) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::State("nothing to export".into()));
    }
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_rows(rows, &mut w, format)?;
    w.flush()?;
    Ok(())
}

/// [`export`] to any writer.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], w: W, format: Format) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::State("nothing to export".into()));
    }
    match format {
        Format::Csv => {
            let mut cw = csv::Writer::from_writer(w);
            for r in rows {
                cw.serialize(r)?;
            }
            cw.flush()?;
        }
        Format::Json => {
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Reads rows written by [`export`].
pub fn import<T: DeserializeOwned>(path: &Path, format: Format) -> Result<Vec<T>> {
    let file = BufReader::new(File::open(path)?);
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(file);
            r.deserialize().map(|row| row.map_err(Error::from)).collect()
        }
        Format::Json => Ok(serde_json::from_reader(file)?),
    }
}
