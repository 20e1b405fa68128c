use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sbim::harness::{self, ExperimentConfig, Format, Mode, StartPoint};
use sbim::integrators::{Schedule, SchemeKind};
use sbim::objective::Benchmark;
use sbim::Error;

/// Swarm-based inertial minimization experiments.
#[derive(Parser)]
#[command(name = "sbim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence-rate sweep over step sizes (one row per h).
    Converge(Common),
    /// Seeded swarm success-rate batch (one aggregated row).
    Swarm(Common),
    /// Per-step energy trace of a single trajectory.
    EnergyTrace(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "fn")]
    function: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    shift_b: Option<f64>,
    #[arg(long)]
    offset_c: Option<f64>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Step size h (Δt for imexrb).
    #[arg(long = "step-h", alias = "h")]
    step_h: Option<f64>,
    /// Constant Hessian-damping weight γ.
    #[arg(long)]
    gamma: Option<f64>,
    /// β_k = beta-scale/(k h).
    #[arg(long)]
    beta_scale: Option<f64>,
    /// Gradient step of the gd scheme (default h²).
    #[arg(long)]
    gd_step: Option<f64>,
    #[arg(long)]
    imex_eps: Option<f64>,
    #[arg(long)]
    imex_max_inner: Option<usize>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    p_exponent: Option<f64>,
    #[arg(long)]
    tol_mass: Option<f64>,
    #[arg(long)]
    tol_merge: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// `1:1/128` or a comma-separated list.
    #[arg(long)]
    h_sweep: Option<String>,
    /// Start point: a single number (every coordinate), a comma-separated
    /// vector, or `uniform-box`.
    #[arg(long)]
    x0: Option<String>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; `.json` selects JSON, anything else CSV. Stdout when
    /// omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-trial records (swarm mode).
    #[arg(long)]
    trials_out: Option<PathBuf>,
}

fn parse_x0(s: &str) -> Result<StartPoint, Error> {
    if s == "uniform-box" {
        return Ok(StartPoint::UniformBox);
    }
    let vals: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|_| Error::Config(format!("bad start point `{s}`")))?;
    Ok(match vals.as_slice() {
        [v] => StartPoint::Constant(*v),
        _ => StartPoint::Point(vals),
    })
}

fn build_config(mode: Mode, a: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::from_json_file(p).map_err(|e| match e {
            Error::Json(j) => Error::Config(format!("{}: {j}", p.display())),
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    cfg.mode = mode;
    if let Some(f) = &a.function {
        cfg.function = f.parse::<Benchmark>()?;
    }
    if let Some(d) = a.dim {
        cfg.dimension = d;
    }
    if let Some(b) = a.shift_b {
        cfg.shift_b = b;
    }
    if let Some(c) = a.offset_c {
        cfg.offset_c = c;
    }
    if let Some(s) = &a.scheme {
        cfg.params.scheme = s.parse::<SchemeKind>()?;
    }
    if mode == Mode::Swarm && a.config.is_none() {
        cfg.params.step = harness::default_swarm_step(cfg.params.scheme);
    }
    if let Some(v) = a.alpha {
        cfg.params.alpha = v;
    }
    if let Some(h) = a.step_h {
        cfg.params.step = h;
    }
    if let Some(g) = a.gamma {
        cfg.params.gamma = Schedule::Constant { value: g };
    }
    if let Some(b) = a.beta_scale {
        cfg.params.beta = Schedule::InverseTime { scale: b };
    }
    if a.gd_step.is_some() {
        cfg.params.gd_step = a.gd_step;
    }
    if a.imex_eps.is_some() {
        cfg.params.imex.eps_stab = a.imex_eps;
    }
    if let Some(m) = a.imex_max_inner {
        cfg.params.imex.max_inner = m;
    }
    if let Some(n) = a.agents {
        cfg.agents = n;
    }
    if let Some(p) = a.p_exponent {
        cfg.comm.p_exponent = p;
    }
    if let Some(t) = a.tol_mass {
        cfg.comm.tol_mass = t;
    }
    if let Some(t) = a.tol_merge {
        cfg.comm.tol_merge = t;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = &a.h_sweep {
        cfg.h_sweep = harness::parse_h_sweep(s)?;
    }
    if let Some(s) = &a.x0 {
        cfg.x0 = parse_x0(s)?;
    }
    if let Some(m) = a.max_iterations {
        cfg.max_iterations = m;
    }
    if a.workers.is_some() {
        cfg.workers = a.workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit<T: serde::Serialize>(rows: &[T], out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(p) => harness::export(rows, p, Format::from_path(p)),
        None => harness::write_rows(rows, std::io::stdout().lock(), Format::Csv),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Converge(a) => {
            let cfg = build_config(Mode::Converge, &a)?;
            let rows = harness::run_convergence(&cfg)?;
            emit(&rows, &a.out)
        }
        Command::Swarm(a) => {
            let cfg = build_config(Mode::Swarm, &a)?;
            let (row, records) = harness::run_swarm_batch(&cfg)?;
            if let Some(p) = &a.trials_out {
                harness::export(&records, p, Format::from_path(p))?;
            }
            emit(&[row], &a.out)
        }
        Command::EnergyTrace(a) => {
            let cfg = build_config(Mode::EnergyTrace, &a)?;
            let rows = harness::run_energy_trace(&cfg)?;
            emit(&rows, &a.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
