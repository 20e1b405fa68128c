use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sbim::diagnostics::delta_c;
use sbim::harness::{run_swarm_batch, ExperimentConfig, Mode};
use sbim::integrators::{self, prox, InertialState, Schedule, SchemeKind, SchemeParams, SolverConfig};
use sbim::objective::{fd_check, Benchmark, Objective, ObjectiveSpec};
use sbim::swarm::{communicate, sample_box, total_mass, CommParams, Swarm};

fn benchmark() -> impl Strategy<Value = Benchmark> {
    prop::sample::select(Benchmark::ALL.to_vec())
}

fn convex() -> impl Strategy<Value = Benchmark> {
    prop::sample::select(Benchmark::CONVEX.to_vec())
}

fn point(d: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_covariance(f in benchmark(), b in -20.0f64..20.0, x in point(3, -4.0, 4.0)) {
        let shifted = ObjectiveSpec::new(f, 3, b, 0.0).unwrap();
        let plain = ObjectiveSpec::standard(f, 3).unwrap();
        let xb: Vec<f64> = x.iter().map(|v| v + b).collect();
        let back: Vec<f64> = xb.iter().map(|v| v - b).collect();
        prop_assert_eq!(shifted.value(&xb).unwrap(), plain.value(&back).unwrap());
    }

    #[test]
    fn quadratic_hessian_is_constant(f in convex(), x1 in point(4, -5.0, 5.0), x2 in point(4, -5.0, 5.0), v in point(4, -1.0, 1.0)) {
        let spec = ObjectiveSpec::new(f, 4, 0.3, 0.0).unwrap();
        prop_assert_eq!(spec.hess_vec(&x1, &v).unwrap(), spec.hess_vec(&x2, &v).unwrap());
    }

    #[test]
    fn stored_minimum_is_evaluated(f in benchmark(), d in 1usize..8, b in -3.0f64..3.0, c in -3.0f64..3.0) {
        let spec = ObjectiveSpec::new(f, d, b, c).unwrap();
        prop_assert_eq!(spec.min_value, spec.value(&spec.minimizer).unwrap());
    }

    #[test]
    fn gradient_matches_central_differences(f in benchmark(), seed in any::<u64>()) {
        let spec = ObjectiveSpec::new(f, 3, 1.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample_box(&mut rng, &spec.bounds, 1).remove(0);
        let rep = fd_check(&spec, &x, 1e-6).unwrap();
        prop_assert!(rep.grad_rel_err <= 1e-6, "{:?} at {:?}", rep, x);
        prop_assert!(rep.hess_rel_err <= 1e-5, "{:?} at {:?}", rep, x);
    }

    #[test]
    fn prox_satisfies_stationarity(f in benchmark(), y in point(2, -3.0, 3.0), log_mu in -2.0f64..1.0) {
        let spec = ObjectiveSpec::standard(f, 2).unwrap();
        let mu = 10f64.powf(log_mu);
        let x = prox(&spec, mu, &y, &SolverConfig::default()).unwrap();
        let g = spec.gradient(&x).unwrap();
        let r: f64 = (0..2).map(|i| (x[i] + mu * g[i] - y[i]).powi(2)).sum::<f64>().sqrt();
        let scale = 1.0 + y.iter().map(|v| v.abs()).sum::<f64>();
        prop_assert!(r <= 1e-9 * scale, "residual {r}");
    }

    #[test]
    fn mass_is_conserved_and_others_shrink(seed in any::<u64>(), n in 2usize..15, dt in 1e-3f64..0.99) {
        let spec = ObjectiveSpec::standard(Benchmark::Ackley, 2).unwrap();
        let params = SchemeParams::with_scheme(SchemeKind::Fb, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = sample_box(&mut rng, &spec.bounds, n);
        let mut swarm = Swarm::new(&spec, &params, &pts).unwrap();
        let before: Vec<(usize, f64)> = swarm.agents.iter().map(|a| (a.id, a.mass)).collect();
        let rep = communicate(&mut swarm.agents, &CommParams::default(), dt).unwrap();
        prop_assert_eq!(total_mass(&swarm.agents, rep.best_id), 1.0);
        for a in &swarm.agents {
            prop_assert!(a.mass > 0.0 && a.mass <= 1.0);
            if a.id != rep.best_id {
                let m0 = before.iter().find(|(id, _)| *id == a.id).unwrap().1;
                prop_assert!(a.mass <= m0);
            }
        }
    }

    #[test]
    fn delta_identity(k in 1usize..10_000, log_h in -7.0f64..0.0, g in 1.0f64..400.0) {
        let mut p = SchemeParams::with_scheme(SchemeKind::Fd, 2f64.powf(log_h));
        p.gamma = Schedule::Constant { value: g };
        let (c, d) = delta_c(&p, k);
        prop_assert_eq!(d + c * p.step * (k as f64 + 1.0), 0.0);
    }

    #[test]
    fn sampled_agents_stay_in_the_box(f in benchmark(), d in 1usize..6, b in -10.0f64..10.0, seed in any::<u64>()) {
        let spec = ObjectiveSpec::new(f, d, b, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for x in sample_box(&mut rng, &spec.bounds, 20) {
            prop_assert!(spec.contains(&x));
        }
    }
}

#[test]
fn stationary_point_is_a_fixed_point_of_every_scheme() {
    for f in Benchmark::CONVEX {
        let spec = ObjectiveSpec::new(f, 3, 0.75, 0.0).unwrap();
        for scheme in [
            SchemeKind::Fd,
            SchemeKind::Fb,
            SchemeKind::Semi,
            SchemeKind::Ipahd,
            SchemeKind::Nesterov,
            SchemeKind::Gd,
        ] {
            let params = SchemeParams::with_scheme(scheme, 0.5);
            let mut state =
                InertialState::new(&spec, 3, spec.minimizer.clone(), spec.minimizer.clone()).unwrap();
            state.prime(&params);
            integrators::step(&spec, &params, &mut state).unwrap();
            assert_eq!(state.x_curr, spec.minimizer, "{scheme} on {f}");
        }
    }
}

#[test]
fn batch_statistics_ignore_the_worker_count() {
    let mut cfg = ExperimentConfig {
        function: Benchmark::Rastrigin,
        mode: Mode::Swarm,
        trials: 40,
        master_seed: 9,
        ..Default::default()
    };
    cfg.params.scheme = SchemeKind::Fb;
    let strip = |cfg: &ExperimentConfig| {
        let (mut row, mut recs) = run_swarm_batch(cfg).unwrap();
        row.avg_cpu_seconds = 0.0;
        recs.iter_mut().for_each(|r| r.wall_seconds = 0.0);
        (row, recs)
    };
    cfg.workers = Some(1);
    let serial = strip(&cfg);
    cfg.workers = Some(4);
    let parallel = strip(&cfg);
    assert_eq!(serial, parallel);
    let (row, recs) = serial;
    assert_eq!(row.success_rate, row.successes as f64 / row.trials as f64);
    assert!((0.0..=1.0).contains(&row.success_rate));
    assert!(recs.iter().filter(|r| r.success).all(|r| r.final_gap.abs() <= 1e-4));
}
