//! Reduced-basis implicit–explicit Euler.
//!
//! Each step solves implicit Euler for the increment inside the span `V` of
//! recent states, then takes an explicit step with the right-hand side frozen
//! at the reduced solution. When the new state is not well represented in
//! `V` the basis is enriched with the normalized projection residual.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::Objective;

use super::{stagnated, ImexConfig, InertialState, SchemeParams, SolverConfig, StepInfo};

/// Right-hand side `g(t, u)` of a first-order system `u' = g(t, u)`.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, u: &[f64]) -> Result<Vec<f64>>;
}

/// A vector field given by a closure.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64, &[f64]) -> Vec<f64>> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F: Fn(f64, &[f64]) -> Vec<f64>> VectorField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: u.len() });
        }
        Ok((self.f)(t, u))
    }
}

/// `(x, V)` form of the inertial dynamics, `u = [x; V]`.
pub struct InertialField<'a, O: ?Sized> {
    pub obj: &'a O,
    pub params: &'a SchemeParams,
}

impl<O: Objective + ?Sized> VectorField for InertialField<'_, O> {
    fn dim(&self) -> usize {
        2 * self.obj.dimension()
    }

    fn eval(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let d = self.obj.dimension();
        if u.len() != 2 * d {
            return Err(Error::DimensionMismatch { expected: 2 * d, got: u.len() });
        }
        let (dx, dv) = rhs_first_order(self.obj, self.params, t, &u[..d], &u[d..])?;
        let mut out = dx;
        out.extend(dv);
        Ok(out)
    }
}

/// `(ẋ, V̇)` with `ẋ = V` and
/// `V̇ = −(α/t)V + (α/t)<∇F(x), V>1 − γ(t)∇²F(x)V − β(t)∇F(x)`.
pub fn rhs_first_order<O: Objective + ?Sized>(
    obj: &O,
    params: &SchemeParams,
    t: f64,
    x: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    obj.check_dim(v)?;
    let g = obj.gradient(x)?;
    let hv = obj.hess_vec(x, v)?;
    let a = params.alpha / t;
    let gamma = params.gamma.at_time(t);
    let beta = params.beta.at_time(t);
    let gv = linalg::dot(&g, v);
    let dv = (0..v.len())
        .map(|i| -a * v[i] + a * gv - gamma * hv[i] - beta * g[i])
        .collect();
    Ok((v.to_vec(), dv))
}

/// Orthonormal basis of the span of `columns` by modified Gram–Schmidt with
/// one reorthogonalization pass. A column whose remainder falls below
/// `qr_floor` times its original norm is treated as collinear and dropped.
pub fn orthonormal_basis(columns: &[Vec<f64>], qr_floor: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for c in columns {
        push_column(&mut basis, c, qr_floor);
    }
    basis
}

/// Orthogonalizes `c` against `basis` and appends it if it is not collinear.
fn push_column(basis: &mut Vec<Vec<f64>>, c: &[f64], qr_floor: f64) -> bool {
    let n0 = linalg::norm(c);
    if !(n0 > 0.0) || !n0.is_finite() {
        return false;
    }
    let mut w = c.to_vec();
    for _ in 0..2 {
        for q in basis.iter() {
            let p = linalg::dot(q, &w);
            linalg::axpy(-p, q, &mut w);
        }
    }
    let n = linalg::norm(&w);
    if n < qr_floor * n0 {
        return false;
    }
    basis.push(linalg::scale(&w, 1.0 / n));
    true
}

/// Outcome of one reduced-basis step.
#[derive(Clone, Debug, PartialEq)]
pub struct ImexStepReport {
    pub u_next: Vec<f64>,
    pub inner_iterations: usize,
    /// `‖(I − VVᵀ)u^{n+1}‖ / ‖u^{n+1}‖` of the returned state (0 if it is 0).
    pub projection_ratio: f64,
    pub tolerance_not_met: bool,
    pub basis_size: usize,
}

fn lift(basis: &[Vec<f64>], coef: &[f64], base: &[f64]) -> Vec<f64> {
    let mut w = base.to_vec();
    for (q, c) in basis.iter().zip(coef) {
        linalg::axpy(*c, q, &mut w);
    }
    w
}

fn project(basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    basis.iter().map(|q| linalg::dot(q, v)).collect()
}

/// Newton on `ū − Δt Vᵀ g(t, Vū + uⁿ) = 0` with a finite-difference
/// directional Jacobian. Returns `ū` and `g(t, Vū + uⁿ)`.
fn reduced_implicit<F: VectorField + ?Sized>(
    field: &F,
    t: f64,
    dt: f64,
    basis: &[Vec<f64>],
    u_n: &[f64],
    solver: &SolverConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = basis.len();
    let mut ubar = vec![0.0; r];
    let mut g = field.eval(t, u_n)?;
    if r == 0 {
        return Ok((ubar, g));
    }
    let residual = |ubar: &[f64], g: &[f64]| -> (Vec<f64>, f64) {
        let pg = project(basis, g);
        let res: Vec<f64> = (0..r).map(|i| ubar[i] - dt * pg[i]).collect();
        let scale = 1.0 + linalg::norm(ubar) + dt * linalg::norm(&pg) + linalg::norm(u_n);
        (res, scale)
    };
    let (mut res, mut scale) = residual(&ubar, &g);
    let mut rn = linalg::norm(&res);
    let mut iterations = 0;
    while rn > solver.newton_tol * scale {
        if iterations >= solver.newton_max_iter {
            return Err(Error::Solver { what: "reduced implicit solve", iterations, residual: rn });
        }
        iterations += 1;
        let w = lift(basis, &ubar, u_n);
        let eps = 1e-7 * (1.0 + linalg::norm(&w));
        // J = I − Δt Vᵀ (∂g) V, one directional difference per basis vector.
        let mut jac = vec![vec![0.0; r]; r];
        for (j, q) in basis.iter().enumerate() {
            let mut wp = w.clone();
            linalg::axpy(eps, q, &mut wp);
            let gp = field.eval(t, &wp)?;
            let dg: Vec<f64> = gp.iter().zip(&g).map(|(a, b)| (a - b) / eps).collect();
            let col = project(basis, &dg);
            for i in 0..r {
                jac[i][j] = if i == j { 1.0 } else { 0.0 } - dt * col[i];
            }
        }
        let neg: Vec<f64> = res.iter().map(|v| -v).collect();
        let Some(step) = linalg::solve_dense(&jac, &neg) else {
            return Err(Error::Solver { what: "reduced implicit solve", iterations, residual: rn });
        };
        // The basis is orthonormal, so ‖step‖ is the size of the full-space
        // correction.
        if stagnated(&step, &w) {
            break;
        }
        let mut t_ls = 1.0;
        loop {
            let cand: Vec<f64> = ubar.iter().zip(&step).map(|(a, b)| a + t_ls * b).collect();
            let gc = field.eval(t, &lift(basis, &cand, u_n))?;
            let (rc, sc) = residual(&cand, &gc);
            let rcn = linalg::norm(&rc);
            if rcn.is_finite() && (rcn < (1.0 - 1e-4 * t_ls) * rn || rcn <= solver.newton_tol * sc) {
                ubar = cand;
                g = gc;
                res = rc;
                rn = rcn;
                scale = sc;
                break;
            }
            t_ls *= 0.5;
            if t_ls < 1e-10 {
                return Err(Error::Solver { what: "reduced implicit solve", iterations, residual: rn });
            }
        }
    }
    Ok((ubar, g))
}

/// One reduced-basis step from `history[0] = uⁿ` to time `t_next`.
///
/// `history` holds recent states, newest first; the first
/// `cfg.window_for(dim)` of them span the initial basis.
pub fn imexrb_advance<F: VectorField + ?Sized>(
    field: &F,
    t_next: f64,
    dt: f64,
    history: &VecDeque<Vec<f64>>,
    cfg: &ImexConfig,
    solver: &SolverConfig,
) -> Result<ImexStepReport> {
    let u_n = history
        .front()
        .ok_or_else(|| Error::State("reduced-basis step needs at least one past state".into()))?;
    let n = field.dim();
    if u_n.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u_n.len() });
    }
    let window = cfg.window_for(n);
    let cols: Vec<Vec<f64>> = history.iter().take(window).cloned().collect();
    let mut basis = orthonormal_basis(&cols, cfg.qr_floor);
    let eps = cfg.eps_for_step(dt);

    let mut last = None;
    let mut iterations = 0;
    for inner in 0..cfg.max_inner {
        iterations = inner + 1;
        let (_, g) = reduced_implicit(field, t_next, dt, &basis, u_n, solver)?;
        let u_next: Vec<f64> = u_n.iter().zip(&g).map(|(a, b)| a + dt * b).collect();
        let coef = project(&basis, &u_next);
        let mut r = u_next.clone();
        for (q, c) in basis.iter().zip(&coef) {
            linalg::axpy(-c, q, &mut r);
        }
        let un = linalg::norm(&u_next);
        let rn = linalg::norm(&r);
        let ratio = if un == 0.0 { 0.0 } else { rn / un };
        if ratio <= eps {
            return Ok(ImexStepReport {
                u_next,
                inner_iterations: inner + 1,
                projection_ratio: ratio,
                tolerance_not_met: false,
                basis_size: basis.len(),
            });
        }
        let size = basis.len();
        last = Some((u_next, ratio, size));
        if !push_column(&mut basis, &r, cfg.qr_floor) {
            break;
        }
    }
    let (u_next, ratio, size) = last.expect("max_inner ≥ 1");
    Ok(ImexStepReport {
        inner_iterations: iterations,
        u_next,
        projection_ratio: ratio,
        tolerance_not_met: true,
        basis_size: size,
    })
}

/// One step of the reduced-basis scheme on the inertial dynamics, at
/// `t_{k+1} = (k+1)h`. Primes the state on first use.
pub fn imexrb_step<O: Objective + ?Sized>(
    obj: &O,
    params: &SchemeParams,
    state: &mut InertialState,
) -> Result<StepInfo> {
    if state.k == 0 {
        return Err(Error::Domain("reduced-basis step requires k ≥ 1".into()));
    }
    if state.velocity.is_none() || state.history.is_empty() {
        let mut p = *params;
        p.scheme = super::SchemeKind::Imexrb;
        state.prime(&p);
    }
    let d = state.dimension();
    let dt = params.step;
    let field = InertialField { obj, params };
    let t_next = (state.k + 1) as f64 * dt;
    let rep = imexrb_advance(&field, t_next, dt, &state.history, &params.imex, &params.solver)?;
    let x = rep.u_next[..d].to_vec();
    let v = rep.u_next[d..].to_vec();
    state.advance(obj, x)?;
    state.velocity = Some(v);
    state.history.push_front(rep.u_next);
    state.history.truncate(params.imex.window_for(2 * d));
    Ok(StepInfo {
        inner_iterations: rep.inner_iterations,
        residual: rep.projection_ratio,
        tolerance_not_met: rep.tolerance_not_met,
        used_fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::SchemeKind;
    use crate::objective::{Benchmark, ObjectiveSpec};

    fn hist(u: Vec<f64>) -> VecDeque<Vec<f64>> {
        VecDeque::from(vec![u])
    }

    #[test]
    fn zero_field_keeps_state() {
        let f = FnField::new(3, |_, _| vec![0.0; 3]);
        let u = vec![1.0, -2.0, 0.5];
        let rep = imexrb_advance(&f, 1.0, 0.1, &hist(u.clone()), &ImexConfig::default(), &SolverConfig::default())
            .unwrap();
        assert_eq!(rep.u_next, u);
        assert!(rep.projection_ratio < 1e-15);
        assert_eq!(rep.inner_iterations, 1);
    }

    #[test]
    fn scalar_decay_is_implicit_euler() {
        let f = FnField::new(1, |_, u: &[f64]| vec![-u[0]]);
        let rep = imexrb_advance(&f, 0.1, 0.1, &hist(vec![1.0]), &ImexConfig::default(), &SolverConfig::default())
            .unwrap();
        assert!((rep.u_next[0] - 1.0 / 1.1).abs() < 1e-12);
        assert_eq!(rep.projection_ratio, 0.0);
    }

    #[test]
    fn collinear_window_gives_one_column() {
        let cols = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![2.0, 4.0]];
        assert_eq!(orthonormal_basis(&cols, 1e-10).len(), 1);
    }

    #[test]
    fn basis_is_orthonormal() {
        let cols = vec![vec![1.0, 2.0, 0.0], vec![0.3, 1.0, 1.0], vec![5.0, -1.0, 2.0]];
        let q = orthonormal_basis(&cols, 1e-10);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((linalg::dot(&q[i], &q[j]) - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rhs_hand_values() {
        let obj = ObjectiveSpec::standard(Benchmark::Sphere, 1).unwrap();
        let p = SchemeParams::with_scheme(SchemeKind::Imexrb, 1.0);
        let (dx, dv) = rhs_first_order(&obj, &p, 1.0, &[1.0], &[1.0]).unwrap();
        assert_eq!(dx, vec![1.0]);
        assert_eq!(dv, vec![-1398.0]);
    }

    #[test]
    fn rhs_orthogonal_interaction() {
        // ∇F(x) = (0, 2) on the sphere at x = (0, 1)
        let obj = ObjectiveSpec::standard(Benchmark::Sphere, 2).unwrap();
        let mut p = SchemeParams::with_scheme(SchemeKind::Imexrb, 1.0);
        p.gamma = crate::integrators::Schedule::Constant { value: 0.0 };
        p.beta = crate::integrators::Schedule::Constant { value: 0.0 };
        let (_, dv) = rhs_first_order(&obj, &p, 1.0, &[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert_eq!(dv, vec![-2.0, 0.0]);
    }

    #[test]
    fn rhs_rejects_non_positive_time() {
        let obj = ObjectiveSpec::standard(Benchmark::Sphere, 1).unwrap();
        let p = SchemeParams::default();
        assert!(rhs_first_order(&obj, &p, 0.0, &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn accepted_steps_meet_tolerance() {
        let obj = ObjectiveSpec::standard(Benchmark::SumSquares, 3).unwrap();
        let p = SchemeParams::with_scheme(SchemeKind::Imexrb, 0.05);
        let mut s = InertialState::from_start(&obj, &[3.0, -1.0, 2.0]).unwrap();
        s.prime(&p);
        for _ in 0..30 {
            let info = imexrb_step(&obj, &p, &mut s).unwrap();
            if !info.tolerance_not_met {
                assert!(info.residual <= p.imex.eps_for_step(p.step));
            }
        }
    }

    #[test]
    fn stationary_point_is_fixed() {
        let obj = ObjectiveSpec::standard(Benchmark::Sphere, 2).unwrap();
        let p = SchemeParams::with_scheme(SchemeKind::Imexrb, 0.1);
        let mut s = InertialState::new(&obj, 1, vec![0.0; 2], vec![0.0; 2]).unwrap();
        s.prime(&p);
        imexrb_step(&obj, &p, &mut s).unwrap();
        assert_eq!(s.x_curr, vec![0.0; 2]);
    }
}
