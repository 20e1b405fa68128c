//! Objective functions: the oracle contract and the six benchmark functions.
//!
//! Every benchmark is evaluated on the shifted coordinate `z = x − B·1` and
//! carries an additive offset `C`. With `B = C = 0` the formulas are:
//!
//! | name                      | F(z)                                                        | box          |
//! |---------------------------|-------------------------------------------------------------|--------------|
//! | `sphere`                  | Σ z_i²                                                      | ±5.12        |
//! | `modified-sphere`         | (Σ 2^i z_i² − 1745) / 899                                   | ±5.12        |
//! | `sum-squares`             | Σ i z_i²                                                    | ±10          |
//! | `rotated-hyper-ellipsoid` | Σ_i Σ_{j≤i} z_j²                                            | ±65.536      |
//! | `ackley`                  | −20 exp(−0.2/√d ‖z‖) − exp(−1/√d Σ cos 2πz_i) + 20 + e      | [B−4, B+4]   |
//! | `rastrigin`               | (1/d) Σ (z_i² − 10 cos 2πz_i + 10)                          | [B−4, B+4]   |
//!
//! Indices `i` are 1-based. The Ackley variant keeps the leading minus inside
//! the second exponential, so `F(B·1)` is not zero; the reference value
//! `min_value` is always obtained by evaluating at the minimizer.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Value, gradient and Hessian-vector oracles of a smooth objective.
///
/// Implementations must be pure so that agents can evaluate them
/// concurrently.
pub trait Objective: Send + Sync {
    fn dimension(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// `∇²F(x) · v`
    fn hess_vec(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>>;

    /// Diagonal of a constant Hessian, for objectives that are separable
    /// quadratics. Enables closed-form proximal maps.
    fn quadratic_diagonal(&self) -> Option<Vec<f64>> {
        None
    }

    /// Center `c` of a separable quadratic `Σ a_i (x_i − c_i)² + const`.
    fn quadratic_center(&self) -> Option<Vec<f64>> {
        None
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// The six built-in benchmarks, addressable by their canonical names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Benchmark {
    Sphere,
    ModifiedSphere,
    SumSquares,
    RotatedHyperEllipsoid,
    Ackley,
    Rastrigin,
}

impl Benchmark {
    pub const ALL: [Benchmark; 6] = [
        Benchmark::Sphere,
        Benchmark::ModifiedSphere,
        Benchmark::SumSquares,
        Benchmark::RotatedHyperEllipsoid,
        Benchmark::Ackley,
        Benchmark::Rastrigin,
    ];

    pub const CONVEX: [Benchmark; 4] = [
        Benchmark::Sphere,
        Benchmark::ModifiedSphere,
        Benchmark::SumSquares,
        Benchmark::RotatedHyperEllipsoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Sphere => "sphere",
            Benchmark::ModifiedSphere => "modified-sphere",
            Benchmark::SumSquares => "sum-squares",
            Benchmark::RotatedHyperEllipsoid => "rotated-hyper-ellipsoid",
            Benchmark::Ackley => "ackley",
            Benchmark::Rastrigin => "rastrigin",
        }
    }

    pub fn is_quadratic(self) -> bool {
        !matches!(self, Benchmark::Ackley | Benchmark::Rastrigin)
    }

    /// Weight `a_i` in `F = Σ a_i z_i² + const` for the quadratic benchmarks.
    fn quadratic_weight(self, i: usize, d: usize) -> f64 {
        let i1 = (i + 1) as f64;
        match self {
            Benchmark::Sphere => 1.0,
            Benchmark::ModifiedSphere => 2f64.powi(i as i32 + 1) / 899.0,
            Benchmark::SumSquares => i1,
            // Σ_{k=1}^{d} Σ_{j≤k} z_j² counts z_j once for every k ≥ j.
            Benchmark::RotatedHyperEllipsoid => (d - i) as f64,
            Benchmark::Ackley | Benchmark::Rastrigin => unreachable!(),
        }
    }

    fn half_width(self) -> f64 {
        match self {
            Benchmark::Sphere | Benchmark::ModifiedSphere => 5.12,
            Benchmark::SumSquares => 10.0,
            Benchmark::RotatedHyperEllipsoid => 65.536,
            Benchmark::Ackley | Benchmark::Rastrigin => 4.0,
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown function `{s}`")))
    }
}

/// A benchmark instance: function, dimension, shift, offset, search box and
/// the documented minimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub function: Benchmark,
    pub dimension: usize,
    pub shift: f64,
    pub offset: f64,
    /// Per-coordinate `[lo, hi]` used for initialization only.
    pub bounds: Vec<(f64, f64)>,
    pub minimizer: Vec<f64>,
    /// `F(minimizer)`, stored by evaluation.
    pub min_value: f64,
    pub lipschitz_grad_hint: Option<f64>,
}

impl ObjectiveSpec {
    pub fn new(function: Benchmark, dimension: usize, shift: f64, offset: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if !shift.is_finite() || !offset.is_finite() {
            return Err(Error::Config("shift and offset must be finite".into()));
        }
        let w = function.half_width();
        let bounds = vec![(shift - w, shift + w); dimension];
        let minimizer = vec![shift; dimension];
        let d = dimension as f64;
        let lipschitz_grad_hint = match function {
            Benchmark::Sphere => Some(2.0),
            Benchmark::ModifiedSphere => Some(2f64.powi(dimension as i32) * 2.0 / 899.0),
            Benchmark::SumSquares | Benchmark::RotatedHyperEllipsoid => Some(2.0 * d),
            Benchmark::Ackley | Benchmark::Rastrigin => None,
        };
        let mut spec = ObjectiveSpec {
            function,
            dimension,
            shift,
            offset,
            bounds,
            minimizer,
            min_value: f64::NAN,
            lipschitz_grad_hint,
        };
        spec.min_value = spec.eval_value(&spec.minimizer)?;
        Ok(spec)
    }

    /// Convenience constructor with `B = C = 0`.
    pub fn standard(function: Benchmark, dimension: usize) -> Result<Self> {
        Self::new(function, dimension, 0.0, 0.0)
    }

    fn shifted(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(x.iter().map(|xi| xi - self.shift).collect())
    }

    pub fn eval_value(&self, x: &[f64]) -> Result<f64> {
        let z = self.shifted(x)?;
        let d = self.dimension;
        let df = d as f64;
        let v = match self.function {
            Benchmark::Sphere | Benchmark::SumSquares | Benchmark::RotatedHyperEllipsoid => z
                .iter()
                .enumerate()
                .map(|(i, zi)| self.function.quadratic_weight(i, d) * zi * zi)
                .sum(),
            Benchmark::ModifiedSphere => {
                let s: f64 = z
                    .iter()
                    .enumerate()
                    .map(|(i, zi)| zi * zi * 2f64.powi(i as i32 + 1))
                    .sum();
                (s - 1745.0) / 899.0
            }
            Benchmark::Ackley => {
                let r = linalg::norm(&z);
                let c: f64 = z.iter().map(|zi| (2.0 * PI * zi).cos()).sum();
                let sd = df.sqrt();
                -20.0 * (-0.2 / sd * r).exp() - (-c / sd).exp() + 20.0 + E
            }
            Benchmark::Rastrigin => {
                z.iter()
                    .map(|zi| zi * zi - 10.0 * (2.0 * PI * zi).cos() + 10.0)
                    .sum::<f64>()
                    / df
            }
        };
        Ok(v + self.offset)
    }

    pub fn eval_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.shifted(x)?;
        let d = self.dimension;
        let df = d as f64;
        let g = match self.function {
            Benchmark::Sphere
            | Benchmark::ModifiedSphere
            | Benchmark::SumSquares
            | Benchmark::RotatedHyperEllipsoid => z
                .iter()
                .enumerate()
                .map(|(i, zi)| 2.0 * self.function.quadratic_weight(i, d) * zi)
                .collect(),
            Benchmark::Ackley => {
                let sd = df.sqrt();
                let a = 0.2 / sd;
                let r = linalg::norm(&z);
                let c: f64 = z.iter().map(|zi| (2.0 * PI * zi).cos()).sum();
                let radial = if r > 0.0 { 20.0 * a * (-a * r).exp() / r } else { 0.0 };
                let osc = -2.0 * PI / sd * (-c / sd).exp();
                z.iter()
                    .map(|zi| radial * zi + osc * (2.0 * PI * zi).sin())
                    .collect()
            }
            Benchmark::Rastrigin => z
                .iter()
                .map(|zi| (2.0 * zi + 20.0 * PI * (2.0 * PI * zi).sin()) / df)
                .collect(),
        };
        Ok(g)
    }

    pub fn eval_hess_vec(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let z = self.shifted(x)?;
        self.check_dim(v)?;
        let d = self.dimension;
        let df = d as f64;
        let hv = match self.function {
            Benchmark::Sphere
            | Benchmark::ModifiedSphere
            | Benchmark::SumSquares
            | Benchmark::RotatedHyperEllipsoid => v
                .iter()
                .enumerate()
                .map(|(i, vi)| 2.0 * self.function.quadratic_weight(i, d) * vi)
                .collect(),
            Benchmark::Ackley => {
                let sd = df.sqrt();
                let a = 0.2 / sd;
                let c = 1.0 / sd;
                let r = linalg::norm(&z);
                let mut out = vec![0.0; d];
                if r > 0.0 {
                    // 20a e^{−ar} [ v/r − z (z·v)/r³ − a z (z·v)/r² ]
                    let w = 20.0 * a * (-a * r).exp();
                    let zv = linalg::dot(&z, v);
                    for i in 0..d {
                        out[i] += w * (v[i] / r - z[i] * zv / (r * r * r) - a * z[i] * zv / (r * r));
                    }
                }
                // −4π² c e^{−cS} [ c sin_i (sin·v) + cos_i v_i ]
                let s: f64 = z.iter().map(|zi| (2.0 * PI * zi).cos()).sum();
                let ex = (-c * s).exp();
                let sin: Vec<f64> = z.iter().map(|zi| (2.0 * PI * zi).sin()).collect();
                let sv = linalg::dot(&sin, v);
                for i in 0..d {
                    let cos_i = (2.0 * PI * z[i]).cos();
                    out[i] -= 4.0 * PI * PI * c * ex * (c * sin[i] * sv + cos_i * v[i]);
                }
                out
            }
            Benchmark::Rastrigin => z
                .iter()
                .zip(v)
                .map(|(zi, vi)| (2.0 + 40.0 * PI * PI * (2.0 * PI * zi).cos()) * vi / df)
                .collect(),
        };
        Ok(hv)
    }

    /// `true` when `x` lies in the closed search box.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension
            && x.iter().zip(&self.bounds).all(|(xi, (lo, hi))| *lo <= *xi && *xi <= *hi)
    }
}

impl Objective for ObjectiveSpec {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.eval_value(x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval_grad(x)
    }

    fn hess_vec(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.eval_hess_vec(x, v)
    }

    fn quadratic_diagonal(&self) -> Option<Vec<f64>> {
        if !self.function.is_quadratic() {
            return None;
        }
        let d = self.dimension;
        Some((0..d).map(|i| 2.0 * self.function.quadratic_weight(i, d)).collect())
    }

    fn quadratic_center(&self) -> Option<Vec<f64>> {
        self.function.is_quadratic().then(|| vec![self.shift; self.dimension])
    }
}

/// Outcome of [`fd_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdReport {
    pub grad_rel_err: f64,
    pub hess_rel_err: f64,
    /// Set when `step` is not a positive finite number; errors are then NaN.
    pub degenerate_step: bool,
}

fn rel_err(approx: &[f64], exact: &[f64]) -> f64 {
    let diff = linalg::norm_inf(&linalg::sub(approx, exact));
    diff / linalg::norm_inf(exact).max(1.0)
}

/// Compares the analytic gradient and Hessian-vector oracles against central
/// differences with the given step. The Hessian is probed along every
/// coordinate direction; the largest error is reported.
pub fn fd_check<O: Objective + ?Sized>(obj: &O, x: &[f64], step: f64) -> Result<FdReport> {
    obj.check_dim(x)?;
    if !(step > 0.0 && step.is_finite()) {
        return Ok(FdReport {
            grad_rel_err: f64::NAN,
            hess_rel_err: f64::NAN,
            degenerate_step: true,
        });
    }
    let d = x.len();
    let grad = obj.gradient(x)?;
    let mut fd_grad = vec![0.0; d];
    let mut hess_err: f64 = 0.0;
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..d {
        xp[j] = x[j] + step;
        xm[j] = x[j] - step;
        fd_grad[j] = (obj.value(&xp)? - obj.value(&xm)?) / (2.0 * step);

        let gp = obj.gradient(&xp)?;
        let gm = obj.gradient(&xm)?;
        let fd_col: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * step)).collect();
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        let col = obj.hess_vec(x, &e)?;
        hess_err = hess_err.max(rel_err(&fd_col, &col));

        xp[j] = x[j];
        xm[j] = x[j];
    }
    Ok(FdReport {
        grad_rel_err: rel_err(&fd_grad, &grad),
        hess_rel_err: hess_err,
        degenerate_step: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(f: Benchmark, d: usize) -> ObjectiveSpec {
        ObjectiveSpec::standard(f, d).unwrap()
    }

    #[test]
    fn sphere_at_origin_is_zero() {
        assert_eq!(spec(Benchmark::Sphere, 2).eval_value(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn modified_sphere_at_origin() {
        let v = spec(Benchmark::ModifiedSphere, 10).eval_value(&[0.0; 10]).unwrap();
        assert_relative_eq!(v, -1745.0 / 899.0, epsilon = 1e-15);
        assert_relative_eq!(v, -1.941046, epsilon = 1e-6);
    }

    #[test]
    fn sum_squares_ones() {
        assert_eq!(spec(Benchmark::SumSquares, 3).eval_value(&[1.0; 3]).unwrap(), 6.0);
    }

    #[test]
    fn rastrigin_shifted_minimum() {
        let s = ObjectiveSpec::new(Benchmark::Rastrigin, 1, 15.0, 0.0).unwrap();
        assert_eq!(s.eval_value(&[15.0]).unwrap(), 0.0);
        assert_eq!(s.min_value, 0.0);
        assert_eq!(s.bounds, vec![(11.0, 19.0)]);
    }

    #[test]
    fn gradients_by_hand() {
        assert_eq!(spec(Benchmark::Sphere, 4).eval_grad(&[0.0; 4]).unwrap(), vec![0.0; 4]);
        assert_eq!(
            spec(Benchmark::SumSquares, 2).eval_grad(&[1.0, 1.0]).unwrap(),
            vec![2.0, 4.0]
        );
        let g = spec(Benchmark::Rastrigin, 1).eval_grad(&[0.5]).unwrap();
        assert_relative_eq!(g[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hessian_vector_by_hand() {
        assert_eq!(
            spec(Benchmark::Sphere, 3).eval_hess_vec(&[0.3, -1.0, 2.0], &[1.0, 0.0, 0.0]).unwrap(),
            vec![2.0, 0.0, 0.0]
        );
        assert_eq!(
            spec(Benchmark::SumSquares, 2).eval_hess_vec(&[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            vec![2.0, 4.0]
        );
        // Σ_i Σ_{j≤i} x_j² = 2x₁² + x₂² at d = 2, so the Hessian is diag(4, 2).
        let rhe = spec(Benchmark::RotatedHyperEllipsoid, 2);
        assert_eq!(rhe.eval_hess_vec(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), vec![4.0, 0.0]);
        let fd = fd_check(&rhe, &[0.7, -1.3], 1e-6).unwrap();
        assert!(fd.hess_rel_err < 1e-6);
    }

    #[test]
    fn rhe_matches_double_sum() {
        let s = spec(Benchmark::RotatedHyperEllipsoid, 4);
        let x = [0.5, -1.5, 2.0, 3.25];
        let mut brute = 0.0;
        for i in 0..4 {
            for xj in x.iter().take(i + 1) {
                brute += xj * xj;
            }
        }
        assert_relative_eq!(s.eval_value(&x).unwrap(), brute, epsilon = 1e-12);
    }

    #[test]
    fn ackley_min_value_is_evaluated() {
        let s = spec(Benchmark::Ackley, 1);
        assert_eq!(s.min_value, s.eval_value(&[0.0]).unwrap());
        assert_relative_eq!(s.min_value, E - (-1f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = spec(Benchmark::Sphere, 3);
        assert!(matches!(
            s.eval_value(&[1.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 1 })
        ));
        assert!(s.eval_grad(&[1.0; 4]).is_err());
        assert!(s.eval_hess_vec(&[1.0; 3], &[1.0]).is_err());
    }

    #[test]
    fn fd_check_degenerate_step() {
        let s = spec(Benchmark::Sphere, 2);
        let r = fd_check(&s, &[1.0, 2.0], 0.0).unwrap();
        assert!(r.degenerate_step);
        assert!(r.grad_rel_err.is_nan());
    }

    #[test]
    fn fd_check_ackley_2d() {
        let s = spec(Benchmark::Ackley, 2);
        let r = fd_check(&s, &[1.3, -0.4], 1e-6).unwrap();
        assert!(r.grad_rel_err <= 1e-6, "{r:?}");
        assert!(r.hess_rel_err <= 1e-5, "{r:?}");
    }

    #[test]
    fn names_round_trip() {
        for b in Benchmark::ALL {
            assert_eq!(b.name().parse::<Benchmark>().unwrap(), b);
        }
        assert!("booth".parse::<Benchmark>().is_err());
    }

    #[test]
    fn closed_form_prox_data() {
        let s = spec(Benchmark::SumSquares, 3);
        assert_eq!(s.quadratic_diagonal().unwrap(), vec![2.0, 4.0, 6.0]);
        assert!(spec(Benchmark::Ackley, 2).quadratic_diagonal().is_none());
    }
}
