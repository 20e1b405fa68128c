//! Swarm-based inertial minimization.
//!
//! The crate provides single-agent inertial schemes for the damped system
//!
//! ```text
//! x'' + (α/t) x' − (α/t) <∇F(x), x'> 1 + γ(t) ∇²F(x) x' + β(t) ∇F(x) = 0
//! ```
//!
//! (a fully implicit discretization, an implicit–explicit reduced-basis
//! integrator and two proximal schemes), the IPAHD, Nesterov and gradient
//! descent baselines, a mass-transfer swarm driver that wraps any of them,
//! Lyapunov-energy diagnostics and a seeded benchmark harness.
//!
//! Modules:
//!
//! * [`objective`] – benchmark objectives with analytic gradients and
//!   Hessian-vector products.
//! * [`integrators`] – the seven single-agent update rules, the proximal
//!   solver and the reduced-basis IMEX integrator.
//! * [`swarm`] – agents, mass communication, merging and the swarm loop.
//! * [`diagnostics`] – discrete energies, convergence-rate estimation and
//!   stopping tests.
//! * [`harness`] – experiment configuration, batch drivers and export.

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod integrators;
pub mod linalg;
pub mod objective;
pub mod swarm;

pub use error::{Error, Result};
