//! Effective Hamiltonians and effective burning velocities for the inviscid
//! quadratic Hamilton-Jacobi flame model `H(p, x) = |p|^2 + A V(x) . p` on
//! the 2-torus, with level-curve geometry and front propagation on top.
//!
//! The crate computes:
//!
//! - `Hbar_A(p)`, the ergodic constant of the cell problem
//!   `|p + Du|^2 + A V . (p + Du) = Hbar_A(p)`, by two independent monotone
//!   solvers (large-time marching and a discounted approximation) plus a
//!   closed-form oracle for shear flows;
//! - the effective burning velocity
//!   `alpha(p) = inf_{lambda > 0} (1 + Hbar(lambda p)) / lambda` and its unit
//!   level curve, with detection of flat pieces and prediction of their
//!   normals from the flow's Fourier modes;
//! - the weak-flow expansion `Hbar_eps(p) ~ |p|^2 + eps^2 a2(p)`, its
//!   correctors and Diophantine diagnostics;
//! - effective flame fronts `Gamma_t` through the Hopf-Lax formula, including
//!   corner fans and translated flat arcs.
//!
//! Start from [`FlowField`] for the velocity field, [`cell::hbar`] for
//! effective Hamiltonians, [`burnvel::burning_velocity`] for flame speeds and
//! [`front::front_trace`] for moving fronts. The `examples/` directory holds
//! one runnable example per capability; the `effburn` binary drives batch
//! experiments from a JSON config.

pub mod burnvel;
pub mod cell;
pub mod cli;
pub mod config;
pub mod curve;
pub mod error;
pub mod flow;
pub mod front;
pub mod grid;
pub mod parallel;
pub mod perturb;
pub mod search;
pub mod spectral;
pub mod svg;
pub mod vec2;

pub use cell::{hbar, hbar_discounted, hbar_time_marching, HbarResult, Method, SolverConfig};
pub use curve::{detect_flat_pieces, LevelCurve};
pub use error::{Error, Result};
pub use flow::FlowField;
pub use grid::GridFunction;
pub use vec2::Vec2;
