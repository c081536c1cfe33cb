//! Low-rank adaptation as a constrained ODE on the balanced manifold.
//!
//! The crate evaluates the closed-form field `F(A, B)` whose flow keeps
//! `AAᵀ = BᵀB` while matching the full-gradient dynamic of `W = W_pt + BA`
//! as closely as the factorization allows, integrates it with Euler, Heun
//! and classical Runge-Kutta steps, and ships the baselines and measurements
//! needed to compare them.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod lora;
pub mod matrix;
pub mod problems;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use lora::{field_eval, flow_rhs_full, FieldEval, LoraFactors, Objective};
pub use matrix::Matrix;
pub use rng::Rng;
pub use solvers::{Scheme, SolverConfig, TrajectoryLog};
