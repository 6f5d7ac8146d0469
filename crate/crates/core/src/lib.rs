//! Sample-and-hold stabilization of nonlinear systems with nonsmooth control
//! Lyapunov functions.
//!
//! The crate is organised bottom-up:
//!
//! - [`boxopt`]: deterministic box-constrained minimization with an accuracy knob.
//! - [`field`]: scalar fields and marginal families `V(x) = min_theta F(x; theta)`.
//! - [`nonsmooth`]: directional derivatives, inf-convolution, subgradients and checks.
//! - [`systems`]: the benchmark plants.
//! - [`clf`]: concrete control Lyapunov functions and backstepping constructions.
//! - [`controllers`]: feedback laws evaluated once per sampling interval.
//! - [`sim`]: the sample-and-hold loop, trajectory logs and the stability verdict.
//! - [`experiment`]: configuration-driven sweeps and benchmark matrices.
//!
//! A guide with worked examples lives in `book/`; its code listings are
//! compiled and run as doc-tests of this crate.

// `!(a > b)` is used on purpose so that NaN inputs fail validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boxopt;
pub mod clf;
pub mod controllers;
pub mod error;
pub mod experiment;
pub mod field;
mod linalg;
pub mod nonsmooth;
pub mod sim;
pub mod systems;

pub use error::{Error, Result};
pub use field::{MarginalFamily, ScalarField};
pub use systems::ControlSystem;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/calculus.md")]
    mod calculus {}
    #[doc = include_str!("../../../book/src/backstepping.md")]
    mod backstepping {}
    #[doc = include_str!("../../../book/src/controllers.md")]
    mod controllers {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
