//! Spectral variational solver and radial asymptotics laboratory for the
//! nonlocal critical problem
//!
//! ```text
//! -Δu = γ (-Δ)^{-m} u + |u|^{p-1} u   in Ω,   u = 0 on ∂Ω.
//! ```
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; IO, configuration files and the command line
//! live in the companion `nlbn` crate.
//!
//! * [`spectral`]: exact Dirichlet eigencalculus on boxes, powers `(-Δ)^s`.
//! * [`energy`]: the scalar and system functionals, Riesz gradients,
//!   Rayleigh quotients and the closed-form Nehari ray level.
//! * [`solver`]: Nehari descent, climbing-string mountain pass, the
//!   Cahn–Hilliard flow and the γ threshold scan.
//! * [`chain`]: the `m + 1` component elliptic system and its equivalence
//!   with the scalar problem.
//! * [`bubble`]: radial quadrature in dimension `N`, Talenti bubbles, the
//!   Sobolev constant, ε-asymptotics and the minimax level gap.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bubble;
pub mod chain;
pub mod energy;
mod error;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
