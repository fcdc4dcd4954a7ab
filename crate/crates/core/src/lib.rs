//! Numerics for the advected MEMS pull-in problem
//!
//! ```text
//!   -Δu + c(x)·∇u = λ / (1 - u)²   in Ω,     u = 0 on ∂Ω
//! ```
//!
//! The crate is `no_std` (it needs `alloc`). It provides
//!
//! * [`grid`]: uniform interval, radial-ball and rectangle grids with dual-cell quadrature,
//! * [`fieldexpr`]: a small expression language for coefficient fields,
//! * [`operators`]: sparse assembly of the advection–diffusion, weighted divergence-form and
//!   conservative flux generators,
//! * [`hodge`]: the decomposition `c = -∇γ + a` with `div(e^γ a) = 0`,
//! * [`solver`]: damped Newton, minimal-branch continuation with pull-in bracketing, and a
//!   radial shooting oracle,
//! * [`spectral`]: principal eigenpairs of non-selfadjoint Dirichlet operators,
//! * [`ineq`]: discrete checks of the Hardy, energy and L^p estimates along a branch.
//!
//! File formats and the command-line front end live in the `pullin` crate.
#![no_std]
#![deny(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod math;

pub mod fieldexpr;
pub mod grid;
pub mod hodge;
pub mod ineq;
pub mod linalg;
pub mod operators;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Field, Grid, GridKind, VectorField};
