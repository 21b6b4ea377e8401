//! Conformal (Penrose) machinery for exterior Dirichlet wave equations in three
//! space dimensions.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! - [`geometry`]: the map between Minkowski space and the Einstein diamond,
//!   the conformal factor, stereographic charts and the image of a spherical
//!   obstacle.
//! - [`nullform`]: exact classification of quadratic and cubic symbols against
//!   the null condition.
//! - [`cylinder`]: radial differential operators on `R x S^3` and slice
//!   quadrature.
//! - [`compat`]: compatibility functions of the Dirichlet-Cauchy problem via
//!   truncated time-Taylor arithmetic.
//! - [`solver`]: a radially symmetric leapfrog solver outside a ball and the
//!   pushforward of its output to the cylinder.
//! - [`analysis`]: decay fits, decay certificates, energy and weighted-norm
//!   monitors.
//! - [`checks`]: named numerical certificates built from the pieces above.
#![no_std]
// test builds link std, whose inherent float methods shadow `Float`
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod checks;
pub mod compat;
pub mod cylinder;
mod error;
pub mod fd;
pub mod geometry;
pub mod nullform;
pub mod solver;

pub use error::{Error, Result};
