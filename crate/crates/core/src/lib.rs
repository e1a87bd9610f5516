//! Higher-order finite elements on layer-adapted meshes for singularly
//! perturbed semilinear two-point boundary value problems with turning
//! points:
//!
//! ```text
//! -eps u'' + b(x) u' + f(x, u) = 0  on [a, b],   u(a) = nu_-,  u(b) = nu_+
//! ```
//!
//! The crate is `no_std` (it needs `alloc`) and does no IO. File formats and
//! the command-line harness live in the `layerfem-cli` crate.
#![no_std]
// NaN has to fail the `!(a > b)` style argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod expr;
pub mod fem;
pub mod mesh;
pub mod norms;
pub mod presets;
pub mod problem;
pub mod quadrature;

pub use error::Error;
