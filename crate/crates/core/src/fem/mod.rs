//! Continuous order-`k` Lagrange elements, Galerkin assembly, a banded
//! direct solver and damped Newton for the semilinear problem.

mod assemble;
mod banded;
mod function;
mod newton;
mod space;

pub use assemble::{assemble_linear, assemble_linear_with, ExprCoefficients, LinearCoefficients};
pub use banded::{solve_banded, BandedLu, BandedMatrix, BandedSystem};
pub use function::{interpolate, try_interpolate, DiscreteFunction};
pub use newton::{solve_linear, solve_problem, solve_semilinear, Damping, NewtonOptions, NewtonSolution};
pub use space::{BasisTable, FESpace, NodeRule};

/// One accepted Newton update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonStep {
    pub iteration: usize,
    /// `||R||_2` after the update.
    pub residual: f64,
    /// Damping factor that was accepted.
    pub damping: f64,
    /// `||delta U||_inf` of the undamped update.
    pub update_norm: f64,
}
