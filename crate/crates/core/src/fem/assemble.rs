use alloc::vec;

use super::banded::{BandedMatrix, BandedSystem};
use super::space::FESpace;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::problem::TransformedProblem;

/// Pointwise coefficients `(b, c, f)` of `-eps u'' + b u' + c u = f`.
pub trait LinearCoefficients {
    fn at(&self, x: f64) -> Result<(f64, f64, f64)>;
}

/// Coefficients given as expressions in `x`.
#[derive(Debug, Clone, Copy)]
pub struct ExprCoefficients<'a> {
    pub b: &'a Expr,
    pub c: &'a Expr,
    pub f: &'a Expr,
}

impl LinearCoefficients for ExprCoefficients<'_> {
    fn at(&self, x: f64) -> Result<(f64, f64, f64)> {
        let e = |v: &Expr| v.eval_x(x).map_err(|source| Error::ExprAt { x, source });
        Ok((e(self.b)?, e(self.c)?, e(self.f)?))
    }
}

impl LinearCoefficients for TransformedProblem {
    fn at(&self, x: f64) -> Result<(f64, f64, f64)> {
        let t = self.coefficients(x)?;
        Ok((t.b, t.c, t.rhs))
    }
}

impl<F: Fn(f64) -> Result<(f64, f64, f64)>> LinearCoefficients for F {
    fn at(&self, x: f64) -> Result<(f64, f64, f64)> {
        self(x)
    }
}

pub(crate) fn in_cell(cell: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::ExprAt { source, .. } => Error::ExprInCell { cell, source },
        other => other,
    }
}

/// Assembles the Galerkin system for the linear problem with `q`-point
/// Gauss–Legendre quadrature per cell (`q = k + 2` is the usual choice).
pub fn assemble_linear_with(
    space: &FESpace,
    eps: f64,
    coeffs: &impl LinearCoefficients,
    q: usize,
) -> Result<BandedSystem> {
    let k = space.order();
    let n = space.ndofs();
    let mut a = BandedMatrix::zeros(n, k, k);
    let mut rhs = vec![0.0; n];
    let table = space.basis_table(q);
    let mesh = space.mesh();
    let mut local_a = vec![0.0; (k + 1) * (k + 1)];
    let mut local_f = vec![0.0; k + 1];
    for cell in 0..mesh.cells() {
        let (x0, h) = (mesh.points()[cell], mesh.h(cell));
        local_a.iter_mut().for_each(|v| *v = 0.0);
        local_f.iter_mut().for_each(|v| *v = 0.0);
        for qi in 0..table.points.len() {
            let x = x0 + h * table.points[qi];
            let (b, c, f) = coeffs.at(x).map_err(in_cell(cell))?;
            let w = table.weights[qi] * h;
            let phi = &table.values[qi];
            let dphi = &table.derivs[qi];
            for i in 0..=k {
                let (pi, di) = (phi[i], dphi[i] / h);
                local_f[i] += w * f * pi;
                for j in 0..=k {
                    let (pj, dj) = (phi[j], dphi[j] / h);
                    local_a[i * (k + 1) + j] += w * (eps * dj * di + b * dj * pi + c * pj * pi);
                }
            }
        }
        for i in 0..=k {
            let Some(di) = space.dof(cell, i) else { continue };
            rhs[di] += local_f[i];
            for j in 0..=k {
                if let Some(dj) = space.dof(cell, j) {
                    a.add(di, dj, local_a[i * (k + 1) + j]);
                }
            }
        }
    }
    BandedSystem::new(a, rhs)
}

/// Assembles `int eps u' v' + b u' v + c u v = int f v` with `q = k + 2`.
pub fn assemble_linear(space: &FESpace, eps: f64, b: &Expr, c: &Expr, f: &Expr) -> Result<BandedSystem> {
    assemble_linear_with(space, eps, &ExprCoefficients { b, c, f }, space.order() + 2)
}

#[cfg(test)]
mod tests {
    use super::super::banded::solve_banded;
    use super::super::space::NodeRule;
    use super::*;
    use crate::expr::parse;
    use crate::mesh::Mesh;

    #[test]
    fn one_dof_system() {
        let s = FESpace::new(Mesh::uniform(0.0, 1.0, 2).unwrap(), 1, NodeRule::Uniform).unwrap();
        let (zero, one) = (parse("0").unwrap(), parse("1").unwrap());
        let sys = assemble_linear(&s, 1.0, &zero, &zero, &one).unwrap();
        assert_eq!(sys.matrix.dim(), 1);
        assert!((sys.matrix.get(0, 0) - 4.0).abs() < 1e-14);
        assert!((sys.rhs[0] - 0.5).abs() < 1e-15);
        let u = solve_banded(&sys).unwrap();
        assert!((u[0] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn zero_load() {
        let s = FESpace::new(Mesh::uniform(0.0, 1.0, 8).unwrap(), 3, NodeRule::GaussLobatto).unwrap();
        let (zero, one) = (parse("0").unwrap(), parse("1").unwrap());
        let sys = assemble_linear(&s, 1.0, &one, &one, &zero).unwrap();
        assert!(sys.rhs.iter().all(|&v| v == 0.0));
        assert!(solve_banded(&sys).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn convection_entries_are_half() {
        for h in [0.25, 0.1] {
            let n = (1.0 / h) as usize;
            let s = FESpace::new(Mesh::uniform(0.0, 1.0, n).unwrap(), 1, NodeRule::Uniform).unwrap();
            let (zero, one) = (parse("0").unwrap(), parse("1").unwrap());
            let diff = assemble_linear(&s, 1.0, &zero, &zero, &zero).unwrap();
            let full = assemble_linear(&s, 1.0, &one, &zero, &zero).unwrap();
            let conv = |r, c| full.matrix.get(r, c) - diff.matrix.get(r, c);
            assert!((conv(1, 2) - 0.5).abs() < 1e-14);
            assert!((conv(2, 1) + 0.5).abs() < 1e-14);
            assert!(conv(1, 1).abs() < 1e-14);
        }
    }

    #[test]
    fn expression_errors_name_the_cell() {
        let s = FESpace::new(Mesh::uniform(-1.0, 1.0, 4).unwrap(), 1, NodeRule::Uniform).unwrap();
        let (zero, bad) = (parse("0").unwrap(), parse("ln(x)").unwrap());
        let r = assemble_linear(&s, 1.0, &zero, &bad, &zero);
        assert!(matches!(r, Err(Error::ExprInCell { cell: 0, .. })), "{r:?}");
    }
}
