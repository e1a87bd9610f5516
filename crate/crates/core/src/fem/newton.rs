use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::assemble::{assemble_linear_with, in_cell, ExprCoefficients};
use super::banded::{solve_banded, BandedMatrix, BandedSystem};
use super::function::DiscreteFunction;
use super::space::FESpace;
use super::NewtonStep;
use crate::error::{Error, Result};
use crate::problem::{homogenize, BoundaryValueProblem, Lift, Reaction};

/// Step-length control for Newton.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Damping {
    /// Always take the full step.
    None,
    /// Halve the step until `||R(U + a dU)|| <= (1 - 1e-4 a) ||R(U)||`.
    Armijo { max_halvings: usize },
}

impl Default for Damping {
    fn default() -> Self {
        Damping::Armijo { max_halvings: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Stop once `||R||_2 <= tol (1 + ||R_0||_2)`.
    pub tol: f64,
    pub max_iter: usize,
    pub damping: Damping,
    /// Gauss points per cell; `None` means `k + 2`.
    pub quad: Option<usize>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 50,
            damping: Damping::default(),
            quad: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub solution: DiscreteFunction,
    /// `||R_0||_2` at the initial guess.
    pub initial_residual: f64,
    pub trace: Vec<NewtonStep>,
}

fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|a| a * a).sum())
}

/// Residual `R(W)_i = B(w, phi_i)` of the homogenised problem and, when
/// asked for, the Jacobian with `c` replaced by `df/du(x, w(x))`.
fn residual(
    space: &FESpace,
    p: &BoundaryValueProblem,
    w: &[f64],
    q: usize,
    jacobian: bool,
) -> Result<(Vec<f64>, Option<BandedMatrix>)> {
    let k = space.order();
    let n = space.ndofs();
    let table = space.basis_table(q);
    let mesh = space.mesh();
    let mut r = vec![0.0; n];
    let mut jac = jacobian.then(|| BandedMatrix::zeros(n, k, k));
    let mut local = vec![0.0; k + 1];
    for cell in 0..mesh.cells() {
        let (x0, h) = (mesh.points()[cell], mesh.h(cell));
        for (j, v) in local.iter_mut().enumerate() {
            *v = space.dof(cell, j).map_or(0.0, |d| w[d]);
        }
        for qi in 0..table.points.len() {
            let x = x0 + h * table.points[qi];
            let wt = table.weights[qi] * h;
            let phi = &table.values[qi];
            let dphi = &table.derivs[qi];
            let u: f64 = (0..=k).map(|j| local[j] * phi[j]).sum();
            let du: f64 = (0..=k).map(|j| local[j] * dphi[j]).sum::<f64>() / h;
            let b = p.b_at(x).map_err(in_cell(cell))?;
            let f = p.f_at(x, u).map_err(in_cell(cell))?;
            let dfdu = if jacobian {
                p.dfdu_at(x, u).map_err(in_cell(cell))?
            } else {
                0.0
            };
            for i in 0..=k {
                let Some(di) = space.dof(cell, i) else { continue };
                let (pi, dpi) = (phi[i], dphi[i] / h);
                r[di] += wt * (p.eps * du * dpi + b * du * pi + f * pi);
                if let Some(jm) = jac.as_mut() {
                    for j in 0..=k {
                        if let Some(dj) = space.dof(cell, j) {
                            let (pj, dpj) = (phi[j], dphi[j] / h);
                            jm.add(di, dj, wt * (p.eps * dpj * dpi + b * dpj * pi + dfdu * pj * pi));
                        }
                    }
                }
            }
        }
    }
    Ok((r, jac))
}

fn with_lift(space: &Arc<FESpace>, w: Vec<f64>, lift: &Lift) -> Result<DiscreteFunction> {
    let coeffs = w
        .iter()
        .enumerate()
        .map(|(d, v)| v + lift.value(space.global_x(d + 1)))
        .collect();
    Ok(DiscreteFunction::new(space.clone(), coeffs)?.with_boundary_values(lift.nu_minus, lift.nu_plus))
}

/// Damped Newton for `B(u, phi_i) = 0` over the space, with the problem's
/// boundary values imposed through the affine lift. The boundary values of
/// `initial` are ignored. At least one Newton step is always taken.
pub fn solve_semilinear(
    space: &Arc<FESpace>,
    problem: &BoundaryValueProblem,
    initial: &DiscreteFunction,
    opts: &NewtonOptions,
) -> Result<NewtonSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::Invalid(format!(
            "Newton tolerance {} must be positive",
            opts.tol
        )));
    }
    if initial.coeffs().len() != space.ndofs() {
        return Err(Error::Invalid("initial guess lives in a different space".into()));
    }
    let (hp, lift) = homogenize(problem);
    let q = opts.quad.unwrap_or(space.order() + 2);
    let mut w: Vec<f64> = initial
        .coeffs()
        .iter()
        .enumerate()
        .map(|(d, v)| v - lift.value(space.global_x(d + 1)))
        .collect();
    let (mut r, _) = residual(space, &hp, &w, q, false)?;
    let r0 = norm2(&r);
    let target = opts.tol * (1.0 + r0);
    let mut rn = r0;
    let mut trace = Vec::new();
    for it in 1..=opts.max_iter {
        let (_, jac) = residual(space, &hp, &w, q, true)?;
        let sys = BandedSystem::new(jac.expect("jacobian requested"), r.clone())?;
        let delta = solve_banded(&sys)?;
        let update_norm = delta.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
        let halvings = match opts.damping {
            Damping::None => 0,
            Damping::Armijo { max_halvings } => max_halvings,
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        for attempt in 0..=halvings {
            let trial: Vec<f64> = w.iter().zip(&delta).map(|(a, d)| a - alpha * d).collect();
            let (rt, _) = residual(space, &hp, &trial, q, false)?;
            let nt = norm2(&rt);
            let ok = match opts.damping {
                Damping::None => nt.is_finite(),
                Damping::Armijo { .. } => nt <= (1.0 - 1e-4 * alpha) * rn || nt <= target,
            };
            if ok {
                accepted = Some((trial, rt, nt));
                break;
            }
            if attempt < halvings {
                alpha *= 0.5;
            }
        }
        let Some((trial, rt, nt)) = accepted else {
            return Err(Error::Newton {
                reason: format!(
                    "line search failed at ||R|| = {rn:e} (the discrete problem has a unique solution; Newton stagnated)"
                ),
                trace,
            });
        };
        w = trial;
        r = rt;
        rn = nt;
        trace.push(NewtonStep {
            iteration: it,
            residual: rn,
            damping: alpha,
            update_norm,
        });
        if rn <= target {
            return Ok(NewtonSolution {
                solution: with_lift(space, w, &lift)?,
                initial_residual: r0,
                trace,
            });
        }
    }
    Err(Error::Newton {
        reason: format!("no convergence in {} iterations, ||R|| = {rn:e}", opts.max_iter),
        trace,
    })
}

/// Galerkin solution of a linear problem, boundary values included.
pub fn solve_linear(
    space: &Arc<FESpace>,
    problem: &BoundaryValueProblem,
    quad: Option<usize>,
) -> Result<DiscreteFunction> {
    let (hp, lift) = homogenize(problem);
    let Reaction::Linear { c, rhs } = &hp.reaction else {
        return Err(Error::Invalid("solve_linear needs a linear problem".into()));
    };
    let coeffs = ExprCoefficients { b: &hp.b, c, f: rhs };
    let sys = assemble_linear_with(space, hp.eps, &coeffs, quad.unwrap_or(space.order() + 2))?;
    with_lift(space, solve_banded(&sys)?, &lift)
}

/// Linear problems are solved directly, semilinear ones by Newton from the
/// affine lift of the boundary values.
pub fn solve_problem(
    space: &Arc<FESpace>,
    problem: &BoundaryValueProblem,
    opts: &NewtonOptions,
) -> Result<DiscreteFunction> {
    if problem.is_linear() {
        solve_linear(space, problem, opts.quad)
    } else {
        let init = DiscreteFunction::zero(space.clone());
        let init = init.map_nodes(|x, _| {
            (problem.nu_minus * (problem.hi - x) + problem.nu_plus * (x - problem.lo)) / (problem.hi - problem.lo)
        });
        Ok(solve_semilinear(space, problem, &init, opts)?.solution)
    }
}

#[cfg(test)]
mod tests {
    use super::super::function::interpolate;
    use super::super::space::NodeRule;
    use super::*;
    use crate::expr::parse;
    use crate::mesh::Mesh;
    use core::f64::consts::PI;

    fn space(n: usize, k: usize) -> Arc<FESpace> {
        Arc::new(FESpace::new(Mesh::uniform(0.0, 1.0, n).unwrap(), k, NodeRule::GaussLobatto).unwrap())
    }

    #[test]
    fn affine_residual_needs_one_full_step() {
        let s = space(10, 2);
        let lin = BoundaryValueProblem::semilinear(
            0.0,
            1.0,
            0.1,
            parse("1").unwrap(),
            parse("(1 + x) * u - exp(x)").unwrap(),
        )
        .unwrap()
        .with_boundary_values(1.0, -2.0);
        let init = interpolate(|x| libm::cos(7.0 * x) * 3.0, s.clone());
        let out = solve_semilinear(&s, &lin, &init, &NewtonOptions::default()).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.trace[0].damping, 1.0);
        let lp = BoundaryValueProblem::linear(
            0.0,
            1.0,
            0.1,
            parse("1").unwrap(),
            parse("1 + x").unwrap(),
            parse("exp(x)").unwrap(),
        )
        .unwrap()
        .with_boundary_values(1.0, -2.0);
        let direct = solve_linear(&s, &lp, None).unwrap();
        for (a, b) in out.solution.coeffs().iter().zip(direct.coeffs()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(out.solution.evaluate(0.0, 0).unwrap(), 1.0);
        assert_eq!(out.solution.evaluate(1.0, 0).unwrap(), -2.0);
    }

    #[test]
    fn trivial_problem_stays_zero() {
        let s = space(6, 3);
        let p = BoundaryValueProblem::semilinear(0.0, 1.0, 1.0, parse("0").unwrap(), parse("u").unwrap()).unwrap();
        let out = solve_semilinear(&s, &p, &DiscreteFunction::zero(s.clone()), &NewtonOptions::default()).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert!(out.solution.coeffs().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cubic_reaction_converges_quadratically() {
        // u* = sin(pi x), eps = 1, b = 0: g = pi^2 sin + sin + sin^3
        let s = space(16, 2);
        let f = parse("u + u^3 - (pi^2 * sin(pi*x) + sin(pi*x) + sin(pi*x)^3)").unwrap();
        let p = BoundaryValueProblem::semilinear(0.0, 1.0, 1.0, parse("0").unwrap(), f).unwrap();
        let out = solve_semilinear(&s, &p, &DiscreteFunction::zero(s.clone()), &NewtonOptions::default()).unwrap();
        assert!(out.trace.len() <= 8, "{:?}", out.trace);
        let mut prev = out.initial_residual;
        for st in &out.trace {
            assert!(st.residual < prev);
            if prev < 1e-2 {
                assert!(st.residual <= 10.0 * prev * prev + 1e-12, "{:?}", out.trace);
            }
            prev = st.residual;
        }
        let err = (0..=100)
            .map(|i| i as f64 / 100.0)
            .map(|x| (out.solution.evaluate(x, 0).unwrap() - libm::sin(PI * x)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn iteration_cap_reports_trace() {
        let s = space(8, 1);
        let f = parse("u + u^3 - 100").unwrap();
        let p = BoundaryValueProblem::semilinear(0.0, 1.0, 1.0, parse("0").unwrap(), f).unwrap();
        let opts = NewtonOptions {
            max_iter: 1,
            ..NewtonOptions::default()
        };
        match solve_semilinear(&s, &p, &DiscreteFunction::zero(s.clone()), &opts) {
            Err(Error::Newton { trace, .. }) => assert_eq!(trace.len(), 1),
            other => panic!("{other:?}"),
        }
    }
}
