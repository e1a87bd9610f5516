use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fem::{solve_problem, DiscreteFunction, FESpace, NewtonOptions};
use crate::mesh::Mesh;
use crate::problem::BoundaryValueProblem;

/// How a fine-mesh reference was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRecipe {
    pub mesh_family: String,
    pub n_ref: usize,
    pub k_ref: usize,
}

type Callable = Arc<dyn Fn(f64) -> Result<(f64, f64)> + Send + Sync>;

/// The function errors are measured against.
#[derive(Clone)]
pub enum Reference {
    /// Closed form `u` with derivative `du`.
    Exact { u: Expr, du: Expr },
    /// Any function returning `(value, derivative)`.
    Callable { name: String, f: Callable },
    /// Discrete solution on a finer mesh.
    FineMesh {
        solution: DiscreteFunction,
        recipe: ReferenceRecipe,
    },
}

impl core::fmt::Debug for Reference {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.describe())
    }
}

impl Reference {
    /// Exact reference; the derivative is obtained symbolically.
    pub fn exact(u: Expr) -> Self {
        let du = u.differentiate("x");
        Reference::Exact { u, du }
    }

    pub fn callable(name: &str, f: impl Fn(f64) -> Result<(f64, f64)> + Send + Sync + 'static) -> Self {
        Reference::Callable {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn fine_mesh(solution: DiscreteFunction, recipe: ReferenceRecipe) -> Self {
        Reference::FineMesh { solution, recipe }
    }

    pub fn describe(&self) -> String {
        match self {
            Reference::Exact { u, .. } => format!("exact: {u}"),
            Reference::Callable { name, .. } => format!("function: {name}"),
            Reference::FineMesh { recipe, .. } => format!(
                "fine mesh: {} N_ref={} k_ref={}",
                recipe.mesh_family, recipe.n_ref, recipe.k_ref
            ),
        }
    }

    pub(crate) fn breakpoints(&self) -> Option<&[f64]> {
        match self {
            Reference::FineMesh { solution, .. } => Some(solution.space().mesh().points()),
            _ => None,
        }
    }

    pub(crate) fn check_domain(&self, lo: f64, hi: f64) -> Result<()> {
        if let Reference::FineMesh { solution, .. } = self {
            let m = solution.space().mesh();
            if m.lo() > lo || m.hi() < hi {
                return Err(Error::Invalid(format!(
                    "reference on [{}, {}] does not cover [{lo}, {hi}]",
                    m.lo(),
                    m.hi()
                )));
            }
        }
        Ok(())
    }

    /// Reference cell containing the open piece `(a, b)`.
    pub(crate) fn locate_piece(&self, a: f64, b: f64) -> Result<Option<usize>> {
        match self {
            Reference::FineMesh { solution, .. } => solution.space().mesh().locate(0.5 * (a + b)).map(Some),
            _ => Ok(None),
        }
    }

    /// `(value, derivative)` at `x`; `cell` selects the fine-mesh cell.
    pub fn eval(&self, x: f64, cell: Option<usize>) -> Result<(f64, f64)> {
        match self {
            Reference::Exact { u, du } => {
                let at = |e: &Expr| e.eval_x(x).map_err(|source| Error::ExprAt { x, source });
                Ok((at(u)?, at(du)?))
            }
            Reference::Callable { f, .. } => f(x),
            Reference::FineMesh { solution, .. } => {
                let c = match cell {
                    Some(c) => c,
                    None => solution.space().mesh().locate(x)?,
                };
                Ok(solution.eval_in_cell(c, x))
            }
        }
    }
}

/// How to build a reference for a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceStrategy {
    /// Known solution; `du` is derived symbolically when absent.
    Exact { u: Expr, du: Option<Expr> },
    /// Solve with order `k + 1` on the largest study mesh with every cell
    /// split into `multiplier` equal cells.
    FineMesh { multiplier: usize },
}

/// Builds the reference. For the fine-mesh strategy `build_mesh(N)` must
/// return the study mesh with `N` cells.
pub fn make_reference(
    problem: &BoundaryValueProblem,
    strategy: &ReferenceStrategy,
    largest_n: usize,
    k: usize,
    build_mesh: impl Fn(usize) -> Result<Mesh>,
) -> Result<Reference> {
    match strategy {
        ReferenceStrategy::Exact { u, du: Some(du) } => Ok(Reference::Exact {
            u: u.clone(),
            du: du.clone(),
        }),
        ReferenceStrategy::Exact { u, du: None } => Ok(Reference::exact(u.clone())),
        ReferenceStrategy::FineMesh { multiplier } => {
            let n_ref = multiplier * largest_n;
            let mesh = build_mesh(largest_n)?.refine(*multiplier)?;
            let family = mesh.provenance().generator.clone();
            let space = Arc::new(FESpace::new(mesh, k + 1, Default::default())?);
            let solution = solve_problem(&space, problem, &NewtonOptions::default())?;
            Ok(Reference::fine_mesh(
                solution,
                ReferenceRecipe {
                    mesh_family: family,
                    n_ref,
                    k_ref: k + 1,
                },
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn exact_wraps_expressions() {
        let r = make_reference(
            &BoundaryValueProblem::linear(
                0.0,
                1.0,
                1.0,
                parse("0").unwrap(),
                parse("1").unwrap(),
                parse("1").unwrap(),
            )
            .unwrap(),
            &ReferenceStrategy::Exact {
                u: parse("sin(x)").unwrap(),
                du: None,
            },
            64,
            1,
            |n| Mesh::uniform(0.0, 1.0, n),
        )
        .unwrap();
        let (v, d) = r.eval(0.5, None).unwrap();
        assert_eq!(v, libm::sin(0.5));
        assert!((d - libm::cos(0.5)).abs() < 1e-15);
    }

    #[test]
    fn fine_mesh_policy() {
        let p = BoundaryValueProblem::linear(
            0.0,
            1.0,
            1e-2,
            parse("1").unwrap(),
            parse("1").unwrap(),
            parse("1").unwrap(),
        )
        .unwrap();
        let r = make_reference(&p, &ReferenceStrategy::FineMesh { multiplier: 4 }, 512, 1, |n| {
            Mesh::uniform(0.0, 1.0, n)
        })
        .unwrap();
        match r {
            Reference::FineMesh { recipe, solution } => {
                assert_eq!(recipe.n_ref, 2048);
                assert_eq!(recipe.k_ref, 2);
                assert_eq!(solution.space().order(), 2);
            }
            _ => panic!(),
        }
    }
}
