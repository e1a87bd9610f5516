use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::space::{lagrange, FESpace};
use crate::error::{Error, Result};

/// A function in the finite element space. Values at the two ends are
/// stored separately from the unknowns (zero for the homogeneous space).
/// Adding an affine lift is the same as setting the end values, since
/// affine functions lie in the space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction {
    space: Arc<FESpace>,
    coeffs: Vec<f64>,
    ends: (f64, f64),
}

impl DiscreteFunction {
    pub fn new(space: Arc<FESpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.ndofs() {
            return Err(Error::Invalid(format!(
                "{} coefficients for a space with {} unknowns",
                coeffs.len(),
                space.ndofs()
            )));
        }
        Ok(DiscreteFunction {
            space,
            coeffs,
            ends: (0.0, 0.0),
        })
    }

    pub fn zero(space: Arc<FESpace>) -> Self {
        let n = space.ndofs();
        DiscreteFunction {
            space,
            coeffs: alloc::vec![0.0; n],
            ends: (0.0, 0.0),
        }
    }

    pub fn with_boundary_values(mut self, nu_minus: f64, nu_plus: f64) -> Self {
        self.ends = (nu_minus, nu_plus);
        self
    }

    pub fn space(&self) -> &Arc<FESpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn boundary_values(&self) -> (f64, f64) {
        self.ends
    }

    /// Same function with every nodal value transformed by `g(x, value)`.
    pub fn map_nodes(&self, mut g: impl FnMut(f64, f64) -> f64) -> Self {
        let s = &self.space;
        let last = s.nnodes() - 1;
        DiscreteFunction {
            space: self.space.clone(),
            coeffs: (1..last).map(|i| g(s.global_x(i), self.coeffs[i - 1])).collect(),
            ends: (g(s.mesh().lo(), self.ends.0), g(s.mesh().hi(), self.ends.1)),
        }
    }

    /// Value at global node `g` (boundary values included).
    pub fn node_value(&self, g: usize) -> f64 {
        if g == 0 {
            self.ends.0
        } else if g == self.space.nnodes() - 1 {
            self.ends.1
        } else {
            self.coeffs[g - 1]
        }
    }

    /// Nodal values of cell `i`.
    fn local(&self, cell: usize) -> Vec<f64> {
        let k = self.space.order();
        (0..=k).map(|j| self.node_value(cell * k + j)).collect()
    }

    /// Value and derivative on `cell` at `x` (which must lie in the cell).
    /// Works in the unit coordinate of the cell, like assembly, so that
    /// cells only a few thousand ulps wide stay consistent with the
    /// discrete problem.
    pub fn eval_in_cell(&self, cell: usize, x: f64) -> (f64, f64) {
        let s = &self.space;
        let k = s.order();
        let mesh = s.mesh();
        let (x0, h) = (mesh.points()[cell], mesh.h(cell));
        let t = match (0..=k).find(|&j| s.node_x(cell, j) == x) {
            Some(j) => s.unit_nodes()[j],
            None => (x - x0) / h,
        };
        let (vals, ders) = lagrange(s.unit_nodes(), t);
        let (mut v, mut d) = (0.0, 0.0);
        for (j, u) in self.local(cell).into_iter().enumerate() {
            v += u * vals[j];
            d += u * ders[j];
        }
        (v, d / h)
    }

    /// `u(x)` (`derivative = 0`) or `u'(x)` (`derivative = 1`). At a mesh
    /// point shared by two cells the left cell is used.
    pub fn evaluate(&self, x: f64, derivative: usize) -> Result<f64> {
        let cell = self.space.mesh().locate(x)?;
        let (v, d) = self.eval_in_cell(cell, x);
        match derivative {
            0 => Ok(v),
            1 => Ok(d),
            _ => Err(Error::Invalid(format!("derivative order {derivative} not supported"))),
        }
    }

    /// `(x, u(x))` at every global node plus `m` equidistant interior points
    /// per cell.
    pub fn samples(&self, m: usize) -> Vec<(f64, f64)> {
        let s = &self.space;
        let mesh = s.mesh();
        let mut out = Vec::with_capacity(s.nnodes() + m * mesh.cells());
        for cell in 0..mesh.cells() {
            let (a, b) = (mesh.points()[cell], mesh.points()[cell + 1]);
            let mut xs: Vec<f64> = (0..s.order()).map(|j| s.node_x(cell, j)).collect();
            xs.extend((1..=m).map(|i| a + (b - a) * (i as f64 / (m + 1) as f64)));
            xs.sort_by(|p, q| p.total_cmp(q));
            xs.dedup();
            for x in xs {
                out.push((x, self.eval_in_cell(cell, x).0));
            }
        }
        out.push((mesh.hi(), self.node_value(s.nnodes() - 1)));
        out
    }
}

/// Lagrange interpolant of `g`, end values included.
pub fn try_interpolate(mut g: impl FnMut(f64) -> Result<f64>, space: Arc<FESpace>) -> Result<DiscreteFunction> {
    let (lo, hi) = (space.mesh().lo(), space.mesh().hi());
    let ends = (g(lo)?, g(hi)?);
    let mut coeffs = Vec::with_capacity(space.ndofs());
    for gi in 1..space.nnodes() - 1 {
        coeffs.push(g(space.global_x(gi))?);
    }
    Ok(DiscreteFunction::new(space, coeffs)?.with_boundary_values(ends.0, ends.1))
}

pub fn interpolate(mut g: impl FnMut(f64) -> f64, space: Arc<FESpace>) -> DiscreteFunction {
    try_interpolate(|x| Ok(g(x)), space).expect("infallible interpolation")
}
