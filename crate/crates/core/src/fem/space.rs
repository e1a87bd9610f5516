use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{gauss_legendre, gauss_lobatto_nodes};

/// Placement of the `k - 1` interior nodes of each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeRule {
    Uniform,
    #[default]
    GaussLobatto,
}

impl NodeRule {
    pub fn name(self) -> &'static str {
        match self {
            NodeRule::Uniform => "uniform",
            NodeRule::GaussLobatto => "gauss-lobatto",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(NodeRule::Uniform),
            "gauss-lobatto" | "lobatto" => Some(NodeRule::GaussLobatto),
            _ => None,
        }
    }
}

/// Continuous piecewise polynomials of degree `k` on a mesh, vanishing at
/// both ends. Global node `g = i k + j` is local node `j` of cell `i`; the
/// unknowns are the interior global nodes `1 .. N k - 1` (dof `g - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct FESpace {
    mesh: Mesh,
    k: usize,
    rule: NodeRule,
    /// Local node positions in `[0, 1]`.
    unit_nodes: Vec<f64>,
}

/// Basis values and derivatives (with respect to the unit coordinate) at
/// the points of a quadrature rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// `values[q][j]`.
    pub values: Vec<Vec<f64>>,
    /// `derivs[q][j]`, derivative in the unit coordinate.
    pub derivs: Vec<Vec<f64>>,
}

/// Lagrange basis on `nodes` at `t`: values and first derivatives.
pub(crate) fn lagrange(nodes: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
    let n = nodes.len();
    let mut vals = Vec::with_capacity(n);
    let mut ders = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = 1.0;
        for m in 0..n {
            if m != j {
                v *= (t - nodes[m]) / (nodes[j] - nodes[m]);
            }
        }
        // derivative: sum over the dropped factor
        let mut d = 0.0;
        for l in 0..n {
            if l == j {
                continue;
            }
            let mut p = 1.0 / (nodes[j] - nodes[l]);
            for m in 0..n {
                if m != j && m != l {
                    p *= (t - nodes[m]) / (nodes[j] - nodes[m]);
                }
            }
            d += p;
        }
        vals.push(v);
        ders.push(d);
    }
    (vals, ders)
}

impl FESpace {
    pub fn new(mesh: Mesh, k: usize, rule: NodeRule) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("polynomial order must be at least 1".into()));
        }
        if mesh.cells() * k < 2 {
            return Err(Error::Invalid(format!(
                "space with N = {} and k = {k} has no unknowns",
                mesh.cells()
            )));
        }
        let unit_nodes: Vec<f64> = match rule {
            NodeRule::Uniform => (0..=k).map(|j| j as f64 / k as f64).collect(),
            NodeRule::GaussLobatto => gauss_lobatto_nodes(k + 1)
                .into_iter()
                .map(|t| 0.5 * (t + 1.0))
                .collect(),
        };
        Ok(FESpace {
            mesh,
            k,
            rule,
            unit_nodes,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn rule(&self) -> NodeRule {
        self.rule
    }

    pub fn unit_nodes(&self) -> &[f64] {
        &self.unit_nodes
    }

    /// Number of unknowns, `N k - 1`.
    pub fn ndofs(&self) -> usize {
        self.mesh.cells() * self.k - 1
    }

    /// Number of global nodes including both ends, `N k + 1`.
    pub fn nnodes(&self) -> usize {
        self.mesh.cells() * self.k + 1
    }

    /// Position of local node `j` of cell `i`. Cell endpoints are the mesh
    /// points themselves.
    pub fn node_x(&self, cell: usize, j: usize) -> f64 {
        let p = self.mesh.points();
        if j == 0 {
            p[cell]
        } else if j == self.k {
            p[cell + 1]
        } else {
            p[cell] + (p[cell + 1] - p[cell]) * self.unit_nodes[j]
        }
    }

    /// Position of global node `g`.
    pub fn global_x(&self, g: usize) -> f64 {
        if g == self.nnodes() - 1 {
            self.mesh.hi()
        } else {
            self.node_x(g / self.k, g % self.k)
        }
    }

    /// Unknown index of local node `j` of cell `i`, or `None` at the two
    /// ends of the interval.
    pub fn dof(&self, cell: usize, j: usize) -> Option<usize> {
        let g = cell * self.k + j;
        (g > 0 && g < self.nnodes() - 1).then(|| g - 1)
    }

    /// Basis table for `q`-point Gauss–Legendre quadrature.
    pub fn basis_table(&self, q: usize) -> BasisTable {
        let rule = gauss_legendre(q);
        let points: Vec<f64> = rule.nodes.iter().map(|t| 0.5 * (t + 1.0)).collect();
        let weights: Vec<f64> = rule.weights.iter().map(|w| 0.5 * w).collect();
        let (values, derivs) = points.iter().map(|&t| lagrange(&self.unit_nodes, t)).unzip();
        BasisTable {
            points,
            weights,
            values,
            derivs,
        }
    }
}
