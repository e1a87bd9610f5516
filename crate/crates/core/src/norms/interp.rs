use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::MAX_NORM_EXTRA_SAMPLES;
use crate::error::{Error, Result};
use crate::fem::{interpolate, FESpace, NodeRule};
use crate::mesh::Mesh;
use crate::quadrature::gauss_legendre;

/// Model layer functions, `d = |x - at|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerFunction {
    /// `exp(-beta d / eps_tilde)`.
    Exponential { eps_tilde: f64, beta: f64, at: f64 },
    /// `(sqrt(eps) + d)^lambda`; for `lambda = 0` the non-constant
    /// `d / (sqrt(eps) + d)`, which obeys the same derivative bounds.
    Power { eps: f64, lambda: f64, at: f64 },
}

impl LayerFunction {
    /// `(value, derivative)`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match *self {
            LayerFunction::Exponential { eps_tilde, beta, at } => {
                let s = if x >= at { 1.0 } else { -1.0 };
                let v = libm::exp(-beta * (x - at).abs() / eps_tilde);
                (v, -s * beta / eps_tilde * v)
            }
            LayerFunction::Power { eps, lambda, at } => {
                let s = if x >= at { 1.0 } else { -1.0 };
                let (d, r) = ((x - at).abs(), libm::sqrt(eps));
                if lambda == 0.0 {
                    (d / (r + d), s * r / ((r + d) * (r + d)))
                } else {
                    let v = libm::pow(r + d, lambda);
                    (v, s * lambda * v / (r + d))
                }
            }
        }
    }

    /// Weight of the seminorm in the energy norm.
    fn weight(&self) -> f64 {
        match *self {
            LayerFunction::Exponential { eps_tilde, .. } => eps_tilde,
            LayerFunction::Power { eps, .. } => eps,
        }
    }

    fn at(&self) -> f64 {
        match *self {
            LayerFunction::Exponential { at, .. } | LayerFunction::Power { at, .. } => at,
        }
    }
}

/// Interpolation errors on the cells of one region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionErrors {
    pub tag: &'static str,
    pub cells: usize,
    pub max: f64,
    pub l2: f64,
    pub h1_semi: f64,
    /// `(w |e|_1^2 + ||e||_0^2)^(1/2)` with `w = eps_tilde` (exponential)
    /// or `eps` (power).
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpStudy {
    pub n: usize,
    pub k: usize,
    /// One entry per segment tag, in order of first appearance.
    pub regions: Vec<RegionErrors>,
    pub total: RegionErrors,
    /// `(l, ||d^l (phi - phi_I)'||_inf)` on the fine region, `l = 1, 2`
    /// (exponential layers only).
    pub weighted: Vec<(u32, f64)>,
}

impl InterpStudy {
    pub fn region(&self, tag: &str) -> Option<&RegionErrors> {
        self.regions.iter().find(|r| r.tag == tag)
    }
}

#[derive(Default, Clone, Copy)]
struct Acc {
    cells: usize,
    max: f64,
    l2: f64,
    h1: f64,
}

impl Acc {
    fn finish(self, tag: &'static str, w: f64) -> RegionErrors {
        let (l2, h1) = (libm::sqrt(self.l2), libm::sqrt(self.h1));
        RegionErrors {
            tag,
            cells: self.cells,
            max: self.max,
            l2,
            h1_semi: h1,
            energy: libm::sqrt(w * h1 * h1 + l2 * l2),
        }
    }
}

/// Interpolates the layer function into continuous order-`k` elements on
/// `mesh` (Gauss–Lobatto nodes) and reports errors split by segment tag.
pub fn interp_error_study(layer: LayerFunction, mesh: &Mesh, k: usize) -> Result<InterpStudy> {
    let needed = match layer {
        LayerFunction::Exponential { .. } => "fine",
        LayerFunction::Power { .. } => "power",
    };
    if !mesh.segments().iter().any(|s| s.kind.tag() == needed) {
        return Err(Error::Invalid(format!(
            "mesh from '{}' has no '{needed}' region",
            mesh.provenance().generator
        )));
    }
    let space = Arc::new(FESpace::new(mesh.clone(), k, NodeRule::GaussLobatto)?);
    let phi_i = interpolate(|x| layer.eval(x).0, space.clone());
    let rule = gauss_legendre(2 * k + 4);
    let mut tags: Vec<(&'static str, Acc)> = Vec::new();
    let mut total = Acc::default();
    let mut weighted = [0.0f64; 2];
    for seg in mesh.segments() {
        let tag = seg.kind.tag();
        let slot = match tags.iter().position(|(t, _)| *t == tag) {
            Some(i) => i,
            None => {
                tags.push((tag, Acc::default()));
                tags.len() - 1
            }
        };
        for cell in seg.cell_range() {
            let (a, b) = (mesh.points()[cell], mesh.points()[cell + 1]);
            let half = 0.5 * (b - a);
            let mut acc = Acc {
                cells: 1,
                ..Acc::default()
            };
            let mut visit = |x: f64, w: Option<f64>, acc: &mut Acc| {
                let (v, d) = phi_i.eval_in_cell(cell, x);
                let (ev, ed) = layer.eval(x);
                let (e, de) = (v - ev, d - ed);
                acc.max = acc.max.max(e.abs());
                if let Some(w) = w {
                    acc.l2 += w * e * e;
                    acc.h1 += w * de * de;
                }
                if tag == "fine" {
                    let dist = (x - layer.at()).abs();
                    weighted[0] = weighted[0].max(dist * de.abs());
                    weighted[1] = weighted[1].max(dist * dist * de.abs());
                }
            };
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                visit(a + half * (t + 1.0), Some(w * half), &mut acc);
            }
            for j in 0..=k {
                visit(space.node_x(cell, j), None, &mut acc);
            }
            for i in 1..=MAX_NORM_EXTRA_SAMPLES {
                visit(
                    a + (b - a) * (i as f64 / (MAX_NORM_EXTRA_SAMPLES + 1) as f64),
                    None,
                    &mut acc,
                );
            }
            for target in [&mut tags[slot].1, &mut total] {
                target.cells += acc.cells;
                target.max = target.max.max(acc.max);
                target.l2 += acc.l2;
                target.h1 += acc.h1;
            }
        }
    }
    let w = layer.weight();
    Ok(InterpStudy {
        n: mesh.cells(),
        k,
        regions: tags.into_iter().map(|(t, a)| a.finish(t, w)).collect(),
        total: total.finish("all", w),
        weighted: match layer {
            LayerFunction::Exponential { .. } => alloc::vec![(1, weighted[0]), (2, weighted[1])],
            LayerFunction::Power { .. } => Vec::new(),
        },
    })
}
