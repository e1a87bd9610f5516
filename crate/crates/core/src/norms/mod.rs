//! Error norms against exact or fine-mesh references, convergence-rate
//! fitting and interpolation-error studies.

mod interp;
mod rates;
mod reference;

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fem::DiscreteFunction;
use crate::quadrature::gauss_legendre;

pub use interp::{interp_error_study, InterpStudy, LayerFunction, RegionErrors};
pub use rates::{fit_order, k_plus_one_scale, ln_adjusted_scale, pairwise_rates, plain_scale};
pub use reference::{make_reference, Reference, ReferenceRecipe, ReferenceStrategy};

/// Norms of `u_N - reference`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `(eps |e|_1^2 + gamma_tilde ||e||_0^2)^(1/2)`.
    pub energy: f64,
    pub l2: f64,
    pub h1_semi: f64,
    /// Sampled, hence a lower bound of the true maximum.
    pub max: f64,
    pub eps: f64,
    pub gamma_tilde: f64,
    pub quad_points: usize,
    pub reference: String,
}

/// Uniformly spaced extra samples per cell for the max-norm.
pub const MAX_NORM_EXTRA_SAMPLES: usize = 16;

/// Integration pieces: each coarse cell, split at the breakpoints of the
/// reference (if it is piecewise polynomial) so every piece is smooth for
/// both functions. Items are `(coarse cell, a, b)`.
pub(crate) fn pieces(u: &DiscreteFunction, r: &Reference) -> Vec<(usize, f64, f64)> {
    let pts = u.space().mesh().points();
    let extra = r.breakpoints();
    let mut out = Vec::with_capacity(pts.len() + extra.map_or(0, |e| e.len()));
    let mut j = 0;
    for i in 0..pts.len() - 1 {
        let (a, b) = (pts[i], pts[i + 1]);
        let mut left = a;
        if let Some(e) = extra {
            while j < e.len() && e[j] <= a {
                j += 1;
            }
            while j < e.len() && e[j] < b {
                out.push((i, left, e[j]));
                left = e[j];
                j += 1;
            }
        }
        out.push((i, left, b));
    }
    out
}

/// Energy, L2, H1-seminorm and sampled max-norm of `u_N - reference`.
/// Integrals use `quad_points`-point Gauss–Legendre on every piece.
pub fn error_norms(
    u: &DiscreteFunction,
    reference: &Reference,
    eps: f64,
    gamma_tilde: f64,
    quad_points: usize,
) -> Result<ErrorReport> {
    let k = u.space().order();
    if quad_points < k + 2 {
        return Err(Error::Invalid(alloc::format!(
            "need at least k + 2 = {} quadrature points, got {quad_points}",
            k + 2
        )));
    }
    let mesh = u.space().mesh();
    reference.check_domain(mesh.lo(), mesh.hi())?;
    let rule = gauss_legendre(quad_points);
    let (mut l2, mut h1, mut max) = (0.0, 0.0, 0.0f64);
    for (cell, a, b) in pieces(u, reference) {
        let hint = reference.locate_piece(a, b)?;
        let half = 0.5 * (b - a);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let x = a + half * (t + 1.0);
            let (v, d) = u.eval_in_cell(cell, x);
            let (rv, rd) = reference.eval(x, hint)?;
            let (e, de) = (v - rv, d - rd);
            l2 += w * half * e * e;
            h1 += w * half * de * de;
            max = max.max(e.abs());
        }
    }
    // nodes and extra samples
    for cell in 0..mesh.cells() {
        let (a, b) = (mesh.points()[cell], mesh.points()[cell + 1]);
        let s = u.space();
        let xs = (0..=s.order()).map(|j| s.node_x(cell, j)).chain(
            (1..=MAX_NORM_EXTRA_SAMPLES).map(|i| a + (b - a) * (i as f64 / (MAX_NORM_EXTRA_SAMPLES + 1) as f64)),
        );
        for x in xs {
            let (v, _) = u.eval_in_cell(cell, x);
            let (rv, _) = reference.eval(x, None)?;
            max = max.max((v - rv).abs());
        }
    }
    let (l2, h1) = (libm::sqrt(l2), libm::sqrt(h1));
    Ok(ErrorReport {
        energy: libm::sqrt(eps * h1 * h1 + gamma_tilde * l2 * l2),
        l2,
        h1_semi: h1,
        max,
        eps,
        gamma_tilde,
        quad_points,
        reference: reference.describe(),
    })
}

/// `(int eps e'^2 + gamma_tilde e^2)^(1/2)` integrated in one pass, as a
/// cross-check of [`ErrorReport::energy`].
pub fn energy_error_direct(
    u: &DiscreteFunction,
    reference: &Reference,
    eps: f64,
    gamma_tilde: f64,
    quad_points: usize,
) -> Result<f64> {
    let rule = gauss_legendre(quad_points);
    let mut s = 0.0;
    for (cell, a, b) in pieces(u, reference) {
        let hint = reference.locate_piece(a, b)?;
        let half = 0.5 * (b - a);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let x = a + half * (t + 1.0);
            let (v, d) = u.eval_in_cell(cell, x);
            let (rv, rd) = reference.eval(x, hint)?;
            s += w * half * (eps * (d - rd) * (d - rd) + gamma_tilde * (v - rv) * (v - rv));
        }
    }
    Ok(libm::sqrt(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::fem::{interpolate, FESpace, NodeRule};
    use crate::mesh::Mesh;
    use alloc::sync::Arc;

    fn space(n: usize, k: usize) -> Arc<FESpace> {
        Arc::new(FESpace::new(Mesh::uniform(0.0, 1.0, n).unwrap(), k, NodeRule::GaussLobatto).unwrap())
    }

    fn exact(u: &str) -> Reference {
        Reference::exact(parse(u).unwrap())
    }

    #[test]
    fn identical_functions_have_zero_error() {
        let s = space(8, 2);
        let u = interpolate(|x| x * x - x, s);
        let r = error_norms(&u, &exact("x^2 - x"), 1e-3, 1.0, 4).unwrap();
        assert!(r.energy < 1e-14 && r.l2 < 1e-14 && r.h1_semi < 1e-13 && r.max < 1e-15);
    }

    #[test]
    fn zero_against_bubble() {
        let s = space(4, 1);
        let u = DiscreteFunction::zero(s);
        let r = error_norms(&u, &exact("x*(1-x)"), 0.01, 2.0, 6).unwrap();
        assert!((r.h1_semi * r.h1_semi - 1.0 / 3.0).abs() < 1e-14);
        assert!((r.l2 * r.l2 - 1.0 / 30.0).abs() < 1e-14);
        assert!((r.energy - libm::sqrt(0.07)).abs() < 1e-14);
        assert!((r.max - 0.25).abs() < 1e-15);
        let direct = energy_error_direct(&u, &exact("x*(1-x)"), 0.01, 2.0, 6).unwrap();
        assert!((direct - r.energy).abs() <= 1e-12 * r.energy);
    }

    #[test]
    fn too_few_quadrature_points() {
        let s = space(4, 3);
        let u = DiscreteFunction::zero(s);
        assert!(error_norms(&u, &exact("x"), 1.0, 1.0, 4).is_err());
    }

    #[test]
    fn fine_mesh_reference_is_split() {
        let fine = space(12, 3);
        let r = Reference::fine_mesh(
            interpolate(|x| libm::sin(3.0 * x), fine),
            ReferenceRecipe {
                mesh_family: "uniform".into(),
                n_ref: 12,
                k_ref: 3,
            },
        );
        // coarse mesh with 5 cells, not nested in the 12-cell mesh
        let u = interpolate(
            |x| libm::sin(3.0 * x),
            Arc::new(FESpace::new(Mesh::uniform(0.0, 1.0, 5).unwrap(), 3, NodeRule::GaussLobatto).unwrap()),
        );
        let e = error_norms(&u, &r, 1.0, 1.0, 5).unwrap();
        // both approximate sin(3x) to about 1e-4
        assert!(e.l2 < 1e-3 && e.l2 > 0.0);
        assert_eq!(pieces(&u, &r).len(), 5 + 11);
    }
}
