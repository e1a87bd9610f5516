use alloc::format;
use alloc::vec::Vec;

use super::stype::fine_piece;
use super::sun_stynes::power_piece;
use super::{glue, GeneratorKind, Mesh, MeshGenFunction, Orientation, Piece, Provenance, SegmentKind};
use crate::error::{Error, Result};
use crate::problem::{BoundaryClass, LayerMap, Side, WidthClass};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerMeshOptions {
    /// Transition point scale; `k + 1` is the smallest value the error
    /// analysis allows.
    pub rho: f64,
    /// `lambda = mu c / |b'|` at interior points, `mu` in `(0, 1)`.
    pub mu: f64,
    pub generator: GeneratorKind,
    /// Smallest number of cells any region may get.
    pub min_cells: usize,
}

impl LayerMeshOptions {
    pub fn for_order(k: usize) -> Self {
        LayerMeshOptions {
            rho: (k + 1) as f64,
            mu: 0.9,
            generator: GeneratorKind::Shishkin,
            min_cells: 8,
        }
    }
}

/// A middle segment and the end(s) it is graded toward.
struct Span {
    a: f64,
    b: f64,
    /// `(lambda, orientation)` or `None` for equidistant cells.
    grading: Option<(f64, Orientation)>,
}

/// Splits `total` cells proportionally to `weights`, largest remainder first.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut cells: Vec<usize> = exact.iter().map(|e| libm::floor(*e) as usize).collect();
    let mut left = total - cells.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        let (fi, fj) = (exact[i] - cells[i] as f64, exact[j] - cells[j] as f64);
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        cells[i] += 1;
        left -= 1;
    }
    cells
}

/// Layer-adapted mesh for the layer structure in `lm`:
///
/// * S-type fine regions of width `tau` at exponential boundary layers,
///   with `N/2` cells for a single such layer and `N/4` each for two;
/// * piecewise-equidistant grading over the rest of the interval toward
///   power-type boundary points (`lambda = 0`) and attractive interior
///   points that need refinement (`lambda = mu c/|b'|`, on both sides);
///   segments between two such points are split at their midpoint and the
///   cells are shared in proportion to segment length;
/// * otherwise equidistant cells.
///
/// If some exponential layer region is too wide (`2 tau > delta_k`), the
/// result is the uniform mesh.
pub fn general_layer_mesh(lm: &LayerMap, n: usize, opts: &LayerMeshOptions) -> Result<Mesh> {
    let (lo, hi, eps, k) = (lm.lo, lm.hi, lm.eps, lm.k);
    if !(opts.mu > 0.0 && opts.mu < 1.0) {
        return Err(Error::Invalid(format!("mu must lie in (0, 1), got {}", opts.mu)));
    }
    if !(opts.rho > 0.0) {
        return Err(Error::Invalid(format!("rho must be positive, got {}", opts.rho)));
    }
    let mut prov = Provenance::new("composite")
        .param("N", n as f64)
        .param("eps", eps)
        .param("k", k as f64)
        .param("rho", opts.rho)
        .param("mu", opts.mu);

    // exponential layer regions
    let mut exp = [None, None];
    for (slot, bl) in exp.iter_mut().zip(&lm.boundaries) {
        if let BoundaryClass::Exponential { width, beta } = bl.class {
            let eps_tilde = match width {
                WidthClass::Eps => eps,
                WidthClass::SqrtEps => libm::sqrt(eps),
            };
            let tau = super::s_type_transition(eps_tilde, beta, opts.rho, n);
            if 2.0 * tau > bl.delta_k {
                let mut m = Mesh::uniform(lo, hi, n)?;
                *m.provenance_mut() = prov.note(format!(
                    "fallback to uniform mesh: 2 tau = {} exceeds delta_k = {} at {}",
                    2.0 * tau,
                    bl.delta_k,
                    bl.x
                ));
                return Ok(m);
            }
            *slot = Some((eps_tilde, beta, tau));
        }
    }
    let exp_count = exp.iter().flatten().count();

    // graded points in the middle region
    let mid_lo = lo + exp[0].map_or(0.0, |e| e.2);
    let mid_hi = hi - exp[1].map_or(0.0, |e| e.2);
    let mut marks: Vec<(f64, f64)> = Vec::new();
    for bl in &lm.boundaries {
        if bl.is_power() {
            marks.push((bl.x, 0.0));
            prov = prov.param(
                match bl.side {
                    Side::Lower => "lambda_lo",
                    Side::Upper => "lambda_hi",
                },
                0.0,
            );
        }
    }
    let kf = (k + 1) as f64;
    for p in lm.refined_interior() {
        let lambda = (opts.mu * p.lambda_cap).min(opts.mu * kf);
        marks.push((p.x, lambda));
        prov = prov.param("lambda_interior", lambda);
    }
    marks.sort_by(|a, b| a.0.total_cmp(&b.0));

    if exp_count == 0 && marks.is_empty() {
        let mut m = Mesh::uniform(lo, hi, n)?;
        *m.provenance_mut() = prov.note("no layers: uniform mesh");
        return Ok(m);
    }

    let mut spans: Vec<Span> = Vec::new();
    if marks.is_empty() {
        spans.push(Span {
            a: mid_lo,
            b: mid_hi,
            grading: None,
        });
    } else {
        let mut cuts: Vec<(f64, Option<f64>)> = Vec::new();
        if marks[0].0 > mid_lo {
            cuts.push((mid_lo, None));
        }
        for &(x, l) in &marks {
            cuts.push((x, Some(l)));
        }
        if marks[marks.len() - 1].0 < mid_hi {
            cuts.push((mid_hi, None));
        }
        for w in cuts.windows(2) {
            let ((a, la), (b, lb)) = (w[0], w[1]);
            match (la, lb) {
                (Some(la), Some(lb)) => {
                    let m = 0.5 * (a + b);
                    spans.push(Span {
                        a,
                        b: m,
                        grading: Some((la, Orientation::LayerLeft)),
                    });
                    spans.push(Span {
                        a: m,
                        b,
                        grading: Some((lb, Orientation::LayerRight)),
                    });
                }
                (Some(la), None) => spans.push(Span {
                    a,
                    b,
                    grading: Some((la, Orientation::LayerLeft)),
                }),
                (None, Some(lb)) => spans.push(Span {
                    a,
                    b,
                    grading: Some((lb, Orientation::LayerRight)),
                }),
                (None, None) => spans.push(Span { a, b, grading: None }),
            }
        }
    }

    // cell budget
    let exp_cells = match exp_count {
        0 => 0,
        1 => n / 2,
        _ => n / 4,
    };
    let rest = n - exp_count * exp_cells;
    let weights: Vec<f64> = spans.iter().map(|s| s.b - s.a).collect();
    let span_cells = apportion(rest, &weights);
    let too_small = exp_count > 0 && exp_cells < opts.min_cells || span_cells.iter().any(|&c| c < opts.min_cells);
    if too_small {
        return Err(Error::Mesh(format!(
            "N = {n} too small: every region needs at least {} cells",
            opts.min_cells
        )));
    }
    prov = prov.note(
        "cells: N/2 for a single exponential layer region, N/4 each for two; \
         graded segments share the rest in proportion to their length",
    );

    let gen = MeshGenFunction::new(opts.generator, n);
    let mut pieces = Vec::new();
    if let Some((eps_tilde, beta, tau)) = exp[0] {
        pieces.push(fine_piece(
            gen,
            eps_tilde,
            beta,
            opts.rho,
            exp_cells,
            lo,
            Orientation::LayerLeft,
        ));
        prov = prov.param("tau_lo", tau);
    }
    let middle_kind = if exp_count > 0 {
        SegmentKind::Coarse
    } else {
        SegmentKind::Uniform
    };
    for (s, &cells) in spans.iter().zip(&span_cells) {
        let a = pieces.last().map_or(s.a, |p: &Piece| p.points[p.points.len() - 1]);
        let b = s.b;
        match s.grading {
            None => pieces.push(Piece::uniform(a, b, cells, middle_kind.clone())),
            Some((lambda, orientation)) => {
                let (piece, params) = power_piece(eps, lambda, k, cells, a, b, orientation)?;
                prov = prov.param("sigma", params.sigma).param("K", params.levels as f64);
                pieces.push(piece);
            }
        }
    }
    if let Some((eps_tilde, beta, tau)) = exp[1] {
        let mut fine = fine_piece(gen, eps_tilde, beta, opts.rho, exp_cells, hi, Orientation::LayerRight);
        // share the endpoint bit-for-bit with the middle region
        if let Some(last) = pieces.last() {
            fine.points[0] = last.points[last.points.len() - 1];
        }
        pieces.push(fine);
        prov = prov.param("tau_hi", tau);
    }
    prov = prov.param("generator_max_dphi", gen.max_dphi());
    glue(pieces, prov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::problem::{classify_layers, BoundaryValueProblem, ClassifyOptions};

    fn lm(lo: f64, hi: f64, b: &str, c: &str, eps: f64, k: usize) -> LayerMap {
        let p = BoundaryValueProblem::linear(lo, hi, eps, parse(b).unwrap(), parse(c).unwrap(), parse("1").unwrap())
            .unwrap();
        classify_layers(&p, k, None, &ClassifyOptions::default()).unwrap()
    }

    #[test]
    fn no_layers_gives_uniform() {
        // attractive interior point with 2 |b'| < c: smooth enough for k = 1
        let l = lm(0.0, 2.0, "1 - x", "3", 1e-6, 1);
        let m = general_layer_mesh(&l, 16, &LayerMeshOptions::for_order(1)).unwrap();
        for i in 0..16 {
            assert!((m.h(i) - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn repulsive_boundary_plus_outflow() {
        let (eps, n) = (1e-6, 64);
        let l = lm(0.0, 1.0, "x", "2", eps, 1);
        let opts = LayerMeshOptions::for_order(1);
        let m = general_layer_mesh(&l, n, &opts).unwrap();
        let tau = 2.0 * eps * libm::log(n as f64);
        assert_eq!(m.cells(), n);
        assert!((m.points()[n / 2] - (1.0 - tau)).abs() < 1e-15);
        let tags: Vec<_> = m.segments().iter().map(|s| s.kind.tag()).collect();
        assert_eq!(*tags.last().unwrap(), "fine");
        assert!(tags[..tags.len() - 1].iter().all(|t| *t == "power"));
        assert_eq!(m.segments().last().unwrap().cells, n / 2);
    }

    #[test]
    fn two_exponential_layers() {
        let (eps, n) = (1e-6, 64);
        let l = lm(0.0, 1.0, "x^2", "1 + x", eps, 2);
        let m = general_layer_mesh(&l, n, &LayerMeshOptions::for_order(2)).unwrap();
        let segs: Vec<_> = m.segments().iter().map(|s| (s.kind.tag(), s.cells)).collect();
        assert_eq!(segs, [("fine", 16), ("coarse", 32), ("fine", 16)]);
        let tau0 = 3.0 * libm::sqrt(eps) * libm::log(n as f64);
        assert!((m.points()[16] - tau0).abs() < 1e-15);
    }

    #[test]
    fn interior_point_graded_on_both_sides() {
        // b' = -1 at 0, c = 2 < (k+1) = 3 ... refinement needed for k = 2
        let l = lm(-1.0, 1.0, "-x", "2", 1e-6, 2);
        let m = general_layer_mesh(&l, 64, &LayerMeshOptions::for_order(2)).unwrap();
        assert_eq!(m.cells(), 64);
        let i0 = m.points().iter().position(|&x| x == 0.0).unwrap();
        assert_eq!(i0, 32);
        assert!(m.h(31) < 1e-3 && m.h(32) < 1e-3);
    }

    #[test]
    fn wide_layer_falls_back_to_uniform() {
        let l = lm(0.0, 1.0, "1", "1", 0.2, 1);
        let m = general_layer_mesh(&l, 16, &LayerMeshOptions::for_order(1)).unwrap();
        assert!(m.provenance().notes[0].starts_with("fallback"));
        assert!((m.max_h() - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn budget_errors() {
        let l = lm(0.0, 1.0, "x^2", "1 + x", 1e-6, 1);
        assert!(general_layer_mesh(&l, 16, &LayerMeshOptions::for_order(1)).is_err());
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), [4, 3, 3]);
        assert_eq!(apportion(64, &[0.5, 0.5, 1.0]), [16, 16, 32]);
    }
}
