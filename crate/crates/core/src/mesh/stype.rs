use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{glue, GeneratorKind, Mesh, MeshGenFunction, Orientation, Piece, Provenance, SegmentKind};
use crate::error::{Error, Result};

/// Transition point `tau = rho * eps_tilde / beta * ln N`.
pub fn s_type_transition(eps_tilde: f64, beta: f64, rho: f64, n: usize) -> f64 {
    rho * eps_tilde / beta * libm::log(n as f64)
}

/// Fine part of an S-type mesh with `cells` cells over a layer region of
/// width `tau`, graded by `gen` (built for the global cell count).
pub(crate) fn fine_piece(
    gen: MeshGenFunction,
    eps_tilde: f64,
    beta: f64,
    rho: f64,
    cells: usize,
    anchor: f64,
    orientation: Orientation,
) -> Piece {
    let scale = rho * eps_tilde / beta;
    let tau = scale * libm::log(gen.n as f64);
    let offsets: Vec<f64> = (0..=cells)
        .map(|j| {
            if j == cells {
                tau
            } else {
                scale * gen.phi(j as f64 / (2 * cells) as f64)
            }
        })
        .collect();
    let points = match orientation {
        Orientation::LayerLeft => offsets.iter().map(|d| anchor + d).collect(),
        Orientation::LayerRight => offsets.iter().rev().map(|d| anchor - d).collect(),
    };
    Piece {
        points,
        segments: vec![(cells, SegmentKind::Fine { tau })],
    }
}

/// S-type mesh on `[lo, hi]`: `N/2` cells graded by `gen` inside the layer
/// region of width `tau`, `N/2` equidistant cells on the rest.
#[allow(clippy::too_many_arguments)]
pub fn s_type_mesh(
    eps_tilde: f64,
    beta: f64,
    rho: f64,
    n: usize,
    kind: GeneratorKind,
    orientation: Orientation,
    lo: f64,
    hi: f64,
) -> Result<Mesh> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Mesh(format!("S-type mesh needs an even N >= 2, got {n}")));
    }
    if !(eps_tilde > 0.0 && beta > 0.0 && rho > 0.0 && hi > lo) {
        return Err(Error::Invalid("S-type mesh needs positive eps, beta, rho".into()));
    }
    let tau = s_type_transition(eps_tilde, beta, rho, n);
    if tau > (hi - lo) / 2.0 {
        return Err(Error::Mesh(format!(
            "transition point tau = {tau} exceeds half the interval length {}",
            (hi - lo) / 2.0
        )));
    }
    let gen = MeshGenFunction::new(kind, n);
    let half = n / 2;
    let pieces = match orientation {
        Orientation::LayerLeft => {
            let fine = fine_piece(gen, eps_tilde, beta, rho, half, lo, orientation);
            let split = fine.points[half];
            vec![fine, Piece::uniform(split, hi, half, SegmentKind::Coarse)]
        }
        Orientation::LayerRight => {
            let fine = fine_piece(gen, eps_tilde, beta, rho, half, hi, orientation);
            let split = fine.points[0];
            vec![Piece::uniform(lo, split, half, SegmentKind::Coarse), fine]
        }
    };
    let prov = Provenance::new(&format!("s-type/{}", kind.name()))
        .param("N", n as f64)
        .param("eps_tilde", eps_tilde)
        .param("beta", beta)
        .param("rho", rho)
        .param("tau", tau)
        .param("max_dphi", gen.max_dphi())
        .param("max_abs_dpsi", gen.max_abs_dpsi());
    glue(pieces, prov)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shishkin_example() {
        let m = s_type_mesh(
            1e-6,
            1.0,
            2.0,
            8,
            GeneratorKind::Shishkin,
            Orientation::LayerLeft,
            0.0,
            1.0,
        )
        .unwrap();
        let tau = 2e-6 * libm::log(8.0);
        assert!((tau - 4.15888e-6).abs() < 1e-11);
        let p = m.points();
        for i in 0..=4 {
            let expect = i as f64 * tau / 4.0;
            assert!((p[i] - expect).abs() <= 1e-21, "{i}: {} vs {expect}", p[i]);
        }
        let coarse = (1.0 - tau) / 4.0;
        for i in 5..=8 {
            assert!((p[i] - p[i - 1] - coarse).abs() < 1e-15);
        }
        assert_eq!(p[8], 1.0);
        assert_eq!(m.provenance().get("tau"), Some(p[4]));
    }

    #[test]
    fn smallest_mesh() {
        let m = s_type_mesh(
            1e-3,
            1.0,
            1.0,
            2,
            GeneratorKind::Shishkin,
            Orientation::LayerLeft,
            0.0,
            1.0,
        )
        .unwrap();
        let tau = 1e-3 * libm::log(2.0);
        assert_eq!(m.points(), &[0.0, tau, 1.0]);
    }

    #[test]
    fn right_layer_mirrors_left() {
        let args = (1e-4, 2.0, 2.0, 16, GeneratorKind::BakhvalovS);
        let l = s_type_mesh(args.0, args.1, args.2, args.3, args.4, Orientation::LayerLeft, 0.0, 1.0).unwrap();
        let r = s_type_mesh(
            args.0,
            args.1,
            args.2,
            args.3,
            args.4,
            Orientation::LayerRight,
            0.0,
            1.0,
        )
        .unwrap();
        for (a, b) in l.points().iter().zip(r.points().iter().rev()) {
            assert!((a - (1.0 - b)).abs() < 1e-15);
        }
        assert_eq!(r.segments()[1].kind.tag(), "fine");
    }

    #[test]
    fn errors() {
        let odd = s_type_mesh(
            1e-4,
            1.0,
            2.0,
            7,
            GeneratorKind::Shishkin,
            Orientation::LayerLeft,
            0.0,
            1.0,
        );
        assert!(odd.is_err());
        let wide = s_type_mesh(
            0.2,
            1.0,
            2.0,
            8,
            GeneratorKind::Shishkin,
            Orientation::LayerLeft,
            0.0,
            1.0,
        );
        assert!(wide.is_err());
    }

    #[test]
    fn fine_widths_obey_generator_bound() {
        for kind in [GeneratorKind::Shishkin, GeneratorKind::BakhvalovS] {
            let (eps, beta, rho, n) = (1e-5, 1.5, 3.0, 64);
            let m = s_type_mesh(eps, beta, rho, n, kind, Orientation::LayerLeft, 0.0, 1.0).unwrap();
            let gen = MeshGenFunction::new(kind, n);
            let bound = rho * eps / beta / n as f64 * gen.max_dphi();
            for i in 0..n / 2 {
                assert!(m.h(i) <= bound * (1.0 + 1e-12));
            }
        }
    }
}
