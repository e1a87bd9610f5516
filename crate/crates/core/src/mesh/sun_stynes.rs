use alloc::format;
use alloc::vec::Vec;

use super::{Mesh, Orientation, Piece, Provenance, SegmentKind};
use crate::error::{Error, Result};

/// Parameters of the piecewise-equidistant mesh for power-type layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SunStynesParams {
    /// `sigma = max(eps^((1 - lambda/(k+1))/2), N^-(2k+1))`.
    pub sigma: f64,
    /// Number of decades `K`; the mesh has `K + 1` subintervals.
    pub levels: usize,
}

impl SunStynesParams {
    /// Left end of the innermost subinterval boundary, `10^-K`.
    pub fn innermost(&self) -> f64 {
        pow10_neg(self.levels)
    }
}

/// `10^-k`, correctly rounded.
pub(crate) fn pow10_neg(k: usize) -> f64 {
    1.0 / crate::expr::powi(10.0, k as i32)
}

/// Computes `sigma` and `K = floor(1 - ln(sigma)/ln(10))`.
///
/// `K` is nudged so that `sigma/10 <= 10^-K < sigma` holds exactly in
/// floating point, which the plain formula can miss by one when `sigma` is
/// an exact power of ten.
pub fn sun_stynes_params(eps: f64, lambda: f64, k: usize, n: usize) -> Result<SunStynesParams> {
    let kf = (k + 1) as f64;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Invalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(lambda >= 0.0 && lambda < kf) {
        return Err(Error::Invalid(format!(
            "lambda must lie in [0, k+1) = [0, {kf}), got {lambda}"
        )));
    }
    if n == 0 || k == 0 {
        return Err(Error::Invalid("k and N must be positive".into()));
    }
    let sigma_eps = libm::pow(eps, (1.0 - lambda / kf) / 2.0);
    let sigma_n = libm::pow(n as f64, -((2 * k + 1) as f64));
    let sigma = sigma_eps.max(sigma_n);
    let raw = libm::floor(1.0 - libm::log(sigma) / core::f64::consts::LN_10);
    let mut levels = if raw > 0.0 { raw as usize } else { 0 };
    while pow10_neg(levels) >= sigma {
        levels += 1;
    }
    while levels > 0 && pow10_neg(levels) < sigma / 10.0 {
        levels -= 1;
    }
    Ok(SunStynesParams { sigma, levels })
}

/// Points in unit coordinates and `(cells, kind)` per subinterval.
pub(crate) type UnitMesh = (Vec<f64>, Vec<(usize, SegmentKind)>);

/// Unit-coordinate points of the piecewise-equidistant mesh with `n` cells.
/// Cells that do not divide evenly go one each to the innermost
/// subintervals, so there are always exactly `n` cells.
pub(crate) fn unit_points(params: SunStynesParams, n: usize) -> Result<UnitMesh> {
    let parts = params.levels + 1;
    if n < 2 * parts {
        return Err(Error::Mesh(format!(
            "N = {n} too small for {parts} subintervals (need at least {})",
            2 * parts
        )));
    }
    let base = n / parts;
    let extra = n % parts;
    let mut points = Vec::with_capacity(n + 1);
    let mut segments = Vec::with_capacity(parts);
    points.push(0.0);
    // subinterval l (0 = innermost) spans [left, right]
    for l in 0..parts {
        let cells = base + usize::from(l < extra);
        let left = if l == 0 { 0.0 } else { pow10_neg(params.levels + 1 - l) };
        let right = pow10_neg(params.levels - l);
        let width = right - left;
        for j in 1..cells {
            points.push(left + width * (j as f64 / cells as f64));
        }
        points.push(right);
        segments.push((
            cells,
            SegmentKind::Power {
                level: l,
                levels: params.levels,
            },
        ));
    }
    Ok((points, segments))
}

pub(crate) fn power_piece(
    eps: f64,
    lambda: f64,
    k: usize,
    n: usize,
    lo: f64,
    hi: f64,
    orientation: Orientation,
) -> Result<(Piece, SunStynesParams)> {
    let params = sun_stynes_params(eps, lambda, k, n)?;
    let (unit, segments) = unit_points(params, n)?;
    Ok((Piece::from_unit(&unit, segments, lo, hi, orientation), params))
}

/// Piecewise-equidistant mesh for a power-type layer at one end of
/// `[lo, hi]`.
#[allow(clippy::too_many_arguments)]
pub fn sun_stynes_mesh(
    eps: f64,
    lambda: f64,
    k: usize,
    n: usize,
    orientation: Orientation,
    lo: f64,
    hi: f64,
) -> Result<Mesh> {
    if !(hi > lo) {
        return Err(Error::Invalid(format!("empty interval [{lo}, {hi}]")));
    }
    let (piece, params) = power_piece(eps, lambda, k, n, lo, hi, orientation)?;
    let prov = Provenance::new("sun-stynes")
        .param("N", n as f64)
        .param("eps", eps)
        .param("lambda", lambda)
        .param("k", k as f64)
        .param("sigma", params.sigma)
        .param("K", params.levels as f64);
    super::glue(alloc::vec![piece], prov)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_parameters() {
        let p = sun_stynes_params(1e-8, 0.0, 1, 96).unwrap();
        assert_eq!(p.sigma, 1e-4);
        assert_eq!(p.levels, 5);
        let m = sun_stynes_mesh(1e-8, 0.0, 1, 96, Orientation::LayerLeft, 0.0, 1.0).unwrap();
        assert_eq!(m.segments().len(), 6);
        assert!(m.segments().iter().all(|s| s.cells == 16));
        assert_eq!(m.h(0), 6.25e-7);
    }

    #[test]
    fn coarse_eps_example() {
        let p = sun_stynes_params(0.25, 0.0, 1, 10).unwrap();
        assert_eq!(p.sigma, 0.5);
        assert_eq!(p.levels, 1);
        let m = sun_stynes_mesh(0.25, 0.0, 1, 10, Orientation::LayerLeft, 0.0, 1.0).unwrap();
        assert_eq!(m.points()[5], 0.1);
        assert_eq!(m.segments().len(), 2);
    }

    #[test]
    fn widths_bounded_by_levels_over_n() {
        for &(eps, n) in &[(1e-8, 96usize), (1e-3, 40), (1e-12, 257)] {
            let m = sun_stynes_mesh(eps, 0.0, 2, n, Orientation::LayerRight, -1.0, 0.0).unwrap();
            let levels = m.provenance().get("K").unwrap();
            assert_eq!(m.cells(), n);
            // interval length 1, so Lemma-style bound (K+1)/N applies directly
            assert!(m.max_h() <= (levels + 1.0) / n as f64 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn remainder_goes_to_inner_subintervals() {
        let p = sun_stynes_params(1e-8, 0.0, 1, 100).unwrap();
        let (_, segs) = unit_points(p, 100).unwrap();
        let cells: Vec<usize> = segs.iter().map(|s| s.0).collect();
        assert_eq!(cells, [17, 17, 17, 17, 16, 16]);
    }

    #[test]
    fn too_few_cells() {
        assert!(sun_stynes_mesh(1e-8, 0.0, 1, 6, Orientation::LayerLeft, 0.0, 1.0).is_err());
        assert!(sun_stynes_params(1e-8, 2.0, 1, 100).is_err());
    }
}
