//! Shape of the derivative bounds `|u^(k)(x)|` in terms of the layer map.
//! Multiplicative constants are dropped, so these are oracles for shapes
//! only.

use alloc::format;
use alloc::vec::Vec;

use super::layers::{BoundaryLayer, LayerMap, Side};
use crate::error::{Error, Result};

/// Exponents `lambda` for the power-type terms. `None` at a boundary means
/// the boundary needs none (it is not a simple root of `b`).
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaChoices {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// One per attractive interior point, in the order of `LayerMap::attractive`.
    pub interior: Vec<f64>,
}

impl LambdaChoices {
    /// `lambda = mu * c / |b'|` at every point where one is needed.
    pub fn scaled(lm: &LayerMap, mu: f64) -> Self {
        let at = |b: &BoundaryLayer| {
            (b.b == 0.0 || b.is_power()).then_some(())?;
            (b.db != 0.0).then(|| mu * b.c / b.db.abs())
        };
        LambdaChoices {
            lower: at(lm.lower()),
            upper: at(lm.upper()),
            interior: lm.attractive.iter().map(|a| mu * a.lambda_cap).collect(),
        }
    }
}

fn check_lambda(lambda: Option<f64>, cap: f64, x: f64) -> Result<f64> {
    match lambda {
        Some(l) if l > 0.0 && l < cap => Ok(l),
        Some(l) => Err(Error::Invalid(format!(
            "lambda = {l} at {x} outside the admissible range (0, {cap})"
        ))),
        None => Err(Error::Invalid(format!("lambda needed at {x}"))),
    }
}

/// One boundary term `phi(dist, k, a, b)` of the bound, where for the lower
/// end `a = b(lo), b = b'(lo)` and for the upper end `a = -b(hi),
/// b = b'(hi)`. When several cases of the table apply the larger value is
/// returned.
#[allow(clippy::too_many_arguments)]
pub fn phi_boundary(
    dist: f64,
    k: usize,
    a: f64,
    b: f64,
    c: f64,
    lambda: Option<f64>,
    eps: f64,
    at: f64,
) -> Result<f64> {
    let kf = k as f64;
    let se = libm::sqrt(eps);
    if a < 0.0 {
        return Ok(libm::pow(eps, -kf) * libm::exp(a * dist / eps));
    }
    if a > 0.0 {
        return Ok(0.0);
    }
    let mut best: Option<f64> = None;
    let mut take = |v: f64| best = Some(best.map_or(v, |b: f64| b.max(v)));
    if b > 0.0 {
        let l = check_lambda(lambda, c / b, at)?;
        take(libm::pow(eps, l / 2.0) * libm::pow(se + dist, -l - kf));
    }
    if -kf * b >= 0.0 && -kf * b < c && c + b > 0.0 {
        take(libm::pow(eps, -kf / 2.0) * libm::exp(-libm::sqrt(c + b) * dist / se));
    }
    if b < 0.0 {
        let l = check_lambda(lambda, c / b.abs(), at)?;
        take(libm::pow(se + dist, l - kf) + eps * libm::pow(se + dist, -kf - 2.0));
    }
    best.ok_or_else(|| {
        Error::Invalid(format!(
            "no case of the bound applies at {at} (b = 0, b' = {b}, c = {c}, k = {k})"
        ))
    })
}

fn boundary_term(x: f64, k: usize, bl: &BoundaryLayer, lambda: Option<f64>, eps: f64) -> Result<f64> {
    let (dist, a) = match bl.side {
        Side::Lower => (x - bl.x, bl.b),
        Side::Upper => (bl.x - x, -bl.b),
    };
    // treat numerically tiny b as a root, consistent with the classification
    let a = if bl.is_power() || matches!(bl.kind, super::TurningPointKind::BoundaryMultiple) {
        0.0
    } else {
        a
    };
    let b = if matches!(bl.kind, super::TurningPointKind::BoundaryMultiple) {
        0.0
    } else {
        bl.db
    };
    phi_boundary(dist.max(0.0), k, a, b, bl.c, lambda, eps, bl.x)
}

/// Right-hand side of the derivative bound: `1 + phi_lo + phi_hi + sum over
/// attractive interior points of (sqrt(eps) + |x - x_j|)^(lambda_j - k)`.
pub fn a_priori_bound(x: f64, k: usize, lm: &LayerMap, lambdas: &LambdaChoices) -> Result<f64> {
    if !(x >= lm.lo && x <= lm.hi) {
        return Err(Error::OutOfDomain {
            x,
            lo: lm.lo,
            hi: lm.hi,
        });
    }
    if lambdas.interior.len() != lm.attractive.len() {
        return Err(Error::Invalid(format!(
            "{} interior lambdas for {} attractive points",
            lambdas.interior.len(),
            lm.attractive.len()
        )));
    }
    let eps = lm.eps;
    let mut total = 1.0;
    total += boundary_term(x, k, lm.lower(), lambdas.lower, eps)?;
    total += boundary_term(x, k, lm.upper(), lambdas.upper, eps)?;
    let se = libm::sqrt(eps);
    for (p, &l) in lm.attractive.iter().zip(&lambdas.interior) {
        let l = check_lambda(Some(l), p.lambda_cap, p.x)?;
        total += libm::pow(se + (x - p.x).abs(), l - k as f64);
    }
    Ok(total)
}
