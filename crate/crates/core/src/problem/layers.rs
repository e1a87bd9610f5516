//! Turning points of `b` and the layer structure they induce.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::BoundaryValueProblem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurningPointKind {
    InteriorAttractive,
    InteriorRepulsive,
    InteriorMultiple,
    BoundaryAttractive,
    BoundaryRepulsive,
    BoundaryMultiple,
    OutflowBoundary,
    InflowBoundary,
}

impl TurningPointKind {
    pub fn name(self) -> &'static str {
        match self {
            TurningPointKind::InteriorAttractive => "interior-attractive",
            TurningPointKind::InteriorRepulsive => "interior-repulsive",
            TurningPointKind::InteriorMultiple => "interior-multiple",
            TurningPointKind::BoundaryAttractive => "boundary-attractive",
            TurningPointKind::BoundaryRepulsive => "boundary-repulsive",
            TurningPointKind::BoundaryMultiple => "boundary-multiple",
            TurningPointKind::OutflowBoundary => "outflow-boundary",
            TurningPointKind::InflowBoundary => "inflow-boundary",
        }
    }

    pub fn is_boundary(self) -> bool {
        !matches!(
            self,
            TurningPointKind::InteriorAttractive
                | TurningPointKind::InteriorRepulsive
                | TurningPointKind::InteriorMultiple
        )
    }
}

/// A root of `b` (or, for the outflow/inflow kinds, a boundary point that
/// is not a root).
#[derive(Debug, Clone, PartialEq)]
pub struct TurningPoint {
    pub x: f64,
    pub kind: TurningPointKind,
    pub db: f64,
    pub c: f64,
    /// `c / |b'|`, absent when `b' = 0`.
    pub lambda_cap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    /// Outward normal.
    pub fn normal(self) -> f64 {
        match self {
            Side::Lower => -1.0,
            Side::Upper => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WidthClass {
    /// Layer width of order `eps`, scale `beta = |b|`.
    Eps,
    /// Layer width of order `sqrt(eps)`, scale `beta = sqrt(c)`.
    SqrtEps,
}

impl WidthClass {
    pub fn name(self) -> &'static str {
        match self {
            WidthClass::Eps => "eps",
            WidthClass::SqrtEps => "sqrt-eps",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryClass {
    Exponential { width: WidthClass, beta: f64 },
    Power { lambda_cap: f64 },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLayer {
    pub x: f64,
    pub side: Side,
    pub kind: TurningPointKind,
    pub b: f64,
    pub db: f64,
    pub c: f64,
    pub class: BoundaryClass,
    /// Distance to the other boundary and to the attractive interior points.
    pub delta: f64,
    /// Same, counting only interior points that need mesh refinement for
    /// order `k`.
    pub delta_k: f64,
    /// Layer width including the logarithmic factor (0 if no layer).
    pub typical_width: f64,
}

impl BoundaryLayer {
    pub fn is_exp(&self) -> bool {
        matches!(self.class, BoundaryClass::Exponential { .. })
    }

    pub fn is_power(&self) -> bool {
        matches!(self.class, BoundaryClass::Power { .. })
    }
}

/// An interior root with `b' < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractivePoint {
    pub x: f64,
    pub db: f64,
    pub c: f64,
    /// `c / |b'|`.
    pub lambda_cap: f64,
    /// Distance to the boundary and to other attractive points.
    pub delta: f64,
    /// Whether `-(k+1) b' >= c`, i.e. the solution is not smooth enough for
    /// order `k` without refinement.
    pub needs_refinement: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerMap {
    pub lo: f64,
    pub hi: f64,
    pub eps: f64,
    pub k: usize,
    pub boundaries: [BoundaryLayer; 2],
    pub turning_points: Vec<TurningPoint>,
    pub attractive: Vec<AttractivePoint>,
    pub notes: Vec<String>,
}

impl LayerMap {
    pub fn lower(&self) -> &BoundaryLayer {
        &self.boundaries[0]
    }

    pub fn upper(&self) -> &BoundaryLayer {
        &self.boundaries[1]
    }

    pub fn exp_layers(&self) -> impl Iterator<Item = &BoundaryLayer> {
        self.boundaries.iter().filter(|b| b.is_exp())
    }

    pub fn power_layers(&self) -> impl Iterator<Item = &BoundaryLayer> {
        self.boundaries.iter().filter(|b| b.is_power())
    }

    /// Attractive interior points that need refinement for order `k`.
    pub fn refined_interior(&self) -> impl Iterator<Item = &AttractivePoint> {
        self.attractive.iter().filter(|p| p.needs_refinement)
    }

    pub fn is_empty(&self) -> bool {
        self.exp_layers().next().is_none() && self.power_layers().next().is_none() && self.attractive.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Cells of the sign-change scan.
    pub scan_cells: usize,
    /// Bisection stops when the bracket is shorter than this.
    pub root_tol: f64,
    /// `|b|` at an endpoint below this counts as a root.
    pub zero_tol: f64,
    /// `|b'|` below this makes a root multiple.
    pub deriv_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            scan_cells: 10_000,
            root_tol: 1e-12,
            zero_tol: 1e-10,
            deriv_tol: 1e-8,
        }
    }
}

fn bisect(p: &BoundaryValueProblem, mut a: f64, mut fa: f64, mut b: f64, tol: f64) -> Result<f64> {
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = p.b_at(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Interior roots of `b` found by a sign-change scan plus bisection.
fn scan_roots(p: &BoundaryValueProblem, opts: &ClassifyOptions) -> Result<Vec<f64>> {
    let n = opts.scan_cells.max(2);
    let xs: Vec<f64> = super::sample_grid(p.lo, p.hi, n + 1).collect();
    let mut vals = Vec::with_capacity(xs.len());
    for &x in &xs {
        vals.push(p.b_at(x)?);
    }
    let mut roots = Vec::new();
    for i in 0..n {
        let (fa, fb) = (vals[i], vals[i + 1]);
        if i > 0 && fa == 0.0 {
            roots.push(xs[i]);
        }
        if fa * fb < 0.0 {
            roots.push(bisect(p, xs[i], fa, xs[i + 1], opts.root_tol)?);
        }
    }
    Ok(roots)
}

fn c_at_point(p: &BoundaryValueProblem, x: f64) -> Result<f64> {
    p.c_at(x)
}

/// Classifies boundary and interior turning points and the resulting
/// layers. Multiple interior roots are not found by the scan and must be
/// passed in `declared_roots`.
pub fn classify_layers(
    p: &BoundaryValueProblem,
    k: usize,
    declared_roots: Option<&[f64]>,
    opts: &ClassifyOptions,
) -> Result<LayerMap> {
    if k == 0 {
        return Err(Error::Invalid("polynomial order k must be at least 1".into()));
    }
    let mut notes = Vec::new();
    let span = p.hi - p.lo;
    let near_end = |x: f64| (x - p.lo).abs() <= 1e-10 * span.max(1.0) || (p.hi - x).abs() <= 1e-10 * span.max(1.0);
    let interior_roots: Vec<f64> = match declared_roots {
        Some(rs) => {
            let mut v = Vec::new();
            for &r in rs {
                if !(r >= p.lo && r <= p.hi) {
                    return Err(Error::Invalid(format!(
                        "declared root {r} outside [{}, {}]",
                        p.lo, p.hi
                    )));
                }
                if !near_end(r) {
                    v.push(r);
                }
            }
            v.sort_by(|a, b| a.total_cmp(b));
            v.dedup();
            v
        }
        None => scan_roots(p, opts)?.into_iter().filter(|&r| !near_end(r)).collect(),
    };

    let mut turning_points = Vec::new();
    let mut attractive = Vec::new();
    for &x in &interior_roots {
        let db = p.db_at(x)?;
        let c = c_at_point(p, x)?;
        let kind = if db.abs() <= opts.deriv_tol {
            TurningPointKind::InteriorMultiple
        } else if db < 0.0 {
            TurningPointKind::InteriorAttractive
        } else {
            TurningPointKind::InteriorRepulsive
        };
        let lambda_cap = (db.abs() > opts.deriv_tol).then(|| c / db.abs());
        if kind == TurningPointKind::InteriorAttractive {
            attractive.push(AttractivePoint {
                x,
                db,
                c,
                lambda_cap: c / db.abs(),
                delta: 0.0,
                needs_refinement: -((k + 1) as f64) * db >= c,
            });
        }
        if kind == TurningPointKind::InteriorMultiple {
            notes.push(format!(
                "interior root {x} is multiple; it does not produce a layer in the classification"
            ));
        }
        turning_points.push(TurningPoint {
            x,
            kind,
            db,
            c,
            lambda_cap,
        });
    }

    // separation distances of attractive points
    let xs: Vec<f64> = attractive.iter().map(|a| a.x).collect();
    for a in attractive.iter_mut() {
        let mut d = (a.x - p.lo).min(p.hi - a.x);
        for &y in &xs {
            if y != a.x {
                d = d.min((a.x - y).abs());
            }
        }
        a.delta = d;
    }

    let mut boundary = |x: f64, side: Side| -> Result<BoundaryLayer> {
        let b = p.b_at(x)?;
        let db = p.db_at(x)?;
        let c = c_at_point(p, x)?;
        let n = side.normal();
        let (kind, class) = if b.abs() <= opts.zero_tol {
            if db.abs() <= opts.deriv_tol {
                // Make sure the multiplicity is decidable: b'' must be computable.
                let ddb = p.db().differentiate("x").eval_x(x);
                match ddb {
                    Ok(v) if v.is_finite() => {}
                    _ => {
                        return Err(Error::Ambiguous {
                            x,
                            reason: String::from(
                                "b and b' vanish at the boundary but b'' cannot be evaluated; \
                                 declare the multiplicity of this root",
                            ),
                        })
                    }
                }
                if !(c > 0.0) {
                    return Err(Error::Ambiguous {
                        x,
                        reason: format!("multiple boundary root with c = {c} <= 0"),
                    });
                }
                (
                    TurningPointKind::BoundaryMultiple,
                    BoundaryClass::Exponential {
                        width: WidthClass::SqrtEps,
                        beta: libm::sqrt(c),
                    },
                )
            } else {
                let kind = if db < 0.0 {
                    TurningPointKind::BoundaryAttractive
                } else {
                    TurningPointKind::BoundaryRepulsive
                };
                (
                    kind,
                    BoundaryClass::Power {
                        lambda_cap: c / db.abs(),
                    },
                )
            }
        } else if b * n > 0.0 {
            (
                TurningPointKind::OutflowBoundary,
                BoundaryClass::Exponential {
                    width: WidthClass::Eps,
                    beta: b.abs(),
                },
            )
        } else {
            (TurningPointKind::InflowBoundary, BoundaryClass::None)
        };
        let other = match side {
            Side::Lower => p.hi,
            Side::Upper => p.lo,
        };
        let mut delta = (other - x).abs();
        let mut delta_k = delta;
        for a in &attractive {
            delta = delta.min((a.x - x).abs());
            if a.needs_refinement {
                delta_k = delta_k.min((a.x - x).abs());
            }
        }
        let eps = p.eps;
        let typical_width = match class {
            BoundaryClass::Exponential {
                width: WidthClass::Eps,
                beta,
            } => eps / beta * libm::log(1.0 / eps),
            BoundaryClass::Exponential {
                width: WidthClass::SqrtEps,
                beta,
            } => libm::sqrt(eps) / beta * libm::log(1.0 / libm::sqrt(eps)),
            _ => 0.0,
        };
        if b.abs() <= opts.zero_tol {
            turning_points.push(TurningPoint {
                x,
                kind,
                db,
                c,
                lambda_cap: (db.abs() > opts.deriv_tol).then(|| c / db.abs()),
            });
        }
        Ok(BoundaryLayer {
            x,
            side,
            kind,
            b,
            db,
            c,
            class,
            delta,
            delta_k,
            typical_width,
        })
    };
    let lower = boundary(p.lo, Side::Lower)?;
    let upper = boundary(p.hi, Side::Upper)?;
    turning_points.sort_by(|a, b| a.x.total_cmp(&b.x));

    Ok(LayerMap {
        lo: p.lo,
        hi: p.hi,
        eps: p.eps,
        k,
        boundaries: [lower, upper],
        turning_points,
        attractive,
        notes,
    })
}
