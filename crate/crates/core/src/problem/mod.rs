//! Boundary value problems of the form
//! `-eps u'' + b(x) u' + f(x, u) = 0` with Dirichlet data, and their linear
//! specialisation `f(x, u) = c(x) u - f(x)`.

mod bounds;
mod layers;
mod transform;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::Expr;

pub use bounds::{a_priori_bound, phi_boundary, LambdaChoices};
pub use layers::{
    classify_layers, AttractivePoint, BoundaryClass, BoundaryLayer, ClassifyOptions, LayerMap, Side, TurningPoint,
    TurningPointKind, WidthClass,
};
pub use transform::{transform_linear_problem, AuxiliaryFunction, TransformOptions, TransformedProblem};

/// The zeroth-order term.
#[derive(Debug, Clone, PartialEq)]
pub enum Reaction {
    /// `f(x, u) = c(x) u - rhs(x)`.
    Linear { c: Expr, rhs: Expr },
    /// General `f(x, u)`. `c_lower` is an optional declared lower bound
    /// `c(x) <= d f/du`; when absent `d f/du (x, 0)` stands in for it.
    Semilinear { f: Expr, c_lower: Option<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryValueProblem {
    pub lo: f64,
    pub hi: f64,
    pub eps: f64,
    pub b: Expr,
    pub reaction: Reaction,
    pub nu_minus: f64,
    pub nu_plus: f64,
    /// Declared `gamma` with `c >= gamma > 0`, if any.
    pub gamma: Option<f64>,
    /// Declared `gamma~` with `c - b'/2 >= gamma~ > 0`, if any.
    pub gamma_tilde: Option<f64>,
    db: Expr,
    dfdu: Expr,
}

fn check_names(e: &Expr, allowed: &[&str], what: &str) -> Result<()> {
    for name in e.free_names() {
        if !allowed.contains(&name.as_str()) {
            return Err(Error::Invalid(format!(
                "{what} depends on unbound name `{name}` (bind parameters first)"
            )));
        }
    }
    Ok(())
}

impl BoundaryValueProblem {
    pub fn new(lo: f64, hi: f64, eps: f64, b: Expr, reaction: Reaction) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Invalid(format!("interval [{lo}, {hi}] is empty")));
        }
        if !(eps > 0.0) {
            return Err(Error::Invalid(format!("eps must be positive, got {eps}")));
        }
        check_names(&b, &["x"], "b")?;
        let dfdu = match &reaction {
            Reaction::Linear { c, rhs } => {
                check_names(c, &["x"], "c")?;
                check_names(rhs, &["x"], "f")?;
                c.clone()
            }
            Reaction::Semilinear { f, c_lower } => {
                check_names(f, &["x", "u"], "f")?;
                if let Some(c) = c_lower {
                    check_names(c, &["x"], "c")?;
                }
                f.differentiate("u")
            }
        };
        let db = b.differentiate("x");
        Ok(BoundaryValueProblem {
            lo,
            hi,
            eps,
            b,
            reaction,
            nu_minus: 0.0,
            nu_plus: 0.0,
            gamma: None,
            gamma_tilde: None,
            db,
            dfdu,
        })
    }

    pub fn linear(lo: f64, hi: f64, eps: f64, b: Expr, c: Expr, rhs: Expr) -> Result<Self> {
        Self::new(lo, hi, eps, b, Reaction::Linear { c, rhs })
    }

    pub fn semilinear(lo: f64, hi: f64, eps: f64, b: Expr, f: Expr) -> Result<Self> {
        Self::new(lo, hi, eps, b, Reaction::Semilinear { f, c_lower: None })
    }

    pub fn with_boundary_values(mut self, nu_minus: f64, nu_plus: f64) -> Self {
        self.nu_minus = nu_minus;
        self.nu_plus = nu_plus;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_gamma(mut self, gamma: f64, gamma_tilde: f64) -> Self {
        self.gamma = Some(gamma);
        self.gamma_tilde = Some(gamma_tilde);
        self
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.reaction, Reaction::Linear { .. })
    }

    pub fn is_homogeneous(&self) -> bool {
        self.nu_minus == 0.0 && self.nu_plus == 0.0
    }

    /// `b'` as an expression.
    pub fn db(&self) -> &Expr {
        &self.db
    }

    pub fn b_at(&self, x: f64) -> Result<f64> {
        self.b.eval_x(x).map_err(|source| Error::ExprAt { x, source })
    }

    pub fn db_at(&self, x: f64) -> Result<f64> {
        self.db.eval_x(x).map_err(|source| Error::ExprAt { x, source })
    }

    /// `f(x, u)`; in the linear case `c(x) u - rhs(x)`.
    pub fn f_at(&self, x: f64, u: f64) -> Result<f64> {
        let r = match &self.reaction {
            Reaction::Linear { c, rhs } => c.eval_x(x).and_then(|cv| rhs.eval_x(x).map(|fv| cv * u - fv)),
            Reaction::Semilinear { f, .. } => f.eval_xu(x, u),
        };
        r.map_err(|source| Error::ExprAt { x, source })
    }

    /// `d f / du (x, u)`.
    pub fn dfdu_at(&self, x: f64, u: f64) -> Result<f64> {
        self.dfdu.eval_xu(x, u).map_err(|source| Error::ExprAt { x, source })
    }

    /// The reaction coefficient `c(x)` (declared lower bound in the
    /// semilinear case, else `df/du (x, 0)`).
    pub fn c_at(&self, x: f64) -> Result<f64> {
        match &self.reaction {
            Reaction::Linear { c, .. } => c.eval_x(x),
            Reaction::Semilinear { c_lower: Some(c), .. } => c.eval_x(x),
            Reaction::Semilinear { .. } => self.dfdu.eval_xu(x, 0.0),
        }
        .map_err(|source| Error::ExprAt { x, source })
    }

    /// Sampled `min (c - b'/2)` on `samples` uniform points, unless declared.
    pub fn gamma_tilde_or_sampled(&self, samples: usize) -> Result<f64> {
        if let Some(g) = self.gamma_tilde {
            return Ok(g);
        }
        let mut m = f64::INFINITY;
        for x in sample_grid(self.lo, self.hi, samples.max(2)) {
            m = m.min(self.c_at(x)? - 0.5 * self.db_at(x)?);
        }
        Ok(m)
    }
}

pub(crate) fn sample_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| {
        if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * (i as f64 / (n - 1) as f64)
        }
    })
}

/// A sample point where a standing assumption fails.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub x: f64,
    pub u: Option<f64>,
    pub quantity: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub ok: bool,
    /// `min c` (in the semilinear case `min df/du` over the sampled box).
    pub min_c: f64,
    /// `min (c - b'/2)`.
    pub min_c_minus_half_db: f64,
    pub u_range: Option<(f64, f64)>,
    pub witnesses: Vec<Witness>,
}

const MAX_WITNESSES: usize = 16;

/// Default `u` range `[-M, M]` for semilinear checks,
/// `M = max(|nu_-|, |nu_+|, max |f(., 0) / c|)`.
pub fn default_u_range(p: &BoundaryValueProblem, grid_size: usize) -> Result<(f64, f64)> {
    let mut m = p.nu_minus.abs().max(p.nu_plus.abs());
    for x in sample_grid(p.lo, p.hi, grid_size) {
        let c = p.c_at(x)?;
        if c > 0.0 {
            m = m.max((p.f_at(x, 0.0)? / c).abs());
        }
    }
    Ok((-m, m))
}

/// Samples `c >= gamma > 0` and `c - b'/2 >= gamma~ > 0` on a uniform grid
/// (and, for semilinear problems, over a `u` grid).
pub fn check_assumptions(
    p: &BoundaryValueProblem,
    grid_size: usize,
    u_range: Option<(f64, f64)>,
) -> Result<AssumptionReport> {
    if grid_size < 2 {
        return Err(Error::Invalid("grid_size must be at least 2".into()));
    }
    let gamma = p.gamma.unwrap_or(0.0);
    let gamma_tilde = p.gamma_tilde.unwrap_or(0.0);
    let mut min_c = f64::INFINITY;
    let mut min_ct = f64::INFINITY;
    let mut witnesses = Vec::new();
    let mut push = |w: Witness| {
        if witnesses.len() < MAX_WITNESSES {
            witnesses.push(w);
        }
    };
    let mut failed = false;
    let u_range = if p.is_linear() {
        None
    } else {
        Some(match u_range {
            Some(r) => r,
            None => default_u_range(p, grid_size)?,
        })
    };
    for x in sample_grid(p.lo, p.hi, grid_size) {
        let db = p.db_at(x)?;
        let c = match u_range {
            None => p.c_at(x)?,
            Some((ulo, uhi)) => {
                let mut cmin = f64::INFINITY;
                for u in sample_grid(ulo, uhi, grid_size.min(65)) {
                    let d = p.dfdu_at(x, u)?;
                    if d <= gamma {
                        failed = true;
                        push(Witness {
                            x,
                            u: Some(u),
                            quantity: "df/du",
                            value: d,
                        });
                    }
                    cmin = cmin.min(d);
                }
                cmin
            }
        };
        if u_range.is_none() && c <= gamma {
            failed = true;
            push(Witness {
                x,
                u: None,
                quantity: "c",
                value: c,
            });
        }
        let ct = c - 0.5 * db;
        if ct <= gamma_tilde {
            failed = true;
            push(Witness {
                x,
                u: None,
                quantity: "c - b'/2",
                value: ct,
            });
        }
        min_c = min_c.min(c);
        min_ct = min_ct.min(ct);
    }
    Ok(AssumptionReport {
        ok: !failed,
        min_c,
        min_c_minus_half_db: min_ct,
        u_range,
        witnesses,
    })
}

/// Affine lift `u~(x) = ((hi - x) nu_- + (x - lo) nu_+) / (hi - lo)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lift {
    pub lo: f64,
    pub hi: f64,
    pub nu_minus: f64,
    pub nu_plus: f64,
}

impl Lift {
    pub fn value(&self, x: f64) -> f64 {
        ((self.hi - x) * self.nu_minus + (x - self.lo) * self.nu_plus) / (self.hi - self.lo)
    }

    pub fn slope(&self) -> f64 {
        (self.nu_plus - self.nu_minus) / (self.hi - self.lo)
    }

    pub fn is_zero(&self) -> bool {
        self.nu_minus == 0.0 && self.nu_plus == 0.0
    }

    pub fn expr(&self) -> Expr {
        let text = format!(
            "(({hi:?} - x) * {a:?} + (x - {lo:?}) * {b:?}) / {len:?}",
            hi = self.hi,
            lo = self.lo,
            a = self.nu_minus,
            b = self.nu_plus,
            len = self.hi - self.lo
        );
        crate::expr::parse(&text).expect("lift expression is well formed")
    }
}

/// Rewrites the problem with homogeneous boundary values. The returned
/// problem's solution `w` gives `w + lift` as solution of `p`.
pub fn homogenize(p: &BoundaryValueProblem) -> (BoundaryValueProblem, Lift) {
    let lift = Lift {
        lo: p.lo,
        hi: p.hi,
        nu_minus: p.nu_minus,
        nu_plus: p.nu_plus,
    };
    if lift.is_zero() {
        return (p.clone(), lift);
    }
    let lexpr = lift.expr();
    let slope = Expr::Num(lift.slope());
    let b_slope = Expr::Bin(
        crate::expr::BinOp::Mul,
        alloc::boxed::Box::new(p.b.clone()),
        alloc::boxed::Box::new(slope),
    );
    let reaction = match &p.reaction {
        Reaction::Linear { c, rhs } => {
            // c (w + lift) - rhs + b lift' = c w - (rhs - b lift' - c lift)
            let c_lift = Expr::Bin(
                crate::expr::BinOp::Mul,
                alloc::boxed::Box::new(c.clone()),
                alloc::boxed::Box::new(lexpr),
            );
            let new_rhs = sub(sub(rhs.clone(), b_slope), c_lift);
            Reaction::Linear {
                c: c.clone(),
                rhs: new_rhs,
            }
        }
        Reaction::Semilinear { f, c_lower } => {
            let shifted_u = add(Expr::u(), lexpr);
            Reaction::Semilinear {
                f: add(f.substitute("u", &shifted_u), b_slope),
                c_lower: c_lower.clone(),
            }
        }
    };
    let mut q = p.clone();
    q.nu_minus = 0.0;
    q.nu_plus = 0.0;
    q.dfdu = match &reaction {
        Reaction::Linear { c, .. } => c.clone(),
        Reaction::Semilinear { f, .. } => f.differentiate("u"),
    };
    q.reaction = reaction;
    (q, lift)
}

fn add(a: Expr, b: Expr) -> Expr {
    Expr::Bin(
        crate::expr::BinOp::Add,
        alloc::boxed::Box::new(a),
        alloc::boxed::Box::new(b),
    )
}

fn sub(a: Expr, b: Expr) -> Expr {
    Expr::Bin(
        crate::expr::BinOp::Sub,
        alloc::boxed::Box::new(a),
        alloc::boxed::Box::new(b),
    )
}

/// Short human-readable description of a problem.
pub fn describe(p: &BoundaryValueProblem) -> String {
    match &p.reaction {
        Reaction::Linear { c, rhs } => format!(
            "-{} u'' + ({}) u' + ({}) u = {} on [{}, {}], u = ({}, {})",
            p.eps, p.b, c, rhs, p.lo, p.hi, p.nu_minus, p.nu_plus
        ),
        Reaction::Semilinear { f, .. } => format!(
            "-{} u'' + ({}) u' + {} = 0 on [{}, {}], u = ({}, {})",
            p.eps, p.b, f, p.lo, p.hi, p.nu_minus, p.nu_plus
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn lin(b: &str, c: &str) -> BoundaryValueProblem {
        BoundaryValueProblem::linear(
            0.0,
            1.0,
            1e-3,
            parse(b).unwrap(),
            parse(c).unwrap(),
            parse("1").unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn assumption_examples() {
        let r = check_assumptions(&lin("x", "2+x"), 101, None).unwrap();
        assert!(r.ok);
        assert_eq!(r.min_c, 2.0);
        assert_eq!(r.min_c_minus_half_db, 1.5);

        let r = check_assumptions(&lin("0", "1"), 101, None).unwrap();
        assert!(r.ok);
        assert_eq!(r.min_c_minus_half_db, 1.0);

        let r = check_assumptions(&lin("x", "0.4"), 101, None).unwrap();
        assert!(!r.ok);
        assert!((r.min_c_minus_half_db + 0.1).abs() < 1e-15);
        assert!(!r.witnesses.is_empty());
        assert!(r.witnesses.iter().all(|w| w.quantity == "c - b'/2"));
    }

    #[test]
    fn semilinear_assumptions_sample_u() {
        let p = BoundaryValueProblem::semilinear(0.0, 1.0, 1e-2, parse("1").unwrap(), parse("u + u^3 - 1").unwrap())
            .unwrap()
            .with_boundary_values(0.0, 2.0);
        let r = check_assumptions(&p, 11, None).unwrap();
        assert!(r.ok);
        assert_eq!(r.u_range, Some((-2.0, 2.0)));
        assert_eq!(r.min_c, 1.0);
        let bad = BoundaryValueProblem::semilinear(0.0, 1.0, 1e-2, parse("0").unwrap(), parse("u^3").unwrap()).unwrap();
        let r = check_assumptions(&bad, 11, Some((-1.0, 1.0))).unwrap();
        assert!(!r.ok);
        assert!(check_assumptions(&bad, 1, None).is_err());
    }

    #[test]
    fn homogenize_identity_when_zero_data() {
        let p = lin("x", "2");
        let (q, lift) = homogenize(&p);
        assert_eq!(q, p);
        assert!(lift.is_zero());
        assert_eq!(lift.value(0.3), 0.0);
    }

    #[test]
    fn homogenize_semilinear() {
        let p = BoundaryValueProblem::semilinear(0.0, 1.0, 0.1, parse("1 + x").unwrap(), parse("u^3 - x").unwrap())
            .unwrap()
            .with_boundary_values(1.0, 3.0);
        let (q, lift) = homogenize(&p);
        assert!(q.is_homogeneous());
        assert_eq!(lift.value(0.0), 1.0);
        assert_eq!(lift.value(1.0), 3.0);
        assert_eq!(lift.slope(), 2.0);
        for &(x, w) in &[(0.2, 0.5), (0.7, -1.0)] {
            // f~(x, w) = f(x, w + 1 + 2x) + 2 b(x)
            let expect = p.f_at(x, w + 1.0 + 2.0 * x).unwrap() + 2.0 * p.b_at(x).unwrap();
            assert!((q.f_at(x, w).unwrap() - expect).abs() < 1e-13);
            let d = q.dfdu_at(x, w).unwrap();
            assert!((d - 3.0 * (w + 1.0 + 2.0 * x).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn homogenize_linear() {
        let p = BoundaryValueProblem::linear(
            0.0,
            1.0,
            0.1,
            parse("x").unwrap(),
            parse("2").unwrap(),
            parse("1").unwrap(),
        )
        .unwrap()
        .with_boundary_values(1.0, 3.0);
        let (q, _) = homogenize(&p);
        match &q.reaction {
            Reaction::Linear { rhs, .. } => {
                let x = 0.4;
                // f - b u~' - c u~
                let expect = 1.0 - x * 2.0 - 2.0 * (1.0 + 2.0 * x);
                assert!((rhs.eval_x(x).unwrap() - expect).abs() < 1e-14);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn rejects_unbound_names_and_bad_intervals() {
        assert!(BoundaryValueProblem::linear(
            0.0,
            1.0,
            1e-3,
            parse("x*a").unwrap(),
            parse("1").unwrap(),
            parse("1").unwrap()
        )
        .is_err());
        assert!(BoundaryValueProblem::linear(
            1.0,
            0.0,
            1e-3,
            parse("x").unwrap(),
            parse("1").unwrap(),
            parse("1").unwrap()
        )
        .is_err());
        assert!(BoundaryValueProblem::linear(
            0.0,
            1.0,
            0.0,
            parse("x").unwrap(),
            parse("1").unwrap(),
            parse("1").unwrap()
        )
        .is_err());
    }
}
