//! Exponential change of variables `w = exp(-kappa p) u` for linear
//! problems whose reaction coefficient is not positive everywhere.
//!
//! With `L v = -eps v'' + b v' + c v` and the transformed operator
//! `Lk v = -eps v'' + bk v' + ck v`, where
//!
//! ```text
//! bk = b - 2 eps kappa p'
//! ck = c - eps kappa p'' + b kappa p' - eps kappa^2 p'^2
//! ```
//!
//! one has `Lk(exp(-kappa p) v) = exp(-kappa p) L v`.

use alloc::format;
use alloc::vec::Vec;

use super::layers::{classify_layers, ClassifyOptions};
use super::{sample_grid, BoundaryValueProblem, Reaction};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, Rule};

/// Smooth `p >= 1` with `sgn(b) p' in [0, 1]`, `p' = 0` near the roots of
/// `b` and `p' = sgn(b)` away from them. Built by mollifying a piecewise
/// linear function.
#[derive(Debug, Clone)]
pub struct AuxiliaryFunction {
    lo: f64,
    /// Kinks of the piecewise linear function.
    knots: Vec<f64>,
    /// Slope left of `knots[0]`, between knots, right of the last knot.
    slopes: Vec<f64>,
    /// Value of the piecewise linear function at each knot.
    knot_values: Vec<f64>,
    radius: f64,
    norm: f64,
    shift: f64,
    rule: Rule,
}

const PANELS: usize = 4;

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        libm::exp(-1.0 / (1.0 - s * s))
    }
}

impl AuxiliaryFunction {
    /// `roots` are the zeros of `b`; `sign_at` gives `sgn b` at a point
    /// away from them.
    pub fn new(
        lo: f64,
        hi: f64,
        roots: &[f64],
        delta0: f64,
        mut sign_at: impl FnMut(f64) -> Result<f64>,
    ) -> Result<Self> {
        let reach = 2.0 * delta0 / 3.0;
        // excluded balls, merged, clipped to [lo, hi]
        let mut balls: Vec<(f64, f64)> = Vec::new();
        let mut sorted = roots.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        for &m in &sorted {
            let (a, b) = ((m - reach).max(lo), (m + reach).min(hi));
            match balls.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => balls.push((a, b)),
            }
        }
        // pieces of [lo, hi] with their slope
        let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
        let mut cur = lo;
        for &(a, b) in &balls {
            if a > cur {
                pieces.push((cur, a, sign_at(0.5 * (cur + a))?));
            }
            pieces.push((a, b, 0.0));
            cur = b;
        }
        if cur < hi {
            pieces.push((cur, hi, sign_at(0.5 * (cur + hi))?));
        }
        pieces.retain(|p| p.1 > p.0);
        let mut knots = Vec::new();
        let mut slopes = alloc::vec![pieces[0].2];
        for w in pieces.windows(2) {
            knots.push(w[0].1);
            slopes.push(w[1].2);
        }
        let mut knot_values = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        let mut prev = lo;
        for (i, &t) in knots.iter().enumerate() {
            acc += slopes[i] * (t - prev);
            knot_values.push(acc);
            prev = t;
        }
        let radius = delta0 / 6.0;
        let rule = gauss_legendre(24);
        let mut f = AuxiliaryFunction {
            lo,
            knots,
            slopes,
            knot_values,
            radius,
            norm: 1.0,
            shift: 0.0,
            rule,
        };
        f.norm = f.integrate_kernel(-radius, radius, |_| 1.0);
        // the minimum sits at an endpoint or inside a flat zone around a root
        let mut min = f64::INFINITY;
        let candidates = sample_grid(lo, hi, 2001).chain(sorted.iter().copied());
        for x in candidates {
            min = min.min(f.raw_value(x));
        }
        f.shift = 1.0 - min;
        Ok(f)
    }

    fn kernel(&self, t: f64) -> f64 {
        bump(t / self.radius) / self.radius
    }

    /// `int_a^b g(t) kernel(t) dt` with Gauss panels.
    fn integrate_kernel(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let h = (b - a) / PANELS as f64;
        (0..PANELS)
            .map(|i| {
                let (l, r) = (
                    a + h * i as f64,
                    if i + 1 == PANELS { b } else { a + h * (i + 1) as f64 },
                );
                self.rule.integrate(l, r, |t| g(t) * self.kernel(t))
            })
            .sum()
    }

    fn slope_at(&self, y: f64) -> f64 {
        self.slopes[self.knots.partition_point(|&k| k <= y)]
    }

    fn hat(&self, y: f64) -> f64 {
        let i = self.knots.partition_point(|&k| k <= y);
        if self.knots.is_empty() {
            self.slopes[0] * (y - self.lo)
        } else if i == 0 {
            self.knot_values[0] + self.slopes[0] * (y - self.knots[0])
        } else {
            self.knot_values[i - 1] + self.slopes[i] * (y - self.knots[i - 1])
        }
    }

    /// Integrates `g(x - t) kernel(t)` over `t`, split at the kinks of `g`.
    fn convolve(&self, x: f64, g: impl Fn(f64) -> f64) -> f64 {
        let r = self.radius;
        let mut cuts: Vec<f64> = self.knots.iter().map(|k| x - k).filter(|t| *t > -r && *t < r).collect();
        cuts.sort_by(|a, b| a.total_cmp(b));
        let mut total = 0.0;
        let mut a = -r;
        for &c in cuts.iter().chain(core::iter::once(&r)) {
            total += self.integrate_kernel(a, c, |t| g(x - t));
            a = c;
        }
        total / self.norm
    }

    fn raw_value(&self, x: f64) -> f64 {
        self.convolve(x, |y| self.hat(y))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.raw_value(x) + self.shift
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.convolve(x, |y| self.slope_at(y))
    }

    /// Sum of slope jumps times the kernel centred at each kink.
    pub fn d2(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for (i, &k) in self.knots.iter().enumerate() {
            let jump = self.slopes[i + 1] - self.slopes[i];
            s += jump * self.kernel(x - k);
        }
        s / self.norm
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformOptions {
    /// Radius parameter of the auxiliary function; chosen automatically
    /// when absent.
    pub delta0: Option<f64>,
    /// Exponent scale; defaults to the value that makes both lower bounds
    /// positive away from the roots of `b`.
    pub kappa: Option<f64>,
    pub verify_grid: usize,
    /// Fail when the transformed coefficients do not satisfy the standing
    /// assumptions on the verification grid.
    pub verify: bool,
    /// Known roots of `b` (otherwise found by a scan).
    pub declared_roots: Option<Vec<f64>>,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            delta0: None,
            kappa: None,
            verify_grid: 1001,
            verify: true,
            declared_roots: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransformedProblem {
    pub original: BoundaryValueProblem,
    pub p: AuxiliaryFunction,
    pub kappa: f64,
    pub delta0: f64,
    pub nu_minus: f64,
    pub nu_plus: f64,
    /// `min ck` on the verification grid.
    pub min_c: f64,
    /// `min (ck - bk'/2)` on the verification grid.
    pub min_c_minus_half_db: f64,
}

/// Values of the transformed coefficients at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedCoefficients {
    pub b: f64,
    pub db: f64,
    pub c: f64,
    pub rhs: f64,
}

impl TransformedProblem {
    pub fn eps(&self) -> f64 {
        self.original.eps
    }

    pub fn coefficients(&self, x: f64) -> Result<TransformedCoefficients> {
        let p = &self.original;
        let (c, rhs) = match &p.reaction {
            Reaction::Linear { c, rhs } => (
                c.eval_x(x).map_err(|source| Error::ExprAt { x, source })?,
                rhs.eval_x(x).map_err(|source| Error::ExprAt { x, source })?,
            ),
            Reaction::Semilinear { .. } => unreachable!("checked at construction"),
        };
        let b = p.b_at(x)?;
        let db = p.db_at(x)?;
        let (k, e) = (self.kappa, p.eps);
        if k == 0.0 {
            return Ok(TransformedCoefficients { b, db, c, rhs });
        }
        let (pv, p1, p2) = (self.p.value(x), self.p.d1(x), self.p.d2(x));
        Ok(TransformedCoefficients {
            b: b - 2.0 * e * k * p1,
            db: db - 2.0 * e * k * p2,
            c: c - e * k * p2 + b * k * p1 - e * k * k * p1 * p1,
            rhs: libm::exp(-k * pv) * rhs,
        })
    }

    /// `w = exp(-kappa p) u`.
    pub fn forward(&self, x: f64, u: f64) -> f64 {
        if self.kappa == 0.0 {
            return u;
        }
        libm::exp(-self.kappa * self.p.value(x)) * u
    }

    /// `u = exp(kappa p) w`.
    pub fn inverse(&self, x: f64, w: f64) -> f64 {
        if self.kappa == 0.0 {
            return w;
        }
        libm::exp(self.kappa * self.p.value(x)) * w
    }
}

fn ball_min(p: &BoundaryValueProblem, roots: &[f64], radius: f64, g: &impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut m = f64::INFINITY;
    for &r in roots {
        let (a, b) = ((r - radius).max(p.lo), (r + radius).min(p.hi));
        for x in sample_grid(a, b, 65) {
            m = m.min(g(x)?);
        }
    }
    Ok(m)
}

/// Builds the transformed problem. Fails if the transformed coefficients
/// violate the standing assumptions on the verification grid (when
/// `opts.verify` is set).
pub fn transform_linear_problem(p: &BoundaryValueProblem, opts: &TransformOptions) -> Result<TransformedProblem> {
    if !p.is_linear() {
        return Err(Error::Transform("the transformation needs a linear problem".into()));
    }
    let lm = classify_layers(p, 1, opts.declared_roots.as_deref(), &ClassifyOptions::default())?;
    let roots: Vec<f64> = lm.turning_points.iter().map(|t| t.x).collect();
    let span = p.hi - p.lo;
    let c_of = |x: f64| p.c_at(x);
    let ct_of = |x: f64| Ok(p.c_at(x)? - 0.5 * p.db_at(x)?);

    let (c0, ct0) = if roots.is_empty() {
        (1.0, 1.0)
    } else {
        let mut c0 = f64::INFINITY;
        let mut ct0 = f64::INFINITY;
        for &r in &roots {
            c0 = c0.min(c_of(r)?);
            ct0 = ct0.min(ct_of(r)?);
        }
        (c0, ct0)
    };
    if !roots.is_empty() && c0 <= 0.0 && ct0 <= 0.0 {
        return Err(Error::Transform(format!(
            "reaction is not positive at the roots of b (min c = {c0}, min (c - b'/2) = {ct0})"
        )));
    }

    let delta0 = match opts.delta0 {
        Some(d) if d > 0.0 => d,
        Some(d) => return Err(Error::Transform(format!("delta0 must be positive, got {d}"))),
        None => {
            let mut d = span / 4.0;
            for w in roots.windows(2) {
                d = d.min((w[1] - w[0]) / 4.0);
            }
            let mut ok = roots.is_empty();
            for _ in 0..40 {
                if ok {
                    break;
                }
                let cm = ball_min(p, &roots, d, &c_of)?;
                let ctm = ball_min(p, &roots, d, &ct_of)?;
                if (c0 <= 0.0 || cm >= c0 / 2.0) && (ct0 <= 0.0 || ctm >= ct0 / 2.0) {
                    ok = true;
                } else {
                    d /= 2.0;
                }
            }
            if !ok {
                return Err(Error::Transform(
                    "could not find a neighbourhood of the roots where the reaction stays positive".into(),
                ));
            }
            d
        }
    };

    let kappa = match opts.kappa {
        Some(k) if k >= 0.0 => k,
        Some(k) => return Err(Error::Transform(format!("kappa must be nonnegative, got {k}"))),
        None => {
            let mut g0 = f64::INFINITY;
            let mut gt0 = f64::INFINITY;
            let mut b0 = f64::INFINITY;
            for x in sample_grid(p.lo, p.hi, opts.verify_grid) {
                g0 = g0.min(c_of(x)?);
                gt0 = gt0.min(ct_of(x)?);
                if roots.iter().all(|r| (x - r).abs() >= delta0 / 3.0) {
                    b0 = b0.min(p.b_at(x)?.abs());
                }
            }
            if !(b0 > 0.0 && b0.is_finite()) {
                return Err(Error::Transform(format!(
                    "|b| has no positive lower bound away from its roots (b0 = {b0})"
                )));
            }
            let lift = 0.0_f64.max(1.0 - g0).max(1.0 - gt0);
            (lift + c0.max(ct0) / 4.0) / b0
        }
    };

    let aux = AuxiliaryFunction::new(p.lo, p.hi, &roots, delta0, |x| {
        let b = p.b_at(x)?;
        Ok(if b > 0.0 {
            1.0
        } else if b < 0.0 {
            -1.0
        } else {
            0.0
        })
    })?;
    let mut t = TransformedProblem {
        original: p.clone(),
        p: aux,
        kappa,
        delta0,
        nu_minus: 0.0,
        nu_plus: 0.0,
        min_c: 0.0,
        min_c_minus_half_db: 0.0,
    };
    t.nu_minus = t.forward(p.lo, p.nu_minus);
    t.nu_plus = t.forward(p.hi, p.nu_plus);
    let mut min_c = f64::INFINITY;
    let mut min_ct = f64::INFINITY;
    for x in sample_grid(p.lo, p.hi, opts.verify_grid) {
        let tc = t.coefficients(x)?;
        min_c = min_c.min(tc.c);
        min_ct = min_ct.min(tc.c - 0.5 * tc.db);
    }
    t.min_c = min_c;
    t.min_c_minus_half_db = min_ct;
    if opts.verify && !(min_c > 0.0 && min_ct > 0.0) {
        return Err(Error::Transform(format!(
            "transformed coefficients fail the standing assumptions: min c = {min_c}, \
             min (c - b'/2) = {min_ct} (kappa = {kappa}, eps = {})",
            p.eps
        )));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn lin(b: &str, c: &str, eps: f64) -> BoundaryValueProblem {
        BoundaryValueProblem::linear(0.0, 1.0, eps, parse(b).unwrap(), parse(c).unwrap(), parse("1").unwrap()).unwrap()
    }

    #[test]
    fn constant_convection_gives_linear_p() {
        let p = lin("1", "0", 0.1);
        let opts = TransformOptions {
            kappa: Some(1.0),
            ..Default::default()
        };
        let t = transform_linear_problem(&p, &opts).unwrap();
        for x in [0.0, 0.25, 0.5, 1.0] {
            assert!((t.p.value(x) - (1.0 + x)).abs() < 1e-13);
            assert!((t.p.d1(x) - 1.0).abs() < 1e-13);
            assert!(t.p.d2(x).abs() < 1e-13);
            let c = t.coefficients(x).unwrap();
            assert!((c.c - 0.9).abs() < 1e-12);
            assert!((c.b - 0.8).abs() < 1e-12);
        }
        assert!(t.min_c >= 0.9 - 1e-12);
    }

    #[test]
    fn zero_kappa_is_identity() {
        let p = lin("1", "0", 0.1);
        let opts = TransformOptions {
            kappa: Some(0.0),
            verify: false,
            ..Default::default()
        };
        let t = transform_linear_problem(&p, &opts).unwrap();
        let c = t.coefficients(0.3).unwrap();
        assert_eq!(c.b, p.b_at(0.3).unwrap());
        assert_eq!(c.c, 0.0);
        assert_eq!(t.forward(0.3, 2.5), 2.5);
        assert_eq!(t.inverse(0.3, 2.5), 2.5);
    }

    #[test]
    fn auxiliary_function_shape() {
        // b changes sign at 0.5 from + to -: p increases then decreases
        let f = AuxiliaryFunction::new(0.0, 1.0, &[0.5], 0.3, |x| Ok(if x < 0.5 { 1.0 } else { -1.0 })).unwrap();
        assert!((f.d1(0.05) - 1.0).abs() < 1e-12);
        assert!((f.d1(0.95) + 1.0).abs() < 1e-12);
        assert_eq!(f.d1(0.5), 0.0);
        // flat zone of radius 2*0.3/3 - 0.3/6 = 0.15 around the root
        assert_eq!(f.d2(0.4), 0.0);
        let min = crate::problem::sample_grid(0.0, 1.0, 501)
            .map(|x| f.value(x))
            .fold(f64::INFINITY, f64::min);
        assert!((min - 1.0).abs() < 1e-12);
        // derivatives are consistent with finite differences
        for &x in &[0.2, 0.32, 0.33, 0.67, 0.8] {
            let h = 1e-5;
            let fd1 = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
            let fd2 = (f.d1(x + h) - f.d1(x - h)) / (2.0 * h);
            assert!((fd1 - f.d1(x)).abs() < 1e-7, "{x}: {fd1} vs {}", f.d1(x));
            assert!(
                (fd2 - f.d2(x)).abs() < 1e-4 * (1.0 + f.d2(x).abs()),
                "{x}: {fd2} vs {}",
                f.d2(x)
            );
        }
    }

    #[test]
    fn operator_identity() {
        // b has an interior root, c is negative away from it
        let p = BoundaryValueProblem::linear(
            0.0,
            1.0,
            0.05,
            parse("x - 0.5").unwrap(),
            parse("0.3 - 2*(x-0.5)^2").unwrap(),
            parse("1").unwrap(),
        )
        .unwrap();
        let t = transform_linear_problem(
            &p,
            &TransformOptions {
                verify: false,
                ..Default::default()
            },
        )
        .unwrap();
        let pi = core::f64::consts::PI;
        for i in 0..100 {
            let x = (i as f64 + 0.5) / 100.0;
            let (v, dv, ddv) = (libm::sin(pi * x), pi * libm::cos(pi * x), -pi * pi * libm::sin(pi * x));
            let (k, e) = (t.kappa, p.eps);
            let (pv, p1, p2) = (t.p.value(x), t.p.d1(x), t.p.d2(x));
            let ex = libm::exp(-k * pv);
            let w = ex * v;
            let dw = ex * (dv - k * p1 * v);
            let ddw = ex * ((-k * p2 + k * k * p1 * p1) * v - 2.0 * k * p1 * dv + ddv);
            let tc = t.coefficients(x).unwrap();
            let lhs = -e * ddw + tc.b * dw + tc.c * w;
            let lv = -e * ddv + p.b_at(x).unwrap() * dv + p.c_at(x).unwrap() * v;
            let rhs = ex * lv;
            assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()), "{x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn rejects_semilinear() {
        let p = BoundaryValueProblem::semilinear(0.0, 1.0, 0.1, parse("1").unwrap(), parse("u^3").unwrap()).unwrap();
        assert!(transform_linear_problem(&p, &TransformOptions::default()).is_err());
    }
}
