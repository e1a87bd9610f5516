//! Arithmetic expressions used for problem coefficients.
//!
//! Expressions are small trees over literals, the variables `x` and `u`,
//! named parameters, the constant `pi`, the binary operators `+ - * / ^`,
//! unary minus and the functions `sin cos exp ln sqrt abs pow`. They can be
//! parsed, printed, evaluated and differentiated symbolically.

mod diff;
mod parse;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;

pub use parse::{parse, parse_with, FUNCTION_NAMES};

/// Independent variables an expression may depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    U,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::U => "u",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "x" => Some(Var::X),
            "u" => Some(Var::U),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Unary functions. `pow(a, b)` is parsed into [`BinOp::Pow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => libm::sin(v),
            Func::Cos => libm::cos(v),
            Func::Exp => libm::exp(v),
            Func::Ln => libm::log(v),
            Func::Sqrt => libm::sqrt(v),
            Func::Abs => libm::fabs(v),
        }
    }
}

/// Expression tree. Immutable once built; cheap to share between threads.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Param(String),
    Pi,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}; allowed names: {allowed}")]
    UnknownIdentifier {
        name: String,
        offset: usize,
        allowed: String,
    },
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
}

/// Values for the free names of an expression.
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    x: Option<f64>,
    u: Option<f64>,
    params: BTreeMap<String, f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        match Var::from_name(name) {
            Some(Var::X) => self.x = Some(value),
            Some(Var::U) => self.u = Some(value),
            None => {
                self.params.insert(name.to_string(), value);
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        match Var::from_name(name) {
            Some(Var::X) => self.x,
            Some(Var::U) => self.u,
            None => self.params.get(name).copied(),
        }
    }
}

impl From<BTreeMap<String, f64>> for Bindings {
    fn from(map: BTreeMap<String, f64>) -> Self {
        let mut b = Bindings::new();
        for (k, v) in map {
            b.set(&k, v);
        }
        b
    }
}

struct Env<'a> {
    x: Option<f64>,
    u: Option<f64>,
    params: Option<&'a BTreeMap<String, f64>>,
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn u() -> Expr {
        Expr::Var(Var::U)
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(name.to_string())
    }

    /// Evaluates with the given bindings.
    pub fn eval(&self, bindings: &Bindings) -> Result<f64, ExprError> {
        self.eval_env(&Env {
            x: bindings.x,
            u: bindings.u,
            params: Some(&bindings.params),
        })
    }

    /// Fast path for parameter-free expressions in `x` only.
    pub fn eval_x(&self, x: f64) -> Result<f64, ExprError> {
        self.eval_env(&Env {
            x: Some(x),
            u: None,
            params: None,
        })
    }

    /// Fast path for parameter-free expressions in `x` and `u`.
    pub fn eval_xu(&self, x: f64, u: f64) -> Result<f64, ExprError> {
        self.eval_env(&Env {
            x: Some(x),
            u: Some(u),
            params: None,
        })
    }

    fn eval_env(&self, env: &Env<'_>) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Pi => core::f64::consts::PI,
            Expr::Var(Var::X) => env.x.ok_or_else(|| ExprError::Unbound("x".into()))?,
            Expr::Var(Var::U) => env.u.ok_or_else(|| ExprError::Unbound("u".into()))?,
            Expr::Param(name) => env
                .params
                .and_then(|p| p.get(name).copied())
                .ok_or_else(|| ExprError::Unbound(name.clone()))?,
            Expr::Neg(a) => -a.eval_env(env)?,
            Expr::Bin(op, a, b) => {
                let l = a.eval_env(env)?;
                let r = b.eval_env(env)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Pow => checked_pow(l, r).ok_or_else(|| ExprError::Domain {
                        subexpr: self.to_string(),
                        reason: format!("fractional power {r} of negative base {l}"),
                    })?,
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval_env(env)?;
                match f {
                    Func::Ln if v <= 0.0 => {
                        return Err(ExprError::Domain {
                            subexpr: self.to_string(),
                            reason: format!("logarithm of non-positive value {v}"),
                        })
                    }
                    Func::Sqrt if v < 0.0 => {
                        return Err(ExprError::Domain {
                            subexpr: self.to_string(),
                            reason: format!("square root of negative value {v}"),
                        })
                    }
                    _ => f.apply(v),
                }
            }
        })
    }

    /// Symbolic derivative with respect to a variable or parameter name.
    pub fn differentiate(&self, var: &str) -> Expr {
        diff::differentiate(self, var)
    }

    /// Replaces every occurrence of `name` (variable or parameter) by `with`.
    pub fn substitute(&self, name: &str, with: &Expr) -> Expr {
        match self {
            Expr::Var(v) if v.name() == name => with.clone(),
            Expr::Param(p) if p == name => with.clone(),
            Expr::Num(_) | Expr::Pi | Expr::Var(_) | Expr::Param(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(name, with))),
            Expr::Bin(op, a, b) => Expr::Bin(
                *op,
                Box::new(a.substitute(name, with)),
                Box::new(b.substitute(name, with)),
            ),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(name, with))),
        }
    }

    /// Substitutes numeric parameter values and folds literal arithmetic.
    pub fn bind_params(&self, params: &BTreeMap<String, f64>) -> Expr {
        match self {
            Expr::Param(p) => match params.get(p) {
                Some(v) => Expr::Num(*v),
                None => self.clone(),
            },
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => diff::neg(a.bind_params(params)),
            Expr::Bin(op, a, b) => diff::bin(*op, a.bind_params(params), b.bind_params(params)),
            Expr::Call(f, a) => diff::call(*f, a.bind_params(params)),
        }
    }

    /// Names of all variables and parameters the expression reads.
    pub fn free_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.name().to_string());
            }
            Expr::Param(p) => {
                out.insert(p.clone());
            }
            Expr::Num(_) | Expr::Pi => {}
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_names(out),
            Expr::Bin(_, a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
        }
    }

    pub fn depends_on(&self, name: &str) -> bool {
        match self {
            Expr::Var(v) => v.name() == name,
            Expr::Param(p) => p == name,
            Expr::Num(_) | Expr::Pi => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(name),
            Expr::Bin(_, a, b) => a.depends_on(name) || b.depends_on(name),
        }
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }
}

/// `base^exp` that refuses fractional powers of negative numbers.
fn checked_pow(base: f64, exp: f64) -> Option<f64> {
    if is_integer(exp) {
        if libm::fabs(exp) <= i32::MAX as f64 {
            Some(powi(base, exp as i32))
        } else {
            Some(libm::pow(base, exp))
        }
    } else if base < 0.0 {
        None
    } else {
        Some(libm::pow(base, exp))
    }
}

pub(crate) fn is_integer(v: f64) -> bool {
    v.is_finite() && libm::trunc(v) == v
}

/// Integer power by repeated squaring, so results are reproducible and
/// exact for small integer bases.
pub(crate) fn powi(base: f64, exp: i32) -> f64 {
    let mut n = exp.unsigned_abs();
    let mut acc = 1.0;
    let mut b = base;
    while n > 0 {
        if n & 1 == 1 {
            acc *= b;
        }
        b *= b;
        n >>= 1;
    }
    if exp < 0 {
        1.0 / acc
    } else {
        acc
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesised form; parsing it back yields the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
                write!(f, "(-{:?})", -v)
            }
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Param(p) => f.write_str(p),
            Expr::Pi => f.write_str("pi"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_x(src: &str, x: f64) -> f64 {
        parse(src).unwrap().eval(&Bindings::new().with("x", x)).unwrap()
    }

    #[test]
    fn evaluates_examples() {
        assert_eq!(at_x("x*(1-x)^2", 0.5), 0.125);
        assert_eq!(at_x("0", 123.0), 0.0);
        assert_eq!(at_x("-(x+1)*x*(x-1/2)*(x-27/30)^3", 0.0), 0.0);
        assert_eq!(at_x("x^2", 3.0), 9.0);
        assert!((at_x("sin(pi*x)", 0.5) - 1.0).abs() < 1e-15);
        let e = parse("exp(-x/eps)").unwrap();
        let b = Bindings::new().with("x", 0.0).with("eps", 0.01);
        assert_eq!(e.eval(&b).unwrap(), 1.0);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(at_x("-x^2", 3.0), -9.0);
        assert_eq!(at_x("2^3^2", 0.0), 512.0);
        assert_eq!(at_x("8/4/2", 0.0), 1.0);
        assert_eq!(at_x("8-4-2", 0.0), 2.0);
        assert_eq!(at_x("2*3+4*5", 0.0), 26.0);
        assert_eq!(at_x("x^-1", 4.0), 0.25);
        assert_eq!(at_x("pow(x, 3)", 2.0), 8.0);
        assert_eq!(at_x("1.5e2 + 2E-1", 0.0), 150.2);
    }

    #[test]
    fn unbound_and_domain_errors() {
        let e = parse("x + alpha").unwrap();
        assert_eq!(
            e.eval(&Bindings::new().with("x", 1.0)),
            Err(ExprError::Unbound("alpha".into()))
        );
        match parse("ln(x)").unwrap().eval_x(-1.0) {
            Err(ExprError::Domain { subexpr, .. }) => assert_eq!(subexpr, "ln(x)"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("sqrt(x - 2)").unwrap().eval_x(1.0),
            Err(ExprError::Domain { .. })
        ));
        assert!(matches!(
            parse("x^0.5").unwrap().eval_x(-1.0),
            Err(ExprError::Domain { .. })
        ));
        assert_eq!(at_x("x^3", -2.0), -8.0);
    }

    #[test]
    fn derivative_examples() {
        let d = parse("u^3").unwrap().differentiate("u");
        assert_eq!(d.eval(&Bindings::new().with("u", 2.0)).unwrap(), 12.0);
        let d = parse("c0").unwrap().differentiate("x");
        assert_eq!(d, Expr::Num(0.0));
        let d = parse("x*(1-x)").unwrap().differentiate("x");
        assert_eq!(d.eval_x(0.0).unwrap(), 1.0);
    }

    #[test]
    fn bind_params_folds_constants() {
        let mut p = BTreeMap::new();
        p.insert("a".to_string(), 2.0);
        let e = parse("a*3 + x").unwrap().bind_params(&p);
        assert_eq!(e.to_string(), "(6.0 + x)");
        assert_eq!(e.eval_x(1.0).unwrap(), 7.0);
    }

    #[test]
    fn substitute_shifts_u() {
        let e = parse("u^2").unwrap();
        let shifted = e.substitute("u", &parse("u + x").unwrap());
        assert_eq!(shifted.eval_xu(1.0, 2.0).unwrap(), 9.0);
    }

    #[test]
    fn printer_round_trips() {
        for src in [
            "x*(1-x)^2",
            "-(x+1)*x*(x-1/2)*(x-27/30)^3",
            "exp(-x/eps) + sin(pi*x)",
            "-x^2 - -3",
            "pow(x, 2.5) / abs(u)",
        ] {
            let a = parse(src).unwrap();
            let b = parse(&a.to_string()).unwrap();
            assert_eq!(a, b, "{src}");
        }
    }
}
