//! Symbolic differentiation with literal constant folding.

use alloc::boxed::Box;

use super::{checked_pow, BinOp, Expr, Func};

pub(super) fn differentiate(e: &Expr, var: &str) -> Expr {
    match e {
        Expr::Num(_) | Expr::Pi => Expr::Num(0.0),
        Expr::Var(v) => Expr::Num(if v.name() == var { 1.0 } else { 0.0 }),
        Expr::Param(p) => Expr::Num(if p == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(differentiate(a, var)),
        Expr::Bin(op, a, b) => {
            let (a, b) = (a.as_ref(), b.as_ref());
            match op {
                BinOp::Add => bin(BinOp::Add, differentiate(a, var), differentiate(b, var)),
                BinOp::Sub => bin(BinOp::Sub, differentiate(a, var), differentiate(b, var)),
                BinOp::Mul => bin(
                    BinOp::Add,
                    bin(BinOp::Mul, differentiate(a, var), b.clone()),
                    bin(BinOp::Mul, a.clone(), differentiate(b, var)),
                ),
                BinOp::Div => bin(
                    BinOp::Div,
                    bin(
                        BinOp::Sub,
                        bin(BinOp::Mul, differentiate(a, var), b.clone()),
                        bin(BinOp::Mul, a.clone(), differentiate(b, var)),
                    ),
                    bin(BinOp::Mul, b.clone(), b.clone()),
                ),
                BinOp::Pow => pow_derivative(a, b, var),
            }
        }
        Expr::Call(f, a) => {
            let inner = a.as_ref().clone();
            let da = differentiate(a, var);
            let outer = match f {
                Func::Sin => call(Func::Cos, inner),
                Func::Cos => neg(call(Func::Sin, inner)),
                Func::Exp => call(Func::Exp, inner),
                Func::Ln => bin(BinOp::Div, Expr::Num(1.0), inner),
                Func::Sqrt => bin(
                    BinOp::Div,
                    Expr::Num(1.0),
                    bin(BinOp::Mul, Expr::Num(2.0), call(Func::Sqrt, inner)),
                ),
                Func::Abs => bin(BinOp::Div, inner.clone(), call(Func::Abs, inner)),
            };
            bin(BinOp::Mul, outer, da)
        }
    }
}

fn pow_derivative(base: &Expr, exp: &Expr, var: &str) -> Expr {
    let dbase = differentiate(base, var);
    if !exp.depends_on(var) {
        // n * base^(n-1) * base'. For integer literal n the result keeps an
        // integer exponent, so it stays valid for negative bases.
        let reduced = match exp.as_num() {
            Some(n) => Expr::Num(n - 1.0),
            None => bin(BinOp::Sub, exp.clone(), Expr::Num(1.0)),
        };
        return bin(
            BinOp::Mul,
            bin(BinOp::Mul, exp.clone(), bin(BinOp::Pow, base.clone(), reduced)),
            dbase,
        );
    }
    // d(a^b) = a^b * (b' ln a + b a' / a)
    let dexp = differentiate(exp, var);
    bin(
        BinOp::Mul,
        bin(BinOp::Pow, base.clone(), exp.clone()),
        bin(
            BinOp::Add,
            bin(BinOp::Mul, dexp, call(Func::Ln, base.clone())),
            bin(BinOp::Div, bin(BinOp::Mul, exp.clone(), dbase), base.clone()),
        ),
    )
}

pub(super) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub(super) fn call(f: Func, a: Expr) -> Expr {
    if let Expr::Num(v) = a {
        let folded = match f {
            Func::Ln if v <= 0.0 => None,
            Func::Sqrt if v < 0.0 => None,
            _ => Some(f.apply(v)),
        };
        if let Some(r) = folded {
            return Expr::Num(r);
        }
    }
    Expr::Call(f, Box::new(a))
}

/// Builds `a op b`, folding literal arithmetic and the trivial 0/1 identities.
pub(super) fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
        let folded = match op {
            BinOp::Add => Some(x + y),
            BinOp::Sub => Some(x - y),
            BinOp::Mul => Some(x * y),
            BinOp::Div if y != 0.0 => Some(x / y),
            BinOp::Div => None,
            BinOp::Pow => checked_pow(x, y),
        };
        if let Some(r) = folded {
            return Expr::Num(r);
        }
    }
    let is = |e: &Expr, v: f64| e.as_num() == Some(v);
    match op {
        BinOp::Add if is(&a, 0.0) => return b,
        BinOp::Add | BinOp::Sub if is(&b, 0.0) => return a,
        BinOp::Sub if is(&a, 0.0) => return neg(b),
        BinOp::Mul if is(&a, 0.0) || is(&b, 0.0) => return Expr::Num(0.0),
        BinOp::Mul if is(&a, 1.0) => return b,
        BinOp::Mul | BinOp::Div if is(&b, 1.0) => return a,
        BinOp::Div if is(&a, 0.0) => return Expr::Num(0.0),
        BinOp::Pow if is(&b, 1.0) => return a,
        BinOp::Pow if is(&b, 0.0) => return Expr::Num(1.0),
        _ => {}
    }
    Expr::Bin(op, Box::new(a), Box::new(b))
}
