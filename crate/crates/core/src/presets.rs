//! Model problems with known layer structure and their hand-built meshes.
//!
//! All turning-point presets use `a(x) = 1`, load `1` and homogeneous
//! boundary values. The manufactured presets carry their exact solution.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;

use crate::error::{Error, Result};
use crate::expr::{parse, BinOp, Expr};
use crate::mesh::stype::fine_piece;
use crate::mesh::sun_stynes::power_piece;
use crate::mesh::{
    general_layer_mesh, glue, s_type_transition, LayerMeshOptions, Mesh, MeshGenFunction, Orientation, Piece,
    Provenance, SegmentKind,
};
use crate::problem::{classify_layers, BoundaryValueProblem, ClassifyOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// `b = x` on `[0, 1]`, `c = 2`: power layer at 0, outflow layer at 1.
    RepBouTpp,
    /// `b = -x (1-x)^2` on `[0, 1]`, `c = 2 + x`: attractive point at 0,
    /// double root with a sqrt(eps) layer at 1.
    AttMultBouTpp,
    /// `b = -(x+1) x (x-1/2) (x-27/30)^3` on `[-1, 1]`, `c = 6`.
    IntBouTpp,
    /// `b = x^2` on `[0, 1]`, `c = 1 + x`: sqrt(eps) layer at 0, eps layer
    /// at 1.
    TwoExpLayerTpp,
    /// `b = 1`, `c = 1`, exact solution `sin(pi x)`.
    ManufacturedSmooth,
    /// `b = 1`, `f(x, u) = u + u^3 - g(x)` with an outflow-layer exact
    /// solution.
    ManufacturedCubic,
}

pub const ALL_PRESETS: [Preset; 6] = [
    Preset::RepBouTpp,
    Preset::AttMultBouTpp,
    Preset::IntBouTpp,
    Preset::TwoExpLayerTpp,
    Preset::ManufacturedSmooth,
    Preset::ManufacturedCubic,
];

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    Expr::Bin(op, Box::new(a), Box::new(b))
}

fn with_eps(src: &str, eps: f64) -> Expr {
    let mut params = BTreeMap::new();
    params.insert(String::from("eps"), eps);
    parse(src).expect("preset expression").bind_params(&params)
}

/// `-eps u'' + b u' + c u` for expressions in `x`.
fn apply_operator(eps: f64, b: &Expr, c: &Expr, u: &Expr) -> Expr {
    let du = u.differentiate("x");
    let d2u = du.differentiate("x");
    let diff = bin(BinOp::Mul, Expr::Num(-eps), d2u);
    let conv = bin(BinOp::Mul, b.clone(), du);
    let reac = bin(BinOp::Mul, c.clone(), u.clone());
    bin(BinOp::Add, bin(BinOp::Add, diff, conv), reac)
}

const CUBIC_SOLUTION: &str = "x - (exp(-(1 - x)/eps) - exp(-1/eps)) / (1 - exp(-1/eps))";

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::RepBouTpp => "rep-bou-tpp",
            Preset::AttMultBouTpp => "att-mult-bou-tpp",
            Preset::IntBouTpp => "int-bou-tpp",
            Preset::TwoExpLayerTpp => "two-exp-layer-tpp",
            Preset::ManufacturedSmooth => "manufactured-smooth",
            Preset::ManufacturedCubic => "manufactured-cubic",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        ALL_PRESETS.iter().copied().find(|p| p.name() == s)
    }

    pub fn interval(self) -> (f64, f64) {
        match self {
            Preset::IntBouTpp => (-1.0, 1.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn problem(self, eps: f64) -> Result<BoundaryValueProblem> {
        let (lo, hi) = self.interval();
        let lin = |b: &str, c: &str| BoundaryValueProblem::linear(lo, hi, eps, parse(b)?, parse(c)?, parse("1")?);
        match self {
            Preset::RepBouTpp => lin("x", "2"),
            Preset::AttMultBouTpp => lin("-x*(1-x)^2", "2 + x"),
            Preset::IntBouTpp => lin("-(x+1)*x*(x-1/2)*(x-27/30)^3", "6"),
            Preset::TwoExpLayerTpp => lin("x^2", "1 + x"),
            Preset::ManufacturedSmooth => {
                let (b, c) = (parse("1")?, parse("1")?);
                let rhs = apply_operator(eps, &b, &c, &parse("sin(pi*x)")?);
                BoundaryValueProblem::linear(lo, hi, eps, b, c, rhs)
            }
            Preset::ManufacturedCubic => {
                let u = with_eps(CUBIC_SOLUTION, eps);
                let g = bin(
                    BinOp::Add,
                    apply_operator(eps, &parse("1")?, &parse("1")?, &u),
                    bin(BinOp::Pow, u, Expr::Num(3.0)),
                );
                let f = bin(BinOp::Sub, parse("u + u^3")?, g);
                BoundaryValueProblem::semilinear(lo, hi, eps, parse("1")?, f)
            }
        }
    }

    /// Exact solution, if known.
    pub fn exact(self, eps: f64) -> Option<Expr> {
        match self {
            Preset::ManufacturedSmooth => Some(parse("sin(pi*x)").expect("preset expression")),
            Preset::ManufacturedCubic => Some(with_eps(CUBIC_SOLUTION, eps)),
            _ => None,
        }
    }

    /// The preset's own mesh. Turning-point presets use their hand-built
    /// compositions; the smooth manufactured problem a uniform mesh and the
    /// cubic one the general layer-adapted mesh.
    pub fn mesh(self, eps: f64, n: usize, k: usize, opts: &LayerMeshOptions) -> Result<Mesh> {
        let p = self.problem(eps)?;
        let (lo, hi) = self.interval();
        let gen = MeshGenFunction::new(opts.generator, n);
        let prov = Provenance::new(self.name())
            .param("N", n as f64)
            .param("eps", eps)
            .param("k", k as f64)
            .param("rho", opts.rho);
        let fallback = |tau: f64, limit: f64, prov: Provenance| -> Result<Mesh> {
            let mut m = Mesh::uniform(lo, hi, n)?;
            *m.provenance_mut() = prov.note(format!(
                "fallback to uniform mesh: layer region width {tau} exceeds {limit}; an equidistant mesh already resolves the layer at this eps"
            ));
            Ok(m)
        };
        match self {
            Preset::RepBouTpp | Preset::AttMultBouTpp => {
                need_divisible(n, 2)?;
                let (eps_tilde, beta) = match self {
                    Preset::RepBouTpp => (eps, p.b_at(hi)?.abs()),
                    _ => (libm::sqrt(eps), libm::sqrt(p.c_at(hi)?)),
                };
                let tau = s_type_transition(eps_tilde, beta, opts.rho, n);
                let prov = prov.param("tau", tau).param("beta", beta);
                if tau > 0.5 * (hi - lo) {
                    return fallback(tau, 0.5 * (hi - lo), prov);
                }
                let (power, params) = power_piece(eps, 0.0, k, n / 2, lo, hi - tau, Orientation::LayerLeft)?;
                let fine = fine_piece(gen, eps_tilde, beta, opts.rho, n / 2, hi, Orientation::LayerRight);
                glue(vec![power, fine], prov.param("K", params.levels as f64))
            }
            Preset::IntBouTpp => {
                need_divisible(n, 4)?;
                let cap = p.c_at(0.0)? / p.db_at(0.0)?.abs();
                let lambda1 = (opts.mu * cap).min(opts.mu * (k + 1) as f64);
                let (left, p0) = power_piece(eps, 0.0, k, n / 4, -1.0, -0.5, Orientation::LayerLeft)?;
                let (mid, p1) = power_piece(eps, lambda1, k, n / 4, -0.5, 0.0, Orientation::LayerRight)?;
                let (right, p2) = power_piece(eps, lambda1, k, n / 2, 0.0, 1.0, Orientation::LayerLeft)?;
                let prov = prov
                    .param("lambda1", lambda1)
                    .param("K0", p0.levels as f64)
                    .param("K_left", p1.levels as f64)
                    .param("K_right", p2.levels as f64);
                glue(vec![left, mid, right], prov)
            }
            Preset::TwoExpLayerTpp => {
                need_divisible(n, 4)?;
                let beta0 = libm::sqrt(p.c_at(lo)?);
                let beta1 = p.b_at(hi)?.abs();
                let tau0 = s_type_transition(libm::sqrt(eps), beta0, opts.rho, n);
                let tau1 = s_type_transition(eps, beta1, opts.rho, n);
                let prov = prov
                    .param("tau0", tau0)
                    .param("tau1", tau1)
                    .param("beta0", beta0)
                    .param("beta1", beta1);
                if tau0.max(tau1) > 0.25 * (hi - lo) {
                    return fallback(tau0.max(tau1), 0.25 * (hi - lo), prov);
                }
                let left = fine_piece(gen, libm::sqrt(eps), beta0, opts.rho, n / 4, lo, Orientation::LayerLeft);
                let right = fine_piece(gen, eps, beta1, opts.rho, n / 4, hi, Orientation::LayerRight);
                let mid = Piece::uniform(lo + tau0, hi - tau1, n / 2, SegmentKind::Coarse);
                glue(vec![left, mid, right], prov)
            }
            Preset::ManufacturedSmooth => Mesh::uniform(lo, hi, n),
            Preset::ManufacturedCubic => {
                let lm = classify_layers(&p, k, None, &ClassifyOptions::default())?;
                general_layer_mesh(&lm, n, opts)
            }
        }
    }
}

fn need_divisible(n: usize, by: usize) -> Result<()> {
    if n == 0 || !n.is_multiple_of(by) {
        return Err(Error::Mesh(format!(
            "this preset mesh needs N divisible by {by}, got {n}"
        )));
    }
    Ok(())
}
