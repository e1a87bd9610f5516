#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use layerfem::expr::{parse, Expr};
use layerfem::fem::{
    assemble_linear, interpolate, solve_banded, solve_linear, BandedMatrix, BandedSystem, DiscreteFunction, FESpace,
    NodeRule,
};
use layerfem::mesh::{
    s_type_mesh, s_type_transition, sun_stynes_mesh, sun_stynes_params, GeneratorKind, Mesh, Orientation, SegmentKind,
};
use layerfem::norms::{energy_error_direct, error_norms, Reference};
use layerfem::problem::BoundaryValueProblem;
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("x".to_owned()),
        Just("pi".to_owned()),
        (0.5f64..2.0).prop_map(|v| format!("{v}")),
    ]
}

/// Expressions that are smooth and defined on [0, 1].
fn smooth_expr() -> impl Strategy<Value = String> {
    leaf().prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / (1 + ({b})^2))")),
            (inner.clone(), 2u32..4).prop_map(|(a, n)| format!("({a})^{n}")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("ln(2 + cos({a}))")),
            inner.prop_map(|a| format!("-{a}")),
        ]
    })
}

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn check_mesh(m: &Mesh, n: usize, lo: f64, hi: f64) -> Result<(), TestCaseError> {
    let pts = m.points();
    prop_assert_eq!(m.cells(), n);
    prop_assert_eq!(pts[0], lo);
    prop_assert_eq!(pts[n], hi);
    prop_assert!(pts.windows(2).all(|w| w[1] > w[0]));
    let tiles: usize = m.segments().iter().map(|s| s.cells).sum();
    prop_assert_eq!(tiles, n);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn derivative_matches_central_difference(src in smooth_expr(), x in 0.1f64..0.9) {
        let e = parse(&src).unwrap();
        let d = e.differentiate("x").eval_x(x).unwrap();
        let h = 1e-6;
        let fd = (e.eval_x(x + h).unwrap() - e.eval_x(x - h).unwrap()) / (2.0 * h);
        prop_assert!((d - fd).abs() <= 1e-5 * (1.0 + d.abs()), "{src} at {x}: {d} vs {fd}");
    }

    #[test]
    fn printing_and_parsing_preserve_values(src in smooth_expr(), x in 0.0f64..1.0) {
        let e = parse(&src).unwrap();
        let back: Expr = parse(&e.to_string()).unwrap();
        let (a, b) = (e.eval_x(x).unwrap(), back.eval_x(x).unwrap());
        prop_assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()), "{src}: {a} vs {b}");
    }

    #[test]
    fn s_type_meshes_are_valid(
        log_eps in -12.0f64..-2.0,
        beta in 0.5f64..2.0,
        rho in 1.0f64..5.0,
        half in 4usize..1024,
        bakhvalov in any::<bool>(),
        right in any::<bool>(),
        lo in -2.0f64..1.0,
        len in 0.5f64..3.0,
    ) {
        let (eps, n, hi) = (10f64.powf(log_eps), 2 * half, lo + len);
        let kind = if bakhvalov { GeneratorKind::BakhvalovS } else { GeneratorKind::Shishkin };
        let orientation = if right { Orientation::LayerRight } else { Orientation::LayerLeft };
        let tau = s_type_transition(eps, beta, rho, n);
        let m = s_type_mesh(eps, beta, rho, n, kind, orientation, lo, hi);
        prop_assume!(tau <= len / 2.0);
        let m = m.unwrap();
        check_mesh(&m, n, lo, hi)?;
        let fine = m.segments().iter().find(|s| matches!(s.kind, SegmentKind::Fine { .. })).unwrap();
        prop_assert_eq!(fine.cells, n / 2);
        let span = m.points()[fine.first_cell + fine.cells] - m.points()[fine.first_cell];
        prop_assert!((span - tau).abs() <= 8.0 * f64::EPSILON * (lo.abs() + hi.abs() + 1.0));
    }

    #[test]
    fn sun_stynes_meshes_are_valid(
        log_eps in -14.0f64..0.0,
        k in 1usize..5,
        lambda_frac in 0.0f64..1.0,
        n in 16usize..4096,
        right in any::<bool>(),
    ) {
        let (eps, lambda) = (10f64.powf(log_eps), lambda_frac * (k + 1) as f64);
        let params = sun_stynes_params(eps, lambda, k, n).unwrap();
        let parts = params.levels + 1;
        prop_assume!(n >= 2 * parts);
        prop_assert!(params.sigma / 10.0 <= params.innermost() && params.innermost() < params.sigma);
        let nf = n as f64;
        let bound = 2.0 + ((1.0 - lambda / (k + 1) as f64) * eps.ln().abs() / (2.0 * 10f64.ln()))
            .min((2 * k + 1) as f64 * nf.ln() / 10f64.ln());
        prop_assert!(parts as f64 <= bound);
        let orientation = if right { Orientation::LayerRight } else { Orientation::LayerLeft };
        let m = sun_stynes_mesh(eps, lambda, k, n, orientation, 0.0, 1.0).unwrap();
        check_mesh(&m, n, 0.0, 1.0)?;
        prop_assert_eq!(m.segments().len(), parts);
        for s in m.segments() {
            let widths: Vec<f64> = s.cell_range().map(|i| m.h(i)).collect();
            let mean = widths.iter().sum::<f64>() / widths.len() as f64;
            prop_assert!(widths.iter().all(|w| (w - mean).abs() <= 4.0 * f64::EPSILON));
        }
        if n % parts == 0 {
            prop_assert!(m.max_h() <= parts as f64 / nf * (1.0 + 1e-12));
        }
    }

    #[test]
    fn banded_solver_matches_dense(
        n in 1usize..=50,
        kl in 0usize..5,
        ku in 0usize..5,
        seed in proptest::collection::vec(-1.0f64..1.0, 50 * 9 + 50),
    ) {
        let (kl, ku) = (kl.min(n - 1), ku.min(n - 1));
        let mut band = BandedMatrix::zeros(n, kl, ku);
        let mut dense = vec![vec![0.0; n]; n];
        let mut it = seed.iter().copied();
        for r in 0..n {
            for c in r.saturating_sub(kl)..=(r + ku).min(n - 1) {
                let v = it.next().unwrap() + if r == c { 2.0 } else { 0.0 };
                band.set(r, c, v);
                dense[r][c] = v;
            }
        }
        let rhs: Vec<f64> = seed[seed.len() - n..].to_vec();
        let x = solve_banded(&BandedSystem::new(band, rhs.clone()).unwrap()).unwrap();
        let y = dense_solve(dense, rhs);
        let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn bilinear_form_is_coercive(
        coeffs in proptest::collection::vec(-1.0f64..1.0, 64),
        log_eps in -6.0f64..0.0,
        k in 1usize..4,
    ) {
        // b = x - 1/2, c = 1: c - b'/2 = 1/2
        let eps = 10f64.powf(log_eps);
        let n = 64 / k / 2;
        let space = Arc::new(FESpace::new(Mesh::uniform(0.0, 1.0, n).unwrap(), k, NodeRule::GaussLobatto).unwrap());
        let v: Vec<f64> = coeffs[..space.ndofs()].to_vec();
        let (b, c, zero) = (parse("x - 0.5").unwrap(), parse("1").unwrap(), parse("0").unwrap());
        let a = assemble_linear(&space, eps, &b, &c, &zero).unwrap().matrix;
        let form: f64 = v.iter().zip(a.mul_vec(&v)).map(|(x, y)| x * y).sum();
        let vf = DiscreteFunction::new(space.clone(), v).unwrap();
        let r = error_norms(&vf, &Reference::exact(zero.clone()), eps, 0.5, 2 * k + 2).unwrap();
        prop_assert!(form >= r.energy * r.energy * (1.0 - 1e-8), "{form} < {}", r.energy * r.energy);
    }

    #[test]
    fn energy_norm_recombines(k in 1usize..4, n in 4usize..64, log_eps in -8.0f64..0.0) {
        let eps = 10f64.powf(log_eps);
        let space = Arc::new(FESpace::new(Mesh::uniform(0.0, 1.0, n).unwrap(), k, NodeRule::GaussLobatto).unwrap());
        let u = interpolate(|x| (3.0 * x).sin() * x * (1.0 - x), space);
        let r = Reference::exact(parse("exp(x) - 1").unwrap());
        let q = 2 * k + 2;
        let report = error_norms(&u, &r, eps, 0.7, q).unwrap();
        let direct = energy_error_direct(&u, &r, eps, 0.7, q).unwrap();
        prop_assert!((report.energy - direct).abs() <= 1e-12 * direct);
    }
}

#[test]
fn polynomial_solutions_are_reproduced() {
    // u = x (1 - x), b = 1 + x, c = 2: every integrand is a polynomial that
    // q = k + 2 points integrate exactly
    let pts = vec![0.0, 0.05, 0.2, 0.23, 0.5, 0.61, 0.9, 1.0];
    for k in 2..=4 {
        let space = Arc::new(
            FESpace::new(
                Mesh::new(pts.clone(), vec![], Default::default()).unwrap(),
                k,
                NodeRule::GaussLobatto,
            )
            .unwrap(),
        );
        let eps = 1e-2;
        let p = BoundaryValueProblem::linear(
            0.0,
            1.0,
            eps,
            parse("1 + x").unwrap(),
            parse("2").unwrap(),
            parse(&format!("2 * {eps} + (1 + x) * (1 - 2*x) + 2 * x * (1 - x)")).unwrap(),
        )
        .unwrap();
        let u = solve_linear(&space, &p, None).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((u.evaluate(x, 0).unwrap() - x * (1.0 - x)).abs() < 1e-12, "k={k} x={x}");
        }
    }
}
