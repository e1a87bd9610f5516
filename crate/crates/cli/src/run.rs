//! Single solves and (N, eps) convergence sweeps.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Result};
use layerfem::fem::{solve_problem, DiscreteFunction, FESpace, NewtonOptions, NodeRule};
use layerfem::mesh::Mesh;
use layerfem::norms::{
    error_norms, fit_order, ln_adjusted_scale, make_reference, pairwise_rates, plain_scale, ErrorReport, Reference,
    ReferenceStrategy,
};
use layerfem::problem::{check_assumptions, AssumptionReport, BoundaryValueProblem};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ReferenceKind};

/// Grid size for assumption checks and sampled `gamma~`.
pub const ASSUMPTION_GRID: usize = 1001;

pub const CSV_HEADER: [&str; 9] = [
    "N",
    "eps",
    "energy",
    "l2",
    "h1",
    "max",
    "rate_plain",
    "rate_lnadj",
    "seconds",
];

/// Fails unless the sampled standing assumptions hold.
pub fn check_problem(p: &BoundaryValueProblem) -> Result<AssumptionReport> {
    let r = check_assumptions(p, ASSUMPTION_GRID, None)?;
    if !r.ok {
        match r.witnesses.first() {
            Some(w) => bail!(
                "coefficient assumption fails: {} = {} at x = {}{}",
                w.quantity,
                w.value,
                w.x,
                w.u.map(|u| format!(", u = {u}")).unwrap_or_default()
            ),
            None => bail!("coefficient assumption fails"),
        }
    }
    Ok(r)
}

fn newton_options(cfg: &ExperimentConfig) -> NewtonOptions {
    NewtonOptions {
        quad: cfg.discretization.quad,
        ..Default::default()
    }
}

pub fn discretize(cfg: &ExperimentConfig, p: &BoundaryValueProblem, mesh: Mesh) -> Result<DiscreteFunction> {
    let space = Arc::new(FESpace::new(mesh, cfg.discretization.k, NodeRule::default())?);
    Ok(solve_problem(&space, p, &newton_options(cfg))?)
}

/// Reference for `p`. With `allow_fine = false` the automatic choice only
/// uses exact solutions.
pub fn reference_for(
    cfg: &ExperimentConfig,
    p: &BoundaryValueProblem,
    largest_n: usize,
    allow_fine: bool,
) -> Result<Option<Reference>> {
    let fine = ReferenceStrategy::FineMesh {
        multiplier: cfg.reference.multiplier,
    };
    let strategy = match (cfg.reference.kind, cfg.exact(p.eps)?) {
        (ReferenceKind::None, _) => return Ok(None),
        (ReferenceKind::Fine, _) => fine,
        (ReferenceKind::Auto | ReferenceKind::Exact, Some(u)) => ReferenceStrategy::Exact { u, du: None },
        (ReferenceKind::Exact, None) => bail!("no exact solution known for this problem"),
        (ReferenceKind::Auto, None) if !allow_fine => return Ok(None),
        (ReferenceKind::Auto, None) => fine,
    };
    let opts = cfg.mesh_options()?;
    let k = cfg.discretization.k;
    Ok(Some(make_reference(p, &strategy, largest_n, k, |n| {
        cfg.build_mesh(p, n, &opts)
    })?))
}

pub fn measure(
    cfg: &ExperimentConfig,
    p: &BoundaryValueProblem,
    u: &DiscreteFunction,
    r: &Reference,
) -> Result<ErrorReport> {
    let gamma_tilde = p.gamma_tilde_or_sampled(ASSUMPTION_GRID)?;
    Ok(error_norms(u, r, p.eps, gamma_tilde, cfg.norm_quad())?)
}

pub struct SolveOutcome {
    pub problem: BoundaryValueProblem,
    pub assumptions: AssumptionReport,
    pub solution: DiscreteFunction,
    pub report: Option<ErrorReport>,
    pub seconds: f64,
}

impl SolveOutcome {
    pub fn mesh(&self) -> &Mesh {
        self.solution.space().mesh()
    }
}

/// Mesh, solve and (if a reference is available) error norms for one
/// `(N, eps)`.
pub fn solve_single(cfg: &ExperimentConfig, n: usize, eps: f64) -> Result<SolveOutcome> {
    cfg.validate()?;
    let p = cfg.problem(eps)?;
    let assumptions = check_problem(&p)?;
    let start = Instant::now();
    let mesh = cfg.build_mesh(&p, n, &cfg.mesh_options()?)?;
    let solution = discretize(cfg, &p, mesh)?;
    let seconds = start.elapsed().as_secs_f64();
    let allow_fine = cfg.reference.kind == ReferenceKind::Fine;
    let report = match reference_for(cfg, &p, n, allow_fine)? {
        Some(r) => Some(measure(cfg, &p, &solution, &r)?),
        None => None,
    };
    Ok(SolveOutcome {
        problem: p,
        assumptions,
        solution,
        report,
        seconds: if cfg.output.record_time { seconds } else { 0.0 },
    })
}

/// Errors in the four norms (or fitted orders in them).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSet {
    pub energy: f64,
    pub l2: f64,
    pub h1: f64,
    pub max: f64,
}

impl NormSet {
    pub const NAN: NormSet = NormSet {
        energy: f64::NAN,
        l2: f64::NAN,
        h1: f64::NAN,
        max: f64::NAN,
    };

    fn from_report(r: &ErrorReport) -> Self {
        NormSet {
            energy: r.energy,
            l2: r.l2,
            h1: r.h1_semi,
            max: r.max,
        }
    }

    fn max(self, o: NormSet) -> Self {
        NormSet {
            energy: self.energy.max(o.energy),
            l2: self.l2.max(o.l2),
            h1: self.h1.max(o.h1),
            max: self.max.max(o.max),
        }
    }

    fn fit(scales: &[f64], sets: &[NormSet]) -> Self {
        let f = |g: fn(&NormSet) -> f64| fit_order(scales, &sets.iter().map(g).collect::<Vec<_>>());
        NormSet {
            energy: f(|s| s.energy),
            l2: f(|s| s.l2),
            h1: f(|s| s.h1),
            max: f(|s| s.max),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub n: usize,
    pub eps: f64,
    pub report: Option<ErrorReport>,
    pub failure: Option<String>,
    /// Energy-norm rates against the previous `N` of the same `eps`.
    pub rate_plain: Option<f64>,
    pub rate_lnadj: Option<f64>,
    pub seconds: f64,
    pub mesh_params: Vec<(String, f64)>,
    pub mesh_notes: Vec<String>,
}

impl ConvergenceRecord {
    pub fn errors(&self) -> Option<NormSet> {
        self.report.as_ref().map(NormSet::from_report)
    }

    pub fn mesh_param(&self, name: &str) -> Option<f64> {
        self.mesh_params.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Least-squares orders for one `eps` over its successful rows.
#[derive(Debug, Clone)]
pub struct EpsSummary {
    pub eps: f64,
    pub fit_plain: NormSet,
    pub fit_lnadj: NormSet,
    pub seconds: f64,
}

/// Maximum over `eps` at one `N`; `None` if some row of this `N` failed.
#[derive(Debug, Clone)]
pub struct UniformRow {
    pub n: usize,
    pub max: Option<NormSet>,
    pub rate_plain: Option<f64>,
    pub rate_lnadj: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub k: usize,
    pub ns: Vec<usize>,
    pub eps: Vec<f64>,
    /// Ordered by `eps` (config order), then increasing `N`.
    pub records: Vec<ConvergenceRecord>,
    pub summaries: Vec<EpsSummary>,
    pub uniform: Vec<UniformRow>,
    pub uniform_fit_plain: NormSet,
    pub uniform_fit_lnadj: NormSet,
}

fn rate_pairs(ns: &[usize], errors: &[Option<f64>], scale: fn(usize) -> f64) -> Vec<Option<f64>> {
    let mut out = vec![None];
    for i in 1..ns.len() {
        out.push(match (errors[i - 1], errors[i]) {
            (Some(a), Some(b)) => Some(pairwise_rates(&[scale(ns[i - 1]), scale(ns[i])], &[a, b])[0]),
            _ => None,
        });
    }
    out
}

fn fits(ns: &[usize], sets: &[Option<NormSet>]) -> (NormSet, NormSet) {
    let ok: Vec<(usize, NormSet)> = ns.iter().zip(sets).filter_map(|(&n, s)| s.map(|s| (n, s))).collect();
    let vals: Vec<NormSet> = ok.iter().map(|(_, s)| *s).collect();
    let plain: Vec<f64> = ok.iter().map(|(n, _)| plain_scale(*n)).collect();
    let lnadj: Vec<f64> = ok.iter().map(|(n, _)| ln_adjusted_scale(*n)).collect();
    (NormSet::fit(&plain, &vals), NormSet::fit(&lnadj, &vals))
}

/// Runs the sweep. Only configuration errors abort; per-row failures are
/// recorded in the table.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let mut ns = cfg.discretization.n.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        bail!(
            "a convergence study needs at least 3 distinct values of N, got {}",
            ns.len()
        );
    }
    let eps = cfg.discretization.eps.clone();
    let largest = *ns.last().expect("nonempty");
    let opts = cfg.mesh_options()?;

    let setups: Vec<Result<(BoundaryValueProblem, Option<Reference>), String>> = eps
        .par_iter()
        .map(|&e| {
            let run = || -> Result<_> {
                let p = cfg.problem(e)?;
                check_problem(&p)?;
                let r = reference_for(cfg, &p, largest, true)?;
                Ok((p, r))
            };
            run().map_err(|err| format!("{err:#}"))
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..eps.len()).flat_map(|i| ns.iter().map(move |&n| (i, n))).collect();
    let mut records: Vec<ConvergenceRecord> = jobs
        .par_iter()
        .map(|&(i, n)| {
            let mut rec = ConvergenceRecord {
                n,
                eps: eps[i],
                report: None,
                failure: None,
                rate_plain: None,
                rate_lnadj: None,
                seconds: 0.0,
                mesh_params: Vec::new(),
                mesh_notes: Vec::new(),
            };
            let (p, reference) = match &setups[i] {
                Ok(s) => s,
                Err(msg) => {
                    rec.failure = Some(msg.clone());
                    return rec;
                }
            };
            let mut run = || -> Result<()> {
                let start = Instant::now();
                let mesh = cfg.build_mesh(p, n, &opts)?;
                rec.mesh_params = mesh.provenance().params.clone();
                rec.mesh_notes = mesh.provenance().notes.clone();
                let u = discretize(cfg, p, mesh)?;
                if cfg.output.record_time {
                    rec.seconds = start.elapsed().as_secs_f64();
                }
                if let Some(r) = reference {
                    rec.report = Some(measure(cfg, p, &u, r)?);
                }
                Ok(())
            };
            if let Err(err) = run() {
                rec.failure = Some(format!("{err:#}"));
            }
            rec
        })
        .collect();

    let mut summaries = Vec::new();
    for (i, &e) in eps.iter().enumerate() {
        let rows = &mut records[i * ns.len()..(i + 1) * ns.len()];
        let energy: Vec<Option<f64>> = rows.iter().map(|r| r.report.as_ref().map(|r| r.energy)).collect();
        let plain = rate_pairs(&ns, &energy, plain_scale);
        let lnadj = rate_pairs(&ns, &energy, ln_adjusted_scale);
        for (j, r) in rows.iter_mut().enumerate() {
            r.rate_plain = plain[j];
            r.rate_lnadj = lnadj[j];
        }
        let sets: Vec<Option<NormSet>> = rows.iter().map(|r| r.errors()).collect();
        let (fit_plain, fit_lnadj) = fits(&ns, &sets);
        summaries.push(EpsSummary {
            eps: e,
            fit_plain,
            fit_lnadj,
            seconds: rows.iter().map(|r| r.seconds).sum(),
        });
    }

    let maxima: Vec<Option<NormSet>> = (0..ns.len())
        .map(|j| {
            (0..eps.len())
                .map(|i| records[i * ns.len() + j].errors())
                .try_fold(None::<NormSet>, |acc, s| s.map(|s| Some(acc.map_or(s, |a| a.max(s)))))
                .flatten()
        })
        .collect();
    let energy: Vec<Option<f64>> = maxima.iter().map(|m| m.map(|m| m.energy)).collect();
    let plain = rate_pairs(&ns, &energy, plain_scale);
    let lnadj = rate_pairs(&ns, &energy, ln_adjusted_scale);
    let uniform = ns
        .iter()
        .enumerate()
        .map(|(j, &n)| UniformRow {
            n,
            max: maxima[j],
            rate_plain: plain[j],
            rate_lnadj: lnadj[j],
        })
        .collect();
    let (uniform_fit_plain, uniform_fit_lnadj) = fits(&ns, &maxima);

    Ok(ConvergenceTable {
        k: cfg.discretization.k,
        ns,
        eps,
        records,
        summaries,
        uniform,
        uniform_fit_plain,
        uniform_fit_lnadj,
    })
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn rate(v: Option<f64>) -> String {
    v.map(|r| format!("{r:.4}")).unwrap_or_default()
}

fn norm_cells(s: Option<NormSet>) -> [String; 4] {
    let s = s.unwrap_or(NormSet::NAN);
    [num(s.energy), num(s.l2), num(s.h1), num(s.max)]
}

fn order_cells(s: NormSet) -> [String; 4] {
    [s.energy, s.l2, s.h1, s.max].map(|v| rate(Some(v).filter(|v| v.is_finite())))
}

impl ConvergenceTable {
    pub fn rows_for(&self, eps: f64) -> impl Iterator<Item = &ConvergenceRecord> {
        self.records.iter().filter(move |r| r.eps == eps)
    }

    pub fn summary_for(&self, eps: f64) -> Option<&EpsSummary> {
        self.summaries.iter().find(|s| s.eps == eps)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConvergenceRecord> {
        self.records.iter().filter(|r| r.failure.is_some())
    }

    /// Per `eps`: one row per `N`, then a `fit` row whose norm columns hold
    /// ln-adjusted fitted orders and whose rate columns hold the plain and
    /// ln-adjusted fitted orders of the energy error. Then the same for the
    /// maximum over `eps` (`eps` column `max`).
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for s in &self.summaries {
            for r in self.rows_for(s.eps) {
                let [en, l2, h1, mx] = norm_cells(r.errors());
                out.write_record([
                    r.n.to_string(),
                    num(r.eps),
                    en,
                    l2,
                    h1,
                    mx,
                    rate(r.rate_plain),
                    rate(r.rate_lnadj),
                    format!("{:.6}", r.seconds),
                ])?;
            }
            let [en, l2, h1, mx] = order_cells(s.fit_lnadj);
            out.write_record([
                "fit".into(),
                num(s.eps),
                en,
                l2,
                h1,
                mx,
                rate(Some(s.fit_plain.energy).filter(|v| v.is_finite())),
                rate(Some(s.fit_lnadj.energy).filter(|v| v.is_finite())),
                format!("{:.6}", s.seconds),
            ])?;
        }
        for u in &self.uniform {
            let [en, l2, h1, mx] = norm_cells(u.max);
            out.write_record([
                u.n.to_string(),
                "max".into(),
                en,
                l2,
                h1,
                mx,
                rate(u.rate_plain),
                rate(u.rate_lnadj),
                String::new(),
            ])?;
        }
        let [en, l2, h1, mx] = order_cells(self.uniform_fit_lnadj);
        out.write_record([
            "fit".into(),
            "max".into(),
            en,
            l2,
            h1,
            mx,
            rate(Some(self.uniform_fit_plain.energy).filter(|v| v.is_finite())),
            rate(Some(self.uniform_fit_lnadj.energy).filter(|v| v.is_finite())),
            String::new(),
        ])?;
        out.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf)?)
    }
}
