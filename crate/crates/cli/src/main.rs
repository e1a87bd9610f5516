use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use layerfem::problem::describe;
use layerfem_cli::classify::layer_report;
use layerfem_cli::config::{ExperimentConfig, MeshChoice, ProblemSpec, ReferenceKind};
use layerfem_cli::dump::{report_lines, write_mesh_dump, write_solution};
use layerfem_cli::run::{run_convergence, solve_single};

#[derive(Parser)]
#[command(
    name = "layerfem",
    version,
    about = "Layer-adapted FEM experiments for singularly perturbed problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the layer structure of the problem.
    Classify(Args),
    /// Solve for one N and eps; write solution samples and errors.
    Solve(Args),
    /// Sweep over the N and eps lists; write a CSV table.
    Convergence(Args),
    /// Write the mesh for one N and eps.
    Mesh(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Cell counts, comma separated.
    #[arg(short = 'N', long = "cells", value_delimiter = ',')]
    n: Vec<usize>,
    /// Perturbation parameters, comma separated.
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Polynomial order.
    #[arg(short)]
    k: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// shishkin or bakhvalov-s.
    #[arg(long)]
    generator: Option<String>,
    /// preset, layer or uniform.
    #[arg(long)]
    mesh: Option<String>,
    /// auto, exact, fine or none.
    #[arg(long)]
    reference: Option<String>,
    /// Extra samples per cell in solution dumps.
    #[arg(long)]
    samples: Option<usize>,
    /// Write 0 in the seconds column.
    #[arg(long)]
    no_timing: bool,
}

impl Args {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => ExperimentConfig::new(ProblemSpec::preset(name)),
            (None, None) => bail!("give --config PATH or --preset NAME"),
        };
        if let Some(name) = &self.preset {
            cfg.problem = ProblemSpec::preset(name);
        }
        let d = &mut cfg.discretization;
        if !self.n.is_empty() {
            d.n = self.n.clone();
        }
        if !self.eps.is_empty() {
            d.eps = self.eps.clone();
        }
        if let Some(k) = self.k {
            d.k = k;
        }
        d.rho = self.rho.or(d.rho);
        if let Some(mu) = self.mu {
            d.mu = mu;
        }
        if let Some(g) = &self.generator {
            d.generator = g.clone();
        }
        if let Some(m) = &self.mesh {
            d.mesh = Some(MeshChoice::from_name(m).ok_or_else(|| anyhow!("unknown mesh choice '{m}'"))?);
        }
        if let Some(r) = &self.reference {
            cfg.reference.kind = match r.as_str() {
                "auto" => ReferenceKind::Auto,
                "exact" => ReferenceKind::Exact,
                "fine" => ReferenceKind::Fine,
                "none" => ReferenceKind::None,
                _ => bail!("unknown reference kind '{r}'"),
            };
        }
        if let Some(s) = self.samples {
            cfg.output.samples_per_cell = s;
        }
        if self.no_timing {
            cfg.output.record_time = false;
        }
        if let Some(out) = &self.out {
            cfg.output.path = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn output(cfg: &ExperimentConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.output.path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// The first `N` and `eps` of the config.
fn single(cfg: &ExperimentConfig) -> (usize, f64) {
    let d = &cfg.discretization;
    if d.n.len() > 1 || d.eps.len() > 1 {
        eprintln!("note: using the first N and eps of the lists");
    }
    (d.n[0], d.eps[0])
}

fn classify(cfg: &ExperimentConfig) -> Result<()> {
    let mut out = output(cfg)?;
    let many = cfg.discretization.eps.len() > 1;
    for &eps in &cfg.discretization.eps {
        let lm = cfg.classify(&cfg.problem(eps)?)?;
        if many {
            writeln!(out, "eps = {eps:e}")?;
        }
        write!(out, "{}", layer_report(&lm))?;
    }
    out.flush()?;
    Ok(())
}

fn solve(cfg: &ExperimentConfig) -> Result<()> {
    let (n, eps) = single(cfg);
    let s = solve_single(cfg, n, eps)?;
    for note in &s.mesh().provenance().notes {
        eprintln!("note: {note}");
    }
    let mut comments = vec![
        describe(&s.problem),
        format!(
            "N = {n}, k = {}, mesh = {}, seconds = {:.6}",
            cfg.discretization.k,
            s.mesh().provenance().generator,
            s.seconds
        ),
    ];
    let report = s.report.as_ref().map(report_lines).unwrap_or_default();
    comments.extend(report.iter().cloned());
    let mut out = output(cfg)?;
    write_solution(&s.solution, cfg.output.samples_per_cell, &comments, &mut out)?;
    out.flush()?;
    if cfg.output.path.is_some() {
        for line in &report {
            println!("{line}");
        }
    }
    Ok(())
}

fn convergence(cfg: &ExperimentConfig) -> Result<bool> {
    let table = run_convergence(cfg)?;
    let mut out = output(cfg)?;
    table.write_csv(&mut out)?;
    out.flush()?;
    let mut notes: Vec<&String> = table.records.iter().flat_map(|r| &r.mesh_notes).collect();
    notes.dedup();
    for note in notes {
        eprintln!("note: {note}");
    }
    let mut clean = true;
    for r in table.failures() {
        clean = false;
        eprintln!(
            "failed: N = {}, eps = {:e}: {}",
            r.n,
            r.eps,
            r.failure.as_deref().unwrap_or("")
        );
    }
    Ok(clean)
}

fn mesh(cfg: &ExperimentConfig) -> Result<()> {
    let (n, eps) = single(cfg);
    let p = cfg.problem(eps)?;
    let m = cfg.build_mesh(&p, n, &cfg.mesh_options()?)?;
    for note in &m.provenance().notes {
        eprintln!("note: {note}");
    }
    let mut out = output(cfg)?;
    write_mesh_dump(&m, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Classify(a) => a.config().and_then(|c| classify(&c)).map(|_| true),
        Command::Solve(a) => a.config().and_then(|c| solve(&c)).map(|_| true),
        Command::Convergence(a) => a.config().and_then(|c| convergence(&c)),
        Command::Mesh(a) => a.config().and_then(|c| mesh(&c)).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e)
            if e.chain().any(|c| {
                c.downcast_ref::<io::Error>()
                    .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
            }) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
