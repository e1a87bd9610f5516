//! TOML experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use layerfem::expr::{parse, Expr};
use layerfem::mesh::{general_layer_mesh, GeneratorKind, LayerMeshOptions, Mesh};
use layerfem::presets::Preset;
use layerfem::problem::{classify_layers, BoundaryValueProblem, ClassifyOptions, LayerMap, Reaction};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed for randomized checks driven by this config.
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Either a preset name or coefficient expressions. Expressions may use
/// `x`, `eps`, `pi` and, in the semilinear `f`, `u`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub preset: Option<String>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub b: Option<String>,
    /// Linear reaction coefficient (with `rhs`).
    pub c: Option<String>,
    pub rhs: Option<String>,
    /// Semilinear term `f(x, u)` of `-eps u'' + b u' + f(x, u) = 0`.
    pub f: Option<String>,
    /// Lower bound for `df/du`, used by layer classification.
    pub c_lower: Option<String>,
    #[serde(default)]
    pub nu_minus: f64,
    #[serde(default)]
    pub nu_plus: f64,
    pub exact: Option<String>,
    /// Interior roots of `b`, if known.
    pub roots: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub gamma_tilde: Option<f64>,
}

impl ProblemSpec {
    pub fn preset(name: &str) -> Self {
        ProblemSpec {
            preset: Some(name.into()),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshChoice {
    /// The preset's own construction.
    Preset,
    /// Built from the classified layer structure.
    Layer,
    Uniform,
}

impl MeshChoice {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "preset" => Some(MeshChoice::Preset),
            "layer" => Some(MeshChoice::Layer),
            "uniform" => Some(MeshChoice::Uniform),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Discretization {
    pub k: usize,
    pub n: Vec<usize>,
    pub eps: Vec<f64>,
    /// Defaults to `k + 1`.
    pub rho: Option<f64>,
    pub mu: f64,
    pub generator: String,
    /// Defaults to `preset` for presets and `layer` otherwise.
    pub mesh: Option<MeshChoice>,
    /// Gauss points per cell for assembly; defaults to `k + 2`.
    pub quad: Option<usize>,
    /// Gauss points per piece for error norms; defaults to `2k + 2`.
    pub norm_quad: Option<usize>,
    pub min_cells: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            k: 1,
            n: vec![64],
            eps: vec![1e-2],
            rho: None,
            mu: 0.9,
            generator: "shishkin".into(),
            mesh: None,
            quad: None,
            norm_quad: None,
            min_cells: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    /// Exact solution when known, else a fine-mesh solve (single solves
    /// skip the fine-mesh fallback).
    Auto,
    Exact,
    Fine,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub kind: ReferenceKind,
    /// The fine reference splits every cell of the largest mesh into this many.
    pub multiplier: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            kind: ReferenceKind::Auto,
            multiplier: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    /// Extra uniform samples per cell in solution dumps.
    pub samples_per_cell: usize,
    /// Write 0 in the `seconds` column when false.
    pub record_time: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            path: None,
            samples_per_cell: 4,
            record_time: true,
        }
    }
}

impl ExperimentConfig {
    /// Default discretization, reference and output settings.
    pub fn new(problem: ProblemSpec) -> Self {
        ExperimentConfig {
            seed: 0,
            problem,
            discretization: Discretization::default(),
            reference: ReferenceConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn for_preset(preset: Preset) -> Self {
        Self::new(ProblemSpec::preset(preset.name()))
    }

    /// Config describing an existing problem; expressions are written in
    /// their fully parenthesised form.
    pub fn from_problem(p: &BoundaryValueProblem) -> Self {
        let mut spec = ProblemSpec {
            lo: Some(p.lo),
            hi: Some(p.hi),
            b: Some(p.b.to_string()),
            nu_minus: p.nu_minus,
            nu_plus: p.nu_plus,
            gamma: p.gamma,
            gamma_tilde: p.gamma_tilde,
            ..Default::default()
        };
        match &p.reaction {
            Reaction::Linear { c, rhs } => {
                spec.c = Some(c.to_string());
                spec.rhs = Some(rhs.to_string());
            }
            Reaction::Semilinear { f, c_lower } => {
                spec.f = Some(f.to_string());
                spec.c_lower = c_lower.as_ref().map(|c| c.to_string());
            }
        }
        let mut cfg = Self::new(spec);
        cfg.discretization.eps = vec![p.eps];
        cfg
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).context("malformed config")?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn preset(&self) -> Result<Option<Preset>> {
        match &self.problem.preset {
            None => Ok(None),
            Some(name) => Preset::from_name(name)
                .map(Some)
                .ok_or_else(|| anyhow!("unknown preset '{name}'")),
        }
    }

    pub fn generator(&self) -> Result<GeneratorKind> {
        let g = &self.discretization.generator;
        GeneratorKind::from_name(g).ok_or_else(|| anyhow!("unknown mesh generator '{g}' (shishkin, bakhvalov-s)"))
    }

    pub fn rho(&self) -> f64 {
        self.discretization.rho.unwrap_or((self.discretization.k + 1) as f64)
    }

    pub fn mesh_choice(&self) -> MeshChoice {
        match (self.discretization.mesh, &self.problem.preset) {
            (Some(m), _) => m,
            (None, Some(_)) => MeshChoice::Preset,
            (None, None) => MeshChoice::Layer,
        }
    }

    pub fn mesh_options(&self) -> Result<LayerMeshOptions> {
        Ok(LayerMeshOptions {
            rho: self.rho(),
            mu: self.discretization.mu,
            generator: self.generator()?,
            min_cells: self.discretization.min_cells,
        })
    }

    pub fn norm_quad(&self) -> usize {
        self.discretization.norm_quad.unwrap_or(2 * self.discretization.k + 2)
    }

    /// Checks everything that does not need a solve.
    pub fn validate(&self) -> Result<()> {
        let d = &self.discretization;
        ensure!(d.k >= 1, "polynomial order k must be at least 1");
        ensure!(!d.n.is_empty(), "the N list is empty");
        ensure!(!d.eps.is_empty(), "the eps list is empty");
        for &e in &d.eps {
            ensure!(e > 0.0 && e.is_finite(), "eps values must be positive, got {e}");
        }
        ensure!(d.mu > 0.0 && d.mu < 1.0, "mu must lie in (0, 1), got {}", d.mu);
        let rho = self.rho();
        ensure!(rho > 0.0 && rho.is_finite(), "rho must be positive, got {rho}");
        if let Some(q) = d.quad {
            ensure!(
                q >= d.k + 2,
                "assembly needs at least k + 2 = {} Gauss points, got {q}",
                d.k + 2
            );
        }
        ensure!(
            self.norm_quad() >= d.k + 2,
            "error norms need at least k + 2 = {} Gauss points, got {}",
            d.k + 2,
            self.norm_quad()
        );
        ensure!(
            self.reference.multiplier >= 1,
            "reference multiplier must be at least 1"
        );
        self.generator()?;
        let preset = self.preset()?;
        let divisor = match (self.mesh_choice(), preset) {
            (MeshChoice::Preset, None) => bail!("mesh = \"preset\" needs a preset problem"),
            (MeshChoice::Preset, Some(Preset::IntBouTpp | Preset::TwoExpLayerTpp)) => 4,
            (MeshChoice::Preset, Some(Preset::RepBouTpp | Preset::AttMultBouTpp)) => 2,
            (MeshChoice::Layer, _) => 2,
            _ => 1,
        };
        for &n in &d.n {
            ensure!(n >= 2, "N must be at least 2, got {n}");
            ensure!(n % divisor == 0, "this mesh needs N divisible by {divisor}, got {n}");
        }
        let p = &self.problem;
        if preset.is_some() {
            let extra = [
                ("lo", p.lo.is_some()),
                ("hi", p.hi.is_some()),
                ("b", p.b.is_some()),
                ("c", p.c.is_some()),
                ("rhs", p.rhs.is_some()),
                ("f", p.f.is_some()),
                ("c_lower", p.c_lower.is_some()),
                ("roots", p.roots.is_some()),
            ];
            if let Some((name, _)) = extra.iter().find(|(_, set)| *set) {
                bail!("'{name}' cannot be combined with a preset");
            }
        } else {
            ensure!(
                p.b.is_some(),
                "problem needs either a preset or the convection coefficient b"
            );
            match (&p.c, &p.rhs, &p.f) {
                (Some(_), Some(_), None) | (None, None, Some(_)) => {}
                _ => bail!("give either c and rhs (linear) or f (semilinear)"),
            }
            ensure!(
                p.c_lower.is_none() || p.f.is_some(),
                "c_lower only applies to semilinear problems"
            );
        }
        if self.reference.kind == ReferenceKind::Exact {
            ensure!(
                p.exact.is_some() || preset.and_then(|pr| pr.exact(1.0)).is_some(),
                "reference = exact but no exact solution is known"
            );
        }
        for &e in &d.eps {
            self.problem(e)?;
        }
        Ok(())
    }

    pub fn problem(&self, eps: f64) -> Result<BoundaryValueProblem> {
        if let Some(preset) = self.preset()? {
            return Ok(preset.problem(eps)?);
        }
        let p = &self.problem;
        let (lo, hi) = (p.lo.unwrap_or(0.0), p.hi.unwrap_or(1.0));
        let b = expr("b", p.b.as_deref(), eps)?;
        let reaction = match &p.f {
            Some(f) => Reaction::Semilinear {
                f: expr("f", Some(f), eps)?,
                c_lower: p
                    .c_lower
                    .as_deref()
                    .map(|c| expr("c_lower", Some(c), eps))
                    .transpose()?,
            },
            None => Reaction::Linear {
                c: expr("c", p.c.as_deref(), eps)?,
                rhs: expr("rhs", p.rhs.as_deref(), eps)?,
            },
        };
        let mut bvp = BoundaryValueProblem::new(lo, hi, eps, b, reaction)?.with_boundary_values(p.nu_minus, p.nu_plus);
        if p.gamma.is_some() || p.gamma_tilde.is_some() {
            let gt = p.gamma_tilde.or(p.gamma).unwrap_or(0.0);
            bvp = bvp.with_gamma(p.gamma.unwrap_or(gt), gt);
        }
        Ok(bvp)
    }

    pub fn exact(&self, eps: f64) -> Result<Option<Expr>> {
        if let Some(src) = &self.problem.exact {
            return Ok(Some(expr("exact", Some(src), eps)?));
        }
        Ok(self.preset()?.and_then(|p| p.exact(eps)))
    }

    pub fn classify(&self, p: &BoundaryValueProblem) -> layerfem::error::Result<LayerMap> {
        let roots = self.problem.roots.as_deref();
        classify_layers(p, self.discretization.k, roots, &ClassifyOptions::default())
    }

    /// Mesh with `n` cells for problem `p`, using `opts` (callers pass a
    /// larger `rho` for references).
    pub fn build_mesh(
        &self,
        p: &BoundaryValueProblem,
        n: usize,
        opts: &LayerMeshOptions,
    ) -> layerfem::error::Result<Mesh> {
        let k = self.discretization.k;
        match self.mesh_choice() {
            MeshChoice::Preset => {
                let preset = self
                    .problem
                    .preset
                    .as_deref()
                    .and_then(Preset::from_name)
                    .ok_or_else(|| layerfem::Error::Invalid("mesh = \"preset\" needs a known preset problem".into()))?;
                preset.mesh(p.eps, n, k, opts)
            }
            MeshChoice::Layer => general_layer_mesh(&self.classify(p)?, n, opts),
            MeshChoice::Uniform => Mesh::uniform(p.lo, p.hi, n),
        }
    }
}

fn expr(name: &str, src: Option<&str>, eps: f64) -> Result<Expr> {
    let src = src.ok_or_else(|| anyhow!("missing expression '{name}'"))?;
    let e = parse(src).with_context(|| format!("in expression {name} = \"{src}\""))?;
    Ok(e.bind_params(&BTreeMap::from([("eps".to_string(), eps)])))
}
