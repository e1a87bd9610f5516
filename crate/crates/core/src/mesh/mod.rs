//! Layer-adapted meshes.
//!
//! All generators describe a layer located at the left end of `[0, 1]` and
//! then map the result onto the physical interval with the requested
//! orientation. Meshes keep their provenance (generator name and
//! parameters) and a list of tagged segments so that error studies can
//! split norms by region.

mod composite;
mod generator;
mod quality;
pub(crate) mod stype;
pub(crate) mod sun_stynes;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{Error, Result};

pub use composite::{general_layer_mesh, LayerMeshOptions};
pub use generator::MeshGenFunction;
pub use quality::{mesh_quality_report, QualityReport, QualityThresholds};
pub use stype::{s_type_mesh, s_type_transition};
pub use sun_stynes::{sun_stynes_mesh, sun_stynes_params, SunStynesParams};

/// Which end of the interval the layer sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    LayerLeft,
    LayerRight,
}

/// Kind of mesh generating function used in the fine part of S-type meshes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Shishkin,
    BakhvalovS,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Shishkin => "shishkin",
            GeneratorKind::BakhvalovS => "bakhvalov-s",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "shishkin" => Some(GeneratorKind::Shishkin),
            "bakhvalov-s" | "bakhvalov" => Some(GeneratorKind::BakhvalovS),
            _ => None,
        }
    }
}

/// Role of a run of consecutive cells.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentKind {
    /// Fine part of an S-type mesh; `tau` is the width of the layer region.
    Fine { tau: f64 },
    /// Coarse part of an S-type mesh.
    Coarse,
    /// Equidistant cells with no layer adaptation.
    Uniform,
    /// One of the `K + 1` subintervals of a piecewise-equidistant mesh.
    /// `level` counts from the layer: 0 is the innermost subinterval.
    Power { level: usize, levels: usize },
}

impl SegmentKind {
    pub fn tag(&self) -> &'static str {
        match self {
            SegmentKind::Fine { .. } => "fine",
            SegmentKind::Coarse => "coarse",
            SegmentKind::Uniform => "uniform",
            SegmentKind::Power { .. } => "power",
        }
    }
}

/// Cells `first_cell .. first_cell + cells` (cell `i` spans `x_i .. x_{i+1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub first_cell: usize,
    pub cells: usize,
    pub kind: SegmentKind,
}

impl Segment {
    pub fn cell_range(&self) -> core::ops::Range<usize> {
        self.first_cell..self.first_cell + self.cells
    }
}

/// How a mesh was produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub generator: String,
    pub params: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(generator: &str) -> Self {
        Provenance {
            generator: generator.to_string(),
            ..Default::default()
        }
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.push((name.to_string(), value));
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Strictly increasing mesh `x_0 < x_1 < ... < x_N` with tagged segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    points: Vec<f64>,
    segments: Vec<Segment>,
    provenance: Provenance,
}

impl Mesh {
    /// Validates strict monotonicity and that the segments tile all cells.
    pub fn new(points: Vec<f64>, segments: Vec<Segment>, provenance: Provenance) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Mesh("a mesh needs at least one cell".into()));
        }
        if let Some(i) = points
            .windows(2)
            .position(|w| !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite())
        {
            return Err(Error::Mesh(format!(
                "points not strictly increasing at index {}: {} >= {}",
                i + 1,
                points[i],
                points[i + 1]
            )));
        }
        let cells = points.len() - 1;
        let segments = if segments.is_empty() {
            vec![Segment {
                first_cell: 0,
                cells,
                kind: SegmentKind::Uniform,
            }]
        } else {
            segments
        };
        let mut next = 0;
        for s in &segments {
            if s.first_cell != next || s.cells == 0 {
                return Err(Error::Mesh("segments do not tile the mesh".into()));
            }
            next += s.cells;
        }
        if next != cells {
            return Err(Error::Mesh("segments do not cover every cell".into()));
        }
        Ok(Mesh {
            points,
            segments,
            provenance,
        })
    }

    /// Equidistant mesh with `n` cells.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 || !(hi > lo) {
            return Err(Error::Mesh(format!("invalid uniform mesh [{lo}, {hi}] with {n} cells")));
        }
        let points = uniform_points(lo, hi, n);
        Mesh::new(points, Vec::new(), Provenance::new("uniform").param("N", n as f64))
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub(crate) fn provenance_mut(&mut self) -> &mut Provenance {
        &mut self.provenance
    }

    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Width of cell `i` (spanning `x_i .. x_{i+1}`).
    pub fn h(&self, i: usize) -> f64 {
        self.points[i + 1] - self.points[i]
    }

    pub fn max_h(&self) -> f64 {
        (0..self.cells()).map(|i| self.h(i)).fold(0.0, f64::max)
    }

    /// Cell containing `x`. A point shared by two cells belongs to the
    /// left one.
    pub fn locate(&self, x: f64) -> Result<usize> {
        let (lo, hi) = (self.lo(), self.hi());
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        // first index with points[i] >= x, minus one
        let i = self.points.partition_point(|&p| p < x);
        Ok(i.saturating_sub(1).min(self.cells() - 1))
    }

    /// Every cell split into `m` equal cells; segments and provenance are
    /// kept (with a `refine` parameter added).
    pub fn refine(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Mesh("refinement factor must be at least 1".into()));
        }
        let mut points = Vec::with_capacity(self.cells() * m + 1);
        for i in 0..self.cells() {
            let (a, h) = (self.points[i], self.h(i));
            points.extend((0..m).map(|j| a + h * (j as f64 / m as f64)));
        }
        points.push(self.hi());
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                first_cell: s.first_cell * m,
                cells: s.cells * m,
                kind: s.kind.clone(),
            })
            .collect();
        Mesh::new(points, segments, self.provenance.clone().param("refine", m as f64))
    }

    /// Cells belonging to segments of the given tag.
    pub fn cells_tagged(&self, tag: &str) -> Vec<usize> {
        self.segments
            .iter()
            .filter(|s| s.kind.tag() == tag)
            .flat_map(|s| s.cell_range())
            .collect()
    }
}

pub(crate) fn uniform_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * (i as f64 / n as f64)).collect();
    pts[n] = hi;
    pts
}

/// A mesh piece on `[lo, hi]` that is glued to its neighbours by sharing
/// endpoints bit-for-bit.
#[derive(Debug, Clone)]
pub(crate) struct Piece {
    pub points: Vec<f64>,
    pub segments: Vec<(usize, SegmentKind)>,
}

impl Piece {
    /// Maps unit coordinates `t` in `[0, 1]` (layer at 0) onto `[lo, hi]`.
    pub fn from_unit(
        unit: &[f64],
        segments: Vec<(usize, SegmentKind)>,
        lo: f64,
        hi: f64,
        orientation: Orientation,
    ) -> Piece {
        let len = hi - lo;
        let n = unit.len() - 1;
        let mut points: Vec<f64> = match orientation {
            Orientation::LayerLeft => unit.iter().map(|t| lo + len * t).collect(),
            Orientation::LayerRight => unit.iter().rev().map(|t| hi - len * t).collect(),
        };
        points[0] = lo;
        points[n] = hi;
        let segments = match orientation {
            Orientation::LayerLeft => segments,
            Orientation::LayerRight => segments.into_iter().rev().collect(),
        };
        Piece { points, segments }
    }

    pub fn uniform(lo: f64, hi: f64, n: usize, kind: SegmentKind) -> Piece {
        Piece {
            points: uniform_points(lo, hi, n),
            segments: vec![(n, kind)],
        }
    }
}

/// Concatenates pieces whose endpoints coincide.
pub(crate) fn glue(pieces: Vec<Piece>, provenance: Provenance) -> Result<Mesh> {
    let mut points: Vec<f64> = Vec::new();
    let mut segments = Vec::new();
    let mut cell = 0;
    for piece in pieces {
        match points.last() {
            None => points.extend_from_slice(&piece.points),
            Some(&last) => {
                if last != piece.points[0] {
                    return Err(Error::Mesh(format!(
                        "pieces do not share an endpoint: {last} vs {}",
                        piece.points[0]
                    )));
                }
                points.extend_from_slice(&piece.points[1..]);
            }
        }
        for (cells, kind) in piece.segments {
            segments.push(Segment {
                first_cell: cell,
                cells,
                kind,
            });
            cell += cells;
        }
    }
    Mesh::new(points, segments, provenance)
}
