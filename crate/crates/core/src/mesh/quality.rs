use alloc::string::String;
use alloc::vec::Vec;

use super::Mesh;
use crate::error::Result;
use crate::problem::BoundaryValueProblem;

/// Cells whose constants exceed these values are reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityThresholds {
    /// Bound on `h_i N`.
    pub h: f64,
    /// Bound on `|b|_{inf, cell} / (h_i N)`.
    pub b: f64,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        QualityThresholds {
            h: f64::INFINITY,
            b: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentQuality {
    pub tag: &'static str,
    pub first_cell: usize,
    pub cells: usize,
    pub max_h_times_n: f64,
    pub max_b_over_h_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub cell: usize,
    pub quantity: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub n: usize,
    /// `max_i h_i N`.
    pub max_h_times_n: f64,
    /// `max_i |b|_{inf, cell i} / (h_i N)`.
    pub max_b_over_h_n: f64,
    pub segments: Vec<SegmentQuality>,
    pub violations: Vec<Violation>,
    pub generator: String,
}

const SAMPLES_PER_CELL: usize = 8;

/// Measures `h_i <= C / N` and `|b|_{inf, cell} / h_i <= C N` on every cell;
/// `|b|` is sampled at 8 equidistant points per cell (endpoints included).
pub fn mesh_quality_report(
    m: &Mesh,
    p: &BoundaryValueProblem,
    n: usize,
    thresholds: QualityThresholds,
) -> Result<QualityReport> {
    let nf = n as f64;
    let mut per_cell = Vec::with_capacity(m.cells());
    let mut violations = Vec::new();
    for i in 0..m.cells() {
        let (a, h) = (m.points()[i], m.h(i));
        let mut bmax: f64 = 0.0;
        for j in 0..SAMPLES_PER_CELL {
            let x = if j + 1 == SAMPLES_PER_CELL {
                m.points()[i + 1]
            } else {
                a + h * (j as f64 / (SAMPLES_PER_CELL - 1) as f64)
            };
            bmax = bmax.max(p.b_at(x)?.abs());
        }
        let hn = h * nf;
        let bh = bmax / hn;
        if hn > thresholds.h {
            violations.push(Violation {
                cell: i,
                quantity: "h N",
                value: hn,
            });
        }
        if bh > thresholds.b {
            violations.push(Violation {
                cell: i,
                quantity: "|b| / (h N)",
                value: bh,
            });
        }
        per_cell.push((hn, bh));
    }
    let fold = |r: core::ops::Range<usize>, f: fn(&(f64, f64)) -> f64| per_cell[r].iter().map(f).fold(0.0, f64::max);
    let segments = m
        .segments()
        .iter()
        .map(|s| SegmentQuality {
            tag: s.kind.tag(),
            first_cell: s.first_cell,
            cells: s.cells,
            max_h_times_n: fold(s.cell_range(), |c| c.0),
            max_b_over_h_n: fold(s.cell_range(), |c| c.1),
        })
        .collect();
    Ok(QualityReport {
        n,
        max_h_times_n: fold(0..m.cells(), |c| c.0),
        max_b_over_h_n: fold(0..m.cells(), |c| c.1),
        segments,
        violations,
        generator: m.provenance().generator.clone(),
    })
}
