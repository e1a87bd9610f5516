//! Mesh and solution dump formats.
//!
//! A mesh dump is one JSON header line (provenance and segments) followed
//! by one mesh point per line as a hexadecimal float, so files round-trip
//! bit for bit.

use std::io::Write;

use anyhow::{anyhow, bail, Context, Result};
use layerfem::fem::DiscreteFunction;
use layerfem::mesh::{Mesh, Provenance, Segment, SegmentKind};
use layerfem::norms::ErrorReport;
use serde_json::{json, Value};

pub const MESH_FORMAT: &str = "layerfem-mesh-1";

/// `[-]0x1.<hex>p<exp>`, shortest form without trailing zeros.
pub fn hex_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    if biased == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let digits = format!("{mantissa:013x}");
    let digits = digits.trim_end_matches('0');
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exp:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{exp:+}")
    }
}

pub fn parse_hex_float(s: &str) -> Result<f64> {
    match s {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => hexf_parse::parse_hexf64(s, false).map_err(|e| anyhow!("bad hex float '{s}': {e}")),
    }
}

fn segment_json(s: &Segment) -> Value {
    let mut v = json!({ "kind": s.kind.tag(), "first_cell": s.first_cell, "cells": s.cells });
    match s.kind {
        SegmentKind::Fine { tau } => v["tau"] = json!(tau),
        SegmentKind::Power { level, levels } => {
            v["level"] = json!(level);
            v["levels"] = json!(levels);
        }
        SegmentKind::Coarse | SegmentKind::Uniform => {}
    }
    v
}

pub fn mesh_header(mesh: &Mesh) -> Value {
    let prov = mesh.provenance();
    json!({
        "format": MESH_FORMAT,
        "generator": prov.generator,
        "params": prov.params.iter().map(|(n, v)| json!([n, v])).collect::<Vec<_>>(),
        "notes": prov.notes,
        "cells": mesh.cells(),
        "segments": mesh.segments().iter().map(segment_json).collect::<Vec<_>>(),
    })
}

pub fn write_mesh_dump(mesh: &Mesh, mut w: impl Write) -> Result<()> {
    writeln!(w, "{}", serde_json::to_string(&mesh_header(mesh))?)?;
    for &x in mesh.points() {
        writeln!(w, "{}", hex_float(x))?;
    }
    Ok(())
}

pub fn mesh_dump_string(mesh: &Mesh) -> String {
    let mut buf = Vec::new();
    write_mesh_dump(mesh, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("dump is UTF-8")
}

/// Reads a mesh dump back into a mesh.
pub fn parse_mesh_dump(text: &str) -> Result<Mesh> {
    let mut lines = text.lines();
    let header: Value =
        serde_json::from_str(lines.next().ok_or_else(|| anyhow!("empty mesh dump"))?).context("mesh dump header")?;
    if header["format"] != MESH_FORMAT {
        bail!("not a mesh dump (format {})", header["format"]);
    }
    let points = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| parse_hex_float(l.trim()))
        .collect::<Result<Vec<_>>>()?;
    let mut prov = Provenance::new(header["generator"].as_str().unwrap_or_default());
    for p in header["params"].as_array().into_iter().flatten() {
        let name = p[0].as_str().ok_or_else(|| anyhow!("bad parameter entry {p}"))?;
        prov = prov.param(name, p[1].as_f64().unwrap_or(f64::NAN));
    }
    for n in header["notes"].as_array().into_iter().flatten() {
        prov = prov.note(n.as_str().unwrap_or_default());
    }
    let field = |s: &Value, key: &str| -> Result<usize> {
        s[key]
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| anyhow!("segment without '{key}': {s}"))
    };
    let mut segments = Vec::new();
    for s in header["segments"].as_array().into_iter().flatten() {
        let kind = match s["kind"].as_str() {
            Some("fine") => SegmentKind::Fine {
                tau: s["tau"].as_f64().ok_or_else(|| anyhow!("fine segment without tau"))?,
            },
            Some("coarse") => SegmentKind::Coarse,
            Some("uniform") => SegmentKind::Uniform,
            Some("power") => SegmentKind::Power {
                level: field(s, "level")?,
                levels: field(s, "levels")?,
            },
            other => bail!("unknown segment kind {other:?}"),
        };
        segments.push(Segment {
            first_cell: field(s, "first_cell")?,
            cells: field(s, "cells")?,
            kind,
        });
    }
    Ok(Mesh::new(points, segments, prov)?)
}

/// `x u(x)` per line at every node plus `samples_per_cell` uniform points
/// per cell, after `#` comment lines.
pub fn write_solution(
    u: &DiscreteFunction,
    samples_per_cell: usize,
    comments: &[String],
    mut w: impl Write,
) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "x u")?;
    for (x, v) in u.samples(samples_per_cell) {
        writeln!(w, "{x:e} {v:e}")?;
    }
    Ok(())
}

pub fn report_lines(r: &ErrorReport) -> Vec<String> {
    vec![
        format!("reference: {}", r.reference),
        format!("energy = {:e}", r.energy),
        format!("l2 = {:e}", r.l2),
        format!("h1 = {:e}", r.h1_semi),
        format!("max = {:e}", r.max),
        format!("gamma_tilde = {}, quadrature points = {}", r.gamma_tilde, r.quad_points),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_examples() {
        assert_eq!(hex_float(1.0), "0x1p+0");
        assert_eq!(hex_float(-0.5), "-0x1p-1");
        assert_eq!(hex_float(0.1), "0x1.999999999999ap-4");
        assert_eq!(hex_float(0.0), "0x0p+0");
        assert_eq!(hex_float(-0.0), "-0x0p+0");
        assert_eq!(hex_float(f64::MIN_POSITIVE / 4.0), "0x0.4p-1022");
    }

    #[test]
    fn hex_round_trip() {
        for v in [
            1.0,
            0.1,
            6.25e-7,
            1e-300,
            5e-324,
            -3.75,
            f64::MAX,
            1.0 - f64::EPSILON / 2.0,
        ] {
            assert_eq!(parse_hex_float(&hex_float(v)).unwrap().to_bits(), v.to_bits(), "{v}");
        }
        assert_eq!(parse_hex_float("-0x0p+0").unwrap().to_bits(), (-0.0f64).to_bits());
    }
}
