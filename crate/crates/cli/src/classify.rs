//! Human-readable layer maps.

use layerfem::problem::{BoundaryClass, BoundaryLayer, LayerMap, WidthClass};

/// Short decimal form: exact when that is short, else 6 decimals.
pub fn short_num(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    let s = format!("{v}");
    if s.len() <= 10 {
        return s;
    }
    let t = format!("{v:.6}");
    let t = t.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.into()
    }
}

fn boundary_part(b: &BoundaryLayer) -> Option<String> {
    match b.class {
        BoundaryClass::Exponential { width, beta } => {
            let w = match width {
                WidthClass::Eps => "ε",
                WidthClass::SqrtEps => "√ε",
            };
            Some(format!(
                "exponential ({w}-width, β={}) at {}",
                short_num(beta),
                short_num(b.x)
            ))
        }
        BoundaryClass::Power { .. } => Some(format!("power layer at {}", short_num(b.x))),
        BoundaryClass::None => None,
    }
}

/// One-line summary, e.g. `power layer at 0; exponential (ε-width, β=1) at 1`.
pub fn layer_summary(lm: &LayerMap) -> String {
    let mut parts = Vec::new();
    parts.extend(boundary_part(lm.lower()));
    for a in &lm.attractive {
        let refined = if a.needs_refinement { ", refined" } else { "" };
        parts.push(format!(
            "interior cusp layer at {} (c/|b'|={}{refined})",
            short_num(a.x),
            short_num(a.lambda_cap)
        ));
    }
    parts.extend(boundary_part(lm.upper()));
    if parts.is_empty() {
        "no layers".into()
    } else {
        parts.join("; ")
    }
}

/// Summary followed by turning points, boundary details and notes.
pub fn layer_report(lm: &LayerMap) -> String {
    let mut out = layer_summary(lm);
    out.push('\n');
    for t in &lm.turning_points {
        out.push_str(&format!(
            "turning point at {}: {} (b'={}, c={})\n",
            short_num(t.x),
            t.kind.name(),
            short_num(t.db),
            short_num(t.c)
        ));
    }
    for b in &lm.boundaries {
        out.push_str(&format!(
            "boundary {}: {} (b={}, c={}, width {})\n",
            short_num(b.x),
            b.kind.name(),
            short_num(b.b),
            short_num(b.c),
            short_num(b.typical_width)
        ));
    }
    for n in &lm.notes {
        out.push_str(&format!("note: {n}\n"));
    }
    out
}
