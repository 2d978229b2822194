//! CSV, JSON and SVG output.
//!
//! Field CSV columns: `x1,…,xn[,t],value`, one row per node (time-major when
//! a time axis is present). Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::covering::CoveringResult;
use crate::error::{Error, Result};
use crate::operators::GridField;

pub const SCHEMA_VERSION: u32 = 1;

/// Round-trippable float text: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.16e}")
}

pub fn field_csv(field: &GridField) -> String {
    let n = field.grid.dim;
    let mut out = String::new();
    let mut header: Vec<String> = (1..=n).map(|d| format!("x{d}")).collect();
    if field.times.is_some() {
        header.push("t".into());
    }
    header.push("value".into());
    out.push_str(&header.join(","));
    out.push('\n');
    let times = field.times.clone().unwrap_or_default();
    let slices = times.len().max(1);
    for it in 0..slices {
        for (node, v) in field.slice(it).iter().enumerate() {
            for c in field.grid.node(node) {
                out.push_str(&fmt_f64(c));
                out.push(',');
            }
            if let Some(t) = times.get(it) {
                out.push_str(&fmt_f64(*t));
                out.push(',');
            }
            out.push_str(&fmt_f64(*v));
            out.push('\n');
        }
    }
    out
}

/// Writes `<stem>.csv` and the `<stem>.json` sidecar under `dir`.
pub fn write_field(field: &GridField, dir: &Path, stem: &str, seed: u64) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    let side = dir.join(format!("{stem}.json"));
    fs::write(&csv, field_csv(field))?;
    let meta = json!({
        "schema": SCHEMA_VERSION,
        "operator": field.meta.operator,
        "source": field.meta.source,
        "params": field.meta.params,
        "flagged": field.meta.flagged,
        "grid": field.grid,
        "times": field.times,
        "seed": seed,
    });
    write_json(&side, &meta)?;
    Ok((csv, side))
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// Whitney cubes, the points of `F` and the selection balls
/// `B(x_k, b d(x_k,F))` of a planar covering.
pub fn covering_svg(result: &CoveringResult, points: &[Vec<f64>]) -> Result<String> {
    if points.first().map(Vec::len) != Some(2) {
        return Err(Error::invalid("SVG output needs a planar covering"));
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut grow = |x: f64, y: f64, r: f64| {
        lo[0] = lo[0].min(x - r);
        lo[1] = lo[1].min(y - r);
        hi[0] = hi[0].max(x + r);
        hi[1] = hi[1].max(y + r);
    };
    for w in &result.whitney.cubes {
        let l = w.cube.lo();
        let s = w.cube.side();
        grow(l[0], l[1], 0.0);
        grow(l[0] + s, l[1] + s, 0.0);
    }
    for p in points {
        grow(p[0], p[1], 0.0);
    }
    let b = result.params.b;
    for (c, d) in result.centers.iter().zip(&result.distances) {
        grow(c.as_slice()[0], c.as_slice()[1], b * d);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let size = 800.0;
    let k = size / span;
    let px = |x: f64| (x - lo[0]) * k;
    let py = |y: f64| size - (y - lo[1]) * k;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#);
    let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    let _ = writeln!(s, r#"<g fill="none" stroke="steelblue" stroke-width="0.5">"#);
    for w in &result.whitney.cubes {
        let l = w.cube.lo();
        let side = w.cube.side() * k;
        let _ = writeln!(s, r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/>"#, px(l[0]), py(l[1]) - side, side, side);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g fill="none" stroke="darkorange" stroke-width="0.4" stroke-opacity="0.6">"#);
    for (c, d) in result.centers.iter().zip(&result.distances) {
        let c = c.as_slice();
        let _ = writeln!(s, r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}"/>"#, px(c[0]), py(c[1]), b * d * k);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g fill="black">"#);
    for p in points {
        let _ = writeln!(s, r#"<circle cx="{:.3}" cy="{:.3}" r="2"/>"#, px(p[0]), py(p[1]));
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{FieldMeta, Grid};

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, std::f64::consts::PI] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn csv_layout() {
        let g = Grid::new(2, 1.0, 1.0).unwrap();
        let f = GridField::sample(g, FieldMeta::default(), |x| x[0] + 10.0 * x[1]).unwrap();
        let csv = field_csv(&f);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x1,x2,value");
        assert_eq!(lines.len(), 5);
        let row: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![-0.5, 0.5, 4.5]);
    }
}
