//! SVG heatmaps of pairwise matrices. Lighter cells mean lower values.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::report::{PairwiseMatrix, Scope};
use crate::error::{Error, Result};
use crate::explainers::Method;

const CELL: usize = 64;
const LEFT: usize = 120;
const TOP: usize = 130;
const PAD: usize = 20;
const LOW: [f64; 3] = [255.0, 255.0, 255.0];
const HIGH: [f64; 3] = [8.0, 48.0, 107.0];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn display_name(id: &str) -> &str {
    id.parse::<Method>().map_or(id, |m| m.label())
}

/// Position of `v` between the metric bounds, clamped to [0, 1].
fn shade(v: f64, lo: f64, hi: f64) -> f64 {
    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
}

fn color(t: f64) -> String {
    let c: Vec<u8> = LOW
        .iter()
        .zip(HIGH)
        .map(|(l, h)| (l + t * (h - l)).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn label(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" { "0.00".to_owned() } else { s }
}

pub fn render_svg(mat: &PairwiseMatrix) -> Result<String> {
    mat.validate()?;
    let m = mat.methods.len();
    let (lo, hi) = mat.metric.bounds();
    let width = LEFT + m * CELL + PAD;
    let height = TOP + m * CELL + PAD;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let scope = match &mat.k {
        Scope::TopK(k) => format!("k={k}"),
        Scope::Features(f) => format!("features={f}"),
    };
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="24" font-size="14">{} ({}, n={})</text>"#,
        mat.metric,
        escape(&scope),
        mat.n
    );
    for (i, name) in mat.methods.iter().enumerate() {
        let name = escape(display_name(name));
        let cy = TOP + i * CELL + CELL / 2;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{cy}" font-size="12" text-anchor="end" dominant-baseline="middle">{name}</text>"#,
            LEFT - 6
        );
        let cx = LEFT + i * CELL + CELL / 2;
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" font-size="12" transform="rotate(-45 {cx} {})">{name}</text>"#,
            TOP - 6,
            TOP - 6
        );
    }
    for i in 0..m {
        for j in 0..m {
            let v = mat.mean[i][j];
            let t = shade(v, lo, hi);
            let (x, y) = (LEFT + j * CELL, TOP + i * CELL);
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" stroke="#cccccc"/>"##,
                color(t)
            );
            let ink = if t > 0.5 { "white" } else { "black" };
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="12" fill="{ink}" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
                x + CELL / 2,
                y + CELL / 2,
                label(v)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// `<metric>_k<k>.svg` or `<metric>_f<subset>.svg`.
pub fn heatmap_file_name(mat: &PairwiseMatrix) -> String {
    match &mat.k {
        Scope::TopK(k) => format!("{}_k{k}.svg", mat.metric),
        Scope::Features(f) => format!("{}_f{}.svg", mat.metric, f.replace(';', "-")),
    }
}

pub fn write_heatmaps(matrices: &[PairwiseMatrix], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::with_capacity(matrices.len());
    for mat in matrices {
        let path = dir.join(heatmap_file_name(mat));
        std::fs::write(&path, render_svg(mat)?).map_err(|e| Error::io(&path, e))?;
        out.push(path);
    }
    Ok(out)
}
