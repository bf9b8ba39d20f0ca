//! Line-drawing of a solution mesh in one of its planes.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use clap::ValueEnum;
use num_complex::Complex64;

use crate::json::SolutionFile;
use crate::{file_mesh, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Plane {
    /// Source disk.
    #[value(name = "z")]
    Z,
    /// Solved log plane, both halves.
    #[value(name = "W")]
    BigW,
    /// Image disk.
    #[value(name = "w")]
    W,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotStyle {
    pub stroke: f64,
    pub size: u32,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self { stroke: 0.5, size: 800 }
    }
}

fn c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// Distinct triangle edges of `plane` as segments. Disk planes use the
/// left half only, where `z` and `w` are defined.
pub fn edges(file: &SolutionFile, plane: Plane) -> CliResult<Vec<(Complex64, Complex64)>> {
    let mesh = file_mesh(file)?;
    let index = mesh.index();
    let tris = match plane {
        Plane::BigW => mesh.triangles(),
        Plane::Z | Plane::W => mesh.left_triangles(),
    };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for t in tris {
        for e in 0..3 {
            let (a, b) = (t.corners[e], t.corners[(e + 1) % 3]);
            let (pa, pb) = (index.column(a.j, a.k), index.column(b.j, b.k));
            let key = match plane {
                Plane::BigW => ((pa, a.wrap), (pb, b.wrap)),
                _ => ((pa, 0), (pb, 0)),
            };
            let key = if key.0 <= key.1 { key } else { (key.1, key.0) };
            if !seen.insert(key) {
                continue;
            }
            let point = |p: usize, corner: qcmap::mesh::Corner| -> CliResult<Complex64> {
                let v = &file.vertices[p];
                let value = match plane {
                    Plane::BigW => Some(c(v.big_w) + corner.shift()),
                    Plane::Z => v.z.map(c),
                    Plane::W => v.w.map(c),
                };
                value.ok_or_else(|| {
                    CliError::Usage(format!("vertex ({},{}) has no disk value", v.j, v.k))
                })
            };
            out.push((point(pa, a)?, point(pb, b)?));
        }
    }
    Ok(out)
}

pub fn render(file: &SolutionFile, plane: Plane, style: &PlotStyle) -> CliResult<String> {
    let segs = edges(file, plane)?;
    let (lo, hi) = match plane {
        Plane::Z | Plane::W => (Complex64::new(-1.0, -1.0), Complex64::new(1.0, 1.0)),
        Plane::BigW => segs.iter().flat_map(|&(a, b)| [a, b]).fold(
            (Complex64::new(f64::INFINITY, f64::INFINITY), Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
            |(lo, hi), p| {
                (Complex64::new(lo.re.min(p.re), lo.im.min(p.im)), Complex64::new(hi.re.max(p.re), hi.im.max(p.im)))
            },
        ),
    };
    let size = f64::from(style.size);
    let margin = 0.03 * size;
    let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-300);
    let scale = (size - 2.0 * margin) / span;
    let centre = (lo + hi) * 0.5;
    let map = |p: Complex64| -> (f64, f64) {
        (size * 0.5 + (p.re - centre.re) * scale, size * 0.5 - (p.im - centre.im) * scale)
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        style.size
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, "<title>{} ({},{}) {} plane</title>", escape(&file.mu_spec), file.m, file.n, plane_name(plane));
    if plane != Plane::BigW {
        let (cx, cy) = map(Complex64::new(0.0, 0.0));
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{:.3}" fill="none" stroke="black" stroke-width="{:.3}"/>"#,
            scale,
            2.0 * style.stroke
        );
    }
    let _ = write!(s, r#"<path fill="none" stroke="black" stroke-width="{:.3}" d=""#, style.stroke);
    for (a, b) in segs {
        let (ax, ay) = map(a);
        let (bx, by) = map(b);
        let _ = write!(s, "M{ax:.3} {ay:.3}L{bx:.3} {by:.3}");
    }
    let _ = writeln!(s, r#""/>"#);
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg(file: &SolutionFile, plane: Plane, style: &PlotStyle, path: &Path) -> CliResult<()> {
    let text = render(file, plane, style)?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn plane_name(plane: Plane) -> &'static str {
    match plane {
        Plane::Z => "z",
        Plane::BigW => "W",
        Plane::W => "w",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
