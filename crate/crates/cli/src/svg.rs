use std::fmt::Write;

use remez_rigidity::levelset::Polyline;
use remez_rigidity::remez::{DomainFamily, DomainSpec};
use remez_rigidity::MultiPoly;

const SIZE: f64 = 512.0;

/// Plot data on `[-1, 1]^2`, rendered as a fixed-size SVG.
#[derive(Debug, Default)]
pub struct Plot {
    body: String,
}

fn px(x: f64) -> f64 {
    (x + 1.0) * SIZE / 2.0
}

fn py(y: f64) -> f64 {
    (1.0 - y) * SIZE / 2.0
}

impl Plot {
    pub fn new() -> Plot {
        Plot::default()
    }

    /// Outlines of a planar domain family; `None` outside the plane.
    pub fn domains(f: &DomainFamily) -> Option<Plot> {
        if f.n() != 2 {
            return None;
        }
        let mut plot = Plot::new();
        let s = SIZE / 2.0;
        for d in f.domains() {
            let _ = match d {
                DomainSpec::Ball { center, radius } => writeln!(
                    plot.body,
                    r##"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="#2d6a4f"/>"##,
                    px(center[0]),
                    py(center[1]),
                    radius * s
                ),
                DomainSpec::Box { lo, hi } => writeln!(
                    plot.body,
                    r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="#2d6a4f"/>"##,
                    px(lo[0]),
                    py(hi[1]),
                    (hi[0] - lo[0]) * s,
                    (hi[1] - lo[1]) * s
                ),
                DomainSpec::Ellipse { center, semiaxes } => writeln!(
                    plot.body,
                    r##"<ellipse cx="{:.3}" cy="{:.3}" rx="{:.3}" ry="{:.3}" fill="none" stroke="#2d6a4f"/>"##,
                    px(center[0]),
                    py(center[1]),
                    semiaxes[0] * s,
                    semiaxes[1] * s
                ),
            };
        }
        Some(plot)
    }

    /// Grey-scale grid of `|p| / max |p|` over the disk.
    pub fn heat(&mut self, p: &MultiPoly, cells: usize) {
        let h = 2.0 / cells as f64;
        let mut vals = Vec::new();
        for i in 0..cells {
            for j in 0..cells {
                let c = [-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h];
                if c[0] * c[0] + c[1] * c[1] <= 1.0 {
                    vals.push((c, p.value(&c).abs()));
                }
            }
        }
        let max = vals.iter().map(|v| v.1).fold(0.0, f64::max);
        let w = SIZE / cells as f64;
        for (c, v) in vals {
            let level = if max > 0.0 { 255 - (200.0 * v / max).round() as u8 } else { 255 };
            let _ = writeln!(
                self.body,
                r#"<rect x="{:.3}" y="{:.3}" width="{w:.3}" height="{w:.3}" fill="rgb({level},{level},{level})"/>"#,
                px(c[0] - h / 2.0),
                py(c[1] + h / 2.0)
            );
        }
    }

    pub fn curves(&mut self, curves: &[Polyline], color: &str) {
        for c in curves {
            let pts: Vec<String> = c.vertices.iter().map(|v| format!("{:.3},{:.3}", px(v[0]), py(v[1]))).collect();
            let tag = if c.closed { "polygon" } else { "polyline" };
            let _ = writeln!(
                self.body,
                r#"<{tag} points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
    }

    /// Planar points; a 1-dimensional set is drawn on the horizontal axis.
    pub fn points(&mut self, pts: &[Vec<f64>]) {
        for p in pts {
            let y = p.get(1).copied().unwrap_or(0.0);
            let _ = writeln!(
                self.body,
                r##"<circle cx="{:.3}" cy="{:.3}" r="3" fill="#d62828"/>"##,
                px(p[0]),
                py(y)
            );
        }
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        );
        s.push('\n');
        let r = SIZE / 2.0;
        let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
        s.push_str(&self.body);
        let _ = writeln!(s, r#"<circle cx="{r}" cy="{r}" r="{r}" fill="none" stroke="black"/>"#);
        s.push_str("</svg>\n");
        s
    }
}
