//! Stream function and the per-method field comparison export (CSV grids plus SVG heatmaps).

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::binio::write_atomic;
use crate::error::{Error, Result};
use crate::flow::io::format_snapshot_csv;
use crate::flow::Field2D;
use crate::readout::{Method, ReadoutReport};

use super::config::ExperimentConfig;
use super::offline::OfflineArtifacts;
use super::table::{fmt_f64, Table};

/// `psi(x, y) = int_0^y u_x dy'` by the cumulative trapezoid rule per column; the bottom row is zero.
pub fn stream_function(ux: &Field2D) -> Field2D {
    let (nx, ny) = (ux.nx(), ux.ny());
    let h = ux.hy();
    let mut psi = Field2D::zeros(nx, ny);
    for i in 0..nx {
        let mut acc = 0.0;
        for j in 1..ny {
            acc += 0.5 * h * (ux.get(i, j - 1) + ux.get(i, j));
            psi.set(i, j, acc);
        }
    }
    psi
}

/// Readouts of both components with one method at a shared budget.
#[derive(Debug, Clone)]
pub struct MethodReports {
    pub method: Method,
    pub ux: ReadoutReport,
    pub uy: ReadoutReport,
}

/// Physical fields of one panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub name: String,
    pub ux: Field2D,
    pub uy: Field2D,
    pub psi: Field2D,
    /// Readout error of `(u_x, u_y)`; zero for the truth panel.
    pub epsilon: (f64, f64),
}

fn panel_name(m: Method) -> &'static str {
    match m {
        Method::Podr => "podr",
        Method::Rsr => "rsr",
        Method::Fsr => "fsr",
    }
}

/// Truth panel followed by one panel per method. Reconstructions are unit
/// vectors and are rescaled by the norms of the true fields.
pub fn comparison_panels(art: &OfflineArtifacts, reports: &[MethodReports]) -> Result<Vec<Panel>> {
    let (tux, tuy) = (&art.ensemble.target_ux, &art.ensemble.target_uy);
    let mut panels =
        vec![Panel { name: "truth".into(), ux: tux.clone(), uy: tuy.clone(), psi: stream_function(tux), epsilon: (0.0, 0.0) }];
    let rescale = |truth: &Field2D, r: &ReadoutReport| -> Result<Field2D> {
        if r.reconstruction.len() != truth.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} reconstruction has {} points, grid has {}",
                r.method,
                r.reconstruction.len(),
                truth.len()
            )));
        }
        let s = truth.norm();
        Field2D::new(truth.nx(), truth.ny(), r.reconstruction.iter().map(|v| v * s).collect())
    };
    for m in reports {
        let ux = rescale(tux, &m.ux)?;
        let uy = rescale(tuy, &m.uy)?;
        let psi = stream_function(&ux);
        panels.push(Panel { name: panel_name(m.method).into(), ux, uy, psi, epsilon: (m.ux.epsilon, m.uy.epsilon) });
    }
    Ok(panels)
}

/// Write `visual/<panel>_{ux,uy,psi}.csv`, `visual/<panel>.svg` and an index CSV.
pub fn emit_visual_comparison(
    cfg: &ExperimentConfig,
    art: &OfflineArtifacts,
    reports: &[MethodReports],
) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir.join("visual");
    std::fs::create_dir_all(&dir)?;
    let panels = comparison_panels(art, reports)?;
    let truth = &panels[0];
    let ranges = [truth.ux.max_abs(), truth.uy.max_abs(), truth.psi.max_abs()];
    let mut index = Table::new(&["panel", "quantity", "file", "epsilon_ux", "epsilon_uy"]);
    let mut written = Vec::new();
    for p in &panels {
        for (q, f) in [("ux", &p.ux), ("uy", &p.uy), ("psi", &p.psi)] {
            let name = format!("{}_{q}.csv", p.name);
            let path = dir.join(&name);
            write_atomic(&path, format_snapshot_csv(f).as_bytes())?;
            index.push(vec![p.name.clone(), q.into(), name, fmt_f64(p.epsilon.0), fmt_f64(p.epsilon.1)]);
            written.push(path);
        }
        let path = dir.join(format!("{}.svg", p.name));
        write_atomic(&path, heatmap_svg(p, &ranges).as_bytes())?;
        written.push(path);
    }
    let path = dir.join("index.csv");
    index.write(&path, &cfg.config_hash())?;
    written.push(path);
    Ok(written)
}

/// Diverging blue-white-red colour for `v` in `[-range, range]`.
fn colour(v: f64, range: f64) -> (u8, u8, u8) {
    let t = if range > 0.0 { (v / range).clamp(-1.0, 1.0) } else { 0.0 };
    let fade = |t: f64| (255.0 * (1.0 - t.abs())).round() as u8;
    if t >= 0.0 { (255, fade(t), fade(t)) } else { (fade(t), fade(t), 255) }
}

const CELL: usize = 4;
const GAP: usize = 16;
const TITLE: usize = 20;

fn heatmap_svg(p: &Panel, ranges: &[f64; 3]) -> String {
    let (nx, ny) = (p.ux.nx(), p.ux.ny());
    let (w, h) = (nx * CELL, ny * CELL);
    let total_w = 3 * w + 4 * GAP;
    let total_h = h + TITLE + 2 * GAP;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" shape-rendering="crispEdges">"#
    );
    let _ = writeln!(s, r#"<rect width="{total_w}" height="{total_h}" fill="white"/>"#);
    for (k, (label, f)) in [("u_x", &p.ux), ("u_y", &p.uy), ("psi", &p.psi)].iter().enumerate() {
        let x0 = GAP + k * (w + GAP);
        let y0 = GAP + TITLE;
        let _ = writeln!(
            s,
            r#"<text x="{x0}" y="{}" font-family="sans-serif" font-size="12">{} {label}</text>"#,
            GAP + 12,
            p.name
        );
        for j in 0..ny {
            for i in 0..nx {
                let (r, g, b) = colour(f.get(i, j), ranges[k]);
                let _ = writeln!(
                    s,
                    r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
                    x0 + i * CELL,
                    y0 + (ny - 1 - j) * CELL
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_flow_gives_linear_stream_function() {
        let u = Field2D::from_fn(8, 8, |_, _| 1.0);
        let psi = stream_function(&u);
        for j in 0..8 {
            assert!((psi.get(3, j) - j as f64 / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn colours_saturate() {
        assert_eq!(colour(2.0, 1.0), (255, 0, 0));
        assert_eq!(colour(-1.0, 1.0), (0, 0, 255));
        assert_eq!(colour(0.0, 1.0), (255, 255, 255));
    }
}
