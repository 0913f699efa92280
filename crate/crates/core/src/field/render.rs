//! SVG and JSON output for a projection with its generalized axes.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Bounds, IsolineSet, ScalarGrid};
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const MARGIN: f64 = 20.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDocument {
    pub resolution: usize,
    pub bounds: Bounds,
    pub values: Vec<f64>,
}

impl From<&ScalarGrid> for GridDocument {
    fn from(g: &ScalarGrid) -> Self {
        Self {
            resolution: g.resolution,
            bounds: g.bounds,
            values: g.values.clone(),
        }
    }
}

/// Discovery results attached to a plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryDocument {
    pub mode: String,
    pub lambda: f64,
    pub sigma: f64,
    pub objective: f64,
    pub perturbation: Vec<Vec<f64>>,
}

/// Everything drawn in the SVG, numerically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotDocument {
    pub points: Vec<[f64; 2]>,
    pub vectors: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub grid: GridDocument,
    pub isolines: Vec<super::Isoline>,
    #[serde(default, skip_serializing_if = "Option::is_none", flatten)]
    pub discovery: Option<DiscoveryDocument>,
}

impl PlotDocument {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Plot artifacts: an SVG drawing and its numeric mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedAxes {
    pub svg: String,
    pub document: PlotDocument,
}

impl RenderedAxes {
    pub fn write(&self, svg_path: &Path, json_path: &Path) -> Result<()> {
        std::fs::write(svg_path, &self.svg)?;
        std::fs::write(json_path, self.document.to_json()?)?;
        Ok(())
    }
}

struct Frame {
    bounds: Bounds,
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(bounds: Bounds) -> Self {
        let scale = (WIDTH - 2.0 * MARGIN) / bounds.width();
        let height = bounds.height() * scale + 2.0 * MARGIN;
        Self {
            bounds,
            scale,
            height,
        }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            MARGIN + (p[0] - self.bounds.min[0]) * self.scale,
            self.height - MARGIN - (p[1] - self.bounds.min[1]) * self.scale,
        )
    }
}

fn grey(rank: usize, count: usize) -> String {
    // light to dark with increasing level
    let t = if count > 1 {
        rank as f64 / (count - 1) as f64
    } else {
        1.0
    };
    let v = (210.0 - 170.0 * t).round() as u8;
    format!("#{v:02x}{v:02x}{v:02x}")
}

/// Draw points (coloured by class when labels are given), optional vector
/// glyphs and isolines shaded from light to dark by level.
pub fn render_axes(
    points: &[[f64; 2]],
    vectors: &[[f64; 2]],
    grid: &ScalarGrid,
    isolines: &IsolineSet,
    labels: Option<&[String]>,
    draw_vectors: bool,
) -> Result<RenderedAxes> {
    if vectors.len() != points.len() {
        return Err(Error::InvalidInput(format!(
            "{} points but {} vectors",
            points.len(),
            vectors.len()
        )));
    }
    if let Some(l) = labels {
        if l.len() != points.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} labels",
                points.len(),
                l.len()
            )));
        }
    }
    let frame = Frame::new(grid.bounds);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH:.0}" height="{:.0}" viewBox="0 0 {WIDTH:.0} {:.2}">"#,
        frame.height.ceil(),
        frame.height
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let mut levels = isolines.levels();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let _ = writeln!(
        svg,
        r#"<g class="isolines" fill="none" stroke-width="1.5">"#
    );
    for line in &isolines.isolines {
        let rank = levels.iter().position(|&l| l == line.level).unwrap_or(0);
        let mut d = String::new();
        for (k, p) in line.polyline.iter().enumerate() {
            let (x, y) = frame.map(*p);
            let _ = write!(d, "{}{x:.2},{y:.2}", if k == 0 { "M" } else { " L" });
        }
        let _ = writeln!(
            svg,
            r#"<path d="{d}" stroke="{}" data-level="{}"/>"#,
            grey(rank, levels.len()),
            line.level
        );
    }
    let _ = writeln!(svg, "</g>");

    let classes: Vec<&String> = match labels {
        Some(l) => {
            let mut c: Vec<&String> = l.iter().collect();
            c.sort();
            c.dedup();
            c
        }
        None => Vec::new(),
    };
    if draw_vectors {
        let longest = vectors.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
        if longest > 0.0 {
            let glyph = 0.6 * grid.cell_size()[0].min(grid.cell_size()[1]) / longest;
            let _ = writeln!(
                svg,
                r##"<g class="vectors" stroke="#555" stroke-width="1">"##
            );
            for (p, v) in points.iter().zip(vectors) {
                let (x0, y0) = frame.map(*p);
                let (x1, y1) = frame.map([p[0] + v[0] * glyph, p[1] + v[1] * glyph]);
                let _ = writeln!(
                    svg,
                    r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}"/>"#
                );
            }
            let _ = writeln!(svg, "</g>");
        }
    }
    let _ = writeln!(svg, r#"<g class="points" stroke="none">"#);
    for (i, p) in points.iter().enumerate() {
        let (x, y) = frame.map(*p);
        let colour = match labels {
            Some(l) => {
                let c = classes.iter().position(|c| **c == l[i]).unwrap_or(0);
                PALETTE[c % PALETTE.len()]
            }
            None => PALETTE[0],
        };
        let _ = writeln!(
            svg,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{colour}"/>"#
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");

    Ok(RenderedAxes {
        svg,
        document: PlotDocument {
            points: points.to_vec(),
            vectors: vectors.to_vec(),
            labels: labels.map(<[String]>::to_vec),
            grid: GridDocument::from(grid),
            isolines: isolines.isolines.clone(),
            discovery: None,
        },
    })
}
