//! Scalar fields on a triangulated grid over the projection plane.
//!
//! Every grid cell is split along its `(0,0)–(1,1)` diagonal into a lower
//! triangle (`u ≥ v`) and an upper triangle (`u < v`). The field is
//! piecewise linear over these triangles, so its gradient is constant per
//! triangle and a linear function of three vertex values.

pub mod contour;
pub mod render;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradients, CgOptions, FnOracle};

pub use contour::{default_levels, marching_squares, Isoline, IsolineSet};
pub use render::{render_axes, DiscoveryDocument, GridDocument, PlotDocument, RenderedAxes};

pub const DEFAULT_RESOLUTION: usize = 10;
pub const DEFAULT_REG_WEIGHT: f64 = 0.01;
pub const DEFAULT_LEVELS: usize = 10;
const PADDING: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    /// Bounding box of `points` grown by 5% of its extent on every side.
    /// A degenerate extent is widened so the box is never empty.
    pub fn around(points: &[[f64; 2]]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite projected point".into()));
        }
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for a in 0..2 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        for a in 0..2 {
            let extent = max[a] - min[a];
            let pad = if extent > 0.0 {
                PADDING * extent
            } else {
                PADDING * min[a].abs().max(1.0)
            };
            min[a] -= pad;
            max[a] += pad;
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }
}

/// Which half of a cell a point falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    /// Vertices `(0,0)`, `(1,0)`, `(1,1)`.
    Lower,
    /// Vertices `(0,0)`, `(1,1)`, `(0,1)`.
    Upper,
}

/// A triangle of the grid: cell indices and half.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub ix: usize,
    pub iy: usize,
    pub half: Half,
}

/// Vertex values of a `g × g` cell grid, `(g+1)²` values stored row by row
/// from the bottom (`index = iy·(g+1) + ix`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarGrid {
    pub resolution: usize,
    pub bounds: Bounds,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(resolution: usize, bounds: Bounds, values: Vec<f64>) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidInput(
                "grid resolution must be positive".into(),
            ));
        }
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
            return Err(Error::InvalidInput(
                "grid bounds must have positive area".into(),
            ));
        }
        if values.len() != (resolution + 1) * (resolution + 1) {
            return Err(Error::InvalidInput(format!(
                "a {resolution}x{resolution} grid needs {} vertex values, got {}",
                (resolution + 1) * (resolution + 1),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite grid value".into()));
        }
        Ok(Self {
            resolution,
            bounds,
            values,
        })
    }

    /// Grid sampling `f` at its vertices.
    pub fn from_fn(resolution: usize, bounds: Bounds, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let side = resolution + 1;
        let hx = bounds.width() / resolution as f64;
        let hy = bounds.height() / resolution as f64;
        let values = (0..side * side)
            .map(|k| {
                let (ix, iy) = (k % side, k / side);
                f(
                    bounds.min[0] + ix as f64 * hx,
                    bounds.min[1] + iy as f64 * hy,
                )
            })
            .collect();
        Self::new(resolution, bounds, values)
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.resolution + 1
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.side() + ix
    }

    #[inline]
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.index(ix, iy)]
    }

    pub fn cell_size(&self) -> [f64; 2] {
        [
            self.bounds.width() / self.resolution as f64,
            self.bounds.height() / self.resolution as f64,
        ]
    }

    pub fn vertex(&self, ix: usize, iy: usize) -> [f64; 2] {
        let [hx, hy] = self.cell_size();
        [
            self.bounds.min[0] + ix as f64 * hx,
            self.bounds.min[1] + iy as f64 * hy,
        ]
    }

    /// Containing triangle and local cell coordinates `(u, v)` of a point.
    pub fn locate(&self, p: [f64; 2]) -> Option<(Triangle, f64, f64)> {
        if !self.bounds.contains(p) {
            return None;
        }
        let [hx, hy] = self.cell_size();
        let g = self.resolution;
        let fx = (p[0] - self.bounds.min[0]) / hx;
        let fy = (p[1] - self.bounds.min[1]) / hy;
        let ix = (fx.floor() as usize).min(g - 1);
        let iy = (fy.floor() as usize).min(g - 1);
        let u = fx - ix as f64;
        let v = fy - iy as f64;
        let half = if u >= v { Half::Lower } else { Half::Upper };
        Some((Triangle { ix, iy, half }, u, v))
    }

    /// Gradient coefficients of a triangle: `∇f = Σ c_k · f[index_k]`.
    pub fn gradient_stencil(&self, t: Triangle) -> [(usize, [f64; 2]); 3] {
        let [hx, hy] = self.cell_size();
        let i00 = self.index(t.ix, t.iy);
        let i10 = self.index(t.ix + 1, t.iy);
        let i11 = self.index(t.ix + 1, t.iy + 1);
        let i01 = self.index(t.ix, t.iy + 1);
        match t.half {
            // f = f00 + (f10 − f00)u + (f11 − f10)v
            Half::Lower => [
                (i00, [-1.0 / hx, 0.0]),
                (i10, [1.0 / hx, -1.0 / hy]),
                (i11, [0.0, 1.0 / hy]),
            ],
            // f = f00 + (f11 − f01)u + (f01 − f00)v
            Half::Upper => [
                (i00, [0.0, -1.0 / hy]),
                (i11, [1.0 / hx, 0.0]),
                (i01, [-1.0 / hx, 1.0 / hy]),
            ],
        }
    }

    pub fn triangle_gradient(&self, t: Triangle) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (k, c) in self.gradient_stencil(t) {
            g[0] += c[0] * self.values[k];
            g[1] += c[1] * self.values[k];
        }
        g
    }

    pub fn gradient_at(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        self.locate(p).map(|(t, _, _)| self.triangle_gradient(t))
    }

    /// Piecewise-linear interpolation of the vertex values.
    pub fn value_at(&self, p: [f64; 2]) -> Option<f64> {
        let (t, u, v) = self.locate(p)?;
        let f00 = self.value(t.ix, t.iy);
        let f10 = self.value(t.ix + 1, t.iy);
        let f11 = self.value(t.ix + 1, t.iy + 1);
        let f01 = self.value(t.ix, t.iy + 1);
        Some(match t.half {
            Half::Lower => f00 + (f10 - f00) * u + (f11 - f10) * v,
            Half::Upper => f00 + (f11 - f01) * u + (f01 - f00) * v,
        })
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn triangles(&self) -> impl Iterator<Item = Triangle> + '_ {
        let g = self.resolution;
        (0..g).flat_map(move |iy| {
            (0..g).flat_map(move |ix| {
                [Half::Lower, Half::Upper]
                    .into_iter()
                    .map(move |half| Triangle { ix, iy, half })
            })
        })
    }

    /// Pairs of triangles sharing an interior edge.
    fn adjacent_triangles(&self) -> Vec<(Triangle, Triangle)> {
        let g = self.resolution;
        let t = |ix, iy, half| Triangle { ix, iy, half };
        let mut pairs = Vec::new();
        for iy in 0..g {
            for ix in 0..g {
                // the diagonal inside the cell
                pairs.push((t(ix, iy, Half::Lower), t(ix, iy, Half::Upper)));
                // right edge: lower half here, upper half of the right cell
                if ix + 1 < g {
                    pairs.push((t(ix, iy, Half::Lower), t(ix + 1, iy, Half::Upper)));
                }
                // top edge: upper half here, lower half of the cell above
                if iy + 1 < g {
                    pairs.push((t(ix, iy, Half::Upper), t(ix, iy + 1, Half::Lower)));
                }
            }
        }
        pairs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldOptions {
    pub resolution: usize,
    /// Weight of the smoothness term relative to the gradient constraints.
    pub reg_weight: f64,
    /// Grid extent; derived from the points when absent.
    pub bounds: Option<Bounds>,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            reg_weight: DEFAULT_REG_WEIGHT,
            bounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedField {
    pub grid: ScalarGrid,
    pub warnings: Vec<String>,
}

struct SparseRow {
    entries: Vec<(usize, f64)>,
    rhs: f64,
    weight: f64,
}

/// Least-squares field whose per-triangle gradient matches the vector at
/// every point. Smoothness penalises gradient jumps between neighbouring
/// triangles, which leaves linear fields unbiased; the result has zero mean.
pub fn fit_scalar_field(
    points: &[[f64; 2]],
    vectors: &[[f64; 2]],
    options: &FieldOptions,
) -> Result<FittedField> {
    if points.len() != vectors.len() {
        return Err(Error::InvalidInput(format!(
            "{} points but {} vectors",
            points.len(),
            vectors.len()
        )));
    }
    if vectors.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite perturbation vector".into()));
    }
    if !(options.reg_weight > 0.0) {
        return Err(Error::Config("reg_weight must be positive".into()));
    }
    let bounds = match options.bounds {
        Some(b) => b,
        None => Bounds::around(points)?,
    };
    let side = options.resolution + 1;
    let mut grid = ScalarGrid::new(options.resolution, bounds, vec![0.0; side * side])?;
    let mut warnings = Vec::new();
    if vectors.iter().all(|v| v[0] == 0.0 && v[1] == 0.0) {
        let w = "all perturbation vectors are zero; the field is flat".to_string();
        log::warn!("{w}");
        warnings.push(w);
        return Ok(FittedField { grid, warnings });
    }

    let mut rows = Vec::with_capacity(2 * points.len() + 6 * side * side);
    for (k, (p, v)) in points.iter().zip(vectors).enumerate() {
        let (t, _, _) = grid.locate(*p).ok_or_else(|| {
            Error::InvalidInput(format!("point {k} at {p:?} lies outside the grid"))
        })?;
        let stencil = grid.gradient_stencil(t);
        for (a, rhs) in v.iter().enumerate() {
            rows.push(SparseRow {
                entries: stencil.iter().map(|&(i, c)| (i, c[a])).collect(),
                rhs: *rhs,
                weight: 1.0,
            });
        }
    }
    for (t1, t2) in grid.adjacent_triangles() {
        let (s1, s2) = (grid.gradient_stencil(t1), grid.gradient_stencil(t2));
        for a in 0..2 {
            let mut entries: Vec<(usize, f64)> = s1.iter().map(|&(i, c)| (i, c[a])).collect();
            entries.extend(s2.iter().map(|&(i, c)| (i, -c[a])));
            rows.push(SparseRow {
                entries,
                rhs: 0.0,
                weight: options.reg_weight,
            });
        }
    }

    let dim = side * side;
    let mut diag_mean = 0.0;
    for r in &rows {
        for &(_, c) in &r.entries {
            diag_mean += r.weight * c * c;
        }
    }
    diag_mean /= dim as f64;
    let gauge = diag_mean / dim as f64;
    let op = FnOracle::new(dim, |x: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        for r in &rows {
            let s: f64 = r.entries.iter().map(|&(i, c)| c * x[i]).sum();
            for &(i, c) in &r.entries {
                out[i] += r.weight * c * s;
            }
        }
        let total: f64 = x.iter().sum();
        out.iter_mut().for_each(|o| *o += gauge * total);
    });
    let mut b = vec![0.0; dim];
    for r in &rows {
        for &(i, c) in &r.entries {
            b[i] += r.weight * c * r.rhs;
        }
    }
    let cg = CgOptions {
        tol: 1e-13,
        max_iter: Some(20 * dim),
        op_norm: None,
    };
    let mut values = conjugate_gradients(&op, &b, &cg).map_err(|e| match e {
        Error::NoConvergence { .. } => Error::SingularSystem {
            routine: "fit_scalar_field",
        },
        other => other,
    })?;
    let mean = values.iter().sum::<f64>() / dim as f64;
    values.iter_mut().for_each(|v| *v -= mean);
    grid.values = values;
    Ok(FittedField { grid, warnings })
}
