//! Perturbations that move the projection the most.
//!
//! The tangent map `M` is block diagonal with one `2 × d` block `B_i` per
//! point. The global problem looks for one shared unit direction `u`
//! maximising `Σ‖B_i u‖²`, the top eigenvector of `Σ B_iᵀB_i`. The per-point
//! problem lets every point move differently but penalises nearby points
//! (in the plot) that disagree, through the expanded Laplacian `L_s` built
//! from `S(i,j) = exp(−‖p_i − p_j‖²/σ²)`: the top eigenvector of
//! `MᵀM − λL_s`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::{extract, ExtractionMode, PerturbationField};
use crate::linalg::{
    dense_symmetric_eigen, fix_sign, power_iteration, substream_seed, DenseMatrix, EigenOptions,
    MatVecOracle,
};
use crate::parallel;
use crate::projections::{DataMatrix, DualProjector};

/// Largest `n·d` solved by dense eigendecomposition in per-point mode.
pub const DENSE_LIMIT: usize = 2000;
pub const DEFAULT_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentMap {
    pub n: usize,
    pub d: usize,
    /// Block `i` row-major: entry `(r, c)` at `blocks[i][r·d + c]`.
    pub blocks: Vec<Vec<f64>>,
    /// Projection runs spent building the map.
    pub runs: usize,
}

impl TangentMap {
    pub fn from_blocks(d: usize, blocks: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 || blocks.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if blocks.iter().any(|b| b.len() != 2 * d) {
            return Err(Error::InvalidInput(format!("every block must be 2x{d}")));
        }
        if blocks.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite tangent map entry".into()));
        }
        Ok(Self {
            n: blocks.len(),
            d,
            blocks,
            runs: 0,
        })
    }

    #[inline]
    pub fn entry(&self, i: usize, r: usize, c: usize) -> f64 {
        self.blocks[i][r * self.d + c]
    }

    /// `B_i u`.
    pub fn apply_block(&self, i: usize, u: &[f64]) -> [f64; 2] {
        let b = &self.blocks[i];
        let d = self.d;
        let mut out = [0.0; 2];
        for c in 0..d {
            out[0] += b[c] * u[c];
            out[1] += b[d + c] * u[c];
        }
        out
    }

    /// `Σ_i ‖B_i u‖²`.
    pub fn global_objective(&self, u: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                let v = self.apply_block(i, u);
                v[0] * v[0] + v[1] * v[1]
            })
            .sum()
    }

    /// `Σ_i B_iᵀB_i`.
    pub fn gram(&self) -> DenseMatrix<f64> {
        let d = self.d;
        let mut g = DenseMatrix::zeros(d, d);
        for b in &self.blocks {
            for a in 0..d {
                for c in 0..d {
                    let v = g.get(a, c) + b[a] * b[c] + b[d + a] * b[d + c];
                    g.set(a, c, v);
                }
            }
        }
        g
    }
}

/// Column `j` of every block is the extraction result for coordinate axis `j`.
pub fn build_tangent_map<P>(
    data: &DataMatrix<f64>,
    projector: &P,
    mode: ExtractionMode,
    seed: u64,
) -> Result<TangentMap>
where
    P: DualProjector + ?Sized,
{
    let (n, d) = (data.n(), data.d());
    let mut blocks = vec![vec![0.0; 2 * d]; n];
    let mut runs = 0;
    for j in 0..d {
        let field = PerturbationField::axis(n, d, j)?;
        let out = extract(
            data,
            projector,
            &field,
            mode,
            substream_seed(seed, j as u64),
        )?;
        runs += out.runs;
        for (b, v) in blocks.iter_mut().zip(&out.vectors) {
            b[j] = v[0];
            b[d + j] = v[1];
        }
    }
    Ok(TangentMap { n, d, blocks, runs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscoveryMode {
    Global,
    PerPoint,
}

impl DiscoveryMode {
    pub fn name(self) -> &'static str {
        match self {
            DiscoveryMode::Global => "global",
            DiscoveryMode::PerPoint => "per-point",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryResult {
    /// `n × d`, unit Frobenius norm in per-point mode; identical unit rows
    /// in global mode.
    pub perturbation: Vec<Vec<f64>>,
    pub objective: f64,
    pub mode: DiscoveryMode,
    pub lambda_smooth: f64,
    pub sigma: f64,
    pub warnings: Vec<String>,
}

fn eigen_options(seed: u64) -> EigenOptions {
    EigenOptions {
        tol: 1e-12,
        seed,
        ..EigenOptions::default()
    }
}

/// The single direction that moves the projection the most.
pub fn discover_global(map: &TangentMap, seed: u64) -> Result<DiscoveryResult> {
    if map.blocks.iter().flatten().all(|&v| v == 0.0) {
        return Err(Error::InvalidInput("tangent map is zero".into()));
    }
    let gram = map.gram();
    let pair = power_iteration(&gram, &eigen_options(seed))?;
    let mut u = pair.vector;
    fix_sign(&mut u);
    Ok(DiscoveryResult {
        perturbation: vec![u; map.n],
        objective: pair.value,
        mode: DiscoveryMode::Global,
        lambda_smooth: 0.0,
        sigma: 0.0,
        warnings: Vec::new(),
    })
}

/// Half the median pairwise distance between projected points.
pub fn default_sigma(coords: &[[f64; 2]]) -> f64 {
    let mut d: Vec<f64> = Vec::with_capacity(coords.len() * coords.len() / 2);
    for i in 0..coords.len() {
        for j in 0..i {
            d.push((coords[i][0] - coords[j][0]).hypot(coords[i][1] - coords[j][1]));
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len() / 2;
    let median = if d.len().is_multiple_of(2) {
        0.5 * (d[m - 1] + d[m])
    } else {
        d[m]
    };
    if median > 0.0 {
        0.5 * median
    } else {
        1.0
    }
}

/// `(MᵀM − λL_s + c·I) v` computed point by point; similarities are
/// evaluated on the fly.
pub struct PerPointOperator<'a> {
    map: &'a TangentMap,
    coords: &'a [[f64; 2]],
    lambda: f64,
    inv_sigma2: f64,
    shift: f64,
}

impl<'a> PerPointOperator<'a> {
    pub fn new(map: &'a TangentMap, coords: &'a [[f64; 2]], lambda: f64, sigma: f64) -> Self {
        let mut op = Self {
            map,
            coords,
            lambda,
            inv_sigma2: 1.0 / (sigma * sigma),
            shift: 0.0,
        };
        // Gershgorin: the spectrum of L_s lies in [0, 2·max degree]
        let max_degree = (0..map.n).map(|i| op.degree(i)).fold(0.0, f64::max);
        op.shift = lambda * 2.0 * max_degree;
        op
    }

    #[inline]
    pub fn similarity(&self, i: usize, j: usize) -> f64 {
        let dx = self.coords[i][0] - self.coords[j][0];
        let dy = self.coords[i][1] - self.coords[j][1];
        (-(dx * dx + dy * dy) * self.inv_sigma2).exp()
    }

    fn degree(&self, i: usize) -> f64 {
        (0..self.map.n)
            .filter(|&j| j != i)
            .map(|j| self.similarity(i, j))
            .sum()
    }

    /// Constant added to make the operator positive semidefinite.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    fn row_block(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let d = self.map.d;
        let xi = &x[i * d..(i + 1) * d];
        let b = &self.map.blocks[i];
        let bx = self.map.apply_block(i, xi);
        let mut out: Vec<f64> = (0..d)
            .map(|c| b[c] * bx[0] + b[d + c] * bx[1] + self.shift * xi[c])
            .collect();
        if self.lambda != 0.0 {
            for j in 0..self.map.n {
                if j == i {
                    continue;
                }
                let s = self.lambda * self.similarity(i, j);
                let xj = &x[j * d..(j + 1) * d];
                for c in 0..d {
                    out[c] -= s * (xi[c] - xj[c]);
                }
            }
        }
        out
    }
}

impl MatVecOracle<f64> for PerPointOperator<'_> {
    fn dim(&self) -> usize {
        self.map.n * self.map.d
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let d = self.map.d;
        let rows: Vec<Vec<f64>> = (0..self.map.n)
            .into_par_iter()
            .map(|i| self.row_block(i, x))
            .collect();
        for (i, r) in rows.into_iter().enumerate() {
            out[i * d..(i + 1) * d].copy_from_slice(&r);
        }
    }
}

/// Explicit `(n·d) × (n·d)` matrix `MᵀM − λL_s`.
pub fn assemble_per_point_matrix(
    map: &TangentMap,
    coords: &[[f64; 2]],
    lambda: f64,
    sigma: f64,
) -> DenseMatrix<f64> {
    let (n, d) = (map.n, map.d);
    let op = PerPointOperator::new(map, coords, lambda, sigma);
    let mut m = DenseMatrix::zeros(n * d, n * d);
    for i in 0..n {
        let b = &map.blocks[i];
        for a in 0..d {
            for c in 0..d {
                m.set(i * d + a, i * d + c, b[a] * b[c] + b[d + a] * b[d + c]);
            }
        }
        for j in 0..n {
            if j == i {
                continue;
            }
            let s = lambda * op.similarity(i, j);
            for c in 0..d {
                let (r, q) = (i * d + c, j * d + c);
                m.set(r, r, m.get(r, r) - s);
                m.set(r, q, m.get(r, q) + s);
            }
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerPointSolver {
    /// Dense when `n·d ≤ DENSE_LIMIT`, matrix-free otherwise.
    #[default]
    Auto,
    Dense,
    MatrixFree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerPointOptions {
    pub lambda: f64,
    /// Defaults to half the median projected distance.
    pub sigma: Option<f64>,
    pub solver: PerPointSolver,
    pub seed: u64,
}

impl Default for PerPointOptions {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            sigma: None,
            solver: PerPointSolver::Auto,
            seed: 0,
        }
    }
}

/// Per-point directions, smoothed across nearby projected points.
pub fn discover_per_point(
    map: &TangentMap,
    coords: &[[f64; 2]],
    options: &PerPointOptions,
) -> Result<DiscoveryResult> {
    if coords.len() != map.n {
        return Err(Error::InvalidInput(format!(
            "{} projected points for a tangent map of {} points",
            coords.len(),
            map.n
        )));
    }
    let lambda = options.lambda;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    let sigma = options.sigma.unwrap_or_else(|| default_sigma(coords));
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Config(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let (n, d) = (map.n, map.d);
    let dense = match options.solver {
        PerPointSolver::Auto => n * d <= DENSE_LIMIT,
        PerPointSolver::Dense => true,
        PerPointSolver::MatrixFree => false,
    };
    let (objective, mut v) = if dense {
        let m = assemble_per_point_matrix(map, coords, lambda, sigma);
        let (values, mut vectors) = dense_symmetric_eigen(&m);
        (values[0], vectors.swap_remove(0))
    } else {
        let op = PerPointOperator::new(map, coords, lambda, sigma);
        let pair = parallel::install(|| power_iteration(&op, &eigen_options(options.seed)))?;
        (pair.value - op.shift(), pair.vector)
    };
    fix_sign(&mut v);
    let perturbation: Vec<Vec<f64>> = v.chunks(d).map(<[f64]>::to_vec).collect();
    let warnings = per_point_warnings(&perturbation, objective);
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(DiscoveryResult {
        perturbation,
        objective,
        mode: DiscoveryMode::PerPoint,
        lambda_smooth: lambda,
        sigma,
        warnings,
    })
}

fn per_point_warnings(rows: &[Vec<f64>], objective: f64) -> Vec<String> {
    let mut warnings = Vec::new();
    if objective < 0.0 {
        warnings.push(format!(
            "top eigenvalue {objective:e} is negative: smoothing dominates, lambda is likely too large"
        ));
    }
    let norms: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut sorted = norms.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let max = sorted[sorted.len() - 1];
    if max > 10.0 * median {
        warnings.push(format!(
            "one point dominates the perturbation (row norm {max:.3e} vs median {median:.3e}): lambda is likely too small"
        ));
    }
    let smooth = rows.len() > 1
        && (0..rows.len()).all(|i| {
            (0..i).all(|j| {
                let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                norms[i] > 0.0 && norms[j] > 0.0 && dot / (norms[i] * norms[j]) > 0.999
            })
        });
    if smooth {
        warnings.push(
            "all points share one direction (row cosines above 0.999): lambda is likely too large"
                .into(),
        );
    }
    warnings
}

/// Per-dimension magnitude maps for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    /// `maps[j][i] = |perturbation[i][j]|`, scaled so each map peaks at 1.
    pub maps: Vec<Vec<f64>>,
    /// `Σ_i |perturbation[i][j]|` before scaling.
    pub totals: Vec<f64>,
    pub dominant_dimension: usize,
}

pub fn perturbation_report(result: &DiscoveryResult) -> PerturbationReport {
    let d = result.perturbation.first().map_or(0, Vec::len);
    let mut maps = vec![vec![0.0; result.perturbation.len()]; d];
    for (i, row) in result.perturbation.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            maps[j][i] = v.abs();
        }
    }
    let totals: Vec<f64> = maps.iter().map(|m| m.iter().sum()).collect();
    for m in &mut maps {
        let peak = m.iter().copied().fold(0.0, f64::max);
        if peak > 0.0 {
            m.iter_mut().for_each(|v| *v /= peak);
        }
    }
    let dominant_dimension = totals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (j, &t)| {
            if t > best.1 {
                (j, t)
            } else {
                best
            }
        })
        .0;
    PerturbationReport {
        maps,
        totals,
        dominant_dimension,
    }
}

/// One perturbation row laid out as an image of the given width.
pub fn reshape_row(row: &[f64], width: usize) -> Result<Vec<Vec<f64>>> {
    if width == 0 || !row.len().is_multiple_of(width) {
        return Err(Error::InvalidInput(format!(
            "a row of {} values is not an image of width {width}",
            row.len()
        )));
    }
    Ok(row.chunks(width).map(<[f64]>::to_vec).collect())
}
