//! Projection methods written once over [`Scalar`].
//!
//! Each method runs unmodified over plain reals (the plot) and over duals
//! (the plot and its derivative with respect to the seeded perturbation).
//! Discrete choices such as neighbourhoods and path selection are made on
//! the value channel only.

pub mod graph;
pub mod isomap;
pub mod lle;
pub mod pca;
pub mod tsne;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Dual, Scalar};
use crate::error::{Error, Result};

pub use isomap::isomap_project;
pub use lle::lle_project;
pub use pca::{pca_project, PcaModel};
pub use tsne::{tsne_converge, tsne_dual_replay, tsne_rerun, TsneFixedPoint};

/// `n` points in `d` dimensions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix<S> {
    n: usize,
    d: usize,
    values: Vec<S>,
}

impl<S: Scalar> DataMatrix<S> {
    pub fn new(n: usize, d: usize, values: Vec<S>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::EmptyDataset);
        }
        if values.len() != n * d {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {n}x{d} matrix, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("ragged data rows".into()));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.values[i * self.d + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.values.chunks(self.d)
    }

    pub fn value_matrix(&self) -> DataMatrix<f64> {
        DataMatrix {
            n: self.n,
            d: self.d,
            values: self.values.iter().map(|v| v.value()).collect(),
        }
    }

    pub(crate) fn squared_distance(&self, i: usize, j: usize) -> S {
        let mut acc = S::zero();
        for (a, b) in self.row(i).iter().zip(self.row(j)) {
            let diff = *a - *b;
            acc += diff * diff;
        }
        acc
    }

    /// Euclidean distance; coincident points get distance zero with zero
    /// derivative rather than an unbounded one.
    pub(crate) fn distance(&self, i: usize, j: usize) -> S {
        let sq = self.squared_distance(i, j);
        if sq.value() == 0.0 {
            S::zero()
        } else {
            sq.sqrt()
        }
    }
}

impl DataMatrix<f64> {
    /// Dual copy of the data whose derivative channel is `directions[i]` for
    /// every row with `active[i]` set and zero elsewhere.
    pub fn seeded(&self, directions: &[Vec<f64>], active: &[bool]) -> DataMatrix<Dual> {
        debug_assert_eq!(directions.len(), self.n);
        debug_assert_eq!(active.len(), self.n);
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.n {
            for j in 0..self.d {
                let deriv = if active[i] { directions[i][j] } else { 0.0 };
                values.push(Dual::new(self.get(i, j), deriv));
            }
        }
        DataMatrix {
            n: self.n,
            d: self.d,
            values,
        }
    }

    pub fn lifted<S: Scalar>(&self) -> DataMatrix<S> {
        DataMatrix {
            n: self.n,
            d: self.d,
            values: self.values.iter().map(|&v| S::from_f64(v)).collect(),
        }
    }

    /// Copy with entry `(i, j)` shifted by `delta`.
    pub fn nudged(&self, i: usize, j: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.values[i * self.d + j] += delta;
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Isomap,
    Lle,
    Tsne,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pca" => Ok(Method::Pca),
            "isomap" => Ok(Method::Isomap),
            "lle" => Ok(Method::Lle),
            "tsne" | "t-sne" => Ok(Method::Tsne),
            other => Err(Error::Config(format!(
                "unknown projection method {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionConfig {
    pub method: Method,
    /// Neighbourhood size for Isomap and LLE.
    pub k_neighbors: usize,
    pub perplexity: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Gradient-norm threshold that ends the t-SNE descent loop.
    pub grad_tol: f64,
    /// LLE Gram regulariser, added as `δ·trace(G)/k` to the diagonal.
    pub lle_regularization: f64,
    pub seed: u64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            method: Method::Tsne,
            k_neighbors: 8,
            perplexity: 30.0,
            learning_rate: 100.0,
            max_iters: 100_000,
            grad_tol: 1e-4,
            lle_regularization: 1e-3,
            seed: 0,
        }
    }
}

impl ProjectionConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 3 {
            return Err(Error::InvalidInput(format!(
                "projections need at least 3 points, got {n}"
            )));
        }
        match self.method {
            Method::Isomap | Method::Lle => {
                if self.k_neighbors == 0 || self.k_neighbors >= n {
                    return Err(Error::Config(format!(
                        "k_neighbors must be in 1..{n}, got {}",
                        self.k_neighbors
                    )));
                }
            }
            Method::Tsne => {
                let limit = (n as f64 - 1.0) / 3.0;
                if !(self.perplexity > 0.0 && self.perplexity < limit) {
                    return Err(Error::Config(format!(
                        "perplexity must be in (0, {limit}), got {}",
                        self.perplexity
                    )));
                }
                if !(self.learning_rate > 0.0 && self.grad_tol > 0.0) || self.max_iters == 0 {
                    return Err(Error::Config(
                        "learning_rate, grad_tol and max_iters must be positive".into(),
                    ));
                }
            }
            Method::Pca => {}
        }
        if self.method == Method::Lle && !(self.lle_regularization > 0.0) {
            return Err(Error::Config("lle_regularization must be positive".into()));
        }
        Ok(())
    }
}

/// Projected coordinates; for dual runs the derivative channel holds the
/// motion of each point under the seeded perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOutcome<S> {
    pub coords: Vec<[S; 2]>,
    pub warnings: Vec<String>,
}

impl<S: Scalar> ProjectionOutcome<S> {
    pub fn new(coords: Vec<[S; 2]>) -> Self {
        Self {
            coords,
            warnings: Vec::new(),
        }
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.coords
            .iter()
            .map(|c| [c[0].value(), c[1].value()])
            .collect()
    }

    pub fn derivatives(&self) -> Vec<[f64; 2]> {
        self.coords
            .iter()
            .map(|c| [c[0].deriv(), c[1].deriv()])
            .collect()
    }
}

/// A projection with everything that must stay fixed across dual runs
/// captured from the unperturbed data: PCA's affine map or t-SNE's fixed
/// point. Isomap and LLE are recomputed from scratch on every run.
#[derive(Debug, Clone)]
pub enum PreparedProjection {
    Pca(PcaModel),
    Isomap(ProjectionConfig),
    Lle(ProjectionConfig),
    Tsne(Box<TsneFixedPoint>),
}

impl PreparedProjection {
    pub fn prepare(data: &DataMatrix<f64>, config: &ProjectionConfig) -> Result<Self> {
        config.validate(data.n())?;
        Ok(match config.method {
            Method::Pca => PreparedProjection::Pca(PcaModel::fit(data, 2)?),
            Method::Isomap => PreparedProjection::Isomap(config.clone()),
            Method::Lle => PreparedProjection::Lle(config.clone()),
            Method::Tsne => PreparedProjection::Tsne(Box::new(tsne_converge(data, config)?)),
        })
    }

    pub fn method(&self) -> Method {
        match self {
            PreparedProjection::Pca(_) => Method::Pca,
            PreparedProjection::Isomap(_) => Method::Isomap,
            PreparedProjection::Lle(_) => Method::Lle,
            PreparedProjection::Tsne(_) => Method::Tsne,
        }
    }

    pub fn project<S: Scalar>(&self, data: &DataMatrix<S>) -> Result<ProjectionOutcome<S>> {
        match self {
            PreparedProjection::Pca(model) => Ok(model.project(data)),
            PreparedProjection::Isomap(cfg) => isomap_project(data, cfg),
            PreparedProjection::Lle(cfg) => lle_project(data, cfg),
            PreparedProjection::Tsne(fixed) => tsne_dual_replay(data, fixed),
        }
    }

    /// The static plot: PCA and manifold methods rerun on the plain data,
    /// t-SNE reports its captured fixed point.
    pub fn base_positions(&self, data: &DataMatrix<f64>) -> Result<Vec<[f64; 2]>> {
        match self {
            PreparedProjection::Tsne(fixed) => Ok(fixed.positions.clone()),
            _ => Ok(self.project(data)?.positions()),
        }
    }
}

/// Anything that maps dual-valued data to dual-valued 2-D coordinates.
pub trait DualProjector: Sync {
    fn project_dual(&self, data: &DataMatrix<Dual>) -> Result<Vec<[Dual; 2]>>;
}

impl DualProjector for PreparedProjection {
    fn project_dual(&self, data: &DataMatrix<Dual>) -> Result<Vec<[Dual; 2]>> {
        Ok(self.project(data)?.coords)
    }
}

impl<F> DualProjector for F
where
    F: Fn(&DataMatrix<Dual>) -> Result<Vec<[Dual; 2]>> + Sync,
{
    fn project_dual(&self, data: &DataMatrix<Dual>) -> Result<Vec<[Dual; 2]>> {
        self(data)
    }
}
