//! Principal component projection.
//!
//! The mean and the principal directions are fitted once on the value
//! channel and then held fixed, so the derivative of a projected point is
//! exactly the corresponding column of the projection matrix: the recovered
//! axes are the plot's own grid lines.

use serde::{Deserialize, Serialize};

use super::{DataMatrix, ProjectionOutcome};
use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::linalg::{dense_symmetric_eigen, DenseMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k × d`, orthonormal rows, leading variance first.
    pub components: Vec<Vec<f64>>,
    /// Variance captured by every principal direction, descending.
    pub variances: Vec<f64>,
}

impl PcaModel {
    pub fn fit<S: Scalar>(data: &DataMatrix<S>, k: usize) -> Result<Self> {
        let (n, d) = (data.n(), data.d());
        if k == 0 || k > d {
            return Err(Error::InvalidInput(format!(
                "cannot take {k} principal components of {d}-dimensional data"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidInput("PCA needs at least two points".into()));
        }
        let values = data.value_matrix();
        let mut mean = vec![0.0; d];
        for row in values.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut cov = DenseMatrix::<f64>::zeros(d, d);
        for row in values.rows() {
            for a in 0..d {
                for b in a..d {
                    let c = cov.get(a, b) + (row[a] - mean[a]) * (row[b] - mean[b]);
                    cov.set(a, b, c);
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                let c = cov.get(a, b) / (n as f64 - 1.0);
                cov.set(a, b, c);
                cov.set(b, a, c);
            }
        }
        let (variances, vectors) = dense_symmetric_eigen(&cov);
        let scale = variances[0].abs().max(1.0);
        let degenerate = (0..k).any(|c| {
            variances[c] <= 1e-12 * scale
                || (c + 1 < d && variances[c] - variances[c + 1] <= 1e-12 * scale)
        });
        if degenerate {
            return Err(Error::DegenerateCovariance {
                eigenvalues: variances,
            });
        }
        Ok(Self {
            mean,
            components: vectors.into_iter().take(k).collect(),
            variances,
        })
    }

    pub fn project<S: Scalar>(&self, data: &DataMatrix<S>) -> ProjectionOutcome<S> {
        let coords = data
            .rows()
            .map(|row| {
                let mut out = [S::zero(); 2];
                for (c, comp) in self.components.iter().take(2).enumerate() {
                    let mut acc = S::zero();
                    for ((x, m), w) in row.iter().zip(&self.mean).zip(comp) {
                        acc += (*x - *m) * *w;
                    }
                    out[c] = acc;
                }
                out
            })
            .collect();
        ProjectionOutcome::new(coords)
    }

    /// The `2 × d` linear map from input perturbations to plane motions.
    pub fn projection_matrix(&self) -> [Vec<f64>; 2] {
        [self.components[0].clone(), self.components[1].clone()]
    }
}

/// Project onto the two leading principal directions of the value channel.
pub fn pca_project<S: Scalar>(data: &DataMatrix<S>) -> Result<ProjectionOutcome<S>> {
    Ok(PcaModel::fit(data, 2)?.project(data))
}
