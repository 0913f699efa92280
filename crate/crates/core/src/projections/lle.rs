//! Locally linear embedding.

use super::graph::{component_sizes, knn_indices, union_adjacency};
use super::{DataMatrix, ProjectionConfig, ProjectionOutcome};
use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::linalg::{
    conjugate_gradients, smallest_nonzero_eigenpairs, CgOptions, DenseMatrix, EigenOptions,
    InverseIterationOptions, MatVecOracle,
};

/// Sparse reconstruction weights: row `i` lists `(j, w_ij)` over the
/// neighbours of `i`, summing to one.
#[derive(Debug, Clone)]
pub struct ReconstructionWeights<S> {
    pub rows: Vec<Vec<(usize, S)>>,
}

/// Weights that best rebuild every point from its `k` nearest neighbours,
/// with the local Gram matrix regularised by `δ·trace(G)/k` on the diagonal.
pub fn reconstruction_weights<S: Scalar>(
    data: &DataMatrix<S>,
    knn: &[Vec<usize>],
    delta: f64,
) -> Result<ReconstructionWeights<S>> {
    let d = data.d();
    let rows = knn
        .iter()
        .enumerate()
        .map(|(i, nbrs)| {
            let k = nbrs.len();
            let xi = data.row(i);
            let z: Vec<Vec<S>> = nbrs
                .iter()
                .map(|&j| (0..d).map(|c| data.get(j, c) - xi[c]).collect())
                .collect();
            let mut gram = DenseMatrix::from_fn(k, k, |a, b| {
                z[a].iter()
                    .zip(&z[b])
                    .fold(S::zero(), |acc, (x, y)| acc + *x * *y)
            });
            let trace = (0..k).fold(S::zero(), |acc, a| acc + gram.get(a, a));
            let reg = if trace.value() > 0.0 {
                trace * (delta / k as f64)
            } else {
                S::from_f64(delta)
            };
            for a in 0..k {
                gram.set(a, a, gram.get(a, a) + reg);
            }
            let ones = vec![S::one(); k];
            let w = conjugate_gradients(&gram, &ones, &CgOptions::default())
                .map_err(|e| lift_singular(e).at_point(i))?;
            let total = w.iter().fold(S::zero(), |acc, v| acc + *v);
            if total.value() == 0.0 {
                return Err(Error::SingularSystem {
                    routine: "lle_weights",
                }
                .at_point(i));
            }
            Ok(nbrs.iter().zip(w).map(|(&j, wj)| (j, wj / total)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReconstructionWeights { rows })
}

fn lift_singular(e: Error) -> Error {
    match e {
        Error::NoConvergence { .. } => Error::SingularSystem {
            routine: "lle_weights",
        },
        other => other,
    }
}

/// `(I − W)ᵀ(I − W)` applied without forming it.
pub struct LleOperator<'a, S> {
    weights: &'a ReconstructionWeights<S>,
}

impl<'a, S> LleOperator<'a, S> {
    pub fn new(weights: &'a ReconstructionWeights<S>) -> Self {
        Self { weights }
    }
}

impl<S: Scalar> MatVecOracle<S> for LleOperator<'_, S> {
    fn dim(&self) -> usize {
        self.weights.rows.len()
    }

    fn apply(&self, x: &[S], out: &mut [S]) {
        let rows = &self.weights.rows;
        let residual: Vec<S> = rows
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().fold(x[i], |acc, &(j, w)| acc - w * x[j]))
            .collect();
        out.copy_from_slice(&residual);
        for (i, row) in rows.iter().enumerate() {
            for &(j, w) in row {
                out[j] -= w * residual[i];
            }
        }
    }
}

pub fn lle_project<S: Scalar>(
    data: &DataMatrix<S>,
    config: &ProjectionConfig,
) -> Result<ProjectionOutcome<S>> {
    config.validate(data.n())?;
    let n = data.n();
    let knn = knn_indices(data, config.k_neighbors);
    let sizes = component_sizes(&union_adjacency(&knn));
    if sizes.len() > 1 {
        return Err(Error::DisconnectedGraph {
            component_sizes: sizes,
        });
    }
    let weights = reconstruction_weights(data, &knn, config.lle_regularization)?;
    let op = LleOperator::new(&weights);
    let opts = InverseIterationOptions {
        eigen: EigenOptions {
            seed: config.seed,
            ..EigenOptions::default()
        },
        null_basis: vec![vec![1.0; n]],
        ..InverseIterationOptions::default()
    };
    let pairs = smallest_nonzero_eigenpairs(&op, 2, 1, &opts)?;
    let scale = (n as f64).sqrt();
    let coords = (0..n)
        .map(|i| [pairs[0].vector[i] * scale, pairs[1].vector[i] * scale])
        .collect();
    Ok(ProjectionOutcome::new(coords))
}
