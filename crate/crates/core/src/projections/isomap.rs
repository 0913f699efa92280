//! Isomap: classical MDS of graph geodesic distances.

use super::graph::{component_sizes, knn_indices, union_adjacency, WeightedGraph};
use super::{DataMatrix, ProjectionConfig, ProjectionOutcome};
use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::linalg::{classical_mds, DenseMatrix, EigenOptions};

/// Geodesic distance matrix over the union kNN graph.
pub fn geodesic_distances<S: Scalar>(data: &DataMatrix<S>, k: usize) -> Result<DenseMatrix<S>> {
    let adjacency = union_adjacency(&knn_indices(data, k));
    let sizes = component_sizes(&adjacency);
    if sizes.len() > 1 {
        return Err(Error::DisconnectedGraph {
            component_sizes: sizes,
        });
    }
    WeightedGraph::neighbourhood(data, &adjacency)
        .all_pairs()
        .ok_or(Error::DisconnectedGraph {
            component_sizes: sizes,
        })
}

pub fn isomap_project<S: Scalar>(
    data: &DataMatrix<S>,
    config: &ProjectionConfig,
) -> Result<ProjectionOutcome<S>> {
    config.validate(data.n())?;
    let geodesics = geodesic_distances(data, config.k_neighbors)?;
    let opts = EigenOptions {
        seed: config.seed,
        ..EigenOptions::default()
    };
    let mds = classical_mds(&geodesics, 2, &opts)?;
    let coords = mds.coords.iter().map(|c| [c[0], c[1]]).collect();
    Ok(ProjectionOutcome {
        coords,
        warnings: mds.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Dual;
    use crate::projections::Method;

    fn config(k: usize) -> ProjectionConfig {
        ProjectionConfig {
            k_neighbors: k,
            ..ProjectionConfig::with_method(Method::Isomap)
        }
    }

    #[test]
    fn line_matches_euclidean_mds() {
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let t = i as f64 * 0.7 + (i * i) as f64 * 0.05;
                vec![t, 2.0 * t, -t]
            })
            .collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let geo = geodesic_distances(&data, 2).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let e = data.distance(i, j);
                assert!((geo.get(i, j) - e).abs() < 1e-12 * e.max(1.0));
            }
        }
    }

    #[test]
    fn disconnected_graph_is_reported() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![0.0, 0.1],
            vec![10.0, 10.0],
            vec![10.1, 10.0],
            vec![10.0, 10.1],
        ];
        let data = DataMatrix::from_rows(&rows).unwrap();
        match isomap_project(&data, &config(2)) {
            Err(Error::DisconnectedGraph { component_sizes }) => {
                assert_eq!(component_sizes, vec![3, 3])
            }
            other => panic!("expected DisconnectedGraph, got {other:?}"),
        }
    }

    #[test]
    fn zero_seed_dual_matches_plain_bitwise() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let t = i as f64 * 0.5;
                vec![t.cos(), t.sin(), 0.1 * t]
            })
            .collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let plain = isomap_project(&data, &config(3)).unwrap();
        let dual = isomap_project(&data.lifted::<Dual>(), &config(3)).unwrap();
        assert_eq!(plain.positions(), dual.positions());
        assert!(dual.derivatives().iter().all(|d| *d == [0.0, 0.0]));
    }
}
