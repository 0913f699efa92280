mod common;

use common::{
    floyd_warshall, gauss_solve, jacobi_eigen, procrustes_residual, symmetric_with_spectrum,
    vec_rel_err,
};
use dimreader::linalg::{
    classical_mds, conjugate_gradients, power_iteration, smallest_nonzero_eigenpairs,
    top_k_eigenpairs, CgOptions, DenseMatrix, EigenOptions, InverseIterationOptions,
};
use dimreader::projections::graph::WeightedGraph;
use dimreader::{Dual, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let neg: Vec<f64> = b.iter().map(|v| -v).collect();
    vec_rel_err(a, b).min(vec_rel_err(a, &neg))
}

/// Fixed suite: dims 2..=12, spectra with unit-order gaps.
fn suite() -> Vec<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();
    for dim in 2..=12 {
        for _ in 0..4 {
            let mut spectrum: Vec<f64> = (0..dim)
                .map(|k| 1.0 + k as f64 + rng.gen_range(0.0..0.5))
                .collect();
            spectrum.reverse();
            let m = symmetric_with_spectrum(&spectrum, &mut rng);
            out.push((spectrum, m));
        }
    }
    out
}

fn random_graph(rng: &mut ChaCha8Rng, integer: bool) -> (usize, Vec<(usize, usize, f64)>) {
    let n = rng.gen_range(2..25);
    let m = rng.gen_range(0..3 * n);
    let edges = (0..m)
        .filter_map(|_| {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let w = if integer {
                rng.gen_range(0..100) as f64
            } else {
                rng.gen_range(0.0..10.0)
            };
            (a != b).then_some((a, b, w))
        })
        .collect();
    (n, edges)
}

fn check_dijkstra(n: usize, edges: &[(usize, usize, f64)], exact: bool) {
    let g = WeightedGraph::from_edges(n, edges);
    let fw = floyd_warshall(n, edges);
    for (s, row) in fw.iter().enumerate() {
        let dj = g.dijkstra(s);
        for (t, &want) in row.iter().enumerate() {
            match dj[t] {
                None => assert!(want.is_infinite(), "{s}->{t}"),
                Some(got) if exact => assert_eq!(got, want, "{s}->{t}"),
                Some(got) => assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{s}->{t}"),
            }
        }
    }
}

#[test]
fn dijkstra_equals_floyd_warshall_on_integer_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let (n, edges) = random_graph(&mut rng, true);
        check_dijkstra(n, &edges, true);
    }
}

#[test]
fn dijkstra_matches_floyd_warshall_on_real_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let (n, edges) = random_graph(&mut rng, false);
        check_dijkstra(n, &edges, false);
    }
}

#[test]
fn all_pairs_reports_disconnection() {
    let g = WeightedGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
    assert!(g.all_pairs().is_none());
}

#[test]
fn power_iteration_matches_jacobi() {
    for (spectrum, m) in suite() {
        let (values, vectors) = jacobi_eigen(&m);
        assert!((values[0] - spectrum[0]).abs() < 1e-10);
        let a = DenseMatrix::from_rows(&m).unwrap();
        let p = power_iteration(&a, &EigenOptions::default()).unwrap();
        assert!((p.value - values[0]).abs() <= 1e-8 * values[0].abs());
        assert!(
            up_to_sign(&p.vector, &vectors[0]) <= 1e-8,
            "dim {}",
            m.len()
        );
    }
}

#[test]
fn deflation_matches_jacobi() {
    for (_, m) in suite() {
        let (values, vectors) = jacobi_eigen(&m);
        let a = DenseMatrix::from_rows(&m).unwrap();
        let k = 2.min(m.len());
        let pairs = top_k_eigenpairs(&a, k, &EigenOptions::default()).unwrap();
        for j in 0..k {
            assert!((pairs[j].value - values[j]).abs() <= 1e-8 * values[0]);
            assert!(up_to_sign(&pairs[j].vector, &vectors[j]) <= 1e-8);
        }
    }
}

#[test]
fn inverse_iteration_matches_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for dim in 3..=12 {
        // one null direction, then well separated eigenvalues
        let mut spectrum: Vec<f64> = (0..dim)
            .map(|k| k as f64 + rng.gen_range(0.0..0.3))
            .collect();
        spectrum[0] = 0.0;
        spectrum.reverse();
        let m = symmetric_with_spectrum(&spectrum, &mut rng);
        let (values, vectors) = jacobi_eigen(&m);
        let a = DenseMatrix::from_rows(&m).unwrap();
        let pairs =
            smallest_nonzero_eigenpairs(&a, 2, 1, &InverseIterationOptions::default()).unwrap();
        for j in 0..2 {
            let want = dim - 2 - j;
            assert!(
                (pairs[j].value - values[want]).abs() <= 1e-8 * values[want],
                "dim {dim}"
            );
            assert!(
                up_to_sign(&pairs[j].vector, &vectors[want]) <= 1e-8,
                "dim {dim}"
            );
        }
    }
}

/// PSD matrix with a null vector, plus a symmetric perturbation that keeps
/// the null vector.
fn null_family(dim: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let mut spectrum: Vec<f64> = (0..dim)
        .map(|k| k as f64 + rng.gen_range(0.0..0.3))
        .collect();
    spectrum[0] = 0.0;
    spectrum.reverse();
    let m = symmetric_with_spectrum(&spectrum, rng);
    let (_, vectors) = jacobi_eigen(&m);
    let q = vectors[dim - 1].clone();
    let raw: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    // P = (I − qqᵀ)(R + Rᵀ)(I − qqᵀ)
    let sym = |i: usize, j: usize| raw[i][j] + raw[j][i];
    let proj = |i: usize, j: usize| f64::from(u8::from(i == j)) - q[i] * q[j];
    let p: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    (0..dim)
                        .flat_map(|a| (0..dim).map(move |b| (a, b)))
                        .map(|(a, b)| proj(i, a) * sym(a, b) * proj(b, j))
                        .sum()
                })
                .collect()
        })
        .collect();
    (m, p, q)
}

#[test]
fn inverse_iteration_derivatives_match_jacobi_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let h = 1e-6;
    for dim in 4..=10 {
        let (m, p, q) = null_family(dim, &mut rng);
        let at = |t: f64| -> Vec<Vec<f64>> {
            m.iter()
                .zip(&p)
                .map(|(mr, pr)| mr.iter().zip(pr).map(|(a, b)| a + t * b).collect())
                .collect()
        };
        let dual = DenseMatrix::from_fn(dim, dim, |i, j| Dual::new(m[i][j], p[i][j]));
        let opts = InverseIterationOptions {
            null_basis: vec![q.clone()],
            ..InverseIterationOptions::default()
        };
        let pairs = smallest_nonzero_eigenpairs(&dual, 2, 1, &opts).unwrap();
        let (plus_values, plus_vectors) = jacobi_eigen(&at(h));
        let (minus_values, minus_vectors) = jacobi_eigen(&at(-h));
        for (j, pair) in pairs.iter().enumerate() {
            let want = dim - 2 - j;
            let dl = (plus_values[want] - minus_values[want]) / (2.0 * h);
            assert!(
                (pair.value.deriv - dl).abs() <= 1e-6 * dl.abs().max(1.0),
                "dim {dim}"
            );
            // align oracle signs with the returned vector before differencing
            let v: Vec<f64> = pair.vector.iter().map(|c| c.value).collect();
            let align = |w: &[f64]| -> Vec<f64> {
                let s = if w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
                    -1.0
                } else {
                    1.0
                };
                w.iter().map(|c| c * s).collect()
            };
            let (vp, vm) = (align(&plus_vectors[want]), align(&minus_vectors[want]));
            let fd: Vec<f64> = vp
                .iter()
                .zip(&vm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect();
            let got: Vec<f64> = pair.vector.iter().map(|c| c.deriv).collect();
            assert!(
                vec_rel_err(&got, &fd) <= 1e-6,
                "dim {dim}: {}",
                vec_rel_err(&got, &fd)
            );
        }
    }
}

#[test]
fn supplied_null_basis_is_respected() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (m, _, q) = null_family(8, &mut rng);
    let (values, vectors) = jacobi_eigen(&m);
    let a = DenseMatrix::from_rows(&m).unwrap();
    let opts = InverseIterationOptions {
        null_basis: vec![q.iter().map(|c| c * 3.0).collect()],
        ..InverseIterationOptions::default()
    };
    let pairs = smallest_nonzero_eigenpairs(&a, 2, 1, &opts).unwrap();
    for (j, pair) in pairs.iter().enumerate() {
        assert!((pair.value - values[6 - j]).abs() <= 1e-8 * values[6 - j]);
        assert!(up_to_sign(&pair.vector, &vectors[6 - j]) <= 1e-8);
        assert!(
            pair.vector
                .iter()
                .zip(&q)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .abs()
                <= 1e-12
        );
    }

    let bad = InverseIterationOptions {
        null_basis: vec![vec![0.0; 8]],
        ..InverseIterationOptions::default()
    };
    assert!(matches!(
        smallest_nonzero_eigenpairs(&a, 2, 1, &bad),
        Err(Error::InvalidInput(_))
    ));
    let wrong_count = InverseIterationOptions {
        null_basis: vec![q.clone(), q],
        ..InverseIterationOptions::default()
    };
    assert!(matches!(
        smallest_nonzero_eigenpairs(&a, 2, 1, &wrong_count),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn conjugate_gradients_carries_tangents() {
    // x(t) solves (A + tP) x = b + t c, so ẋ = A⁻¹(c − P x)
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for dim in 2..=10 {
        let spectrum: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.5..10.0)).collect();
        let m = symmetric_with_spectrum(&spectrum, &mut rng);
        let p = symmetric_with_spectrum(&spectrum, &mut rng);
        let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = gauss_solve(&m, &b);
        let rhs: Vec<f64> = (0..dim)
            .map(|i| c[i] - (0..dim).map(|j| p[i][j] * x[j]).sum::<f64>())
            .collect();
        let want = gauss_solve(&m, &rhs);
        let a = DenseMatrix::from_fn(dim, dim, |i, j| Dual::new(m[i][j], p[i][j]));
        let bd: Vec<Dual> = b.iter().zip(&c).map(|(&v, &d)| Dual::new(v, d)).collect();
        let got = conjugate_gradients(&a, &bd, &CgOptions::default()).unwrap();
        let gv: Vec<f64> = got.iter().map(|v| v.value).collect();
        let gd: Vec<f64> = got.iter().map(|v| v.deriv).collect();
        assert!(vec_rel_err(&gv, &x) <= 1e-8, "dim {dim}");
        assert!(vec_rel_err(&gd, &want) <= 1e-8, "dim {dim}");
    }
}

#[test]
fn conjugate_gradients_matches_gaussian_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for dim in 1..=12 {
        let spectrum: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.5..10.0)).collect();
        let m = symmetric_with_spectrum(&spectrum, &mut rng);
        let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let want = gauss_solve(&m, &b);
        let got = conjugate_gradients(
            &DenseMatrix::from_rows(&m).unwrap(),
            &b,
            &CgOptions::default(),
        )
        .unwrap();
        assert!(vec_rel_err(&got, &want) <= 1e-8, "dim {dim}");
    }
}

#[test]
fn classical_mds_recovers_planar_configurations() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [5, 12, 30] {
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.gen_range(-3.0..3.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let d = DenseMatrix::from_fn(n, n, |i, j| {
            (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1])
        });
        let out = classical_mds(&d, 2, &EigenOptions::default()).unwrap();
        let got: Vec<[f64; 2]> = out.coords.iter().map(|c| [c[0], c[1]]).collect();
        assert!(procrustes_residual(&pts, &got) <= 1e-6, "n {n}");
        for i in 0..n {
            for j in 0..n {
                let e = (got[i][0] - got[j][0]).hypot(got[i][1] - got[j][1]);
                assert!((e - d.get(i, j)).abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn solvers_are_deterministic() {
    let (_, m) = suite().swap_remove(30);
    let a = DenseMatrix::from_rows(&m).unwrap();
    let opts = EigenOptions {
        seed: 5,
        ..EigenOptions::default()
    };
    assert_eq!(
        power_iteration(&a, &opts).unwrap(),
        power_iteration(&a, &opts).unwrap()
    );
    let b = vec![1.0; m.len()];
    assert_eq!(
        conjugate_gradients(&a, &b, &CgOptions::default()).unwrap(),
        conjugate_gradients(&a, &b, &CgOptions::default()).unwrap()
    );
}

proptest! {
    #[test]
    fn dijkstra_agrees_on_arbitrary_graphs(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, edges) = random_graph(&mut rng, true);
        check_dijkstra(n, &edges, true);
    }

    #[test]
    fn mds_reproduces_distances(seed in any::<u64>(), n in 4usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-5.0..5.0), rng.gen_range(-2.0..2.0)]).collect();
        let d = DenseMatrix::from_fn(n, n, |i, j| (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]));
        let out = classical_mds(&d, 2, &EigenOptions::default()).unwrap();
        let got: Vec<[f64; 2]> = out.coords.iter().map(|c| [c[0], c[1]]).collect();
        prop_assert!(procrustes_residual(&pts, &got) <= 1e-6);
    }
}
