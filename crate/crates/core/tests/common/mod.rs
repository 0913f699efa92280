//! Independent reference implementations used as test oracles. None of
//! them calls into the library's numerical code.

#![allow(dead_code)]

use std::path::PathBuf;

use dimreader::io::{load_dataset, Dataset, DatasetFormat};
use dimreader::Scalar;
use rand::Rng;

pub fn iris() -> Dataset {
    // also included by the validation crate, a sibling of core
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/iris.csv");
    load_dataset(&path, DatasetFormat::Csv, Some("species")).expect("iris.csv")
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues
/// descending; `vectors[k]` is the unit eigenvector for `values[k]`.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    let total: f64 = a.iter().flatten().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off <= 1e-32 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (a[p][k], a[q][k]);
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
                for row in v.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let values = order.iter().map(|&k| a[k][k]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i][k]).collect())
        .collect();
    (values, vectors)
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        assert!(m[col][col].abs() > 1e-300, "singular system");
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..=n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x
}

/// All-pairs shortest paths over undirected weighted edges; `INFINITY` for
/// unreachable pairs.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, w) in edges {
        d[a][b] = d[a][b].min(w);
        d[b][a] = d[b][a].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Frobenius residual of the best rigid (rotation or reflection plus
/// translation) alignment of `y` onto `x`, both `n × 2`.
pub fn procrustes_residual(x: &[[f64; 2]], y: &[[f64; 2]]) -> f64 {
    let centre = |p: &[[f64; 2]]| {
        let n = p.len() as f64;
        let m = p
            .iter()
            .fold([0.0, 0.0], |a, q| [a[0] + q[0] / n, a[1] + q[1] / n]);
        p.iter()
            .map(|q| [q[0] - m[0], q[1] - m[1]])
            .collect::<Vec<_>>()
    };
    let xc = centre(x);
    let best = |yc: &[[f64; 2]]| {
        let (mut a, mut b) = (0.0, 0.0);
        for (p, q) in xc.iter().zip(yc) {
            a += p[0] * q[0] + p[1] * q[1];
            b += p[1] * q[0] - p[0] * q[1];
        }
        let (s, c) = b.atan2(a).sin_cos();
        xc.iter()
            .zip(yc)
            .map(|(p, q)| {
                let r = [c * q[0] - s * q[1], s * q[0] + c * q[1]];
                (p[0] - r[0]).powi(2) + (p[1] - r[1]).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    };
    let yc = centre(y);
    let flipped: Vec<[f64; 2]> = yc.iter().map(|q| [q[0], -q[1]]).collect();
    best(&yc).min(best(&flipped))
}

pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    cov / (va * vb).sqrt()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

/// `|a − b| / max(|b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

pub fn vec_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

/// Random symmetric matrix with prescribed, well separated eigenvalues.
pub fn symmetric_with_spectrum(values: &[f64], rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = values.len();
    // Gram-Schmidt on random columns gives a random orthogonal basis
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for u in &q {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len > 1e-6 {
            q.push(v.into_iter().map(|a| a / len).collect());
        }
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| values[k] * q[k][i] * q[k][j]).sum())
                .collect()
        })
        .collect()
}

/// Small expression language for derivative checks.
#[derive(Debug, Clone)]
pub enum Expr {
    X,
    Const(f64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// `a / (1 + b²)`
    DivSoft(Box<Expr>, Box<Expr>),
    /// `exp(−a²)`
    Bump(Box<Expr>),
    /// `ln(1 + a²)`
    LogSoft(Box<Expr>),
    /// `sqrt(1 + a²)`
    SqrtSoft(Box<Expr>),
    Square(Box<Expr>),
    /// `(1 + a²)^p`
    PowSoft(Box<Expr>, f64),
}

impl Expr {
    pub fn random(rng: &mut impl Rng, depth: u32) -> Expr {
        if depth == 0 || rng.gen_bool(0.2) {
            return if rng.gen_bool(0.7) {
                Expr::X
            } else {
                Expr::Const(rng.gen_range(-2.0..2.0))
            };
        }
        let mut sub = || Box::new(Expr::random(rng, depth - 1));
        let (a, b) = (sub(), sub());
        match rng.gen_range(0..9) {
            0 => Expr::Add(a, b),
            1 => Expr::Sub(a, b),
            2 => Expr::Mul(a, b),
            3 => Expr::DivSoft(a, b),
            4 => Expr::Bump(a),
            5 => Expr::LogSoft(a),
            6 => Expr::SqrtSoft(a),
            7 => Expr::Square(a),
            _ => Expr::PowSoft(a, rng.gen_range(-1.5..1.5)),
        }
    }

    pub fn eval<S: Scalar>(&self, x: S) -> S {
        let soft = |a: S| S::one() + a * a;
        match self {
            Expr::X => x,
            Expr::Const(c) => S::from_f64(*c),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::DivSoft(a, b) => a.eval(x) / soft(b.eval(x)),
            Expr::Bump(a) => {
                let v = a.eval(x);
                (-(v * v)).exp()
            }
            Expr::LogSoft(a) => soft(a.eval(x)).ln(),
            Expr::SqrtSoft(a) => soft(a.eval(x)).sqrt(),
            Expr::Square(a) => a.eval(x).powi(2),
            Expr::PowSoft(a, p) => soft(a.eval(x)).powf(*p),
        }
    }
}

/// A straight isoline piece tagged with its level.
pub type Segment = (f64, [f64; 2], [f64; 2]);

/// Straight segments of every isoline.
pub fn isoline_segments(set: &dimreader::field::IsolineSet) -> Vec<Segment> {
    set.isolines
        .iter()
        .flat_map(|l| l.polyline.windows(2).map(move |w| (l.level, w[0], w[1])))
        .collect()
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Whether two segments cross at a point interior to both.
pub fn segments_cross(p: [f64; 2], q: [f64; 2], r: [f64; 2], s: [f64; 2]) -> bool {
    let d1 = orient(p, q, r);
    let d2 = orient(p, q, s);
    let d3 = orient(r, s, p);
    let d4 = orient(r, s, q);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}
