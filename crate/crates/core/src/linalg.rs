//! Iterative eigen- and linear solvers written over [`Scalar`].
//!
//! Everything here only needs matrix-vector products, so the same routines
//! serve dense matrices, matrix-free operators and dual-valued matrices whose
//! derivative channel carries the active perturbation. Convergence is judged
//! on the value channel and, for duals, additionally on the derivative
//! channel, so a dual run keeps iterating until its derivative has settled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Scalar;
use crate::error::{Error, Result};

/// A square linear operator given only through its action on vectors.
pub trait MatVecOracle<S: Scalar>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[S], out: &mut [S]);
}

impl<S: Scalar, T: MatVecOracle<S> + ?Sized> MatVecOracle<S> for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[S], out: &mut [S]) {
        (**self).apply(x, out)
    }
}

/// Closure-backed operator.
pub struct FnOracle<F> {
    dim: usize,
    f: F,
}

impl<F> FnOracle<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<S: Scalar, F: Fn(&[S], &mut [S]) + Sync> MatVecOracle<S> for FnOracle<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[S], out: &mut [S]) {
        (self.f)(x, out)
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                S::from_f64(values[i])
            } else {
                S::zero()
            }
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn values(&self) -> DenseMatrix<f64> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.value()).collect(),
        }
    }

    pub fn matvec(&self, x: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            *o = dot(self.row(i), x);
        }
    }
}

impl<S: Scalar> MatVecOracle<S> for DenseMatrix<S> {
    fn dim(&self) -> usize {
        assert_eq!(self.rows, self.cols, "operator must be square");
        self.rows
    }
    fn apply(&self, x: &[S], out: &mut [S]) {
        self.matvec(x, out)
    }
}

#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

pub fn norm<S: Scalar>(a: &[S]) -> S {
    let sq = dot(a, a);
    if sq.value() == 0.0 {
        return S::zero();
    }
    sq.sqrt()
}

pub fn value_norm<S: Scalar>(a: &[S]) -> f64 {
    a.iter().map(|x| x.value() * x.value()).sum::<f64>().sqrt()
}

pub fn deriv_norm<S: Scalar>(a: &[S]) -> f64 {
    a.iter().map(|x| x.deriv() * x.deriv()).sum::<f64>().sqrt()
}

fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

fn orthogonalize<S: Scalar>(x: &mut [S], against: &[Vec<S>]) {
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for q in against {
            let c = dot(q, x);
            axpy(-c, q, x);
        }
    }
}

/// Flip the vector so its largest-magnitude component is positive.
pub fn fix_sign<S: Scalar>(x: &mut [S]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for v in x.iter() {
        let a = v.value().abs();
        if a > best {
            best = a;
            sign = v.value().signum();
        }
    }
    if sign < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

/// Seed mixing for per-task random substreams.
pub fn substream_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn start_vector<S: Scalar>(dim: usize, seed: u64) -> Vec<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| S::from_f64(rng.gen_range(-1.0..1.0)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EigenOptions {
    /// Relative residual target `‖Ax − λx‖ ≤ tol·|λ|`.
    pub tol: f64,
    /// Defaults to `max(10·dim, 10_000)`.
    pub max_iter: Option<usize>,
    /// Step-to-step change allowed in the derivative channel of the vector.
    pub deriv_tol: f64,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            deriv_tol: 1e-9,
            seed: 0,
        }
    }
}

impl EigenOptions {
    fn iterations_for(&self, dim: usize) -> usize {
        self.max_iter.unwrap_or((10 * dim).max(10_000))
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CgOptions {
    pub tol: f64,
    /// Defaults to `max(10·dim, 500)`; the residual is recomputed every `dim` steps.
    pub max_iter: Option<usize>,
    /// When set, stop on normwise backward error `‖Ax − b‖ ≤ tol·(‖b‖ + op_norm·‖x‖)`
    /// instead of the plain relative residual.
    pub op_norm: Option<f64>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: None,
            op_norm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<S> {
    pub value: S,
    pub vector: Vec<S>,
    pub iterations: usize,
}

struct IterationSetup<'a, S> {
    routine: &'static str,
    locked: &'a [Vec<S>],
    /// Floor for the residual normalisation (`tol·max(|λ|, scale)`).
    scale: f64,
    seed: u64,
}

type Solve<'a, S> = &'a dyn Fn(&[S]) -> Result<Vec<S>>;

fn iterate<S: Scalar>(
    dim: usize,
    apply: &dyn Fn(&[S], &mut [S]),
    inverse: Option<Solve<'_, S>>,
    setup: IterationSetup<'_, S>,
    opts: &EigenOptions,
) -> Result<EigenPair<S>> {
    let max_iter = opts.iterations_for(dim);
    let mut x: Vec<S> = start_vector(dim, setup.seed);
    orthogonalize(&mut x, setup.locked);
    let n0 = norm(&x);
    if n0.value() == 0.0 {
        return Err(Error::InvalidInput(format!(
            "{}: no room left for another eigenvector",
            setup.routine
        )));
    }
    x.iter_mut().for_each(|v| *v /= n0);

    let mut prev_deriv = vec![0.0; dim];
    let mut y = vec![S::zero(); dim];
    for it in 1..=max_iter {
        apply(&x, &mut y);
        let lambda = dot(&x, &y);
        // Power mode tests ‖Ax − λx‖ against max(|λ|, scale). Inverse mode
        // tests the same residual for the inverse operator, ‖z − μx‖ ≤ tol·μ
        // with z = (A + shift·I)⁻¹x, which stays meaningful when the wanted
        // eigenvalues are many orders below the operator norm.
        let (next, residual, floor) = match inverse {
            None => {
                let r = residual_norm(&y, lambda, &x);
                let floor = lambda.value().abs().max(setup.scale);
                (y.clone(), r, floor)
            }
            Some(solve) => {
                // project before measuring: a slightly inexact locked vector
                // is amplified by the inverse and would swamp the residual
                let mut z = solve(&x)?;
                orthogonalize(&mut z, setup.locked);
                let mu = dot(&x, &z);
                let r = residual_norm(&z, mu, &x);
                (z, r, mu.value().abs())
            }
        };
        let floor = floor.max(f64::MIN_POSITIVE);
        let dnorm = deriv_norm(&x);
        let ddelta = x
            .iter()
            .zip(&prev_deriv)
            .map(|(v, p)| (v.deriv() - p).powi(2))
            .sum::<f64>()
            .sqrt();
        if it >= 2 && residual <= opts.tol * floor && ddelta <= opts.deriv_tol * dnorm {
            fix_sign(&mut x);
            return Ok(EigenPair {
                value: lambda,
                vector: x,
                iterations: it,
            });
        }
        for (p, v) in prev_deriv.iter_mut().zip(&x) {
            *p = v.deriv();
        }
        let mut next = next;
        orthogonalize(&mut next, setup.locked);
        let nn = norm(&next);
        if nn.value() == 0.0 || !nn.value().is_finite() {
            return Err(Error::NoConvergence {
                routine: setup.routine,
                max_iter: it,
            });
        }
        next.iter_mut().for_each(|v| *v /= nn);
        if dot(&next, &x).value() < 0.0 {
            next.iter_mut().for_each(|v| *v = -*v);
        }
        x = next;
    }
    Err(Error::NoConvergence {
        routine: setup.routine,
        max_iter,
    })
}

fn residual_norm<S: Scalar>(ax: &[S], lambda: S, x: &[S]) -> f64 {
    ax.iter()
        .zip(x)
        .map(|(a, xi)| {
            let r = a.value() - lambda.value() * xi.value();
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// Dominant eigenpair of a symmetric operator.
pub fn power_iteration<S, O>(op: &O, opts: &EigenOptions) -> Result<EigenPair<S>>
where
    S: Scalar,
    O: MatVecOracle<S> + ?Sized,
{
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::InvalidInput("empty operator".into()));
    }
    iterate(
        dim,
        &|x, out| op.apply(x, out),
        None,
        IterationSetup {
            routine: "power_iteration",
            locked: &[],
            scale: 0.0,
            seed: opts.seed,
        },
        opts,
    )
}

/// Leading `k` eigenpairs by power iteration with deflation, sorted by
/// descending eigenvalue.
pub fn top_k_eigenpairs<S, O>(op: &O, k: usize, opts: &EigenOptions) -> Result<Vec<EigenPair<S>>>
where
    S: Scalar,
    O: MatVecOracle<S> + ?Sized,
{
    let dim = op.dim();
    if k == 0 || k > dim {
        return Err(Error::InvalidInput(format!(
            "requested {k} eigenpairs of a {dim}-dimensional operator"
        )));
    }
    let mut pairs: Vec<EigenPair<S>> = Vec::with_capacity(k);
    let mut locked: Vec<Vec<S>> = Vec::with_capacity(k);
    for j in 0..k {
        let scale = pairs.first().map_or(0.0, |p| p.value.value().abs());
        let found = &pairs;
        let deflated = |x: &[S], out: &mut [S]| {
            op.apply(x, out);
            for p in found {
                let c = p.value * dot(&p.vector, x);
                axpy(-c, &p.vector, out);
            }
        };
        let pair = iterate(
            dim,
            &deflated,
            None,
            IterationSetup {
                routine: "top_k_eigenpairs",
                locked: &locked,
                scale,
                seed: substream_seed(opts.seed, j as u64),
            },
            opts,
        )?;
        locked.push(pair.vector.clone());
        pairs.push(pair);
    }
    pairs.sort_by(|a, b| b.value.value().total_cmp(&a.value.value()));
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct InverseIterationOptions {
    pub eigen: EigenOptions,
    /// Diagonal shift that makes the PSD operator definite; defaults to
    /// `1e-9·trace/dim`.
    pub shift: Option<f64>,
    pub cg: Option<CgOptions>,
    /// Exact basis of the null space. When given it is locked directly
    /// instead of being found by iteration; it must have `null_dim` vectors.
    #[serde(default)]
    pub null_basis: Vec<Vec<f64>>,
}

fn operator_trace<S: Scalar, O: MatVecOracle<S> + ?Sized>(op: &O) -> f64 {
    let dim = op.dim();
    let mut e = vec![S::zero(); dim];
    let mut out = vec![S::zero(); dim];
    let mut trace = 0.0;
    for i in 0..dim {
        e[i] = S::one();
        op.apply(&e, &mut out);
        trace += out[i].value();
        e[i] = S::zero();
    }
    trace
}

/// The `k` smallest eigenpairs lying above a null space of known dimension,
/// by inverse power iteration. Each inverse application is a conjugate
/// gradient solve of `(A + shift·I) y = x`. Eigenpairs are returned in
/// ascending order and are orthogonal to the null space.
///
/// The iteration runs on values only. Derivatives of each converged pair
/// are then obtained from first-order perturbation theory: `λ̇ = vᵀȦv`, the
/// part of `v̇` along lower eigenvectors in closed form, and the remainder
/// from a positive definite solve of `(A − λI) y = −PȦv` on the orthogonal
/// complement.
pub fn smallest_nonzero_eigenpairs<S, O>(
    op: &O,
    k: usize,
    null_dim: usize,
    opts: &InverseIterationOptions,
) -> Result<Vec<EigenPair<S>>>
where
    S: Scalar,
    O: MatVecOracle<S> + ?Sized,
{
    let dim = op.dim();
    if k == 0 || k + null_dim > dim {
        return Err(Error::InvalidInput(format!(
            "requested {k} eigenpairs above a {null_dim}-dimensional null space of a {dim}-dimensional operator"
        )));
    }
    let trace = operator_trace(op);
    let scale = (trace / dim as f64).abs();
    let shift = opts.shift.unwrap_or(1e-9 * scale);
    if !(shift > 0.0) {
        return Err(Error::InvalidInput(
            "inverse iteration needs a positive shift".into(),
        ));
    }
    let values = |x: &[f64], out: &mut [f64]| {
        let lifted: Vec<S> = x.iter().map(|&v| S::from_f64(v)).collect();
        let mut o = vec![S::zero(); x.len()];
        op.apply(&lifted, &mut o);
        for (t, v) in out.iter_mut().zip(&o) {
            *t = v.value();
        }
    };

    // (vector, eigenvalue) of everything locked so far
    let mut locked: Vec<Vec<f64>> = Vec::with_capacity(null_dim + k);
    let mut locked_values: Vec<f64> = Vec::with_capacity(null_dim + k);
    let first = if opts.null_basis.is_empty() {
        0
    } else {
        if opts.null_basis.len() != null_dim || opts.null_basis.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "null basis must hold {null_dim} vectors of length {dim}"
            )));
        }
        for v in &opts.null_basis {
            let mut b = v.clone();
            orthogonalize(&mut b, &locked);
            let len = value_norm(&b);
            if len <= 1e-12 {
                return Err(Error::InvalidInput("null basis is rank deficient".into()));
            }
            b.iter_mut().for_each(|c| *c /= len);
            locked.push(b);
            locked_values.push(0.0);
        }
        null_dim
    };

    // a supplied null basis is projected out of the solves, so CG never
    // sees the nearly singular directions
    let given = locked.clone();
    let shifted = FnOracle::new(dim, |x: &[f64], out: &mut [f64]| {
        let mut xp = x.to_vec();
        orthogonalize(&mut xp, &given);
        values(&xp, out);
        for (o, xi) in out.iter_mut().zip(&xp) {
            *o += xi * shift;
        }
        orthogonalize(out, &given);
    });
    let cg = opts.cg.clone().unwrap_or(CgOptions {
        tol: 1e-14,
        max_iter: Some((50 * dim).max(2000)),
        op_norm: Some(scale.max(shift)),
    });
    let solve = |x: &[f64]| -> Result<Vec<f64>> {
        conjugate_gradients(&shifted, x, &cg).map_err(|e| match e {
            Error::NoConvergence { .. } | Error::SingularSystem { .. } => Error::SingularSystem {
                routine: "smallest_nonzero_eigenpairs",
            },
            other => other,
        })
    };

    let mut found = Vec::with_capacity(k);
    for j in first..null_dim + k {
        let pair = iterate(
            dim,
            &values,
            Some(&solve),
            IterationSetup {
                routine: "smallest_nonzero_eigenpairs",
                locked: &locked,
                scale,
                seed: substream_seed(opts.eigen.seed, j as u64),
            },
            &opts.eigen,
        )?;
        locked.push(pair.vector.clone());
        locked_values.push(pair.value);
        if j >= null_dim {
            found.push((locked.len() - 1, pair));
        }
    }

    let mut pairs = Vec::with_capacity(k);
    for (slot, pair) in found {
        let v: Vec<S> = pair.vector.iter().map(|&c| S::from_f64(c)).collect();
        let mut av = vec![S::zero(); dim];
        op.apply(&v, &mut av);
        let dav: Vec<f64> = av.iter().map(|c| c.deriv()).collect();
        let (dlambda, dv) = if dav.iter().all(|&c| c == 0.0) {
            (0.0, vec![0.0; dim])
        } else {
            eigen_tangent(
                &values,
                &pair,
                &locked[..slot],
                &locked_values[..slot],
                &dav,
                &cg,
            )?
        };
        pairs.push(EigenPair {
            value: S::from_parts(pair.value, dlambda),
            vector: pair
                .vector
                .iter()
                .zip(&dv)
                .map(|(&c, &d)| S::from_parts(c, d))
                .collect(),
            iterations: pair.iterations,
        });
    }
    pairs.sort_by(|a, b| a.value.value().total_cmp(&b.value.value()));
    Ok(pairs)
}

/// First-order change of the eigenpair `(λ, v)` of a symmetric operator
/// under a perturbation with `Ȧv = dav`. `below` holds the eigenvectors with
/// smaller eigenvalues; every other eigenvalue must exceed `λ`.
fn eigen_tangent(
    values: &(dyn Fn(&[f64], &mut [f64]) + Sync),
    pair: &EigenPair<f64>,
    below: &[Vec<f64>],
    below_values: &[f64],
    dav: &[f64],
    cg: &CgOptions,
) -> Result<(f64, Vec<f64>)> {
    let dim = dav.len();
    let lambda = pair.value;
    let dlambda = dot(&pair.vector, dav);
    let mut dv = vec![0.0; dim];
    for (q, &mu) in below.iter().zip(below_values) {
        let gap = lambda - mu;
        if gap <= 0.0 {
            return Err(Error::SingularSystem {
                routine: "smallest_nonzero_eigenpairs",
            });
        }
        axpy(dot(q, dav) / gap, q, &mut dv);
    }
    let mut against: Vec<Vec<f64>> = below.to_vec();
    against.push(pair.vector.clone());
    let mut rhs: Vec<f64> = dav.iter().map(|c| -c).collect();
    orthogonalize(&mut rhs, &against);
    let restricted = FnOracle::new(dim, |x: &[f64], out: &mut [f64]| {
        let mut xp = x.to_vec();
        orthogonalize(&mut xp, &against);
        values(&xp, out);
        for (o, xi) in out.iter_mut().zip(&xp) {
            *o -= xi * lambda;
        }
        orthogonalize(out, &against);
    });
    let upper = conjugate_gradients(&restricted, &rhs, cg).map_err(|e| match e {
        Error::NoConvergence { .. } | Error::SingularSystem { .. } => Error::SingularSystem {
            routine: "smallest_nonzero_eigenpairs",
        },
        other => other,
    })?;
    for (d, u) in dv.iter_mut().zip(&upper) {
        *d += u;
    }
    Ok((dlambda, dv))
}

/// Solve `A x = b` for a symmetric positive definite operator.
///
/// Dual inputs are handled by two real solves: the value system first, then
/// the tangent system `A ẋ = ḃ − Ȧx`. Each gets its own stopping test.
pub fn conjugate_gradients<S, O>(op: &O, b: &[S], opts: &CgOptions) -> Result<Vec<S>>
where
    S: Scalar,
    O: MatVecOracle<S> + ?Sized,
{
    let n = op.dim();
    if b.len() != n {
        return Err(Error::InvalidInput(format!(
            "right-hand side has length {}, operator has dimension {n}",
            b.len()
        )));
    }
    let mut lifted = vec![S::zero(); n];
    let mut out = vec![S::zero(); n];
    let mut apply = |v: &[f64], into: &mut [f64]| {
        for (l, &x) in lifted.iter_mut().zip(v) {
            *l = S::from_f64(x);
        }
        op.apply(&lifted, &mut out);
        for (i, o) in into.iter_mut().zip(&out) {
            *i = o.value();
        }
    };
    let bv: Vec<f64> = b.iter().map(|v| v.value()).collect();
    let x = cg_real(&mut apply, &bv, opts)?;

    // tangent right-hand side ḃ − Ȧx; all zero for plain reals
    let xs: Vec<S> = x.iter().map(|&v| S::from_f64(v)).collect();
    let mut ax = vec![S::zero(); n];
    op.apply(&xs, &mut ax);
    let rhs: Vec<f64> = b
        .iter()
        .zip(&ax)
        .map(|(bi, a)| bi.deriv() - a.deriv())
        .collect();
    let dx = if rhs.iter().all(|&v| v == 0.0) {
        vec![0.0; n]
    } else {
        cg_real(&mut apply, &rhs, opts)?
    };
    Ok(x.iter()
        .zip(&dx)
        .map(|(&v, &d)| S::from_parts(v, d))
        .collect())
}

fn cg_real(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    b: &[f64],
    opts: &CgOptions,
) -> Result<Vec<f64>> {
    let n = b.len();
    let max_iter = opts.max_iter.unwrap_or((10 * n).max(500));
    let bn = value_norm(b);
    let mut x = vec![0.0; n];
    if bn == 0.0 {
        return Ok(x);
    }
    let target = |x: &[f64]| opts.tol * (bn + opts.op_norm.map_or(0.0, |a| a * value_norm(x)));
    let true_residual = |apply: &mut dyn FnMut(&[f64], &mut [f64]), x: &[f64], r: &mut [f64]| {
        apply(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
    };

    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs = dot(&r, &r);
    let mut since_refresh = 0usize;
    for _ in 0..max_iter {
        if value_norm(&r) <= target(&x) {
            // confirm against the true residual before returning
            true_residual(apply, &x, &mut r);
            if value_norm(&r) <= target(&x) {
                return Ok(x);
            }
            p.copy_from_slice(&r);
            rs = dot(&r, &r);
            since_refresh = 0;
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            return Err(Error::SingularSystem {
                routine: "conjugate_gradients",
            });
        }
        let alpha = rs / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        since_refresh += 1;
        if since_refresh >= n {
            // replace the recursive residual but keep the search direction
            true_residual(apply, &x, &mut r);
            since_refresh = 0;
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rs = rs_new;
    }
    true_residual(apply, &x, &mut r);
    if value_norm(&r) <= target(&x) {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        routine: "conjugate_gradients",
        max_iter,
    })
}

/// Result of classical multidimensional scaling.
#[derive(Debug, Clone)]
pub struct MdsOutcome<S> {
    /// `n × k` coordinates, row per point.
    pub coords: Vec<Vec<S>>,
    pub eigenvalues: Vec<S>,
    pub warnings: Vec<String>,
}

/// Classical (Torgerson) MDS: double-centre `−½D²` and scale the leading
/// eigenvectors by the square roots of their eigenvalues.
pub fn classical_mds<S: Scalar>(
    distances: &DenseMatrix<S>,
    k: usize,
    opts: &EigenOptions,
) -> Result<MdsOutcome<S>> {
    let n = distances.rows();
    if distances.cols() != n || n == 0 {
        return Err(Error::InvalidInput("distance matrix must be square".into()));
    }
    for i in 0..n {
        if distances.get(i, i).value() != 0.0 {
            return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
        }
        for j in 0..i {
            let a = distances.get(i, j).value();
            let b = distances.get(j, i).value();
            if a < 0.0 || !a.is_finite() || (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "distance matrix not symmetric, finite and nonnegative at ({i}, {j})"
                )));
            }
        }
    }
    let sq = DenseMatrix::from_fn(n, n, |i, j| {
        let d = distances.get(i, j);
        d * d
    });
    let inv_n = 1.0 / n as f64;
    let row_means: Vec<S> = (0..n)
        .map(|i| sq.row(i).iter().copied().fold(S::zero(), |a, b| a + b) * inv_n)
        .collect();
    let grand = row_means.iter().copied().fold(S::zero(), |a, b| a + b) * inv_n;
    // sq is symmetric, so column means equal row means
    let centered = DenseMatrix::from_fn(n, n, |i, j| {
        (sq.get(i, j) - row_means[i] - row_means[j] + grand) * -0.5
    });
    let pairs = top_k_eigenpairs(&centered, k, opts)?;
    let mut warnings = Vec::new();
    let scales: Vec<S> = pairs
        .iter()
        .enumerate()
        .map(|(c, p)| {
            if p.value.value() <= 0.0 {
                if p.value.value() < 0.0 {
                    warnings.push(format!(
                        "negative spectrum: eigenvalue {c} is {:e}, clamped to zero",
                        p.value.value()
                    ));
                }
                S::zero()
            } else {
                p.value.sqrt()
            }
        })
        .collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    let coords = (0..n)
        .map(|i| {
            pairs
                .iter()
                .zip(&scales)
                .map(|(p, s)| p.vector[i] * *s)
                .collect()
        })
        .collect();
    Ok(MdsOutcome {
        coords,
        eigenvalues: pairs.into_iter().map(|p| p.value).collect(),
        warnings,
    })
}

/// Full eigendecomposition of a dense symmetric matrix, eigenvalues
/// descending, eigenvectors with the sign convention of [`fix_sign`].
pub fn dense_symmetric_eigen(m: &DenseMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.rows();
    let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (m.get(i, j) + m.get(j, i)));
    let eig = nalgebra::SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    (values, vectors)
}
