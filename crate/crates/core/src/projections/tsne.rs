//! t-SNE by plain gradient descent, with fixed-point capture and a
//! single-step dual replay.
//!
//! [`tsne_converge`] descends on the plain data and records the embedding
//! and bandwidths. [`tsne_dual_replay`] restarts from that embedding over
//! dual data and runs exactly one update; at a fixed point the value channel
//! stays put and the derivative channel carries the motion of every point.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DataMatrix, ProjectionConfig, ProjectionOutcome};
use crate::autodiff::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::linalg::substream_seed;

const BETA_MIN: f64 = 1e-10;
const BETA_MAX: f64 = 1e10;
const BISECTION_STEPS: usize = 30;
const ENTROPY_TOL: f64 = 1e-5;
const NEWTON_STEPS: usize = 2;
const INIT_STD: f64 = 1.0;
/// The captured fixed point sits this far inside the gradient tolerance, so
/// a rerun on slightly perturbed data stops after its forced step.
const CAPTURE_MARGIN: f64 = 0.5;

/// Everything a dual replay needs to land on the same local minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneFixedPoint {
    pub positions: Vec<[f64; 2]>,
    /// Symmetrised joint affinities `P`, summing to one.
    pub affinities: Vec<Vec<f64>>,
    /// Calibrated Gaussian precisions `1/(2σ²)`, one per point.
    pub betas: Vec<f64>,
    pub config: ProjectionConfig,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

fn squared_distances<S: Scalar>(data: &DataMatrix<S>) -> Vec<Vec<S>> {
    let n = data.n();
    let mut d = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = data.squared_distance(i, j);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Conditional row `P(·|i)` at precision `beta`, with its entropy and the
/// variance of the shifted distances under it.
fn conditional_row<S: Scalar>(dist: &[S], i: usize, beta: S) -> (Vec<S>, S, S) {
    let shift = dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, d)| *d)
        .reduce(|a, b| a.min(b))
        .unwrap_or_else(S::zero);
    let mut p = vec![S::zero(); dist.len()];
    let mut total = S::zero();
    for (j, d) in dist.iter().enumerate() {
        if j != i {
            let e = (-(beta * (*d - shift))).exp();
            p[j] = e;
            total += e;
        }
    }
    let mut mean = S::zero();
    let mut second = S::zero();
    for (j, d) in dist.iter().enumerate() {
        if j != i {
            p[j] /= total;
            let ds = *d - shift;
            mean += p[j] * ds;
            second += p[j] * ds * ds;
        }
    }
    let entropy = total.ln() + beta * mean;
    (p, entropy, second - mean * mean)
}

/// Plain bisection on `ln β` until the entropy is within tolerance.
fn bisect_beta(dist: &[f64], i: usize, target: f64) -> f64 {
    let (mut lo, mut hi) = (BETA_MIN.ln(), BETA_MAX.ln());
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..BISECTION_STEPS {
        let (_, h, _) = conditional_row(dist, i, mid.exp());
        if (h - target).abs() < ENTROPY_TOL {
            break;
        }
        if h > target {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
    }
    mid.exp()
}

/// Newton refinement from a warm start. Over duals this also propagates the
/// derivative of the bandwidth through the entropy constraint.
fn polish_beta<S: Scalar>(dist: &[S], i: usize, warm: f64, target: f64) -> (S, Vec<S>) {
    let mut beta = S::from_f64(warm);
    for _ in 0..NEWTON_STEPS {
        let (_, h, var) = conditional_row(dist, i, beta);
        let slope = -(beta * var);
        if slope.value() == 0.0 || !slope.value().is_finite() {
            break;
        }
        let mut next = beta - (h - target) / slope;
        let v = beta.value();
        if !(next.value() >= 0.5 * v && next.value() <= 2.0 * v) {
            next = S::from_f64(next.value().clamp(0.5 * v, 2.0 * v));
        }
        beta = next;
    }
    let (p, _, _) = conditional_row(dist, i, beta);
    (beta, p)
}

/// Joint affinities from warm-start bandwidths; returns the polished betas.
fn affinities<S: Scalar>(
    dist: &[Vec<S>],
    warm: &[f64],
    perplexity: f64,
) -> (Vec<f64>, Vec<Vec<S>>) {
    let n = dist.len();
    let target = perplexity.ln();
    let mut betas = Vec::with_capacity(n);
    let mut cond = Vec::with_capacity(n);
    for i in 0..n {
        let (b, row) = polish_beta(&dist[i], i, warm[i], target);
        betas.push(b.value());
        cond.push(row);
    }
    let norm = 1.0 / (2.0 * n as f64);
    let mut p = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (cond[i][j] + cond[j][i]) * norm;
            p[i][j] = v;
            p[j][i] = v;
        }
    }
    (betas, p)
}

/// KL gradient `4 Σ_j (P_ij − Q_ij)(1 + ‖y_i − y_j‖²)⁻¹ (y_i − y_j)`.
fn gradient<S: Scalar>(p: &[Vec<S>], y: &[[S; 2]]) -> Vec<[S; 2]> {
    let n = y.len();
    let mut num = vec![vec![S::zero(); n]; n];
    let mut z = S::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let q = S::one() / (dx * dx + dy * dy + 1.0);
            num[i][j] = q;
            num[j][i] = q;
            z += q * 2.0;
        }
    }
    (0..n)
        .map(|i| {
            let mut g = [S::zero(); 2];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let coef = (p[i][j] - num[i][j] / z) * num[i][j] * 4.0;
                g[0] += coef * (y[i][0] - y[j][0]);
                g[1] += coef * (y[i][1] - y[j][1]);
            }
            g
        })
        .collect()
}

fn grad_norm<S: Scalar>(g: &[[S; 2]]) -> f64 {
    g.iter()
        .map(|v| v[0].value().powi(2) + v[1].value().powi(2))
        .sum::<f64>()
        .sqrt()
}

fn step<S: Scalar>(y: &mut [[S; 2]], g: &[[S; 2]], rate: f64) {
    for (yi, gi) in y.iter_mut().zip(g) {
        yi[0] -= gi[0] * rate;
        yi[1] -= gi[1] * rate;
    }
}

fn initial_positions(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, 0x7453_4e45));
    let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
    (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect()
}

/// Descend on plain data until `‖g‖` is within half of `grad_tol`. When
/// `max_iters` runs out the best-effort embedding is returned with
/// `converged = false`.
pub fn tsne_converge(data: &DataMatrix<f64>, config: &ProjectionConfig) -> Result<TsneFixedPoint> {
    config.validate(data.n())?;
    let n = data.n();
    let dist = squared_distances(data);
    let target = config.perplexity.ln();
    let warm: Vec<f64> = (0..n).map(|i| bisect_beta(&dist[i], i, target)).collect();
    let (betas, _) = affinities(&dist, &warm, config.perplexity);
    // recompute from the polished betas so a replay rebuilds P bit for bit
    let (_, p) = affinities(&dist, &betas, config.perplexity);

    let mut y = initial_positions(n, config.seed);
    let mut iterations = 0;
    let mut g = gradient(&p, &y);
    let mut norm = grad_norm(&g);
    let capture = CAPTURE_MARGIN * config.grad_tol;
    while norm > capture && iterations < config.max_iters {
        step(&mut y, &g, config.learning_rate);
        iterations += 1;
        g = gradient(&p, &y);
        norm = grad_norm(&g);
    }
    let converged = norm <= capture;
    if !converged {
        log::warn!(
            "t-SNE stopped after {iterations} iterations with gradient norm {norm:e} (target {:e})",
            config.grad_tol
        );
    }
    Ok(TsneFixedPoint {
        positions: y,
        affinities: p,
        betas,
        config: config.clone(),
        converged,
        iterations,
        grad_norm: norm,
    })
}

/// One gradient step from the captured fixed point over possibly dual data.
pub fn tsne_dual_replay<S: Scalar>(
    data: &DataMatrix<S>,
    fixed: &TsneFixedPoint,
) -> Result<ProjectionOutcome<S>> {
    let cfg = &fixed.config;
    if !fixed.converged {
        return Err(Error::NoConvergence {
            routine: "tsne_converge",
            max_iter: cfg.max_iters,
        });
    }
    if data.n() != fixed.positions.len() {
        return Err(Error::InvalidInput(format!(
            "fixed point has {} points, data has {}",
            fixed.positions.len(),
            data.n()
        )));
    }
    let dist = squared_distances(data);
    let (_, p) = affinities(&dist, &fixed.betas, cfg.perplexity);
    let mut y: Vec<[S; 2]> = fixed
        .positions
        .iter()
        .map(|v| [S::from_f64(v[0]), S::from_f64(v[1])])
        .collect();
    let g = gradient(&p, &y);
    let moved = cfg.learning_rate * grad_norm(&g);
    let limit = 10.0 * cfg.grad_tol * cfg.learning_rate;
    if moved > limit {
        return Err(Error::FixedPointMismatch { moved, limit });
    }
    step(&mut y, &g, cfg.learning_rate);
    Ok(ProjectionOutcome::new(y))
}

/// Plain rerun from the captured fixed point on (possibly nudged) data: one
/// forced step, then descent while `‖g‖ > grad_tol`. Returns the positions
/// and the number of steps taken.
pub fn tsne_rerun(data: &DataMatrix<f64>, fixed: &TsneFixedPoint) -> (Vec<[f64; 2]>, usize) {
    let cfg = &fixed.config;
    let dist = squared_distances(data);
    let (_, p) = affinities(&dist, &fixed.betas, cfg.perplexity);
    let mut y = fixed.positions.clone();
    let mut steps = 0;
    loop {
        let g = gradient(&p, &y);
        if steps > 0 && (grad_norm(&g) <= cfg.grad_tol || steps >= cfg.max_iters) {
            break;
        }
        step(&mut y, &g, cfg.learning_rate);
        steps += 1;
    }
    (y, steps)
}

/// Dual replay specialised to a seeded data matrix.
pub fn tsne_derivatives(data: &DataMatrix<Dual>, fixed: &TsneFixedPoint) -> Result<Vec<[f64; 2]>> {
    Ok(tsne_dual_replay(data, fixed)?.derivatives())
}
