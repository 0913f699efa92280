//! Per-point perturbation vectors in the projection plane.
//!
//! Two schemes: perturb one point per projection run and keep only its own
//! motion (`n` runs), or perturb a random half of the points per run and
//! average each point's motion over the runs it took part in (about
//! `log₂ n` runs). Runs are independent and execute in parallel; their
//! results are reduced in a fixed order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::substream_seed;
use crate::parallel;
use crate::projections::{DataMatrix, DualProjector};

/// Hard cap on randomized rounds; reaching it means the sampler is broken.
pub const ROUND_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldMode {
    Axis(usize),
    Custom,
}

/// Direction in which every input point is perturbed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationField {
    directions: Vec<Vec<f64>>,
    mode: FieldMode,
}

impl PerturbationField {
    /// Every point moves along coordinate axis `dim`.
    pub fn axis(n: usize, d: usize, dim: usize) -> Result<Self> {
        if n == 0 || dim >= d {
            return Err(Error::InvalidInput(format!(
                "axis {dim} out of range for {n} points in {d} dimensions"
            )));
        }
        let mut e = vec![0.0; d];
        e[dim] = 1.0;
        Ok(Self {
            directions: vec![e; n],
            mode: FieldMode::Axis(dim),
        })
    }

    /// Arbitrary per-point directions; nonzero rows are scaled to unit length.
    pub fn custom(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput(
                "perturbation rows must share a positive length".into(),
            ));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite perturbation entry".into()));
        }
        let mut any = false;
        let directions = rows
            .into_iter()
            .map(|r| {
                let len = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                if len == 0.0 {
                    r
                } else {
                    any = true;
                    r.into_iter().map(|v| v / len).collect()
                }
            })
            .collect();
        if !any {
            return Err(Error::InvalidInput(
                "perturbation field is zero everywhere".into(),
            ));
        }
        Ok(Self {
            directions,
            mode: FieldMode::Custom,
        })
    }

    /// Copy with every direction multiplied by `c`. The result no longer has
    /// unit rows; extraction is linear in the field so outputs scale by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            directions: self
                .directions
                .iter()
                .map(|r| r.iter().map(|v| v * c).collect())
                .collect(),
            mode: self.mode,
        }
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn mode(&self) -> FieldMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.directions.len()
    }

    pub fn d(&self) -> usize {
        self.directions.first().map_or(0, Vec::len)
    }

    fn check(&self, data: &DataMatrix<f64>) -> Result<()> {
        if self.n() != data.n() || self.d() != data.d() {
            return Err(Error::InvalidInput(format!(
                "perturbation field is {}x{}, data is {}x{}",
                self.n(),
                self.d(),
                data.n(),
                data.d()
            )));
        }
        Ok(())
    }
}

/// Which extraction scheme to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionMode {
    OneAtATime,
    Halves,
}

impl std::str::FromStr for ExtractionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-at-a-time" => Ok(ExtractionMode::OneAtATime),
            "halves" => Ok(ExtractionMode::Halves),
            other => Err(Error::Config(format!("unknown extraction mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationVectors {
    /// Motion of each projected point under its own perturbation.
    pub vectors: Vec<[f64; 2]>,
    /// How many runs perturbed each point.
    pub counts: Vec<usize>,
    /// Projection runs executed.
    pub runs: usize,
    /// Rounds sampled, including rounds that perturbed nobody.
    pub rounds: usize,
}

fn check_output(coords: &[[crate::Dual; 2]], n: usize) -> Result<()> {
    if coords.len() != n {
        return Err(Error::InvalidInput(format!(
            "projection returned {} points for {n} inputs",
            coords.len()
        )));
    }
    Ok(())
}

/// One dual run per point, seeding only that point.
pub fn extract_one_at_a_time<P>(
    data: &DataMatrix<f64>,
    projector: &P,
    field: &PerturbationField,
) -> Result<PerturbationVectors>
where
    P: DualProjector + ?Sized,
{
    field.check(data)?;
    let n = data.n();
    let vectors = parallel::install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut active = vec![false; n];
                active[i] = true;
                let coords = projector
                    .project_dual(&data.seeded(&field.directions, &active))
                    .and_then(|c| check_output(&c, n).map(|_| c))
                    .map_err(|e| e.at_point(i))?;
                Ok([coords[i][0].deriv, coords[i][1].deriv])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(PerturbationVectors {
        vectors,
        counts: vec![1; n],
        runs: n,
        rounds: n,
    })
}

/// Subsets for the randomized scheme: round `r` draws from its own
/// substream of `seed`, and rounds are added until every point is covered.
pub fn halves_schedule(n: usize, seed: u64) -> Result<Vec<Vec<bool>>> {
    let mut covered = vec![false; n];
    let mut rounds = Vec::new();
    while covered.iter().any(|c| !c) {
        if rounds.len() >= ROUND_LIMIT {
            return Err(Error::RoundLimitExceeded { limit: ROUND_LIMIT });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, rounds.len() as u64));
        let subset: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        for (c, s) in covered.iter_mut().zip(&subset) {
            *c |= *s;
        }
        rounds.push(subset);
    }
    Ok(rounds)
}

/// Seed a random half of the points per run and average each point's
/// motion over the runs that perturbed it.
pub fn extract_randomized_halves<P>(
    data: &DataMatrix<f64>,
    projector: &P,
    field: &PerturbationField,
    seed: u64,
) -> Result<PerturbationVectors>
where
    P: DualProjector + ?Sized,
{
    field.check(data)?;
    let n = data.n();
    let schedule = halves_schedule(n, seed)?;
    let results = parallel::install(|| {
        schedule
            .par_iter()
            .enumerate()
            .map(|(r, subset)| {
                if !subset.iter().any(|&s| s) {
                    return Ok(None);
                }
                let coords = projector
                    .project_dual(&data.seeded(&field.directions, subset))
                    .and_then(|c| check_output(&c, n).map(|_| c))
                    .map_err(|e| e.at_round(r))?;
                Ok(Some(coords))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut sums = vec![[0.0f64; 2]; n];
    let mut counts = vec![0usize; n];
    let mut runs = 0;
    for (subset, coords) in schedule.iter().zip(&results) {
        let Some(coords) = coords else { continue };
        runs += 1;
        for i in (0..n).filter(|&i| subset[i]) {
            sums[i][0] += coords[i][0].deriv;
            sums[i][1] += coords[i][1].deriv;
            counts[i] += 1;
        }
    }
    let vectors = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| [s[0] / c as f64, s[1] / c as f64])
        .collect();
    Ok(PerturbationVectors {
        vectors,
        counts,
        runs,
        rounds: schedule.len(),
    })
}

/// Run the chosen scheme; `seed` only matters for the randomized one.
pub fn extract<P>(
    data: &DataMatrix<f64>,
    projector: &P,
    field: &PerturbationField,
    mode: ExtractionMode,
    seed: u64,
) -> Result<PerturbationVectors>
where
    P: DualProjector + ?Sized,
{
    match mode {
        ExtractionMode::OneAtATime => extract_one_at_a_time(data, projector, field),
        ExtractionMode::Halves => extract_randomized_halves(data, projector, field, seed),
    }
}

/// Magnitudes `|dv_j/dp_i|` at row `i`, column `j`, from one run per point.
pub fn measure_off_point_effects<P>(
    data: &DataMatrix<f64>,
    projector: &P,
    field: &PerturbationField,
) -> Result<Vec<Vec<f64>>>
where
    P: DualProjector + ?Sized,
{
    field.check(data)?;
    let n = data.n();
    parallel::install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut active = vec![false; n];
                active[i] = true;
                let coords = projector
                    .project_dual(&data.seeded(&field.directions, &active))
                    .and_then(|c| check_output(&c, n).map(|_| c))
                    .map_err(|e| e.at_point(i))?;
                Ok(coords
                    .iter()
                    .map(|c| c[0].deriv.hypot(c[1].deriv))
                    .collect())
            })
            .collect()
    })
}
