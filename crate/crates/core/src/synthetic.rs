//! Synthetic datasets with a known generating parameter.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Dataset;
use crate::projections::DataMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    SCurve,
    SwissRoll,
    InterlockedRings,
    GaussianBlobs,
}

impl Generator {
    pub const ALL: [Generator; 4] = [
        Generator::SCurve,
        Generator::SwissRoll,
        Generator::InterlockedRings,
        Generator::GaussianBlobs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::SCurve => "s-curve",
            Generator::SwissRoll => "swiss-roll",
            Generator::InterlockedRings => "interlocked-rings",
            Generator::GaussianBlobs => "gaussian-blobs",
        }
    }
}

impl FromStr for Generator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Generator::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown synthetic dataset {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// Generating parameter of each point (curve position, angle or blob).
    pub parameter: Vec<f64>,
    /// Unit direction in which the parameter increases at each point.
    pub tangent: Vec<Vec<f64>>,
}

fn unit(v: [f64; 3]) -> Vec<f64> {
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.iter().map(|x| x / len).collect()
}

fn xyz() -> Vec<String> {
    vec!["x".into(), "y".into(), "z".into()]
}

pub fn generate(generator: Generator, n: usize, seed: u64) -> Result<Synthetic> {
    if n < 3 {
        return Err(Error::Config(format!("need at least 3 points, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut parameter = Vec::with_capacity(n);
    let mut tangent = Vec::with_capacity(n);
    let mut labels = None;
    let mut names = xyz();
    match generator {
        Generator::SCurve => {
            for _ in 0..n {
                let t = 3.0 * PI * (rng.gen::<f64>() - 0.5);
                let h = 2.0 * rng.gen::<f64>();
                let s = t.signum();
                rows.push(vec![t.sin(), h, s * (t.cos() - 1.0)]);
                parameter.push(t);
                tangent.push(unit([t.cos(), 0.0, -s * t.sin()]));
            }
        }
        Generator::SwissRoll => {
            for _ in 0..n {
                let u = rng.gen_range(1.5 * PI..=4.5 * PI);
                let v = rng.gen_range(0.0..=15.0);
                rows.push(vec![u * u.cos(), u * u.sin(), v]);
                parameter.push(u);
                tangent.push(unit([u.cos() - u * u.sin(), u.sin() + u * u.cos(), 0.0]));
            }
        }
        Generator::InterlockedRings => {
            let mut l = Vec::with_capacity(n);
            for i in 0..n {
                let a = rng.gen_range(0.0..2.0 * PI);
                if i % 2 == 0 {
                    rows.push(vec![a.cos(), a.sin(), 0.0]);
                    tangent.push(vec![-a.sin(), a.cos(), 0.0]);
                    l.push("a".to_string());
                } else {
                    rows.push(vec![1.0 + a.cos(), 0.0, a.sin()]);
                    tangent.push(vec![-a.sin(), 0.0, a.cos()]);
                    l.push("b".to_string());
                }
                parameter.push(a);
            }
            labels = Some(l);
        }
        Generator::GaussianBlobs => {
            const DIM: usize = 4;
            const CENTRES: usize = 3;
            names = (0..DIM).map(|j| format!("x{j}")).collect();
            let centres: Vec<Vec<f64>> = (0..CENTRES)
                .map(|_| (0..DIM).map(|_| rng.gen_range(-8.0..8.0)).collect())
                .collect();
            let noise = Normal::new(0.0, 1.0).expect("unit normal");
            let mut l = Vec::with_capacity(n);
            for i in 0..n {
                let c = i % CENTRES;
                rows.push(
                    centres[c]
                        .iter()
                        .map(|m| m + noise.sample(&mut rng))
                        .collect(),
                );
                parameter.push(c as f64);
                let mut e = vec![0.0; DIM];
                e[0] = 1.0;
                tangent.push(e);
                l.push(format!("blob{c}"));
            }
            labels = Some(l);
        }
    }
    Ok(Synthetic {
        dataset: Dataset {
            data: DataMatrix::from_rows(&rows)?,
            names,
            labels,
            image_shape: None,
        },
        parameter,
        tangent,
    })
}
