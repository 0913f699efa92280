//! End-to-end runs: project, extract (or discover), fit, contour, render.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{Perturbation, RunConfig};
use crate::discovery::{
    build_tangent_map, discover_global, discover_per_point, perturbation_report, DiscoveryMode,
    DiscoveryResult, PerPointOptions, PerturbationReport, TangentMap,
};
use crate::error::{Error, Result};
use crate::extraction::{extract, PerturbationField};
use crate::field::{
    default_levels, fit_scalar_field, marching_squares, render_axes, DiscoveryDocument,
    FieldOptions,
};
use crate::io::{load_dataset, load_idx_labels, read_matrix_csv, Dataset};
use crate::parallel;
use crate::projections::{Method, PreparedProjection};

pub const SVG_FILE: &str = "axes.svg";
pub const JSON_FILE: &str = "axes.json";
pub const PERTURBATION_FILE: &str = "perturbation.json";
pub const REPORT_FILE: &str = "report.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub routine: String,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoverySummary {
    pub mode: DiscoveryMode,
    pub objective: f64,
    pub dominant_dimension: String,
    /// Global mode: the direction itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub n: usize,
    pub d: usize,
    /// Dual projection runs spent on extraction.
    pub projection_runs: usize,
    pub warnings: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub timings: Vec<PhaseTiming>,
    pub convergence: Vec<Convergence>,
    /// How kNN lists become a graph, for the neighbourhood methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbourhood: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discovery: Option<DiscoverySummary>,
    /// The configuration with every default filled in.
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PerturbationDocument {
    mode: DiscoveryMode,
    names: Vec<String>,
    #[serde(flatten)]
    report: PerturbationReport,
}

struct Clock {
    timings: Vec<PhaseTiming>,
}

impl Clock {
    fn phase<T>(&mut self, phase: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        log::info!("{phase}");
        let out = f().map_err(|e| e.in_phase(phase));
        self.timings.push(PhaseTiming {
            phase: phase.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }
}

fn load(config: &RunConfig) -> Result<Dataset> {
    let mut ds = load_dataset(&config.input, config.format, config.label_column.as_deref())?;
    if let Some(path) = &config.labels {
        let labels = load_idx_labels(path)?;
        if labels.len() != ds.data.n() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} points",
                labels.len(),
                ds.data.n()
            )));
        }
        ds.labels = Some(labels);
    }
    Ok(ds)
}

fn apply_map(map: &TangentMap, result: &DiscoveryResult) -> Vec<[f64; 2]> {
    (0..map.n)
        .map(|i| map.apply_block(i, &result.perturbation[i]))
        .collect()
}

/// Execute a configured run and write its artifacts to `config.output`.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport> {
    config.validate().map_err(|e| e.in_phase("config"))?;
    parallel::install_with(config.threads.or_else(parallel::thread_count), || {
        run(config)
    })
}

fn run(config: &RunConfig) -> Result<RunReport> {
    let mut clock = Clock {
        timings: Vec::new(),
    };
    let mut config = config.clone();
    let mut warnings = Vec::new();
    let mut convergence = Vec::new();

    let ds = clock.phase("load", || load(&config))?;
    config.validate_for(&ds).map_err(|e| e.in_phase("config"))?;
    let data = &ds.data;

    let (prepared, points) = clock.phase("project", || {
        let prepared = PreparedProjection::prepare(data, &config.projection)?;
        let points = match &prepared {
            PreparedProjection::Tsne(fixed) => {
                convergence.push(Convergence {
                    routine: "t-SNE".into(),
                    converged: fixed.converged,
                    iterations: fixed.iterations,
                    residual: fixed.grad_norm,
                });
                fixed.positions.clone()
            }
            other => {
                let outcome = other.project(data)?;
                warnings.extend(outcome.warnings.iter().cloned());
                outcome.positions()
            }
        };
        Ok((prepared, points))
    })?;

    let mut discovery = None;
    let perturbation = config.perturbation.clone();
    let (vectors, runs) = match &perturbation {
        Perturbation::Axis(_) | Perturbation::Custom(_) => clock.phase("extract", || {
            let field = match &perturbation {
                Perturbation::Axis(name) => {
                    let j = ds.dimension(name).expect("validated dimension");
                    PerturbationField::axis(data.n(), data.d(), j)?
                }
                Perturbation::Custom(path) => PerturbationField::custom(read_matrix_csv(path)?)?,
                _ => unreachable!(),
            };
            let out = extract(data, &prepared, &field, config.extraction, config.seed)?;
            Ok((out.vectors, out.runs))
        })?,
        mode => clock.phase("discover", || {
            let map = build_tangent_map(data, &prepared, config.extraction, config.seed)?;
            let result = if *mode == Perturbation::DiscoverGlobal {
                discover_global(&map, config.seed)?
            } else {
                let r = discover_per_point(
                    &map,
                    &points,
                    &PerPointOptions {
                        lambda: config.discovery.lambda,
                        sigma: config.discovery.sigma,
                        seed: config.seed,
                        ..PerPointOptions::default()
                    },
                )?;
                config.discovery.sigma = Some(r.sigma);
                r
            };
            warnings.extend(result.warnings.iter().cloned());
            let vectors = apply_map(&map, &result);
            let runs = map.runs;
            discovery = Some(result);
            Ok((vectors, runs))
        })?,
    };

    let fitted = clock.phase("fit", || {
        fit_scalar_field(
            &points,
            &vectors,
            &FieldOptions {
                resolution: config.field.resolution,
                reg_weight: config.field.reg_weight,
                bounds: None,
            },
        )
    })?;
    warnings.extend(fitted.warnings.iter().cloned());
    let grid = fitted.grid;

    let isolines = clock.phase("contour", || {
        Ok(marching_squares(
            &grid,
            &default_levels(&grid, config.field.n_levels),
        ))
    })?;

    let mut rendered = clock.phase("render", || {
        render_axes(
            &points,
            &vectors,
            &grid,
            &isolines,
            ds.labels.as_deref(),
            config.field.draw_vectors,
        )
    })?;

    let out_dir = config.output.clone();
    let mut outputs = vec![out_dir.join(SVG_FILE), out_dir.join(JSON_FILE)];
    let mut summary = None;
    let mut perturbation_json = None;
    if let Some(result) = &discovery {
        rendered.document.discovery = Some(DiscoveryDocument {
            mode: result.mode.name().into(),
            lambda: result.lambda_smooth,
            sigma: result.sigma,
            objective: result.objective,
            perturbation: result.perturbation.clone(),
        });
        let report = perturbation_report(result);
        summary = Some(DiscoverySummary {
            mode: result.mode,
            objective: result.objective,
            dominant_dimension: ds.names[report.dominant_dimension].clone(),
            direction: (result.mode == DiscoveryMode::Global)
                .then(|| result.perturbation[0].clone()),
        });
        perturbation_json = Some(serde_json::to_string_pretty(&PerturbationDocument {
            mode: result.mode,
            names: ds.names.clone(),
            report,
        })?);
        outputs.push(out_dir.join(PERTURBATION_FILE));
    }
    outputs.push(out_dir.join(REPORT_FILE));

    let mut report = RunReport {
        n: data.n(),
        d: data.d(),
        projection_runs: runs,
        warnings,
        outputs,
        timings: Vec::new(),
        convergence,
        neighbourhood: matches!(config.projection.method, Method::Isomap | Method::Lle).then(
            || {
                format!(
                    "union of {}-nearest-neighbour lists",
                    config.projection.k_neighbors
                )
            },
        ),
        discovery: summary,
        config,
    };
    clock.phase("write", || {
        std::fs::create_dir_all(&out_dir)?;
        rendered.write(&out_dir.join(SVG_FILE), &out_dir.join(JSON_FILE))?;
        if let Some(text) = &perturbation_json {
            std::fs::write(out_dir.join(PERTURBATION_FILE), text)?;
        }
        Ok(())
    })?;
    report.timings = clock.timings;
    let text =
        toml::to_string(&report).map_err(|e| Error::Config(e.to_string()).in_phase("write"))?;
    std::fs::write(out_dir.join(REPORT_FILE), text)
        .map_err(|e| Error::from(e).in_phase("write"))?;
    Ok(report)
}
