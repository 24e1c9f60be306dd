//! Clique-vs-RANSAC benchmark sweep over a grid of outlier ratios and
//! noise levels, with CSV/JSON reports.
//!
//! Per-trial seeds derive from (master seed, cell, trial index), so both
//! methods see identical scenes in every trial and results are independent
//! of scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::Dim;
use crate::scene::{evaluate_trial, gen_scene, BenchError, SceneSpec, TrialOutcome};
use crate::verify::{verify_clique, verify_ransac, Method, RansacParams, VerificationParams};

/// The sweep grid and per-trial parameters.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub outlier_ratios: Vec<f64>,
    pub noise_sigmas: Vec<f64>,
    pub methods: Vec<Method>,
    /// Trials per (ratio, sigma) cell.
    pub trials: usize,
    /// Correspondences per scene.
    pub correspondences: usize,
    pub dim: Dim,
    pub extent: f64,
    pub seed: u64,
    pub epsilon: f64,
    pub ransac_iterations: u32,
    /// Overrides the per-dimension default when set.
    pub min_inliers: Option<usize>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            outlier_ratios: vec![0.0, 0.5, 0.9],
            noise_sigmas: vec![0.0, 0.05],
            methods: vec![Method::Clique, Method::Ransac],
            trials: 100,
            correspondences: 100,
            dim: Dim::Three,
            extent: crate::scene::DEFAULT_EXTENT,
            seed: 0,
            epsilon: crate::graph::DEFAULT_EPSILON,
            ransac_iterations: crate::verify::DEFAULT_RANSAC_ITERATIONS,
            min_inliers: None,
        }
    }
}

/// Execution knobs that do not affect reported numbers (other than wall
/// clock): trial-level parallelism and whether to record wall clock at all.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub parallel: bool,
    /// When false, every elapsed/time field is reported as 0 so the output
    /// bytes are fully deterministic.
    pub measure_time: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            parallel: true,
            measure_time: true,
        }
    }
}

/// One per-trial record (verbose JSON output).
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub accepted: bool,
    pub rotation_error_rad: Option<f64>,
    pub translation_error_m: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub elapsed_ms: f64,
}

/// Aggregates for one (outlier_ratio, sigma, method) cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub outlier_ratio: f64,
    pub sigma: f64,
    pub method: String,
    pub accept_rate: f64,
    /// Mean/median over accepted trials; absent when none were accepted.
    pub rot_err_mean_rad: Option<f64>,
    pub trans_err_mean_m: Option<f64>,
    pub rot_err_median_rad: Option<f64>,
    pub trans_err_median_m: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub time_ms_mean: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub seed: u64,
    pub dim: usize,
    pub correspondences: usize,
    pub trials_per_cell: usize,
    pub epsilon: f64,
    pub ransac_iterations: u32,
    pub cells: Vec<CellReport>,
}

pub const CSV_HEADER: &str =
    "outlier_ratio,sigma,method,accept_rate,rot_err_mean_rad,trans_err_mean_m,precision,recall,f1,time_ms_mean";

impl SweepReport {
    /// Plot-ready CSV with one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                c.outlier_ratio,
                c.sigma,
                c.method,
                c.accept_rate,
                c.rot_err_mean_rad
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                c.trans_err_mean_m
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                c.precision,
                c.recall,
                c.f1,
                c.time_ms_mean,
            ));
        }
        out
    }

    /// JSON mirror; per-trial detail is included only when `verbose`.
    pub fn to_json(&self, verbose: bool) -> String {
        if verbose {
            serde_json::to_string_pretty(self).expect("report serializes")
        } else {
            let mut slim = self.clone();
            for c in &mut slim.cells {
                c.trials.clear();
            }
            serde_json::to_string_pretty(&slim).expect("report serializes")
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic per-trial scene seed from (master, cell, trial).
fn derive_scene_seed(master: u64, ratio_idx: usize, sigma_idx: usize, trial: usize) -> u64 {
    let mut s = splitmix64(master);
    s = splitmix64(s ^ ratio_idx as u64);
    s = splitmix64(s ^ sigma_idx as u64);
    splitmix64(s ^ trial as u64)
}

fn validate_grid(grid: &SweepGrid) -> Result<(), BenchError> {
    if grid.outlier_ratios.is_empty() || grid.noise_sigmas.is_empty() || grid.methods.is_empty() {
        return Err(BenchError::InvalidGrid(
            "empty ratio/sigma/method axis".into(),
        ));
    }
    if grid.trials == 0 {
        return Err(BenchError::InvalidGrid("trials must be >= 1".into()));
    }
    if grid.correspondences == 0 {
        return Err(BenchError::InvalidGrid(
            "correspondences must be >= 1".into(),
        ));
    }
    if grid
        .outlier_ratios
        .iter()
        .any(|r| !r.is_finite() || !(0.0..=1.0).contains(r))
    {
        return Err(BenchError::InvalidGrid(
            "outlier ratios must lie in [0, 1]".into(),
        ));
    }
    if grid.noise_sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(BenchError::InvalidGrid("noise sigmas must be >= 0".into()));
    }
    if !grid.epsilon.is_finite() || grid.epsilon <= 0.0 {
        return Err(BenchError::InvalidGrid("epsilon must be positive".into()));
    }
    if grid.ransac_iterations == 0 {
        return Err(BenchError::InvalidGrid(
            "ransac_iterations must be >= 1".into(),
        ));
    }
    if !grid.extent.is_finite() || grid.extent <= 0.0 {
        return Err(BenchError::InvalidGrid("extent must be positive".into()));
    }
    Ok(())
}

struct TrialTask {
    ratio_idx: usize,
    sigma_idx: usize,
    trial: usize,
}

fn run_trial(grid: &SweepGrid, opts: &SweepOptions, task: &TrialTask) -> Vec<TrialOutcome> {
    let ratio = grid.outlier_ratios[task.ratio_idx];
    let sigma = grid.noise_sigmas[task.sigma_idx];
    let n_outliers = (ratio * grid.correspondences as f64).round() as usize;
    let n_inliers = grid.correspondences - n_outliers;
    let scene_seed = derive_scene_seed(grid.seed, task.ratio_idx, task.sigma_idx, task.trial);
    let spec = SceneSpec {
        dim: grid.dim,
        n_inliers,
        n_outliers,
        noise_sigma: sigma,
        extent: grid.extent,
        transform: crate::scene::PlantedTransform::Random,
        seed: scene_seed,
    };
    let scene = gen_scene(&spec).expect("grid-validated spec");

    let mut params = VerificationParams::for_dim(grid.dim);
    params.epsilon = grid.epsilon;
    if let Some(m) = grid.min_inliers {
        params.min_inliers = m;
    }

    grid.methods
        .iter()
        .map(|method| {
            let result = match method {
                Method::Clique => {
                    verify_clique(&scene.correspondences, &params).expect("validated params")
                }
                Method::Ransac => {
                    let rp = RansacParams {
                        iterations: grid.ransac_iterations,
                        inlier_tol: grid.epsilon,
                        sample_size: grid.dim.len(),
                        seed: splitmix64(scene_seed ^ 0x52414e53_41433151),
                    };
                    verify_ransac(&scene.correspondences, &rp, &params)
                        .expect("enough correspondences")
                }
            };
            let result = if opts.measure_time {
                result
            } else {
                result.without_timing()
            };
            evaluate_trial(&result, &scene)
        })
        .collect()
}

fn median(sorted: &mut [f64]) -> f64 {
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Runs every cell of the grid. Trials may run in parallel; aggregation
/// order (and therefore the report) is schedule-independent.
pub fn run_sweep(grid: &SweepGrid, opts: &SweepOptions) -> Result<SweepReport, BenchError> {
    validate_grid(grid)?;

    let tasks: Vec<TrialTask> = (0..grid.outlier_ratios.len())
        .flat_map(|ratio_idx| {
            (0..grid.noise_sigmas.len()).flat_map(move |sigma_idx| {
                (0..grid.trials).map(move |trial| TrialTask {
                    ratio_idx,
                    sigma_idx,
                    trial,
                })
            })
        })
        .collect();

    let outcomes: Vec<Vec<TrialOutcome>> = if opts.parallel {
        tasks.par_iter().map(|t| run_trial(grid, opts, t)).collect()
    } else {
        tasks.iter().map(|t| run_trial(grid, opts, t)).collect()
    };

    let mut cells = Vec::new();
    for ratio_idx in 0..grid.outlier_ratios.len() {
        for sigma_idx in 0..grid.noise_sigmas.len() {
            for (mi, method) in grid.methods.iter().enumerate() {
                let cell_outcomes: Vec<(usize, &TrialOutcome)> = tasks
                    .iter()
                    .zip(&outcomes)
                    .filter(|(t, _)| t.ratio_idx == ratio_idx && t.sigma_idx == sigma_idx)
                    .map(|(t, outs)| (t.trial, &outs[mi]))
                    .collect();
                cells.push(aggregate_cell(
                    grid.outlier_ratios[ratio_idx],
                    grid.noise_sigmas[sigma_idx],
                    *method,
                    &cell_outcomes,
                ));
            }
        }
    }

    Ok(SweepReport {
        seed: grid.seed,
        dim: grid.dim.len(),
        correspondences: grid.correspondences,
        trials_per_cell: grid.trials,
        epsilon: grid.epsilon,
        ransac_iterations: grid.ransac_iterations,
        cells,
    })
}

fn aggregate_cell(
    outlier_ratio: f64,
    sigma: f64,
    method: Method,
    outcomes: &[(usize, &TrialOutcome)],
) -> CellReport {
    let n = outcomes.len() as f64;
    let accepted = outcomes.iter().filter(|(_, o)| o.accepted).count();
    let mut rot_errs: Vec<f64> = outcomes
        .iter()
        .filter_map(|(_, o)| o.rotation_error)
        .collect();
    let mut trans_errs: Vec<f64> = outcomes
        .iter()
        .filter_map(|(_, o)| o.translation_error)
        .collect();
    let precision = outcomes
        .iter()
        .map(|(_, o)| o.inlier_precision)
        .sum::<f64>()
        / n;
    let recall = outcomes.iter().map(|(_, o)| o.inlier_recall).sum::<f64>() / n;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    CellReport {
        outlier_ratio,
        sigma,
        method: method.to_string(),
        accept_rate: accepted as f64 / n,
        rot_err_mean_rad: (!rot_errs.is_empty()).then(|| mean(&rot_errs)),
        trans_err_mean_m: (!trans_errs.is_empty()).then(|| mean(&trans_errs)),
        rot_err_median_rad: (!rot_errs.is_empty()).then(|| median(&mut rot_errs)),
        trans_err_median_m: (!trans_errs.is_empty()).then(|| median(&mut trans_errs)),
        precision,
        recall,
        f1,
        time_ms_mean: outcomes.iter().map(|(_, o)| o.elapsed_ms).sum::<f64>() / n,
        trials: outcomes
            .iter()
            .map(|(trial, o)| TrialRecord {
                trial: *trial,
                accepted: o.accepted,
                rotation_error_rad: o.rotation_error,
                translation_error_m: o.translation_error,
                precision: o.inlier_precision,
                recall: o.inlier_recall,
                elapsed_ms: o.elapsed_ms,
            })
            .collect(),
    }
}
