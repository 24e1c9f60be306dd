//! End-to-end loop-closure verification (compatibility graph, maximum
//! clique, rigid fit, inlier-count acceptance) plus the seeded RANSAC
//! baseline it is compared against.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::clique::max_clique;
use crate::geometry::{solve_rigid, Dim, NPointSet, RigidTransform};
use crate::graph::{build_graph, GraphError};
use crate::matching::CorrespondenceSet;

/// Minimum consistent inliers to accept a loop closure in 3D.
pub const MIN_INLIERS_3D: usize = 5;
/// Minimum consistent inliers to accept a loop closure in 2D.
pub const MIN_INLIERS_2D: usize = 10;
/// Fixed-iteration RANSAC baseline budget.
pub const DEFAULT_RANSAC_ITERATIONS: u32 = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("too few correspondences: {have}, need at least {need}")]
    TooFewCorrespondences { have: usize, need: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    DomainError(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Clique,
    Ransac,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Clique => "clique",
            Method::Ransac => "ransac",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clique" => Ok(Method::Clique),
            "ransac" => Ok(Method::Ransac),
            other => Err(format!(
                "unknown method '{other}' (expected clique or ransac)"
            )),
        }
    }
}

/// Verification thresholds.
#[derive(Debug, Clone)]
pub struct VerificationParams {
    /// Descriptor match threshold, bits (used by the matching stage).
    pub tau_hamming: u32,
    /// Pairwise rigidity tolerance, meters.
    pub epsilon: f64,
    /// Minimum clique/consensus size to accept.
    pub min_inliers: usize,
    /// Optional clique-search node budget.
    pub clique_budget: Option<u64>,
}

impl VerificationParams {
    pub fn for_dim(dim: Dim) -> VerificationParams {
        VerificationParams {
            tau_hamming: crate::descriptor::DEFAULT_MATCH_TAU,
            epsilon: crate::graph::DEFAULT_EPSILON,
            min_inliers: match dim {
                Dim::Two => MIN_INLIERS_2D,
                Dim::Three => MIN_INLIERS_3D,
            },
            clique_budget: None,
        }
    }
}

/// RANSAC baseline configuration.
#[derive(Debug, Clone)]
pub struct RansacParams {
    pub iterations: u32,
    /// Per-point residual tolerance, meters.
    pub inlier_tol: f64,
    /// Minimal sample size (the spatial dimension).
    pub sample_size: usize,
    pub seed: u64,
}

impl RansacParams {
    pub fn for_dim(dim: Dim) -> RansacParams {
        RansacParams {
            iterations: DEFAULT_RANSAC_ITERATIONS,
            inlier_tol: crate::graph::DEFAULT_EPSILON,
            sample_size: dim.len(),
            seed: 0,
        }
    }
}

/// Outcome of a verification run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationResult {
    pub method: Method,
    pub accepted: bool,
    /// The consistent subset C* of the input correspondences.
    pub inliers: CorrespondenceSet,
    pub transform: Option<RigidTransform>,
    pub inlier_count: usize,
    /// RMS residual over the inliers under `transform`, when fitted.
    pub rmse: Option<f64>,
    pub elapsed_ms: f64,
    /// Set when the inlier set was rank-deficient for fitting.
    pub degenerate_fit: bool,
}

impl VerificationResult {
    /// Copy with the wall-clock field zeroed, for deterministic comparison
    /// and serialization.
    pub fn without_timing(mut self) -> VerificationResult {
        self.elapsed_ms = 0.0;
        self
    }

    fn rejected(method: Method, dim: Dim, elapsed_ms: f64) -> VerificationResult {
        VerificationResult {
            method,
            accepted: false,
            inliers: CorrespondenceSet::new(dim),
            transform: None,
            inlier_count: 0,
            rmse: None,
            elapsed_ms,
            degenerate_fit: false,
        }
    }
}

fn fit_subset(
    inliers: &CorrespondenceSet,
) -> Result<RigidTransform, crate::geometry::GeometryError> {
    let mut src = NPointSet::new(inliers.dim());
    let mut dst = NPointSet::new(inliers.dim());
    for c in inliers.iter() {
        src.push(c.m).expect("uniform dim");
        dst.push(c.q).expect("uniform dim");
    }
    solve_rigid(&src, &dst)
}

/// Deterministic verification: builds the compatibility graph, extracts the
/// maximum clique, fits the transform on it, and accepts iff the clique
/// reaches `min_inliers` and the fit is well-posed.
pub fn verify_clique(
    c: &CorrespondenceSet,
    params: &VerificationParams,
) -> Result<VerificationResult, VerifyError> {
    let start = Instant::now();
    if !params.epsilon.is_finite() || params.epsilon <= 0.0 {
        return Err(GraphError::NonPositiveEpsilon(params.epsilon).into());
    }
    if params.min_inliers == 0 {
        return Err(VerifyError::InvalidParams(
            "min_inliers must be positive".into(),
        ));
    }
    if c.is_empty() {
        return Ok(VerificationResult::rejected(
            Method::Clique,
            c.dim(),
            start.elapsed().as_secs_f64() * 1e3,
        ));
    }

    let graph = build_graph(c, params.epsilon)?;
    let clique = max_clique(graph.graph(), params.clique_budget);
    let inliers = c.subset(&clique.vertices);

    let mut degenerate_fit = false;
    let transform = if clique.size >= c.dim().len() {
        match fit_subset(&inliers) {
            Ok(t) => Some(t),
            Err(_) => {
                degenerate_fit = true;
                None
            }
        }
    } else {
        None
    };
    let rmse = transform
        .as_ref()
        .map(|t| inliers.residual_rmse(t).expect("non-empty inliers"));
    let accepted = clique.size >= params.min_inliers && transform.is_some();

    Ok(VerificationResult {
        method: Method::Clique,
        accepted,
        inlier_count: inliers.len(),
        inliers,
        transform,
        rmse,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        degenerate_fit,
    })
}

/// Fixed-iteration RANSAC baseline: seeded minimal samples, consensus
/// counting under `inlier_tol`, final refit on the best consensus set.
/// Degenerate samples consume their iteration. Fully reproducible per seed.
pub fn verify_ransac(
    c: &CorrespondenceSet,
    ransac: &RansacParams,
    params: &VerificationParams,
) -> Result<VerificationResult, VerifyError> {
    let start = Instant::now();
    if ransac.iterations == 0 {
        return Err(VerifyError::InvalidParams("iterations must be >= 1".into()));
    }
    if !ransac.inlier_tol.is_finite() || ransac.inlier_tol <= 0.0 {
        return Err(VerifyError::InvalidParams(format!(
            "inlier_tol must be positive, got {}",
            ransac.inlier_tol
        )));
    }
    if params.min_inliers == 0 {
        return Err(VerifyError::InvalidParams(
            "min_inliers must be positive".into(),
        ));
    }
    let dim = c.dim();
    if ransac.sample_size < dim.len() {
        return Err(VerifyError::InvalidParams(format!(
            "sample_size {} below dimension {}",
            ransac.sample_size,
            dim.len()
        )));
    }
    let n = c.len();
    if n < ransac.sample_size {
        return Err(VerifyError::TooFewCorrespondences {
            have: n,
            need: ransac.sample_size,
        });
    }

    let items = c.items();
    let mut rng = ChaCha8Rng::seed_from_u64(ransac.seed);
    let mut best: Option<(Vec<usize>, RigidTransform)> = None;
    for _ in 0..ransac.iterations {
        let sample: Vec<usize> =
            rand::seq::index::sample(&mut rng, n, ransac.sample_size).into_vec();
        let subset = c.subset(&sample);
        let Ok(candidate) = fit_subset(&subset) else {
            continue; // degenerate sample, iteration consumed
        };
        let mut consensus = Vec::new();
        for (i, corr) in items.iter().enumerate() {
            let mapped = candidate.apply_point(&corr.m);
            if mapped.distance_to(&corr.q) < ransac.inlier_tol {
                consensus.push(i);
            }
        }
        if best.as_ref().is_none_or(|(b, _)| consensus.len() > b.len()) && !consensus.is_empty() {
            best = Some((consensus, candidate));
        }
    }

    let Some((consensus, candidate)) = best else {
        return Ok(VerificationResult::rejected(
            Method::Ransac,
            dim,
            start.elapsed().as_secs_f64() * 1e3,
        ));
    };

    let inliers = c.subset(&consensus);
    // refit on the final consensus; fall back to the sample fit if the
    // consensus itself is rank-deficient
    let transform = fit_subset(&inliers).unwrap_or(candidate);
    let rmse = inliers
        .residual_rmse(&transform)
        .expect("non-empty consensus");
    let accepted = inliers.len() >= params.min_inliers;

    Ok(VerificationResult {
        method: Method::Ransac,
        accepted,
        inlier_count: inliers.len(),
        inliers,
        transform: Some(transform),
        rmse: Some(rmse),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        degenerate_fit: false,
    })
}

/// The classical RANSAC iteration count `ceil(log(1-p) / log(1-w^s))` for
/// inlier ratio `w`, success probability `p`, and sample size `s`, clamped
/// to at least one iteration.
pub fn ransac_iterations(w: f64, p: f64, s: u32) -> Result<u32, VerifyError> {
    if !w.is_finite() || !(0.0 < w && w < 1.0) {
        return Err(VerifyError::DomainError(format!(
            "inlier ratio w = {w} outside (0, 1)"
        )));
    }
    if !p.is_finite() || !(0.0 < p && p < 1.0) {
        return Err(VerifyError::DomainError(format!(
            "success probability p = {p} outside (0, 1)"
        )));
    }
    if s == 0 {
        return Err(VerifyError::DomainError("sample size must be >= 1".into()));
    }
    let ws = w.powi(s as i32);
    let ratio = (1.0 - p).ln() / (1.0 - ws).ln();
    if !ratio.is_finite() || ratio > u32::MAX as f64 {
        return Err(VerifyError::DomainError(format!(
            "iteration count not representable for w={w}, p={p}, s={s}"
        )));
    }
    Ok((ratio.ceil() as u32).max(1))
}
