//! Synthetic planted scenes with ground truth, and per-trial metrics
//! against the planted labels.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::{rotation_geodesic_error, Dim, NPoint, NPointSet, RigidTransform};
use crate::matching::{Correspondence, CorrespondenceSet};
use crate::verify::{Method, VerificationResult};

pub const DEFAULT_EXTENT: f64 = 50.0;

#[derive(Debug, Error, PartialEq)]
pub enum BenchError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
}

/// The transform planted into a scene.
#[derive(Debug, Clone)]
pub enum PlantedTransform {
    /// Rotation uniform on SO(n), translation uniform in the extent box.
    Random,
    Fixed(RigidTransform),
}

/// Parameters for one synthetic scene.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub dim: Dim,
    pub n_inliers: usize,
    pub n_outliers: usize,
    /// Per-coordinate gaussian noise added to inlier query points, meters.
    pub noise_sigma: f64,
    /// Bounding-box half-width for sampled points, meters.
    pub extent: f64,
    pub transform: PlantedTransform,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(
        dim: Dim,
        n_inliers: usize,
        n_outliers: usize,
        noise_sigma: f64,
        seed: u64,
    ) -> SceneSpec {
        SceneSpec {
            dim,
            n_inliers,
            n_outliers,
            noise_sigma,
            extent: DEFAULT_EXTENT,
            transform: PlantedTransform::Random,
            seed,
        }
    }
}

/// Ground truth attached to a generated scene.
#[derive(Debug, Clone)]
pub struct SceneTruth {
    pub transform: RigidTransform,
    /// Aligned with the (shuffled) correspondence order.
    pub inlier_flags: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct Scene {
    /// The reference map M.
    pub reference: NPointSet,
    /// The query map Q.
    pub query: NPointSet,
    pub correspondences: CorrespondenceSet,
    pub truth: SceneTruth,
}

impl Scene {
    /// Planted inlier identities as (m_idx, q_idx) pairs.
    pub fn planted_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.correspondences
            .iter()
            .zip(&self.truth.inlier_flags)
            .filter(|(_, &flag)| flag)
            .map(|(c, _)| (c.m_idx, c.q_idx))
            .collect()
    }
}

pub fn random_unit_axis(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-6 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

/// Rotation drawn uniformly on SO(n): uniform angle in 2D, uniform unit
/// quaternion in 3D. Zero translation.
pub fn random_rotation(dim: Dim, rng: &mut impl Rng) -> RigidTransform {
    match dim {
        Dim::Two => RigidTransform::rotation_2d(rng.random_range(0.0..std::f64::consts::TAU)),
        Dim::Three => loop {
            let q: [f64; 4] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-6 {
                continue;
            }
            let (w, x, y, z) = (q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm);
            let rotation = [
                [
                    1.0 - 2.0 * (y * y + z * z),
                    2.0 * (x * y - w * z),
                    2.0 * (x * z + w * y),
                ],
                [
                    2.0 * (x * y + w * z),
                    1.0 - 2.0 * (x * x + z * z),
                    2.0 * (y * z - w * x),
                ],
                [
                    2.0 * (x * z - w * y),
                    2.0 * (y * z + w * x),
                    1.0 - 2.0 * (x * x + y * y),
                ],
            ];
            return RigidTransform::from_parts(Dim::Three, rotation, [0.0; 3]);
        },
    }
}

/// Uniform rotation plus translation uniform in `[-extent, extent]^n`.
pub fn random_rigid_transform(dim: Dim, extent: f64, rng: &mut impl Rng) -> RigidTransform {
    let rot = random_rotation(dim, rng);
    let d = dim.len();
    let mut t = vec![0.0; d];
    for c in t.iter_mut() {
        *c = rng.random_range(-extent..=extent);
    }
    rot.with_translation(&t).expect("finite translation")
}

pub fn random_point_set(dim: Dim, n: usize, extent: f64, rng: &mut impl Rng) -> NPointSet {
    let mut set = NPointSet::new(dim);
    for _ in 0..n {
        set.push(random_point(dim, extent, rng))
            .expect("matching dim");
    }
    set
}

fn random_point(dim: Dim, extent: f64, rng: &mut impl Rng) -> NPoint {
    let d = dim.len();
    let mut coords = [0.0; 3];
    for c in coords.iter_mut().take(d) {
        *c = rng.random_range(-extent..=extent);
    }
    NPoint::from_parts(dim, coords)
}

/// Generates a planted scene: inlier pairs follow `q = R m + t + noise`,
/// outlier pairs are sampled independently on both sides, and the
/// correspondence order is shuffled. Fully reproducible from the seed.
pub fn gen_scene(spec: &SceneSpec) -> Result<Scene, BenchError> {
    if spec.n_inliers + spec.n_outliers == 0 {
        return Err(BenchError::InvalidSpec(
            "need at least one correspondence".into(),
        ));
    }
    if !spec.noise_sigma.is_finite() || spec.noise_sigma < 0.0 {
        return Err(BenchError::InvalidSpec(format!(
            "noise_sigma must be finite and >= 0, got {}",
            spec.noise_sigma
        )));
    }
    if !spec.extent.is_finite() || spec.extent <= 0.0 {
        return Err(BenchError::InvalidSpec(format!(
            "extent must be finite and > 0, got {}",
            spec.extent
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let transform = match &spec.transform {
        PlantedTransform::Random => random_rigid_transform(spec.dim, spec.extent, &mut rng),
        PlantedTransform::Fixed(t) => {
            if t.dim() != spec.dim {
                return Err(BenchError::InvalidSpec(
                    "planted transform dim != scene dim".into(),
                ));
            }
            *t
        }
    };

    let d = spec.dim.len();
    let total = spec.n_inliers + spec.n_outliers;
    let mut reference = NPointSet::new(spec.dim);
    let mut query = NPointSet::new(spec.dim);
    let mut items = Vec::with_capacity(total);
    for k in 0..total {
        let m = random_point(spec.dim, spec.extent, &mut rng);
        let q = if k < spec.n_inliers {
            let mapped = transform.apply_point(&m);
            let mut coords = [0.0; 3];
            coords[..d].copy_from_slice(mapped.coords());
            for c in coords.iter_mut().take(d) {
                let z: f64 = rng.sample(StandardNormal);
                *c += spec.noise_sigma * z;
            }
            NPoint::from_parts(spec.dim, coords)
        } else {
            random_point(spec.dim, spec.extent, &mut rng)
        };
        reference.push(m).expect("dim");
        query.push(q).expect("dim");
        items.push((k, m, q, k < spec.n_inliers));
    }

    items.shuffle(&mut rng);

    let mut correspondences = CorrespondenceSet::new(spec.dim);
    let mut inlier_flags = Vec::with_capacity(total);
    for (k, m, q, is_inlier) in items {
        correspondences
            .push(Correspondence {
                m,
                q,
                m_idx: k,
                q_idx: k,
                descriptor_distance: 0,
            })
            .expect("dim");
        inlier_flags.push(is_inlier);
    }

    Ok(Scene {
        reference,
        query,
        correspondences,
        truth: SceneTruth {
            transform,
            inlier_flags,
        },
    })
}

/// Per-trial metrics of a verification result against planted labels.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub method: Method,
    pub accepted: bool,
    /// Radians; present only on accepted trials.
    pub rotation_error: Option<f64>,
    /// Meters; present only on accepted trials.
    pub translation_error: Option<f64>,
    pub inlier_precision: f64,
    pub inlier_recall: f64,
    pub elapsed_ms: f64,
}

/// Scores a verification result against the scene's planted labels.
///
/// precision = |reported ∩ planted| / |reported| (1 when nothing was
/// reported and the loop was rejected), recall = |reported ∩ planted| /
/// |planted| (1 when nothing was planted).
pub fn evaluate_trial(result: &VerificationResult, scene: &Scene) -> TrialOutcome {
    let planted = scene.planted_pairs();
    let reported: BTreeSet<(usize, usize)> =
        result.inliers.iter().map(|c| (c.m_idx, c.q_idx)).collect();
    let hits = reported.intersection(&planted).count();

    let precision = if reported.is_empty() {
        if result.accepted {
            0.0
        } else {
            1.0
        }
    } else {
        hits as f64 / reported.len() as f64
    };
    let recall = if planted.is_empty() {
        1.0
    } else {
        hits as f64 / planted.len() as f64
    };

    let (rotation_error, translation_error) = if result.accepted {
        match &result.transform {
            Some(t) => {
                let rot = rotation_geodesic_error(t, &scene.truth.transform).unwrap_or(f64::NAN);
                let terr: f64 = t
                    .translation()
                    .iter()
                    .zip(scene.truth.transform.translation())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                (Some(rot), Some(terr))
            }
            None => (None, None),
        }
    } else {
        (None, None)
    };

    TrialOutcome {
        method: result.method,
        accepted: result.accepted,
        rotation_error,
        translation_error,
        inlier_precision: precision,
        inlier_recall: recall,
        elapsed_ms: result.elapsed_ms,
    }
}
