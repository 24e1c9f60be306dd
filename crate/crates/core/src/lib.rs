//! Deterministic loop-closure verification for SLAM front ends.
//!
//! Candidate loop closures arrive as tentative keypoint correspondences
//! between two local maps. Instead of random-sample consensus, verification
//! here is combinatorial: correspondences become vertices of a
//! compatibility graph whose edges join pairs with matching within-map
//! distances, the exact maximum clique of that graph is the largest
//! mutually consistent subset, and a closed-form rigid fit on the clique
//! yields the relative pose. A loop closure is accepted when the clique
//! reaches a minimum inlier count.
//!
//! The crate also ships the surrounding toolkit: binary descriptors with a
//! Hamming search tree for matching, a seeded RANSAC baseline, a synthetic
//! planted-scene benchmark comparing the two verifiers, and the text file
//! formats used by the CLI.

// Indexed loops over dim x dim blocks read better than iterator chains in
// the dimension-generic matrix code.
#![allow(clippy::needless_range_loop)]

pub mod clique;
pub mod descriptor;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod matching;
pub mod scene;
pub mod sweep;
pub mod verify;

pub use clique::{brute_force_max_clique, max_clique, CliqueResult};
pub use descriptor::{
    binarize_median, hamming, linear_scan, BinaryDescriptor, DescriptorEntry, HammingTree,
};
pub use geometry::{
    residual_rmse, rotation_geodesic_error, solve_rigid, Dim, NPoint, NPointSet, RigidTransform,
};
pub use graph::{build_graph, consistent, BitGraph, CompatibilityGraph};
pub use matching::{match_maps, Correspondence, CorrespondenceSet, MatchParams};
pub use scene::{evaluate_trial, gen_scene, Scene, SceneSpec, TrialOutcome};
pub use sweep::{run_sweep, SweepGrid, SweepOptions, SweepReport};
pub use verify::{
    ransac_iterations, verify_clique, verify_ransac, Method, RansacParams, VerificationParams,
    VerificationResult,
};
