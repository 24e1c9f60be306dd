//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use loopclose_core::clique::{brute_force_max_clique, max_clique};
use loopclose_core::descriptor::{linear_scan, BinaryDescriptor, DescriptorEntry, HammingTree};
use loopclose_core::geometry::{rotation_geodesic_error, solve_rigid, Dim, NPoint, NPointSet};
use loopclose_core::graph::{build_graph, BitGraph};
use loopclose_core::scene::{gen_scene, random_point_set, random_rigid_transform, SceneSpec};
use loopclose_core::sweep::{run_sweep, SweepGrid, SweepOptions};
use loopclose_core::verify::{
    ransac_iterations, verify_clique, verify_ransac, Method, RansacParams, VerificationParams,
};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance [{}] {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion failed: {criterion} ({detail})");
}

fn er_graph(n: usize, p: f64, rng: &mut impl Rng) -> BitGraph {
    let mut g = BitGraph::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                g.add_edge(i, j);
            }
        }
    }
    g
}

#[test]
fn criterion_1_clique_exactness_vs_brute_force() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC11E);
    let mut mismatches = 0;
    let mut checked = 0;
    for i in 0..200 {
        let n = 6 + (i % 13); // 6..=18
        let p = [0.3, 0.5, 0.8][i % 3];
        let g = er_graph(n, p, &mut rng);
        let fast = max_clique(&g, None);
        let brute = brute_force_max_clique(&g).unwrap();
        if fast.size != brute.size || fast.vertices != brute.vertices || !fast.optimal {
            mismatches += 1;
        }
        checked += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "1 clique exactness (200 random graphs, n<=18)",
        mismatches == 0 && elapsed < 30.0,
        &format!("{checked} graphs, {mismatches} mismatches, {elapsed:.2}s"),
    );
}

#[test]
fn criterion_2_rigid_fit_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF17);
    let mut worst_rot: f64 = 0.0;
    let mut worst_trans: f64 = 0.0;
    let mut improper = 0;
    for i in 0..100 {
        let dim = if i % 2 == 0 { Dim::Three } else { Dim::Two };
        let planted = random_rigid_transform(dim, 50.0, &mut rng);
        let src = random_point_set(dim, 4 + i % 20, 50.0, &mut rng);
        let dst = planted.apply(&src).unwrap();
        let got = solve_rigid(&src, &dst).unwrap();
        worst_rot = worst_rot.max(rotation_geodesic_error(&got, &planted).unwrap());
        let terr: f64 = got
            .translation()
            .iter()
            .zip(planted.translation())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst_trans = worst_trans.max(terr);
        if !is_proper(&got) {
            improper += 1;
        }
    }
    // mirrored-input stress: reflected targets must still give det(R) = +1
    for i in 0..20 {
        let dim = if i % 2 == 0 { Dim::Three } else { Dim::Two };
        let src = random_point_set(dim, 10, 20.0, &mut rng);
        let dst = NPointSet::from_points(
            src.iter()
                .map(|pnt| {
                    let mut c = pnt.coords().to_vec();
                    c[0] = -c[0];
                    NPoint::new(&c).unwrap()
                })
                .collect(),
        )
        .unwrap();
        let got = solve_rigid(&src, &dst).unwrap();
        if !is_proper(&got) {
            improper += 1;
        }
    }
    report(
        "2 rigid-fit exactness (100 planted scenes + mirror stress)",
        worst_rot < 1e-9 && worst_trans < 1e-9 && improper == 0,
        &format!("worst rot {worst_rot:.2e} rad, worst trans {worst_trans:.2e} m, {improper} improper rotations"),
    );
}

fn is_proper(t: &loopclose_core::geometry::RigidTransform) -> bool {
    // RigidTransform::new re-validates orthonormality and det = +1 at 1e-9
    loopclose_core::geometry::RigidTransform::new(t.dim(), &t.rotation_row_major(), t.translation())
        .is_ok()
}

#[test]
fn criterion_3_consistency_graph_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE93);
    let mut bad_pairs = 0;
    for i in 0..50u64 {
        let n = 20 + (i as usize * 7) % 181; // up to 200
        let dim = if i % 2 == 0 { Dim::Three } else { Dim::Two };
        let scene = gen_scene(&SceneSpec::new(dim, n / 2, n - n / 2, 0.3, 1000 + i)).unwrap();
        let eps = 0.25 + rng.random_range(0.0..1.5);
        let g = build_graph(&scene.correspondences, eps).unwrap();
        let items = scene.correspondences.items();
        for a in 0..n {
            for b in 0..n {
                let expect = a != b
                    && (items[a].m.distance_to(&items[b].m) - items[a].q.distance_to(&items[b].q))
                        .abs()
                        < eps;
                if g.graph().has_edge(a, b) != expect {
                    bad_pairs += 1;
                }
            }
        }
    }
    report(
        "3 pairwise-consistency adjacency equals double-loop oracle",
        bad_pairs == 0,
        &format!("{bad_pairs} mismatched adjacency bits over 50 sets"),
    );
}

#[test]
fn criterion_4_ransac_iteration_formula() {
    // oracle: ceil(ln(0.001)/ln(1 - 0.027)) computed independently with
    // 60-digit arithmetic; the ratio is 252.3731545402618 -> 253
    let oracle = 253;
    let got = ransac_iterations(0.3, 0.999, 3).unwrap();
    report(
        "4 RANSAC iteration formula (w=0.3, p=0.999, s=3)",
        got == oracle,
        &format!("got {got}, oracle {oracle}"),
    );
}

#[test]
fn criterion_5_robustness_ordering_at_high_outlier_ratio() {
    let iterations = ransac_iterations(0.3, 0.999, 3).unwrap();
    let params = VerificationParams::for_dim(Dim::Three);
    let mut clique_accepts = 0;
    let mut ransac_accepts = 0;
    let mut clique_rot_errors = Vec::new();
    for trial in 0..100u64 {
        let scene = gen_scene(&SceneSpec::new(Dim::Three, 10, 90, 0.05, 50_000 + trial)).unwrap();
        let c = verify_clique(&scene.correspondences, &params).unwrap();
        if c.accepted {
            clique_accepts += 1;
            let rot =
                rotation_geodesic_error(c.transform.as_ref().unwrap(), &scene.truth.transform)
                    .unwrap();
            clique_rot_errors.push(rot);
        }
        let rp = RansacParams {
            iterations,
            seed: 90_000 + trial,
            ..RansacParams::for_dim(Dim::Three)
        };
        let r = verify_ransac(&scene.correspondences, &rp, &params).unwrap();
        if r.accepted {
            ransac_accepts += 1;
        }
    }
    clique_rot_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_rot = if clique_rot_errors.is_empty() {
        f64::INFINITY
    } else {
        clique_rot_errors[clique_rot_errors.len() / 2]
    };
    report(
        "5 robustness ordering at outlier ratio 0.9",
        clique_accepts >= ransac_accepts && median_rot < 0.01,
        &format!(
            "clique {clique_accepts}/100 accepted vs ransac-{iterations} {ransac_accepts}/100; clique median rot err {median_rot:.2e} rad"
        ),
    );
}

#[test]
fn criterion_6_determinism_across_runs_and_parallelism() {
    // verify_clique twice on the same input
    let scene = gen_scene(&SceneSpec::new(Dim::Three, 30, 70, 0.05, 0xD)).unwrap();
    let params = VerificationParams::for_dim(Dim::Three);
    let a = verify_clique(&scene.correspondences, &params)
        .unwrap()
        .without_timing();
    let b = verify_clique(&scene.correspondences, &params)
        .unwrap()
        .without_timing();
    let verify_identical =
        loopclose_core::io::result_to_json(&a) == loopclose_core::io::result_to_json(&b);

    // a representative sweep, twice and across parallelism settings, with
    // wall-clock reporting off so outputs are byte-comparable
    let grid = SweepGrid {
        outlier_ratios: vec![0.3, 0.8],
        noise_sigmas: vec![0.0, 0.05],
        methods: vec![Method::Clique, Method::Ransac],
        trials: 25,
        correspondences: 60,
        ransac_iterations: ransac_iterations(0.3, 0.999, 3).unwrap(),
        seed: 0xBE_AC,
        ..SweepGrid::default()
    };
    let parallel = SweepOptions {
        parallel: true,
        measure_time: false,
    };
    let sequential = SweepOptions {
        parallel: false,
        measure_time: false,
    };
    let r1 = run_sweep(&grid, &parallel).unwrap();
    let r2 = run_sweep(&grid, &parallel).unwrap();
    let r3 = run_sweep(&grid, &sequential).unwrap();
    let sweep_identical = r1.to_csv() == r2.to_csv()
        && r1.to_csv() == r3.to_csv()
        && r1.to_json(true) == r2.to_json(true)
        && r1.to_json(true) == r3.to_json(true);

    report(
        "6 byte-identical outputs across runs and parallelism settings",
        verify_identical && sweep_identical,
        &format!("verify identical: {verify_identical}, sweep identical: {sweep_identical}"),
    );
}

#[test]
fn criterion_7_hamming_tree_soundness_and_recall() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7AEE);

    // soundness: exact containment on random corpora
    let mut unsound = 0;
    for _ in 0..20 {
        let mut tree = HammingTree::with_leaf_capacity(64, 8).unwrap();
        let corpus: Vec<DescriptorEntry> = (0..150)
            .map(|i| DescriptorEntry {
                descriptor: random_descriptor(64, &mut rng),
                keypoint_id: i,
                map_id: 0,
            })
            .collect();
        for e in &corpus {
            tree.insert(e.clone()).unwrap();
        }
        let q = random_descriptor(64, &mut rng);
        let tau = rng.random_range(0..40);
        let scan_ids: std::collections::HashSet<usize> = linear_scan(corpus.iter(), &q, tau)
            .unwrap()
            .iter()
            .map(|(e, _)| e.keypoint_id)
            .collect();
        for (e, d) in tree.query(&q, tau).unwrap() {
            if d > tau || !scan_ids.contains(&e.keypoint_id) {
                unsound += 1;
            }
        }
    }

    // recall on the 1000-descriptor corpus with <= 10-bit perturbations
    let corpus: Vec<DescriptorEntry> = (0..1000)
        .map(|i| DescriptorEntry {
            descriptor: random_descriptor(256, &mut rng),
            keypoint_id: i,
            map_id: 0,
        })
        .collect();
    let mut tree = HammingTree::new(256).unwrap();
    for e in &corpus {
        tree.insert(e.clone()).unwrap();
    }
    let mut found = 0usize;
    let mut expected = 0usize;
    for e in &corpus {
        let mut q = e.descriptor.clone();
        let flips = rng.random_range(0..=10);
        let mut flipped = std::collections::HashSet::new();
        while flipped.len() < flips {
            let bit = rng.random_range(0..256);
            if flipped.insert(bit) {
                q.set_bit(bit, !q.bit(bit));
            }
        }
        let scan = linear_scan(corpus.iter(), &q, 50).unwrap();
        let tree_ids: std::collections::HashSet<usize> = tree
            .query(&q, 50)
            .unwrap()
            .iter()
            .map(|(t, _)| t.keypoint_id)
            .collect();
        expected += scan.len();
        found += scan
            .iter()
            .filter(|(s, _)| tree_ids.contains(&s.keypoint_id))
            .count();
    }
    let recall = found as f64 / expected as f64;
    report(
        "7 tree soundness exact + recall >= 0.9 at tau=50",
        unsound == 0 && recall >= 0.9,
        &format!("{unsound} unsound results; recall {recall:.3} ({found}/{expected})"),
    );
}

fn random_descriptor(len_bits: usize, rng: &mut impl Rng) -> BinaryDescriptor {
    let bytes = (0..len_bits / 8).map(|_| rng.random()).collect();
    BinaryDescriptor::from_bytes(bytes).unwrap()
}

#[test]
fn criterion_8_runtime_envelope_at_200_correspondences() {
    let params = VerificationParams::for_dim(Dim::Three);
    let mut times = Vec::new();
    for trial in 0..11u64 {
        let scene = gen_scene(&SceneSpec {
            dim: Dim::Three,
            n_inliers: 100,
            n_outliers: 100,
            noise_sigma: 0.05,
            extent: 50.0,
            transform: loopclose_core::scene::PlantedTransform::Random,
            seed: 8_800 + trial,
        })
        .unwrap();
        let result = verify_clique(&scene.correspondences, &params).unwrap();
        assert!(result.accepted);
        times.push(result.elapsed_ms);
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = times[times.len() / 2];
    report(
        "8 runtime envelope: 200-correspondence verify_clique median < 100 ms",
        median < 100.0,
        &format!("median {median:.2} ms over {} scenes", times.len()),
    );
}

#[test]
fn criterion_9_min_inlier_threshold_boundaries() {
    let mut ok = true;
    let mut detail = String::new();
    for (dim, reject_n, accept_n) in [(Dim::Three, 4usize, 5usize), (Dim::Two, 9, 10)] {
        let params = VerificationParams::for_dim(dim);
        // planted cliques of exactly the boundary sizes, plus isolated
        // outliers that cannot reach the planted clique size
        let rejected = gen_scene(&SceneSpec::new(dim, reject_n, 3, 0.0, 0x99)).unwrap();
        let r = verify_clique(&rejected.correspondences, &params).unwrap();
        let accepted = gen_scene(&SceneSpec::new(dim, accept_n, 3, 0.0, 0x99)).unwrap();
        let a = verify_clique(&accepted.correspondences, &params).unwrap();
        ok &= r.inlier_count == reject_n && !r.accepted;
        ok &= a.inlier_count == accept_n && a.accepted;
        detail.push_str(&format!(
            "{}D: size {} -> {}, size {} -> {}; ",
            dim.len(),
            r.inlier_count,
            if r.accepted { "accepted" } else { "rejected" },
            a.inlier_count,
            if a.accepted { "accepted" } else { "rejected" },
        ));
    }
    report("9 min-inlier boundary (4/5 in 3D, 9/10 in 2D)", ok, &detail);
}
