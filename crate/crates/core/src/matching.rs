//! Tentative correspondences between a query map and a reference map,
//! produced from binary-descriptor matches.

use thiserror::Error;

use crate::descriptor::{hamming, linear_scan, BinaryDescriptor, DescriptorError, HammingTree};
use crate::geometry::{Dim, GeometryError, NPoint, NPointSet, RigidTransform};

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error("dimension mismatch between query and reference maps")]
    DimMismatch,
    #[error("{points} keypoints but {descriptors} descriptors")]
    CountMismatch { points: usize, descriptors: usize },
    #[error("descriptor entry references keypoint {id} but the map has {len} points")]
    InvalidKeypointId { id: usize, len: usize },
}

/// A tentative point-pair match: `m` from the reference map, `q` from the
/// query map.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pub m: NPoint,
    pub q: NPoint,
    pub m_idx: usize,
    pub q_idx: usize,
    pub descriptor_distance: u32,
}

/// Ordered list of correspondences sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSet {
    dim: Dim,
    items: Vec<Correspondence>,
}

impl CorrespondenceSet {
    pub fn new(dim: Dim) -> CorrespondenceSet {
        CorrespondenceSet {
            dim,
            items: Vec::new(),
        }
    }

    pub fn from_items(
        dim: Dim,
        items: Vec<Correspondence>,
    ) -> Result<CorrespondenceSet, MatchError> {
        if items.iter().any(|c| c.m.dim() != dim || c.q.dim() != dim) {
            return Err(MatchError::DimMismatch);
        }
        Ok(CorrespondenceSet { dim, items })
    }

    pub fn push(&mut self, c: Correspondence) -> Result<(), MatchError> {
        if c.m.dim() != self.dim || c.q.dim() != self.dim {
            return Err(MatchError::DimMismatch);
        }
        self.items.push(c);
        Ok(())
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Correspondence> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Correspondence> {
        self.items.iter()
    }

    pub fn items(&self) -> &[Correspondence] {
        &self.items
    }

    /// The sub-set at the given positions, preserving the given order.
    /// Panics on out-of-range positions.
    pub fn subset(&self, positions: &[usize]) -> CorrespondenceSet {
        CorrespondenceSet {
            dim: self.dim,
            items: positions.iter().map(|&i| self.items[i].clone()).collect(),
        }
    }

    /// RMS of `||q - R m - t||` over the set.
    pub fn residual_rmse(&self, t: &RigidTransform) -> Result<f64, GeometryError> {
        crate::geometry::residual_rmse(t, self.items.iter().map(|c| (&c.m, &c.q)))
    }
}

/// Matching knobs: threshold, mutual-best filtering, and whether to bypass
/// the tree with an exhaustive scan.
#[derive(Debug, Clone, Copy)]
pub struct MatchParams {
    pub tau: u32,
    pub mutual: bool,
    pub exhaustive: bool,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            tau: crate::descriptor::DEFAULT_MATCH_TAU,
            mutual: false,
            exhaustive: false,
        }
    }
}

/// Builds the tentative correspondence set: each query descriptor is paired
/// with its best reference match within `tau` (ties to the lowest reference
/// keypoint id). With `mutual` set, a pair survives only if the query is
/// also the reference entry's best match. Empty inputs yield an empty set.
pub fn match_maps(
    query_points: &NPointSet,
    query_descriptors: &[BinaryDescriptor],
    reference_points: &NPointSet,
    reference: &HammingTree,
    params: &MatchParams,
) -> Result<CorrespondenceSet, MatchError> {
    if query_points.len() != query_descriptors.len() {
        return Err(MatchError::CountMismatch {
            points: query_points.len(),
            descriptors: query_descriptors.len(),
        });
    }
    let dim = query_points.dim();
    if reference_points.dim() != dim && !reference_points.is_empty() && !query_points.is_empty() {
        return Err(MatchError::DimMismatch);
    }
    let mut out = CorrespondenceSet::new(dim);
    if query_points.is_empty() || reference.is_empty() {
        return Ok(out);
    }

    struct Candidate {
        q_idx: usize,
        m_idx: usize,
        distance: u32,
        descriptor: BinaryDescriptor,
    }

    let ref_entries = params.exhaustive.then(|| reference.entries());
    let mut candidates: Vec<Candidate> = Vec::new();
    for (q_idx, qd) in query_descriptors.iter().enumerate() {
        let hits = match &ref_entries {
            Some(entries) => linear_scan(entries.iter().copied(), qd, params.tau)?,
            None => reference.query(qd, params.tau)?,
        };
        let Some(best_distance) = hits.first().map(|(_, d)| *d) else {
            continue;
        };
        // ties by lowest reference keypoint id
        let best = hits
            .iter()
            .take_while(|(_, d)| *d == best_distance)
            .min_by_key(|(e, _)| e.keypoint_id)
            .expect("non-empty");
        candidates.push(Candidate {
            q_idx,
            m_idx: best.0.keypoint_id,
            distance: best_distance,
            descriptor: best.0.descriptor.clone(),
        });
    }

    for cand in candidates {
        if cand.m_idx >= reference_points.len() {
            return Err(MatchError::InvalidKeypointId {
                id: cand.m_idx,
                len: reference_points.len(),
            });
        }
        if params.mutual {
            // the reference entry's best query match, exact scan, ties by
            // lowest query index
            let mut best: Option<(u32, usize)> = None;
            for (k, qd) in query_descriptors.iter().enumerate() {
                let d = hamming(&cand.descriptor, qd)?;
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, k));
                }
            }
            if best.map(|(_, k)| k) != Some(cand.q_idx) {
                continue;
            }
        }
        out.push(Correspondence {
            m: *reference_points.get(cand.m_idx).expect("validated index"),
            q: *query_points.get(cand.q_idx).expect("enumerated index"),
            m_idx: cand.m_idx,
            q_idx: cand.q_idx,
            descriptor_distance: cand.distance,
        })
        .expect("dims validated");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::DescriptorEntry;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_descriptor(len_bits: usize, rng: &mut impl Rng) -> BinaryDescriptor {
        let bytes = (0..len_bits / 8).map(|_| rng.random()).collect();
        BinaryDescriptor::from_bytes(bytes).unwrap()
    }

    fn flip_bits(d: &BinaryDescriptor, n: usize, rng: &mut impl Rng) -> BinaryDescriptor {
        let mut out = d.clone();
        let mut flipped = std::collections::HashSet::new();
        while flipped.len() < n {
            let i = rng.random_range(0..d.len_bits());
            if flipped.insert(i) {
                out.set_bit(i, !out.bit(i));
            }
        }
        out
    }

    fn points(n: usize, dim: Dim, rng: &mut impl Rng) -> NPointSet {
        crate::scene::random_point_set(dim, n, 10.0, rng)
    }

    fn tree_of(descs: &[BinaryDescriptor]) -> HammingTree {
        let mut tree = HammingTree::new(descs[0].len_bits()).unwrap();
        for (i, d) in descs.iter().enumerate() {
            tree.insert(DescriptorEntry {
                descriptor: d.clone(),
                keypoint_id: i,
                map_id: 1,
            })
            .unwrap();
        }
        tree
    }

    #[test]
    fn identical_sets_match_perfectly() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let descs: Vec<BinaryDescriptor> =
            (0..20).map(|_| random_descriptor(64, &mut rng)).collect();
        let qp = points(20, Dim::Three, &mut rng);
        let rp = points(20, Dim::Three, &mut rng);
        let tree = tree_of(&descs);
        let params = MatchParams {
            tau: 0,
            mutual: true,
            exhaustive: false,
        };
        let c = match_maps(&qp, &descs, &rp, &tree, &params).unwrap();
        assert_eq!(c.len(), 20);
        for corr in c.iter() {
            assert_eq!(corr.m_idx, corr.q_idx);
            assert_eq!(corr.descriptor_distance, 0);
        }
    }

    #[test]
    fn disjoint_descriptors_match_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let refs: Vec<BinaryDescriptor> = (0..5).map(|_| random_descriptor(64, &mut rng)).collect();
        let queries: Vec<BinaryDescriptor> = refs.iter().map(|d| d.complement()).collect();
        let qp = points(5, Dim::Two, &mut rng);
        let rp = points(5, Dim::Two, &mut rng);
        let tree = tree_of(&refs);
        let params = MatchParams {
            tau: 10,
            mutual: false,
            exhaustive: true,
        };
        let c = match_maps(&qp, &queries, &rp, &tree, &params).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn empty_sides_yield_empty_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let qp = NPointSet::new(Dim::Three);
        let rp = points(3, Dim::Three, &mut rng);
        let descs: Vec<BinaryDescriptor> =
            (0..3).map(|_| random_descriptor(32, &mut rng)).collect();
        let tree = tree_of(&descs);
        let c = match_maps(&qp, &[], &rp, &tree, &MatchParams::default()).unwrap();
        assert!(c.is_empty());

        let empty_tree = HammingTree::new(32).unwrap();
        let qp = points(3, Dim::Three, &mut rng);
        let c = match_maps(&qp, &descs, &rp, &empty_tree, &MatchParams::default()).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn planted_matches_recovered_against_distractors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // reference: 30 planted targets + 30 distractors
        let planted: Vec<BinaryDescriptor> =
            (0..30).map(|_| random_descriptor(256, &mut rng)).collect();
        let mut ref_descs = planted.clone();
        // distractors: complement with some extra noise -> >= 100 bits away
        for d in &planted {
            ref_descs.push(flip_bits(&d.complement(), 20, &mut rng));
        }
        let queries: Vec<BinaryDescriptor> = planted
            .iter()
            .map(|d| flip_bits(d, rng.random_range(0..=10), &mut rng))
            .collect();
        let qp = points(queries.len(), Dim::Three, &mut rng);
        let rp = points(ref_descs.len(), Dim::Three, &mut rng);
        let tree = tree_of(&ref_descs);
        let params = MatchParams {
            tau: 50,
            mutual: false,
            exhaustive: true,
        };
        let c = match_maps(&qp, &queries, &rp, &tree, &params).unwrap();
        assert_eq!(c.len(), 30);
        for corr in c.iter() {
            // linear-scan oracle: the planted target is the best match
            let expect =
                linear_scan(tree.entries().iter().copied(), &queries[corr.q_idx], 50).unwrap();
            assert_eq!(corr.m_idx, expect[0].0.keypoint_id);
            assert_eq!(corr.m_idx, corr.q_idx, "planted target, not a distractor");
            assert!(corr.descriptor_distance <= 10);
        }
    }

    #[test]
    fn invariants_hold_on_random_corpora() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for mutual in [false, true] {
            let refs: Vec<BinaryDescriptor> =
                (0..40).map(|_| random_descriptor(32, &mut rng)).collect();
            let queries: Vec<BinaryDescriptor> =
                (0..25).map(|_| random_descriptor(32, &mut rng)).collect();
            let qp = points(25, Dim::Two, &mut rng);
            let rp = points(40, Dim::Two, &mut rng);
            let tree = tree_of(&refs);
            let params = MatchParams {
                tau: 12,
                mutual,
                exhaustive: false,
            };
            let c = match_maps(&qp, &queries, &rp, &tree, &params).unwrap();
            let mut seen_q = std::collections::HashSet::new();
            let mut seen_m = std::collections::HashSet::new();
            for corr in c.iter() {
                assert!(corr.descriptor_distance <= 12);
                assert!(seen_q.insert(corr.q_idx), "query index repeated");
                if mutual {
                    assert!(seen_m.insert(corr.m_idx), "mutual must be injective");
                }
            }
        }
    }

    #[test]
    fn count_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let qp = points(3, Dim::Two, &mut rng);
        let rp = points(2, Dim::Two, &mut rng);
        let descs: Vec<BinaryDescriptor> =
            (0..2).map(|_| random_descriptor(32, &mut rng)).collect();
        let tree = tree_of(&descs);
        assert_eq!(
            match_maps(&qp, &descs, &rp, &tree, &MatchParams::default()),
            Err(MatchError::CountMismatch {
                points: 3,
                descriptors: 2
            })
        );
    }
}
