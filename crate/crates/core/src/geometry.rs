//! Points, rigid transforms, and the closed-form least-squares alignment
//! between index-paired point sets.

use nalgebra::{Matrix2, Matrix3};
use thiserror::Error;

/// Orthonormality / determinant tolerance for validating rotations.
pub const ROTATION_TOL: f64 = 1e-9;
/// Relative singular-value threshold below which the centered source is
/// treated as rank-deficient for alignment.
pub const DEGENERACY_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("point sets have different sizes: {src} vs {dst}")]
    SizeMismatch { src: usize, dst: usize },
    #[error("underdetermined: {points} point pairs, need at least {needed}")]
    Underdetermined { points: usize, needed: usize },
    #[error("degenerate configuration: centered source points are rank-deficient")]
    Degenerate,
    #[error("dimension mismatch")]
    DimMismatch,
    #[error("empty set")]
    EmptySet,
    #[error("non-finite coordinate")]
    NonFiniteCoordinate,
    #[error("rotation is not orthonormal (max deviation {max_dev:e})")]
    NotOrthonormal { max_dev: f64 },
    #[error("rotation is not proper (det = {det})")]
    ImproperRotation { det: f64 },
    #[error("invalid dimension {0}: must be 2 or 3")]
    InvalidDim(usize),
}

/// Spatial dimension of a point set: 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn from_len(n: usize) -> Result<Dim, GeometryError> {
        match n {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(GeometryError::InvalidDim(n)),
        }
    }
}

/// A point in 2 or 3 dimensions, coordinates in meters.
///
/// The third coordinate is zero for 2D points; all coordinates are finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NPoint {
    dim: Dim,
    coords: [f64; 3],
}

impl NPoint {
    pub fn new(coords: &[f64]) -> Result<NPoint, GeometryError> {
        let dim = Dim::from_len(coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        let mut buf = [0.0; 3];
        buf[..coords.len()].copy_from_slice(coords);
        Ok(NPoint { dim, coords: buf })
    }

    pub(crate) fn from_parts(dim: Dim, coords: [f64; 3]) -> NPoint {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        NPoint { dim, coords }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// The live coordinates (length 2 or 3).
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim.len()]
    }

    /// Euclidean distance to another point of the same dimension.
    pub fn distance_to(&self, other: &NPoint) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let dx = self.coords[0] - other.coords[0];
        let dy = self.coords[1] - other.coords[1];
        let dz = self.coords[2] - other.coords[2];
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// An ordered, index-stable collection of points sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct NPointSet {
    dim: Dim,
    points: Vec<NPoint>,
}

impl NPointSet {
    pub fn new(dim: Dim) -> NPointSet {
        NPointSet {
            dim,
            points: Vec::new(),
        }
    }

    /// Builds a set from a non-empty list; the dimension is taken from the
    /// first point and enforced on the rest.
    pub fn from_points(points: Vec<NPoint>) -> Result<NPointSet, GeometryError> {
        let first = points.first().ok_or(GeometryError::EmptySet)?;
        let dim = first.dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(GeometryError::DimMismatch);
        }
        Ok(NPointSet { dim, points })
    }

    pub fn push(&mut self, p: NPoint) -> Result<(), GeometryError> {
        if p.dim() != self.dim {
            return Err(GeometryError::DimMismatch);
        }
        self.points.push(p);
        Ok(())
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&NPoint> {
        self.points.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &NPoint> {
        self.points.iter()
    }
}

/// A rotation in SO(n) plus a translation in R^n.
///
/// The rotation block is stored padded to 3x3 (identity outside the live
/// dim x dim block) so 2D and 3D share one representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    dim: Dim,
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl RigidTransform {
    /// Validates that `rotation` (row-major, dim*dim entries) is orthonormal
    /// and proper within [`ROTATION_TOL`].
    pub fn new(
        dim: Dim,
        rotation: &[f64],
        translation: &[f64],
    ) -> Result<RigidTransform, GeometryError> {
        Self::new_with_tol(dim, rotation, translation, ROTATION_TOL)
    }

    pub fn new_with_tol(
        dim: Dim,
        rotation: &[f64],
        translation: &[f64],
        tol: f64,
    ) -> Result<RigidTransform, GeometryError> {
        let d = dim.len();
        if rotation.len() != d * d || translation.len() != d {
            return Err(GeometryError::DimMismatch);
        }
        if rotation
            .iter()
            .chain(translation.iter())
            .any(|v| !v.is_finite())
        {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        let mut r = [[0.0; 3]; 3];
        r[2][2] = 1.0; // pad stays identity in 2D
        for i in 0..d {
            for j in 0..d {
                r[i][j] = rotation[i * d + j];
            }
        }
        // R^T R = I check over the live block
        let mut max_dev: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut dot = 0.0;
                for k in 0..d {
                    dot += r[k][i] * r[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                max_dev = max_dev.max((dot - expect).abs());
            }
        }
        if max_dev > tol {
            return Err(GeometryError::NotOrthonormal { max_dev });
        }
        let det = det_block(&r, d);
        if (det - 1.0).abs() > tol {
            return Err(GeometryError::ImproperRotation { det });
        }
        let mut t = [0.0; 3];
        t[..d].copy_from_slice(translation);
        Ok(RigidTransform {
            dim,
            rotation: r,
            translation: t,
        })
    }

    pub(crate) fn from_parts(
        dim: Dim,
        rotation: [[f64; 3]; 3],
        translation: [f64; 3],
    ) -> RigidTransform {
        RigidTransform {
            dim,
            rotation,
            translation,
        }
    }

    pub fn identity(dim: Dim) -> RigidTransform {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        RigidTransform {
            dim,
            rotation: r,
            translation: [0.0; 3],
        }
    }

    /// Planar rotation by `theta` radians (counterclockwise), zero translation.
    pub fn rotation_2d(theta: f64) -> RigidTransform {
        let (s, c) = theta.sin_cos();
        RigidTransform {
            dim: Dim::Two,
            rotation: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    /// 3D rotation by `angle` radians about `axis` (Rodrigues), zero translation.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Result<RigidTransform, GeometryError> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        let k = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
        let (s, c) = angle.sin_cos();
        let v = 1.0 - c;
        let rotation = [
            [
                c + k[0] * k[0] * v,
                k[0] * k[1] * v - k[2] * s,
                k[0] * k[2] * v + k[1] * s,
            ],
            [
                k[1] * k[0] * v + k[2] * s,
                c + k[1] * k[1] * v,
                k[1] * k[2] * v - k[0] * s,
            ],
            [
                k[2] * k[0] * v - k[1] * s,
                k[2] * k[1] * v + k[0] * s,
                c + k[2] * k[2] * v,
            ],
        ];
        Ok(RigidTransform {
            dim: Dim::Three,
            rotation,
            translation: [0.0; 3],
        })
    }

    pub fn with_translation(
        mut self,
        translation: &[f64],
    ) -> Result<RigidTransform, GeometryError> {
        if translation.len() != self.dim.len() {
            return Err(GeometryError::DimMismatch);
        }
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        self.translation = [0.0; 3];
        self.translation[..translation.len()].copy_from_slice(translation);
        Ok(self)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// Rotation as a row-major dim*dim vector.
    pub fn rotation_row_major(&self) -> Vec<f64> {
        let d = self.dim.len();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(self.rotation[i][j]);
            }
        }
        out
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation[..self.dim.len()]
    }

    pub fn apply_point(&self, p: &NPoint) -> NPoint {
        debug_assert_eq!(p.dim(), self.dim);
        let d = self.dim.len();
        let mut out = [0.0; 3];
        for i in 0..d {
            let mut acc = self.translation[i];
            for j in 0..d {
                acc += self.rotation[i][j] * p.coords[j];
            }
            out[i] = acc;
        }
        NPoint::from_parts(self.dim, out)
    }

    /// Applies the transform to every point: `R p + t`.
    pub fn apply(&self, set: &NPointSet) -> Result<NPointSet, GeometryError> {
        if set.dim() != self.dim {
            return Err(GeometryError::DimMismatch);
        }
        Ok(NPointSet {
            dim: self.dim,
            points: set.iter().map(|p| self.apply_point(p)).collect(),
        })
    }

    /// The analytic inverse `(R^T, -R^T t)`.
    pub fn inverse(&self) -> RigidTransform {
        let d = self.dim.len();
        let mut rt = [[0.0; 3]; 3];
        rt[2][2] = 1.0; // pad stays identity in 2D
        for i in 0..d {
            for j in 0..d {
                rt[i][j] = self.rotation[j][i];
            }
        }
        let mut t = [0.0; 3];
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += rt[i][j] * self.translation[j];
            }
            t[i] = -acc;
        }
        RigidTransform {
            dim: self.dim,
            rotation: rt,
            translation: t,
        }
    }
}

fn det_block(r: &[[f64; 3]; 3], d: usize) -> f64 {
    match d {
        2 => r[0][0] * r[1][1] - r[0][1] * r[1][0],
        _ => {
            r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
                - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
                + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
        }
    }
}

/// Solves `argmin_{R,t} sum ||dst_i - R src_i - t||^2` in closed form:
/// centroid subtraction, cross-covariance, SVD, determinant-sign correction
/// so the result is always a proper rotation.
pub fn solve_rigid(src: &NPointSet, dst: &NPointSet) -> Result<RigidTransform, GeometryError> {
    solve_rigid_with_tol(src, dst, DEGENERACY_REL_TOL)
}

pub fn solve_rigid_with_tol(
    src: &NPointSet,
    dst: &NPointSet,
    degeneracy_rel_tol: f64,
) -> Result<RigidTransform, GeometryError> {
    if src.dim() != dst.dim() {
        return Err(GeometryError::DimMismatch);
    }
    let n = src.len();
    if n != dst.len() {
        return Err(GeometryError::SizeMismatch {
            src: n,
            dst: dst.len(),
        });
    }
    let dim = src.dim();
    let d = dim.len();
    if n < d {
        return Err(GeometryError::Underdetermined {
            points: n,
            needed: d,
        });
    }

    let mut cm = [0.0; 3];
    let mut cq = [0.0; 3];
    for (m, q) in src.iter().zip(dst.iter()) {
        for k in 0..d {
            cm[k] += m.coords[k];
            cq[k] += q.coords[k];
        }
    }
    for k in 0..d {
        cm[k] /= n as f64;
        cq[k] /= n as f64;
    }

    // Cross-covariance H = sum m_c q_c^T and source scatter A = sum m_c m_c^T.
    let mut h = [[0.0; 3]; 3];
    let mut a = [[0.0; 3]; 3];
    for (m, q) in src.iter().zip(dst.iter()) {
        let mut mc = [0.0; 3];
        let mut qc = [0.0; 3];
        for k in 0..d {
            mc[k] = m.coords[k] - cm[k];
            qc[k] = q.coords[k] - cq[k];
        }
        for i in 0..d {
            for j in 0..d {
                h[i][j] += mc[i] * qc[j];
                a[i][j] += mc[i] * mc[j];
            }
        }
    }

    // The rotation is observable iff the centered source has rank >= d-1
    // (coincident points in 2D, collinear or coincident points in 3D fail).
    let rotation = match dim {
        Dim::Two => {
            let a_m = Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1]);
            let mut sv: Vec<f64> = a_m.singular_values().iter().copied().collect();
            sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
            if sv[d - 2] <= degeneracy_rel_tol * sv[0] {
                return Err(GeometryError::Degenerate);
            }
            let h_m = Matrix2::new(h[0][0], h[0][1], h[1][0], h[1][1]);
            let svd = h_m.svd(true, true);
            let u = svd.u.expect("svd with u requested");
            let v = svd.v_t.expect("svd with v_t requested").transpose();
            let sign = (v * u.transpose()).determinant();
            let dcorr = Matrix2::new(1.0, 0.0, 0.0, if sign < 0.0 { -1.0 } else { 1.0 });
            let r = v * dcorr * u.transpose();
            [
                [r[(0, 0)], r[(0, 1)], 0.0],
                [r[(1, 0)], r[(1, 1)], 0.0],
                [0.0, 0.0, 1.0],
            ]
        }
        Dim::Three => {
            let a_m = Matrix3::from_fn(|i, j| a[i][j]);
            let mut sv: Vec<f64> = a_m.singular_values().iter().copied().collect();
            sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
            if sv[d - 2] <= degeneracy_rel_tol * sv[0] {
                return Err(GeometryError::Degenerate);
            }
            let h_m = Matrix3::from_fn(|i, j| h[i][j]);
            let svd = h_m.svd(true, true);
            let u = svd.u.expect("svd with u requested");
            let v = svd.v_t.expect("svd with v_t requested").transpose();
            let sign = (v * u.transpose()).determinant();
            let dcorr = Matrix3::from_diagonal(&nalgebra::Vector3::new(
                1.0,
                1.0,
                if sign < 0.0 { -1.0 } else { 1.0 },
            ));
            let r = v * dcorr * u.transpose();
            [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ]
        }
    };

    let mut t = [0.0; 3];
    for i in 0..d {
        let mut acc = cq[i];
        for j in 0..d {
            acc -= rotation[i][j] * cm[j];
        }
        t[i] = acc;
    }
    Ok(RigidTransform {
        dim,
        rotation,
        translation: t,
    })
}

/// Root-mean-square of `||q - R m - t||` over `(m, q)` pairs.
pub fn residual_rmse<'a, I>(t: &RigidTransform, pairs: I) -> Result<f64, GeometryError>
where
    I: IntoIterator<Item = (&'a NPoint, &'a NPoint)>,
{
    let d = t.dim().len();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (m, q) in pairs {
        if m.dim() != t.dim() || q.dim() != t.dim() {
            return Err(GeometryError::DimMismatch);
        }
        let mapped = t.apply_point(m);
        let mut r2 = 0.0;
        for k in 0..d {
            let e = q.coords[k] - mapped.coords[k];
            r2 += e * e;
        }
        sum += r2;
        count += 1;
    }
    if count == 0 {
        return Err(GeometryError::EmptySet);
    }
    Ok((sum / count as f64).sqrt())
}

/// Geodesic angle of `R_a^T R_b`, in radians.
///
/// 3D: the angle with cosine `(trace - 1) / 2`, evaluated as
/// `atan2(|sin|, cos)` from the skew part so values near 0 keep full
/// precision (plain arccos loses ~8 digits there); 2D: absolute wrapped
/// angle difference.
pub fn rotation_geodesic_error(
    a: &RigidTransform,
    b: &RigidTransform,
) -> Result<f64, GeometryError> {
    if a.dim() != b.dim() {
        return Err(GeometryError::DimMismatch);
    }
    let d = a.dim().len();
    // rel = R_a^T R_b
    let mut rel = [[0.0; 3]; 3];
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += a.rotation[k][i] * b.rotation[k][j];
            }
            rel[i][j] = acc;
        }
    }
    match a.dim() {
        Dim::Two => Ok(rel[1][0].atan2(rel[0][0]).abs()),
        Dim::Three => {
            let cos = ((rel[0][0] + rel[1][1] + rel[2][2] - 1.0) / 2.0).clamp(-1.0, 1.0);
            let sx = rel[2][1] - rel[1][2];
            let sy = rel[0][2] - rel[2][0];
            let sz = rel[1][0] - rel[0][1];
            let sin = 0.5 * (sx * sx + sy * sy + sz * sz).sqrt();
            Ok(sin.atan2(cos))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::random_rigid_transform;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(coords: &[f64]) -> NPoint {
        NPoint::new(coords).unwrap()
    }

    fn set(points: &[&[f64]]) -> NPointSet {
        NPointSet::from_points(points.iter().map(|c| p(c)).collect()).unwrap()
    }

    fn assert_transform_close(a: &RigidTransform, b: &RigidTransform, tol: f64) {
        let rot_err = rotation_geodesic_error(a, b).unwrap();
        assert!(rot_err < tol, "rotation error {rot_err} >= {tol}");
        let ta = a.translation();
        let tb = b.translation();
        let terr: f64 = ta
            .iter()
            .zip(tb)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!(terr < tol, "translation error {terr} >= {tol}");
    }

    #[test]
    fn identity_recovered_from_identical_sets() {
        let s = set(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.5]]);
        let t = solve_rigid(&s, &s).unwrap();
        assert_transform_close(&t, &RigidTransform::identity(Dim::Three), 1e-12);
    }

    #[test]
    fn two_point_2d_quarter_turn() {
        let src = set(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let dst = set(&[&[0.0, 0.0], &[0.0, 1.0]]);
        let t = solve_rigid(&src, &dst).unwrap();
        let expected = RigidTransform::rotation_2d(std::f64::consts::FRAC_PI_2);
        assert_transform_close(&t, &expected, 1e-12);
    }

    #[test]
    fn recovers_random_planted_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [Dim::Two, Dim::Three] {
            for _ in 0..20 {
                let planted = random_rigid_transform(dim, 50.0, &mut rng);
                let src = crate::scene::random_point_set(dim, 10, 50.0, &mut rng);
                let dst = planted.apply(&src).unwrap();
                let got = solve_rigid(&src, &dst).unwrap();
                assert!(rotation_geodesic_error(&got, &planted).unwrap() < 1e-9);
                let terr: f64 = got
                    .translation()
                    .iter()
                    .zip(planted.translation())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                assert!(terr < 1e-9);
                assert!(residual_rmse(&got, src.iter().zip(dst.iter())).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn mirrored_input_still_yields_proper_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let src = crate::scene::random_point_set(Dim::Three, 12, 10.0, &mut rng);
        // dst = mirror(src): negate x
        let dst = NPointSet::from_points(
            src.iter()
                .map(|q| {
                    let c = q.coords();
                    p(&[-c[0], c[1], c[2]])
                })
                .collect(),
        )
        .unwrap();
        let t = solve_rigid(&src, &dst).unwrap();
        // must be a proper rotation despite the reflection in the data
        let r = t.rotation_row_major();
        RigidTransform::new(Dim::Three, &r, t.translation()).unwrap();
    }

    #[test]
    fn translation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let planted = random_rigid_transform(Dim::Three, 20.0, &mut rng);
        let src = crate::scene::random_point_set(Dim::Three, 8, 20.0, &mut rng);
        let dst = planted.apply(&src).unwrap();
        let base = solve_rigid(&src, &dst).unwrap();
        let shift = [1.5, -2.0, 0.25];
        let shifted = NPointSet::from_points(
            dst.iter()
                .map(|q| {
                    let c = q.coords();
                    p(&[c[0] + shift[0], c[1] + shift[1], c[2] + shift[2]])
                })
                .collect(),
        )
        .unwrap();
        let moved = solve_rigid(&src, &shifted).unwrap();
        assert!(rotation_geodesic_error(&base, &moved).unwrap() < 1e-9);
        for k in 0..3 {
            assert!((moved.translation()[k] - base.translation()[k] - shift[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn solve_rigid_error_paths() {
        let a = set(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let b = set(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        assert_eq!(
            solve_rigid(&a, &b),
            Err(GeometryError::SizeMismatch { src: 3, dst: 2 })
        );
        assert_eq!(
            solve_rigid(&b, &b),
            Err(GeometryError::Underdetermined {
                points: 2,
                needed: 3
            })
        );
        // collinear 3D points
        let line = set(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[2.0, 0.0, 0.0]]);
        assert_eq!(solve_rigid(&line, &line), Err(GeometryError::Degenerate));
        // all-coincident 2D points
        let same = set(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(solve_rigid(&same, &same), Err(GeometryError::Degenerate));
        // coplanar 3D points are fine: det constraint fixes the normal
        let plane = set(&[
            &[0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[1.0, 1.0, 0.0],
        ]);
        assert!(solve_rigid(&plane, &plane).is_ok());
    }

    #[test]
    fn apply_identity_and_origin() {
        let s = set(&[&[1.0, 2.0, 3.0], &[-4.0, 0.5, 2.0]]);
        let id = RigidTransform::identity(Dim::Three);
        assert_eq!(id.apply(&s).unwrap(), s);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = random_rigid_transform(Dim::Three, 10.0, &mut rng);
        let origin = set(&[&[0.0, 0.0, 0.0]]);
        let moved = t.apply(&origin).unwrap();
        for k in 0..3 {
            assert!((moved.get(0).unwrap().coords()[k] - t.translation()[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn apply_round_trip_through_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for dim in [Dim::Two, Dim::Three] {
            let t = random_rigid_transform(dim, 30.0, &mut rng);
            let s = crate::scene::random_point_set(dim, 15, 30.0, &mut rng);
            let back = t.inverse().apply(&t.apply(&s).unwrap()).unwrap();
            for (a, b) in s.iter().zip(back.iter()) {
                for (x, y) in a.coords().iter().zip(b.coords()) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn apply_dim_mismatch() {
        let s = set(&[&[0.0, 0.0]]);
        let t = RigidTransform::identity(Dim::Three);
        assert_eq!(t.apply(&s), Err(GeometryError::DimMismatch));
    }

    #[test]
    fn rmse_zero_for_exact_and_d_for_uniform_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = random_rigid_transform(Dim::Three, 10.0, &mut rng);
        let src = crate::scene::random_point_set(Dim::Three, 6, 10.0, &mut rng);
        let dst = t.apply(&src).unwrap();
        assert!(residual_rmse(&t, src.iter().zip(dst.iter())).unwrap() < 1e-12);

        // uniform offset d on every dst point, identity transform: rmse = d
        let d = 0.75;
        let src2 = crate::scene::random_point_set(Dim::Three, 9, 10.0, &mut rng);
        let dst2 = NPointSet::from_points(
            src2.iter()
                .map(|q| {
                    let c = q.coords();
                    p(&[c[0] + d, c[1], c[2]])
                })
                .collect(),
        )
        .unwrap();
        let id = RigidTransform::identity(Dim::Three);
        let rmse = residual_rmse(&id, src2.iter().zip(dst2.iter())).unwrap();
        assert!((rmse - d).abs() < 1e-12);
    }

    #[test]
    fn rmse_matches_direct_sum_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let t = random_rigid_transform(Dim::Two, 10.0, &mut rng);
        let src = crate::scene::random_point_set(Dim::Two, 17, 10.0, &mut rng);
        let dst = crate::scene::random_point_set(Dim::Two, 17, 10.0, &mut rng);
        let got = residual_rmse(&t, src.iter().zip(dst.iter())).unwrap();
        let mut sum = 0.0;
        for (m, q) in src.iter().zip(dst.iter()) {
            let mapped = t.apply_point(m);
            let dx = q.coords()[0] - mapped.coords()[0];
            let dy = q.coords()[1] - mapped.coords()[1];
            sum += dx * dx + dy * dy;
        }
        let expect = (sum / 17.0).sqrt();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn rmse_empty_errors() {
        let t = RigidTransform::identity(Dim::Two);
        assert_eq!(
            residual_rmse(&t, std::iter::empty()),
            Err(GeometryError::EmptySet)
        );
    }

    #[test]
    fn geodesic_error_cases() {
        let id = RigidTransform::identity(Dim::Three);
        assert_eq!(rotation_geodesic_error(&id, &id).unwrap(), 0.0);

        let half_turn =
            RigidTransform::from_axis_angle([0.0, 0.0, 1.0], std::f64::consts::PI).unwrap();
        assert!(
            (rotation_geodesic_error(&id, &half_turn).unwrap() - std::f64::consts::PI).abs()
                < 1e-12
        );

        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let axis = crate::scene::random_unit_axis(&mut rng);
        let r = RigidTransform::from_axis_angle(axis, 0.3).unwrap();
        assert!((rotation_geodesic_error(&id, &r).unwrap() - 0.3).abs() < 1e-9);

        let a2 = RigidTransform::rotation_2d(0.4);
        let b2 = RigidTransform::rotation_2d(-0.35);
        assert!((rotation_geodesic_error(&a2, &b2).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(
            rotation_geodesic_error(&id, &a2),
            Err(GeometryError::DimMismatch)
        );
    }

    #[test]
    fn rejects_bad_rotations_and_coords() {
        assert_eq!(
            NPoint::new(&[1.0, f64::NAN]),
            Err(GeometryError::NonFiniteCoordinate)
        );
        assert_eq!(NPoint::new(&[1.0]), Err(GeometryError::InvalidDim(1)));
        // reflection
        let refl = [1.0, 0.0, 0.0, -1.0];
        assert!(matches!(
            RigidTransform::new(Dim::Two, &refl, &[0.0, 0.0]),
            Err(GeometryError::ImproperRotation { .. })
        ));
        // scaled
        let scaled = [2.0, 0.0, 0.0, 2.0];
        assert!(matches!(
            RigidTransform::new(Dim::Two, &scaled, &[0.0, 0.0]),
            Err(GeometryError::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn apply_preserves_pairwise_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for dim in [Dim::Two, Dim::Three] {
            let t = random_rigid_transform(dim, 25.0, &mut rng);
            let s = crate::scene::random_point_set(dim, 12, 25.0, &mut rng);
            let mapped = t.apply(&s).unwrap();
            for i in 0..s.len() {
                for j in (i + 1)..s.len() {
                    let before = s.get(i).unwrap().distance_to(s.get(j).unwrap());
                    let after = mapped.get(i).unwrap().distance_to(mapped.get(j).unwrap());
                    assert!((before - after).abs() < 1e-9);
                }
            }
        }
    }
}
