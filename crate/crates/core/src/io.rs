//! Text file formats: point sets (CSV), descriptors (hex lines),
//! correspondences (JSON lines), verification results and scene truth
//! (JSON).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptor::{BinaryDescriptor, DescriptorEntry, DescriptorError};
use crate::geometry::{Dim, GeometryError, NPoint, NPointSet, RigidTransform};
use crate::matching::{Correspondence, CorrespondenceSet, MatchError};
use crate::scene::{Scene, SceneSpec};
use crate::verify::VerificationResult;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Point set: one `x,y` or `x,y,z` line per point, `#` comments allowed.
pub fn parse_point_set(text: &str) -> Result<NPointSet, FormatError> {
    let mut points = Vec::new();
    for (line, content) in data_lines(text) {
        let coords: Vec<f64> = content
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| FormatError::Line {
                line,
                message: format!("bad coordinate: {e}"),
            })?;
        let point = NPoint::new(&coords).map_err(|e| FormatError::Line {
            line,
            message: e.to_string(),
        })?;
        points.push(point);
    }
    if points.is_empty() {
        return Ok(NPointSet::new(Dim::Three));
    }
    NPointSet::from_points(points).map_err(|e| e.into())
}

pub fn format_point_set(set: &NPointSet) -> String {
    let mut out = String::new();
    for p in set.iter() {
        let coords: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
        out.push_str(&coords.join(","));
        out.push('\n');
    }
    out
}

/// A parsed descriptor-file row: plain hex, or `id,map_id,hex`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorRecord {
    pub keypoint_id: Option<usize>,
    pub map_id: Option<u64>,
    pub descriptor: BinaryDescriptor,
}

/// Descriptor file: one lowercase-hex descriptor per line, optional
/// `id,map_id,` prefix columns, `#` comments allowed. All descriptors must
/// share one length.
pub fn parse_descriptors(text: &str) -> Result<Vec<DescriptorRecord>, FormatError> {
    let mut out: Vec<DescriptorRecord> = Vec::new();
    for (line, content) in data_lines(text) {
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        let record = match fields.as_slice() {
            [hex] => DescriptorRecord {
                keypoint_id: None,
                map_id: None,
                descriptor: BinaryDescriptor::from_hex(hex).map_err(|e| FormatError::Line {
                    line,
                    message: e.to_string(),
                })?,
            },
            [id, map_id, hex] => DescriptorRecord {
                keypoint_id: Some(id.parse().map_err(|e| FormatError::Line {
                    line,
                    message: format!("bad keypoint id: {e}"),
                })?),
                map_id: Some(map_id.parse().map_err(|e| FormatError::Line {
                    line,
                    message: format!("bad map id: {e}"),
                })?),
                descriptor: BinaryDescriptor::from_hex(hex).map_err(|e| FormatError::Line {
                    line,
                    message: e.to_string(),
                })?,
            },
            _ => {
                return Err(FormatError::Line {
                    line,
                    message: format!(
                        "expected 1 or 3 comma-separated fields, got {}",
                        fields.len()
                    ),
                })
            }
        };
        if let Some(prev) = out.first() {
            if prev.descriptor.len_bits() != record.descriptor.len_bits() {
                return Err(FormatError::Line {
                    line,
                    message: format!(
                        "descriptor length {} differs from {}",
                        record.descriptor.len_bits(),
                        prev.descriptor.len_bits()
                    ),
                });
            }
        }
        out.push(record);
    }
    Ok(out)
}

pub fn format_descriptors(descriptors: &[BinaryDescriptor]) -> String {
    let mut out = String::new();
    for d in descriptors {
        out.push_str(&d.to_hex());
        out.push('\n');
    }
    out
}

/// Turns records into index entries; rows without an explicit id use their
/// position in the file.
pub fn records_to_entries(
    records: &[DescriptorRecord],
    default_map_id: u64,
) -> Vec<DescriptorEntry> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| DescriptorEntry {
            descriptor: r.descriptor.clone(),
            keypoint_id: r.keypoint_id.unwrap_or(i),
            map_id: r.map_id.unwrap_or(default_map_id),
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CorrLine {
    m_idx: usize,
    q_idx: usize,
    m: Vec<f64>,
    q: Vec<f64>,
    desc_dist: u32,
}

/// Correspondences: one JSON object per line with fields
/// `m_idx, q_idx, m, q, desc_dist`.
pub fn parse_correspondences(text: &str) -> Result<CorrespondenceSet, FormatError> {
    let mut items = Vec::new();
    for (line, content) in data_lines(text) {
        let rec: CorrLine = serde_json::from_str(content).map_err(|e| FormatError::Line {
            line,
            message: e.to_string(),
        })?;
        let m = NPoint::new(&rec.m).map_err(|e| FormatError::Line {
            line,
            message: e.to_string(),
        })?;
        let q = NPoint::new(&rec.q).map_err(|e| FormatError::Line {
            line,
            message: e.to_string(),
        })?;
        if m.dim() != q.dim() {
            return Err(FormatError::Line {
                line,
                message: "m and q dims differ".into(),
            });
        }
        items.push(Correspondence {
            m,
            q,
            m_idx: rec.m_idx,
            q_idx: rec.q_idx,
            descriptor_distance: rec.desc_dist,
        });
    }
    if items.is_empty() {
        return Ok(CorrespondenceSet::new(Dim::Three));
    }
    let dim = items[0].m.dim();
    CorrespondenceSet::from_items(dim, items).map_err(|e| e.into())
}

pub fn format_correspondences(set: &CorrespondenceSet) -> String {
    let mut out = String::new();
    for c in set.iter() {
        let line = CorrLine {
            m_idx: c.m_idx,
            q_idx: c.q_idx,
            m: c.m.coords().to_vec(),
            q: c.q.coords().to_vec(),
            desc_dist: c.descriptor_distance,
        };
        out.push_str(&serde_json::to_string(&line).expect("plain struct"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformDto {
    pub dim: usize,
    /// Row-major dim*dim rotation.
    pub rotation: Vec<f64>,
    pub translation: Vec<f64>,
}

impl TransformDto {
    pub fn from_transform(t: &RigidTransform) -> TransformDto {
        TransformDto {
            dim: t.dim().len(),
            rotation: t.rotation_row_major(),
            translation: t.translation().to_vec(),
        }
    }

    pub fn to_transform(&self) -> Result<RigidTransform, GeometryError> {
        let dim = Dim::from_len(self.dim)?;
        RigidTransform::new(dim, &self.rotation, &self.translation)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ResultDto {
    method: String,
    accepted: bool,
    inlier_count: usize,
    rmse: Option<f64>,
    elapsed_ms: f64,
    degenerate: bool,
    transform: Option<TransformDto>,
    /// Inlier (m_idx, q_idx) pairs.
    inliers: Vec<[usize; 2]>,
}

/// One JSON object per result: method, accepted, inlier_count, rmse,
/// elapsed_ms, transform (row-major rotation + translation), inlier index
/// pairs.
pub fn result_to_json(result: &VerificationResult) -> String {
    let dto = ResultDto {
        method: result.method.to_string(),
        accepted: result.accepted,
        inlier_count: result.inlier_count,
        rmse: result.rmse,
        elapsed_ms: result.elapsed_ms,
        degenerate: result.degenerate_fit,
        transform: result.transform.as_ref().map(TransformDto::from_transform),
        inliers: result.inliers.iter().map(|c| [c.m_idx, c.q_idx]).collect(),
    };
    serde_json::to_string(&dto).expect("plain struct")
}

/// Scene ground truth as stored in `truth.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthDto {
    pub dim: usize,
    pub seed: u64,
    pub n_inliers: usize,
    pub n_outliers: usize,
    pub noise_sigma: f64,
    pub extent: f64,
    pub transform: TransformDto,
    /// Planted inlier (m_idx, q_idx) pairs.
    pub inliers: Vec<[usize; 2]>,
}

pub fn truth_to_json(spec: &SceneSpec, scene: &Scene) -> String {
    let dto = TruthDto {
        dim: spec.dim.len(),
        seed: spec.seed,
        n_inliers: spec.n_inliers,
        n_outliers: spec.n_outliers,
        noise_sigma: spec.noise_sigma,
        extent: spec.extent,
        transform: TransformDto::from_transform(&scene.truth.transform),
        inliers: scene
            .planted_pairs()
            .into_iter()
            .map(|(m, q)| [m, q])
            .collect(),
    };
    serde_json::to_string_pretty(&dto).expect("plain struct")
}

pub fn parse_truth(text: &str) -> Result<TruthDto, FormatError> {
    Ok(serde_json::from_str(text)?)
}
