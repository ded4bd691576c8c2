//! Point-cloud container (PLY) and JSON sidecar.

use crate::annotate::PointLabel;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    PlyAscii,
    PlyBinaryLe,
    SidecarJson,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::PlyAscii => "ascii.ply",
            Format::PlyBinaryLe => "ply",
            Format::SidecarJson => "json",
        }
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("unsupported format {0:?} for a point cloud")]
    UnsupportedFormat(Format),
    #[error("malformed PLY: {0}")]
    Malformed(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The per-vertex table stored in a PLY file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlyCloud {
    pub positions: Vec<[f32; 3]>,
    pub normals: Vec<[f32; 3]>,
    pub labels: Vec<PointLabel>,
}

impl PlyCloud {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

const PROPERTIES: [(&str, &str); 9] = [
    ("float32", "x"),
    ("float32", "y"),
    ("float32", "z"),
    ("float32", "nx"),
    ("float32", "ny"),
    ("float32", "nz"),
    ("uint16", "semantic_id"),
    ("uint16", "part_id"),
    ("uint32", "affordance_mask"),
];

fn header(format: &str, n: usize) -> String {
    let mut h = format!("ply\nformat {format} 1.0\nelement vertex {n}\n");
    for (t, name) in PROPERTIES {
        let _ = writeln!(h, "property {t} {name}");
    }
    h.push_str("end_header\n");
    h
}

pub fn write_ply(cloud: &PlyCloud, format: Format) -> Result<Vec<u8>, ExportError> {
    let n = cloud.len();
    match format {
        Format::PlyAscii => {
            let mut s = header("ascii", n);
            for i in 0..n {
                let (p, q, l) = (cloud.positions[i], cloud.normals[i], cloud.labels[i]);
                let _ = writeln!(
                    s,
                    "{} {} {} {} {} {} {} {} {}",
                    p[0], p[1], p[2], q[0], q[1], q[2], l.semantic, l.part, l.affordance
                );
            }
            Ok(s.into_bytes())
        }
        Format::PlyBinaryLe => {
            let mut out = header("binary_little_endian", n).into_bytes();
            out.reserve(n * 32);
            for i in 0..n {
                for v in cloud.positions[i].iter().chain(&cloud.normals[i]) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                let l = cloud.labels[i];
                out.extend_from_slice(&l.semantic.to_le_bytes());
                out.extend_from_slice(&l.part.to_le_bytes());
                out.extend_from_slice(&l.affordance.to_le_bytes());
            }
            Ok(out)
        }
        f => Err(ExportError::UnsupportedFormat(f)),
    }
}

fn bad(msg: impl Into<String>) -> ExportError {
    ExportError::Malformed(msg.into())
}

/// Reads files written by [`write_ply`].
pub fn read_ply(bytes: &[u8]) -> Result<PlyCloud, ExportError> {
    const END: &[u8] = b"end_header\n";
    let end = bytes.windows(END.len()).position(|w| w == END).ok_or_else(|| bad("no end_header"))? + END.len();
    let head = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not UTF-8"))?;
    let mut lines = head.lines();
    if lines.next() != Some("ply") {
        return Err(bad("missing magic"));
    }
    let binary = match lines.next() {
        Some("format ascii 1.0") => false,
        Some("format binary_little_endian 1.0") => true,
        other => return Err(bad(format!("unsupported format line {other:?}"))),
    };
    let n: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("element vertex "))
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| bad("missing vertex count"))?;
    for (t, name) in PROPERTIES {
        if lines.next() != Some(&format!("property {t} {name}")) {
            return Err(bad(format!("expected property {name}")));
        }
    }
    let body = &bytes[end..];
    let mut cloud = PlyCloud::default();
    if binary {
        if body.len() != n * 32 {
            return Err(bad(format!("expected {} body bytes, found {}", n * 32, body.len())));
        }
        let f = |c: &[u8], at: usize| f32::from_le_bytes(c[at..at + 4].try_into().unwrap());
        for c in body.chunks_exact(32) {
            cloud.positions.push([f(c, 0), f(c, 4), f(c, 8)]);
            cloud.normals.push([f(c, 12), f(c, 16), f(c, 20)]);
            cloud.labels.push(PointLabel {
                semantic: u16::from_le_bytes([c[24], c[25]]),
                part: u16::from_le_bytes([c[26], c[27]]),
                affordance: u32::from_le_bytes(c[28..32].try_into().unwrap()),
            });
        }
    } else {
        let text = std::str::from_utf8(body).map_err(|_| bad("body is not UTF-8"))?;
        for (k, line) in text.lines().enumerate() {
            let t: Vec<&str> = line.split(' ').collect();
            if t.len() != 9 {
                return Err(bad(format!("vertex {k} has {} fields", t.len())));
            }
            let f = |i: usize| t[i].parse::<f32>().map_err(|_| bad(format!("vertex {k} field {i}")));
            let u = |i: usize| t[i].parse::<u32>().map_err(|_| bad(format!("vertex {k} field {i}")));
            cloud.positions.push([f(0)?, f(1)?, f(2)?]);
            cloud.normals.push([f(3)?, f(4)?, f(5)?]);
            let narrow = |v: u32| u16::try_from(v).map_err(|_| bad(format!("vertex {k} id overflow")));
            cloud.labels.push(PointLabel { semantic: narrow(u(6)?)?, part: narrow(u(7)?)?, affordance: u(8)? });
        }
        if cloud.len() != n {
            return Err(bad(format!("header says {n} vertices, body has {}", cloud.len())));
        }
    }
    Ok(cloud)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartPoseRecord {
    pub id: usize,
    pub label: String,
    pub scale: f64,
    /// (w, x, y, z)
    pub quat: [f64; 4],
    pub t: [f64; 3],
    /// World position of the canonical frame origin.
    pub center: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRecord {
    pub id: String,
    pub kind: crate::program::JointKind,
    /// World axis direction and a point on it.
    pub axis: [f64; 3],
    pub origin: [f64; 3],
    pub value: f64,
    pub range: [f64; 2],
}
