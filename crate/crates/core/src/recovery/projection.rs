//! Cross-template surface transfer through normalized bands.
//!
//! Every patch belongs to a top cap, a bottom cap or the lateral band.
//! Lateral coordinates are (counterclockwise perimeter or azimuth fraction
//! from the +x ray, height fraction); cap coordinates are (polar angle
//! fraction, radial fraction toward the boundary). Spheres follow the
//! equirectangular convention with height fraction `1 − θ/π`.

use crate::math::Vec3;
use crate::primitive::{PatchId, Shape};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Top,
    Bottom,
    Lateral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandCoord {
    pub band: Band,
    pub s: f64,
    pub t: f64,
}

fn angle_fraction(x: f64, y: f64) -> f64 {
    (y.atan2(x) / TAU).rem_euclid(1.0)
}

/// Distance from the center to a rectangle's boundary along `ang`.
fn rect_radius(a: f64, b: f64, ang: f64) -> f64 {
    let (s, c) = ang.sin_cos();
    let rx = if c.abs() > 1e-300 { a / c.abs() } else { f64::INFINITY };
    let ry = if s.abs() > 1e-300 { b / s.abs() } else { f64::INFINITY };
    rx.min(ry)
}

fn cuboid_uv(size: &Vec3, patch: PatchId, p: [f64; 3]) -> [f64; 2] {
    let (_, _, ua, va) = Shape::cuboid_face(patch);
    [(p[ua] / size[ua] + 0.5).clamp(0.0, 1.0), (p[va] / size[va] + 0.5).clamp(0.0, 1.0)]
}

pub fn to_band(shape: &Shape, patch: PatchId, uv: [f64; 2]) -> BandCoord {
    let [u, v] = uv;
    let lateral = |s: f64, t: f64| BandCoord { band: Band::Lateral, s, t };
    match shape {
        Shape::Cuboid { size } => {
            let p = shape.local_point_unchecked(patch, u, v);
            let (a, b) = (size[0] / 2.0, size[1] / 2.0);
            match patch.0 {
                4 | 5 => {
                    let ang = p.y.atan2(p.x);
                    let r = p.x.hypot(p.y);
                    let band = if patch.0 == 4 { Band::Top } else { Band::Bottom };
                    BandCoord { band, s: angle_fraction(p.x, p.y), t: (r / rect_radius(a, b, ang)).clamp(0.0, 1.0) }
                }
                f => {
                    let per = 4.0 * (a + b);
                    let pos = match f {
                        0 => p.y,
                        2 => b + (a - p.x),
                        1 => b + 2.0 * a + (b - p.y),
                        _ => 3.0 * b + 2.0 * a + (p.x + a),
                    };
                    lateral((pos / per).rem_euclid(1.0), p.z / size[2] + 0.5)
                }
            }
        }
        Shape::Cylinder { .. } => match patch.0 {
            0 => lateral(u, v),
            1 => BandCoord { band: Band::Top, s: u, t: v },
            _ => BandCoord { band: Band::Bottom, s: u, t: v },
        },
        Shape::Sphere { .. } => lateral(u, 1.0 - v),
        Shape::Torus { .. } => lateral(u, v),
        Shape::Prism(pr) => match patch.0 {
            0 | 1 => {
                let (k, t) = pr.cap_boundary(u);
                let b = pr.sides[k].point(t);
                let band = if patch.0 == 0 { Band::Top } else { Band::Bottom };
                BandCoord { band, s: angle_fraction(b[0], b[1]), t: v }
            }
            k => lateral(pr.perimeter_fraction(k as usize - 2, u), v),
        },
    }
}

/// Inverse of [`to_band`]; `None` when the shape has no such band.
pub fn from_band(shape: &Shape, c: BandCoord) -> Option<(PatchId, [f64; 2])> {
    let (s, t) = (c.s.rem_euclid(1.0), c.t.clamp(0.0, 1.0));
    match shape {
        Shape::Cuboid { size } => {
            let (a, b) = (size[0] / 2.0, size[1] / 2.0);
            if c.band != Band::Lateral {
                let ang = TAU * s;
                let r = t * rect_radius(a, b, ang);
                let patch = PatchId(if c.band == Band::Top { 4 } else { 5 });
                let z = if c.band == Band::Top { size[2] / 2.0 } else { -size[2] / 2.0 };
                return Some((patch, cuboid_uv(size, patch, [r * ang.cos(), r * ang.sin(), z])));
            }
            let per = 4.0 * (a + b);
            let pos = s * per;
            let z = (t - 0.5) * size[2];
            let (patch, x, y) = if pos < b {
                (0, a, pos)
            } else if pos < b + 2.0 * a {
                (2, a - (pos - b), b)
            } else if pos < 3.0 * b + 2.0 * a {
                (1, -a, b - (pos - b - 2.0 * a))
            } else if pos < 3.0 * b + 4.0 * a {
                (3, pos - 3.0 * b - 2.0 * a - a, -b)
            } else {
                (0, a, pos - per)
            };
            Some((PatchId(patch), cuboid_uv(size, PatchId(patch), [x, y, z])))
        }
        Shape::Cylinder { .. } => Some(match c.band {
            Band::Lateral => (PatchId(0), [s, t]),
            Band::Top => (PatchId(1), [s, t]),
            Band::Bottom => (PatchId(2), [s, t]),
        }),
        Shape::Sphere { .. } => (c.band == Band::Lateral).then_some((PatchId(0), [s, 1.0 - t])),
        Shape::Torus { .. } => (c.band == Band::Lateral).then_some((PatchId(0), [s, t])),
        Shape::Prism(pr) => Some(match c.band {
            Band::Lateral => {
                let (k, u) = pr.at_perimeter_fraction(s);
                (PatchId(2 + k as u16), [u, t])
            }
            cap => {
                let (k, u) = pr.boundary_at_angle(TAU * s);
                let cu = ((k as f64 + u) / pr.side_count as f64).clamp(0.0, 1.0);
                (PatchId(if cap == Band::Top { 0 } else { 1 }), [cu, t])
            }
        }),
    }
}

/// Source location on `src` for the point `(patch, uv)` of `dst`. The flag
/// is false when the band is missing on `src` and the nearest band edge was
/// used instead.
pub fn project_cross_template(src: &Shape, dst: &Shape, patch: PatchId, uv: [f64; 2]) -> (PatchId, [f64; 2], bool) {
    let c = to_band(dst, patch, uv);
    if let Some((p, uv)) = from_band(src, c) {
        return (p, uv, true);
    }
    let edge = BandCoord { band: Band::Lateral, s: c.s, t: if c.band == Band::Top { 1.0 } else { 0.0 } };
    let (p, uv) = from_band(src, edge).expect("every shape has a lateral band");
    (p, uv, false)
}
