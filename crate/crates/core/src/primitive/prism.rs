//! Right prism over a convex polygon whose sides may bulge outward as
//! circular arcs.
//!
//! Vertex `k` sits at angle `2πk/n + π/n`, scaled per axis so the straight
//! polygon spans exactly `width × depth`. Side `k` runs counterclockwise from
//! vertex `k` to vertex `k + 1`; the first `arc_sides` sides are arcs with
//! sagitta `arc_bulge × chord`.

use std::f64::consts::{PI, TAU};

pub type P2 = [f64; 2];

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: P2) -> f64 {
    a[0].hypot(a[1])
}

#[derive(Debug, Clone, PartialEq)]
pub enum Side {
    Line {
        a: P2,
        b: P2,
        len: f64,
        normal: P2,
    },
    Arc {
        center: P2,
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

impl Side {
    pub fn point(&self, t: f64) -> P2 {
        match *self {
            Side::Line { a, b, .. } => [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
            Side::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let beta = start + t * sweep;
                [center[0] + radius * beta.cos(), center[1] + radius * beta.sin()]
            }
        }
    }

    /// d point / dt.
    pub fn derivative(&self, t: f64) -> P2 {
        match *self {
            Side::Line { a, b, .. } => sub(b, a),
            Side::Arc {
                radius,
                start,
                sweep,
                ..
            } => {
                let beta = start + t * sweep;
                [-radius * sweep * beta.sin(), radius * sweep * beta.cos()]
            }
        }
    }

    pub fn normal(&self, t: f64) -> P2 {
        match *self {
            Side::Line { normal, .. } => normal,
            Side::Arc { start, sweep, .. } => {
                let beta = start + t * sweep;
                [beta.cos(), beta.sin()]
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Side::Line { len, .. } => len,
            Side::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    pub fn is_arc(&self) -> bool {
        matches!(self, Side::Arc { .. })
    }

    /// Area of the fan sector between the origin and this side.
    fn sector_area(&self) -> f64 {
        match *self {
            Side::Line { a, b, .. } => 0.5 * cross(a, b),
            Side::Arc { radius, sweep, .. } => {
                let a = self.point(0.0);
                let b = self.point(1.0);
                0.5 * cross(a, b) + 0.5 * radius * radius * (sweep - sweep.sin())
            }
        }
    }

    /// Fraction of this side's sector area swept between t = 0 and `t`.
    fn sector_cdf(&self, t: f64) -> f64 {
        match *self {
            Side::Line { .. } => t,
            Side::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let raw = |t: f64| {
                    let beta = start + t * sweep;
                    radius * t
                        + (center[0] * (beta.sin() - start.sin())
                            - center[1] * (beta.cos() - start.cos()))
                            / sweep
                };
                raw(t) / raw(1.0)
            }
        }
    }

    fn sector_density(&self, t: f64) -> f64 {
        cross(self.point(t), self.derivative(t))
    }

    /// Inverts [`Side::sector_cdf`] with Newton steps guarded by bisection.
    pub fn invert_sector_cdf(&self, w: f64) -> f64 {
        if !self.is_arc() {
            return w;
        }
        let total = self.sector_area_integral();
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut t = w;
        for _ in 0..60 {
            let f = self.sector_cdf(t) - w;
            if f.abs() < 1e-15 {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = self.sector_density(t) / total;
            let next = t - f / d;
            t = if next > lo && next < hi && d > 0.0 {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        t.clamp(0.0, 1.0)
    }

    fn sector_area_integral(&self) -> f64 {
        // integral over t of cross(p, p'), twice the sector area
        2.0 * self.sector_area()
    }

    /// Max of p·d over this side, for a 2D direction `d`.
    fn support(&self, d: P2) -> f64 {
        let ends = dot(self.point(0.0), d).max(dot(self.point(1.0), d));
        match *self {
            Side::Line { .. } => ends,
            Side::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let dn = norm(d);
                if dn == 0.0 {
                    return ends;
                }
                let ang = d[1].atan2(d[0]);
                let rel = (ang - start).rem_euclid(TAU);
                if rel <= sweep {
                    ends.max(dot(center, d) + radius * dn)
                } else {
                    ends
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prism {
    pub side_count: usize,
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    pub arc_sides: usize,
    pub arc_bulge: f64,
    pub sides: Vec<Side>,
    sector_areas: Vec<f64>,
    cap_area: f64,
    perimeter: f64,
    /// Perimeter position (from vertex 0) of the boundary point on the +x ray.
    start_offset: f64,
}

impl Prism {
    pub fn new(
        side_count: usize,
        width: f64,
        depth: f64,
        height: f64,
        arc_sides: usize,
        arc_bulge: f64,
    ) -> Prism {
        let n = side_count;
        let alpha = |k: usize| TAU * k as f64 / n as f64 + PI / n as f64;
        let mx = (0..n).map(|k| alpha(k).cos().abs()).fold(0.0, f64::max);
        let my = (0..n).map(|k| alpha(k).sin().abs()).fold(0.0, f64::max);
        let verts: Vec<P2> = (0..n)
            .map(|k| {
                [
                    0.5 * width * alpha(k).cos() / mx,
                    0.5 * depth * alpha(k).sin() / my,
                ]
            })
            .collect();
        let sides: Vec<Side> = (0..n)
            .map(|k| {
                let a = verts[k];
                let b = verts[(k + 1) % n];
                let ab = sub(b, a);
                let len = norm(ab);
                let normal = [ab[1] / len, -ab[0] / len];
                if k < arc_sides && arc_bulge > 0.0 {
                    let sag = arc_bulge * len;
                    let radius = (len * len / 4.0 + sag * sag) / (2.0 * sag);
                    let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                    let center = [
                        mid[0] + normal[0] * (sag - radius),
                        mid[1] + normal[1] * (sag - radius),
                    ];
                    let start = (a[1] - center[1]).atan2(a[0] - center[0]);
                    let sweep = 4.0 * (2.0 * sag / len).atan();
                    Side::Arc {
                        center,
                        radius,
                        start,
                        sweep,
                    }
                } else {
                    Side::Line { a, b, len, normal }
                }
            })
            .collect();
        let sector_areas: Vec<f64> = sides.iter().map(Side::sector_area).collect();
        let cap_area = sector_areas.iter().sum();
        let perimeter = sides.iter().map(Side::length).sum();
        let mut prism = Prism {
            side_count,
            width,
            depth,
            height,
            arc_sides,
            arc_bulge,
            sides,
            sector_areas,
            cap_area,
            perimeter,
            start_offset: 0.0,
        };
        // the +x ray crosses the last side (vertex angles straddle 0)
        let last = n - 1;
        let t0 = prism.side_param_at_angle(last, 0.0);
        let before: f64 = prism.sides[..last].iter().map(Side::length).sum();
        prism.start_offset = before + t0 * prism.sides[last].length();
        prism
    }

    pub fn cap_area(&self) -> f64 {
        self.cap_area
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn sector_areas(&self) -> &[f64] {
        &self.sector_areas
    }

    /// Boundary point for the cap parameter `u`.
    pub fn cap_boundary(&self, u: f64) -> (usize, f64) {
        let n = self.side_count;
        let x = u * n as f64;
        let k = (x.floor() as usize).min(n - 1);
        (k, x - k as f64)
    }

    /// Parameter on side `k` where the ray at polar angle `ang` meets it.
    pub fn side_param_at_angle(&self, k: usize, ang: f64) -> f64 {
        let side = &self.sides[k];
        let dir = [ang.cos(), ang.sin()];
        let f = |t: f64| cross(dir, side.point(t));
        // cross(dir, p) increases with t along a CCW star-shaped boundary
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Side index and parameter of the boundary point hit by the ray at `ang`.
    pub fn boundary_at_angle(&self, ang: f64) -> (usize, f64) {
        let dir = [ang.cos(), ang.sin()];
        for (k, side) in self.sides.iter().enumerate() {
            let a = side.point(0.0);
            let b = side.point(1.0);
            if cross(a, dir) >= 0.0 && cross(dir, b) >= 0.0 {
                return (k, self.side_param_at_angle(k, ang));
            }
        }
        (self.side_count - 1, self.side_param_at_angle(self.side_count - 1, ang))
    }

    /// Counterclockwise perimeter fraction of (side, t), measured from the
    /// boundary point on the +x ray.
    pub fn perimeter_fraction(&self, k: usize, t: f64) -> f64 {
        let before: f64 = self.sides[..k].iter().map(Side::length).sum();
        let pos = before + t * self.sides[k].length();
        ((pos - self.start_offset) / self.perimeter).rem_euclid(1.0)
    }

    /// Inverse of [`Prism::perimeter_fraction`].
    pub fn at_perimeter_fraction(&self, s: f64) -> (usize, f64) {
        let mut pos = (s * self.perimeter + self.start_offset).rem_euclid(self.perimeter);
        for (k, side) in self.sides.iter().enumerate() {
            let len = side.length();
            if pos <= len || k == self.side_count - 1 {
                return (k, (pos / len).clamp(0.0, 1.0));
            }
            pos -= len;
        }
        unreachable!("prism has at least three sides")
    }

    /// Max of p·d over the prism for a local direction.
    pub fn support(&self, d: [f64; 3]) -> f64 {
        let d2 = [d[0], d[1]];
        let planar = self
            .sides
            .iter()
            .map(|s| s.support(d2))
            .fold(f64::NEG_INFINITY, f64::max);
        planar + d[2].abs() * self.height / 2.0
    }
}
