//! Exact nearest-neighbour search in 3-D.
//!
//! Results match an exhaustive scan bit for bit: squared distances use the
//! same expression, ties go to the lowest index, and subtrees are skipped
//! only when their bound is strictly worse than the best found.

use crate::math::Pt3;

const LEAF: usize = 8;

/// Squared Euclidean distance; the single definition shared with scans.
#[inline]
pub fn dist2(a: &Pt3, b: &Pt3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

/// Index of the nearest point by exhaustive scan, lowest index on ties.
pub fn brute_force_nearest(points: &[Pt3], q: &Pt3) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        let d = dist2(p, q);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Pt3>,
    /// Point indices, permuted so every leaf is a contiguous range.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: Vec<Pt3>) -> KdTree {
        let mut tree = KdTree {
            order: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
        };
        if !tree.points.is_empty() {
            tree.build(0, tree.points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Pt3] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for a in 0..3 {
                lo[a] = lo[a].min(self.points[i][a]);
                hi[a] = hi[a].max(self.points[i][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        if hi[axis] - lo[axis] == 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = (start + end) / 2;
        let pts = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]));
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// Nearest point index and squared distance.
    pub fn nearest(&self, q: &Pt3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, q, &mut best);
        Some(best)
    }

    fn search(&self, node: usize, q: &Pt3, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d = dist2(&self.points[i], q);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                if diff * diff <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rng_from_seed;
    use rand::Rng;

    #[test]
    fn matches_scan_on_random_and_lattice_points() {
        let mut rng = rng_from_seed(5);
        for case in 0..200 {
            let lattice = case % 2 == 0;
            let gen = |rng: &mut rand_chacha::ChaCha8Rng| {
                if lattice {
                    Pt3::new(rng.random_range(0..4) as f64, rng.random_range(0..4) as f64, rng.random_range(0..3) as f64)
                } else {
                    Pt3::new(rng.random(), rng.random(), rng.random())
                }
            };
            let ys: Vec<Pt3> = (0..128).map(|_| gen(&mut rng)).collect();
            let tree = KdTree::new(ys.clone());
            for _ in 0..64 {
                let q = if lattice {
                    Pt3::new(rng.random_range(0..8) as f64 / 2.0, rng.random_range(0..8) as f64 / 2.0, 0.5)
                } else {
                    gen(&mut rng)
                };
                assert_eq!(tree.nearest(&q), brute_force_nearest(&ys, &q));
            }
        }
    }

    #[test]
    fn duplicate_points_pick_lowest_index() {
        let ys = vec![Pt3::new(1.0, 0.0, 0.0); 20];
        let tree = KdTree::new(ys);
        assert_eq!(tree.nearest(&Pt3::origin()), Some((0, 1.0)));
    }
}
