//! Exact nearest-neighbour search over fixed-dimension point clouds.
//!
//! The tree stores a permutation of point indices and never copies the
//! points themselves; callers hand in any [`PointSet`]. Queries take an
//! index predicate so Theiler windows and self-exclusion are expressed
//! without rebuilding. Ties in distance are broken towards the lowest
//! point index, which makes the result identical to a brute-force scan.

use alloc::vec::Vec;

/// Random-access view over `len()` points of dimension `dim()`.
pub trait PointSet {
    /// Number of points.
    fn len(&self) -> usize;
    /// Dimension of each point.
    fn dim(&self) -> usize;
    /// Coordinate `axis` of point `index`.
    fn coord(&self, index: usize, axis: usize) -> f64;

    /// Whether the set is empty.
    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Squared Euclidean distance between two points.
    fn dist2(&self, a: usize, b: usize) -> f64 {
        (0..self.dim())
            .map(|ax| {
                let d = self.coord(a, ax) - self.coord(b, ax);
                d * d
            })
            .sum()
    }
}

/// Row-major dense point storage.
#[derive(Debug, Clone)]
pub struct DensePoints {
    dim: usize,
    data: Vec<f64>,
}

impl DensePoints {
    /// Wraps `data`, whose length must be a multiple of `dim`.
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0);
        Self { dim, data }
    }
}

impl PointSet for DensePoints {
    fn len(&self) -> usize {
        self.data.len() / self.dim
    }
    fn dim(&self) -> usize {
        self.dim
    }
    #[inline]
    fn coord(&self, index: usize, axis: usize) -> f64 {
        self.data[index * self.dim + axis]
    }
}

/// Result of a nearest-neighbour query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Index of the neighbour in the point set.
    pub index: usize,
    /// Squared Euclidean distance to the query.
    pub dist2: f64,
}

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Static k-d tree over the first `n` points of a [`PointSet`].
#[derive(Debug, Clone)]
pub struct KdTree {
    nodes: Vec<Node>,
    perm: Vec<usize>,
}

impl KdTree {
    /// Builds a tree over points `0..n` (median splits on the widest axis).
    pub fn build<P: PointSet + ?Sized>(points: &P, n: usize) -> Self {
        assert!(n <= points.len());
        let mut tree = Self {
            nodes: Vec::new(),
            perm: (0..n).collect(),
        };
        if n > 0 {
            tree.build_node(points, 0, n);
        }
        tree
    }

    fn build_node<P: PointSet + ?Sized>(&mut self, points: &P, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = points.dim();
        let mut best_axis = 0;
        let mut best_spread = -1.0;
        for axis in 0..dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &self.perm[start..end] {
                let c = points.coord(i, axis);
                lo = lo.min(c);
                hi = hi.max(c);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_axis = axis;
            }
        }
        if best_spread <= 0.0 {
            // All points coincide; no split can separate them.
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points
                .coord(a, best_axis)
                .total_cmp(&points.coord(b, best_axis))
                .then(a.cmp(&b))
        });
        let value = points.coord(self.perm[mid], best_axis);
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(points, start, mid);
        let right = self.build_node(points, mid, end);
        self.nodes[id] = Node::Split {
            axis: best_axis,
            value,
            left,
            right,
        };
        id
    }

    /// Number of indexed points.
    pub fn len(&self) -> usize {
        self.perm.len()
    }

    /// Whether the tree indexes no points.
    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Nearest indexed point to `query` (given as a coordinate slice) among
    /// indices accepted by `allow`. Ties go to the lowest index.
    pub fn nearest<P, F>(&self, points: &P, query: &[f64], allow: F) -> Option<Neighbor>
    where
        P: PointSet + ?Sized,
        F: Fn(usize) -> bool,
    {
        let mut best: Option<Neighbor> = None;
        if !self.nodes.is_empty() {
            self.search(points, 0, query, &allow, &mut best);
        }
        best
    }

    /// Nearest neighbour of indexed point `index` itself, among indices
    /// accepted by `allow`.
    pub fn nearest_to_point<P, F>(&self, points: &P, index: usize, allow: F) -> Option<Neighbor>
    where
        P: PointSet + ?Sized,
        F: Fn(usize) -> bool,
    {
        let q: Vec<f64> = (0..points.dim()).map(|ax| points.coord(index, ax)).collect();
        self.nearest(points, &q, allow)
    }

    fn search<P, F>(&self, points: &P, node: usize, query: &[f64], allow: &F, best: &mut Option<Neighbor>)
    where
        P: PointSet + ?Sized,
        F: Fn(usize) -> bool,
    {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.perm[start..end] {
                    if !allow(i) {
                        continue;
                    }
                    let bound = best.map_or(f64::INFINITY, |b| b.dist2);
                    let mut d2 = 0.0;
                    for (ax, q) in query.iter().enumerate() {
                        let d = points.coord(i, ax) - q;
                        d2 += d * d;
                        if d2 > bound {
                            break;
                        }
                    }
                    let better = match best {
                        None => true,
                        Some(b) => d2 < b.dist2 || (d2 == b.dist2 && i < b.index),
                    };
                    if better {
                        *best = Some(Neighbor { index: i, dist2: d2 });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(points, near, query, allow, best);
                // Visit the far side unless it is strictly farther than the
                // current best; equality is kept so index ties resolve exactly.
                if best.map_or(true, |b| diff * diff <= b.dist2) {
                    self.search(points, far, query, allow, best);
                }
            }
        }
    }
}

/// Brute-force nearest neighbour with the same tie-breaking rule as
/// [`KdTree::nearest`]; used as an oracle.
pub fn brute_force_nearest<P, F>(points: &P, n: usize, query: &[f64], allow: F) -> Option<Neighbor>
where
    P: PointSet + ?Sized,
    F: Fn(usize) -> bool,
{
    let mut best: Option<Neighbor> = None;
    for i in 0..n {
        if !allow(i) {
            continue;
        }
        let d2: f64 = query
            .iter()
            .enumerate()
            .map(|(ax, q)| {
                let d = points.coord(i, ax) - q;
                d * d
            })
            .sum();
        if best.map_or(true, |b| d2 < b.dist2) {
            best = Some(Neighbor { index: i, dist2: d2 });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lcg_points(n: usize, dim: usize, seed: u64) -> DensePoints {
        let mut s = seed;
        let data = (0..n * dim)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        DensePoints::new(dim, data)
    }

    #[test]
    fn matches_brute_force_with_window() {
        let pts = lcg_points(3000, 4, 7);
        let tree = KdTree::build(&pts, pts.len());
        for q in (0..3000).step_by(37) {
            let allow = |i: usize| i.abs_diff(q) > 10;
            let query: Vec<f64> = (0..4).map(|a| pts.coord(q, a)).collect();
            let a = tree.nearest(&pts, &query, allow).unwrap();
            let b = brute_force_nearest(&pts, pts.len(), &query, allow).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        // Many duplicated points on a coarse grid.
        let data: Vec<f64> = (0..400).map(|i| ((i * 7) % 5) as f64).collect();
        let pts = DensePoints::new(2, data);
        let tree = KdTree::build(&pts, pts.len());
        for q in 0..pts.len() {
            let query = [pts.coord(q, 0), pts.coord(q, 1)];
            let a = tree.nearest(&pts, &query, |i| i != q).unwrap();
            let b = brute_force_nearest(&pts, pts.len(), &query, |i| i != q).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn empty_and_fully_excluded() {
        let pts = lcg_points(5, 2, 1);
        assert!(KdTree::build(&pts, 0).nearest(&pts, &[0.0, 0.0], |_| true).is_none());
        let tree = KdTree::build(&pts, 5);
        assert!(tree.nearest(&pts, &[0.0, 0.0], |_| false).is_none());
    }

    proptest! {
        #[test]
        fn prop_kdtree_equals_brute_force(seed in 0u64..1000, n in 1usize..300, dim in 1usize..6) {
            let pts = lcg_points(n, dim, seed);
            let tree = KdTree::build(&pts, n);
            let query: Vec<f64> = (0..dim).map(|a| 0.37 * (a as f64 + 1.0) % 1.0).collect();
            prop_assert_eq!(
                tree.nearest(&pts, &query, |i| i % 3 != 0),
                brute_force_nearest(&pts, n, &query, |i| i % 3 != 0)
            );
        }
    }
}
