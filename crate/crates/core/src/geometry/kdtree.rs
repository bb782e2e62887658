//! Exact k-d tree over a [`PointCloud`].
//!
//! Queries return exactly what an exhaustive scan would: neighbors are
//! ordered by `(squared distance, point index)`, so ties between equidistant
//! points resolve toward the lower index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{squared_distance, PointCloud};

const LEAF_SIZE: usize = 16;

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

/// Static k-d tree borrowing the cloud it indexes.
#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    cloud: &'a PointCloud,
    order: Vec<usize>,
    nodes: Vec<Node>,
    // per-node bounding boxes, `2 * d` values each (lo then hi)
    bounds: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> KdTree<'a> {
    pub fn new(cloud: &'a PointCloud) -> Self {
        let mut tree = KdTree {
            cloud,
            order: (0..cloud.len()).collect(),
            nodes: Vec::new(),
            bounds: Vec::new(),
        };
        tree.build(0, cloud.len());
        tree
    }

    pub fn cloud(&self) -> &PointCloud {
        self.cloud
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let d = self.cloud.dim();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &i in &self.order[start..end] {
            for (a, &x) in self.cloud.point(i).iter().enumerate() {
                lo[a] = lo[a].min(x);
                hi[a] = hi[a].max(x);
            }
        }
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);

        if end - start <= LEAF_SIZE {
            return id;
        }
        let axis = (0..d)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        if hi[axis] - lo[axis] <= 0.0 {
            // every point in this node coincides
            return id;
        }
        let mid = start + (end - start) / 2;
        let cloud = self.cloud;
        self.order[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
            cloud.point(i)[axis].total_cmp(&cloud.point(j)[axis])
        });
        let value = cloud.point(self.order[mid])[axis];
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    fn box_distance2(&self, node: usize, q: &[f64]) -> f64 {
        let d = q.len();
        let lo = &self.bounds[2 * d * node..2 * d * node + d];
        let hi = &self.bounds[2 * d * node + d..2 * d * (node + 1)];
        let mut acc = 0.0;
        for a in 0..d {
            let diff = if q[a] < lo[a] {
                lo[a] - q[a]
            } else if q[a] > hi[a] {
                q[a] - hi[a]
            } else {
                0.0
            };
            acc += diff * diff;
        }
        acc
    }

    /// The `k` nearest cloud points to `q`, skipping `exclude`.
    ///
    /// Returns `(index, distance)` pairs sorted by distance then index.
    pub fn nearest(&self, q: &[f64], k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.nearest_rec(0, q, k, exclude, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| (c.index, c.d2.sqrt())).collect()
    }

    fn nearest_rec(
        &self,
        node: usize,
        q: &[f64],
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        if heap.len() == k {
            let worst = heap.peek().map(|c| c.d2).unwrap_or(f64::INFINITY);
            if self.box_distance2(node, q) > worst {
                return;
            }
        }
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let c = Candidate {
                        d2: squared_distance(q, self.cloud.point(i)),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if let Some(top) = heap.peek() {
                        if c < *top {
                            heap.pop();
                            heap.push(c);
                        }
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let (first, second) = if q[axis] < value {
                    (left, right)
                } else {
                    (right, left)
                };
                self.nearest_rec(first, q, k, exclude, heap);
                self.nearest_rec(second, q, k, exclude, heap);
            }
        }
    }

    /// All cloud points within Euclidean distance `radius` of `q` (inclusive),
    /// as `(index, distance)` in arbitrary order.
    pub fn within(&self, q: &[f64], radius: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        if radius < 0.0 || radius.is_nan() {
            return out;
        }
        // pad the squared bound so the exact `sqrt(d2) <= radius` test decides
        let r2 = radius * radius * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        self.within_rec(0, q, radius, r2, &mut out);
        out
    }

    fn within_rec(&self, node: usize, q: &[f64], radius: f64, r2: f64, out: &mut Vec<(usize, f64)>) {
        if self.box_distance2(node, q) > r2 {
            return;
        }
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = squared_distance(q, self.cloud.point(i));
                    if d2 <= r2 {
                        let d = d2.sqrt();
                        if d <= radius {
                            out.push((i, d));
                        }
                    }
                }
            }
            Node::Split { left, right, .. } => {
                self.within_rec(left, q, radius, r2, out);
                self.within_rec(right, q, radius, r2, out);
            }
        }
    }
}
