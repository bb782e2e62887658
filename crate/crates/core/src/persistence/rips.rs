//! Vietoris-Rips filtrations, exact and sparse.
//!
//! The sparse construction follows Sheehy's net-tree sparsification as
//! implemented by common TDA libraries. Points are ordered by greedy
//! farthest-point insertion from point 0; `lambda_v` is the distance from
//! `v` to the points inserted before it (infinite for the first). For a pair
//! `p` inserted before `q` at distance `d`, with `eps = sparse_factor`:
//!
//! * `d * eps <= 2 lambda_q`: edge at value `d`;
//! * `d * eps <= lambda_p + lambda_q`: edge at `a = 2 (d - lambda_q / eps)`,
//!   dropped when `a > L_q`;
//! * otherwise no edge;
//!
//! where `L_v = 2 lambda_v / (eps (1 - eps))`. A triangle is present at the
//! largest value of its edges unless that value exceeds `L_v` for one of its
//! vertices. The result is `1/(1 - eps)`-interleaved with the exact Rips
//! filtration. Exact duplicates (`lambda = 0`) keep only zero-length edges.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, KdTree, PointCloud};

/// Default cap on stored edges (about 320 MB of edges plus adjacency).
pub const DEFAULT_EDGE_BUDGET: usize = 20_000_000;

/// Sparse construction is reported against an exact edge count only below
/// this many points.
const EXACT_COUNT_LIMIT: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: u32,
    pub j: u32,
    /// Filtration value; the Euclidean length for exact Rips.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseInfo {
    pub sparse_factor: f64,
    /// Multiplicative interleaving constant `1 / (1 - eps)`.
    pub interleaving_factor: f64,
    pub edges: usize,
    /// Edge count of the exact complex at the same cap, when computed.
    pub exact_edges: Option<usize>,
    pub retained_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RipsOptions {
    pub max_edge: f64,
    pub sparse_factor: Option<f64>,
    pub edge_budget: usize,
}

impl RipsOptions {
    pub fn new(max_edge: f64, sparse_factor: Option<f64>) -> Self {
        RipsOptions {
            max_edge,
            sparse_factor,
            edge_budget: DEFAULT_EDGE_BUDGET,
        }
    }
}

/// The 2-skeleton of a (possibly sparse) Rips filtration.
///
/// Edges are stored sorted by `(value, i, j)` with `i < j`; triangles are
/// implicit (3-cliques of the edge graph, minus blocked ones) and are
/// enumerated on demand.
#[derive(Debug, Clone)]
pub struct RipsFiltration {
    n: usize,
    max_edge: f64,
    edges: Vec<Edge>,
    // CSR adjacency: neighbors of v are adj[offsets[v]..offsets[v+1]], sorted
    // by neighbor, each paired with its edge index
    offsets: Vec<usize>,
    adj: Vec<(u32, u32)>,
    vertex_limit: Option<Vec<f64>>,
    sparse: Option<SparseInfo>,
}

pub fn build_rips(cloud: &PointCloud, max_edge: f64, sparse_factor: Option<f64>) -> Result<RipsFiltration> {
    build_rips_with(cloud, &RipsOptions::new(max_edge, sparse_factor))
}

pub fn build_rips_with(cloud: &PointCloud, opts: &RipsOptions) -> Result<RipsFiltration> {
    if !(opts.max_edge > 0.0) || !opts.max_edge.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "max_edge must be a finite value > 0, got {}",
            opts.max_edge
        )));
    }
    if cloud.len() > u32::MAX as usize {
        return Err(Error::InvalidArgument("too many points for a Rips complex".into()));
    }
    match opts.sparse_factor {
        None => {
            let edges = exact_edges(cloud, opts.max_edge, opts.edge_budget)?;
            Ok(RipsFiltration::from_sorted(cloud.len(), opts.max_edge, edges, None, None))
        }
        Some(eps) => {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "sparse_factor must lie in (0, 1], got {eps}"
                )));
            }
            sparse_rips(cloud, opts.max_edge, eps, opts.edge_budget)
        }
    }
}

fn sort_edges(edges: &mut [Edge]) {
    edges.par_sort_unstable_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
    });
}

fn check_budget(count: usize, budget: usize) -> Result<()> {
    if count > budget {
        return Err(Error::EdgeBudget {
            edges: count,
            budget,
        });
    }
    Ok(())
}

fn exact_edges(cloud: &PointCloud, max_edge: f64, budget: usize) -> Result<Vec<Edge>> {
    let tree = KdTree::new(cloud);
    let per_point: Vec<Vec<Edge>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            tree.within(cloud.point(i), max_edge)
                .into_iter()
                .filter(|&(j, _)| j > i)
                .map(|(j, d)| Edge {
                    i: i as u32,
                    j: j as u32,
                    value: d,
                })
                .collect()
        })
        .collect();
    check_budget(per_point.iter().map(Vec::len).sum(), budget)?;
    let mut edges: Vec<Edge> = per_point.into_iter().flatten().collect();
    sort_edges(&mut edges);
    Ok(edges)
}

/// Number of pairs at distance `<= max_edge`, without storing them.
pub fn count_exact_edges(cloud: &PointCloud, max_edge: f64) -> usize {
    let tree = KdTree::new(cloud);
    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            tree.within(cloud.point(i), max_edge)
                .into_iter()
                .filter(|&(j, _)| j > i)
                .count()
        })
        .sum()
}

/// Greedy farthest-point ordering from point 0.
///
/// Returns `(order, lambda)` where `lambda[v]` is the insertion radius of
/// point `v` (infinite for point 0). Ties pick the lowest index.
pub fn farthest_point_order(cloud: &PointCloud) -> (Vec<usize>, Vec<f64>) {
    let n = cloud.len();
    let mut order = Vec::with_capacity(n);
    let mut lambda = vec![0.0; n];
    let mut dmin = vec![f64::INFINITY; n];
    let mut taken = vec![false; n];
    let mut next = 0usize;
    lambda[0] = f64::INFINITY;
    for step in 0..n {
        order.push(next);
        taken[next] = true;
        if step > 0 {
            lambda[next] = dmin[next];
        }
        let p = cloud.point(next);
        let mut best = usize::MAX;
        let mut best_d = f64::NEG_INFINITY;
        for v in 0..n {
            if taken[v] {
                continue;
            }
            let d = distance(p, cloud.point(v));
            if d < dmin[v] {
                dmin[v] = d;
            }
            if dmin[v] > best_d {
                best_d = dmin[v];
                best = v;
            }
        }
        if best == usize::MAX {
            break;
        }
        next = best;
    }
    (order, lambda)
}

fn vertex_limit(lambda: f64, eps: f64) -> f64 {
    if lambda == f64::INFINITY || eps >= 1.0 && lambda > 0.0 {
        f64::INFINITY
    } else if lambda == 0.0 {
        0.0
    } else {
        2.0 * lambda / (eps * (1.0 - eps))
    }
}

fn sparse_rips(cloud: &PointCloud, max_edge: f64, eps: f64, budget: usize) -> Result<RipsFiltration> {
    let n = cloud.len();
    let (order, lambda) = farthest_point_order(cloud);
    let mut rank = vec![0usize; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let limit: Vec<f64> = lambda.iter().map(|&l| vertex_limit(l, eps)).collect();
    let tree = KdTree::new(cloud);
    let per_point: Vec<Vec<Edge>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let lp = lambda[p];
            let radius = (2.0 * lp / eps).min(max_edge / 2.0 + lp / eps);
            let mut out = Vec::new();
            for (q, d) in tree.within(cloud.point(p), radius) {
                if rank[q] <= rank[p] {
                    continue;
                }
                let lq = lambda[q];
                let value = if d * eps <= 2.0 * lq {
                    d
                } else if d * eps <= lp + lq {
                    let a = 2.0 * (d - lq / eps);
                    if a > limit[q] {
                        continue;
                    }
                    a
                } else {
                    continue;
                };
                if value <= max_edge {
                    let (i, j) = if p < q { (p, q) } else { (q, p) };
                    out.push(Edge {
                        i: i as u32,
                        j: j as u32,
                        value,
                    });
                }
            }
            out
        })
        .collect();
    check_budget(per_point.iter().map(Vec::len).sum(), budget)?;
    let mut edges: Vec<Edge> = per_point.into_iter().flatten().collect();
    sort_edges(&mut edges);
    let exact = (n <= EXACT_COUNT_LIMIT).then(|| count_exact_edges(cloud, max_edge));
    let info = SparseInfo {
        sparse_factor: eps,
        interleaving_factor: if eps < 1.0 { 1.0 / (1.0 - eps) } else { f64::INFINITY },
        edges: edges.len(),
        exact_edges: exact,
        retained_fraction: exact.map(|e| if e == 0 { 1.0 } else { edges.len() as f64 / e as f64 }),
    };
    Ok(RipsFiltration::from_sorted(n, max_edge, edges, Some(limit), Some(info)))
}

impl RipsFiltration {
    /// Builds a filtration from an explicit edge list (sorted internally).
    /// Every 3-clique becomes a triangle.
    pub fn from_edges(n: usize, max_edge: f64, mut edges: Vec<Edge>) -> Result<Self> {
        for e in &mut edges {
            if e.i == e.j || e.i as usize >= n || e.j as usize >= n {
                return Err(Error::InvalidArgument(format!("bad edge ({}, {})", e.i, e.j)));
            }
            if e.i > e.j {
                std::mem::swap(&mut e.i, &mut e.j);
            }
        }
        sort_edges(&mut edges);
        Ok(Self::from_sorted(n, max_edge, edges, None, None))
    }

    fn from_sorted(
        n: usize,
        max_edge: f64,
        edges: Vec<Edge>,
        vertex_limit: Option<Vec<f64>>,
        sparse: Option<SparseInfo>,
    ) -> Self {
        let mut degree = vec![0usize; n + 1];
        for e in &edges {
            degree[e.i as usize] += 1;
            degree[e.j as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![(0u32, 0u32); offsets[n]];
        for (k, e) in edges.iter().enumerate() {
            adj[fill[e.i as usize]] = (e.j, k as u32);
            fill[e.i as usize] += 1;
            adj[fill[e.j as usize]] = (e.i, k as u32);
            fill[e.j as usize] += 1;
        }
        for v in 0..n {
            adj[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        RipsFiltration {
            n,
            max_edge,
            edges,
            offsets,
            adj,
            vertex_limit,
            sparse,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn max_edge(&self) -> f64 {
        self.max_edge
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn sparse_info(&self) -> Option<&SparseInfo> {
        self.sparse.as_ref()
    }

    /// Sorted `(neighbor, edge index)` pairs of vertex `v`.
    pub fn neighbors(&self, v: usize) -> &[(u32, u32)] {
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let nb = self.neighbors(a);
        nb.binary_search_by_key(&(b as u32), |&(u, _)| u)
            .ok()
            .map(|k| nb[k].1 as usize)
    }

    /// Largest filtration value at which `v` may be a triangle vertex.
    pub fn vertex_limit(&self, v: usize) -> f64 {
        self.vertex_limit.as_ref().map_or(f64::INFINITY, |l| l[v])
    }

    /// Whether a triangle with these vertices and value is part of the complex.
    pub fn triangle_allowed(&self, vertices: [usize; 3], value: f64) -> bool {
        match &self.vertex_limit {
            None => true,
            Some(l) => vertices.iter().all(|&v| value <= l[v]),
        }
    }

    /// All triangles as `([a, b, c], value)` with `a < b < c`, unsorted.
    pub fn triangles(&self) -> Vec<([usize; 3], f64)> {
        let mut out = Vec::new();
        for e in &self.edges {
            let (a, b) = (e.i as usize, e.j as usize);
            self.for_each_common_neighbor(a, b, |c, eac, ebc| {
                if c > b {
                    let v = e.value.max(self.edges[eac].value).max(self.edges[ebc].value);
                    if self.triangle_allowed([a, b, c], v) {
                        out.push(([a, b, c], v));
                    }
                }
            });
        }
        out
    }

    /// Calls `f(c, edge(a,c), edge(b,c))` for each common neighbor `c` of `a` and `b`.
    #[inline]
    pub(crate) fn for_each_common_neighbor(&self, a: usize, b: usize, mut f: impl FnMut(usize, usize, usize)) {
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        let (mut x, mut y) = (0, 0);
        while x < na.len() && y < nb.len() {
            let (u, w) = (na[x].0, nb[y].0);
            if u < w {
                x += 1;
            } else if w < u {
                y += 1;
            } else {
                f(u as usize, na[x].1 as usize, nb[y].1 as usize);
                x += 1;
                y += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noisy_circle(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let rows: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                let r = 1.0 + noise.sample(&mut rng);
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        PointCloud::from_rows(&rows).unwrap()
    }

    #[test]
    fn unit_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let c = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        let f = build_rips(&c, 5.0, None).unwrap();
        assert_eq!(f.edges().len(), 3);
        let t = f.triangles();
        assert_eq!(t.len(), 1);
        assert!((t[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cap_excludes_long_edge() {
        let c = PointCloud::from_rows(&[[0.0], [6.0]]).unwrap();
        assert!(build_rips(&c, 5.0, None).unwrap().edges().is_empty());
    }

    #[test]
    fn exact_count_matches_enumeration() {
        let c = noisy_circle(100, 4);
        let f = build_rips(&c, 0.8, None).unwrap();
        let mut want = 0;
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                if distance(c.point(i), c.point(j)) <= 0.8 {
                    want += 1;
                }
            }
        }
        assert_eq!(f.edges().len(), want);
        assert_eq!(count_exact_edges(&c, 0.8), want);
        assert!(f.edges().windows(2).all(|w| w[0].value <= w[1].value));
    }

    #[test]
    fn budget_is_enforced() {
        let c = noisy_circle(50, 1);
        let opts = RipsOptions {
            max_edge: 5.0,
            sparse_factor: None,
            edge_budget: 10,
        };
        assert!(matches!(
            build_rips_with(&c, &opts),
            Err(Error::EdgeBudget { budget: 10, .. })
        ));
    }

    #[test]
    fn sparse_values_dominate_lengths() {
        let c = noisy_circle(300, 2);
        let f = build_rips(&c, 5.0, Some(0.7)).unwrap();
        let info = f.sparse_info().unwrap();
        assert!(info.retained_fraction.unwrap() < 1.0);
        for e in f.edges() {
            let d = distance(c.point(e.i as usize), c.point(e.j as usize));
            assert!(e.value >= d - 1e-12);
            // the interleaving bound on individual edge values
            assert!(e.value <= d / (1.0 - 0.7) + 1e-9);
        }
    }

    #[test]
    fn farthest_point_radii_decrease() {
        let c = noisy_circle(80, 3);
        let (order, lambda) = farthest_point_order(&c);
        assert_eq!(order[0], 0);
        let radii: Vec<f64> = order.iter().skip(1).map(|&v| lambda[v]).collect();
        assert!(radii.windows(2).all(|w| w[0] >= w[1]));
    }
}
