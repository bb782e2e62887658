//! Point clouds and the geometric primitives the rest of the crate builds on.

pub mod io;
mod kdtree;

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub use io::{binary_bytes, csv_string, read_binary, read_csv, read_points, write_binary, write_csv, BINARY_MAGIC};
pub use kdtree::KdTree;

use crate::error::{Error, Result};

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// An ordered set of `n` points in `R^d`, stored row-major.
///
/// `origin[i]` is the index point `i` had in the cloud it was cut from
/// (identity for freshly built clouds), so subsets can be traced back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
    meta: Option<Vec<f64>>,
    meta_name: Option<String>,
    origin: Vec<usize>,
}

impl PointCloud {
    /// Builds a cloud from a row-major coordinate buffer.
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("point dimension must be >= 1".into()));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "coordinate buffer of length {} does not hold a whole number of {dim}-vectors",
                coords.len()
            )));
        }
        let n = coords.len() / dim;
        Ok(PointCloud {
            coords,
            dim,
            meta: None,
            meta_name: None,
            origin: (0..n).collect(),
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::InvalidArgument("a point cloud needs at least one point".into()))?;
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            coords.extend_from_slice(r);
        }
        Self::new(coords, dim)
    }

    /// Attaches a per-point scalar channel (e.g. jet latitude).
    pub fn with_meta(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "meta channel has {} values for {} points",
                values.len(),
                self.len()
            )));
        }
        self.meta = Some(values);
        self.meta_name = Some(name.into());
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false: a cloud holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn meta(&self) -> Option<&[f64]> {
        self.meta.as_deref()
    }

    pub fn meta_name(&self) -> Option<&str> {
        self.meta_name.as_deref()
    }

    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    /// The sub-cloud made of `indices` (in that order); meta and origin follow.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointCloud {
            coords,
            dim: self.dim,
            meta: self.meta.as_ref().map(|m| indices.iter().map(|&i| m[i]).collect()),
            meta_name: self.meta_name.clone(),
            origin: indices.iter().map(|&i| self.origin[i]).collect(),
        }
    }

    /// Forgets subset provenance: `origin` becomes the identity.
    pub fn reindexed(mut self) -> PointCloud {
        self.origin = (0..self.len()).collect();
        self
    }

    /// Per-coordinate sample mean and standard deviation (divisor `n - 1`).
    pub fn mean_and_std(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len() as f64;
        let d = self.dim;
        let mut mean = vec![0.0; d];
        for p in self.points() {
            for a in 0..d {
                mean[a] += p[a];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for p in self.points() {
            for a in 0..d {
                let c = p[a] - mean[a];
                var[a] += c * c;
            }
        }
        let denom = (n - 1.0).max(1.0);
        (mean, var.into_iter().map(|v| (v / denom).sqrt()).collect())
    }

    /// Scales every coordinate to unit sample variance without centering.
    ///
    /// Coordinates with zero variance pass through unchanged; their axis
    /// indices are returned alongside the scaled cloud.
    pub fn normalize(&self) -> Result<(PointCloud, Vec<usize>)> {
        if self.len() < 2 {
            return Err(Error::InvalidArgument("normalization needs at least two points".into()));
        }
        let (_, std) = self.mean_and_std();
        let mut flat = Vec::new();
        let scale: Vec<f64> = std
            .iter()
            .enumerate()
            .map(|(a, &s)| {
                if s > 0.0 && s.is_finite() {
                    1.0 / s
                } else {
                    flat.push(a);
                    1.0
                }
            })
            .collect();
        for &a in &flat {
            log::warn!("coordinate {a} has zero variance and was left unscaled");
        }
        let mut out = self.clone();
        for p in out.coords.chunks_exact_mut(self.dim) {
            for (x, s) in p.iter_mut().zip(&scale) {
                *x *= s;
            }
        }
        Ok((out, flat))
    }

    /// Projects the mean-centered cloud onto its leading principal axes.
    pub fn pca_project(&self, n_components: usize) -> Result<Pca> {
        let n = self.len();
        let d = self.dim;
        if n < 2 {
            return Err(Error::InvalidArgument("PCA needs at least two points".into()));
        }
        if n_components == 0 || n_components > d {
            return Err(Error::InvalidArgument(format!(
                "n_components must lie in 1..={d}, got {n_components}"
            )));
        }
        let (mean, _) = self.mean_and_std();
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for p in self.points() {
            for a in 0..d {
                let ca = p[a] - mean[a];
                for b in a..d {
                    cov[(a, b)] += ca * (p[b] - mean[b]);
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                let v = cov[(a, b)] / (n as f64 - 1.0);
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        let trace = cov.trace();
        let eig = SymmetricEigen::new(cov);
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::RankDeficient {
                rank: 0,
                requested: n_components,
            });
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
        let top = eig.eigenvalues[order[0]].max(0.0);
        let tol = top * 1e-12 * d as f64;
        let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > tol).count();
        if rank == 0 {
            return Err(Error::RankDeficient {
                rank,
                requested: n_components,
            });
        }
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let components: Vec<Vec<f64>> = order
            .iter()
            .map(|&i| {
                let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
                let lead = v
                    .iter()
                    .copied()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
                    .map(|(_, x)| x)
                    .unwrap_or(1.0);
                if lead < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            })
            .collect();
        let mut coords = Vec::with_capacity(n * n_components);
        for p in self.points() {
            for comp in components.iter().take(n_components) {
                coords.push((0..d).map(|a| (p[a] - mean[a]) * comp[a]).sum());
            }
        }
        let mut cloud = PointCloud::new(coords, n_components)?;
        cloud.meta = self.meta.clone();
        cloud.meta_name = self.meta_name.clone();
        cloud.origin = self.origin.clone();
        Ok(Pca {
            cloud,
            mean,
            eigenvalues,
            components,
            rank,
            total_variance: trace,
        })
    }

    /// The `k` nearest other points to point `query`.
    pub fn knn(&self, query: usize, k: usize) -> Result<NeighborResult> {
        self.check_k(k)?;
        if query >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "query index {query} out of range for {} points",
                self.len()
            )));
        }
        let tree = KdTree::new(self);
        Ok(NeighborResult::from_pairs(tree.nearest(self.point(query), k, Some(query))))
    }

    /// k-NN for every point, computed against one shared tree.
    pub fn knn_all(&self, k: usize) -> Result<Vec<NeighborResult>> {
        use rayon::prelude::*;
        self.check_k(k)?;
        let tree = KdTree::new(self);
        Ok((0..self.len())
            .into_par_iter()
            .map(|i| NeighborResult::from_pairs(tree.nearest(self.point(i), k, Some(i))))
            .collect())
    }

    pub(crate) fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k >= self.len() {
            return Err(Error::NeighborCount { k, n: self.len() });
        }
        Ok(())
    }

    /// Greedy subsample in input order keeping points at least
    /// `min_separation` from every point kept before them.
    pub fn sparsify(&self, min_separation: f64) -> Result<PointCloud> {
        Ok(self.select(&self.sparsify_indices(min_separation)?))
    }

    pub fn sparsify_indices(&self, min_separation: f64) -> Result<Vec<usize>> {
        if !(min_separation >= 0.0) || !min_separation.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "min_separation must be a finite value >= 0, got {min_separation}"
            )));
        }
        if min_separation == 0.0 {
            return Ok((0..self.len()).collect());
        }
        if self.dim > 4 {
            return Ok(self.sparsify_scan(min_separation));
        }
        // hash grid with cell side = min_separation: conflicts live in adjacent cells
        let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        let mut kept = Vec::new();
        let offsets = neighbor_offsets(self.dim);
        let mut key = vec![0i64; self.dim];
        for i in 0..self.len() {
            let p = self.point(i);
            let cell: Vec<i64> = p.iter().map(|x| (x / min_separation).floor() as i64).collect();
            let clash = offsets.iter().any(|off| {
                for a in 0..self.dim {
                    key[a] = cell[a] + off[a];
                }
                grid.get(&key).is_some_and(|members| {
                    members
                        .iter()
                        .any(|&j| distance(p, self.point(j)) < min_separation)
                })
            });
            if !clash {
                kept.push(i);
                grid.entry(cell).or_default().push(i);
            }
        }
        Ok(kept)
    }

    fn sparsify_scan(&self, min_separation: f64) -> Vec<usize> {
        let mut kept: Vec<usize> = Vec::new();
        for i in 0..self.len() {
            let p = self.point(i);
            if kept
                .iter()
                .all(|&j| distance(p, self.point(j)) >= min_separation)
            {
                kept.push(i);
            }
        }
        kept
    }

    /// Euclidean diameter of the axis-aligned bounding box.
    pub fn bounding_diagonal(&self) -> f64 {
        let d = self.dim;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in self.points() {
            for a in 0..d {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        distance(&lo, &hi)
    }
}

fn neighbor_offsets(dim: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-1..=1).map(move |o| {
                    let mut v = prefix.clone();
                    v.push(o);
                    v
                })
            })
            .collect();
    }
    out
}

/// Output of [`PointCloud::pca_project`].
#[derive(Debug, Clone)]
pub struct Pca {
    pub cloud: PointCloud,
    pub mean: Vec<f64>,
    /// All `d` covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors matching `eigenvalues`; the largest-magnitude entry is positive.
    pub components: Vec<Vec<f64>>,
    pub rank: usize,
    pub total_variance: f64,
}

impl Pca {
    /// Maps projected coordinates back to the input space.
    pub fn lift(&self, projected: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, comp) in projected.iter().zip(&self.components) {
            for (o, v) in out.iter_mut().zip(comp) {
                *o += c * v;
            }
        }
        out
    }
}

/// The `k` nearest neighbors of a query point, nearest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborResult {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

impl NeighborResult {
    fn from_pairs(pairs: Vec<(usize, f64)>) -> Self {
        let (indices, distances) = pairs.into_iter().unzip();
        NeighborResult { indices, distances }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn line(xs: &[f64]) -> PointCloud {
        PointCloud::new(xs.to_vec(), 1).unwrap()
    }

    #[test]
    fn normalize_two_points() {
        let c = PointCloud::from_rows(&[[0.0, 1.0], [2.0, 1.0]]).unwrap();
        let (out, flat) = c.normalize().unwrap();
        // sigma = sqrt(2) with divisor n - 1
        assert_eq!(out.point(0)[0], 0.0);
        assert!((out.point(1)[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(flat, vec![1]);
        assert_eq!(out.point(1)[1], 1.0);
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<[f64; 3]> = (0..200)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                let y: f64 = StandardNormal.sample(&mut rng);
                [3.0 * x, 0.1 * y + 5.0, x - y]
            })
            .collect();
        let (once, _) = PointCloud::from_rows(&rows).unwrap().normalize().unwrap();
        let (_, std) = once.mean_and_std();
        for s in std {
            assert!((s - 1.0).abs() < 1e-9);
        }
        let (twice, _) = once.normalize().unwrap();
        for (a, b) in once.coords().iter().zip(twice.coords()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_needs_two_points() {
        assert!(line(&[1.0]).normalize().is_err());
    }

    #[test]
    fn pca_on_a_line() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [5.0, 5.0]]).unwrap();
        let pca = c.pca_project(2).unwrap();
        assert_eq!(pca.rank, 1);
        assert!(pca.eigenvalues[1].abs() < 1e-12);
        assert!((pca.eigenvalues[0] - pca.total_variance).abs() < 1e-12);
        for p in pca.cloud.points() {
            assert!(p[1].abs() < 1e-12);
        }
        // sign convention: largest entry positive
        assert!(pca.components[0].iter().all(|&x| x > 0.0));
    }

    #[test]
    fn pca_full_rank_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..4).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let c = PointCloud::from_rows(&rows).unwrap();
        let pca = c.pca_project(4).unwrap();
        assert_eq!(pca.rank, 4);
        let kept: f64 = pca.eigenvalues.iter().sum();
        assert!((kept - pca.total_variance).abs() < 1e-10);
        for (i, p) in pca.cloud.points().enumerate() {
            let back = pca.lift(p);
            for (x, y) in back.iter().zip(c.point(i)) {
                assert!((x - y).abs() < 1e-8);
            }
        }
        let partial = c.pca_project(2).unwrap();
        assert!(partial.eigenvalues[..2].iter().sum::<f64>() <= partial.total_variance + 1e-12);
    }

    #[test]
    fn pca_rejects_identical_points() {
        let c = PointCloud::from_rows(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
        assert!(matches!(c.pca_project(1), Err(Error::RankDeficient { rank: 0, .. })));
    }

    #[test]
    fn knn_collinear() {
        let c = line(&[0.0, 1.0, 3.0]);
        let r = c.knn(0, 2).unwrap();
        assert_eq!(r.indices, vec![1, 2]);
        assert_eq!(r.distances, vec![1.0, 3.0]);
        assert!(matches!(c.knn(0, 3), Err(Error::NeighborCount { k: 3, n: 3 })));
        assert!(c.knn(0, 0).is_err());
    }

    #[test]
    fn knn_duplicate_point() {
        let c = line(&[2.0, 5.0, 2.0]);
        let r = c.knn(0, 1).unwrap();
        assert_eq!(r.indices, vec![2]);
        assert_eq!(r.distances, vec![0.0]);
    }

    #[test]
    fn knn_tie_prefers_lower_index() {
        let c = line(&[0.0, 1.0, -1.0]);
        assert_eq!(c.knn(0, 1).unwrap().indices, vec![1]);
    }

    #[test]
    fn sparsify_examples() {
        let c = line(&[0.0, 0.01, 1.0]);
        assert_eq!(c.sparsify(0.0).unwrap(), c);
        let s = c.sparsify(0.05).unwrap();
        assert_eq!(s.coords(), &[0.0, 1.0]);
        assert_eq!(s.origin(), &[0, 2]);
        assert_eq!(s.sparsify(0.05).unwrap(), s);
        assert!(c.sparsify(-1.0).is_err());
    }

    #[test]
    fn sparsify_grid_agrees_with_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..500)
            .map(|_| (0..3).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let c = PointCloud::from_rows(&rows).unwrap();
        for sep in [0.05, 0.3, 1.0] {
            assert_eq!(c.sparsify_indices(sep).unwrap(), c.sparsify_scan(sep));
        }
    }

    #[test]
    fn select_tracks_origin_and_meta() {
        let c = line(&[0.0, 1.0, 2.0, 3.0])
            .with_meta("lat", vec![10.0, 11.0, 12.0, 13.0])
            .unwrap();
        let s = c.select(&[3, 1]);
        let t = s.select(&[1]);
        assert_eq!(t.origin(), &[1]);
        assert_eq!(t.meta(), Some(&[11.0][..]));
        assert_eq!(t.meta_name(), Some("lat"));
    }
}
