#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use toporeg::persistence::{PersistenceDiagram, RipsFiltration};
use toporeg::PointCloud;

pub fn gaussian_cloud(n: usize, d: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    PointCloud::new(coords, d).unwrap()
}

pub fn uniform_cloud(n: usize, d: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * d).map(|_| rng.random::<f64>()).collect();
    PointCloud::new(coords, d).unwrap()
}

/// Unit circle, angles evenly spaced, radial Gaussian noise.
pub fn noisy_circle(n: usize, sigma: f64, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let rows: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let r = 1.0 + noise.sample(&mut rng);
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    PointCloud::from_rows(&rows).unwrap()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Simplices of a filtration as (vertices, value), built independently.
pub struct NaiveComplex {
    pub n: usize,
    pub edges: Vec<([usize; 2], f64)>,
    pub triangles: Vec<([usize; 3], f64)>,
}

impl NaiveComplex {
    /// Exact Rips straight from pairwise distances.
    pub fn exact(cloud: &PointCloud, max_edge: f64) -> Self {
        let n = cloud.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let d = dist(cloud.point(i), cloud.point(j));
                if d <= max_edge {
                    edges.push(([i, j], d));
                }
            }
        }
        let value: HashMap<[usize; 2], f64> = edges.iter().copied().collect();
        let mut triangles = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    if let (Some(x), Some(y), Some(z)) =
                        (value.get(&[a, b]), value.get(&[a, c]), value.get(&[b, c]))
                    {
                        triangles.push(([a, b, c], x.max(*y).max(*z)));
                    }
                }
            }
        }
        NaiveComplex { n, edges, triangles }
    }

    /// Edge set taken from `f`; triangles enumerated over all triples and
    /// filtered with the filtration's vertex limits.
    pub fn from_filtration(f: &RipsFiltration) -> Self {
        let n = f.num_vertices();
        let edges: Vec<([usize; 2], f64)> = f
            .edges()
            .iter()
            .map(|e| ([e.i as usize, e.j as usize], e.value))
            .collect();
        let value: HashMap<[usize; 2], f64> = edges.iter().copied().collect();
        let mut triangles = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    if let (Some(x), Some(y), Some(z)) =
                        (value.get(&[a, b]), value.get(&[a, c]), value.get(&[b, c]))
                    {
                        let v = x.max(*y).max(*z);
                        if [a, b, c].iter().all(|&u| v <= f.vertex_limit(u)) {
                            triangles.push(([a, b, c], v));
                        }
                    }
                }
            }
        }
        NaiveComplex { n, edges, triangles }
    }

    /// Full boundary-matrix reduction over Z/2, no clearing, no shortcuts.
    /// Returns (dim, birth, death) with zero-length pairs removed, sorted.
    pub fn diagram(&self) -> Vec<(usize, f64, f64)> {
        // global filtration: vertices, then edges, then triangles, each by value then vertices
        let mut edges = self.edges.clone();
        edges.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let mut tris = self.triangles.clone();
        tris.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let n = self.n;
        let ne = edges.len();
        let mut values = vec![0.0; n];
        values.extend(edges.iter().map(|e| e.1));
        values.extend(tris.iter().map(|t| t.1));
        let mut dims = vec![0usize; n];
        dims.extend(std::iter::repeat_n(1, ne));
        dims.extend(std::iter::repeat_n(2, tris.len()));
        let edge_id: HashMap<[usize; 2], usize> =
            edges.iter().enumerate().map(|(k, e)| (e.0, n + k)).collect();
        // sort order must place every face before its cofaces
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &edges {
            cols.push(vec![e.0[0], e.0[1]]);
        }
        for t in &tris {
            let [a, b, c] = t.0;
            let mut col = vec![edge_id[&[a, b]], edge_id[&[a, c]], edge_id[&[b, c]]];
            col.sort_unstable();
            cols.push(col);
        }
        let total = cols.len();
        let mut low_owner: HashMap<usize, usize> = HashMap::new();
        let mut paired = vec![false; total];
        let mut out = Vec::new();
        for j in 0..total {
            let mut col = cols[j].clone();
            while let Some(&low) = col.last() {
                match low_owner.get(&low) {
                    Some(&other) => {
                        let o = cols[other].clone();
                        let mut merged: Vec<usize> = col.iter().chain(o.iter()).copied().collect();
                        merged.sort_unstable();
                        let mut reduced = Vec::new();
                        for x in merged {
                            if reduced.last() == Some(&x) {
                                reduced.pop();
                            } else {
                                reduced.push(x);
                            }
                        }
                        col = reduced;
                    }
                    None => break,
                }
            }
            if let Some(&low) = col.last() {
                low_owner.insert(low, j);
                paired[low] = true;
                paired[j] = true;
                if values[j] > values[low] {
                    out.push((dims[low], values[low], values[j]));
                }
            }
            cols[j] = col;
        }
        for j in 0..total {
            // unpaired positive simplices below dimension 2 are essential
            if !paired[j] && cols[j].is_empty() && dims[j] < 2 {
                out.push((dims[j], values[j], f64::INFINITY));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
        out
    }
}

pub fn as_triples(d: &PersistenceDiagram) -> Vec<(usize, f64, f64)> {
    let mut v: Vec<(usize, f64, f64)> = d.features.iter().map(|f| (f.dim, f.birth, f.death)).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    v
}

/// Distance to measure by sorting all distances to the other points.
pub fn dtm_oracle(cloud: &PointCloud, k: usize, r: f64) -> Vec<f64> {
    (0..cloud.len())
        .map(|i| {
            let mut d: Vec<f64> = (0..cloud.len())
                .filter(|&j| j != i)
                .map(|j| dist(cloud.point(i), cloud.point(j)))
                .collect();
            d.sort_by(f64::total_cmp);
            power_mean(&d[..k], r)
        })
        .collect()
}

/// Distance to measure of an off-sample query against the whole cloud.
pub fn dtm_query_oracle(cloud: &PointCloud, q: &[f64], k: usize) -> f64 {
    let mut d: Vec<f64> = cloud.points().map(|p| dist(q, p)).collect();
    d.sort_by(f64::total_cmp);
    power_mean(&d[..k], 2.0)
}

fn power_mean(d: &[f64], r: f64) -> f64 {
    (d.iter().map(|x| x.powf(r)).sum::<f64>() / d.len() as f64).powf(1.0 / r)
}
