use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use super::{FieldKind, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{squared_distance, PointCloud};

/// Scott's rule `n^(-1/(d+4)) * sigma`, with `sigma` the mean per-coordinate
/// sample standard deviation.
pub fn scott_bandwidth(cloud: &PointCloud) -> Result<f64> {
    let (_, std) = cloud.mean_and_std();
    let sigma = std.iter().sum::<f64>() / std.len() as f64;
    if !(sigma > 0.0) {
        return Err(Error::ZeroBandwidth);
    }
    let n = cloud.len() as f64;
    Ok(n.powf(-1.0 / (cloud.dim() as f64 + 4.0)) * sigma)
}

/// Gaussian kernel density at every sample point, self-term included:
/// `f(x_i) = 1/(n h^d) * sum_j (2 pi)^(-d/2) exp(-|x_i - x_j|^2 / (2 h^2))`.
///
/// Exact pairwise evaluation, quadratic in `n`.
pub fn kde_gaussian(cloud: &PointCloud, bandwidth: Option<f64>) -> Result<ScalarField> {
    if cloud.len() < 2 {
        return Err(Error::InvalidArgument("KDE needs at least 2 points".into()));
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => {
            return Err(Error::InvalidArgument(format!("bandwidth must be > 0, got {h}")))
        }
        None => scott_bandwidth(cloud)?,
    };
    let n = cloud.len();
    let d = cloud.dim() as f64;
    let norm = 1.0 / (n as f64 * h.powf(d) * (2.0 * PI).powf(d / 2.0));
    let inv = 1.0 / (2.0 * h * h);
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            let s: f64 = cloud.points().map(|q| (-squared_distance(p, q) * inv).exp()).sum();
            s * norm
        })
        .collect();
    let mut params = BTreeMap::new();
    params.insert("bandwidth".to_owned(), h);
    params.insert("scott".to_owned(), if bandwidth.is_none() { 1.0 } else { 0.0 });
    Ok(ScalarField {
        values,
        kind: FieldKind::Kde,
        params,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_cloud(n: usize, d: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
        PointCloud::new(coords, d).unwrap()
    }

    #[test]
    fn two_point_hand_value() {
        let c = PointCloud::from_rows(&[[0.0], [1.0]]).unwrap();
        let f = kde_gaussian(&c, Some(1.0)).unwrap();
        let want = 0.5 / (2.0 * PI).sqrt() * (1.0 + (-0.5f64).exp());
        assert!((f.values[0] - want).abs() < 1e-15);
        assert!((f.values[1] - want).abs() < 1e-15);
    }

    #[test]
    fn translation_invariant() {
        let c = gaussian_cloud(200, 3, 1);
        let shifted: Vec<f64> = c.coords().iter().enumerate().map(|(i, x)| x + [5.0, -2.0, 0.25][i % 3]).collect();
        let s = PointCloud::new(shifted, 3).unwrap();
        let a = kde_gaussian(&c, None).unwrap();
        let b = kde_gaussian(&s, None).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn zero_spread_needs_explicit_bandwidth() {
        let c = PointCloud::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(kde_gaussian(&c, None), Err(Error::ZeroBandwidth)));
        assert!(kde_gaussian(&c, Some(0.5)).is_ok());
    }

    #[test]
    fn densest_decile_sits_near_origin() {
        let c = gaussian_cloud(10_000, 3, 7);
        let f = kde_gaussian(&c, None).unwrap();
        let mut idx: Vec<usize> = (0..c.len()).collect();
        idx.sort_by(|&a, &b| f.values[b].total_cmp(&f.values[a]));
        let norm = |i: usize| c.point(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        let top: f64 = idx[..1000].iter().map(|&i| norm(i)).sum::<f64>() / 1000.0;
        let all: f64 = (0..c.len()).map(norm).sum::<f64>() / c.len() as f64;
        assert!(top < all, "{top} vs {all}");
    }

    #[test]
    fn integrates_to_one_in_1d() {
        let c = gaussian_cloud(50, 1, 3);
        let h = scott_bandwidth(&c).unwrap();
        let (lo, hi) = (-12.0, 12.0);
        // Monte-Carlo over the box, evaluating the estimator off-sample
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = 200_000;
        let n = c.len() as f64;
        let mut acc = 0.0;
        for _ in 0..m {
            let x: f64 = rand::Rng::random_range(&mut rng, lo..hi);
            let s: f64 = c.points().map(|q| (-(x - q[0]).powi(2) / (2.0 * h * h)).exp()).sum();
            acc += s / (n * h * (2.0 * PI).sqrt());
        }
        let integral = acc / m as f64 * (hi - lo);
        assert!((integral - 1.0).abs() < 0.02, "{integral}");
    }
}
