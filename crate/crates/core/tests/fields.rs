mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toporeg::dynamics::{integrate, OdeSystem, SystemKind, TrajectoryConfig};
use toporeg::fields::{binning_density, centrality, dtm, dtm_at, kde_gaussian, FieldSpec};
use toporeg::geometry::KdTree;
use toporeg::PointCloud;

use common::{dist, dtm_oracle, dtm_query_oracle, gaussian_cloud, uniform_cloud};

#[test]
fn dtm_matches_oracle_on_random_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for trial in 0..100 {
        let n = rng.random_range(2..=500);
        let d = rng.random_range(1..=5);
        let c = uniform_cloud(n, d, trial);
        let k = rng.random_range(1..n);
        let r = if trial % 3 == 0 { 1.0 } else { 2.0 };
        let got = dtm(&c, k, r).unwrap().values;
        let want = dtm_oracle(&c, k, r);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b), "trial {trial}: {a} vs {b}");
        }
    }
}

#[test]
fn dtm_monotone_in_k_and_lipschitz() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..3 {
        let c = gaussian_cloud(300, 3, seed);
        let tree = KdTree::new(&c);
        let mut violations = 0;
        for _ in 0..10_000 {
            let mut k1 = rng.random_range(1..=c.len());
            let mut k2 = rng.random_range(1..=c.len());
            if k1 > k2 {
                std::mem::swap(&mut k1, &mut k2);
            }
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let dx1 = dtm_at(&tree, &x, k1, 2.0).unwrap();
            let dx2 = dtm_at(&tree, &x, k2, 2.0).unwrap();
            let dy1 = dtm_at(&tree, &y, k1, 2.0).unwrap();
            if dx1 > dx2 + 1e-12 {
                violations += 1;
            }
            if (dx1 - dy1).abs() > dist(&x, &y) + 1e-12 {
                violations += 1;
            }
        }
        assert_eq!(violations, 0);
    }
}

#[test]
fn off_sample_dtm_matches_oracle() {
    let c = uniform_cloud(200, 2, 7);
    let tree = KdTree::new(&c);
    for q in uniform_cloud(30, 2, 8).points() {
        for k in [1, 7, 200] {
            let a = dtm_at(&tree, q, k, 2.0).unwrap();
            assert!((a - dtm_query_oracle(&c, q, k)).abs() < 1e-12);
        }
    }
}

#[test]
fn centrality_with_all_neighbors_ranks_by_mean_distance() {
    for seed in 0..5 {
        let c = uniform_cloud(120 + 50 * seed as usize, 3, 40 + seed);
        let n = c.len();
        let cent = centrality(&c, n - 1).unwrap().values;
        let msq: Vec<f64> = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).map(|j| dist(c.point(i), c.point(j)).powi(2)).sum::<f64>())
            .collect();
        let mut by_c: Vec<usize> = (0..n).collect();
        by_c.sort_by(|&a, &b| cent[b].total_cmp(&cent[a]).then(a.cmp(&b)));
        let mut by_m: Vec<usize> = (0..n).collect();
        by_m.sort_by(|&a, &b| msq[a].total_cmp(&msq[b]).then(a.cmp(&b)));
        assert_eq!(by_c, by_m);
    }
}

#[test]
fn centrality_extremes() {
    let c = gaussian_cloud(500, 3, 2);
    for k in [1, 10, 100] {
        let cent = centrality(&c, k).unwrap();
        let d = dtm(&c, k, 2.0).unwrap().values;
        let argmax = (0..c.len()).max_by(|&a, &b| cent.values[a].total_cmp(&cent.values[b]).then(b.cmp(&a))).unwrap();
        let argmin = (0..c.len()).min_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b))).unwrap();
        assert_eq!(argmax, argmin);
        let lo = cent.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = cent.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((lo, hi), (0.0, 1.0));
    }
}

#[test]
fn binning_on_cdv_peaks_inside_the_cloud() {
    let sys = OdeSystem::charney_devore();
    let c = integrate(&sys, &TrajectoryConfig::for_system(SystemKind::CharneyDeVore, 20_000)).unwrap();
    let c = c.normalize().unwrap().0;
    let f = binning_density(&c, 20).unwrap();
    assert!(f.values.iter().cloned().fold(0.0, f64::max) > 1.0);
    // the busiest bins lie away from the bounding-box faces
    let (mean, _) = c.mean_and_std();
    let top = (0..c.len()).max_by(|&a, &b| f.values[a].total_cmp(&f.values[b]).then(b.cmp(&a))).unwrap();
    let mut lo = vec![f64::INFINITY; c.dim()];
    let mut hi = vec![f64::NEG_INFINITY; c.dim()];
    for p in c.points() {
        for a in 0..c.dim() {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    for a in 0..c.dim() {
        let t = (c.point(top)[a] - lo[a]) / (hi[a] - lo[a]);
        assert!(t > 0.02 && t < 0.98, "axis {a}: {t} (mean {})", mean[a]);
    }
}

#[test]
fn field_spec_labels_and_kinds() {
    let c = uniform_cloud(50, 2, 1);
    for (spec, label) in [
        (FieldSpec::Kde { bandwidth: None }, "KDE"),
        (FieldSpec::Binning { bins: 20 }, "bin20"),
        (FieldSpec::Dtm { k: 5, r: 2.0 }, "d_5"),
        (FieldSpec::Centrality { k: 5 }, "C_5"),
    ] {
        assert_eq!(spec.label(), label);
        let f = spec.compute(&c).unwrap();
        assert_eq!(f.kind, spec.kind());
        assert_eq!(f.len(), 50);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn fields_are_finite_and_in_range(n in 3usize..200, d in 1usize..4, seed in any::<u64>(), k_frac in 0.0f64..1.0) {
        let c = uniform_cloud(n, d, seed);
        let k = 1 + ((n - 2) as f64 * k_frac) as usize;
        let kde = kde_gaussian(&c, None).unwrap();
        prop_assert!(kde.values.iter().all(|v| v.is_finite() && *v > 0.0));
        let bin = binning_density(&c, 7).unwrap();
        prop_assert!(bin.values.iter().all(|v| *v >= 1.0));
        let cent = centrality(&c, k).unwrap();
        prop_assert!(cent.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn duplicated_points_have_zero_first_distance(n in 2usize..100, seed in any::<u64>()) {
        let c = uniform_cloud(n, 2, seed);
        let mut coords = c.coords().to_vec();
        coords.extend_from_slice(c.point(0));
        let c = PointCloud::new(coords, 2).unwrap();
        let d = dtm(&c, 1, 2.0).unwrap().values;
        prop_assert_eq!(d[0], 0.0);
        prop_assert_eq!(d[n], 0.0);
    }
}
