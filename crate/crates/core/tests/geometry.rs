mod common;

use proptest::prelude::*;
use toporeg::geometry::{read_binary, write_binary, KdTree};
use toporeg::PointCloud;

use common::{dist, gaussian_cloud, uniform_cloud};

fn brute_knn(c: &PointCloud, q: usize, k: usize) -> (Vec<usize>, Vec<f64>) {
    let mut all: Vec<(f64, usize)> = (0..c.len())
        .filter(|&j| j != q)
        .map(|j| (dist(c.point(q), c.point(j)), j))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    (all.iter().map(|p| p.1).collect(), all.iter().map(|p| p.0).collect())
}

fn cloud_strategy() -> impl Strategy<Value = PointCloud> {
    (2usize..=500, 1usize..=5, any::<u64>(), prop::bool::ANY).prop_map(|(n, d, seed, grid)| {
        let c = uniform_cloud(n, d, seed);
        if grid {
            // snap to a coarse lattice to force ties and duplicates
            let coords = c.coords().iter().map(|x| (x * 4.0).round()).collect();
            PointCloud::new(coords, d).unwrap()
        } else {
            c
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn knn_matches_exhaustive_scan(c in cloud_strategy(), q_frac in 0.0f64..1.0, k_frac in 0.0f64..1.0) {
        let n = c.len();
        let q = ((n as f64 * q_frac) as usize).min(n - 1);
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let k = k.min(n - 1);
        let got = c.knn(q, k).unwrap();
        let (idx, d) = brute_knn(&c, q, k);
        prop_assert_eq!(&got.indices, &idx);
        for (a, b) in got.distances.iter().zip(&d) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
        }
        prop_assert!(got.distances.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(!got.indices.contains(&q));
    }

    #[test]
    fn sparsify_keeps_separation(c in cloud_strategy(), sep in 0.01f64..0.6) {
        let s = c.sparsify(sep).unwrap();
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                prop_assert!(dist(s.point(i), s.point(j)) >= sep);
            }
        }
        // every dropped point is within `sep` of a kept one
        for p in c.points() {
            prop_assert!(s.points().any(|q| dist(p, q) < sep));
        }
        let again = s.sparsify(sep).unwrap();
        prop_assert_eq!(again.coords(), s.coords());
    }

    #[test]
    fn binary_round_trip(c in cloud_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        write_binary(&c, &path).unwrap();
        let back = read_binary(&path).unwrap();
        prop_assert_eq!(back.coords(), c.coords());
    }
}

#[test]
fn pca_preserves_total_variance() {
    let c = gaussian_cloud(400, 5, 11);
    let (_, std) = c.mean_and_std();
    let trace: f64 = std.iter().map(|s| s * s).sum();
    for m in 1..=5 {
        let p = c.pca_project(m).unwrap();
        let kept: f64 = p.eigenvalues[..m].iter().sum();
        assert!(kept <= trace * (1.0 + 1e-12));
        let (_, pstd) = p.cloud.mean_and_std();
        let projected: f64 = pstd.iter().map(|s| s * s).sum();
        assert!((projected - kept).abs() < 1e-9 * trace);
        if m == 5 {
            assert!((kept - trace).abs() < 1e-9 * trace);
        }
    }
}

#[test]
fn pca_of_embedded_plane_has_rank_two() {
    let c = gaussian_cloud(300, 2, 4);
    let rows: Vec<[f64; 3]> = c.points().map(|p| [p[0], p[1], p[0] - 2.0 * p[1]]).collect();
    let c3 = PointCloud::from_rows(&rows).unwrap();
    let p = c3.pca_project(3).unwrap();
    assert_eq!(p.rank, 2);
    assert!(p.eigenvalues[2].abs() < 1e-9 * p.eigenvalues[0]);
}

#[test]
fn normalize_gives_unit_variance() {
    let rows: Vec<[f64; 3]> = gaussian_cloud(500, 3, 8)
        .points()
        .map(|p| [3.0 * p[0] + 5.0, 0.2 * p[1], 7.0])
        .collect();
    let c = PointCloud::from_rows(&rows).unwrap();
    let (n, flat) = c.normalize().unwrap();
    assert_eq!(flat, vec![2]);
    let (_, std) = n.mean_and_std();
    assert!((std[0] - 1.0).abs() < 1e-9 && (std[1] - 1.0).abs() < 1e-9);
    assert!(n.points().all(|p| p[2] == 7.0));
}

#[test]
fn tree_radius_queries_match_scan_off_sample() {
    let c = uniform_cloud(300, 3, 21);
    let tree = KdTree::new(&c);
    let probes = uniform_cloud(50, 3, 22);
    for q in probes.points() {
        let mut got: Vec<usize> = tree.within(q, 0.25).into_iter().map(|p| p.0).collect();
        got.sort_unstable();
        let want: Vec<usize> = (0..c.len()).filter(|&j| dist(q, c.point(j)) <= 0.25).collect();
        assert_eq!(got, want);
    }
}
