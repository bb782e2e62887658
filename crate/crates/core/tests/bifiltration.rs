mod common;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toporeg::bifiltration::*;
use toporeg::fields::{FieldKind, FieldSpec, ScalarField};
use toporeg::persistence::{build_rips, compute_persistence, Feature};
use toporeg::PointCloud;

use common::{gaussian_cloud, noisy_circle, uniform_cloud};

fn field(values: Vec<f64>) -> ScalarField {
    ScalarField {
        values,
        kind: FieldKind::Kde,
        params: BTreeMap::new(),
        warnings: Vec::new(),
    }
}

fn exact_config(filter: FieldSpec) -> BifiltrationConfig {
    BifiltrationConfig {
        filter,
        sparse_factor: None,
        pre_sparse_fraction: 0.0,
        ..Default::default()
    }
}

#[test]
fn subsets_are_nested() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.random_range(1..400);
        // few distinct values so the cutoff often falls inside a tie
        let f = field((0..n).map(|_| rng.random_range(0..5) as f64).collect());
        let mut prev: Vec<usize> = Vec::new();
        for p in 1..=100 {
            let cur = threshold_indices(&f, p as f64).unwrap();
            assert!(prev.iter().all(|i| cur.binary_search(i).is_ok()));
            assert_eq!(cur.len(), ((n * p) as f64 / 100.0).ceil().max(1.0) as usize);
            prev = cur;
        }
        assert_eq!(prev, (0..n).collect::<Vec<_>>());
    }
}

#[test]
fn constant_field_takes_index_prefixes() {
    let c = uniform_cloud(50, 2, 1);
    let f = field(vec![1.0; 50]);
    for p in [10.0, 30.0, 100.0] {
        let s = threshold_subset(&c, &f, p).unwrap();
        let m = s.len();
        assert_eq!(s.origin(), (0..m).collect::<Vec<_>>().as_slice());
    }
}

fn triples(fs: &[&Feature]) -> Vec<(usize, f64, f64)> {
    fs.iter().map(|f| (f.dim, f.birth, f.death)).collect()
}

#[test]
fn full_row_equals_direct_persistence() {
    let c = noisy_circle(120, 0.1, 2);
    let cfg = exact_config(FieldSpec::Centrality { k: 3 });
    let s = run_bifiltration(&c, &cfg).unwrap();
    let row = s.row(100.0).unwrap();
    let direct = compute_persistence(&build_rips(&c, cfg.max_edge, None).unwrap(), cfg.min_pers).unwrap();
    let mut want = triples(&direct.top_k(0, cfg.top_k));
    want.extend(triples(&direct.top_k(1, cfg.top_k)));
    let got: Vec<(usize, f64, f64)> = row.features.iter().map(|f| (f.dim, f.birth, f.death)).collect();
    assert_eq!(got, want);
    assert_eq!(row.n_points, 120);
}

#[test]
fn top_k_keeps_the_longest() {
    let c = gaussian_cloud(300, 2, 9);
    let wide = BifiltrationConfig {
        top_k: 1000,
        min_pers: 0.0,
        ..exact_config(FieldSpec::Centrality { k: 5 })
    };
    let narrow = BifiltrationConfig { top_k: 3, ..wide.clone() };
    let a = run_bifiltration(&c, &wide).unwrap();
    let b = run_bifiltration(&c, &narrow).unwrap();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        for dim in 0..2 {
            let kept: Vec<f64> = rb.features.iter().filter(|f| f.dim == dim).map(|f| f.lifespan).collect();
            let all: Vec<f64> = ra.features.iter().filter(|f| f.dim == dim).map(|f| f.lifespan).collect();
            assert!(kept.len() <= 3);
            assert_eq!(&all[..kept.len()], &kept[..]);
            if let Some(min_kept) = kept.last() {
                assert!(all[kept.len()..].iter().all(|l| l <= min_kept));
            }
        }
    }
}

#[test]
fn summary_bytes_are_deterministic() {
    let c = noisy_circle(150, 0.1, 4);
    let cfg = BifiltrationConfig {
        representatives: true,
        ..exact_config(FieldSpec::Kde { bandwidth: None })
    };
    let a = serde_json::to_string(&run_bifiltration(&c, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_bifiltration(&c, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn failing_percentiles_are_recorded() {
    let c = uniform_cloud(200, 2, 5);
    let cfg = BifiltrationConfig {
        edge_budget: 300,
        ..exact_config(FieldSpec::Centrality { k: 2 })
    };
    let s = run_bifiltration(&c, &cfg).unwrap();
    assert_eq!(s.rows.len(), 10);
    assert!(s.rows[0].error.is_none());
    let last = s.rows.last().unwrap();
    assert!(last.error.as_deref().unwrap().contains("edge"));
    assert!(last.features.is_empty());
}

#[test]
fn separated_blobs_classify_by_size() {
    // 30-point blob, 6-point blob, 2-point blob, far apart
    let mut rows: Vec<[f64; 2]> = Vec::new();
    let blob = |cx: f64, n: usize, rows: &mut Vec<[f64; 2]>| {
        for i in 0..n {
            let t = i as f64 * 2.399;
            let r = 0.05 * (i as f64).sqrt();
            rows.push([cx + r * t.cos(), r * t.sin()]);
        }
    };
    blob(0.0, 30, &mut rows);
    blob(2.0, 6, &mut rows);
    blob(4.0, 2, &mut rows);
    let c = PointCloud::from_rows(&rows).unwrap();
    let cfg = BifiltrationConfig {
        percentiles: vec![100.0],
        ..exact_config(FieldSpec::Centrality { k: 1 })
    };
    let s = run_bifiltration(&c, &cfg).unwrap();
    let comps: Vec<(Significance, usize, bool)> = s.rows[0]
        .features
        .iter()
        .filter(|f| f.dim == 0)
        .map(|f| (f.class, f.component_size.unwrap(), f.nontrivial))
        .collect();
    assert_eq!(comps[0], (Significance::Robust, 30, true));
    assert!(comps.contains(&(Significance::Weak, 6, true)));
    assert!(comps.contains(&(Significance::Noise, 2, true)));
    let members = s.rows[0].features[0].members.as_ref().unwrap();
    assert_eq!(members, &(0..30).collect::<Vec<_>>());
}

#[test]
fn loop_representatives_use_original_indices() {
    let c = noisy_circle(200, 0.08, 6);
    let cfg = BifiltrationConfig {
        representatives: true,
        tighten: true,
        percentiles: vec![60.0, 100.0],
        ..exact_config(FieldSpec::Centrality { k: 5 })
    };
    let run = run_bifiltration_detailed(&c, &cfg).unwrap();
    for (row, diagram) in run.summary.rows.iter().zip(&run.diagrams) {
        let subset = threshold_indices(&run.field, row.percentile).unwrap();
        let lp = row.features.iter().find(|f| f.dim == 1 && f.nontrivial).expect("circle loop");
        let rep = lp.representative.as_ref().unwrap();
        let mut degree = BTreeMap::new();
        for &[a, b] in rep {
            assert!(subset.binary_search(&a).is_ok() && subset.binary_search(&b).is_ok());
            *degree.entry(a).or_insert(0) += 1;
            *degree.entry(b).or_insert(0) += 1;
        }
        assert!(degree.values().all(|d| d % 2 == 0));
        let d = diagram.as_ref().unwrap();
        assert!(d.of_dim(1).any(|f| f.representative.as_ref() == Some(rep)));
    }
}
