mod common;

use toporeg::bifiltration::{run_bifiltration, BifiltrationConfig};
use toporeg::fields::FieldSpec;
use toporeg::significance::*;

use common::noisy_circle;

fn small_reference(repeats: usize) -> ReferenceConfig {
    ReferenceConfig {
        n: 400,
        repeats,
        seed: 17,
        filters: vec![FieldSpec::Kde { bandwidth: None }, FieldSpec::Centrality { k: 4 }],
        ..Default::default()
    }
}

#[test]
fn tiny_reference_has_one_row_per_filter() {
    let cfg = ReferenceConfig {
        n: 10,
        repeats: 1,
        seed: 99,
        ..Default::default()
    };
    let r = gaussian_reference(&cfg).unwrap();
    assert_eq!(r.rows.len(), default_reference_filters(10).len());
    assert!(r.rows.iter().all(|row| row.repetition == 0 && row.error.is_none()));
}

#[test]
fn reference_is_deterministic_and_monotone_in_repeats() {
    let a = gaussian_reference(&small_reference(2)).unwrap();
    let b = gaussian_reference(&small_reference(2)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = gaussian_reference(&small_reference(3)).unwrap();
    assert_eq!(&c.rows[..a.rows.len()], &a.rows[..]);
    assert!(c.recommended_threshold >= a.recommended_threshold);
    assert!(c.rows.iter().all(|r| r.max().unwrap_or(0.0) <= c.recommended_threshold));
}

#[test]
fn reference_features_never_exceed_their_threshold() {
    let r = gaussian_reference(&small_reference(2)).unwrap();
    for rep in 0..2 {
        let cloud = gaussian_cloud(400, 3, repetition_seed(17, rep)).unwrap();
        for spec in &small_reference(2).filters {
            let cfg = BifiltrationConfig {
                filter: spec.clone(),
                noise_threshold: r.recommended_threshold,
                ..Default::default()
            };
            let s = run_bifiltration(&cloud, &cfg).unwrap();
            for f in s.rows.iter().flat_map(|row| &row.features) {
                let counted = f.dim == 1 || f.component_size.unwrap() >= 4;
                if f.lifespan.is_finite() && counted {
                    assert!(!f.nontrivial, "{f:?}");
                }
            }
        }
    }
}

#[test]
fn empty_sweep_is_the_base_run() {
    let c = noisy_circle(150, 0.1, 3);
    let base = BifiltrationConfig {
        filter: FieldSpec::Centrality { k: 3 },
        ..Default::default()
    };
    let r = sensitivity_sweep(&c, &base, &[]).unwrap();
    assert!(r.runs.is_empty() && r.stable);
    let s = run_bifiltration(&c, &base).unwrap();
    for (row, counts) in s.rows.iter().zip(&r.base.rows) {
        assert_eq!(row.nontrivial_loops(), counts.nontrivial_loops);
        assert_eq!(row.robust_components(), counts.robust_components);
    }
}

#[test]
fn coarse_grid_rows_appear_in_fine_grid() {
    let c = noisy_circle(200, 0.1, 8);
    let fine: Vec<f64> = (1..=20).map(|i| 5.0 * i as f64).collect();
    let base = BifiltrationConfig {
        filter: FieldSpec::Centrality { k: 2 },
        percentiles: fine,
        ..Default::default()
    };
    let coarse: Vec<f64> = (1..=10).map(|i| 10.0 * i as f64).collect();
    let r = sensitivity_sweep(&c, &base, &[Perturbation::Percentiles(coarse)]).unwrap();
    for row in &r.runs[0].rows {
        assert_eq!(r.base.at(row.percentile), Some(row));
    }
    assert!(r.stable);
}

#[test]
fn perturbation_labels() {
    assert_eq!(Perturbation::MinPers(0.3).label(), "min_pers=0.3");
    assert_eq!(Perturbation::SparseFactor(None).label(), "sparse_factor=none");
    let base = BifiltrationConfig::default();
    assert_eq!(Perturbation::PreSparse(0.05).apply(&base).pre_sparse_fraction, 0.05);
}

#[test]
fn lorenz63_robust_counts_ignore_min_pers() {
    use toporeg::dynamics::{integrate, OdeSystem, SystemKind, TrajectoryConfig};
    let raw = integrate(&OdeSystem::lorenz63(), &TrajectoryConfig::for_system(SystemKind::Lorenz63, 8000)).unwrap();
    let c = raw.normalize().unwrap().0;
    let base = BifiltrationConfig {
        filter: FieldSpec::Centrality { k: 1 },
        pre_sparse_fraction: 0.05,
        ..Default::default()
    };
    let r = sensitivity_sweep(&c, &base, &[Perturbation::MinPers(0.3), Perturbation::MinPers(0.5)]).unwrap();
    assert!(r.components_stable, "{r:#?}");
    assert_eq!(r.runs.len(), 2);
}
