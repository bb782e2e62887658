//! Topological noise level from Gaussian reference clouds, and reruns of a
//! bifiltration under parameter perturbations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifiltration::{run_with_field, BifiltrationConfig, BifiltrationSummary};
use crate::error::{Error, Result};
use crate::fields::FieldSpec;
use crate::geometry::PointCloud;

/// Increment used to derive repetition seeds from the master seed.
pub const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of repetition `r`: `master + r * SEED_STRIDE` (wrapping).
pub fn repetition_seed(master: u64, r: usize) -> u64 {
    master.wrapping_add((r as u64).wrapping_mul(SEED_STRIDE))
}

/// `n` points from the isotropic unit-variance Gaussian in `dim` dimensions.
pub fn gaussian_cloud(n: usize, dim: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    PointCloud::new(coords, dim)
}

/// KDE plus centrality with `k` in {1, n/1000, n/100}, duplicates removed.
pub fn default_reference_filters(n: usize) -> Vec<FieldSpec> {
    let mut ks = vec![1, n / 1000, n / 100];
    ks.retain(|&k| k >= 1 && k < n.max(2));
    ks.dedup();
    let mut out = vec![FieldSpec::Kde { bandwidth: None }];
    out.extend(ks.into_iter().map(|k| FieldSpec::Centrality { k }));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    pub n: usize,
    pub dim: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Empty means [`default_reference_filters`].
    pub filters: Vec<FieldSpec>,
    /// Rips and percentile settings; its filter and noise threshold are ignored.
    pub bifiltration: BifiltrationConfig,
    /// Components smaller than this are not counted toward the dim-0 maximum.
    pub min_component_size: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            n: 10_000,
            dim: 3,
            repeats: 10,
            seed: 0,
            filters: Vec::new(),
            bifiltration: BifiltrationConfig::default(),
            min_component_size: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub repetition: usize,
    pub seed: u64,
    pub filter: String,
    /// Longest finite component lifespan (components of at least
    /// `min_component_size` points).
    pub max_dim0: Option<f64>,
    /// Longest finite loop lifespan.
    pub max_dim1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReferenceRow {
    pub fn max(&self) -> Option<f64> {
        match (self.max_dim0, self.max_dim1) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTestReport {
    pub n: usize,
    pub dim: usize,
    pub repeats: usize,
    pub seed: u64,
    pub max_edge: f64,
    pub min_pers: f64,
    pub sparse_factor: Option<f64>,
    pub percentiles: Vec<f64>,
    pub min_component_size: usize,
    pub rows: Vec<ReferenceRow>,
    pub overall_max: f64,
    pub recommended_threshold: f64,
}

pub fn gaussian_reference(config: &ReferenceConfig) -> Result<ReferenceTestReport> {
    if config.n < 2 {
        return Err(Error::InvalidArgument("reference cloud needs n >= 2".into()));
    }
    if config.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be >= 1".into()));
    }
    if config.dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    config.bifiltration.validate()?;
    let filters = if config.filters.is_empty() {
        default_reference_filters(config.n)
    } else {
        config.filters.clone()
    };

    let per_rep: Vec<Vec<ReferenceRow>> = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let seed = repetition_seed(config.seed, r);
            let cloud = gaussian_cloud(config.n, config.dim, seed)?;
            Ok(filters
                .iter()
                .map(|spec| reference_row(&cloud, spec, config, r, seed))
                .collect())
        })
        .collect::<Result<_>>()?;
    let rows: Vec<ReferenceRow> = per_rep.into_iter().flatten().collect();
    let overall_max = rows.iter().filter_map(ReferenceRow::max).fold(0.0, f64::max);
    Ok(ReferenceTestReport {
        n: config.n,
        dim: config.dim,
        repeats: config.repeats,
        seed: config.seed,
        max_edge: config.bifiltration.max_edge,
        min_pers: config.bifiltration.min_pers,
        sparse_factor: config.bifiltration.sparse_factor,
        percentiles: config.bifiltration.percentiles.clone(),
        min_component_size: config.min_component_size,
        rows,
        overall_max,
        recommended_threshold: overall_max,
    })
}

fn reference_row(
    cloud: &PointCloud,
    spec: &FieldSpec,
    config: &ReferenceConfig,
    repetition: usize,
    seed: u64,
) -> ReferenceRow {
    let mut row = ReferenceRow {
        repetition,
        seed,
        filter: spec.label(),
        max_dim0: None,
        max_dim1: None,
        error: None,
    };
    let bif = BifiltrationConfig {
        filter: spec.clone(),
        representatives: false,
        ..config.bifiltration.clone()
    };
    let run = spec.compute(cloud).and_then(|field| run_with_field(cloud, field, &bif));
    match run {
        Ok(run) => {
            for f in run.summary.rows.iter().flat_map(|r| &r.features) {
                if !f.lifespan.is_finite() {
                    continue;
                }
                let slot = match f.dim {
                    0 if f.component_size.unwrap_or(0) >= config.min_component_size => &mut row.max_dim0,
                    1 => &mut row.max_dim1,
                    _ => continue,
                };
                *slot = Some(slot.map_or(f.lifespan, |m: f64| m.max(f.lifespan)));
            }
            if let Some(e) = run.summary.failed_rows().next() {
                row.error = e.error.clone();
            }
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "parameter", content = "value", rename_all = "snake_case")]
pub enum Perturbation {
    MinPers(f64),
    Percentiles(Vec<f64>),
    SparseFactor(Option<f64>),
    PreSparse(f64),
}

impl Perturbation {
    pub fn apply(&self, base: &BifiltrationConfig) -> BifiltrationConfig {
        let mut c = base.clone();
        match self {
            Perturbation::MinPers(v) => c.min_pers = *v,
            Perturbation::Percentiles(p) => c.percentiles = p.clone(),
            Perturbation::SparseFactor(s) => c.sparse_factor = *s,
            Perturbation::PreSparse(f) => c.pre_sparse_fraction = *f,
        }
        c
    }

    pub fn label(&self) -> String {
        match self {
            Perturbation::MinPers(v) => format!("min_pers={v}"),
            Perturbation::Percentiles(p) => format!("percentiles[{}]", p.len()),
            Perturbation::SparseFactor(Some(s)) => format!("sparse_factor={s}"),
            Perturbation::SparseFactor(None) => "sparse_factor=none".into(),
            Perturbation::PreSparse(f) => format!("pre_sparse={f}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub percentile: f64,
    pub robust_components: usize,
    pub nontrivial_loops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRun {
    pub label: String,
    pub rows: Vec<CountRow>,
}

impl SensitivityRun {
    fn from_summary(label: String, s: &BifiltrationSummary) -> Self {
        SensitivityRun {
            label,
            rows: s
                .rows
                .iter()
                .map(|r| CountRow {
                    percentile: r.percentile,
                    robust_components: r.robust_components(),
                    nontrivial_loops: r.nontrivial_loops(),
                })
                .collect(),
        }
    }

    pub fn at(&self, percentile: f64) -> Option<&CountRow> {
        self.rows.iter().find(|r| (r.percentile - percentile).abs() < 1e-9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub base: SensitivityRun,
    pub runs: Vec<SensitivityRun>,
    /// Robust component counts agree with the base at every shared percentile.
    pub components_stable: bool,
    /// Same for nontrivial loop counts.
    pub loops_stable: bool,
    pub stable: bool,
}

/// Reruns the bifiltration of `cloud` under each perturbation of `base`.
/// The filter is computed once; comparisons use the percentiles each run
/// shares with the base grid.
pub fn sensitivity_sweep(
    cloud: &PointCloud,
    base: &BifiltrationConfig,
    perturbations: &[Perturbation],
) -> Result<SensitivityReport> {
    base.validate()?;
    let configs: Vec<BifiltrationConfig> = perturbations.iter().map(|p| p.apply(base)).collect();
    for c in &configs {
        c.validate()?;
    }
    let field = base.filter.compute(cloud)?;
    let base_run = SensitivityRun::from_summary("base".into(), &run_with_field(cloud, field.clone(), base)?.summary);
    let runs: Vec<SensitivityRun> = configs
        .par_iter()
        .zip(perturbations)
        .map(|(c, p)| Ok(SensitivityRun::from_summary(p.label(), &run_with_field(cloud, field.clone(), c)?.summary)))
        .collect::<Result<_>>()?;

    let agree = |pick: fn(&CountRow) -> usize| {
        runs.iter().all(|run| {
            run.rows
                .iter()
                .all(|r| base_run.at(r.percentile).is_none_or(|b| pick(b) == pick(r)))
        })
    };
    let components_stable = agree(|r| r.robust_components);
    let loops_stable = agree(|r| r.nontrivial_loops);
    Ok(SensitivityReport {
        base: base_run,
        runs,
        components_stable,
        loops_stable,
        stable: components_stable && loops_stable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        assert_eq!(repetition_seed(7, 0), 7);
        assert_ne!(repetition_seed(7, 1), repetition_seed(7, 2));
        assert_eq!(repetition_seed(u64::MAX, 1), SEED_STRIDE - 1);
    }

    #[test]
    fn default_filters() {
        let f = default_reference_filters(10_000);
        let labels: Vec<String> = f.iter().map(FieldSpec::label).collect();
        assert_eq!(labels, ["KDE", "C_1", "C_10", "C_100"]);
        // n/1000 = 0 is dropped, n/100 = 1 merges with k = 1
        assert_eq!(default_reference_filters(150).len(), 2);
    }
}
