//! Percentile thresholding of a scalar field followed by Rips persistence on
//! each retained subset.
//!
//! For every percentile `p` the `ceil(n p / 100)` points with the highest
//! filter values are kept (ties at the cutoff go to the lower index, so
//! subsets are nested), optionally thinned, and their persistence diagram is
//! reduced to the `top_k` longest-lived features per dimension. Components
//! are classified by size (noise below 4 points, weak up to 10, robust above)
//! measured just before they die; immortal components are measured just
//! before the first nontrivial reported component merges away. Every feature
//! is flagged nontrivial when its lifespan exceeds the noise threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldSpec, ScalarField};
use crate::geometry::PointCloud;
use crate::persistence::{
    build_rips_with, Feature, Generator, Persistence, PersistenceDiagram, RipsOptions, DEFAULT_EDGE_BUDGET,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    Noise,
    Weak,
    Robust,
    Loop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeClasses {
    /// Components with fewer points are noise.
    pub noise_below: usize,
    /// Components with more points are robust; the rest are weak.
    pub robust_above: usize,
}

impl Default for SizeClasses {
    fn default() -> Self {
        SizeClasses {
            noise_below: 4,
            robust_above: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub class: Significance,
    pub nontrivial: bool,
}

/// Size class for components (`component_size` required), `Loop` for
/// dimension 1, plus the lifespan test against `noise_threshold`.
pub fn classify_feature(
    feature: &Feature,
    component_size: Option<usize>,
    noise_threshold: f64,
    classes: &SizeClasses,
) -> Result<Classification> {
    let class = match feature.dim {
        0 => {
            let size = component_size
                .ok_or_else(|| Error::InvalidArgument("dimension-0 features need a component size".into()))?;
            if size < classes.noise_below {
                Significance::Noise
            } else if size <= classes.robust_above {
                Significance::Weak
            } else {
                Significance::Robust
            }
        }
        _ => Significance::Loop,
    };
    Ok(Classification {
        class,
        nontrivial: feature.lifespan() > noise_threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifiltrationConfig {
    pub percentiles: Vec<f64>,
    pub filter: FieldSpec,
    pub top_k: usize,
    pub max_edge: f64,
    pub min_pers: f64,
    pub sparse_factor: Option<f64>,
    pub pre_sparse_fraction: f64,
    pub noise_threshold: f64,
    pub size_classes: SizeClasses,
    pub edge_budget: usize,
    /// Attach representative cycles to the reported loops.
    pub representatives: bool,
    /// Replace representatives with shortest-path loops where possible.
    pub tighten: bool,
}

impl Default for BifiltrationConfig {
    fn default() -> Self {
        BifiltrationConfig {
            percentiles: default_percentiles(),
            filter: FieldSpec::Centrality { k: 1 },
            top_k: 5,
            max_edge: 5.0,
            min_pers: 0.15,
            sparse_factor: Some(0.7),
            pre_sparse_fraction: 0.0,
            noise_threshold: 0.5,
            size_classes: SizeClasses::default(),
            edge_budget: DEFAULT_EDGE_BUDGET,
            representatives: false,
            tighten: false,
        }
    }
}

/// 10, 20, ..., 100.
pub fn default_percentiles() -> Vec<f64> {
    (1..=10).map(|i| 10.0 * i as f64).collect()
}

impl BifiltrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.percentiles.is_empty() {
            return Err(Error::InvalidArgument("percentile grid is empty".into()));
        }
        if let Some(p) = self.percentiles.iter().find(|p| !(**p > 0.0 && **p <= 100.0)) {
            return Err(Error::InvalidArgument(format!("percentile {p} outside (0, 100]")));
        }
        if self.percentiles.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("percentiles must be strictly ascending".into()));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidArgument("top_k must be >= 1".into()));
        }
        if !(self.min_pers >= 0.0) {
            return Err(Error::InvalidArgument("min_pers must be >= 0".into()));
        }
        if !(self.max_edge > 0.0) {
            return Err(Error::InvalidArgument("max_edge must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.pre_sparse_fraction) {
            return Err(Error::InvalidArgument("pre_sparse_fraction must lie in [0, 1)".into()));
        }
        if self.size_classes.noise_below > self.size_classes.robust_above + 1 {
            return Err(Error::InvalidArgument("size classes overlap".into()));
        }
        Ok(())
    }

    fn rips_options(&self) -> RipsOptions {
        RipsOptions {
            max_edge: self.max_edge,
            sparse_factor: self.sparse_factor,
            edge_budget: self.edge_budget,
        }
    }
}

/// Indices of the `ceil(n p / 100)` highest-ranked points, ascending.
pub fn threshold_indices(field: &ScalarField, p: f64) -> Result<Vec<usize>> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(Error::InvalidArgument(format!("percentile {p} outside (0, 100]")));
    }
    let n = field.len();
    let m = ((n as f64 * p / 100.0) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    let rank = field.ranking_values();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| rank[b].total_cmp(&rank[a]).then(a.cmp(&b)));
    idx.truncate(m);
    idx.sort_unstable();
    Ok(idx)
}

/// The top `p` percent of `cloud` by `field`; original indices are kept in
/// the subset's origin.
pub fn threshold_subset(cloud: &PointCloud, field: &ScalarField, p: f64) -> Result<PointCloud> {
    if field.len() != cloud.len() {
        return Err(Error::DimensionMismatch {
            expected: cloud.len(),
            found: field.len(),
        });
    }
    Ok(cloud.select(&threshold_indices(field, p)?))
}

/// Thins `cloud` by greedy minimum-separation sampling, choosing the
/// separation by bisection so that about `fraction` of the points are
/// removed (within half a percent of `n`, at most 30 steps).
///
/// Returns the thinned cloud and the separation used.
pub fn presparsify(cloud: &PointCloud, fraction: f64) -> Result<(PointCloud, f64)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidArgument("pre-sparsification fraction must lie in [0, 1)".into()));
    }
    let n = cloud.len();
    if fraction == 0.0 || n < 2 {
        return Ok((cloud.clone(), 0.0));
    }
    let target = fraction * n as f64;
    let tol = 0.005 * n as f64;
    let (mut lo, mut hi) = (0.0, cloud.bounding_diagonal());
    let mut best: Option<(f64, Vec<usize>, f64)> = None;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        let kept = cloud.sparsify_indices(mid)?;
        let removed = (n - kept.len()) as f64;
        let err = (removed - target).abs();
        if best.as_ref().is_none_or(|b| err < b.2) {
            best = Some((mid, kept, err));
        }
        if err <= tol {
            break;
        }
        if removed < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (sep, kept, _) = best.expect("at least one bisection step");
    Ok((cloud.select(&kept), sep))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFeature {
    pub dim: usize,
    pub birth: f64,
    #[serde(with = "crate::report::serde_inf")]
    pub death: f64,
    #[serde(with = "crate::report::serde_inf")]
    pub lifespan: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component_size: Option<usize>,
    pub class: Significance,
    pub nontrivial: bool,
    /// Loop edges as original point indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representative: Option<Vec<[usize; 2]>>,
    /// Component members as original point indices (not serialized).
    #[serde(skip)]
    pub members: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileRow {
    pub percentile: f64,
    /// Points above the threshold.
    pub n_points: usize,
    /// Points left after pre-sparsification.
    pub n_used: usize,
    pub min_separation: f64,
    pub features: Vec<SummaryFeature>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PercentileRow {
    pub fn count(&self, class: Significance, nontrivial_only: bool) -> usize {
        self.features
            .iter()
            .filter(|f| f.class == class && (!nontrivial_only || f.nontrivial))
            .count()
    }

    /// Loops with lifespan above the noise threshold.
    pub fn nontrivial_loops(&self) -> usize {
        self.count(Significance::Loop, true)
    }

    /// Robust components with lifespan above the noise threshold.
    pub fn robust_components(&self) -> usize {
        self.count(Significance::Robust, true)
    }

    pub fn longest_loop(&self) -> Option<f64> {
        self.features
            .iter()
            .filter(|f| f.dim == 1)
            .map(|f| f.lifespan)
            .max_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifiltrationSummary {
    pub filter: String,
    pub field_params: std::collections::BTreeMap<String, f64>,
    pub noise_threshold: f64,
    pub min_pers: f64,
    pub max_edge: f64,
    pub sparse_factor: Option<f64>,
    pub pre_sparse_fraction: f64,
    pub top_k: usize,
    pub rows: Vec<PercentileRow>,
}

impl BifiltrationSummary {
    pub fn row(&self, percentile: f64) -> Option<&PercentileRow> {
        self.rows.iter().find(|r| (r.percentile - percentile).abs() < 1e-9)
    }

    /// Lowest percentile with at least one nontrivial loop.
    pub fn first_loop_percentile(&self) -> Option<f64> {
        self.rows.iter().find(|r| r.nontrivial_loops() > 0).map(|r| r.percentile)
    }

    pub fn failed_rows(&self) -> impl Iterator<Item = &PercentileRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }
}

/// A summary plus the full per-percentile diagrams (point indices mapped
/// back to the input cloud).
#[derive(Debug, Clone)]
pub struct BifiltrationRun {
    pub field: ScalarField,
    pub summary: BifiltrationSummary,
    pub diagrams: Vec<Option<PersistenceDiagram>>,
}

pub fn run_bifiltration(cloud: &PointCloud, config: &BifiltrationConfig) -> Result<BifiltrationSummary> {
    Ok(run_bifiltration_detailed(cloud, config)?.summary)
}

pub fn run_bifiltration_detailed(cloud: &PointCloud, config: &BifiltrationConfig) -> Result<BifiltrationRun> {
    config.validate()?;
    let field = config.filter.compute(cloud)?;
    run_with_field(cloud, field, config)
}

/// Like [`run_bifiltration_detailed`] with a precomputed field.
pub fn run_with_field(cloud: &PointCloud, field: ScalarField, config: &BifiltrationConfig) -> Result<BifiltrationRun> {
    config.validate()?;
    if field.len() != cloud.len() {
        return Err(Error::DimensionMismatch {
            expected: cloud.len(),
            found: field.len(),
        });
    }
    let results: Vec<(PercentileRow, Option<PersistenceDiagram>)> = config
        .percentiles
        .par_iter()
        .map(|&p| match percentile_row(cloud, &field, p, config) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("percentile {p}: {e}");
                (
                    PercentileRow {
                        percentile: p,
                        n_points: 0,
                        n_used: 0,
                        min_separation: 0.0,
                        features: Vec::new(),
                        error: Some(e.to_string()),
                    },
                    None,
                )
            }
        })
        .collect();
    let (rows, diagrams) = results.into_iter().unzip();
    let summary = BifiltrationSummary {
        filter: config.filter.label(),
        field_params: field.params.clone(),
        noise_threshold: config.noise_threshold,
        min_pers: config.min_pers,
        max_edge: config.max_edge,
        sparse_factor: config.sparse_factor,
        pre_sparse_fraction: config.pre_sparse_fraction,
        top_k: config.top_k,
        rows,
    };
    Ok(BifiltrationRun {
        field,
        summary,
        diagrams,
    })
}

fn remap_generator(g: &Generator, origin: &[usize]) -> Generator {
    match *g {
        Generator::Component { vertex, death_edge } => Generator::Component {
            vertex: origin[vertex],
            death_edge: death_edge.map(|[a, b]| [origin[a], origin[b]]),
        },
        Generator::Loop {
            birth_edge,
            death_triangle,
        } => Generator::Loop {
            birth_edge: [origin[birth_edge[0]], origin[birth_edge[1]]],
            death_triangle: death_triangle.map(|t| t.map(|v| origin[v])),
        },
    }
}

/// Scale at which immortal components are measured: just below the earliest
/// death among the reported components that outlive the noise threshold, so
/// the oldest component is counted while the others are still separate.
fn immortal_scale(top0: &[&Feature], noise_threshold: f64, max_edge: f64) -> Option<f64> {
    top0.iter()
        .filter(|f| !f.is_infinite() && f.lifespan() > noise_threshold)
        .map(|f| f.death)
        .min_by(f64::total_cmp)
        .map(|d| d - 1e-9 * max_edge)
}

fn percentile_row(
    cloud: &PointCloud,
    field: &ScalarField,
    p: f64,
    config: &BifiltrationConfig,
) -> Result<(PercentileRow, Option<PersistenceDiagram>)> {
    let subset = threshold_subset(cloud, field, p)?;
    let (used, min_separation) = presparsify(&subset, config.pre_sparse_fraction)?;
    let filtration = build_rips_with(&used, &config.rips_options())?;
    let pers = Persistence::compute(&filtration)?;
    let mut diagram = pers.diagram(config.min_pers);
    let origin = used.origin();

    let top0 = diagram.top_k(0, config.top_k);
    let split = immortal_scale(&top0, config.noise_threshold, config.max_edge);
    let mut features = Vec::new();
    for dim in 0..2 {
        for f in diagram.top_k(dim, config.top_k) {
            let members = if dim == 0 {
                let local = match (f.is_infinite(), split) {
                    (true, Some(scale)) => pers.component_members_at(f, scale)?,
                    _ => pers.component_members(f)?,
                };
                Some(local.into_iter().map(|v| origin[v]).collect::<Vec<_>>())
            } else {
                None
            };
            let size = members.as_ref().map(Vec::len);
            let c = classify_feature(f, size, config.noise_threshold, &config.size_classes)?;
            let representative = if dim == 1 && config.representatives && !f.is_infinite() {
                Some(
                    pers.representative(f, config.tighten)?
                        .into_iter()
                        .map(|[a, b]| [origin[a], origin[b]])
                        .collect(),
                )
            } else {
                None
            };
            features.push(SummaryFeature {
                dim,
                birth: f.birth,
                death: f.death,
                lifespan: f.lifespan(),
                component_size: size,
                class: c.class,
                nontrivial: c.nontrivial,
                representative,
                members,
            });
        }
    }
    for f in &mut diagram.features {
        f.generator = remap_generator(&f.generator, origin);
    }
    for (f, s) in diagram
        .features
        .iter_mut()
        .filter(|f| f.dim == 1)
        .zip(features.iter().filter(|s| s.dim == 1))
    {
        // top_k order matches the diagram order within a dimension
        f.representative = s.representative.clone();
    }
    Ok((
        PercentileRow {
            percentile: p,
            n_points: subset.len(),
            n_used: used.len(),
            min_separation,
            features,
            error: None,
        },
        Some(diagram),
    ))
}
