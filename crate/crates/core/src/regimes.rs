//! Regime labels for connected components.
//!
//! A [`RegimeScheme`] cuts the range of a scalar label channel (jet latitude
//! in the atmospheric application) at the interior local minima of its
//! smoothed density. Components are then assigned the regime holding most of
//! their points; ties go to the regime with the lower label values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bifiltration::{BifiltrationSummary, Significance};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::persistence::ComponentMembership;

/// Grid used to locate density minima.
pub const GRID_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeScheme {
    pub label_name: String,
    pub breakpoints: Vec<f64>,
    pub names: Vec<String>,
    pub bandwidth: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RegimeScheme {
    /// Builds a scheme from explicit breakpoints; names default as in
    /// [`regime_breakpoints`].
    pub fn new(label_name: impl Into<String>, breakpoints: Vec<f64>, names: Option<Vec<String>>) -> Result<Self> {
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) || breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("breakpoints must be finite and strictly ascending".into()));
        }
        let names = names.unwrap_or_else(|| default_names(breakpoints.len() + 1));
        if names.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints need {} regime names, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                names.len()
            )));
        }
        Ok(RegimeScheme {
            label_name: label_name.into(),
            breakpoints,
            names,
            bandwidth: 0.0,
            warnings: Vec::new(),
        })
    }

    pub fn num_regimes(&self) -> usize {
        self.names.len()
    }

    /// Interval index of `label`; a value equal to a breakpoint belongs to
    /// the lower interval.
    pub fn regime_of(&self, label: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < label)
    }
}

fn default_names(m: usize) -> Vec<String> {
    if m == 3 {
        ["South", "Central", "North"].map(String::from).to_vec()
    } else if m == 1 {
        vec!["all".into()]
    } else {
        (1..=m).map(|i| format!("regime_{i}")).collect()
    }
}

/// Breakpoints at the interior local minima of a Gaussian KDE of `labels`
/// evaluated on a [`GRID_POINTS`]-point grid spanning the label range.
///
/// `bandwidth = None` uses Scott's rule, `std * n^(-1/5)`.
pub fn regime_breakpoints(labels: &[f64], bandwidth: Option<f64>, label_name: &str) -> Result<RegimeScheme> {
    if labels.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("labels must be finite".into()));
    }
    let mut distinct = labels.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 distinct label values, found {}",
            distinct.len()
        )));
    }
    let n = labels.len() as f64;
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::InvalidArgument(format!("bandwidth {h} must be positive"))),
        None => {
            let mean = labels.iter().sum::<f64>() / n;
            let var = labels.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            var.sqrt() * n.powf(-0.2)
        }
    };
    let (lo, hi) = (distinct[0], distinct[distinct.len() - 1]);
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| lo + step * i as f64).collect();
    let density: Vec<f64> = grid
        .iter()
        .map(|&x| {
            labels
                .iter()
                .map(|&v| {
                    let z = (x - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum()
        })
        .collect();
    let breakpoints: Vec<f64> = (1..GRID_POINTS - 1)
        .filter(|&i| density[i] < density[i - 1] && density[i] <= density[i + 1])
        .map(|i| grid[i])
        .collect();
    let mut scheme = RegimeScheme::new(label_name, breakpoints, None)?;
    scheme.bandwidth = h;
    if scheme.breakpoints.is_empty() {
        let msg = "label density has no interior minimum; using a single regime".to_string();
        log::warn!("{msg}");
        scheme.warnings.push(msg);
    }
    Ok(scheme)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub percentile: Option<f64>,
    pub size: usize,
    pub regime: String,
    pub regime_index: usize,
    pub purity: f64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeTable {
    pub label_name: String,
    pub regime_names: Vec<String>,
    pub breakpoints: Vec<f64>,
    pub rows: Vec<RegimeRow>,
}

impl RegimeTable {
    fn empty(scheme: &RegimeScheme) -> Self {
        RegimeTable {
            label_name: scheme.label_name.clone(),
            regime_names: scheme.names.clone(),
            breakpoints: scheme.breakpoints.clone(),
            rows: Vec::new(),
        }
    }

    /// Columns `p,size,regime,purity` followed by one count column per regime.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,size,regime,purity");
        for name in &self.regime_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for r in &self.rows {
            let p = r.percentile.map(|p| format!("{p}")).unwrap_or_default();
            out.push_str(&format!("{p},{},{},{:.3}", r.size, r.regime, r.purity));
            for c in &r.counts {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Regime row for one component given its per-regime counts.
pub fn regime_row(counts: Vec<usize>, scheme: &RegimeScheme, percentile: Option<f64>) -> Result<RegimeRow> {
    let size: usize = counts.iter().sum();
    if size == 0 {
        return Err(Error::Internal("empty component".into()));
    }
    let mut best = 0;
    for (r, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = r;
        }
    }
    Ok(RegimeRow {
        percentile,
        size,
        regime: scheme.names[best].clone(),
        regime_index: best,
        purity: counts[best] as f64 / size as f64,
        counts,
    })
}

fn count_members(members: &[usize], labels: &[f64], scheme: &RegimeScheme) -> Result<Vec<usize>> {
    let mut counts = vec![0; scheme.num_regimes()];
    for &v in members {
        let label = labels.get(v).ok_or_else(|| {
            Error::InvalidArgument(format!("point {v} has no label ({} labels given)", labels.len()))
        })?;
        counts[scheme.regime_of(*label)] += 1;
    }
    Ok(counts)
}

/// One row per component of `membership`; `labels` is indexed like the
/// membership's vertices.
pub fn assign_regimes(
    membership: &ComponentMembership,
    labels: &[f64],
    scheme: &RegimeScheme,
) -> Result<RegimeTable> {
    if labels.len() < membership.labels.len() {
        return Err(Error::DimensionMismatch {
            expected: membership.labels.len(),
            found: labels.len(),
        });
    }
    let mut counts = vec![vec![0; scheme.num_regimes()]; membership.num_components()];
    for (v, &c) in membership.labels.iter().enumerate() {
        counts[c][scheme.regime_of(labels[v])] += 1;
    }
    let mut table = RegimeTable::empty(scheme);
    for c in counts {
        table.rows.push(regime_row(c, scheme, None)?);
    }
    Ok(table)
}

/// Rows for the robust components of every percentile in `summary`;
/// `labels` is indexed by original point index.
pub fn regimes_from_summary(
    summary: &BifiltrationSummary,
    labels: &[f64],
    scheme: &RegimeScheme,
) -> Result<RegimeTable> {
    let mut table = RegimeTable::empty(scheme);
    for row in &summary.rows {
        for f in &row.features {
            if f.class != Significance::Robust {
                continue;
            }
            let members = f
                .members
                .as_ref()
                .ok_or_else(|| Error::Internal("component members were not recorded".into()))?;
            let counts = count_members(members, labels, scheme)?;
            table.rows.push(regime_row(counts, scheme, Some(row.percentile))?);
        }
    }
    Ok(table)
}

/// Fraction of `members` whose ground-truth class is the most common one.
pub fn purity_against(members: &[usize], truth: &[usize]) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    let mut counts = std::collections::BTreeMap::new();
    for &v in members {
        *counts.entry(truth[v]).or_insert(0usize) += 1;
    }
    *counts.values().max().unwrap() as f64 / members.len() as f64
}

/// Synthetic stand-in for the jet-latitude dataset.
#[derive(Debug, Clone)]
pub struct JetSurrogate {
    /// Coordinates `(latitude, pc1, pc2)`, with latitude also as meta `lat`.
    pub cloud: PointCloud,
    /// Mixture component of each point: 0 south, 1 central, 2 north.
    pub truth: Vec<usize>,
}

struct Mode {
    weight: f64,
    lat: f64,
    lat_sd: f64,
    pc: [f64; 2],
    pc_sd: f64,
}

// South: few points, tightly packed. Its raw density peak matches the other
// two modes while a wide smoothing kernel flattens it.
const MODES: [Mode; 3] = [
    Mode {
        weight: 0.07,
        lat: 36.0,
        lat_sd: 1.2,
        pc: [-1.0, 0.9],
        pc_sd: 0.25,
    },
    Mode {
        weight: 0.465,
        lat: 46.0,
        lat_sd: 2.4,
        pc: [0.0, -0.5],
        pc_sd: 0.5,
    },
    Mode {
        weight: 0.465,
        lat: 56.0,
        lat_sd: 2.4,
        pc: [1.0, 0.6],
        pc_sd: 0.5,
    },
];

/// Seeded trimodal mixture of `n` points.
pub fn jet_surrogate(n: usize, seed: u64) -> Result<JetSurrogate> {
    if n < 3 {
        return Err(Error::InvalidArgument("surrogate needs n >= 3".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = {
        let s = (MODES[0].weight * n as f64).round() as usize;
        let c = (MODES[1].weight * n as f64).round() as usize;
        [s, c, n - s - c]
    };
    let mut order: Vec<usize> = sizes.iter().enumerate().flat_map(|(m, &s)| std::iter::repeat_n(m, s)).collect();
    // interleave the modes so no index range belongs to a single regime
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut coords = Vec::with_capacity(3 * n);
    let mut lat = Vec::with_capacity(n);
    for &m in &order {
        let mode = &MODES[m];
        let z: [f64; 3] = [
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        ];
        let l = mode.lat + mode.lat_sd * z[0];
        coords.extend_from_slice(&[l, mode.pc[0] + mode.pc_sd * z[1], mode.pc[1] + mode.pc_sd * z[2]]);
        lat.push(l);
    }
    let cloud = PointCloud::new(coords, 3)?.with_meta("lat", lat)?;
    Ok(JetSurrogate { cloud, truth: order })
}
