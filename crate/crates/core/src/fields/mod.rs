//! Per-point filter functions: Gaussian KDE, direct binning, the
//! k-distance-to-measure and the normalized local centrality built on it.
//!
//! Conventions worth knowing before comparing numbers with other tools:
//!
//! * KDE includes each point's own kernel; dtm excludes the point itself
//!   from its neighbor set.
//! * The automatic KDE bandwidth is Scott's rule `h = n^(-1/(d+4)) * sigma`
//!   where `sigma` is the mean of the per-coordinate sample standard
//!   deviations. The kernel is isotropic.
//! * The binning grid is anchored to the data bounding box with no padding,
//!   so moving one extreme point shifts every bin edge.

mod binning;
mod dtm;
mod kde;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use binning::binning_density;
pub use dtm::{centrality, dtm, dtm_at, dtm_values};
pub use kde::{kde_gaussian, scott_bandwidth};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Kde,
    Binning,
    Dtm,
    Centrality,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::Kde => "kde",
            FieldKind::Binning => "binning",
            FieldKind::Dtm => "dtm",
            FieldKind::Centrality => "centrality",
        })
    }
}

impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kde" => Ok(FieldKind::Kde),
            "binning" => Ok(FieldKind::Binning),
            "dtm" => Ok(FieldKind::Dtm),
            "centrality" => Ok(FieldKind::Centrality),
            other => Err(Error::InvalidArgument(format!("unknown field kind `{other}`"))),
        }
    }
}

/// Per-point scalar values plus the recipe that produced them.
///
/// Higher values always mean "more central / denser" for `kde`, `binning`
/// and `centrality`; for `dtm` lower values are more central.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub kind: FieldKind,
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ScalarField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values oriented so that larger means more central.
    pub fn ranking_values(&self) -> Vec<f64> {
        match self.kind {
            FieldKind::Dtm => self.values.iter().map(|v| -v).collect(),
            _ => self.values.clone(),
        }
    }
}

/// A filter recipe, resolved against a cloud by [`FieldSpec::compute`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Kde {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth: Option<f64>,
    },
    Binning {
        bins: usize,
    },
    Dtm {
        k: usize,
        #[serde(default = "default_r")]
        r: f64,
    },
    Centrality {
        k: usize,
    },
}

fn default_r() -> f64 {
    2.0
}

impl FieldSpec {
    pub fn kind(&self) -> FieldKind {
        match self {
            FieldSpec::Kde { .. } => FieldKind::Kde,
            FieldSpec::Binning { .. } => FieldKind::Binning,
            FieldSpec::Dtm { .. } => FieldKind::Dtm,
            FieldSpec::Centrality { .. } => FieldKind::Centrality,
        }
    }

    pub fn compute(&self, cloud: &PointCloud) -> Result<ScalarField> {
        match *self {
            FieldSpec::Kde { bandwidth } => kde_gaussian(cloud, bandwidth),
            FieldSpec::Binning { bins } => binning_density(cloud, bins),
            FieldSpec::Dtm { k, r } => dtm(cloud, k, r),
            FieldSpec::Centrality { k } => centrality(cloud, k),
        }
    }

    /// Short label such as `C_50`, `KDE` or `bin20`.
    pub fn label(&self) -> String {
        match self {
            FieldSpec::Kde { bandwidth: None } => "KDE".into(),
            FieldSpec::Kde { bandwidth: Some(h) } => format!("KDE(h={h})"),
            FieldSpec::Binning { bins } => format!("bin{bins}"),
            FieldSpec::Dtm { k, .. } => format!("d_{k}"),
            FieldSpec::Centrality { k } => format!("C_{k}"),
        }
    }
}
