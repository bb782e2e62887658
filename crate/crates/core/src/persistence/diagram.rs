use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::reduction::Reduction;
use super::rips::RipsFiltration;

/// Infinite deaths are drawn and exported at this multiple of `max_edge`.
pub const INFINITY_LINE: f64 = 1.05;

/// The simplices that create and destroy a feature, as point indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Generator {
    Component {
        /// Smallest point index in the dying component.
        vertex: usize,
        death_edge: Option<[usize; 2]>,
    },
    Loop {
        birth_edge: [usize; 2],
        death_triangle: Option<[usize; 3]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub dim: usize,
    pub birth: f64,
    #[serde(with = "crate::report::serde_inf")]
    pub death: f64,
    pub generator: Generator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representative: Option<Vec<[usize; 2]>>,
}

impl Feature {
    pub fn lifespan(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_infinite(&self) -> bool {
        self.death == f64::INFINITY
    }

    /// Death value for plots and CSV: infinite deaths sit on the infinity line.
    pub fn export_death(&self, max_edge: f64) -> f64 {
        if self.is_infinite() {
            INFINITY_LINE * max_edge
        } else {
            self.death
        }
    }

    /// Descending lifespan, then ascending birth, then generator.
    pub(crate) fn cmp_longest_first(&self, other: &Self) -> Ordering {
        other
            .lifespan()
            .total_cmp(&self.lifespan())
            .then(self.birth.total_cmp(&other.birth))
            .then_with(|| generator_key(&self.generator).cmp(&generator_key(&other.generator)))
    }
}

fn generator_key(g: &Generator) -> [usize; 3] {
    match *g {
        Generator::Component { vertex, .. } => [vertex, 0, 0],
        Generator::Loop { birth_edge, .. } => [birth_edge[0], birth_edge[1], 0],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub features: Vec<Feature>,
    pub max_edge: f64,
    pub min_pers: f64,
}

impl PersistenceDiagram {
    pub(crate) fn from_reduction(f: &RipsFiltration, r: &Reduction, min_pers: f64) -> Self {
        let edges = f.edges();
        let ends = |k: usize| [edges[k].i as usize, edges[k].j as usize];
        let mut features = Vec::new();
        for &(vertex, death) in &r.h0 {
            let d = death.map_or(f64::INFINITY, |k| edges[k].value);
            features.push(Feature {
                dim: 0,
                birth: 0.0,
                death: d,
                generator: Generator::Component {
                    vertex,
                    death_edge: death.map(ends),
                },
                representative: None,
            });
        }
        for &(k, tri) in &r.h1 {
            features.push(Feature {
                dim: 1,
                birth: edges[k].value,
                death: tri.map_or(f64::INFINITY, |t| t.value),
                generator: Generator::Loop {
                    birth_edge: ends(k),
                    death_triangle: tri.map(|t| t.vertices()),
                },
                representative: None,
            });
        }
        features.retain(|ft| ft.death > ft.birth && (ft.is_infinite() || ft.lifespan() >= min_pers));
        features.sort_by(|a, b| a.dim.cmp(&b.dim).then_with(|| a.cmp_longest_first(b)));
        PersistenceDiagram {
            features,
            max_edge: f.max_edge(),
            min_pers,
        }
    }

    pub fn of_dim(&self, dim: usize) -> impl Iterator<Item = &Feature> {
        self.features.iter().filter(move |f| f.dim == dim)
    }

    pub fn count(&self, dim: usize) -> usize {
        self.of_dim(dim).count()
    }

    pub fn infinite_count(&self, dim: usize) -> usize {
        self.of_dim(dim).filter(|f| f.is_infinite()).count()
    }

    /// The `k` longest-lived features of dimension `dim`, longest first.
    pub fn top_k(&self, dim: usize, k: usize) -> Vec<&Feature> {
        let mut v: Vec<&Feature> = self.of_dim(dim).collect();
        v.sort_by(|a, b| a.cmp_longest_first(b));
        v.truncate(k);
        v
    }

    /// A copy keeping only features with lifespan `>= min_pers` (and infinite ones).
    pub fn filtered(&self, min_pers: f64) -> Self {
        PersistenceDiagram {
            features: self
                .features
                .iter()
                .filter(|f| f.is_infinite() || f.lifespan() >= min_pers)
                .cloned()
                .collect(),
            max_edge: self.max_edge,
            min_pers,
        }
    }

    /// `dim,birth,death` rows; infinite deaths written on the infinity line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dim,birth,death,infinite\n");
        for f in &self.features {
            s.push_str(&format!(
                "{},{},{},{}\n",
                f.dim,
                f.birth,
                f.export_death(self.max_edge),
                u8::from(f.is_infinite())
            ));
        }
        s
    }
}
