use serde::{Deserialize, Serialize};

use super::diagram::{Feature, Generator};
use super::rips::RipsFiltration;
use crate::error::{Error, Result};

/// Connected components of the edge graph at one scale.
///
/// Component ids are assigned in order of each component's smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentMembership {
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl ComponentMembership {
    pub fn num_components(&self) -> usize {
        self.sizes.len()
    }

    pub fn members(&self, id: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&v| self.labels[v] == id).collect()
    }
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

/// Components using every edge with value `<= scale`.
pub fn components_at(f: &RipsFiltration, scale: f64) -> ComponentMembership {
    let n = f.num_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    let cut = f.edges().partition_point(|e| e.value <= scale);
    for e in &f.edges()[..cut] {
        let a = find(&mut parent, e.i as usize);
        let b = find(&mut parent, e.j as usize);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut id_of_root = vec![usize::MAX; n];
    let mut labels = vec![0; n];
    let mut sizes = Vec::new();
    for v in 0..n {
        let r = find(&mut parent, v);
        if id_of_root[r] == usize::MAX {
            id_of_root[r] = sizes.len();
            sizes.push(0);
        }
        labels[v] = id_of_root[r];
        sizes[labels[v]] += 1;
    }
    ComponentMembership { labels, sizes }
}

pub(crate) fn feature_members(f: &RipsFiltration, feature: &Feature, scale: Option<f64>) -> Result<Vec<usize>> {
    let Generator::Component { vertex, .. } = feature.generator else {
        return Err(Error::InvalidArgument("component members need a dimension-0 feature".into()));
    };
    let scale = match scale {
        Some(s) => s,
        None if feature.is_infinite() => f.max_edge(),
        None => feature.death - 1e-9 * f.max_edge(),
    };
    let m = components_at(f, scale);
    Ok(m.members(m.labels[vertex]))
}
