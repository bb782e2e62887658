//! Vietoris-Rips persistent homology in dimensions 0 and 1.
//!
//! Triangles are the top simplices: they are needed to kill loops, and no
//! tetrahedra are built. Pairs with zero lifespan are never reported.

mod components;
mod diagram;
mod reduction;
mod representative;
mod rips;

pub use components::{components_at, ComponentMembership};
pub use diagram::{Feature, Generator, PersistenceDiagram, INFINITY_LINE};
pub use rips::{
    build_rips, build_rips_with, count_exact_edges, farthest_point_order, Edge, RipsFiltration,
    RipsOptions, SparseInfo, DEFAULT_EDGE_BUDGET,
};

use crate::error::{Error, Result};
use reduction::{reduce, Reduction};

/// A filtration together with its full pairing, for diagrams at several
/// `min_pers` levels and for representatives.
pub struct Persistence<'a> {
    filtration: &'a RipsFiltration,
    reduction: Reduction,
}

impl<'a> Persistence<'a> {
    pub fn compute(filtration: &'a RipsFiltration) -> Result<Self> {
        if filtration.num_vertices() > reduction::MAX_VERTICES {
            return Err(Error::InvalidArgument(format!(
                "at most {} vertices are supported",
                reduction::MAX_VERTICES
            )));
        }
        Ok(Persistence {
            filtration,
            reduction: reduce(filtration),
        })
    }

    pub fn filtration(&self) -> &RipsFiltration {
        self.filtration
    }

    /// Features with lifespan `>= min_pers`; infinite ones are always kept.
    pub fn diagram(&self, min_pers: f64) -> PersistenceDiagram {
        PersistenceDiagram::from_reduction(self.filtration, &self.reduction, min_pers)
    }

    /// A cycle of edges (point-index pairs) representing a finite loop.
    ///
    /// With `tighten`, the birth edge closed by a shortest path through
    /// strictly older edges is returned instead when such a path exists. That
    /// loop is usually much shorter but is a geometric heuristic, not a
    /// certified homologous cycle.
    pub fn representative(&self, feature: &Feature, tighten: bool) -> Result<Vec<[usize; 2]>> {
        representative::representative(self.filtration, &self.reduction, feature, tighten)
    }

    /// Points in the component that dies with a dimension-0 feature,
    /// measured just before its death (at the cap for immortal components).
    pub fn component_members(&self, feature: &Feature) -> Result<Vec<usize>> {
        components::feature_members(self.filtration, feature, None)
    }

    /// Members of the component containing the feature's generator vertex at
    /// an explicit `scale`.
    pub fn component_members_at(&self, feature: &Feature, scale: f64) -> Result<Vec<usize>> {
        components::feature_members(self.filtration, feature, Some(scale))
    }
}

pub fn compute_persistence(filtration: &RipsFiltration, min_pers: f64) -> Result<PersistenceDiagram> {
    if !(min_pers >= 0.0) {
        return Err(Error::InvalidArgument(format!("min_pers must be >= 0, got {min_pers}")));
    }
    Ok(Persistence::compute(filtration)?.diagram(min_pers))
}

/// Recomputes the pairing and extracts a representative for `feature`.
pub fn representative_cycle(filtration: &RipsFiltration, feature: &Feature) -> Result<Vec<[usize; 2]>> {
    Persistence::compute(filtration)?.representative(feature, false)
}
