//! Centrality- and density-filtered persistent homology for point clouds
//! sampled from dynamical systems.
//!
//! The workflow: build or load a [`PointCloud`](geometry::PointCloud), compute
//! a per-point filter ([`fields`]), keep the top `p` percent of points for a
//! grid of `p`, compute Vietoris-Rips persistence in dimensions 0 and 1 on
//! each subset ([`persistence`]), and collect the longest-lived features into
//! a [`BifiltrationSummary`](bifiltration::BifiltrationSummary). The
//! [`significance`] module supplies the noise threshold from a Gaussian
//! reference cloud and [`regimes`] maps surviving components to labelled
//! regimes. [`pipeline`] strings the stages together.

pub mod bifiltration;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod persistence;
pub mod pipeline;
pub mod regimes;
pub mod report;
pub mod significance;
pub mod svg;

pub use error::{Error, Result};
pub use geometry::PointCloud;
