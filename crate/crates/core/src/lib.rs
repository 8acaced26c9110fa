//! Topological characterisation of open curves, primarily protein backbones.
//!
//! The crate is organised along the processing pipeline:
//!
//! * [`geometry`] reads backbone coordinates, interpolates point clouds,
//!   computes knot depth and applies seeded Gaussian noise.
//! * [`persistence`] builds the Vietoris-Rips edge filtration and computes
//!   degree-1 persistent homology over Z/2, with cycle representatives and a
//!   brute-force oracle.
//! * [`metrics`] compares diagrams with Wasserstein distances.
//! * [`landscape`] turns diagrams into persistence landscapes and provides
//!   norms, averages, randomization tests and the `.lan` text format.
//! * [`analysis`] holds Isomap, silhouette scores and single-linkage
//!   clustering.
//!
//! Batch work goes through [`par`], which uses rayon when the `parallel`
//! feature is enabled (the default) and plain iterators otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod format;
pub mod geometry;
pub mod landscape;
pub mod metrics;
pub mod par;
pub mod persistence;
pub mod rng;

pub use error::{Error, Result};
