//! Coverage-driven next-best-view selection for Gaussian radiance fields.
//!
//! The crate couples a small ray-cast Gaussian compositor with three
//! renderable view-information metrics (transmittance, view-direction and
//! coverage) and with exact Fisher-information oracles that the metrics
//! approximate. Everything runs on synthetic scenes small enough for the
//! dense oracles to be evaluated directly.
//!
//! Module map:
//! - [`scene`]: primitives, pinhole cameras, synthetic scene generation.
//! - [`raster`]: per-ray compositing weights, color and metric renders.
//! - [`sphere`]: direction grids on the unit sphere.
//! - [`fisher`]: Gram matrices, Fisher information gain and its identities.
//! - [`metrics`]: accumulators and the three view metrics.
//! - [`select`]: selection loops, reconstruction surrogate, reporting.

// NaN has to fail the `!(x > 0.0)` checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod error;
pub mod fisher;
pub mod image;
pub mod metrics;
pub mod raster;
pub mod scene;
pub mod select;
pub mod sphere;
pub mod stats;

pub use error::{Error, Result};
