//! Geometric control quantities for waves on compact model surfaces.
//!
//! The crate computes geodesic averages of an observation function, the
//! constant `K(T)`, the control times `T_GCC` and `T_UC`, and the discrete
//! observability Gramian of the Klein-Gordon equation on the flat torus,
//! together with HUM control synthesis and a handful of semiclassical probes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod control_times;
pub mod error;
pub mod geometry;
pub mod gramian;
pub mod numerics;
pub mod regions;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{Manifold, PhasePoint, Point};
pub use regions::{Component, ObservationFunction};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
