//! Structure-informed covariance features for graph Matérn random fields.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] weighted interaction graphs, Laplacians and node partitions;
//! * [`linalg`] symmetric eigensolvers and three independent routes to real
//!   matrix powers (eigendecomposition, Stieltjes quadrature, contour quadrature);
//! * [`matern`] graph Matérn fields: exact covariance and sampling;
//! * [`consistency`] the oscillation map, the commutation error between
//!   projection and powering, and the sufficient gates that certify structural
//!   consistency under partial observation;
//! * [`features`], [`pipeline`], [`geometry`], [`signatures`] turn observations
//!   into power-transformed covariance features, select the exponent, measure
//!   class separation on the SPD manifold and threshold structural signatures.

// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consistency;
pub mod error;
pub mod features;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod matern;
pub mod pipeline;
pub mod signatures;

pub use error::{Error, Result};
