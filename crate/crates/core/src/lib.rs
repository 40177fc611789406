//! Vertex expansion of weighted graphs: exact optima, an SDP relaxation with
//! Gaussian rounding, and the building blocks of the hardness reduction
//! (balanced analytic vertex expansion, the noisy dictatorship gadget and
//! Gaussian isoperimetry tools).

// `!(x > 0.0)` is how argument checks reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bave;
pub mod corpus;
pub mod error;
pub mod exact;
pub mod gadget;
pub mod gauss;
pub mod graph;
pub mod reduction;
pub mod rounding;
pub mod sdp;
pub mod seed;
pub mod transforms;

pub use error::{Error, Result};
pub use graph::{Cut, WeightedGraph};
