//! Spectra of Laplace and Schrödinger operators on metric graphs through the
//! secular matrix `Q(λ) = M(λ) − diag(α)`, certification of Colin de Verdière
//! matrices, and their realization as metric-graph operators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cdv;
pub mod graph;
pub mod io;
mod linalg;
pub mod mfunction;
pub mod probe;
pub mod realize;
pub mod spectral;

pub use graph::{catalog, CouplingVector, DiscreteGraph, EdgeSpec, MetricGraph};
pub use mfunction::Family;
