//! Colored partite hypergraphs, regularization, regularity measurement,
//! representative colors, the editing procedure, copy counting and the
//! one-sided property tester, at desk scale.

pub mod counting;
pub mod cph;
pub mod editor;
pub mod error;
pub mod family;
pub mod harness;
pub mod model;
pub mod regularity;
pub mod regularize;
pub mod representative;
pub mod sampling;
pub mod tester;

pub use error::{Error, Result};
pub use model::{
    ColorId, ColoredHypergraph, Edge, FrameColor, IndexSet, Params, SimplicialComplex, TotalColor,
    UniformColoredGraph,
};
