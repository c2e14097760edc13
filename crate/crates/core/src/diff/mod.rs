//! Minimal differentiable-operator engine.
//!
//! Every operator has a hand-written backward pass; [`gradcheck`] verifies
//! them against central differences. All arithmetic is `f64`.

pub mod array;
pub mod gradcheck;
pub mod graph;
pub mod ops;

pub use array::{Array4, Shape4};
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use graph::{Activations, Graph, NodeId, OpKind, OpNode, ParamId, ParamKind, ParamStore, Parameter};
