//! Sparsest cut on graphs of low treewidth.
//!
//! The pipeline: build or load a tree decomposition, reshape it into one with
//! small combinatorial diameter ([`shallow`]), solve the lifted LP of
//! consistent local distributions ([`lifting`]), and round with conditional
//! sampling along the decomposition ([`rounding`]). [`markov`] re-derives the
//! rounding guarantee on concrete instances and [`oracle`] supplies
//! brute-force ground truth.

pub mod combdiam;
pub mod error;
pub mod instance;
pub mod lifting;
pub mod lp;
pub mod markov;
pub mod oracle;
pub mod pipeline;
pub mod rational;
pub mod rng;
pub mod rounding;
pub mod shallow;
pub mod treedec;

pub use error::{Error, Result};
pub use instance::{Assignment, CutInstance, Graph, VertexId, WeightedEdge};
pub use rational::Rational;
pub use treedec::{NodeId, TreeDecomposition};
