#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod format;
pub mod gbas;
pub mod graph;
pub mod harness;
pub mod instances;
pub mod nant;
pub mod pheromone;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
