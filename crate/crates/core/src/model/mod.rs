//! Behavioural models: one per partition of the program.

mod builder;
pub mod ir;

pub use builder::{build_model, partition_program, BuildError, ASYNC_PREFIX};
pub use ir::*;
