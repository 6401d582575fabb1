pub mod dg;
pub mod diagnostics;
pub mod error;
pub mod eval;
pub mod framework;
pub mod generator;
pub mod graph;
pub mod hin;
pub mod pipeline;
pub mod sampling;
pub mod synthetic;
pub mod tensor;
pub mod ug;

pub use error::{AgeError, Result};
