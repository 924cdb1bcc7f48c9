pub mod curvature;
pub mod error;
pub mod expr;
pub mod harness;
pub mod jet;
pub mod models;
pub mod static_tensors;
pub mod tensor;

pub use error::{Error, Result};
