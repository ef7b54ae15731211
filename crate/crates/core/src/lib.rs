pub mod chart_format;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod form;
pub mod graded;
pub mod groupoid;
pub mod lie;
pub mod linalg;
pub mod mc;
pub mod poly;
pub mod random;
pub mod report;
pub mod scalar;
pub mod simplicial;
pub mod symplectic;

pub use error::{Error, Result};
