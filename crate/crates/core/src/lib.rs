pub mod error;
pub mod matrix;
pub mod serial;
pub mod star_algebra;
pub mod bipartite;
pub mod ppt;
pub mod chsh;
pub mod distill;
pub mod document;
pub mod report;
pub mod lattice;
pub mod verify;
pub mod app;

pub use error::{Error, Result};
pub use matrix::{CMatrix, Tolerances, Vector, C64};
