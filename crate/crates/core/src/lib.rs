pub mod contact;
pub mod discretization;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod rheology;
pub mod scenarios;
pub mod surface;

pub use error::{Error, ErrorKind, Result};
