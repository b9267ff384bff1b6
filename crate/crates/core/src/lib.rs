pub mod algebraic;
pub mod analysis;
pub mod error;
pub mod gauss;
pub mod io;
pub mod reproduce;
pub mod spectral;

pub use error::{Result, VfeError};
