//! Command line pipeline and read-only HTTP route service.

pub mod cli;
pub mod error;
pub mod geojson;
pub mod server;

pub use error::AppError;
