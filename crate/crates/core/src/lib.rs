pub mod analysis;
pub mod angle;
pub mod beams;
pub mod coding;
pub mod error;
pub mod exact;
pub mod exec;
pub mod geometry;
pub mod interval;
pub mod io;

pub use error::{Error, Result};
