pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod fusion;
pub mod pipeline;
pub mod ingest;
pub mod preference;
pub mod synth;
pub mod tendency;

pub use error::{Error, Result};
