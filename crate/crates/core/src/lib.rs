pub mod apps;
pub mod coloursplit;
pub mod embedder;
pub mod error;
pub mod exec;
pub mod fourgraphs;
pub mod graph;
pub mod matching;
pub mod partition;
pub mod regularity;
pub mod seed;

pub use error::{Error, Result};
pub use exec::Execution;
