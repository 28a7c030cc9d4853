//! Instance generation, the embedding pipeline and standalone verification
//! behind the `rainbow` command.

pub mod generate;
pub mod json;
pub mod pipeline;

pub use generate::{gen_instance, GenSpec, Kind, Shape};
pub use json::InstanceJson;
pub use pipeline::{run_pipeline, verify_report, Command, RunFlags, RunReport, VerifyOutcome};
