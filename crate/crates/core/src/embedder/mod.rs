//! The rainbow blow-up embedder: instance checks, exceptional feasibility,
//! colour merging and reservation, the round-by-round matching embedding,
//! the reduction of general instances to the matchings form, and verification.

pub mod embed;
pub mod feasibility;
pub mod instance;
pub mod merge;
pub mod reduce;
pub mod reserve;
pub mod rounds;
pub mod verify;

pub use embed::{rainbow_blowup_embed, EmbedConfig, EmbedReport, Embedding, ReductionPolicy};
pub use feasibility::{check_feasible, Feasibility};
pub use instance::{validate_instance, BlowUpInstance, BlowUpJson, Form, Params, ValidationReport};
pub use merge::{merge_rare_colours, Merged};
pub use verify::{verify_embedding, Verification};
pub use reduce::{reduce_to_matchings, ReduceConfig, Reduction};
pub use reserve::{reserve_colours, ColourPolicy, ReserveConfig, Reservation};
pub use rounds::{embed_rounds, update_candidacy, CheckMode, RoundStats, RoundsConfig};
