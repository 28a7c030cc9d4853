//! Applications built on the blow-up embedder: spanning trees in clustered
//! hosts with a Hamilton cycle of dense pairs, the partial embedding of a
//! small exceptional graph, and spanning embeddings into dense random-like hosts.

pub mod dirac;
pub mod partial;
pub mod quasirandom;

pub use dirac::{dirac_tree_embed, hamilton_cycle, DiracConfig, DiracInstance, DiracOutcome};
pub use partial::{partial_embed, recheck_partial, PartialChecks, PartialConfig, PartialEmbedding, PartialInstance};
pub use quasirandom::{quasirandom_embed, QuasirandomConfig, QuasirandomInstance, QuasirandomOutcome};

use crate::embedder::{EmbedConfig, ReductionPolicy};
use crate::embedder::reserve::ColourPolicy;

/// Embedder settings used by the applications unless overridden: colours
/// tracked in a ledger rather than reserved per round, and general target
/// graphs embedded without refinement.
pub fn app_embed_config() -> EmbedConfig {
    EmbedConfig {
        policy: ColourPolicy::Ledger,
        reduction: ReductionPolicy::Never,
        ..EmbedConfig::default()
    }
}
