//! Text-level translation evaluation by connectivity profiling.
//!
//! Evaluators link every sentence of a text to the one before it by picking
//! the conjunct that fits best, guided by a short question dialog. The
//! resulting per-text profiles are compared across evaluators and across
//! translations with a rank-transform spread statistic.
//!
//! * [`document`], [`inventory`], [`profile`]: the domain model.
//! * [`dialog`]: the per-pair dialog state machine and its replayable log.
//! * [`stats`]: spread, modes and reports, generic over the scalar type.
//! * [`store`]: the on-disk project layout.

pub mod defaults;
pub mod dialog;
pub mod document;
pub mod inventory;
pub mod profile;
pub mod stats;
pub mod store;

pub use document::{check_alignment, profile_slots, AlignmentReport, Sentence, TextDocument};
pub use inventory::{validate_inventory, Category, Conjunct, ConjunctInventory, Granularity};
pub use profile::{assemble_profile, ConnectivityProfile, RelationChoice, TopicComment};
pub use stats::Scalar;

/// Exact rational scalar for statistics that must not round.
pub type Rational = num_rational::Ratio<i64>;

pub type Spread = stats::SpreadResult<f64>;
pub type ExactSpread = stats::SpreadResult<Rational>;
pub type TextReport = stats::Report<f64>;
pub type ExactReport = stats::Report<Rational>;
pub type ModeAgreement = stats::ModeAgreement<f64>;
