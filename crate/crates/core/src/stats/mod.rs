//! Rank-transform spread statistics over groups of connectivity profiles.
//!
//! For each sentence pair the evaluators' labels are turned into frequency
//! ranks (most chosen label = 1) and the population variance of those ranks
//! is the pair's spread; 0 means every evaluator agreed. Everything here is
//! generic over [`Scalar`] so the same code runs in `f64` or exact rationals.

mod modes;
mod rank;
mod report;
mod scalar;

use thiserror::Error;

use crate::document::AlignmentReport;

pub use modes::{mode_agreement, profile_correspondence, ModeAgreement, PairModes};
pub use rank::{
    rank_transform, spread, spread_of, ChoiceDistribution, RankedLabel, RankedSample,
    SpreadResult,
};
pub use report::{
    mode_connector, pair_spread, pooled_report, text_report, Aggregation, PairRow,
    ProfileGroup, Report,
};
pub use scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("empty-sample: no rank values")]
    EmptySample,
    #[error("invalid-distribution: {0}")]
    InvalidDistribution(String),
    #[error("no-profiles")]
    NoProfiles,
    #[error("pair-out-of-range: profile of '{document_id}' has no pair {pair_index}")]
    PairOutOfRange { pair_index: u32, document_id: String },
    #[error("mixed-documents: expected '{expected}', found '{found}'")]
    MixedDocuments { expected: String, found: String },
    #[error("length-mismatch: {left} vs {right} choices")]
    LengthMismatch { left: usize, right: usize },
    #[error("misaligned-documents: {}", describe(.0))]
    MisalignedDocuments(Vec<AlignmentReport>),
}

fn describe(reports: &[AlignmentReport]) -> String {
    reports
        .iter()
        .map(|r| {
            let mut why = Vec::new();
            if !r.count_match {
                why.push(format!(
                    "{} vs {} sentences",
                    r.left_sentences, r.right_sentences
                ));
            }
            if !r.group_match {
                why.push("different alignment groups".to_string());
            }
            format!("{}/{} ({})", r.left_id, r.right_id, why.join(", "))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

impl StatsError {
    pub fn code(&self) -> &'static str {
        match self {
            StatsError::EmptySample => "empty-sample",
            StatsError::InvalidDistribution(_) => "invalid-distribution",
            StatsError::NoProfiles => "no-profiles",
            StatsError::PairOutOfRange { .. } => "pair-out-of-range",
            StatsError::MixedDocuments { .. } => "mixed-documents",
            StatsError::LengthMismatch { .. } => "length-mismatch",
            StatsError::MisalignedDocuments(_) => "misaligned-documents",
        }
    }
}
