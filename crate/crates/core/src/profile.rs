//! Connectivity profiles: one conjunct choice per consecutive sentence pair.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{profile_slots, DocumentError, TextDocument};
use crate::inventory::{ConjunctInventory, Granularity};

/// The conjunct linking sentence `pair_index` to sentence `pair_index - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationChoice {
    pub pair_index: u32,
    pub conjunct_id: String,
    /// Copied from the inventory at assembly time.
    pub category_id: String,
}

impl RelationChoice {
    pub fn label(&self, granularity: Granularity) -> &str {
        match granularity {
            Granularity::Category => &self.category_id,
            Granularity::Conjunct => &self.conjunct_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityProfile {
    pub document_id: String,
    pub evaluator_id: String,
    pub choices: Vec<RelationChoice>,
}

impl ConnectivityProfile {
    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn choice(&self, pair_index: u32) -> Option<&RelationChoice> {
        // Assembled profiles are dense from 2, so try the direct slot first.
        let direct = pair_index
            .checked_sub(2)
            .and_then(|i| self.choices.get(i as usize))
            .filter(|c| c.pair_index == pair_index);
        direct.or_else(|| self.choices.iter().find(|c| c.pair_index == pair_index))
    }

    /// Sentence count of the profiled document.
    pub fn sentence_count(&self) -> usize {
        self.choices.len() + 1
    }
}

/// Topics and comments extracted for one sentence before its conjunct is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicComment {
    pub pair_index: u32,
    pub topics: Vec<String>,
    pub comments: Vec<String>,
    /// Conjuncts placed between successive topic/comment pairs. Recorded, never scored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intra_pair_conjuncts: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopicCommentViolation {
    #[error("no topics given")]
    NoTopics,
    #[error("no comments given")]
    NoComments,
    #[error("blank topic or comment entry")]
    BlankEntry,
    #[error("unknown intra-pair conjunct '{0}'")]
    UnknownConjunct(String),
}

impl TopicComment {
    pub fn validate(&self, inv: &ConjunctInventory) -> Vec<TopicCommentViolation> {
        let mut out = Vec::new();
        if self.topics.is_empty() {
            out.push(TopicCommentViolation::NoTopics);
        }
        if self.comments.is_empty() {
            out.push(TopicCommentViolation::NoComments);
        }
        if self
            .topics
            .iter()
            .chain(&self.comments)
            .any(|s| s.trim().is_empty())
        {
            out.push(TopicCommentViolation::BlankEntry);
        }
        for id in self.intra_pair_conjuncts.iter().flatten() {
            if inv.conjunct(id).is_none() {
                out.push(TopicCommentViolation::UnknownConjunct(id.clone()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("missing-pair: no choice for pair {0}")]
    MissingPair(u32),
    #[error("duplicate-pair: pair {0} chosen more than once")]
    DuplicatePair(u32),
    #[error("unknown-conjunct: '{0}' is not in the inventory")]
    UnknownConjunct(String),
    #[error("pair-out-of-range: pair {pair_index} outside 2..={last}")]
    PairOutOfRange { pair_index: u32, last: u32 },
}

/// Builds a profile from unordered choices, filling in each choice's category
/// from the inventory. Input order does not matter.
pub fn assemble_profile(
    doc: &TextDocument,
    inv: &ConjunctInventory,
    choices: &[RelationChoice],
    evaluator_id: &str,
) -> Result<ConnectivityProfile, ProfileError> {
    let slots = profile_slots(doc)?;
    let last = *slots.last().expect("profile_slots is nonempty");

    let mut by_pair: BTreeMap<u32, RelationChoice> = BTreeMap::new();
    for c in choices {
        if c.pair_index < 2 || c.pair_index > last {
            return Err(ProfileError::PairOutOfRange {
                pair_index: c.pair_index,
                last,
            });
        }
        let category = inv
            .category_of(&c.conjunct_id)
            .ok_or_else(|| ProfileError::UnknownConjunct(c.conjunct_id.clone()))?;
        let denormalized = RelationChoice {
            pair_index: c.pair_index,
            conjunct_id: c.conjunct_id.clone(),
            category_id: category.to_owned(),
        };
        if by_pair.insert(c.pair_index, denormalized).is_some() {
            return Err(ProfileError::DuplicatePair(c.pair_index));
        }
    }
    if let Some(missing) = slots.iter().find(|p| !by_pair.contains_key(p)) {
        return Err(ProfileError::MissingPair(*missing));
    }

    Ok(ConnectivityProfile {
        document_id: doc.id.clone(),
        evaluator_id: evaluator_id.to_owned(),
        choices: by_pair.into_values().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;

    fn choice(pair: u32, conj: &str) -> RelationChoice {
        RelationChoice {
            pair_index: pair,
            conjunct_id: conj.into(),
            category_id: String::new(),
        }
    }

    fn doc(n: usize) -> TextDocument {
        TextDocument::new("d", "en", (1..=n).map(|i| format!("S{i}.")), None)
    }

    #[test]
    fn assembles_and_denormalizes() {
        let inv = defaults::inventory();
        let p = assemble_profile(
            &doc(3),
            &inv,
            &[choice(3, "however"), choice(2, "moreover")],
            "ev1",
        )
        .unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.choices[0].pair_index, 2);
        assert_eq!(p.choices[0].category_id, "addition");
        assert_eq!(p.choices[1].category_id, "contrast");
        assert_eq!(p.choice(3).unwrap().conjunct_id, "however");
        assert_eq!(p.sentence_count(), 3);
    }

    #[test]
    fn missing_pair() {
        let inv = defaults::inventory();
        assert_eq!(
            assemble_profile(&doc(3), &inv, &[choice(2, "moreover")], "e"),
            Err(ProfileError::MissingPair(3))
        );
    }

    #[test]
    fn duplicate_pair_and_unknown_conjunct() {
        let inv = defaults::inventory();
        assert_eq!(
            assemble_profile(
                &doc(3),
                &inv,
                &[choice(2, "moreover"), choice(2, "however"), choice(3, "so")],
                "e"
            ),
            Err(ProfileError::DuplicatePair(2))
        );
        assert_eq!(
            assemble_profile(&doc(2), &inv, &[choice(2, "zzz")], "e"),
            Err(ProfileError::UnknownConjunct("zzz".into()))
        );
        assert!(matches!(
            assemble_profile(&doc(2), &inv, &[choice(3, "so")], "e"),
            Err(ProfileError::PairOutOfRange { pair_index: 3, last: 2 })
        ));
    }

    #[test]
    fn topic_comment_validation() {
        let inv = defaults::inventory();
        let tc = TopicComment {
            pair_index: 2,
            topics: vec!["the system".into()],
            comments: vec!["was slow".into()],
            intra_pair_conjuncts: Some(vec!["however".into(), "nope".into()]),
        };
        assert_eq!(
            tc.validate(&inv),
            vec![TopicCommentViolation::UnknownConjunct("nope".into())]
        );
        let empty = TopicComment {
            pair_index: 2,
            topics: vec![],
            comments: vec![" ".into()],
            intra_pair_conjuncts: None,
        };
        assert_eq!(
            empty.validate(&inv),
            vec![TopicCommentViolation::NoTopics, TopicCommentViolation::BlankEntry]
        );
    }
}
