use serde::{Deserialize, Serialize};

use crate::profile::{RelationChoice, TopicComment};

/// Lazy sessions go straight to the dialog; full sessions extract topics and
/// comments for each sentence first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    Lazy,
    Full,
}

impl std::str::FromStr for SessionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lazy" => Ok(SessionMode::Lazy),
            "full" => Ok(SessionMode::Full),
            other => Err(format!("unknown session mode '{other}'")),
        }
    }
}

/// One line of a session log: `{"seq","timestamp_ms","kind","payload"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub timestamp_ms: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    SessionStarted {
        session_id: String,
        evaluator_id: String,
        document_id: String,
        dialog_tree_id: String,
        inventory_id: String,
        mode: SessionMode,
        sentence_count: u32,
    },
    PairStarted {
        pair_index: u32,
    },
    TopicCommentSubmitted {
        topic_comment: TopicComment,
    },
    AnswerChosen {
        pair_index: u32,
        node_id: String,
        answer_index: usize,
        target: String,
    },
    Backtracked {
        pair_index: Option<u32>,
        undone: Undone,
    },
    ConjunctSelected {
        pair_index: u32,
        node_id: String,
        conjunct_id: String,
    },
    PairFinalized {
        choice: RelationChoice,
    },
    SessionFinalized {
        choices: u32,
    },
}

/// What a backtrack step reversed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Undone {
    /// Popped the last dialog node of the current pair.
    Node { node_id: String },
    /// Reopened the previous pair and withdrew its committed choice.
    Pair {
        reopened_pair: u32,
        withdrawn: RelationChoice,
    },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::SessionStarted { .. } => "session_started",
            EventBody::PairStarted { .. } => "pair_started",
            EventBody::TopicCommentSubmitted { .. } => "topic_comment_submitted",
            EventBody::AnswerChosen { .. } => "answer_chosen",
            EventBody::Backtracked { .. } => "backtracked",
            EventBody::ConjunctSelected { .. } => "conjunct_selected",
            EventBody::PairFinalized { .. } => "pair_finalized",
            EventBody::SessionFinalized { .. } => "session_finalized",
        }
    }
}

impl SessionEvent {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("session events always serialize")
    }
}
