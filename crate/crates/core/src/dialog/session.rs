use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::clock::{Clock, SystemClock};
use super::event::{EventBody, SessionEvent, SessionMode, Undone};
use super::tree::{validate_tree, DialogNode, DialogTree, TreeViolation};
use crate::document::{profile_slots, DocumentError, TextDocument};
use crate::inventory::ConjunctInventory;
use crate::profile::{ConnectivityProfile, RelationChoice, TopicComment, TopicCommentViolation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurrentPair {
    Pair(u32),
    Done,
}

/// Everything known about one evaluator working through one document.
/// Rebuilt exactly by replaying `log`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub evaluator_id: String,
    pub document_id: String,
    pub dialog_tree_id: String,
    pub mode: SessionMode,
    pub sentence_count: u32,
    pub current_pair: CurrentPair,
    /// Visited nodes of the current pair, root first. Empty once the session is done.
    pub dialog_path: Vec<String>,
    pub committed_choices: BTreeMap<u32, RelationChoice>,
    pub pending_topic_comment: Option<TopicComment>,
    /// Topic/comment entries of committed pairs, restored if a pair is reopened.
    pub settled_topic_comments: BTreeMap<u32, TopicComment>,
    pub log: Vec<SessionEvent>,
}

impl SessionState {
    pub fn is_finalized(&self) -> bool {
        self.current_pair == CurrentPair::Done
    }

    pub fn current_pair_index(&self) -> Option<u32> {
        match self.current_pair {
            CurrentPair::Pair(p) => Some(p),
            CurrentPair::Done => None,
        }
    }

    pub fn current_node_id(&self) -> Option<&str> {
        self.dialog_path.last().map(String::as_str)
    }

    pub fn last_seq(&self) -> u64 {
        self.log.last().map_or(0, |e| e.seq)
    }

    fn last_timestamp(&self) -> u64 {
        self.log.last().map_or(0, |e| e.timestamp_ms)
    }

    pub fn total_pairs(&self) -> u32 {
        self.sentence_count.saturating_sub(1)
    }

    pub fn can_backtrack(&self) -> bool {
        match self.current_pair {
            CurrentPair::Pair(p) => self.dialog_path.len() >= 2 || p > 2,
            CurrentPair::Done => true,
        }
    }

    /// The assembled profile, once every pair is committed.
    pub fn profile(&self) -> Option<ConnectivityProfile> {
        self.is_finalized().then(|| ConnectivityProfile {
            document_id: self.document_id.clone(),
            evaluator_id: self.evaluator_id.clone(),
            choices: self.committed_choices.values().cloned().collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DialogError {
    #[error("invalid-tree: {}", join(.0))]
    InvalidTree(Vec<TreeViolation>),
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("wrong-mode: topic/comment extraction is only part of full-mode sessions")]
    WrongMode,
    #[error("wrong-pair: expected pair {expected}, got {got}")]
    WrongPair { expected: u32, got: u32 },
    #[error("pair-already-finalized: pair {0} is already committed")]
    PairAlreadyFinalized(u32),
    #[error("invalid-topic-comment: {}", join(.0))]
    InvalidTopicComment(Vec<TopicCommentViolation>),
    #[error("topic-comment-required: pair {0} needs topics and comments first")]
    TopicCommentRequired(u32),
    #[error("not-a-question: node '{0}' is not a question")]
    NotAQuestion(String),
    #[error("index-out-of-range: answer {index} requested, node has {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("not-a-screen: node '{0}' is not a conjunct screen")]
    NotAScreen(String),
    #[error("conjunct-not-on-screen: '{conjunct}' is not offered on '{node}'")]
    ConjunctNotOnScreen { conjunct: String, node: String },
    #[error("nothing-to-backtrack")]
    NothingToBacktrack,
    #[error("session-finalized: every pair is already committed")]
    SessionFinalized,
    #[error("corrupt-log at seq {seq}: {reason}")]
    CorruptLog { seq: u64, reason: String },
    #[error("corrupt-log: operation starting after seq {after_seq} is incomplete")]
    IncompleteOperation { after_seq: u64 },
}

impl DialogError {
    /// Stable kebab-case code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            DialogError::InvalidTree(_) => "invalid-tree",
            DialogError::Document(_) => "document-too-short",
            DialogError::WrongMode => "wrong-mode",
            DialogError::WrongPair { .. } => "wrong-pair",
            DialogError::PairAlreadyFinalized(_) => "pair-already-finalized",
            DialogError::InvalidTopicComment(_) => "invalid-topic-comment",
            DialogError::TopicCommentRequired(_) => "topic-comment-required",
            DialogError::NotAQuestion(_) => "not-a-question",
            DialogError::IndexOutOfRange { .. } => "index-out-of-range",
            DialogError::NotAScreen(_) => "not-a-screen",
            DialogError::ConjunctNotOnScreen { .. } => "conjunct-not-on-screen",
            DialogError::NothingToBacktrack => "nothing-to-backtrack",
            DialogError::SessionFinalized => "session-finalized",
            DialogError::CorruptLog { .. } | DialogError::IncompleteOperation { .. } => {
                "corrupt-log"
            }
        }
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Follow-up events an operation still owes before its group is complete.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Expect {
    Nothing,
    PairStarted(u32),
    PairFinalized(RelationChoice),
    SessionFinalized,
}

static SYSTEM_CLOCK: SystemClock = SystemClock;

/// A document, a dialog and an inventory checked against each other. All
/// session operations and replay go through this binding.
#[derive(Clone, Copy)]
pub struct Dialog<'a> {
    document: &'a TextDocument,
    tree: &'a DialogTree,
    inventory: &'a ConjunctInventory,
    clock: &'a dyn Clock,
}

impl<'a> Dialog<'a> {
    pub fn new(
        document: &'a TextDocument,
        tree: &'a DialogTree,
        inventory: &'a ConjunctInventory,
    ) -> Result<Self, DialogError> {
        profile_slots(document)?;
        let violations = validate_tree(tree, inventory);
        if !violations.is_empty() {
            return Err(DialogError::InvalidTree(violations));
        }
        Ok(Dialog {
            document,
            tree,
            inventory,
            clock: &SYSTEM_CLOCK,
        })
    }

    pub fn with_clock(mut self, clock: &'a dyn Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn document(&self) -> &'a TextDocument {
        self.document
    }

    pub fn tree(&self) -> &'a DialogTree {
        self.tree
    }

    pub fn inventory(&self) -> &'a ConjunctInventory {
        self.inventory
    }

    fn n(&self) -> u32 {
        self.document.len() as u32
    }

    pub fn start_session(
        &self,
        session_id: &str,
        evaluator_id: &str,
        mode: SessionMode,
    ) -> Result<SessionState, DialogError> {
        let timestamp_ms = self.clock.now_ms();
        let first = SessionEvent {
            seq: 1,
            timestamp_ms,
            body: EventBody::SessionStarted {
                session_id: session_id.to_owned(),
                evaluator_id: evaluator_id.to_owned(),
                document_id: self.document.id.clone(),
                dialog_tree_id: self.tree.id.clone(),
                inventory_id: self.inventory.id.clone(),
                mode,
                sentence_count: self.n(),
            },
        };
        let (mut state, mut expect) = self
            .begin(&first)
            .expect("a freshly built start event is consistent");
        let open = SessionEvent {
            seq: 2,
            timestamp_ms,
            body: EventBody::PairStarted { pair_index: 2 },
        };
        self.apply(&mut state, &mut expect, &open)
            .expect("the first pair always opens");
        Ok(state)
    }

    pub fn submit_topic_comment(
        &self,
        state: &mut SessionState,
        tc: TopicComment,
    ) -> Result<Vec<SessionEvent>, DialogError> {
        if state.mode != SessionMode::Full {
            return Err(DialogError::WrongMode);
        }
        let current = match state.current_pair {
            CurrentPair::Done => return Err(DialogError::PairAlreadyFinalized(tc.pair_index)),
            CurrentPair::Pair(p) => p,
        };
        if state.committed_choices.contains_key(&tc.pair_index) {
            return Err(DialogError::PairAlreadyFinalized(tc.pair_index));
        }
        if tc.pair_index != current {
            return Err(DialogError::WrongPair {
                expected: current,
                got: tc.pair_index,
            });
        }
        let violations = tc.validate(self.inventory);
        if !violations.is_empty() {
            return Err(DialogError::InvalidTopicComment(violations));
        }
        Ok(self.emit_group(
            state,
            vec![EventBody::TopicCommentSubmitted { topic_comment: tc }],
        ))
    }

    pub fn choose_answer(
        &self,
        state: &mut SessionState,
        answer_index: usize,
    ) -> Result<Vec<SessionEvent>, DialogError> {
        let pair = state.current_pair_index().ok_or(DialogError::SessionFinalized)?;
        let node_id = state.current_node_id().expect("active pair has a path").to_owned();
        let DialogNode::Question { answers, .. } = self.node(&node_id) else {
            return Err(DialogError::NotAQuestion(node_id));
        };
        let answer = answers.get(answer_index).ok_or(DialogError::IndexOutOfRange {
            index: answer_index,
            len: answers.len(),
        })?;
        self.require_topic_comment(state, pair)?;
        Ok(self.emit_group(
            state,
            vec![EventBody::AnswerChosen {
                pair_index: pair,
                node_id,
                answer_index,
                target: answer.target.clone(),
            }],
        ))
    }

    pub fn backtrack(&self, state: &mut SessionState) -> Result<Vec<SessionEvent>, DialogError> {
        let current = state.current_pair_index();
        if current.is_some() && state.dialog_path.len() >= 2 {
            let node_id = state.current_node_id().expect("path is nonempty").to_owned();
            return Ok(self.emit_group(
                state,
                vec![EventBody::Backtracked {
                    pair_index: current,
                    undone: Undone::Node { node_id },
                }],
            ));
        }
        let previous = match current {
            Some(p) if p > 2 => p - 1,
            Some(_) => return Err(DialogError::NothingToBacktrack),
            None => self.n(),
        };
        let withdrawn = state
            .committed_choices
            .get(&previous)
            .cloned()
            .ok_or(DialogError::NothingToBacktrack)?;
        Ok(self.emit_group(
            state,
            vec![EventBody::Backtracked {
                pair_index: current,
                undone: Undone::Pair {
                    reopened_pair: previous,
                    withdrawn,
                },
            }],
        ))
    }

    pub fn select_conjunct(
        &self,
        state: &mut SessionState,
        conjunct_id: &str,
    ) -> Result<Vec<SessionEvent>, DialogError> {
        let pair = state.current_pair_index().ok_or(DialogError::SessionFinalized)?;
        let node_id = state.current_node_id().expect("active pair has a path").to_owned();
        let DialogNode::ConjunctScreen { conjuncts } = self.node(&node_id) else {
            return Err(DialogError::NotAScreen(node_id));
        };
        if !conjuncts.iter().any(|c| c == conjunct_id) {
            return Err(DialogError::ConjunctNotOnScreen {
                conjunct: conjunct_id.to_owned(),
                node: node_id,
            });
        }
        self.require_topic_comment(state, pair)?;
        let choice = self.choice(pair, conjunct_id);
        let next = if pair < self.n() {
            EventBody::PairStarted {
                pair_index: pair + 1,
            }
        } else {
            EventBody::SessionFinalized {
                choices: state.committed_choices.len() as u32 + 1,
            }
        };
        Ok(self.emit_group(
            state,
            vec![
                EventBody::ConjunctSelected {
                    pair_index: pair,
                    node_id,
                    conjunct_id: conjunct_id.to_owned(),
                },
                EventBody::PairFinalized { choice },
                next,
            ],
        ))
    }

    /// Rebuilds a session from its log. Every event is checked against the
    /// state reconstructed so far; an operation cut short at the end of the
    /// log is reported as [`DialogError::IncompleteOperation`].
    pub fn replay(&self, log: &[SessionEvent]) -> Result<SessionState, DialogError> {
        let first = log.first().ok_or(DialogError::CorruptLog {
            seq: 0,
            reason: "empty log".into(),
        })?;
        let corrupt = |seq: u64, reason: String| DialogError::CorruptLog { seq, reason };
        if first.seq != 1 {
            return Err(corrupt(first.seq, "log must start at seq 1".into()));
        }
        let (mut state, mut expect) = self.begin(first).map_err(|r| corrupt(1, r))?;
        let mut group_start = 0;
        for event in &log[1..] {
            if event.seq != state.last_seq() + 1 {
                return Err(corrupt(
                    event.seq,
                    format!("expected seq {}", state.last_seq() + 1),
                ));
            }
            if event.timestamp_ms < state.last_timestamp() {
                return Err(corrupt(event.seq, "timestamp went backwards".into()));
            }
            if expect == Expect::Nothing {
                group_start = state.last_seq();
            }
            self.apply(&mut state, &mut expect, event)
                .map_err(|r| corrupt(event.seq, r))?;
        }
        if expect != Expect::Nothing {
            return Err(DialogError::IncompleteOperation {
                after_seq: group_start,
            });
        }
        Ok(state)
    }

    fn node(&self, id: &str) -> &'a DialogNode {
        self.tree.node(id).expect("paths only hold validated node ids")
    }

    fn choice(&self, pair_index: u32, conjunct_id: &str) -> RelationChoice {
        RelationChoice {
            pair_index,
            conjunct_id: conjunct_id.to_owned(),
            category_id: self
                .inventory
                .category_of(conjunct_id)
                .expect("screens only list inventory conjuncts")
                .to_owned(),
        }
    }

    fn require_topic_comment(&self, state: &SessionState, pair: u32) -> Result<(), DialogError> {
        if state.mode == SessionMode::Full && state.pending_topic_comment.is_none() {
            return Err(DialogError::TopicCommentRequired(pair));
        }
        Ok(())
    }

    fn emit_group(&self, state: &mut SessionState, bodies: Vec<EventBody>) -> Vec<SessionEvent> {
        let mut expect = Expect::Nothing;
        let events = self.emit(state, &mut expect, bodies);
        debug_assert_eq!(expect, Expect::Nothing);
        events
    }

    fn emit(
        &self,
        state: &mut SessionState,
        expect: &mut Expect,
        bodies: Vec<EventBody>,
    ) -> Vec<SessionEvent> {
        // Timestamps never run backwards even if the wall clock does.
        let timestamp_ms = self.clock.now_ms().max(state.last_timestamp());
        let start = state.log.len();
        for body in bodies {
            let event = SessionEvent {
                seq: state.last_seq() + 1,
                timestamp_ms,
                body,
            };
            if let Err(reason) = self.apply(state, expect, &event) {
                panic!("live transition rejected by replay rules: {reason}");
            }
        }
        state.log[start..].to_vec()
    }

    fn begin(&self, event: &SessionEvent) -> Result<(SessionState, Expect), String> {
        let EventBody::SessionStarted {
            session_id,
            evaluator_id,
            document_id,
            dialog_tree_id,
            inventory_id,
            mode,
            sentence_count,
        } = &event.body
        else {
            return Err(format!("first event is {}", event.body.kind()));
        };
        if *document_id != self.document.id {
            return Err(format!("log is for document '{document_id}'"));
        }
        if *dialog_tree_id != self.tree.id {
            return Err(format!("log is for dialog '{dialog_tree_id}'"));
        }
        if *inventory_id != self.inventory.id {
            return Err(format!("log is for inventory '{inventory_id}'"));
        }
        if *sentence_count != self.n() {
            return Err(format!(
                "log counts {sentence_count} sentences, document has {}",
                self.n()
            ));
        }
        let state = SessionState {
            session_id: session_id.clone(),
            evaluator_id: evaluator_id.clone(),
            document_id: document_id.clone(),
            dialog_tree_id: dialog_tree_id.clone(),
            mode: *mode,
            sentence_count: *sentence_count,
            current_pair: CurrentPair::Pair(2),
            dialog_path: Vec::new(),
            committed_choices: BTreeMap::new(),
            pending_topic_comment: None,
            settled_topic_comments: BTreeMap::new(),
            log: vec![event.clone()],
        };
        Ok((state, Expect::PairStarted(2)))
    }

    /// The single transition function shared by live operations and replay.
    fn apply(
        &self,
        state: &mut SessionState,
        expect: &mut Expect,
        event: &SessionEvent,
    ) -> Result<(), String> {
        let active = |state: &SessionState, pair: u32| -> Result<(), String> {
            match state.current_pair {
                CurrentPair::Pair(p) if p == pair => Ok(()),
                CurrentPair::Pair(p) => Err(format!("event for pair {pair} while pair {p} is open")),
                CurrentPair::Done => Err(format!("event for pair {pair} after the session finished")),
            }
        };
        let at_node = |state: &SessionState, node_id: &str| -> Result<(), String> {
            match state.current_node_id() {
                Some(top) if top == node_id => Ok(()),
                other => Err(format!("event at node '{node_id}' but path ends at {other:?}")),
            }
        };
        let needs_tc = |state: &SessionState| -> Result<(), String> {
            if state.mode == SessionMode::Full && state.pending_topic_comment.is_none() {
                Err("full-mode decision without topic/comment".into())
            } else {
                Ok(())
            }
        };
        let free = |expect: &Expect| -> Result<(), String> {
            match expect {
                Expect::Nothing => Ok(()),
                other => Err(format!("expected {other:?}")),
            }
        };

        match &event.body {
            EventBody::SessionStarted { .. } => return Err("session started twice".into()),
            EventBody::PairStarted { pair_index } => {
                if *expect != Expect::PairStarted(*pair_index) {
                    return Err(format!("unexpected pair_started {pair_index}, expected {expect:?}"));
                }
                state.current_pair = CurrentPair::Pair(*pair_index);
                state.dialog_path = vec![self.tree.root.clone()];
                state.pending_topic_comment = None;
                *expect = Expect::Nothing;
            }
            EventBody::TopicCommentSubmitted { topic_comment } => {
                free(expect)?;
                if state.mode != SessionMode::Full {
                    return Err("topic/comment in a lazy session".into());
                }
                active(state, topic_comment.pair_index)?;
                if !topic_comment.validate(self.inventory).is_empty() {
                    return Err("invalid topic/comment".into());
                }
                state.pending_topic_comment = Some(topic_comment.clone());
            }
            EventBody::AnswerChosen {
                pair_index,
                node_id,
                answer_index,
                target,
            } => {
                free(expect)?;
                active(state, *pair_index)?;
                at_node(state, node_id)?;
                let DialogNode::Question { answers, .. } = self
                    .tree
                    .node(node_id)
                    .ok_or_else(|| format!("unknown node '{node_id}'"))?
                else {
                    return Err(format!("answer at non-question '{node_id}'"));
                };
                match answers.get(*answer_index) {
                    Some(a) if a.target == *target => {}
                    _ => return Err(format!("answer {answer_index} of '{node_id}' does not lead to '{target}'")),
                }
                needs_tc(state)?;
                state.dialog_path.push(target.clone());
            }
            EventBody::Backtracked { pair_index, undone } => {
                free(expect)?;
                if state.current_pair_index() != *pair_index {
                    return Err(format!("backtrack recorded at pair {pair_index:?}"));
                }
                match undone {
                    Undone::Node { node_id } => {
                        if state.dialog_path.len() < 2 {
                            return Err("node backtrack at the root".into());
                        }
                        at_node(state, node_id)?;
                        state.dialog_path.pop();
                    }
                    Undone::Pair {
                        reopened_pair,
                        withdrawn,
                    } => {
                        if state.dialog_path.len() >= 2 {
                            return Err("pair backtrack while the dialog path is open".into());
                        }
                        let expected_prev = match state.current_pair {
                            CurrentPair::Pair(p) => p - 1,
                            CurrentPair::Done => self.n(),
                        };
                        if *reopened_pair != expected_prev {
                            return Err(format!("reopened pair {reopened_pair}, expected {expected_prev}"));
                        }
                        if state.committed_choices.get(reopened_pair) != Some(withdrawn) {
                            return Err(format!("withdrawn choice does not match pair {reopened_pair}"));
                        }
                        state.committed_choices.remove(reopened_pair);
                        state.current_pair = CurrentPair::Pair(*reopened_pair);
                        state.dialog_path = vec![self.tree.root.clone()];
                        state.pending_topic_comment =
                            state.settled_topic_comments.remove(reopened_pair);
                    }
                }
            }
            EventBody::ConjunctSelected {
                pair_index,
                node_id,
                conjunct_id,
            } => {
                free(expect)?;
                active(state, *pair_index)?;
                at_node(state, node_id)?;
                match self.tree.node(node_id) {
                    Some(DialogNode::ConjunctScreen { conjuncts })
                        if conjuncts.iter().any(|c| c == conjunct_id) => {}
                    _ => return Err(format!("'{conjunct_id}' is not offered at '{node_id}'")),
                }
                needs_tc(state)?;
                *expect = Expect::PairFinalized(self.choice(*pair_index, conjunct_id));
            }
            EventBody::PairFinalized { choice } => {
                if *expect != Expect::PairFinalized(choice.clone()) {
                    return Err(format!("unexpected pair_finalized, expected {expect:?}"));
                }
                let pair = choice.pair_index;
                state.committed_choices.insert(pair, choice.clone());
                if let Some(tc) = state.pending_topic_comment.take() {
                    state.settled_topic_comments.insert(pair, tc);
                }
                state.dialog_path.clear();
                *expect = if pair < self.n() {
                    Expect::PairStarted(pair + 1)
                } else {
                    Expect::SessionFinalized
                };
            }
            EventBody::SessionFinalized { choices } => {
                if *expect != Expect::SessionFinalized {
                    return Err(format!("unexpected session_finalized, expected {expect:?}"));
                }
                if *choices as usize != state.committed_choices.len() {
                    return Err(format!("session finalized with {choices} choices"));
                }
                state.current_pair = CurrentPair::Done;
                *expect = Expect::Nothing;
            }
        }
        state.log.push(event.clone());
        Ok(())
    }
}

/// Length of the longest prefix of `log` that ends on an operation boundary.
/// Anything after it belongs to an operation whose follow-up events never
/// reached the log.
pub fn complete_prefix_len(log: &[SessionEvent]) -> usize {
    let mut owed = 0usize;
    let mut boundary = 0;
    for (i, event) in log.iter().enumerate() {
        owed = match &event.body {
            EventBody::SessionStarted { .. } => 1,
            EventBody::ConjunctSelected { .. } => 2,
            EventBody::PairStarted { .. }
            | EventBody::PairFinalized { .. }
            | EventBody::SessionFinalized { .. } => owed.saturating_sub(1),
            _ => 0,
        };
        if owed == 0 {
            boundary = i + 1;
        }
    }
    boundary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use crate::dialog::clock::ManualClock;

    fn doc(n: usize) -> TextDocument {
        TextDocument::new("doc", "en", (1..=n).map(|i| format!("Sentence {i}.")), None)
    }

    fn tc(pair: u32) -> TopicComment {
        TopicComment {
            pair_index: pair,
            topics: vec!["the system".into()],
            comments: vec!["was slow".into()],
            intra_pair_conjuncts: None,
        }
    }

    struct Fixture {
        doc: TextDocument,
        tree: DialogTree,
        inv: ConjunctInventory,
        clock: ManualClock,
    }

    impl Fixture {
        fn new(n: usize) -> Self {
            Fixture {
                doc: doc(n),
                tree: defaults::dialog_tree(),
                inv: defaults::inventory(),
                clock: ManualClock::with_step(0, 250),
            }
        }

        fn dialog(&self) -> Dialog<'_> {
            Dialog::new(&self.doc, &self.tree, &self.inv)
                .unwrap()
                .with_clock(&self.clock)
        }
    }

    #[test]
    fn start_nine_sentence_session() {
        let f = Fixture::new(9);
        let s = f.dialog().start_session("s1", "ev", SessionMode::Lazy).unwrap();
        assert_eq!(s.current_pair, CurrentPair::Pair(2));
        assert_eq!(s.dialog_path, vec!["root".to_string()]);
        assert_eq!(s.total_pairs() - 1, 7);
        let kinds: Vec<_> = s.log.iter().map(|e| e.body.kind()).collect();
        assert_eq!(kinds, ["session_started", "pair_started"]);
        assert!(!s.can_backtrack());
    }

    #[test]
    fn one_sentence_document_is_rejected() {
        let f = Fixture::new(1);
        assert!(matches!(
            Dialog::new(&f.doc, &f.tree, &f.inv),
            Err(DialogError::Document(DocumentError::TooShort { .. }))
        ));
    }

    #[test]
    fn invalid_tree_is_rejected() {
        let mut f = Fixture::new(3);
        f.tree.root = "missing".into();
        let err = Dialog::new(&f.doc, &f.tree, &f.inv).err().unwrap();
        assert_eq!(err.code(), "invalid-tree");
    }

    #[test]
    fn two_sentence_session_completes() {
        let f = Fixture::new(2);
        let d = f.dialog();
        let mut s = d.start_session("s1", "ev", SessionMode::Lazy).unwrap();
        d.choose_answer(&mut s, 2).unwrap();
        let events = d.select_conjunct(&mut s, "however").unwrap();
        let kinds: Vec<_> = events.iter().map(|e| e.body.kind()).collect();
        assert_eq!(kinds, ["conjunct_selected", "pair_finalized", "session_finalized"]);
        assert!(s.is_finalized());
        let p = s.profile().unwrap();
        assert_eq!(p.choices.len(), 1);
        assert_eq!(p.choices[0].category_id, "contrast");
        assert_eq!(d.replay(&s.log).unwrap(), s);
    }

    #[test]
    fn answer_errors() {
        let f = Fixture::new(3);
        let d = f.dialog();
        let mut s = d.start_session("s1", "ev", SessionMode::Lazy).unwrap();
        assert_eq!(
            d.choose_answer(&mut s, 7),
            Err(DialogError::IndexOutOfRange { index: 7, len: 6 })
        );
        d.choose_answer(&mut s, 3).unwrap();
        assert_eq!(s.dialog_path, vec!["root", "screen_follows"]);
        assert_eq!(
            d.choose_answer(&mut s, 0),
            Err(DialogError::NotAQuestion("screen_follows".into()))
        );
        assert_eq!(
            d.select_conjunct(&mut s, "however"),
            Err(DialogError::ConjunctNotOnScreen {
                conjunct: "however".into(),
                node: "screen_follows".into()
            })
        );
        d.backtrack(&mut s).unwrap();
        assert_eq!(
            d.select_conjunct(&mut s, "however"),
            Err(DialogError::NotAScreen("root".into()))
        );
    }

    #[test]
    fn full_mode_requires_topic_comment_first() {
        let f = Fixture::new(3);
        let d = f.dialog();
        let mut s = d.start_session("s1", "ev", SessionMode::Full).unwrap();
        assert_eq!(
            d.choose_answer(&mut s, 0),
            Err(DialogError::TopicCommentRequired(2))
        );
        assert_eq!(
            d.submit_topic_comment(&mut s, tc(3)),
            Err(DialogError::WrongPair { expected: 2, got: 3 })
        );
        let events = d.submit_topic_comment(&mut s, tc(2)).unwrap();
        assert_eq!(events[0].body.kind(), "topic_comment_submitted");
        d.choose_answer(&mut s, 0).unwrap();
        d.select_conjunct(&mut s, "moreover").unwrap();
        assert_eq!(
            d.submit_topic_comment(&mut s, tc(2)),
            Err(DialogError::PairAlreadyFinalized(2))
        );
        assert!(s.settled_topic_comments.contains_key(&2));
        assert!(s.pending_topic_comment.is_none());
    }

    #[test]
    fn lazy_mode_rejects_topic_comment() {
        let f = Fixture::new(3);
        let d = f.dialog();
        let mut s = d.start_session("s1", "ev", SessionMode::Lazy).unwrap();
        assert_eq!(d.submit_topic_comment(&mut s, tc(2)), Err(DialogError::WrongMode));
    }

    #[test]
    fn backtrack_within_and_across_pairs() {
        let f = Fixture::new(3);
        let d = f.dialog();
        let mut s = d.start_session("s1", "ev", SessionMode::Lazy).unwrap();
        assert_eq!(d.backtrack(&mut s), Err(DialogError::NothingToBacktrack));

        let before = s.clone();
        d.choose_answer(&mut s, 1).unwrap();
        d.backtrack(&mut s).unwrap();
        assert_eq!(s.dialog_path, before.dialog_path);
        assert_eq!(s.committed_choices, before.committed_choices);
        assert_eq!(s.log.len(), before.log.len() + 2);

        d.choose_answer(&mut s, 1).unwrap();
        d.select_conjunct(&mut s, "then").unwrap();
        assert_eq!(s.current_pair, CurrentPair::Pair(3));
        d.backtrack(&mut s).unwrap();
        assert_eq!(s.current_pair, CurrentPair::Pair(2));
        assert_eq!(s.dialog_path, vec!["root"]);
        assert!(s.committed_choices.is_empty());
        assert!(s.log.iter().any(|e| matches!(
            &e.body,
            EventBody::PairFinalized { choice } if choice.conjunct_id == "then"
        )));

        // A fresh session fed only the surviving decisions lands in the same place.
        let mut fresh = d.start_session("s1", "ev", SessionMode::Lazy).unwrap();
        assert_eq!(fresh.current_pair, s.current_pair);
        assert_eq!(fresh.dialog_path, s.dialog_path);
        assert_eq!(fresh.committed_choices, s.committed_choices);
        d.choose_answer(&mut fresh, 0).unwrap();
        assert_eq!(d.replay(&s.log).unwrap(), s);
    }

    #[test]
    fn backtrack_reopens_finished_session() {
        let f = Fixture::new(2);
        let d = f.dialog();
        let mut s = d.start_session("s1", "ev", SessionMode::Full).unwrap();
        d.submit_topic_comment(&mut s, tc(2)).unwrap();
        d.choose_answer(&mut s, 5).unwrap();
        d.select_conjunct(&mut s, "overall").unwrap();
        assert!(s.is_finalized());
        assert!(s.can_backtrack());
        d.backtrack(&mut s).unwrap();
        assert_eq!(s.current_pair, CurrentPair::Pair(2));
        assert_eq!(s.pending_topic_comment, Some(tc(2)));
        assert!(s.profile().is_none());
        d.choose_answer(&mut s, 5).unwrap();
        d.select_conjunct(&mut s, "in_short").unwrap();
        assert_eq!(s.profile().unwrap().choices[0].conjunct_id, "in_short");
        assert_eq!(d.replay(&s.log).unwrap(), s);
    }

    #[test]
    fn select_advances_to_next_pair() {
        let f = Fixture::new(9);
        let d = f.dialog();
        let mut s = d.start_session("s1", "ev", SessionMode::Lazy).unwrap();
        for _ in 2..=5 {
            d.choose_answer(&mut s, 0).unwrap();
            d.select_conjunct(&mut s, "also").unwrap();
        }
        assert_eq!(s.current_pair, CurrentPair::Pair(6));
        assert_eq!(s.dialog_path, vec!["root"]);
        assert_eq!(s.committed_choices.len(), 4);
    }

    #[test]
    fn replay_rejects_gaps_and_illegal_events() {
        let f = Fixture::new(2);
        let d = f.dialog();
        let mut s = d.start_session("s1", "ev", SessionMode::Lazy).unwrap();
        d.choose_answer(&mut s, 0).unwrap();
        d.select_conjunct(&mut s, "also").unwrap();

        let mut gap = s.log.clone();
        gap.remove(2);
        assert!(matches!(
            d.replay(&gap),
            Err(DialogError::CorruptLog { seq: 4, .. })
        ));

        let mut illegal = s.log.clone();
        if let EventBody::ConjunctSelected { conjunct_id, .. } = &mut illegal[3].body {
            *conjunct_id = "however".into();
        }
        assert!(matches!(
            d.replay(&illegal),
            Err(DialogError::CorruptLog { seq: 4, .. })
        ));

        let cut = &s.log[..s.log.len() - 1];
        assert_eq!(
            d.replay(cut),
            Err(DialogError::IncompleteOperation { after_seq: 3 })
        );
        assert_eq!(complete_prefix_len(cut), 3);
        assert_eq!(complete_prefix_len(&s.log), s.log.len());
        assert_eq!(complete_prefix_len(&s.log[..1]), 0);
    }

    #[test]
    fn replay_rejects_backwards_time() {
        let f = Fixture::new(2);
        let d = f.dialog();
        let mut s = d.start_session("s1", "ev", SessionMode::Lazy).unwrap();
        d.choose_answer(&mut s, 0).unwrap();
        let mut log = s.log.clone();
        log[2].timestamp_ms = 0;
        log[1].timestamp_ms = 10;
        assert!(matches!(d.replay(&log), Err(DialogError::CorruptLog { seq: 3, .. })));
    }

    #[test]
    fn timestamps_never_decrease() {
        let f = Fixture::new(3);
        f.clock.set(10_000);
        let d = f.dialog();
        let mut s = d.start_session("s1", "ev", SessionMode::Lazy).unwrap();
        f.clock.set(5_000);
        d.choose_answer(&mut s, 0).unwrap();
        assert!(s.log.windows(2).all(|w| w[0].timestamp_ms <= w[1].timestamp_ms));
    }
}
