use std::collections::BTreeMap;

use connprof_core::dialog::{DialogNode, DialogTree, SessionMode, SessionState};
use connprof_core::{ConjunctInventory, TextDocument};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    TopicComment,
    Question,
    ConjunctScreen,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerView {
    pub index: usize,
    pub label: String,
}

/// A conjunct button. Category membership is deliberately absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjunctView {
    pub conjunct_id: String,
    /// Surface form in the document's language.
    pub surface: String,
    pub surface_forms: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub pair_index: u32,
    pub conjunct_id: String,
    pub surface: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub completed: u32,
    pub total: u32,
}

/// What the evaluator sees next. Only the fields of the current stage are set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenView {
    pub session_id: String,
    /// Echo this in the next mutating request.
    pub stage_token: u64,
    pub stage: Stage,
    pub mode: SessionMode,
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_index: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_prev: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_curr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answers: Option<Vec<AnswerView>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjuncts: Option<Vec<ConjunctView>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<ProfileEntry>>,
    pub can_backtrack: bool,
    pub progress: Progress,
}

impl ScreenView {
    pub fn build(
        state: &SessionState,
        doc: &TextDocument,
        tree: &DialogTree,
        inv: &ConjunctInventory,
    ) -> Self {
        let lang = doc.language.as_str();
        let mut view = ScreenView {
            session_id: state.session_id.clone(),
            stage_token: state.last_seq(),
            stage: Stage::Done,
            mode: state.mode,
            language: doc.language.clone(),
            pair_index: None,
            sentence_prev: None,
            sentence_curr: None,
            prompt: None,
            answers: None,
            conjuncts: None,
            profile: None,
            can_backtrack: state.can_backtrack(),
            progress: Progress {
                completed: state.committed_choices.len() as u32,
                total: state.total_pairs(),
            },
        };

        let Some(pair) = state.current_pair_index() else {
            view.profile = Some(
                state
                    .committed_choices
                    .values()
                    .map(|c| ProfileEntry {
                        pair_index: c.pair_index,
                        conjunct_id: c.conjunct_id.clone(),
                        surface: surface(inv, &c.conjunct_id, lang),
                    })
                    .collect(),
            );
            return view;
        };
        view.pair_index = Some(pair);
        view.sentence_prev = doc.sentence(pair - 1).map(|s| s.surface.clone());
        view.sentence_curr = doc.sentence(pair).map(|s| s.surface.clone());

        let needs_tc = state.mode == SessionMode::Full && state.pending_topic_comment.is_none();
        match state.current_node_id().and_then(|id| tree.node(id)) {
            _ if needs_tc => view.stage = Stage::TopicComment,
            Some(DialogNode::Question { prompt, answers }) => {
                view.stage = Stage::Question;
                view.prompt = Some(prompt.clone());
                view.answers = Some(
                    answers
                        .iter()
                        .enumerate()
                        .map(|(index, a)| AnswerView {
                            index,
                            label: a.label.clone(),
                        })
                        .collect(),
                );
            }
            Some(DialogNode::ConjunctScreen { conjuncts }) => {
                view.stage = Stage::ConjunctScreen;
                view.conjuncts = Some(
                    conjuncts
                        .iter()
                        .map(|id| ConjunctView {
                            conjunct_id: id.clone(),
                            surface: surface(inv, id, lang),
                            surface_forms: inv
                                .conjunct(id)
                                .map(|c| c.surface_forms.clone())
                                .unwrap_or_default(),
                        })
                        .collect(),
                );
            }
            None => {}
        }
        view
    }
}

fn surface(inv: &ConjunctInventory, id: &str, lang: &str) -> String {
    inv.conjunct(id)
        .map_or(id, |c| c.surface(lang))
        .to_owned()
}
