use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use connprof_core::dialog::{
    Clock, Dialog, DialogError, DialogTree, EventBody, SessionEvent, SessionMode, SessionState,
    SystemClock,
};
use connprof_core::store::{ArtifactKind, Project, StoreError};
use connprof_core::{ConjunctInventory, ConnectivityProfile, TextDocument, TopicComment};
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex as AsyncMutex, OwnedMutexGuard};

use crate::error::ServiceError;
use crate::view::ScreenView;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    pub document_id: String,
    pub dialog_tree_id: String,
    pub evaluator_id: String,
    #[serde(default = "lazy")]
    pub mode: SessionMode,
    /// Generated from the project contents when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
}

fn lazy() -> SessionMode {
    SessionMode::Lazy
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub answer_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_token: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjunctRequest {
    pub conjunct_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_token: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TopicCommentRequest {
    /// Defaults to the current pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_index: Option<u32>,
    pub topics: Vec<String>,
    pub comments: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intra_pair_conjuncts: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_token: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BacktrackRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_token: Option<u64>,
}

struct LiveSession {
    state: SessionState,
    document: TextDocument,
    tree: DialogTree,
    inventory: ConjunctInventory,
}

impl LiveSession {
    fn view(&self) -> ScreenView {
        ScreenView::build(&self.state, &self.document, &self.tree, &self.inventory)
    }
}

type Slot = Arc<AsyncMutex<Option<LiveSession>>>;

/// Session workflow over a project. Mutating requests for one session run
/// strictly one at a time, in arrival order.
pub struct EvalService {
    project: Arc<Project>,
    clock: Arc<dyn Clock>,
    sessions: Mutex<HashMap<String, Slot>>,
}

impl EvalService {
    pub fn new(project: Arc<Project>) -> Self {
        Self::with_clock(project, Arc::new(SystemClock))
    }

    pub fn with_clock(project: Arc<Project>, clock: Arc<dyn Clock>) -> Self {
        EvalService {
            project,
            clock,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn project(&self) -> &Arc<Project> {
        &self.project
    }

    fn slot(&self, session_id: &str) -> Slot {
        let mut map = self.sessions.lock().unwrap_or_else(|p| p.into_inner());
        Arc::clone(map.entry(session_id.to_owned()).or_default())
    }

    fn next_session_id(&self, evaluator_id: &str, document_id: &str) -> String {
        let taken = self.project.ids(ArtifactKind::Session);
        (1..)
            .map(|n| format!("{document_id}-{evaluator_id}-{n}"))
            .find(|id| !taken.contains(id))
            .expect("unbounded range")
    }

    fn artifacts(
        &self,
        document_id: &str,
        dialog_tree_id: &str,
    ) -> Result<(TextDocument, DialogTree, ConjunctInventory), ServiceError> {
        let document = self.project.document(document_id).map_err(unknown)?;
        let tree = self.project.dialog_tree(dialog_tree_id).map_err(unknown)?;
        let inventory = self.project.inventory(&tree.inventory_id).map_err(unknown)?;
        Ok((document, tree, inventory))
    }

    pub async fn create_session(&self, req: CreateSessionRequest) -> Result<ScreenView, ServiceError> {
        let (document, tree, inventory) = self.artifacts(&req.document_id, &req.dialog_tree_id)?;
        let session_id = req
            .session_id
            .clone()
            .unwrap_or_else(|| self.next_session_id(&req.evaluator_id, &req.document_id));
        let mut guard = self.slot(&session_id).lock_owned().await;
        if guard.is_some() || self.project.contains(ArtifactKind::Session, &session_id) {
            return Err(StoreError::DuplicateId {
                kind: ArtifactKind::Session,
                id: session_id,
            }
            .into());
        }
        let dialog = Dialog::new(&document, &tree, &inventory)
            .map_err(|e| ServiceError::InvalidConfig(e.to_string()))?
            .with_clock(&*self.clock);
        let state = dialog.start_session(&session_id, &req.evaluator_id, req.mode)?;
        self.project.append_events(&session_id, &state.log)?;
        let live = LiveSession {
            state,
            document,
            tree,
            inventory,
        };
        let view = live.view();
        *guard = Some(live);
        Ok(view)
    }

    /// Locks a session, loading it from its log if this process has not seen it yet.
    async fn live(&self, session_id: &str) -> Result<OwnedMutexGuard<Option<LiveSession>>, ServiceError> {
        let mut guard = self.slot(session_id).lock_owned().await;
        if guard.is_none() {
            *guard = Some(self.load(session_id)?);
        }
        Ok(guard)
    }

    fn load(&self, session_id: &str) -> Result<LiveSession, ServiceError> {
        if !self.project.contains(ArtifactKind::Session, session_id) {
            return Err(ServiceError::SessionNotFound(session_id.to_owned()));
        }
        let log = self.project.read_log(session_id)?;
        let Some(EventBody::SessionStarted {
            document_id,
            dialog_tree_id,
            ..
        }) = log.first().map(|e| &e.body)
        else {
            return Err(DialogError::CorruptLog {
                seq: 1,
                reason: "log does not open with session_started".into(),
            }
            .into());
        };
        let (document, tree, inventory) = self.artifacts(document_id, dialog_tree_id)?;
        let state = Dialog::new(&document, &tree, &inventory)?.replay(&log)?;
        if let Some(profile) = state.profile() {
            if self.project.profile(session_id).ok().as_ref() != Some(&profile) {
                self.project.save_profile(session_id, &profile)?;
            }
        }
        Ok(LiveSession {
            state,
            document,
            tree,
            inventory,
        })
    }

    pub async fn screen(&self, session_id: &str) -> Result<ScreenView, ServiceError> {
        let guard = self.live(session_id).await?;
        Ok(guard.as_ref().expect("loaded").view())
    }

    pub async fn state(&self, session_id: &str) -> Result<SessionState, ServiceError> {
        let guard = self.live(session_id).await?;
        Ok(guard.as_ref().expect("loaded").state.clone())
    }

    pub async fn profile(&self, session_id: &str) -> Result<ConnectivityProfile, ServiceError> {
        let guard = self.live(session_id).await?;
        guard
            .as_ref()
            .expect("loaded")
            .state
            .profile()
            .ok_or_else(|| ServiceError::SessionInProgress(session_id.to_owned()))
    }

    async fn mutate<F>(
        &self,
        session_id: &str,
        stage_token: Option<u64>,
        op: F,
    ) -> Result<ScreenView, ServiceError>
    where
        F: FnOnce(&Dialog<'_>, &mut SessionState) -> Result<Vec<SessionEvent>, DialogError>,
    {
        let mut guard = self.live(session_id).await?;
        let live = guard.as_mut().expect("loaded");
        let current = live.state.last_seq();
        if let Some(got) = stage_token {
            if got != current {
                return Err(ServiceError::StaleRequest { got, current });
            }
        }
        let was_finalized = live.state.is_finalized();
        let dialog = Dialog::new(&live.document, &live.tree, &live.inventory)?.with_clock(&*self.clock);
        let events = op(&dialog, &mut live.state)?;
        if let Err(e) = self.project.append_events(session_id, &events) {
            let keep = live.state.log.len() - events.len();
            live.state = dialog.replay(&live.state.log[..keep])?;
            return Err(e.into());
        }
        match live.state.profile() {
            Some(profile) => self.project.save_profile(session_id, &profile)?,
            None if was_finalized => self.project.remove_profile(session_id)?,
            None => {}
        }
        Ok(live.view())
    }

    pub async fn post_answer(&self, session_id: &str, req: AnswerRequest) -> Result<ScreenView, ServiceError> {
        self.mutate(session_id, req.stage_token, |d, s| d.choose_answer(s, req.answer_index))
            .await
    }

    pub async fn post_conjunct(
        &self,
        session_id: &str,
        req: ConjunctRequest,
    ) -> Result<ScreenView, ServiceError> {
        self.mutate(session_id, req.stage_token, |d, s| d.select_conjunct(s, &req.conjunct_id))
            .await
    }

    pub async fn post_topic_comment(
        &self,
        session_id: &str,
        req: TopicCommentRequest,
    ) -> Result<ScreenView, ServiceError> {
        self.mutate(session_id, req.stage_token, |d, s| {
            let tc = TopicComment {
                pair_index: req
                    .pair_index
                    .or(s.current_pair_index())
                    .ok_or(DialogError::SessionFinalized)?,
                topics: req.topics,
                comments: req.comments,
                intra_pair_conjuncts: req.intra_pair_conjuncts,
            };
            d.submit_topic_comment(s, tc)
        })
        .await
    }

    pub async fn post_backtrack(
        &self,
        session_id: &str,
        req: BacktrackRequest,
    ) -> Result<ScreenView, ServiceError> {
        self.mutate(session_id, req.stage_token, |d, s| d.backtrack(s)).await
    }
}

fn unknown(e: StoreError) -> ServiceError {
    match e {
        StoreError::NotFound { kind, id } => ServiceError::UnknownArtifact { kind, id },
        other => other.into(),
    }
}
