//! Guided conjunct dialog: question/answer graphs, the per-pair session state
//! machine with backtracking, and its append-only event log.

mod clock;
mod event;
mod metrics;
mod session;
mod tree;

pub use clock::{Clock, ManualClock, SystemClock};
pub use event::{EventBody, SessionEvent, SessionMode, Undone};
pub use metrics::{format_minutes_seconds, metrics_from_log, session_metrics, SessionMetrics};
pub use session::{complete_prefix_len, CurrentPair, Dialog, DialogError, SessionState};
pub use tree::{
    validate_tree, Answer, DialogNode, DialogTree, TreeViolation, MAX_ANSWERS,
    MAX_SCREEN_CONJUNCTS, MIN_ANSWERS,
};
