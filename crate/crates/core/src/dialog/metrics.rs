use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::event::{EventBody, SessionEvent, Undone};
use super::session::SessionState;

/// Timing and backtracking figures for one session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMetrics {
    /// First to last event.
    pub elapsed_ms: u64,
    /// Time each pair was open, summed over reopenings.
    pub per_pair_ms: BTreeMap<u32, u64>,
    pub backtrack_count: u32,
    pub finalized: bool,
}

pub fn session_metrics(state: &SessionState) -> SessionMetrics {
    metrics_from_log(&state.log)
}

pub fn metrics_from_log(log: &[SessionEvent]) -> SessionMetrics {
    let elapsed_ms = match (log.first(), log.last()) {
        (Some(a), Some(b)) => b.timestamp_ms.saturating_sub(a.timestamp_ms),
        _ => 0,
    };
    let mut per_pair_ms = BTreeMap::new();
    let mut backtrack_count = 0;
    let mut finalized = false;
    let mut open: Option<(u32, u64)> = None;

    let mut close = |open: &mut Option<(u32, u64)>, at: u64| {
        if let Some((pair, since)) = open.take() {
            *per_pair_ms.entry(pair).or_insert(0) += at.saturating_sub(since);
        }
    };
    for e in log {
        match &e.body {
            EventBody::PairStarted { pair_index } => {
                close(&mut open, e.timestamp_ms);
                open = Some((*pair_index, e.timestamp_ms));
                finalized = false;
            }
            EventBody::PairFinalized { .. } => close(&mut open, e.timestamp_ms),
            EventBody::Backtracked { undone, .. } => {
                backtrack_count += 1;
                if let Undone::Pair { reopened_pair, .. } = undone {
                    close(&mut open, e.timestamp_ms);
                    open = Some((*reopened_pair, e.timestamp_ms));
                    finalized = false;
                }
            }
            EventBody::SessionFinalized { .. } => finalized = true,
            _ => {}
        }
    }
    if let Some(last) = log.last() {
        close(&mut open, last.timestamp_ms);
    }
    SessionMetrics {
        elapsed_ms,
        per_pair_ms,
        backtrack_count,
        finalized,
    }
}

/// `m:ss` rendering used in report tables.
pub fn format_minutes_seconds(ms: f64) -> String {
    let total = (ms / 1000.0).round() as u64;
    format!("{}:{:02}", total / 60, total % 60)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use crate::dialog::{Dialog, ManualClock, SessionMode};
    use crate::document::TextDocument;

    #[test]
    fn elapsed_matches_first_to_last() {
        let doc = TextDocument::new("d", "en", ["A.", "B."], None);
        let (tree, inv) = (defaults::dialog_tree(), defaults::inventory());
        let clock = ManualClock::new(0);
        let d = Dialog::new(&doc, &tree, &inv).unwrap().with_clock(&clock);
        let mut s = d.start_session("s", "e", SessionMode::Lazy).unwrap();
        assert_eq!(session_metrics(&s).backtrack_count, 0);
        clock.set(807_000);
        d.choose_answer(&mut s, 0).unwrap();
        let m = session_metrics(&s);
        assert_eq!(m.elapsed_ms, 807_000);
        assert_eq!(format_minutes_seconds(m.elapsed_ms as f64), "13:27");
        assert!(!m.finalized);
    }

    #[test]
    fn counts_backtracks_and_pair_time() {
        let doc = TextDocument::new("d", "en", ["A.", "B.", "C."], None);
        let (tree, inv) = (defaults::dialog_tree(), defaults::inventory());
        let clock = ManualClock::with_step(0, 1000);
        let d = Dialog::new(&doc, &tree, &inv).unwrap().with_clock(&clock);
        let mut s = d.start_session("s", "e", SessionMode::Lazy).unwrap(); // t=0
        d.choose_answer(&mut s, 0).unwrap(); // 1000
        d.backtrack(&mut s).unwrap(); // 2000
        d.choose_answer(&mut s, 0).unwrap(); // 3000
        d.select_conjunct(&mut s, "also").unwrap(); // 4000, pair 3 opens
        d.backtrack(&mut s).unwrap(); // 5000, pair 2 reopened
        d.choose_answer(&mut s, 0).unwrap(); // 6000
        d.backtrack(&mut s).unwrap(); // 7000
        let m = session_metrics(&s);
        assert_eq!(m.backtrack_count, 3);
        assert_eq!(m.elapsed_ms, 7000);
        assert_eq!(m.per_pair_ms[&2], 4000 + 2000);
        assert_eq!(m.per_pair_ms[&3], 1000);
    }
}
