use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::service::{
    AnswerRequest, BacktrackRequest, ConjunctRequest, CreateSessionRequest, TopicCommentRequest,
};

/// A mutating API call as it would go over the wire, one JSON line each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedRequest {
    pub method: String,
    pub path: String,
    pub body: Value,
}

impl RecordedRequest {
    fn post(path: String, body: &impl Serialize) -> Self {
        RecordedRequest {
            method: "POST".into(),
            path,
            body: serde_json::to_value(body).expect("request bodies serialize"),
        }
    }

    pub fn create_session(req: &CreateSessionRequest) -> Self {
        Self::post("/sessions".into(), req)
    }

    pub fn answer(session_id: &str, req: &AnswerRequest) -> Self {
        Self::post(format!("/sessions/{session_id}/answer"), req)
    }

    pub fn conjunct(session_id: &str, req: &ConjunctRequest) -> Self {
        Self::post(format!("/sessions/{session_id}/conjunct"), req)
    }

    pub fn topic_comment(session_id: &str, req: &TopicCommentRequest) -> Self {
        Self::post(format!("/sessions/{session_id}/topic-comment"), req)
    }

    pub fn backtrack(session_id: &str, req: &BacktrackRequest) -> Self {
        Self::post(format!("/sessions/{session_id}/backtrack"), req)
    }
}
