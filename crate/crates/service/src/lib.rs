//! HTTP/JSON API over connectivity-profile sessions and reports.
//!
//! [`EvalService`] owns the session workflow and can be driven in-process;
//! [`http::router`] exposes it over HTTP.

pub mod error;
pub mod http;
pub mod record;
pub mod reports;
pub mod service;
pub mod view;

pub use error::{ErrorBody, ServiceError};
pub use record::RecordedRequest;
pub use reports::{build_reports, compare_groups, ComparisonView, PairView, ReportView};
pub use service::{
    AnswerRequest, BacktrackRequest, ConjunctRequest, CreateSessionRequest, EvalService,
    TopicCommentRequest,
};
pub use view::{AnswerView, ConjunctView, ProfileEntry, Progress, ScreenView, Stage};
