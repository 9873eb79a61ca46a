use connprof_core::dialog::{metrics_from_log, EventBody, SessionMetrics};
use connprof_core::stats::{
    mode_agreement, pooled_report, Aggregation, ProfileGroup, Report, SpreadResult, StatsError,
};
use connprof_core::store::{ArtifactKind, Project, StoreError};
use connprof_core::{defaults, ConjunctInventory, ConnectivityProfile, Granularity, TextDocument};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairView {
    pub pair_index: u32,
    pub mu2: f64,
    pub mean_rank: f64,
    pub n_evaluators: usize,
    /// Most chosen label at the requested granularity.
    pub mode: String,
}

/// One report column: a single text or several aligned texts pooled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportView {
    pub label: String,
    pub document_ids: Vec<String>,
    pub n_profiles: usize,
    pub granularity: Granularity,
    pub aggregation: Aggregation,
    pub mean: f64,
    pub mean_cat: f64,
    pub mean_con: f64,
    pub n_sessions: usize,
    pub mean_time_ms: Option<f64>,
    pub mean_backtracks: Option<f64>,
    pub per_pair: Vec<PairView>,
}

impl ReportView {
    pub fn new(report: &Report<f64>, granularity: Granularity) -> Self {
        ReportView {
            label: report.label(),
            document_ids: report.document_ids.clone(),
            n_profiles: report.n_profiles,
            granularity,
            aggregation: report.aggregation,
            mean: report.mean(granularity),
            mean_cat: report.mean_cat,
            mean_con: report.mean_con,
            n_sessions: report.n_sessions,
            mean_time_ms: report.mean_time_ms,
            mean_backtracks: report.mean_backtracks,
            per_pair: report
                .per_pair
                .iter()
                .map(|row| {
                    let (s, mode): (&SpreadResult<f64>, &str) = match granularity {
                        Granularity::Category => (&row.category, &row.mode_category),
                        Granularity::Conjunct => (&row.conjunct, &row.mode_conjunct),
                    };
                    PairView {
                        pair_index: row.pair_index,
                        mu2: s.mu2,
                        mean_rank: s.mean_rank,
                        n_evaluators: s.n_evaluators,
                        mode: mode.to_owned(),
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonView {
    pub granularity: Granularity,
    pub agreement: f64,
    pub pairs_agreeing: usize,
    pub pairs: Vec<connprof_core::stats::PairModes>,
    pub pooled: ReportView,
}

/// Everything stored for one document's evaluations.
pub struct DocumentGroup {
    pub document: TextDocument,
    pub profiles: Vec<ConnectivityProfile>,
    pub metrics: Vec<SessionMetrics>,
    pub inventory_id: Option<String>,
}

impl DocumentGroup {
    pub fn load(project: &Project, document_id: &str) -> Result<Self, ServiceError> {
        let document = project.document(document_id).map_err(|e| match e {
            StoreError::NotFound { kind, id } => ServiceError::UnknownArtifact { kind, id },
            other => other.into(),
        })?;
        let mut profiles = Vec::new();
        let mut metrics = Vec::new();
        let mut inventory_id = None;
        for (session_id, profile) in project.profiles_for(document_id)? {
            profiles.push(profile);
            if !project.contains(ArtifactKind::Session, &session_id) {
                continue;
            }
            let log = project.read_log(&session_id)?;
            if let Some(EventBody::SessionStarted { inventory_id: inv, .. }) = log.first().map(|e| &e.body) {
                inventory_id.get_or_insert_with(|| inv.clone());
            }
            metrics.push(metrics_from_log(&log));
        }
        if profiles.is_empty() {
            return Err(StatsError::NoProfiles.into());
        }
        Ok(DocumentGroup {
            document,
            profiles,
            metrics,
            inventory_id,
        })
    }

    pub fn as_group(&self) -> ProfileGroup<'_> {
        ProfileGroup::new(&self.document, &self.profiles).with_metrics(&self.metrics)
    }
}

/// The inventory the sessions used, else the project's only inventory, else the built-in one.
fn inventory_for(project: &Project, groups: &[DocumentGroup]) -> Result<ConjunctInventory, ServiceError> {
    if let Some(id) = groups.iter().find_map(|g| g.inventory_id.as_deref()) {
        return Ok(project.inventory(id)?);
    }
    match project.ids(ArtifactKind::Inventory).as_slice() {
        [only] => Ok(project.inventory(only)?),
        [] => Ok(defaults::inventory()),
        many => Err(ServiceError::InvalidConfig(format!(
            "profiles carry no session log and the project holds {} inventories",
            many.len()
        ))),
    }
}

/// Documents that have at least one stored profile, in id order.
pub fn documents_with_profiles(project: &Project) -> Result<Vec<String>, ServiceError> {
    let mut ids = Vec::new();
    for doc in project.ids(ArtifactKind::Document) {
        if !project.profiles_for(&doc)?.is_empty() {
            ids.push(doc);
        }
    }
    Ok(ids)
}

/// One report per document, or a single pooled report when `pooled` is set.
/// An empty `docs` selects every document with profiles.
pub fn build_reports(
    project: &Project,
    docs: &[String],
    granularity: Granularity,
    pooled: bool,
    aggregation: Aggregation,
) -> Result<Vec<ReportView>, ServiceError> {
    let docs = if docs.is_empty() {
        documents_with_profiles(project)?
    } else {
        docs.to_vec()
    };
    if docs.is_empty() {
        return Ok(Vec::new());
    }
    let groups = docs
        .iter()
        .map(|d| DocumentGroup::load(project, d))
        .collect::<Result<Vec<_>, _>>()?;
    let inv = inventory_for(project, &groups)?;
    let views = if pooled {
        let pg: Vec<_> = groups.iter().map(DocumentGroup::as_group).collect();
        vec![ReportView::new(&pooled_report(&pg, &inv, aggregation)?, granularity)]
    } else {
        groups
            .iter()
            .map(|g| {
                let r = pooled_report(&[g.as_group()], &inv, aggregation)?;
                Ok(ReportView::new(&r, granularity))
            })
            .collect::<Result<Vec<_>, ServiceError>>()?
    };
    Ok(views)
}

/// Mode agreement between the evaluator groups of two aligned documents.
pub fn compare_groups(
    project: &Project,
    group_a: &str,
    group_b: &str,
    granularity: Granularity,
    aggregation: Aggregation,
) -> Result<ComparisonView, ServiceError> {
    let groups = [
        DocumentGroup::load(project, group_a)?,
        DocumentGroup::load(project, group_b)?,
    ];
    let inv = inventory_for(project, &groups)?;
    let (a, b) = (groups[0].as_group(), groups[1].as_group());
    let agreement = mode_agreement::<f64>(&a, &b, granularity, &inv)?;
    let pooled = pooled_report(&[a, b], &inv, aggregation)?;
    Ok(ComparisonView {
        granularity,
        agreement: agreement.fraction,
        pairs_agreeing: agreement.pairs.iter().filter(|p| p.agree).count(),
        pairs: agreement.pairs,
        pooled: ReportView::new(&pooled, granularity),
    })
}
