use serde::{Deserialize, Serialize};

use super::rank::{rank_transform, spread, ChoiceDistribution, SpreadResult};
use super::scalar::{mean, Scalar};
use super::StatsError;
use crate::dialog::SessionMetrics;
use crate::document::{check_alignment, TextDocument};
use crate::inventory::{ConjunctInventory, Granularity};
use crate::profile::ConnectivityProfile;

/// Profiles (and optionally their sessions' metrics) collected for one document.
#[derive(Debug, Clone, Copy)]
pub struct ProfileGroup<'a> {
    pub document: &'a TextDocument,
    pub profiles: &'a [ConnectivityProfile],
    pub metrics: &'a [SessionMetrics],
}

impl<'a> ProfileGroup<'a> {
    pub fn new(document: &'a TextDocument, profiles: &'a [ConnectivityProfile]) -> Self {
        ProfileGroup {
            document,
            profiles,
            metrics: &[],
        }
    }

    pub fn with_metrics(mut self, metrics: &'a [SessionMetrics]) -> Self {
        self.metrics = metrics;
        self
    }

    /// Every profile belongs to this document and covers all of its pairs.
    pub(crate) fn check(&self) -> Result<(), StatsError> {
        let expected = self.document.len().saturating_sub(1);
        for p in self.profiles {
            if p.document_id != self.document.id {
                return Err(StatsError::MixedDocuments {
                    expected: self.document.id.clone(),
                    found: p.document_id.clone(),
                });
            }
            if p.len() != expected {
                return Err(StatsError::LengthMismatch {
                    left: expected,
                    right: p.len(),
                });
            }
        }
        Ok(())
    }
}

/// How one number per text is derived from the per-pair distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Unweighted mean of the per-pair spreads.
    #[default]
    PairMean,
    /// Spread of a single distribution holding every choice of every pair.
    AllChoices,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pair_mean" | "pair-mean" => Ok(Aggregation::PairMean),
            "all_choices" | "all-choices" => Ok(Aggregation::AllChoices),
            other => Err(format!("unknown aggregation '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow<T> {
    pub pair_index: u32,
    pub category: SpreadResult<T>,
    pub conjunct: SpreadResult<T>,
    pub mode_category: String,
    pub mode_conjunct: String,
}

/// Agreement figures for one text or for several aligned texts pooled together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub document_ids: Vec<String>,
    pub n_profiles: usize,
    pub aggregation: Aggregation,
    pub per_pair: Vec<PairRow<T>>,
    pub mean_cat: T,
    pub mean_con: T,
    pub n_sessions: usize,
    pub mean_time_ms: Option<f64>,
    pub mean_backtracks: Option<f64>,
}

impl<T: Copy> Report<T> {
    pub fn mean(&self, granularity: Granularity) -> T {
        match granularity {
            Granularity::Category => self.mean_cat,
            Granularity::Conjunct => self.mean_con,
        }
    }

    /// Column heading in the style `A (14)` or `A+C+D`.
    pub fn label(&self) -> String {
        if self.document_ids.len() == 1 {
            format!("{} ({})", self.document_ids[0], self.n_profiles)
        } else {
            self.document_ids.join("+")
        }
    }
}

fn distribution(
    profiles: &[ConnectivityProfile],
    pair_index: u32,
    granularity: Granularity,
) -> Result<ChoiceDistribution, StatsError> {
    if profiles.is_empty() {
        return Err(StatsError::NoProfiles);
    }
    let labels = profiles
        .iter()
        .map(|p| {
            p.choice(pair_index)
                .map(|c| c.label(granularity))
                .ok_or_else(|| StatsError::PairOutOfRange {
                    pair_index,
                    document_id: p.document_id.clone(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    ChoiceDistribution::from_labels(pair_index, granularity, labels)
}

/// Spread of the evaluators' choices at one pair.
pub fn pair_spread<T: Scalar>(
    profiles: &[ConnectivityProfile],
    pair_index: u32,
    granularity: Granularity,
    inv: &ConjunctInventory,
) -> Result<SpreadResult<T>, StatsError> {
    let dist = distribution(profiles, pair_index, granularity)?;
    spread(&rank_transform(&dist, &inv.label_order(granularity)))
}

/// Most chosen label at one pair; equal counts go to the label declared first.
pub fn mode_connector(
    profiles: &[ConnectivityProfile],
    pair_index: u32,
    granularity: Granularity,
    inv: &ConjunctInventory,
) -> Result<String, StatsError> {
    let dist = distribution(profiles, pair_index, granularity)?;
    let ranked = rank_transform(&dist, &inv.label_order(granularity));
    Ok(ranked.ranking[0].label.clone())
}

/// Report for the profiles of a single document.
pub fn text_report<T: Scalar>(
    profiles: &[ConnectivityProfile],
    metrics: &[SessionMetrics],
    inv: &ConjunctInventory,
    aggregation: Aggregation,
) -> Result<Report<T>, StatsError> {
    let first = profiles.first().ok_or(StatsError::NoProfiles)?;
    for p in profiles {
        if p.document_id != first.document_id {
            return Err(StatsError::MixedDocuments {
                expected: first.document_id.clone(),
                found: p.document_id.clone(),
            });
        }
        if p.len() != first.len() {
            return Err(StatsError::LengthMismatch {
                left: first.len(),
                right: p.len(),
            });
        }
    }
    build_report(
        vec![first.document_id.clone()],
        profiles,
        metrics,
        first.len(),
        inv,
        aggregation,
    )
}

/// Pools, pair by pair, the choices of every evaluator across aligned texts.
/// A single group yields exactly its [`text_report`].
pub fn pooled_report<T: Scalar>(
    groups: &[ProfileGroup<'_>],
    inv: &ConjunctInventory,
    aggregation: Aggregation,
) -> Result<Report<T>, StatsError> {
    if groups.is_empty() {
        return Err(StatsError::NoProfiles);
    }
    for g in groups {
        if g.profiles.is_empty() {
            return Err(StatsError::NoProfiles);
        }
        g.check()?;
    }
    check_groups_aligned(groups)?;

    let profiles: Vec<ConnectivityProfile> = groups
        .iter()
        .flat_map(|g| g.profiles.iter().cloned())
        .collect();
    let metrics: Vec<SessionMetrics> = groups
        .iter()
        .flat_map(|g| g.metrics.iter().cloned())
        .collect();
    build_report(
        groups.iter().map(|g| g.document.id.clone()).collect(),
        &profiles,
        &metrics,
        groups[0].document.len() - 1,
        inv,
        aggregation,
    )
}

pub(crate) fn check_groups_aligned(groups: &[ProfileGroup<'_>]) -> Result<(), StatsError> {
    let mut misaligned = Vec::new();
    for (i, a) in groups.iter().enumerate() {
        for b in &groups[i + 1..] {
            if a.document.id == b.document.id && a.document == b.document {
                continue;
            }
            let report = check_alignment(a.document, b.document);
            if !report.is_aligned() {
                misaligned.push(report);
            }
        }
    }
    if misaligned.is_empty() {
        Ok(())
    } else {
        Err(StatsError::MisalignedDocuments(misaligned))
    }
}

fn build_report<T: Scalar>(
    document_ids: Vec<String>,
    profiles: &[ConnectivityProfile],
    metrics: &[SessionMetrics],
    pairs: usize,
    inv: &ConjunctInventory,
    aggregation: Aggregation,
) -> Result<Report<T>, StatsError> {
    let mut per_pair = Vec::with_capacity(pairs);
    for pair_index in 2..=(pairs as u32 + 1) {
        per_pair.push(PairRow {
            pair_index,
            category: pair_spread(profiles, pair_index, Granularity::Category, inv)?,
            conjunct: pair_spread(profiles, pair_index, Granularity::Conjunct, inv)?,
            mode_category: mode_connector(profiles, pair_index, Granularity::Category, inv)?,
            mode_conjunct: mode_connector(profiles, pair_index, Granularity::Conjunct, inv)?,
        });
    }

    let (mean_cat, mean_con) = match aggregation {
        Aggregation::PairMean => (
            mean(per_pair.iter().map(|r| r.category.mu2)),
            mean(per_pair.iter().map(|r| r.conjunct.mu2)),
        ),
        Aggregation::AllChoices => (
            all_choices_spread(profiles, Granularity::Category, inv)?,
            all_choices_spread(profiles, Granularity::Conjunct, inv)?,
        ),
    };

    let (mean_time_ms, mean_backtracks) = if metrics.is_empty() {
        (None, None)
    } else {
        (
            Some(mean(metrics.iter().map(|m| m.elapsed_ms as f64))),
            Some(mean(metrics.iter().map(|m| m.backtrack_count as f64))),
        )
    };

    Ok(Report {
        document_ids,
        n_profiles: profiles.len(),
        aggregation,
        per_pair,
        mean_cat,
        mean_con,
        n_sessions: metrics.len(),
        mean_time_ms,
        mean_backtracks,
    })
}

fn all_choices_spread<T: Scalar>(
    profiles: &[ConnectivityProfile],
    granularity: Granularity,
    inv: &ConjunctInventory,
) -> Result<T, StatsError> {
    let labels = profiles
        .iter()
        .flat_map(|p| p.choices.iter().map(move |c| c.label(granularity)));
    let dist = ChoiceDistribution::from_labels(0, granularity, labels)?;
    Ok(spread::<T>(&rank_transform(&dist, &inv.label_order(granularity)))?.mu2)
}
