use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scalar::Scalar;
use super::StatsError;
use crate::inventory::{Granularity, LabelOrder};

/// How many evaluators picked each label for one sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceDistribution {
    pub pair_index: u32,
    pub granularity: Granularity,
    counts: BTreeMap<String, u32>,
}

impl ChoiceDistribution {
    pub fn new<S: Into<String>>(
        pair_index: u32,
        granularity: Granularity,
        counts: impl IntoIterator<Item = (S, u32)>,
    ) -> Result<Self, StatsError> {
        let mut merged = BTreeMap::new();
        for (label, count) in counts {
            let label = label.into();
            if count == 0 {
                return Err(StatsError::InvalidDistribution(format!(
                    "label '{label}' has a zero count"
                )));
            }
            *merged.entry(label).or_insert(0) += count;
        }
        if merged.is_empty() {
            return Err(StatsError::InvalidDistribution("no choices".into()));
        }
        Ok(ChoiceDistribution {
            pair_index,
            granularity,
            counts: merged,
        })
    }

    /// One label per evaluator.
    pub fn from_labels<'s>(
        pair_index: u32,
        granularity: Granularity,
        labels: impl IntoIterator<Item = &'s str>,
    ) -> Result<Self, StatsError> {
        Self::new(pair_index, granularity, labels.into_iter().map(|l| (l, 1)))
    }

    pub fn counts(&self) -> &BTreeMap<String, u32> {
        &self.counts
    }

    pub fn evaluator_total(&self) -> u32 {
        self.counts.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedLabel {
    pub label: String,
    pub rank: u32,
    pub count: u32,
}

/// One rank per evaluator, in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedSample {
    pub values: Vec<u32>,
    /// Labels in rank order; rank 1 is the most chosen.
    pub ranking: Vec<RankedLabel>,
}

/// Replaces each evaluator's label by the frequency rank of that label. Equal
/// counts are ordered by `order`.
pub fn rank_transform(dist: &ChoiceDistribution, order: &LabelOrder) -> RankedSample {
    let mut labels: Vec<(&String, u32)> = dist.counts.iter().map(|(l, c)| (l, *c)).collect();
    labels.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| order.compare(a.0, b.0)));

    let mut values = Vec::with_capacity(dist.evaluator_total() as usize);
    let ranking = labels
        .into_iter()
        .enumerate()
        .map(|(i, (label, count))| {
            let rank = i as u32 + 1;
            values.extend(std::iter::repeat_n(rank, count as usize));
            RankedLabel {
                label: label.clone(),
                rank,
                count,
            }
        })
        .collect();
    RankedSample { values, ranking }
}

/// Population variance of the rank values together with their mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadResult<T> {
    pub mu2: T,
    pub mean_rank: T,
    pub n_evaluators: usize,
}

/// `mu2 = (1/n) * sum_i (x_i - mean)^2`, dividing by `n`.
pub fn spread<T: Scalar>(sample: &RankedSample) -> Result<SpreadResult<T>, StatsError> {
    spread_of(&sample.values)
}

pub fn spread_of<T: Scalar>(values: &[u32]) -> Result<SpreadResult<T>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n = T::from_count(values.len());
    let xs = values.iter().map(|&v| T::from_u32(v).expect("rank fits"));
    let mean = xs.clone().fold(T::zero(), |acc, x| acc + x) / n;
    let mu2 = xs.fold(T::zero(), |acc, x| {
        let d = x - mean;
        acc + d * d
    }) / n;
    Ok(SpreadResult {
        mu2,
        mean_rank: mean,
        n_evaluators: values.len(),
    })
}
