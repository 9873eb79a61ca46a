use serde::{Deserialize, Serialize};

use super::report::{check_groups_aligned, mode_connector, ProfileGroup};
use super::scalar::Scalar;
use super::StatsError;
use crate::inventory::{ConjunctInventory, Granularity};
use crate::profile::ConnectivityProfile;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairModes {
    pub pair_index: u32,
    pub mode_a: String,
    pub mode_b: String,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAgreement<T> {
    pub fraction: T,
    pub pairs: Vec<PairModes>,
}

/// Share of pairs at which both groups' most chosen label is the same.
pub fn mode_agreement<T: Scalar>(
    a: &ProfileGroup<'_>,
    b: &ProfileGroup<'_>,
    granularity: Granularity,
    inv: &ConjunctInventory,
) -> Result<ModeAgreement<T>, StatsError> {
    for g in [a, b] {
        if g.profiles.is_empty() {
            return Err(StatsError::NoProfiles);
        }
        g.check()?;
    }
    check_groups_aligned(&[*a, *b])?;

    let pairs = (2..=a.document.len() as u32)
        .map(|pair_index| {
            let mode_a = mode_connector(a.profiles, pair_index, granularity, inv)?;
            let mode_b = mode_connector(b.profiles, pair_index, granularity, inv)?;
            Ok(PairModes {
                pair_index,
                agree: mode_a == mode_b,
                mode_a,
                mode_b,
            })
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    let agreeing = pairs.iter().filter(|p| p.agree).count();
    Ok(ModeAgreement {
        fraction: T::from_count(agreeing) / T::from_count(pairs.len()),
        pairs,
    })
}

/// Share of pair indices at which two profiles carry the same label.
pub fn profile_correspondence<T: Scalar>(
    p: &ConnectivityProfile,
    q: &ConnectivityProfile,
    granularity: Granularity,
) -> Result<T, StatsError> {
    if p.len() != q.len() {
        return Err(StatsError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if p.is_empty() {
        return Ok(T::one());
    }
    let matching = p
        .choices
        .iter()
        .filter(|c| {
            q.choice(c.pair_index)
                .is_some_and(|d| d.label(granularity) == c.label(granularity))
        })
        .count();
    Ok(T::from_count(matching) / T::from_count(p.len()))
}
