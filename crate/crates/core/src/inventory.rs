//! Conjunct inventories: conjuncts grouped into categories that evaluators never see.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: String,
    /// Description for analysts; never shown to evaluators.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conjunct {
    pub id: String,
    pub category_id: String,
    /// Language tag to display string.
    pub surface_forms: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gloss: Option<String>,
}

impl Conjunct {
    /// Surface form in `language`, falling back to the conjunct id.
    pub fn surface(&self, language: &str) -> &str {
        self.surface_forms
            .get(language)
            .map(String::as_str)
            .unwrap_or(&self.id)
    }
}

/// Declaration order of categories and conjuncts is significant: it is the
/// tie-break order for every ranking and mode computation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjunctInventory {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub categories: Vec<Category>,
    pub conjuncts: Vec<Conjunct>,
}

/// Statistics can be computed over conjunct ids or over their categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Category,
    Conjunct,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Category => "category",
            Granularity::Conjunct => "conjunct",
        })
    }
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "category" | "cat" => Ok(Granularity::Category),
            "conjunct" | "con" => Ok(Granularity::Conjunct),
            other => Err(format!("unknown granularity '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InventoryViolation {
    #[error("duplicate category id '{0}'")]
    DuplicateCategory(String),
    #[error("duplicate conjunct id '{0}'")]
    DuplicateConjunct(String),
    #[error("dangling category: conjunct '{conjunct}' refers to unknown category '{category}'")]
    DanglingCategory { conjunct: String, category: String },
    #[error("empty category: '{0}' has no conjuncts")]
    EmptyCategory(String),
    #[error("missing surface form: conjunct '{conjunct}' has no '{language}' form")]
    MissingSurfaceForm { conjunct: String, language: String },
    #[error("empty surface form: conjunct '{conjunct}' has a blank '{language}' form")]
    EmptySurfaceForm { conjunct: String, language: String },
}

impl ConjunctInventory {
    pub fn conjunct(&self, id: &str) -> Option<&Conjunct> {
        self.conjuncts.iter().find(|c| c.id == id)
    }

    pub fn category(&self, id: &str) -> Option<&Category> {
        self.categories.iter().find(|c| c.id == id)
    }

    pub fn category_of(&self, conjunct_id: &str) -> Option<&str> {
        self.conjunct(conjunct_id).map(|c| c.category_id.as_str())
    }

    /// Every language tag used by at least one surface form.
    pub fn languages(&self) -> BTreeSet<&str> {
        self.conjuncts
            .iter()
            .flat_map(|c| c.surface_forms.keys().map(String::as_str))
            .collect()
    }

    pub fn label_order(&self, granularity: Granularity) -> LabelOrder {
        let ids: Vec<&str> = match granularity {
            Granularity::Category => self.categories.iter().map(|c| c.id.as_str()).collect(),
            Granularity::Conjunct => self.conjuncts.iter().map(|c| c.id.as_str()).collect(),
        };
        LabelOrder::new(ids)
    }
}

/// Violations are returned as data; an empty list means the inventory is usable.
pub fn validate_inventory(inv: &ConjunctInventory) -> Vec<InventoryViolation> {
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    for c in &inv.categories {
        if !seen.insert(c.id.as_str()) {
            out.push(InventoryViolation::DuplicateCategory(c.id.clone()));
        }
    }
    let mut seen_conj = HashSet::new();
    for c in &inv.conjuncts {
        if !seen_conj.insert(c.id.as_str()) {
            out.push(InventoryViolation::DuplicateConjunct(c.id.clone()));
        }
        if !seen.contains(c.category_id.as_str()) {
            out.push(InventoryViolation::DanglingCategory {
                conjunct: c.id.clone(),
                category: c.category_id.clone(),
            });
        }
    }

    let mut populated = HashSet::new();
    for c in &inv.conjuncts {
        populated.insert(c.category_id.as_str());
    }
    let mut reported = HashSet::new();
    for c in &inv.categories {
        if !populated.contains(c.id.as_str()) && reported.insert(c.id.as_str()) {
            out.push(InventoryViolation::EmptyCategory(c.id.clone()));
        }
    }

    let languages = inv.languages();
    for c in &inv.conjuncts {
        for lang in &languages {
            match c.surface_forms.get(*lang) {
                None => out.push(InventoryViolation::MissingSurfaceForm {
                    conjunct: c.id.clone(),
                    language: lang.to_string(),
                }),
                Some(form) if form.trim().is_empty() => {
                    out.push(InventoryViolation::EmptySurfaceForm {
                        conjunct: c.id.clone(),
                        language: lang.to_string(),
                    })
                }
                Some(_) => {}
            }
        }
    }
    out
}

/// Total order on label ids. Declared labels come first in declaration
/// order; undeclared labels sort after them lexicographically.
#[derive(Debug, Clone, Default)]
pub struct LabelOrder {
    positions: HashMap<String, usize>,
}

impl LabelOrder {
    pub fn new<S: AsRef<str>>(ids: impl IntoIterator<Item = S>) -> Self {
        let mut positions = HashMap::new();
        for (i, id) in ids.into_iter().enumerate() {
            positions.entry(id.as_ref().to_owned()).or_insert(i);
        }
        LabelOrder { positions }
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }

    pub fn compare(&self, a: &str, b: &str) -> std::cmp::Ordering {
        match (self.position(a), self.position(b)) {
            (Some(x), Some(y)) => x.cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.cmp(b),
        }
    }
}
