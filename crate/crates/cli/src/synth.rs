use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use connprof_core::dialog::{ManualClock, SessionMode};
use connprof_core::store::{Artifact, ArtifactKind, Project};
use connprof_core::{defaults, TextDocument};
use connprof_service::{
    AnswerRequest, ConjunctRequest, CreateSessionRequest, EvalService, RecordedRequest,
    ScreenView, TopicCommentRequest,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Sentences {
    Count(usize),
    Text(Vec<String>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentSpec {
    pub id: String,
    #[serde(default = "english")]
    pub language: String,
    #[serde(default = "shared_group")]
    pub alignment_group: Option<String>,
    pub sentences: Sentences,
}

/// Evaluator population to generate. Every field has a default, so `{}` is
/// four aligned 9-sentence texts judged by groups of 14, 13, 7 and 7.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recipe {
    #[serde(default = "default_documents")]
    pub documents: Vec<DocumentSpec>,
    #[serde(default = "default_group_sizes")]
    pub group_sizes: Vec<usize>,
    #[serde(default = "lazy")]
    pub mode: SessionMode,
    /// Relative frequencies of the distinct labels chosen at each pair.
    #[serde(default = "default_frequencies")]
    pub frequencies: Vec<u32>,
    /// Per-pair replacements for `frequencies`.
    #[serde(default)]
    pub pairs: BTreeMap<u32, Vec<u32>>,
    #[serde(default = "default_dialog")]
    pub dialog_tree_id: String,
    #[serde(default)]
    pub think_time_ms: u64,
}

fn english() -> String {
    "en".into()
}

fn shared_group() -> Option<String> {
    Some("synthetic".into())
}

fn lazy() -> SessionMode {
    SessionMode::Lazy
}

fn default_documents() -> Vec<DocumentSpec> {
    ["A", "B", "C", "D"]
        .into_iter()
        .map(|id| DocumentSpec {
            id: id.into(),
            language: english(),
            alignment_group: shared_group(),
            sentences: Sentences::Count(9),
        })
        .collect()
}

fn default_group_sizes() -> Vec<usize> {
    vec![14, 13, 7, 7]
}

fn default_frequencies() -> Vec<u32> {
    vec![7, 2, 1]
}

fn default_dialog() -> String {
    defaults::dialog_tree().id
}

impl DocumentSpec {
    fn build(&self) -> TextDocument {
        let sentences = match &self.sentences {
            Sentences::Count(n) => (1..=*n).map(|i| format!("Sentence {i} of text {}.", self.id)).collect(),
            Sentences::Text(s) => s.clone(),
        };
        TextDocument::new(&self.id, &self.language, sentences, self.alignment_group.clone())
    }
}

/// Splits `total` in proportion to `weights` by largest remainder; ties go to
/// the earlier weight.
pub fn scale_counts(weights: &[u32], total: usize) -> Vec<usize> {
    let sum: u64 = weights.iter().map(|&w| u64::from(w)).sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let total = total as u64;
    let mut counts: Vec<usize> = weights.iter().map(|&w| (u64::from(w) * total / sum) as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(u64::from(weights[i]) * total % sum));
    let assigned: usize = counts.iter().sum();
    for &i in order.iter().take(total as usize - assigned) {
        counts[i] += 1;
    }
    counts
}

pub struct Summary {
    pub sessions: usize,
    pub requests: Vec<RecordedRequest>,
}

fn ensure_artifact(project: &Project, artifact: Artifact) -> Result<()> {
    let (kind, id) = (artifact.kind(), artifact.id().to_owned());
    if !project.contains(kind, &id) {
        project.put_artifact(&artifact)?;
        return Ok(());
    }
    let same = match &artifact {
        Artifact::Document(d) => &project.document(&id)? == d,
        Artifact::Inventory(i) => &project.inventory(&id)? == i,
        Artifact::DialogTree(t) => &project.dialog_tree(&id)? == t,
    };
    ensure!(same, "{kind} '{id}' already exists with different content");
    Ok(())
}

/// Generates and runs every session of the recipe through the evaluation service.
pub async fn synthesize(project: Arc<Project>, recipe: &Recipe, seed: u64) -> Result<Summary> {
    ensure!(
        recipe.documents.len() == recipe.group_sizes.len(),
        "recipe has {} documents but {} group sizes",
        recipe.documents.len(),
        recipe.group_sizes.len()
    );
    if !project.contains(ArtifactKind::DialogTree, &recipe.dialog_tree_id) {
        ensure!(
            recipe.dialog_tree_id == defaults::dialog_tree().id,
            "dialog tree '{}' is not in the project",
            recipe.dialog_tree_id
        );
        ensure_artifact(&project, Artifact::Inventory(defaults::inventory()))?;
        ensure_artifact(&project, Artifact::DialogTree(defaults::dialog_tree()))?;
    }
    let tree = project.dialog_tree(&recipe.dialog_tree_id)?;
    let inv = project.inventory(&tree.inventory_id)?;

    let documents: Vec<TextDocument> = recipe.documents.iter().map(DocumentSpec::build).collect();
    for d in &documents {
        ensure_artifact(&project, Artifact::Document(d.clone()))
            .with_context(|| format!("storing document '{}'", d.id))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_pair = documents.iter().map(|d| d.len() as u32).max().unwrap_or(0);
    let mut category_order: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
    for pair in 2..=max_pair {
        let mut cats: Vec<&str> = inv.categories.iter().map(|c| c.id.as_str()).collect();
        cats.shuffle(&mut rng);
        category_order.insert(pair, cats);
    }
    let members = |cat: &str| -> Vec<&str> {
        inv.conjuncts
            .iter()
            .filter(|c| c.category_id == cat)
            .map(|c| c.id.as_str())
            .collect()
    };

    let clock = Arc::new(ManualClock::with_step(0, recipe.think_time_ms));
    let service = EvalService::with_clock(Arc::clone(&project), clock);
    let mut requests = Vec::new();
    let mut sessions = 0;

    for (doc, &size) in documents.iter().zip(&recipe.group_sizes) {
        // choices[e][pair - 2] is evaluator e's conjunct at that pair
        let mut choices = vec![Vec::new(); size];
        for pair in 2..=doc.len() as u32 {
            let weights = recipe.pairs.get(&pair).unwrap_or(&recipe.frequencies);
            let cats = &category_order[&pair];
            if weights.len() > cats.len() {
                bail!("pair {pair} asks for {} labels but there are {} categories", weights.len(), cats.len());
            }
            let mut labels: Vec<&str> = Vec::with_capacity(size);
            for (cat, n) in cats.iter().zip(scale_counts(weights, size)) {
                labels.extend(std::iter::repeat_n(*cat, n));
            }
            labels.shuffle(&mut rng);
            for (e, cat) in labels.into_iter().enumerate() {
                let conj = *members(cat).choose(&mut rng).expect("validated inventories have no empty categories");
                choices[e].push(conj.to_owned());
            }
        }

        for (e, picks) in choices.iter().enumerate() {
            let session_id = format!("{}-s{:02}", doc.id, e + 1);
            let create = CreateSessionRequest {
                document_id: doc.id.clone(),
                dialog_tree_id: tree.id.clone(),
                evaluator_id: format!("{}-e{:02}", doc.id, e + 1),
                mode: recipe.mode,
                session_id: Some(session_id.clone()),
            };
            requests.push(RecordedRequest::create_session(&create));
            let mut view: ScreenView = service.create_session(create).await?;
            for (i, conj) in picks.iter().enumerate() {
                let pair = i as u32 + 2;
                if recipe.mode == SessionMode::Full {
                    let req = TopicCommentRequest {
                        pair_index: Some(pair),
                        topics: vec![format!("topic of sentence {pair}")],
                        comments: vec![format!("comment on sentence {pair}")],
                        intra_pair_conjuncts: None,
                        stage_token: Some(view.stage_token),
                    };
                    requests.push(RecordedRequest::topic_comment(&session_id, &req));
                    view = service.post_topic_comment(&session_id, req).await?;
                }
                let (path, _) = tree
                    .shortest_path_to(conj)
                    .with_context(|| format!("conjunct '{conj}' is not reachable"))?;
                for answer_index in path {
                    let req = AnswerRequest {
                        answer_index,
                        stage_token: Some(view.stage_token),
                    };
                    requests.push(RecordedRequest::answer(&session_id, &req));
                    view = service.post_answer(&session_id, req).await?;
                }
                let req = ConjunctRequest {
                    conjunct_id: conj.clone(),
                    stage_token: Some(view.stage_token),
                };
                requests.push(RecordedRequest::conjunct(&session_id, &req));
                view = service.post_conjunct(&session_id, req).await?;
            }
            sessions += 1;
        }
    }
    Ok(Summary { sessions, requests })
}
