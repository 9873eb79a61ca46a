use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inventory::ConjunctInventory;

/// Most conjuncts a single screen may offer.
pub const MAX_SCREEN_CONJUNCTS: usize = 8;
pub const MIN_ANSWERS: usize = 2;
pub const MAX_ANSWERS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub label: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DialogNode {
    Question { prompt: String, answers: Vec<Answer> },
    ConjunctScreen { conjuncts: Vec<String> },
}

impl DialogNode {
    pub fn is_question(&self) -> bool {
        matches!(self, DialogNode::Question { .. })
    }

    fn targets(&self) -> impl Iterator<Item = &str> {
        let answers: &[Answer] = match self {
            DialogNode::Question { answers, .. } => answers,
            DialogNode::ConjunctScreen { .. } => &[],
        };
        answers.iter().map(|a| a.target.as_str())
    }
}

/// Question/answer graph whose leaves are conjunct screens. Shared targets
/// are allowed; the graph reachable from `root` must be acyclic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogTree {
    pub id: String,
    pub inventory_id: String,
    pub root: String,
    pub nodes: BTreeMap<String, DialogNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeViolation {
    #[error("inventory mismatch: tree is bound to '{expected}' but was checked against '{found}'")]
    InventoryMismatch { expected: String, found: String },
    #[error("missing root: node '{0}' does not exist")]
    MissingRoot(String),
    #[error("dangling target: answer {answer_index} of '{node}' points to unknown node '{target}'")]
    DanglingTarget {
        node: String,
        answer_index: usize,
        target: String,
    },
    #[error("answer count: question '{node}' has {count} answers, expected {MIN_ANSWERS}..={MAX_ANSWERS}")]
    AnswerCount { node: String, count: usize },
    #[error("empty screen: '{0}' lists no conjuncts")]
    EmptyScreen(String),
    #[error("screen exceeds {MAX_SCREEN_CONJUNCTS}: '{node}' lists {count} conjuncts")]
    ScreenExceeds { node: String, count: usize },
    #[error("unknown conjunct: screen '{node}' lists '{conjunct}' which is not in the inventory")]
    UnknownConjunct { node: String, conjunct: String },
    #[error("unreachable node: '{0}' cannot be reached from the root")]
    Unreachable(String),
    #[error("cycle: node '{0}' can reach itself")]
    Cycle(String),
    #[error("uncovered conjunct: '{0}' is on no reachable screen")]
    UncoveredConjunct(String),
}

impl DialogTree {
    pub fn node(&self, id: &str) -> Option<&DialogNode> {
        self.nodes.get(id)
    }

    /// Node ids reachable from the root, in breadth-first order.
    pub fn reachable(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        if self.nodes.contains_key(&self.root) {
            queue.push_back(self.root.as_str());
            seen.insert(self.root.as_str());
        }
        while let Some(id) = queue.pop_front() {
            order.push(id);
            if let Some(node) = self.nodes.get(id) {
                for t in node.targets() {
                    if self.nodes.contains_key(t) && seen.insert(t) {
                        queue.push_back(t);
                    }
                }
            }
        }
        order
    }

    /// Shortest sequence of answer indices from the root to a screen that
    /// offers `conjunct_id`, plus that screen's id. Lower answer indices win ties.
    pub fn shortest_path_to(&self, conjunct_id: &str) -> Option<(Vec<usize>, String)> {
        let mut prev: HashMap<&str, (&str, usize)> = HashMap::new();
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        queue.push_back(self.root.as_str());
        seen.insert(self.root.as_str());
        while let Some(id) = queue.pop_front() {
            match self.nodes.get(id)? {
                DialogNode::ConjunctScreen { conjuncts } => {
                    if conjuncts.iter().any(|c| c == conjunct_id) {
                        let mut path = Vec::new();
                        let mut cur = id;
                        while let Some(&(p, idx)) = prev.get(cur) {
                            path.push(idx);
                            cur = p;
                        }
                        path.reverse();
                        return Some((path, id.to_owned()));
                    }
                }
                DialogNode::Question { answers, .. } => {
                    for (i, a) in answers.iter().enumerate() {
                        let t = a.target.as_str();
                        if self.nodes.contains_key(t) && seen.insert(t) {
                            prev.insert(t, (id, i));
                            queue.push_back(t);
                        }
                    }
                }
            }
        }
        None
    }
}

/// Structural checks of a dialog against the inventory it is bound to.
pub fn validate_tree(tree: &DialogTree, inv: &ConjunctInventory) -> Vec<TreeViolation> {
    let mut out = Vec::new();
    if tree.inventory_id != inv.id {
        out.push(TreeViolation::InventoryMismatch {
            expected: tree.inventory_id.clone(),
            found: inv.id.clone(),
        });
    }
    if !tree.nodes.contains_key(&tree.root) {
        out.push(TreeViolation::MissingRoot(tree.root.clone()));
    }

    for (id, node) in &tree.nodes {
        match node {
            DialogNode::Question { answers, .. } => {
                if !(MIN_ANSWERS..=MAX_ANSWERS).contains(&answers.len()) {
                    out.push(TreeViolation::AnswerCount {
                        node: id.clone(),
                        count: answers.len(),
                    });
                }
                for (i, a) in answers.iter().enumerate() {
                    if !tree.nodes.contains_key(&a.target) {
                        out.push(TreeViolation::DanglingTarget {
                            node: id.clone(),
                            answer_index: i,
                            target: a.target.clone(),
                        });
                    }
                }
            }
            DialogNode::ConjunctScreen { conjuncts } => {
                if conjuncts.is_empty() {
                    out.push(TreeViolation::EmptyScreen(id.clone()));
                }
                if conjuncts.len() > MAX_SCREEN_CONJUNCTS {
                    out.push(TreeViolation::ScreenExceeds {
                        node: id.clone(),
                        count: conjuncts.len(),
                    });
                }
                for c in conjuncts {
                    if inv.conjunct(c).is_none() {
                        out.push(TreeViolation::UnknownConjunct {
                            node: id.clone(),
                            conjunct: c.clone(),
                        });
                    }
                }
            }
        }
    }

    let reachable = tree.reachable();
    let reachable_set: HashSet<&str> = reachable.iter().copied().collect();
    for id in tree.nodes.keys() {
        if !reachable_set.contains(id.as_str()) {
            out.push(TreeViolation::Unreachable(id.clone()));
        }
    }
    out.extend(find_cycles(tree).into_iter().map(TreeViolation::Cycle));

    let covered: HashSet<&str> = reachable
        .iter()
        .filter_map(|id| match tree.nodes.get(*id) {
            Some(DialogNode::ConjunctScreen { conjuncts }) => Some(conjuncts),
            _ => None,
        })
        .flatten()
        .map(String::as_str)
        .collect();
    for c in &inv.conjuncts {
        if !covered.contains(c.id.as_str()) {
            out.push(TreeViolation::UncoveredConjunct(c.id.clone()));
        }
    }
    out
}

/// Nodes that close a back edge during a depth-first walk from the root.
fn find_cycles(tree: &DialogTree) -> Vec<String> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: HashMap<&str, Mark> = HashMap::new();
    let mut found = Vec::new();
    if !tree.nodes.contains_key(&tree.root) {
        return found;
    }
    // Iterative DFS: (node, next target index).
    let mut stack: Vec<(&str, usize)> = vec![(tree.root.as_str(), 0)];
    marks.insert(tree.root.as_str(), Mark::Open);
    while let Some((id, next)) = stack.pop() {
        let targets: Vec<&str> = tree.nodes[id].targets().collect();
        if next < targets.len() {
            stack.push((id, next + 1));
            let t = targets[next];
            if !tree.nodes.contains_key(t) {
                continue;
            }
            match marks.get(t) {
                Some(Mark::Open) => {
                    if !found.iter().any(|f: &String| f == t) {
                        found.push(t.to_owned());
                    }
                }
                Some(Mark::Done) => {}
                None => {
                    marks.insert(t, Mark::Open);
                    stack.push((t, 0));
                }
            }
        } else {
            marks.insert(id, Mark::Done);
        }
    }
    found
}
