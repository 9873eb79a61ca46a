use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;

use connprof_core::dialog::validate_tree;
use connprof_core::store::Artifact;
use connprof_core::{defaults, validate_inventory, ConjunctInventory};

use crate::config::{expand, kind_name, load};

pub struct Outcome {
    pub violations: usize,
    pub unreadable: usize,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.unreadable > 0 {
            2
        } else if self.violations > 0 {
            1
        } else {
            0
        }
    }
}

/// Checks every file; dialog trees are checked against an inventory given
/// alongside them, falling back to the built-in one.
pub fn run(paths: &[PathBuf], builtin: bool, out: &mut impl Write) -> std::io::Result<Outcome> {
    let mut outcome = Outcome {
        violations: 0,
        unreadable: 0,
    };
    let mut artifacts: Vec<(String, Artifact)> = Vec::new();
    if builtin {
        artifacts.push(("<builtin>".into(), Artifact::Inventory(defaults::inventory())));
        artifacts.push(("<builtin>".into(), Artifact::DialogTree(defaults::dialog_tree())));
    }
    for path in expand(paths) {
        match load(&path) {
            Ok(a) => artifacts.push((path.display().to_string(), a)),
            Err(e) => {
                writeln!(out, "error: {e}")?;
                outcome.unreadable += 1;
            }
        }
    }

    let mut inventories: HashMap<String, ConjunctInventory> = HashMap::new();
    for (_, a) in &artifacts {
        if let Artifact::Inventory(inv) = a {
            inventories.entry(inv.id.clone()).or_insert_with(|| inv.clone());
        }
    }
    let fallback = defaults::inventory();

    for (name, a) in &artifacts {
        let problems: Vec<String> = match a {
            Artifact::Inventory(inv) => validate_inventory(inv).iter().map(ToString::to_string).collect(),
            Artifact::DialogTree(tree) => {
                match inventories.get(&tree.inventory_id).or((tree.inventory_id == fallback.id).then_some(&fallback)) {
                    Some(inv) => validate_tree(tree, inv).iter().map(ToString::to_string).collect(),
                    None => vec![format!("unknown inventory '{}'", tree.inventory_id)],
                }
            }
            Artifact::Document(doc) => doc.validate().iter().map(ToString::to_string).collect(),
        };
        if problems.is_empty() {
            writeln!(out, "ok {name} ({} '{}')", kind_name(a), a.id())?;
        }
        for p in &problems {
            writeln!(out, "{name}: {p}")?;
        }
        outcome.violations += problems.len();
    }
    writeln!(
        out,
        "{} checked, {} violation(s), {} unreadable",
        artifacts.len(),
        outcome.violations,
        outcome.unreadable
    )?;
    Ok(outcome)
}
