use std::fs;
use std::path::{Path, PathBuf};

use connprof_core::dialog::DialogTree;
use connprof_core::store::Artifact;
use connprof_core::{ConjunctInventory, TextDocument};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}: cannot read: {source}", path.display())]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: not a valid {kind}: {message}", path.display())]
    Malformed {
        path: PathBuf,
        kind: &'static str,
        message: String,
    },
}

/// Reads an inventory, dialog tree or document, telling them apart by their keys.
pub fn load(path: &Path) -> Result<Artifact, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Unreadable {
        path: path.to_owned(),
        source,
    })?;
    let malformed = |kind: &'static str, message: String| LoadError::Malformed {
        path: path.to_owned(),
        kind,
        message,
    };
    let value: Value = serde_json::from_str(&text).map_err(|e| malformed("JSON file", e.to_string()))?;
    let has = |key: &str| value.get(key).is_some();
    if has("conjuncts") {
        serde_json::from_value::<ConjunctInventory>(value)
            .map(Artifact::Inventory)
            .map_err(|e| malformed("inventory", e.to_string()))
    } else if has("nodes") {
        serde_json::from_value::<DialogTree>(value)
            .map(Artifact::DialogTree)
            .map_err(|e| malformed("dialog tree", e.to_string()))
    } else if has("sentences") {
        serde_json::from_value::<TextDocument>(value)
            .map(Artifact::Document)
            .map_err(|e| malformed("document", e.to_string()))
    } else {
        Err(malformed(
            "configuration file",
            "expected an inventory, a dialog tree or a document".into(),
        ))
    }
}

/// Files named on the command line; directories contribute their `*.json` files.
pub fn expand(paths: &[PathBuf]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found = Vec::new();
            walk(p, &mut found);
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    out
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) {
    let Ok(entries) = fs::read_dir(dir) else {
        out.push(dir.to_owned());
        return;
    };
    for entry in entries.flatten() {
        let path = entry.path();
        if path.is_dir() {
            walk(&path, out);
        } else if path.extension().is_some_and(|e| e == "json") && !path.ends_with("manifest.json") {
            out.push(path);
        }
    }
}

pub fn kind_name(a: &Artifact) -> &'static str {
    match a {
        Artifact::Inventory(_) => "inventory",
        Artifact::DialogTree(_) => "dialog tree",
        Artifact::Document(_) => "document",
    }
}
