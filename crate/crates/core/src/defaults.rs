//! Shipped configuration: an illustrative English/Japanese inventory of 32
//! conjuncts in 11 categories and a single-question dialog over it.
//!
//! The conjunct lists and prompt wordings are stand-ins. Everything else in
//! the crate is inventory-agnostic.

use crate::dialog::DialogTree;
use crate::inventory::ConjunctInventory;

pub const INVENTORY_JSON: &str = include_str!("../defaults/inventory.json");
pub const DIALOG_JSON: &str = include_str!("../defaults/dialog.json");

pub fn inventory() -> ConjunctInventory {
    serde_json::from_str(INVENTORY_JSON).expect("shipped inventory parses")
}

pub fn dialog_tree() -> DialogTree {
    serde_json::from_str(DIALOG_JSON).expect("shipped dialog tree parses")
}
