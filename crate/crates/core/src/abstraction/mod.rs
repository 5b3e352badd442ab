//! Source abstraction: tokens, block structure, typed items and per-block
//! transactions.

pub mod extract;
pub mod ingest;
pub mod item;
pub mod resolve;
pub mod structure;
pub mod tokenizer;

use std::collections::BTreeSet;

use rayon::prelude::*;

pub use extract::{build_transactions, extract_items, method_block_count, DeclIndex};
pub use ingest::ingest_records;
pub use item::{BlockKind, Item, ItemKind, Transaction};
pub use resolve::{resolve_type, DefaultNamespace, Resolution};
pub use structure::{parse_structure, BlockTree};
pub use tokenizer::{tokenize, Token, TokenKind, Tokens};

use crate::corpus::SourceUnit;

/// Result of abstracting a whole corpus.
#[derive(Debug, Clone, Default)]
pub struct Abstraction {
    /// Transactions in unit order, then canonical order within each unit.
    pub transactions: Vec<Transaction>,
    /// Method and constructor bodies seen, before empty blocks are dropped.
    pub method_blocks: usize,
    /// Keys of units whose structure could only be partially recovered.
    pub degraded_units: Vec<String>,
    pub unresolved_types: BTreeSet<String>,
    pub warnings: Vec<String>,
}

/// Tokenizes and parses every unit, builds the corpus-wide declaration
/// index, then extracts items and transactions.
///
/// Units are processed in parallel; the output order follows `units`.
pub fn abstract_units(units: &[SourceUnit], defaults: &DefaultNamespace) -> Abstraction {
    let trees: Vec<BlockTree> = units
        .par_iter()
        .map(|u| parse_structure(&tokenize(&u.text)))
        .collect();
    let index = DeclIndex::from_trees(&trees, defaults);
    let per_unit: Vec<(Vec<Transaction>, BTreeSet<String>)> = units
        .par_iter()
        .zip(trees.par_iter())
        .map(|(unit, tree)| {
            let items = extract_items(tree, unit, &index, defaults);
            (
                build_transactions(&items, tree, unit),
                extract::unresolved_types(tree, defaults),
            )
        })
        .collect();

    let mut out = Abstraction::default();
    for ((unit, tree), (txs, unresolved)) in units.iter().zip(&trees).zip(per_unit) {
        out.method_blocks += method_block_count(tree);
        if tree.degraded {
            out.degraded_units.push(unit.key());
        }
        out.warnings
            .extend(tree.warnings.iter().map(|w| format!("{}: {w}", unit.key())));
        out.transactions.extend(txs);
        out.unresolved_types.extend(unresolved);
    }
    out
}
