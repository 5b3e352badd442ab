//! Import of pre-abstracted transactions from a line-delimited records file.
//!
//! Each non-blank line is one JSON object:
//! `{"kind":"MI","name":"..","entity":"..","line":3,"unit":"src/A.java","block":"method","span":[1,9]}`.
//! Consecutive records with the same unit, entity, block and span form one
//! transaction.

use serde::Deserialize;

use super::extract::sort_transactions;
use super::item::{BlockKind, Item, ItemKind, Transaction};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    kind: String,
    name: String,
    entity: String,
    line: usize,
    unit: String,
    block: String,
    span: (usize, usize),
}

pub fn ingest_records(text: &str) -> Result<Vec<Transaction>> {
    let mut out: Vec<Transaction> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Ingest {
            line: line_no,
            message,
        };
        let rec: Record = serde_json::from_str(raw).map_err(|e| err(e.to_string()))?;
        let kind: ItemKind = rec.kind.parse().map_err(|e: Error| err(e.to_string()))?;
        let block: BlockKind = rec.block.parse().map_err(|e: Error| err(e.to_string()))?;
        if rec.name.is_empty() || rec.entity.is_empty() || rec.unit.is_empty() {
            return Err(err("name, entity and unit must be non-empty".into()));
        }
        if rec.line == 0 || rec.span.0 == 0 || rec.span.0 > rec.span.1 {
            return Err(err("lines are 1-based and span must be ordered".into()));
        }
        if !(rec.span.0..=rec.span.1).contains(&rec.line) {
            return Err(err(format!("line {} outside span {:?}", rec.line, rec.span)));
        }
        let item = Item::new(kind, rec.name, rec.entity, rec.line);
        let continues = out.last().is_some_and(|t| {
            t.unit == rec.unit && t.entity == item.entity && t.block == block && t.span == rec.span
        });
        if continues {
            out.last_mut().unwrap().items.push(item);
        } else {
            out.push(Transaction {
                id: Transaction::make_id(&rec.unit, &item.entity, rec.span),
                entity: item.entity.clone(),
                block,
                items: vec![item],
                unit: rec.unit,
                span: rec.span,
            });
        }
    }
    for t in &mut out {
        t.items.sort_by(|a, b| {
            (a.line, a.kind.code(), &a.name).cmp(&(b.line, b.kind.code(), &b.name))
        });
    }
    let mut ids = std::collections::HashMap::new();
    for t in &mut out {
        let n = ids.entry(t.id.clone()).or_insert(0usize);
        *n += 1;
        if *n > 1 {
            t.id = format!("{}~{n}", t.id);
        }
    }
    out.sort_by(|a, b| a.unit.cmp(&b.unit));
    let mut start = 0;
    while start < out.len() {
        let end = start + out[start..].iter().take_while(|t| t.unit == out[start].unit).count();
        sort_transactions(&mut out[start..end]);
        start = end;
    }
    Ok(out)
}
