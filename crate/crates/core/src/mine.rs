//! Sequential pattern mining over block transactions.
//!
//! Each transaction becomes one sequence of interned item ids. Frequent
//! sequences are found with PrefixSpan: pattern growth over pseudo-projected
//! databases, where a projection is a list of `(sequence, offset)` pairs
//! pointing just past the first occurrence of the last prefix item. Elements
//! are single items; a sequence supports a pattern when the pattern occurs
//! in it as a subsequence (gaps allowed), counted once per sequence.
//!
//! Patterns are scored `k × support`, annotated with a prefix-rule
//! confidence and ranked under a total order.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use crate::abstraction::{ItemKind, Transaction};
use crate::error::{Error, Result};

pub type ItemId = u32;

/// Item identity for mining: kind and name, location excluded.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternItem {
    pub kind: ItemKind,
    pub name: String,
}

impl PatternItem {
    pub fn new(kind: ItemKind, name: impl Into<String>) -> Self {
        Self {
            kind,
            name: name.into(),
        }
    }
}

impl fmt::Display for PatternItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.name)
    }
}

/// Bijective interning table between pattern items and dense ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionary {
    items: Vec<PatternItem>,
    ids: HashMap<PatternItem, ItemId>,
}

impl Dictionary {
    pub fn intern(&mut self, item: PatternItem) -> ItemId {
        if let Some(&id) = self.ids.get(&item) {
            return id;
        }
        let id = self.items.len() as ItemId;
        self.ids.insert(item.clone(), id);
        self.items.push(item);
        id
    }

    pub fn id(&self, item: &PatternItem) -> Option<ItemId> {
        self.ids.get(item).copied()
    }

    pub fn item(&self, id: ItemId) -> &PatternItem {
        &self.items[id as usize]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SequenceDb {
    pub dictionary: Dictionary,
    /// `(transaction id, item ids)` in transaction order.
    pub sequences: Vec<(String, Vec<ItemId>)>,
}

impl SequenceDb {
    pub fn size(&self) -> usize {
        self.sequences.len()
    }

    /// Builds a database directly from item-id sequences, naming each
    /// sequence `S1`, `S2`, ... and interning ids as `MI` items named by
    /// their number. Meant for tests and benchmarks.
    pub fn from_id_sequences(seqs: &[Vec<ItemId>]) -> Self {
        let mut db = SequenceDb::default();
        for (n, s) in seqs.iter().enumerate() {
            let ids = s
                .iter()
                .map(|&i| db.dictionary.intern(PatternItem::new(ItemKind::Mi, i.to_string())))
                .collect();
            db.sequences.push((format!("S{}", n + 1), ids));
        }
        db
    }
}

pub fn build_sequence_db(transactions: &[Transaction]) -> Result<SequenceDb> {
    if transactions.is_empty() {
        return Err(Error::EmptyCorpus("no transactions to mine".into()));
    }
    let mut db = SequenceDb::default();
    for t in transactions {
        if t.items.is_empty() {
            continue;
        }
        let ids = t
            .items
            .iter()
            .map(|i| db.dictionary.intern(PatternItem::new(i.kind, i.name.clone())))
            .collect();
        db.sequences.push((t.id.clone(), ids));
    }
    if db.sequences.is_empty() {
        return Err(Error::EmptyCorpus("every transaction is empty".into()));
    }
    Ok(db)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MiningConfig {
    /// Absolute support threshold.
    pub min_support: usize,
    pub max_k: usize,
    pub max_exemplars: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            min_support: 2,
            max_k: 6,
            max_exemplars: 3,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_support == 0 || self.max_k == 0 || self.max_exemplars == 0 {
            return Err(Error::Config(
                "min_support, max_k and max_exemplars must all be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A pseudo-projected database: suffix start offsets into the base sequences.
#[derive(Debug, Clone)]
pub struct ProjectedDb<'a> {
    db: &'a SequenceDb,
    entries: Vec<(usize, usize)>,
}

impl<'a> ProjectedDb<'a> {
    pub fn full(db: &'a SequenceDb) -> Self {
        Self {
            db,
            entries: (0..db.size()).map(|s| (s, 0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Indices of the base sequences still present, in database order.
    pub fn sequence_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(s, _)| s)
    }

    pub fn suffixes(&self) -> impl Iterator<Item = &'a [ItemId]> + '_ {
        self.entries
            .iter()
            .map(|&(s, off)| &self.db.sequences[s].1[off..])
    }

    /// Frequency of every item in the suffixes, each sequence counted once.
    fn item_supports(&self) -> Vec<(ItemId, usize)> {
        let mut counts: HashMap<ItemId, (usize, usize)> = HashMap::new();
        for &(s, off) in &self.entries {
            for &item in &self.db.sequences[s].1[off..] {
                let e = counts.entry(item).or_insert((0, usize::MAX));
                if e.1 != s {
                    e.1 = s;
                    e.0 += 1;
                }
            }
        }
        let mut out: Vec<_> = counts.into_iter().map(|(i, (c, _))| (i, c)).collect();
        out.sort_unstable();
        out
    }
}

/// Keeps the sequences whose suffix contains `item`, advanced past its
/// first occurrence.
pub fn project<'a>(view: &ProjectedDb<'a>, item: ItemId) -> ProjectedDb<'a> {
    let entries = view
        .entries
        .iter()
        .filter_map(|&(s, off)| {
            view.db.sequences[s].1[off..]
                .iter()
                .position(|&i| i == item)
                .map(|p| (s, off + p + 1))
        })
        .collect();
    ProjectedDb {
        db: view.db,
        entries,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrequentSequence {
    pub items: Vec<ItemId>,
    pub support: usize,
}

fn grow(
    view: &ProjectedDb<'_>,
    prefix: &mut Vec<ItemId>,
    config: &MiningConfig,
    out: &mut Vec<FrequentSequence>,
) {
    if prefix.len() >= config.max_k {
        return;
    }
    for (item, support) in view.item_supports() {
        if support < config.min_support {
            continue;
        }
        prefix.push(item);
        out.push(FrequentSequence {
            items: prefix.clone(),
            support,
        });
        if prefix.len() < config.max_k {
            grow(&project(view, item), prefix, config, out);
        }
        prefix.pop();
    }
}

/// Every sequence of length `1..=max_k` with support at least
/// `min_support`, in depth-first pattern-growth order.
pub fn prefixspan(db: &SequenceDb, config: &MiningConfig) -> Vec<FrequentSequence> {
    let mut out = Vec::new();
    grow(&ProjectedDb::full(db), &mut Vec::new(), config, &mut out);
    out
}

/// Same result and order as [`prefixspan`], with the first-level
/// projections mined in parallel.
pub fn prefixspan_parallel(db: &SequenceDb, config: &MiningConfig) -> Vec<FrequentSequence> {
    let root = ProjectedDb::full(db);
    let firsts: Vec<(ItemId, usize)> = root
        .item_supports()
        .into_iter()
        .filter(|&(_, s)| s >= config.min_support)
        .collect();
    firsts
        .par_iter()
        .map(|&(item, support)| {
            let mut out = vec![FrequentSequence {
                items: vec![item],
                support,
            }];
            if config.max_k > 1 {
                grow(&project(&root, item), &mut vec![item], config, &mut out);
            }
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

pub fn score_pattern(k: usize, support: usize) -> u64 {
    k as u64 * support as u64
}

/// `support / support(prefix of length k-1)`, or `support / db_size` for
/// single items.
pub fn compute_confidence(
    items: &[ItemId],
    support: usize,
    supports: &HashMap<Vec<ItemId>, usize>,
    db_size: usize,
) -> Result<f64> {
    let denominator = if items.len() <= 1 {
        db_size
    } else {
        *supports.get(&items[..items.len() - 1]).ok_or_else(|| {
            Error::Consistency(format!("prefix of {items:?} missing from mined set"))
        })?
    };
    if denominator == 0 || support > denominator {
        return Err(Error::Consistency(format!(
            "support {support} exceeds prefix support {denominator}"
        )));
    }
    Ok(support as f64 / denominator as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequencePattern {
    pub items: Vec<PatternItem>,
    pub k: usize,
    pub support: usize,
    pub confidence: f64,
    pub score: u64,
    /// 1-based; 0 until ranked.
    pub rank: usize,
    /// Ids of supporting transactions, database order.
    pub exemplars: Vec<String>,
}

impl SequencePattern {
    pub fn new(items: Vec<PatternItem>, support: usize, confidence: f64) -> Self {
        let k = items.len();
        Self {
            items,
            k,
            support,
            confidence,
            score: score_pattern(k, support),
            rank: 0,
            exemplars: Vec::new(),
        }
    }

    /// `KIND name → KIND name → ...`
    pub fn render(&self) -> String {
        self.items
            .iter()
            .map(PatternItem::to_string)
            .collect::<Vec<_>>()
            .join(" → ")
    }
}

/// Score descending, then support descending, k descending, item names
/// ascending, item kinds ascending.
pub fn compare_patterns(a: &SequencePattern, b: &SequencePattern) -> Ordering {
    b.score
        .cmp(&a.score)
        .then(b.support.cmp(&a.support))
        .then(b.k.cmp(&a.k))
        .then_with(|| {
            a.items
                .iter()
                .map(|i| i.name.as_str())
                .cmp(b.items.iter().map(|i| i.name.as_str()))
        })
        .then_with(|| a.items.iter().map(|i| i.kind).cmp(b.items.iter().map(|i| i.kind)))
}

pub fn rank_patterns(mut patterns: Vec<SequencePattern>) -> Vec<SequencePattern> {
    patterns.sort_by(compare_patterns);
    for (i, p) in patterns.iter_mut().enumerate() {
        p.rank = i + 1;
    }
    patterns
}

fn contains_subsequence(seq: &[ItemId], pattern: &[ItemId]) -> bool {
    let mut it = seq.iter();
    pattern.iter().all(|p| it.any(|s| s == p))
}

/// Records up to `max_exemplars` supporting transaction ids per pattern,
/// taking the first ones in database order.
pub fn attach_snippets(patterns: &mut [SequencePattern], db: &SequenceDb, max_exemplars: usize) {
    for p in patterns {
        let ids: Option<Vec<ItemId>> = p.items.iter().map(|i| db.dictionary.id(i)).collect();
        p.exemplars = match ids {
            Some(ids) => db
                .sequences
                .iter()
                .filter(|(_, seq)| contains_subsequence(seq, &ids))
                .take(max_exemplars)
                .map(|(id, _)| id.clone())
                .collect(),
            None => Vec::new(),
        };
    }
}

/// Full mining pass: PrefixSpan, scoring, confidence, ranking, exemplars.
pub fn mine_patterns(db: &SequenceDb, config: &MiningConfig, parallel: bool) -> Result<Vec<SequencePattern>> {
    config.validate()?;
    let frequent = if parallel {
        prefixspan_parallel(db, config)
    } else {
        prefixspan(db, config)
    };
    let supports: HashMap<Vec<ItemId>, usize> = frequent
        .iter()
        .map(|f| (f.items.clone(), f.support))
        .collect();
    let mut patterns = frequent
        .iter()
        .map(|f| {
            let confidence = compute_confidence(&f.items, f.support, &supports, db.size())?;
            let items = f.items.iter().map(|&i| db.dictionary.item(i).clone()).collect();
            Ok(SequencePattern::new(items, f.support, confidence))
        })
        .collect::<Result<Vec<_>>>()?;
    attach_snippets(&mut patterns, db, config.max_exemplars);
    Ok(rank_patterns(patterns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::{BlockKind, Item};
    use proptest::prelude::*;
    use std::collections::{BTreeMap, BTreeSet};

    /// Independent reference: every distinct subsequence of every sequence,
    /// counted once per sequence.
    fn brute_force(seqs: &[Vec<ItemId>], min_support: usize, max_k: usize) -> BTreeMap<Vec<ItemId>, usize> {
        let mut counts: BTreeMap<Vec<ItemId>, usize> = BTreeMap::new();
        for s in seqs {
            let mut subs = BTreeSet::new();
            for mask in 1u32..(1 << s.len()) {
                if mask.count_ones() as usize > max_k {
                    continue;
                }
                let sub: Vec<_> = (0..s.len()).filter(|b| mask & (1 << b) != 0).map(|b| s[b]).collect();
                subs.insert(sub);
            }
            for sub in subs {
                *counts.entry(sub).or_default() += 1;
            }
        }
        counts.retain(|_, c| *c >= min_support);
        counts
    }

    fn as_map(db: &SequenceDb, found: &[FrequentSequence]) -> BTreeMap<Vec<ItemId>, usize> {
        // Translate interned ids back to the original symbols.
        found
            .iter()
            .map(|f| {
                let items = f
                    .items
                    .iter()
                    .map(|&i| db.dictionary.item(i).name.parse::<ItemId>().unwrap())
                    .collect();
                (items, f.support)
            })
            .collect()
    }

    const A: ItemId = 0;
    const B: ItemId = 1;
    const C: ItemId = 2;

    fn fixture() -> SequenceDb {
        SequenceDb::from_id_sequences(&[vec![A, B, C], vec![A, C], vec![B, C]])
    }

    fn cfg(min_support: usize) -> MiningConfig {
        MiningConfig {
            min_support,
            ..MiningConfig::default()
        }
    }

    fn tx(id: &str, names: &[&str]) -> Transaction {
        Transaction {
            id: id.into(),
            entity: "E".into(),
            block: BlockKind::Method,
            items: names
                .iter()
                .enumerate()
                .map(|(n, s)| Item::new(ItemKind::Mi, *s, "E", n + 1))
                .collect(),
            unit: "u".into(),
            span: (1, names.len().max(1)),
        }
    }

    #[test]
    fn sequence_db_construction() {
        let db = build_sequence_db(&[tx("t1", &["a"])]).unwrap();
        assert_eq!((db.size(), db.dictionary.len()), (1, 1));
        let db = build_sequence_db(&[tx("t1", &["x()", "y"]), tx("t2", &["x()"])]).unwrap();
        assert_eq!(db.dictionary.len(), 2);
        assert_eq!(db.sequences[1].1, [0]);
        let db = fixture();
        assert_eq!((db.size(), db.dictionary.len()), (3, 3));
        assert!(matches!(build_sequence_db(&[]), Err(Error::EmptyCorpus(_))));
    }

    #[test]
    fn fixture_oracle_values() {
        // Frozen from the brute-force oracle.
        let oracle = brute_force(&[vec![A, B, C], vec![A, C], vec![B, C]], 2, 6);
        let expected: BTreeMap<Vec<ItemId>, usize> = [
            (vec![A], 2),
            (vec![B], 2),
            (vec![C], 3),
            (vec![A, C], 2),
            (vec![B, C], 2),
        ]
        .into_iter()
        .collect();
        assert_eq!(oracle, expected);
        let db = fixture();
        assert_eq!(as_map(&db, &prefixspan(&db, &cfg(2))), expected);
        assert!(prefixspan(&db, &cfg(4)).is_empty());
    }

    #[test]
    fn single_item_db() {
        let db = SequenceDb::from_id_sequences(&[vec![A]]);
        assert_eq!(
            prefixspan(&db, &cfg(1)),
            [FrequentSequence {
                items: vec![0],
                support: 1
            }]
        );
    }

    #[test]
    fn projection() {
        let db = SequenceDb::from_id_sequences(&[vec![A, B, C]]);
        let p = project(&ProjectedDb::full(&db), 0);
        assert_eq!(p.suffixes().collect::<Vec<_>>(), [&[1, 2][..]]);

        let db = SequenceDb::from_id_sequences(&[vec![A, B, A, C]]);
        let p = project(&ProjectedDb::full(&db), 0);
        assert_eq!(p.suffixes().collect::<Vec<_>>(), [&[1, 0, 2][..]]);

        let db = SequenceDb::from_id_sequences(&[vec![A], vec![B, C]]);
        let p = project(&ProjectedDb::full(&db), db.dictionary.id(&PatternItem::new(ItemKind::Mi, "0")).unwrap());
        assert_eq!(p.len(), 1);
        assert_eq!(p.sequence_indices().collect::<Vec<_>>(), [0]);
        assert_eq!(p.suffixes().next().unwrap(), &[] as &[ItemId]);
    }

    #[test]
    fn scores() {
        assert_eq!(score_pattern(1, 1), 1);
        assert_eq!(score_pattern(3, 2), 6);
        assert!(score_pattern(2, 2) > score_pattern(1, 3));
    }

    #[test]
    fn fixture_confidence_ranking_and_exemplars() {
        let db = fixture();
        let ranked = mine_patterns(&db, &cfg(2), false).unwrap();
        let summary: Vec<_> = ranked
            .iter()
            .map(|p| {
                let names: Vec<_> = p.items.iter().map(|i| i.name.as_str()).collect();
                (names.join(","), p.score, p.rank, p.confidence)
            })
            .collect();
        assert_eq!(
            summary,
            [
                ("0,2".to_string(), 4, 1, 1.0),
                ("1,2".to_string(), 4, 2, 1.0),
                ("2".to_string(), 3, 3, 1.0),
                ("0".to_string(), 2, 4, 2.0 / 3.0),
                ("1".to_string(), 2, 5, 2.0 / 3.0),
            ]
        );
        assert_eq!(ranked[0].exemplars, ["S1", "S2"]);
        assert_eq!(ranked[2].exemplars, ["S1", "S2", "S3"]);
    }

    #[test]
    fn confidence_requires_prefix() {
        let supports = HashMap::new();
        assert!(compute_confidence(&[0, 1], 1, &supports, 3).is_err());
        assert_eq!(compute_confidence(&[0], 2, &supports, 3).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn ranking_ties_fall_back_to_names() {
        let mk = |n: &str| SequencePattern::new(vec![PatternItem::new(ItemKind::Mi, n)], 2, 1.0);
        let ranked = rank_patterns(vec![mk("zeta"), mk("alpha")]);
        assert_eq!(ranked[0].items[0].name, "alpha");
        assert_eq!(ranked[1].rank, 2);
        assert_eq!(rank_patterns(vec![mk("x")])[0].rank, 1);
    }

    #[test]
    fn exemplar_truncation() {
        let seqs: Vec<Vec<ItemId>> = (0..8).map(|_| vec![A, B]).collect();
        let db = SequenceDb::from_id_sequences(&seqs);
        let mut ps = vec![SequencePattern::new(vec![PatternItem::new(ItemKind::Mi, "0")], 8, 1.0)];
        attach_snippets(&mut ps, &db, 3);
        assert_eq!(ps[0].exemplars, ["S1", "S2", "S3"]);
        let db = SequenceDb::from_id_sequences(&[vec![B], vec![A]]);
        attach_snippets(&mut ps, &db, 3);
        assert_eq!(ps[0].exemplars, ["S2"]);
    }

    #[test]
    fn repeated_items_count_once_per_sequence() {
        let db = SequenceDb::from_id_sequences(&[vec![A, A, A], vec![A]]);
        let found = as_map(&db, &prefixspan(&db, &cfg(1)));
        assert_eq!(found[&vec![A]], 2);
        assert_eq!(found[&vec![A, A]], 1);
        assert_eq!(found[&vec![A, A, A]], 1);
    }

    fn small_db() -> impl Strategy<Value = Vec<Vec<ItemId>>> {
        prop::collection::vec(prop::collection::vec(0u32..6, 1..=8), 1..=10)
    }

    proptest! {
        #[test]
        fn prefixspan_matches_brute_force(seqs in small_db(), min_support in 1usize..=3, max_k in 1usize..=8) {
            let db = SequenceDb::from_id_sequences(&seqs);
            let config = MiningConfig { min_support, max_k, max_exemplars: 3 };
            let found = prefixspan(&db, &config);
            prop_assert_eq!(as_map(&db, &found), brute_force(&seqs, min_support, max_k));
            prop_assert_eq!(prefixspan_parallel(&db, &config), found);
        }

        #[test]
        fn mined_set_laws(seqs in small_db(), min_support in 1usize..=3) {
            let db = SequenceDb::from_id_sequences(&seqs);
            let config = MiningConfig { min_support, ..MiningConfig::default() };
            let found = prefixspan(&db, &config);
            let supports: HashMap<_, _> = found.iter().map(|f| (f.items.clone(), f.support)).collect();
            for f in &found {
                for len in 1..f.items.len() {
                    let prefix = &f.items[..len];
                    // downward closure and anti-monotonicity
                    let ps = supports.get(prefix).copied();
                    prop_assert!(ps.is_some());
                    prop_assert!(f.support <= ps.unwrap());
                }
                prop_assert!(f.support >= 1 && f.support <= db.size());
            }
            for f in found.iter().filter(|f| f.items.len() == 1) {
                let direct = db.sequences.iter().filter(|(_, s)| s.contains(&f.items[0])).count();
                prop_assert_eq!(f.support, direct);
            }
            let ranked = mine_patterns(&db, &config, false).unwrap();
            let mut shuffled = ranked.clone();
            shuffled.reverse();
            prop_assert_eq!(rank_patterns(shuffled), ranked.clone());
            for (i, p) in ranked.iter().enumerate() {
                prop_assert_eq!(p.rank, i + 1);
                prop_assert_eq!(p.score, (p.k * p.support) as u64);
                prop_assert!(p.confidence > 0.0 && p.confidence <= 1.0);
                prop_assert!(!p.exemplars.is_empty());
            }
            for w in ranked.windows(2) {
                prop_assert_ne!(compare_patterns(&w[0], &w[1]), Ordering::Greater);
            }
        }
    }
}
