//! Query parsing, pattern matching and code skeleton assembly.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::abstraction::ItemKind;
use crate::corpus::{LineIndex, SourceUnit, TermList};
use crate::error::{Error, Result};
use crate::mine::SequencePattern;
use crate::store::{attr_escape, CentralRepository, MinedRepository};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySketch {
    pub raw: String,
    pub name_fragment: String,
    pub kind_hint: Option<ItemKind>,
    /// The query is written as a complete item name, such as
    /// `java.sql.Connection` or `close():void`.
    pub exact: bool,
}

pub fn parse_query(raw: &str) -> Result<QuerySketch> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let (body, creation) = match trimmed.strip_prefix("new ") {
        Some(rest) => (rest.trim_start(), true),
        None => (trimmed, false),
    };
    let call = body.ends_with("()") || body.find('(').is_some_and(|o| body[o..].contains(')'));
    let kind_hint = if creation {
        Some(ItemKind::Ci)
    } else if call {
        Some(ItemKind::Mi)
    } else {
        None
    };
    let fragment = body.split('(').next().unwrap_or(body).trim();
    if fragment.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let exact = !creation
        && (trimmed.contains("):")
            || (trimmed.contains('.') && !trimmed.contains('(') && !trimmed.contains(char::is_whitespace)));
    Ok(QuerySketch {
        raw: trimmed.to_string(),
        name_fragment: fragment.to_string(),
        kind_hint,
        exact,
    })
}

/// Text after the last `.` of the part before any `(`.
pub fn simple_name(name: &str) -> &str {
    let head = name.split('(').next().unwrap_or(name);
    head.rsplit('.').next().unwrap_or(head)
}

/// 3: exact name (respecting the kind hint), 2: simple name equals the
/// fragment, 1: case-insensitive substring, 0: no match.
pub fn match_strength(sketch: &QuerySketch, kind: ItemKind, name: &str) -> u8 {
    let kind_ok = sketch.kind_hint.is_none_or(|k| k == kind);
    if kind_ok && (name == sketch.raw || (sketch.kind_hint.is_some() && simple_name(name) == sketch.name_fragment)) {
        return 3;
    }
    if simple_name(name) == sketch.name_fragment {
        return 2;
    }
    if name
        .to_lowercase()
        .contains(&sketch.name_fragment.to_lowercase())
    {
        return 1;
    }
    0
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationEntry {
    pub pattern: SequencePattern,
    pub match_strength: u8,
    /// The best-matching item is the pattern's first item.
    pub first_item: bool,
    /// First exemplar transaction, used for the skeleton.
    pub skeleton_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub query: QuerySketch,
    pub entries: Vec<RecommendationEntry>,
    pub elapsed: Duration,
}

impl Recommendation {
    pub fn elapsed_ms(&self) -> f64 {
        self.elapsed.as_secs_f64() * 1000.0
    }
}

/// Entry order: match strength descending; within strength 3, patterns
/// whose first item matches lead; then score descending, rank ascending.
pub fn entry_order(a: &RecommendationEntry, b: &RecommendationEntry) -> std::cmp::Ordering {
    let lead = |e: &RecommendationEntry| e.match_strength == 3 && e.first_item;
    b.match_strength
        .cmp(&a.match_strength)
        .then(lead(b).cmp(&lead(a)))
        .then(b.pattern.score.cmp(&a.pattern.score))
        .then(a.pattern.rank.cmp(&b.pattern.rank))
}

pub fn match_patterns(sketch: &QuerySketch, repo: &MinedRepository, top_k: usize) -> Result<Recommendation> {
    if top_k == 0 {
        return Err(Error::Config("top_k must be at least 1".into()));
    }
    let started = Instant::now();
    let strengths: Vec<u8> = repo
        .vocabulary()
        .iter()
        .map(|i| match_strength(sketch, i.kind, &i.name))
        .collect();
    // (strength, first item, score, rank, index); rank is unique, so this
    // key gives a total order.
    let mut candidates: Vec<(u8, bool, u64, usize, usize)> = Vec::new();
    for (idx, p) in repo.patterns().iter().enumerate() {
        let ids = repo.encoded_items(idx);
        let best = ids.iter().map(|&i| strengths[i as usize]).max().unwrap_or(0);
        if best > 0 {
            let first = strengths[ids[0] as usize] == best;
            candidates.push((best, first && best == 3, p.score, p.rank, idx));
        }
    }
    let key = |c: &(u8, bool, u64, usize, usize)| {
        (std::cmp::Reverse(c.0), std::cmp::Reverse(c.1), std::cmp::Reverse(c.2), c.3)
    };
    if candidates.len() > top_k {
        candidates.select_nth_unstable_by_key(top_k - 1, key);
        candidates.truncate(top_k);
    }
    candidates.sort_unstable_by_key(key);
    let entries = candidates
        .into_iter()
        .map(|(strength, _, _, _, idx)| {
            let p = &repo.patterns()[idx];
            let ids = repo.encoded_items(idx);
            RecommendationEntry {
                pattern: p.clone(),
                match_strength: strength,
                first_item: strengths[ids[0] as usize] == strength,
                skeleton_ref: p.exemplars.first().cloned(),
            }
        })
        .collect();
    Ok(Recommendation {
        query: sketch.clone(),
        entries,
        elapsed: started.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSkeleton {
    pub unit_path: String,
    pub entity: String,
    pub span: (usize, usize),
    pub header: Vec<String>,
    /// `(line number, text)` pairs.
    pub lines: Vec<(usize, String)>,
    pub highlights: BTreeSet<usize>,
    /// The source file was unavailable; `lines` list the pattern items.
    pub synthetic: bool,
}

impl CodeSkeleton {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for h in &self.header {
            let _ = writeln!(out, "// {h}");
        }
        for (n, text) in &self.lines {
            let mark = if self.highlights.contains(n) { '>' } else { ' ' };
            let _ = writeln!(out, "{mark}{n:>5} | {text}");
        }
        out
    }
}

fn skeleton_header(p: &SequencePattern, unit: &str, entity: &str, synthetic: bool) -> Vec<String> {
    let mut header = vec![
        format!("pattern: {}", p.render()),
        format!(
            "score {}  support {}  confidence {:.6}  rank {}",
            p.score, p.support, p.confidence, p.rank
        ),
        format!("from {unit} ({entity})"),
    ];
    if synthetic {
        header.push("source unavailable; showing pattern items".into());
    }
    header
}

/// Builds a skeleton from the chosen exemplar of `pattern`: its block lines
/// read verbatim, with the lines holding pattern items highlighted.
///
/// Falls back to a synthetic skeleton, one line per pattern item, when the
/// source file is missing or no longer matches its recorded digest.
pub fn assemble_skeleton(
    pattern: &SequencePattern,
    central: &CentralRepository,
    exemplar_choice: usize,
) -> Result<CodeSkeleton> {
    let id = pattern.exemplars.get(exemplar_choice).ok_or(Error::Range {
        index: exemplar_choice,
        available: pattern.exemplars.len(),
    })?;
    let tx = central
        .transaction(id)
        .ok_or_else(|| Error::UnknownTransaction(id.clone()))?;
    let unit = central
        .manifest
        .units
        .iter()
        .find(|u| u.key() == tx.unit)
        .ok_or_else(|| Error::Consistency(format!("transaction {id:?} has no unit")))?;
    let wanted: Vec<(ItemKind, &str)> = pattern.items.iter().map(|i| (i.kind, i.name.as_str())).collect();
    let item_line = |kind: ItemKind, name: &str| {
        tx.items
            .iter()
            .find(|i| i.kind == kind && i.name == name)
            .map(|i| i.line)
    };
    let highlights: BTreeSet<usize> = tx
        .items
        .iter()
        .filter(|i| wanted.contains(&(i.kind, i.name.as_str())))
        .map(|i| i.line)
        .collect();

    let source = central
        .manifest
        .unit_file(&unit.source_id, &unit.path)
        .and_then(|path| std::fs::read(path).ok())
        .map(|bytes| SourceUnit::from_bytes(unit.path.clone(), unit.source_id.clone(), &bytes))
        .filter(|su| su.digest == unit.digest);

    if let Some(su) = source {
        let index = LineIndex::new(&su.text);
        let lines: Vec<(usize, String)> = (tx.span.0..=tx.span.1)
            .map_while(|n| index.line(n, &su.text).map(|l| (n, l.to_string())))
            .collect();
        return Ok(CodeSkeleton {
            unit_path: tx.unit.clone(),
            entity: tx.entity.clone(),
            span: tx.span,
            header: skeleton_header(pattern, &tx.unit, &tx.entity, false),
            lines,
            highlights,
            synthetic: false,
        });
    }
    let lines = pattern
        .items
        .iter()
        .map(|i| (item_line(i.kind, &i.name).unwrap_or(tx.span.0), i.to_string()))
        .collect();
    Ok(CodeSkeleton {
        unit_path: tx.unit.clone(),
        entity: tx.entity.clone(),
        span: tx.span,
        header: skeleton_header(pattern, &tx.unit, &tx.entity, true),
        lines,
        highlights,
        synthetic: true,
    })
}

/// Terms starting with `prefix` (case-insensitive), in list order.
pub fn suggest_terms(prefix: &str, terms: &TermList, limit: usize) -> Vec<String> {
    let prefix = prefix.to_lowercase();
    terms
        .terms
        .iter()
        .filter(|t| t.to_lowercase().starts_with(&prefix))
        .take(limit)
        .cloned()
        .collect()
}

/// One line per entry: rank, score, support, confidence, pattern.
pub fn render_text(rec: &Recommendation) -> String {
    let mut out = String::new();
    for e in &rec.entries {
        let p = &e.pattern;
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.6}\t{}",
            p.rank,
            p.score,
            p.support,
            p.confidence,
            p.render()
        );
    }
    out
}

pub fn render_xml(rec: &Recommendation, skeleton: Option<&CodeSkeleton>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<recommendation query=\"{}\" count=\"{}\">",
        attr_escape(&rec.query.raw),
        rec.entries.len()
    );
    for e in &rec.entries {
        let p = &e.pattern;
        let _ = writeln!(
            out,
            "  <pattern k=\"{}\" support=\"{}\" confidence=\"{:.6}\" score=\"{}\" rank=\"{}\" match=\"{}\">",
            p.k, p.support, p.confidence, p.score, p.rank, e.match_strength
        );
        for i in &p.items {
            let _ = writeln!(
                out,
                "    <item kind=\"{}\" name=\"{}\"/>",
                i.kind,
                attr_escape(&i.name)
            );
        }
        for x in &p.exemplars {
            let _ = writeln!(out, "    <exemplar transaction=\"{}\"/>", attr_escape(x));
        }
        let _ = writeln!(out, "  </pattern>");
    }
    if let Some(s) = skeleton {
        let _ = writeln!(
            out,
            "  <skeleton unit=\"{}\" entity=\"{}\" start=\"{}\" end=\"{}\" synthetic=\"{}\">",
            attr_escape(&s.unit_path),
            attr_escape(&s.entity),
            s.span.0,
            s.span.1,
            s.synthetic
        );
        for (n, text) in &s.lines {
            let _ = writeln!(
                out,
                "    <line n=\"{n}\" highlight=\"{}\">{}</line>",
                s.highlights.contains(n),
                attr_escape(text)
            );
        }
        let _ = writeln!(out, "  </skeleton>");
    }
    out.push_str("</recommendation>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mine::{MiningConfig, PatternItem};
    use crate::store::Provenance;

    fn repo(patterns: Vec<(Vec<(ItemKind, &str)>, usize)>) -> MinedRepository {
        let ps = patterns
            .into_iter()
            .map(|(items, support)| {
                let items = items.into_iter().map(|(k, n)| PatternItem::new(k, n)).collect();
                SequencePattern::new(items, support, 1.0)
            })
            .collect();
        let ps = crate::mine::rank_patterns(ps);
        MinedRepository::new(
            ps,
            &MiningConfig::default(),
            Provenance {
                central_digest: String::new(),
                sequences: 10,
            },
        )
        .unwrap()
    }

    #[test]
    fn query_parsing() {
        let q = parse_query("getConnection()").unwrap();
        assert_eq!((q.name_fragment.as_str(), q.kind_hint), ("getConnection", Some(ItemKind::Mi)));
        let q = parse_query("Connection").unwrap();
        assert_eq!((q.name_fragment.as_str(), q.kind_hint, q.exact), ("Connection", None, false));
        assert!(matches!(parse_query("   "), Err(Error::EmptyQuery)));
        let q = parse_query(" new ArrayList() ").unwrap();
        assert_eq!((q.name_fragment.as_str(), q.kind_hint), ("ArrayList", Some(ItemKind::Ci)));
        let q = parse_query("setText(java.lang.String)").unwrap();
        assert_eq!((q.name_fragment.as_str(), q.kind_hint), ("setText", Some(ItemKind::Mi)));
        assert!(parse_query("java.sql.Connection").unwrap().exact);
        assert!(parse_query("close():void").unwrap().exact);
        assert!(matches!(parse_query("()"), Err(Error::EmptyQuery)));
    }

    #[test]
    fn simple_names() {
        assert_eq!(simple_name("java.sql.Connection"), "Connection");
        assert_eq!(simple_name("getConnection(arity=0):?"), "getConnection");
        assert_eq!(simple_name("method_A(java.lang.String):void"), "method_A");
        assert_eq!(simple_name("x"), "x");
    }

    #[test]
    fn planted_pair_outranks_single() {
        let get = (ItemKind::Mi, "getConnection(arity=0):?");
        let create = (ItemKind::Mi, "createStatement(arity=0):?");
        let r = repo(vec![(vec![get], 8), (vec![get, create], 8), (vec![create], 8)]);
        let rec = match_patterns(&parse_query("getConnection()").unwrap(), &r, 10).unwrap();
        assert_eq!(rec.entries.len(), 2);
        assert_eq!(rec.entries[0].pattern.k, 2);
        assert_eq!(rec.entries[0].pattern.score, 16);
        assert_eq!(rec.entries[0].match_strength, 3);
    }

    #[test]
    fn tiers_order_connection_query() {
        let r = repo(vec![
            (vec![(ItemKind::Mi, "getConnection(arity=0):?")], 9),
            (vec![(ItemKind::Fd, "java.sql.Connection")], 3),
            (vec![(ItemKind::Id, "java.sql.Connection")], 2),
        ]);
        let rec = match_patterns(&parse_query("Connection").unwrap(), &r, 10).unwrap();
        let tiers: Vec<_> = rec.entries.iter().map(|e| e.match_strength).collect();
        assert_eq!(tiers, [2, 2, 1]);
        assert_eq!(rec.entries[0].pattern.items[0].kind, ItemKind::Fd);
        assert!(match_patterns(&parse_query("Nothing").unwrap(), &r, 10).unwrap().entries.is_empty());
        assert_eq!(match_patterns(&parse_query("Connection").unwrap(), &r, 1).unwrap().entries.len(), 1);
    }

    #[test]
    fn first_item_matches_lead_tier_three() {
        let q = (ItemKind::Mi, "q(arity=0):?");
        let z = (ItemKind::Mi, "z(arity=0):?");
        let r = repo(vec![(vec![z, q], 5), (vec![q, z], 4)]);
        let rec = match_patterns(&parse_query("q()").unwrap(), &r, 10).unwrap();
        assert!(rec.entries[0].first_item);
        assert_eq!(rec.entries[0].pattern.support, 4);
    }

    #[test]
    fn term_suggestions() {
        let terms = TermList::new("t", ["Connection".to_string(), "XMLParser".to_string()]);
        assert_eq!(suggest_terms("Conn", &terms, 5), ["Connection"]);
        assert_eq!(suggest_terms("conn", &terms, 5), ["Connection"]);
        assert_eq!(suggest_terms("", &terms, 2), ["Connection", "XMLParser"]);
        assert!(suggest_terms("zzz", &terms, 5).is_empty());
    }

    #[test]
    fn text_rendering() {
        let r = repo(vec![(vec![(ItemKind::Mi, "a()"), (ItemKind::Ci, "B")], 2)]);
        let rec = match_patterns(&parse_query("a()").unwrap(), &r, 10).unwrap();
        assert_eq!(render_text(&rec), "1\t4\t2\t1.000000\tMI a() → CI B\n");
        assert!(render_xml(&rec, None).contains("<item kind=\"CI\" name=\"B\"/>"));
    }
}
