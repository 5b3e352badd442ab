//! XML persistence for the central repository (manifest plus transactions)
//! and the mined repository (ranked patterns plus exemplar references).
//!
//! Writers emit a fixed layout: two-space indentation, attributes in schema
//! order, LF line endings. Readers are strict: unknown elements or
//! attributes, missing attributes and stray text are rejected.

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use quick_xml::escape::{escape, resolve_predefined_entity};
use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};

use crate::abstraction::extract::sort_transactions;
use crate::abstraction::{BlockKind, Item, ItemKind, Transaction};
use crate::corpus::{digest_bytes, Manifest, SourceDescriptor, SourceKind, TermList, UnitSummary};
use crate::error::{Error, Result};
use crate::mine::{MiningConfig, PatternItem, SequencePattern};

pub const SCHEMA_VERSION: &str = "1";
const CENTRAL_ROOT: &str = "esdp-repository";
const MINED_ROOT: &str = "esdp-mined";
const XML_DECL: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";

/// In-memory form of a central repository document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CentralRepository {
    pub manifest: Manifest,
    /// Grouped by unit in manifest order, canonical order within a unit.
    pub transactions: Vec<Transaction>,
}

impl CentralRepository {
    /// Normalizes the manifest and reorders transactions to document order.
    pub fn new(mut manifest: Manifest, transactions: Vec<Transaction>) -> Result<Self> {
        manifest.normalize();
        let position: HashMap<String, usize> = manifest
            .units
            .iter()
            .enumerate()
            .map(|(i, u)| (u.key(), i))
            .collect();
        let mut grouped: Vec<Vec<Transaction>> = vec![Vec::new(); manifest.units.len()];
        for t in transactions {
            let &i = position.get(&t.unit).ok_or_else(|| {
                Error::Consistency(format!("transaction {:?} belongs to unknown unit {:?}", t.id, t.unit))
            })?;
            grouped[i].push(t);
        }
        for g in &mut grouped {
            sort_transactions(g);
        }
        Ok(Self {
            manifest,
            transactions: grouped.into_iter().flatten().collect(),
        })
    }

    pub fn transaction(&self, id: &str) -> Option<&Transaction> {
        self.transactions.iter().find(|t| t.id == id)
    }

    pub fn method_transactions(&self) -> usize {
        self.transactions
            .iter()
            .filter(|t| t.block == BlockKind::Method)
            .count()
    }
}

pub(crate) fn attr_escape(s: &str) -> Cow<'_, str> {
    let escaped = escape(s);
    if !escaped.chars().any(|c| (c as u32) < 0x20) {
        return escaped;
    }
    let mut out = String::with_capacity(escaped.len() + 8);
    for c in escaped.chars() {
        if (c as u32) < 0x20 {
            let _ = write!(out, "&#{};", c as u32);
        } else {
            out.push(c);
        }
    }
    Cow::Owned(out)
}

/// Appends `<name a="v" ...` to `out`, leaving the tag open.
fn open_tag(out: &mut String, indent: usize, name: &str, attrs: &[(&str, &str)]) {
    out.extend(std::iter::repeat_n("  ", indent));
    out.push('<');
    out.push_str(name);
    for (k, v) in attrs {
        let _ = write!(out, " {k}=\"{}\"", attr_escape(v));
    }
}

fn empty_element(out: &mut String, indent: usize, name: &str, attrs: &[(&str, &str)]) {
    open_tag(out, indent, name, attrs);
    out.push_str("/>\n");
}

fn start_element(out: &mut String, indent: usize, name: &str, attrs: &[(&str, &str)]) {
    open_tag(out, indent, name, attrs);
    out.push_str(">\n");
}

fn end_element(out: &mut String, indent: usize, name: &str) {
    out.extend(std::iter::repeat_n("  ", indent));
    let _ = writeln!(out, "</{name}>");
}

fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn write_central_xml(manifest: &Manifest, transactions: &[Transaction]) -> Result<Vec<u8>> {
    let repo = CentralRepository::new(manifest.clone(), transactions.to_vec())?;
    let m = &repo.manifest;
    m.validate()?;
    let mut out = String::from(XML_DECL);
    let built = format_timestamp(&m.built_at);
    let interval = m.update_interval_days.to_string();
    start_element(
        &mut out,
        0,
        CENTRAL_ROOT,
        &[
            ("version", SCHEMA_VERSION),
            ("built", &built),
            ("digestAlgo", &m.digest_algo),
            ("intervalDays", &interval),
        ],
    );
    for s in &m.sources {
        let root = s.root.to_string_lossy();
        empty_element(
            &mut out,
            1,
            "source",
            &[("id", &s.id), ("kind", s.kind.as_str()), ("root", &root), ("label", &s.label)],
        );
    }
    let mut txs = repo.transactions.iter().peekable();
    for u in &m.units {
        let key = u.key();
        let attrs = [
            ("path", u.path.as_str()),
            ("source", &u.source_id),
            ("package", &u.package),
            ("digest", &u.digest),
        ];
        if txs.peek().is_none_or(|t| t.unit != key) {
            empty_element(&mut out, 1, "unit", &attrs);
            continue;
        }
        start_element(&mut out, 1, "unit", &attrs);
        while let Some(t) = txs.next_if(|t| t.unit == key) {
            if t.items.is_empty() {
                return Err(Error::Consistency(format!("transaction {:?} has no items", t.id)));
            }
            let (start, end) = (t.span.0.to_string(), t.span.1.to_string());
            start_element(
                &mut out,
                2,
                "transaction",
                &[
                    ("id", &t.id),
                    ("entity", &t.entity),
                    ("block", t.block.as_str()),
                    ("start", &start),
                    ("end", &end),
                ],
            );
            for i in &t.items {
                if i.entity != t.entity {
                    return Err(Error::Consistency(format!(
                        "item {} does not belong to transaction entity {:?}",
                        i.render(),
                        t.entity
                    )));
                }
                let line = i.line.to_string();
                empty_element(
                    &mut out,
                    3,
                    "item",
                    &[("kind", i.kind.code()), ("name", &i.name), ("line", &line)],
                );
            }
            end_element(&mut out, 2, "transaction");
        }
        end_element(&mut out, 1, "unit");
    }
    for tl in &m.terms {
        if tl.terms.is_empty() {
            empty_element(&mut out, 1, "terms", &[("source", &tl.source_id)]);
            continue;
        }
        start_element(&mut out, 1, "terms", &[("source", &tl.source_id)]);
        for term in &tl.terms {
            let _ = writeln!(out, "    <term>{}</term>", attr_escape(term));
        }
        end_element(&mut out, 1, "terms");
    }
    end_element(&mut out, 0, CENTRAL_ROOT);
    Ok(out.into_bytes())
}

/// Digest of a central document with its root start tag excluded, so the
/// value does not depend on the build timestamp.
pub fn central_digest(bytes: &[u8]) -> String {
    let text = String::from_utf8_lossy(bytes);
    let body = text
        .find(&format!("<{CENTRAL_ROOT}"))
        .and_then(|at| text[at..].find('>').map(|end| at + end + 1))
        .map_or(&text[..], |start| &text[start..]);
    digest_bytes(body.as_bytes())
}

#[derive(Debug)]
struct Element {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Element>,
    text: String,
    line: usize,
    col: usize,
}

impl Element {
    fn location(&self) -> String {
        format!("<{}> at line {}, column {}", self.name, self.line, self.col)
    }

    fn schema_error(&self, message: impl std::fmt::Display) -> Error {
        Error::Schema(format!("{}: {message}", self.location()))
    }

    /// Checks the attribute set is exactly `allowed` (all required).
    fn expect_attrs(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in &self.attrs {
            if !allowed.contains(&k.as_str()) {
                return Err(self.schema_error(format_args!("unknown attribute {k:?}")));
            }
        }
        for a in allowed {
            self.attr(a)?;
        }
        Ok(())
    }

    fn attr(&self, name: &str) -> Result<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| self.schema_error(format_args!("missing attribute {name:?}")))
    }

    fn number<T: std::str::FromStr>(&self, name: &str) -> Result<T> {
        let raw = self.attr(name)?;
        // Reject signs and padding so the value re-serializes identically.
        if raw.is_empty() || !raw.bytes().all(|b| b.is_ascii_digit()) || (raw.len() > 1 && raw.starts_with('0')) {
            return Err(self.schema_error(format_args!("attribute {name:?} is not a canonical number: {raw:?}")));
        }
        raw.parse()
            .map_err(|_| self.schema_error(format_args!("attribute {name:?} out of range: {raw:?}")))
    }

    fn expect_no_text(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            Ok(())
        } else {
            Err(self.schema_error("unexpected text content"))
        }
    }

    fn expect_leaf(&self) -> Result<()> {
        self.expect_no_text()?;
        match self.children.first() {
            Some(c) => Err(c.schema_error(format_args!("unexpected child of <{}>", self.name))),
            None => Ok(()),
        }
    }

    fn check_version(&self) -> Result<()> {
        let found = self.attr("version")?;
        if found != SCHEMA_VERSION {
            return Err(Error::Version {
                found: found.to_string(),
                expected: SCHEMA_VERSION.to_string(),
            });
        }
        Ok(())
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text.as_bytes()[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let line_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
    let col = String::from_utf8_lossy(&before[line_start..]).chars().count() + 1;
    (line, col)
}

fn parse_error(text: &str, offset: usize, message: impl Into<String>) -> Error {
    let (line, col) = line_col(text, offset);
    Error::XmlParse {
        line,
        col,
        message: message.into(),
    }
}

/// Line/column lookup for offsets that only move forward, so a whole
/// document is scanned once.
struct Cursor<'t> {
    text: &'t str,
    offset: usize,
    line: usize,
    line_start: usize,
}

impl<'t> Cursor<'t> {
    fn new(text: &'t str) -> Self {
        Cursor {
            text,
            offset: 0,
            line: 1,
            line_start: 0,
        }
    }

    fn at(&mut self, offset: usize) -> (usize, usize) {
        let offset = offset.min(self.text.len());
        if offset < self.offset {
            return line_col(self.text, offset);
        }
        let bytes = self.text.as_bytes();
        for (i, &b) in bytes[self.offset..offset].iter().enumerate() {
            if b == b'\n' {
                self.line += 1;
                self.line_start = self.offset + i + 1;
            }
        }
        self.offset = offset;
        let col = String::from_utf8_lossy(&bytes[self.line_start..offset]).chars().count() + 1;
        (self.line, col)
    }
}

fn element_from(start: &BytesStart<'_>, cursor: &mut Cursor<'_>, offset: usize) -> Result<Element> {
    let text = cursor.text;
    let (line, col) = cursor.at(offset);
    let name = start.name().as_ref().to_string();
    let mut attrs = Vec::new();
    for a in start.attributes() {
        let a = a.map_err(|e| parse_error(text, offset, e.to_string()))?;
        let key = a.key.as_ref().to_string();
        let value = a
            .normalized_value(XmlVersion::Implicit1_0)
            .map_err(|e| parse_error(text, offset, e.to_string()))?
            .into_owned();
        attrs.push((key, value));
    }
    Ok(Element {
        name,
        attrs,
        children: Vec::new(),
        text: String::new(),
        line,
        col,
    })
}

/// Parses a whole document into an element tree. No partial result is
/// produced for truncated or malformed input.
fn parse_tree(bytes: &[u8]) -> Result<Element> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let valid = &bytes[..e.valid_up_to()];
        let (line, col) = line_col(std::str::from_utf8(valid).unwrap_or_default(), valid.len());
        Error::XmlParse {
            line,
            col,
            message: "invalid UTF-8".into(),
        }
    })?;
    let mut reader = Reader::from_str(text);
    let mut cursor = Cursor::new(text);
    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;
    loop {
        let offset = reader.buffer_position() as usize;
        let event = reader
            .read_event()
            .map_err(|e| parse_error(text, reader.error_position() as usize, e.to_string()))?;
        let here = |msg: &str| parse_error(text, offset, msg);
        match event {
            Event::Start(s) | Event::Empty(s) if root.is_some() => {
                return Err(parse_error(
                    text,
                    offset,
                    format!("content after the root element: <{}>", s.name().as_ref()),
                ))
            }
            Event::Start(s) => stack.push(element_from(&s, &mut cursor, offset)?),
            Event::Empty(s) => {
                let e = element_from(&s, &mut cursor, offset)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(e),
                    None => root = Some(e),
                }
            }
            Event::End(_) => {
                let e = stack.pop().ok_or_else(|| here("unmatched end tag"))?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(e),
                    None => root = Some(e),
                }
            }
            Event::Text(t) => {
                let content = t.xml10_content();
                match stack.last_mut() {
                    Some(e) => e.text.push_str(&content),
                    None if content.trim().is_empty() => {}
                    None => return Err(here("text outside the root element")),
                }
            }
            Event::GeneralRef(r) => {
                let resolved = match r.resolve_char_ref() {
                    Ok(Some(c)) => c.to_string(),
                    Ok(None) => resolve_predefined_entity(&r)
                        .ok_or_else(|| here("unknown entity reference"))?
                        .to_string(),
                    Err(e) => return Err(here(&e.to_string())),
                };
                stack
                    .last_mut()
                    .ok_or_else(|| here("reference outside the root element"))?
                    .text
                    .push_str(&resolved);
            }
            Event::Decl(_) if stack.is_empty() && root.is_none() => {}
            Event::Comment(_) => {}
            Event::Eof => break,
            Event::Decl(_) | Event::CData(_) | Event::PI(_) | Event::DocType(_) => {
                return Err(here("unsupported markup"))
            }
        }
    }
    if let Some(open) = stack.last() {
        return Err(parse_error(
            text,
            text.len(),
            format!("unexpected end of document inside <{}>", open.name),
        ));
    }
    root.ok_or_else(|| parse_error(text, text.len(), "document has no root element"))
}

fn expect_root(root: &Element, name: &str) -> Result<()> {
    if root.name != name {
        return Err(root.schema_error(format_args!("expected root <{name}>")));
    }
    Ok(())
}

pub fn read_central_xml(bytes: &[u8]) -> Result<CentralRepository> {
    let root = parse_tree(bytes)?;
    expect_root(&root, CENTRAL_ROOT)?;
    root.check_version()?;
    root.expect_attrs(&["version", "built", "digestAlgo", "intervalDays"])?;
    root.expect_no_text()?;
    let built_at = DateTime::parse_from_rfc3339(root.attr("built")?)
        .map_err(|e| root.schema_error(format_args!("bad built timestamp: {e}")))?
        .with_timezone(&Utc);
    let mut manifest = Manifest::empty(built_at);
    manifest.digest_algo = root.attr("digestAlgo")?.to_string();
    manifest.update_interval_days = root.number("intervalDays")?;
    let mut transactions = Vec::new();
    for child in &root.children {
        match child.name.as_str() {
            "source" => {
                child.expect_attrs(&["id", "kind", "root", "label"])?;
                child.expect_leaf()?;
                let kind: SourceKind = child
                    .attr("kind")?
                    .parse()
                    .map_err(|e: Error| child.schema_error(e))?;
                manifest.sources.push(SourceDescriptor::new(
                    child.attr("id")?,
                    kind,
                    child.attr("root")?,
                    child.attr("label")?,
                ));
            }
            "unit" => {
                child.expect_attrs(&["path", "source", "package", "digest"])?;
                child.expect_no_text()?;
                let unit = UnitSummary {
                    path: child.attr("path")?.to_string(),
                    source_id: child.attr("source")?.to_string(),
                    package: child.attr("package")?.to_string(),
                    digest: child.attr("digest")?.to_string(),
                };
                let key = unit.key();
                for tx in &child.children {
                    transactions.push(read_transaction(tx, &key)?);
                }
                manifest.units.push(unit);
            }
            "terms" => {
                child.expect_attrs(&["source"])?;
                child.expect_no_text()?;
                let mut terms = Vec::new();
                for t in &child.children {
                    if t.name != "term" {
                        return Err(t.schema_error("unknown element"));
                    }
                    t.expect_attrs(&[])?;
                    if let Some(c) = t.children.first() {
                        return Err(c.schema_error("unexpected child of <term>"));
                    }
                    terms.push(t.text.clone());
                }
                let list = TermList::new(child.attr("source")?, terms.iter().cloned());
                if list.terms != terms {
                    return Err(child.schema_error("term list is not trimmed and duplicate-free"));
                }
                manifest.terms.push(list);
            }
            _ => return Err(child.schema_error("unknown element")),
        }
    }
    manifest.validate()?;
    let repo = CentralRepository::new(manifest, transactions)?;
    let mut ids = HashSet::new();
    for t in &repo.transactions {
        if !ids.insert(t.id.as_str()) {
            return Err(Error::Schema(format!("duplicate transaction id {:?}", t.id)));
        }
    }
    Ok(repo)
}

fn read_transaction(e: &Element, unit: &str) -> Result<Transaction> {
    if e.name != "transaction" {
        return Err(e.schema_error("unknown element"));
    }
    e.expect_attrs(&["id", "entity", "block", "start", "end"])?;
    e.expect_no_text()?;
    let entity = e.attr("entity")?.to_string();
    let block: BlockKind = e.attr("block")?.parse().map_err(|err: Error| e.schema_error(err))?;
    let span = (e.number("start")?, e.number("end")?);
    if span.0 == 0 || span.0 > span.1 {
        return Err(e.schema_error("span must be 1-based and ordered"));
    }
    let mut items = Vec::new();
    for i in &e.children {
        if i.name != "item" {
            return Err(i.schema_error("unknown element"));
        }
        i.expect_attrs(&["kind", "name", "line"])?;
        i.expect_leaf()?;
        let kind: ItemKind = i.attr("kind")?.parse().map_err(|err: Error| i.schema_error(err))?;
        items.push(Item::new(kind, i.attr("name")?, entity.clone(), i.number("line")?));
    }
    if items.is_empty() {
        return Err(e.schema_error("transaction has no items"));
    }
    Ok(Transaction {
        id: e.attr("id")?.to_string(),
        entity,
        block,
        items,
        unit: unit.to_string(),
        span,
    })
}

/// Where a mined document came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub central_digest: String,
    /// Number of sequences in the mined database.
    pub sequences: usize,
}

fn check_ranks(patterns: &[SequencePattern]) -> Result<()> {
    for (i, p) in patterns.iter().enumerate() {
        if p.rank != i + 1 {
            return Err(Error::CorruptRepository {
                rank: p.rank,
                reason: format!("expected rank {}", i + 1),
            });
        }
    }
    Ok(())
}

fn check_pattern(p: &SequencePattern) -> Result<()> {
    let corrupt = |reason: String| Error::CorruptRepository { rank: p.rank, reason };
    if p.items.is_empty() || p.k != p.items.len() {
        return Err(corrupt(format!("k = {} but {} items", p.k, p.items.len())));
    }
    if p.support == 0 {
        return Err(corrupt("support must be positive".into()));
    }
    if p.score != p.k as u64 * p.support as u64 {
        return Err(corrupt(format!("score {} != k × support = {} × {}", p.score, p.k, p.support)));
    }
    if !(p.confidence > 0.0 && p.confidence <= 1.0) {
        return Err(corrupt(format!("confidence {} outside (0, 1]", p.confidence)));
    }
    Ok(())
}

pub fn write_mined_xml(patterns: &[SequencePattern], config: &MiningConfig, provenance: &Provenance) -> Result<Vec<u8>> {
    check_ranks(patterns).map_err(|e| Error::Consistency(e.to_string()))?;
    for p in patterns {
        check_pattern(p).map_err(|e| Error::Consistency(e.to_string()))?;
    }
    let mut out = String::from(XML_DECL);
    let (min_support, max_k) = (config.min_support.to_string(), config.max_k.to_string());
    let (sequences, count) = (provenance.sequences.to_string(), patterns.len().to_string());
    let root_attrs = [
        ("version", SCHEMA_VERSION),
        ("centralDigest", &provenance.central_digest),
        ("minSupport", &min_support),
        ("maxK", &max_k),
        ("sequences", &sequences),
        ("count", &count),
    ];
    if patterns.is_empty() {
        empty_element(&mut out, 0, MINED_ROOT, &root_attrs);
        return Ok(out.into_bytes());
    }
    start_element(&mut out, 0, MINED_ROOT, &root_attrs);
    for p in patterns {
        let confidence = format!("{:.6}", p.confidence);
        start_element(
            &mut out,
            1,
            "pattern",
            &[
                ("k", &p.k.to_string()),
                ("support", &p.support.to_string()),
                ("confidence", &confidence),
                ("score", &p.score.to_string()),
                ("rank", &p.rank.to_string()),
            ],
        );
        for i in &p.items {
            empty_element(&mut out, 2, "item", &[("kind", i.kind.code()), ("name", &i.name)]);
        }
        for x in &p.exemplars {
            empty_element(&mut out, 2, "exemplar", &[("transaction", x)]);
        }
        end_element(&mut out, 1, "pattern");
    }
    end_element(&mut out, 0, MINED_ROOT);
    Ok(out.into_bytes())
}

/// Loaded mined repository. Immutable; share freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedRepository {
    patterns: Vec<SequencePattern>,
    min_support: usize,
    max_k: usize,
    provenance: Provenance,
    by_name: HashMap<String, Vec<usize>>,
    by_first: HashMap<String, Vec<usize>>,
    vocabulary: Vec<PatternItem>,
    /// Vocabulary ids of every pattern's items, concatenated.
    encoded: Vec<u32>,
    /// `encoded[offsets[i]..offsets[i + 1]]` belongs to pattern `i`.
    offsets: Vec<usize>,
}

impl MinedRepository {
    pub fn new(patterns: Vec<SequencePattern>, config: &MiningConfig, provenance: Provenance) -> Result<Self> {
        check_ranks(&patterns)?;
        for p in &patterns {
            check_pattern(p)?;
        }
        let mut by_name: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_first: HashMap<String, Vec<usize>> = HashMap::new();
        let mut ids: HashMap<&PatternItem, u32> = HashMap::new();
        let mut vocabulary = Vec::new();
        let mut encoded = Vec::new();
        let mut offsets = vec![0];
        for (idx, p) in patterns.iter().enumerate() {
            let mut seen = HashSet::new();
            for i in &p.items {
                let id = *ids.entry(i).or_insert_with(|| {
                    vocabulary.push(i.clone());
                    (vocabulary.len() - 1) as u32
                });
                encoded.push(id);
                if seen.insert(i.name.as_str()) {
                    by_name.entry(i.name.clone()).or_default().push(idx);
                }
            }
            by_first.entry(p.items[0].name.clone()).or_default().push(idx);
            offsets.push(encoded.len());
        }
        drop(ids);
        Ok(Self {
            patterns,
            min_support: config.min_support,
            max_k: config.max_k,
            provenance,
            by_name,
            by_first,
            vocabulary,
            encoded,
            offsets,
        })
    }

    /// Distinct pattern items, in first-appearance order.
    pub fn vocabulary(&self) -> &[PatternItem] {
        &self.vocabulary
    }

    /// Vocabulary ids of the items of pattern `idx`.
    pub fn encoded_items(&self, idx: usize) -> &[u32] {
        &self.encoded[self.offsets[idx]..self.offsets[idx + 1]]
    }

    pub fn patterns(&self) -> &[SequencePattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Mining parameters echoed from the document.
    pub fn config(&self) -> MiningConfig {
        MiningConfig {
            min_support: self.min_support,
            max_k: self.max_k,
            ..MiningConfig::default()
        }
    }

    /// Indices of patterns containing an item with exactly this name.
    pub fn with_item(&self, name: &str) -> &[usize] {
        self.by_name.get(name).map_or(&[], Vec::as_slice)
    }

    /// Indices of patterns whose first item has exactly this name.
    pub fn starting_with(&self, name: &str) -> &[usize] {
        self.by_first.get(name).map_or(&[], Vec::as_slice)
    }

    /// Every distinct item name in the repository.
    pub fn item_names(&self) -> impl Iterator<Item = &str> {
        self.by_name.keys().map(String::as_str)
    }

    pub fn to_xml(&self) -> Result<Vec<u8>> {
        write_mined_xml(&self.patterns, &self.config(), &self.provenance)
    }

    /// Checks that this repository was mined from `central` and that every
    /// exemplar names one of its transactions.
    pub fn verify_against(&self, central_bytes: &[u8], central: &CentralRepository) -> Result<()> {
        let digest = central_digest(central_bytes);
        if digest != self.provenance.central_digest {
            return Err(Error::Consistency(format!(
                "mined repository was built from central digest {}, found {digest}",
                self.provenance.central_digest
            )));
        }
        let ids: HashSet<&str> = central.transactions.iter().map(|t| t.id.as_str()).collect();
        for p in &self.patterns {
            if let Some(x) = p.exemplars.iter().find(|x| !ids.contains(x.as_str())) {
                return Err(Error::UnknownTransaction(x.clone()));
            }
        }
        Ok(())
    }
}

pub fn read_mined_xml(bytes: &[u8]) -> Result<MinedRepository> {
    let root = parse_tree(bytes)?;
    expect_root(&root, MINED_ROOT)?;
    root.check_version()?;
    root.expect_attrs(&["version", "centralDigest", "minSupport", "maxK", "sequences", "count"])?;
    root.expect_no_text()?;
    let config = MiningConfig {
        min_support: root.number("minSupport")?,
        max_k: root.number("maxK")?,
        ..MiningConfig::default()
    };
    config.validate().map_err(|e| root.schema_error(e))?;
    let provenance = Provenance {
        central_digest: root.attr("centralDigest")?.to_string(),
        sequences: root.number("sequences")?,
    };
    let count: usize = root.number("count")?;
    let mut patterns = Vec::with_capacity(root.children.len());
    for p in &root.children {
        if p.name != "pattern" {
            return Err(p.schema_error("unknown element"));
        }
        p.expect_attrs(&["k", "support", "confidence", "score", "rank"])?;
        p.expect_no_text()?;
        let raw_conf = p.attr("confidence")?;
        let confidence: f64 = raw_conf
            .parse()
            .map_err(|_| p.schema_error(format_args!("bad confidence {raw_conf:?}")))?;
        let mut items = Vec::new();
        let mut exemplars = Vec::new();
        for c in &p.children {
            c.expect_leaf()?;
            match c.name.as_str() {
                "item" if exemplars.is_empty() => {
                    c.expect_attrs(&["kind", "name"])?;
                    let kind: ItemKind = c.attr("kind")?.parse().map_err(|e: Error| c.schema_error(e))?;
                    items.push(PatternItem::new(kind, c.attr("name")?));
                }
                "exemplar" => {
                    c.expect_attrs(&["transaction"])?;
                    exemplars.push(c.attr("transaction")?.to_string());
                }
                "item" => return Err(c.schema_error("items must precede exemplars")),
                _ => return Err(c.schema_error("unknown element")),
            }
        }
        patterns.push(SequencePattern {
            items,
            k: p.number("k")?,
            support: p.number("support")?,
            confidence,
            score: p.number("score")?,
            rank: p.number("rank")?,
            exemplars,
        });
    }
    if count != patterns.len() {
        return Err(root.schema_error(format_args!("count is {count} but {} patterns present", patterns.len())));
    }
    MinedRepository::new(patterns, &config, provenance)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mine::{mine_patterns, SequenceDb};
    use chrono::TimeZone;

    fn manifest() -> Manifest {
        let mut m = Manifest::empty(Utc.with_ymd_and_hms(2026, 3, 1, 12, 0, 0).unwrap());
        m.sources.push(SourceDescriptor::new("local", SourceKind::OpenSourceProject, "/src", "Local"));
        m.units.push(UnitSummary {
            path: "pkga/classB.java".into(),
            source_id: "local".into(),
            package: "pkga".into(),
            digest: "ab".repeat(32),
        });
        m.terms.push(TermList::new("trend", ["Connection".to_string(), "XMLParser".to_string()]));
        m.sources.push(SourceDescriptor::new("trend", SourceKind::TrendingTerms, "/t", "Trending"));
        m
    }

    fn field_tx() -> Transaction {
        Transaction {
            id: "local/pkga/classB.java#pkga.classB@1-20".into(),
            entity: "pkga.classB".into(),
            block: BlockKind::Class,
            items: vec![Item::new(ItemKind::Fd, "javax.swing.JButton", "pkga.classB", 12)],
            unit: "local/pkga/classB.java".into(),
            span: (1, 20),
        }
    }

    #[test]
    fn central_layout() {
        let bytes = write_central_xml(&manifest(), &[field_tx()]).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains(
            "<esdp-repository version=\"1\" built=\"2026-03-01T12:00:00Z\" digestAlgo=\"sha256\" intervalDays=\"90\">"
        ));
        assert!(text.contains("<transaction id=\"local/pkga/classB.java#pkga.classB@1-20\" entity=\"pkga.classB\" block=\"class\" start=\"1\" end=\"20\">"));
        assert!(text.contains("<item kind=\"FD\" name=\"javax.swing.JButton\" line=\"12\"/>"));
        assert!(text.contains("<term>XMLParser</term>"));
        let repo = read_central_xml(&bytes).unwrap();
        let mut m = manifest();
        m.normalize();
        assert_eq!(repo.manifest, m);
        assert_eq!(repo.transactions, [field_tx()]);
        assert_eq!(write_central_xml(&repo.manifest, &repo.transactions).unwrap(), bytes);
    }

    #[test]
    fn empty_manifest() {
        let m = Manifest::empty(Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap());
        let bytes = write_central_xml(&m, &[]).unwrap();
        assert!(!String::from_utf8_lossy(&bytes).contains("<unit"));
        assert_eq!(read_central_xml(&bytes).unwrap().manifest, m);
    }

    #[test]
    fn central_rejections() {
        let good = String::from_utf8(write_central_xml(&manifest(), &[field_tx()]).unwrap()).unwrap();
        let truncated = &good[..good.len() / 2];
        assert!(matches!(read_central_xml(truncated.as_bytes()), Err(Error::XmlParse { .. })));
        let v99 = good.replacen("version=\"1\" built", "version=\"99\" built", 1);
        assert!(matches!(read_central_xml(v99.as_bytes()), Err(Error::Version { .. })));
        let extra = good.replacen("line=\"12\"", "line=\"12\" color=\"red\"", 1);
        assert!(matches!(read_central_xml(extra.as_bytes()), Err(Error::Schema(_))));
        let unknown = good.replacen("<terms", "<bogus/>\n  <terms", 1);
        assert!(matches!(read_central_xml(unknown.as_bytes()), Err(Error::Schema(_))));
        let mismatched = good.replacen("</unit>", "</units>", 1);
        match read_central_xml(mismatched.as_bytes()) {
            Err(Error::XmlParse { line, .. }) => assert!(line > 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn escaping_survives() {
        let mut tx = field_tx();
        tx.items[0].name = "a<b & \"c\"\t'd'>".into();
        let bytes = write_central_xml(&manifest(), &[tx.clone()]).unwrap();
        assert_eq!(read_central_xml(&bytes).unwrap().transactions[0], tx);
    }

    fn fixture_patterns() -> (Vec<SequencePattern>, MiningConfig, Provenance) {
        let db = SequenceDb::from_id_sequences(&[vec![0, 1, 2], vec![0, 2], vec![1, 2]]);
        let mut ps = mine_patterns(&db, &MiningConfig::default(), false).unwrap();
        for p in &mut ps {
            for i in &mut p.items {
                i.name = ["a", "b", "c"][i.name.parse::<usize>().unwrap()].to_string();
            }
        }
        let prov = Provenance {
            central_digest: "00".repeat(32),
            sequences: db.size(),
        };
        (ps, MiningConfig::default(), prov)
    }

    #[test]
    fn mined_fixture() {
        let (ps, cfg, prov) = fixture_patterns();
        let bytes = write_mined_xml(&ps, &cfg, &prov).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains("<pattern k=\"2\" support=\"2\" confidence=\"1.000000\" score=\"4\" rank=\"1\">"));
        assert!(text.contains("confidence=\"0.666667\""));
        let repo = read_mined_xml(&bytes).unwrap();
        let ranks: Vec<_> = repo.with_item("a").iter().map(|&i| repo.patterns()[i].rank).collect();
        assert_eq!(ranks, [1, 4]);
        assert_eq!(repo.starting_with("c").len(), 1);
        assert_eq!(repo.to_xml().unwrap(), bytes);
    }

    #[test]
    fn mined_rejections() {
        let (ps, cfg, prov) = fixture_patterns();
        let good = String::from_utf8(write_mined_xml(&ps, &cfg, &prov).unwrap()).unwrap();
        let bad_score = good.replacen("score=\"4\" rank=\"1\"", "score=\"5\" rank=\"1\"", 1);
        assert!(matches!(
            read_mined_xml(bad_score.as_bytes()),
            Err(Error::CorruptRepository { rank: 1, .. })
        ));
        let gap = good.replacen("rank=\"3\"", "rank=\"7\"", 1);
        assert!(matches!(
            read_mined_xml(gap.as_bytes()),
            Err(Error::CorruptRepository { rank: 7, .. })
        ));
        let mut gapped = ps.clone();
        gapped.remove(1);
        assert!(matches!(write_mined_xml(&gapped, &cfg, &prov), Err(Error::Consistency(_))));
        let v = good.replacen("version=\"1\"", "version=\"2\"", 1);
        assert!(matches!(read_mined_xml(v.as_bytes()), Err(Error::Version { .. })));
    }

    #[test]
    fn empty_mined() {
        let prov = Provenance {
            central_digest: "x".into(),
            sequences: 3,
        };
        let bytes = write_mined_xml(&[], &MiningConfig::default(), &prov).unwrap();
        assert!(String::from_utf8_lossy(&bytes).contains("count=\"0\"/>"));
        let repo = read_mined_xml(&bytes).unwrap();
        assert!(repo.is_empty());
        assert!(repo.with_item("a").is_empty());
    }

    #[test]
    fn digest_ignores_timestamp() {
        let a = write_central_xml(&manifest(), &[field_tx()]).unwrap();
        let mut m = manifest();
        m.built_at = Utc.with_ymd_and_hms(2030, 1, 1, 0, 0, 0).unwrap();
        let b = write_central_xml(&m, &[field_tx()]).unwrap();
        assert_ne!(a, b);
        assert_eq!(central_digest(&a), central_digest(&b));
    }
}
