//! Source corpus discovery and the central repository manifest.
//!
//! A corpus is declared as a list of [`SourceDescriptor`]s, one per source
//! (open-source projects, company projects, standard-library sources,
//! trending search terms and hand-authored APIs). Scanning turns every
//! matching file into a [`SourceUnit`]; the [`Manifest`] summarizes the
//! result with content digests so later stages can detect change.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::abstraction::tokenizer;
use crate::error::{Error, Result};

pub const DEFAULT_UPDATE_INTERVAL_DAYS: u32 = 90;
pub const DIGEST_ALGORITHM: &str = "sha256";

pub fn default_extensions() -> BTreeSet<String> {
    [".java".to_string()].into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SourceKind {
    OpenSourceProject,
    CompanyProject,
    StandardLibrary,
    TrendingTerms,
    AuthoredApi,
}

impl SourceKind {
    pub const ALL: [SourceKind; 5] = [
        SourceKind::OpenSourceProject,
        SourceKind::CompanyProject,
        SourceKind::StandardLibrary,
        SourceKind::TrendingTerms,
        SourceKind::AuthoredApi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::OpenSourceProject => "open-source-project",
            SourceKind::CompanyProject => "company-project",
            SourceKind::StandardLibrary => "standard-library",
            SourceKind::TrendingTerms => "trending-terms",
            SourceKind::AuthoredApi => "authored-api",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SourceKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown source kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDescriptor {
    pub id: String,
    pub kind: SourceKind,
    /// Directory to scan, or the term-list file for [`SourceKind::TrendingTerms`].
    pub root: PathBuf,
    pub label: String,
}

impl SourceDescriptor {
    pub fn new(
        id: impl Into<String>,
        kind: SourceKind,
        root: impl Into<PathBuf>,
        label: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            kind,
            root: root.into(),
            label: label.into(),
        }
    }
}

/// Byte offsets of line starts, for 1-based line lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIndex {
    starts: Vec<usize>,
    len: usize,
}

impl LineIndex {
    pub fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        if starts.len() > 1 && *starts.last().unwrap() == text.len() {
            starts.pop();
        }
        Self {
            starts,
            len: text.len(),
        }
    }

    pub fn line_count(&self) -> usize {
        if self.len == 0 {
            0
        } else {
            self.starts.len()
        }
    }

    /// 1-based line containing `offset`. Offsets past the end map to the last line.
    pub fn line_of(&self, offset: usize) -> usize {
        match self.starts.binary_search(&offset) {
            Ok(i) => i + 1,
            Err(i) => i,
        }
    }

    /// Byte range of a 1-based line, excluding its terminating newline.
    pub fn line_range(&self, line: usize, text: &str) -> Option<std::ops::Range<usize>> {
        if line == 0 || line > self.line_count() {
            return None;
        }
        let start = self.starts[line - 1];
        let mut end = self.starts.get(line).copied().unwrap_or(self.len);
        let bytes = text.as_bytes();
        if end > start && bytes[end - 1] == b'\n' {
            end -= 1;
            if end > start && bytes[end - 1] == b'\r' {
                end -= 1;
            }
        }
        Some(start..end)
    }

    pub fn line<'t>(&self, line: usize, text: &'t str) -> Option<&'t str> {
        self.line_range(line, text).map(|r| &text[r])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    /// Path relative to the source root, `/`-separated.
    pub path: String,
    pub source_id: String,
    pub package: String,
    pub text: String,
    pub line_index: LineIndex,
    pub digest: String,
}

impl SourceUnit {
    pub fn from_bytes(path: impl Into<String>, source_id: impl Into<String>, bytes: &[u8]) -> Self {
        let text = String::from_utf8_lossy(bytes).into_owned();
        let package = tokenizer::package_name(&text).unwrap_or_default();
        Self {
            path: path.into(),
            source_id: source_id.into(),
            package,
            line_index: LineIndex::new(&text),
            digest: digest_bytes(bytes),
            text,
        }
    }

    /// Source-qualified key, unique across a manifest.
    pub fn key(&self) -> String {
        unit_key(&self.source_id, &self.path)
    }

    pub fn summary(&self) -> UnitSummary {
        UnitSummary {
            path: self.path.clone(),
            source_id: self.source_id.clone(),
            package: self.package.clone(),
            digest: self.digest.clone(),
        }
    }
}

pub fn unit_key(source_id: &str, path: &str) -> String {
    format!("{source_id}/{path}")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct UnitSummary {
    pub path: String,
    pub source_id: String,
    pub package: String,
    pub digest: String,
}

impl UnitSummary {
    pub fn key(&self) -> String {
        unit_key(&self.source_id, &self.path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermList {
    pub source_id: String,
    pub terms: Vec<String>,
}

impl TermList {
    /// Drops blank entries and later duplicates, keeping first-occurrence order.
    pub fn new(source_id: impl Into<String>, terms: impl IntoIterator<Item = String>) -> Self {
        let mut seen = HashSet::new();
        let terms = terms
            .into_iter()
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty())
            .filter(|t| seen.insert(t.clone()))
            .collect();
        Self {
            source_id: source_id.into(),
            terms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub sources: Vec<SourceDescriptor>,
    pub units: Vec<UnitSummary>,
    pub terms: Vec<TermList>,
    pub built_at: DateTime<Utc>,
    pub update_interval_days: u32,
    pub digest_algo: String,
}

impl Manifest {
    pub fn empty(built_at: DateTime<Utc>) -> Self {
        Self {
            sources: Vec::new(),
            units: Vec::new(),
            terms: Vec::new(),
            built_at,
            update_interval_days: DEFAULT_UPDATE_INTERVAL_DAYS,
            digest_algo: DIGEST_ALGORITHM.to_string(),
        }
    }

    pub fn source(&self, id: &str) -> Option<&SourceDescriptor> {
        self.sources.iter().find(|s| s.id == id)
    }

    /// Puts sources, units and term lists in their canonical order.
    pub fn normalize(&mut self) {
        self.sources.sort_by(|a, b| a.id.cmp(&b.id));
        self.units
            .sort_by(|a, b| (&a.path, &a.source_id).cmp(&(&b.path, &b.source_id)));
        self.terms.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    }

    /// Resolves a unit path to a file on disk through its source root.
    pub fn unit_file(&self, source_id: &str, path: &str) -> Option<PathBuf> {
        self.source(source_id).map(|s| s.root.join(path))
    }

    pub fn validate(&self) -> Result<()> {
        if self.update_interval_days == 0 {
            return Err(Error::Config("update interval must be positive".into()));
        }
        let mut ids = HashSet::new();
        for s in &self.sources {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Config(format!("duplicate source id {:?}", s.id)));
            }
        }
        let mut keys = HashSet::new();
        for u in &self.units {
            if !ids.contains(u.source_id.as_str()) {
                return Err(Error::Config(format!(
                    "unit {:?} references undeclared source {:?}",
                    u.path, u.source_id
                )));
            }
            if !keys.insert(u.key()) {
                return Err(Error::Config(format!("duplicate unit {:?}", u.key())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Scan {
    pub units: Vec<SourceUnit>,
    pub warnings: Vec<String>,
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn has_extension(path: &Path, extensions: &BTreeSet<String>) -> bool {
    let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
        return false;
    };
    extensions.iter().any(|ext| name.len() > ext.len() && name.ends_with(ext.as_str()))
}

fn relative_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Collects every regular file under the descriptor's root whose name ends
/// with one of `extensions`, ordered by relative path.
pub fn scan_corpus(descriptor: &SourceDescriptor, extensions: &BTreeSet<String>) -> Result<Scan> {
    if extensions.is_empty() {
        return Err(Error::Config("extension set is empty".into()));
    }
    let root = &descriptor.root;
    if !root.is_dir() {
        return Err(Error::SourceUnavailable {
            path: root.clone(),
            reason: "not a directory".into(),
        });
    }
    let mut scan = Scan::default();
    let mut files = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        match entry {
            Ok(e) if e.file_type().is_file() && has_extension(e.path(), extensions) => {
                files.push((relative_path(root, e.path()), e.into_path()))
            }
            Ok(_) => {}
            Err(e) => scan.warnings.push(format!("{}: {e}", descriptor.id)),
        }
    }
    files.sort();
    for (rel, path) in files {
        match std::fs::read(&path) {
            Ok(bytes) => scan
                .units
                .push(SourceUnit::from_bytes(rel, descriptor.id.clone(), &bytes)),
            Err(e) => scan
                .warnings
                .push(format!("{}: skipping {}: {e}", descriptor.id, path.display())),
        }
    }
    Ok(scan)
}

pub fn load_term_list(path: &Path, source_id: &str) -> Result<TermList> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::SourceUnavailable {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(TermList::new(source_id, text.lines().map(str::to_string)))
}

#[derive(Debug, Clone)]
pub struct CorpusScan {
    pub manifest: Manifest,
    pub units: Vec<SourceUnit>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub extensions: BTreeSet<String>,
    pub update_interval_days: u32,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            extensions: default_extensions(),
            update_interval_days: DEFAULT_UPDATE_INTERVAL_DAYS,
        }
    }
}

/// Scans every descriptor and aggregates the result into a manifest.
///
/// Unavailable sources are reported as warnings; only when every source is
/// unavailable does the build fail.
pub fn scan_sources(
    descriptors: &[SourceDescriptor],
    options: &ScanOptions,
    now: DateTime<Utc>,
) -> Result<CorpusScan> {
    if descriptors.is_empty() {
        return Err(Error::Config("no sources declared".into()));
    }
    if options.update_interval_days == 0 {
        return Err(Error::Config("update interval must be positive".into()));
    }
    let mut ids = HashSet::new();
    for d in descriptors {
        if !ids.insert(d.id.as_str()) {
            return Err(Error::Config(format!("duplicate source id {:?}", d.id)));
        }
    }

    let mut manifest = Manifest::empty(now);
    manifest.update_interval_days = options.update_interval_days;
    manifest.sources = descriptors.to_vec();
    let mut units = Vec::new();
    let mut warnings = Vec::new();
    let mut available = 0;
    for d in descriptors {
        let outcome = if d.kind == SourceKind::TrendingTerms {
            load_term_list(&d.root, &d.id).map(|t| manifest.terms.push(t))
        } else {
            scan_corpus(d, &options.extensions).map(|scan| {
                warnings.extend(scan.warnings);
                units.extend(scan.units);
            })
        };
        match outcome {
            Ok(()) => available += 1,
            Err(e) => warnings.push(e.to_string()),
        }
    }
    if available == 0 {
        return Err(Error::EmptyCorpus("all sources are unavailable".into()));
    }
    units.sort_by(|a, b| (&a.path, &a.source_id).cmp(&(&b.path, &b.source_id)));
    manifest.units = units.iter().map(SourceUnit::summary).collect();
    manifest.normalize();
    Ok(CorpusScan {
        manifest,
        units,
        warnings,
    })
}

pub fn build_manifest(descriptors: &[SourceDescriptor], now: DateTime<Utc>) -> Result<Manifest> {
    scan_sources(descriptors, &ScanOptions::default(), now).map(|s| s.manifest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Staleness {
    pub stale: bool,
    pub age_days: i64,
}

/// A repository is stale strictly after `update_interval_days` whole days.
pub fn check_staleness(manifest: &Manifest, now: DateTime<Utc>) -> Result<Staleness> {
    if now < manifest.built_at {
        return Err(Error::ClockSkew {
            now: now.to_rfc3339(),
            built_at: manifest.built_at.to_rfc3339(),
        });
    }
    let age_days = (now - manifest.built_at).num_days();
    Ok(Staleness {
        stale: age_days > i64::from(manifest.update_interval_days),
        age_days,
    })
}

/// Parsed source configuration file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceConfig {
    pub descriptors: Vec<SourceDescriptor>,
    pub extensions: Option<BTreeSet<String>>,
    pub update_interval_days: Option<u32>,
}

impl SourceConfig {
    pub fn scan_options(&self) -> ScanOptions {
        let defaults = ScanOptions::default();
        ScanOptions {
            extensions: self.extensions.clone().unwrap_or(defaults.extensions),
            update_interval_days: self
                .update_interval_days
                .unwrap_or(defaults.update_interval_days),
        }
    }
}

/// Parses the sectioned `key = value` source configuration.
///
/// Top-level keys (`extensions`, `interval_days`) precede the `[source]`
/// sections. Relative roots are resolved against `base_dir`.
pub fn parse_source_config(text: &str, base_dir: &Path) -> Result<SourceConfig> {
    #[derive(Default)]
    struct Pending {
        id: Option<String>,
        kind: Option<SourceKind>,
        root: Option<PathBuf>,
        label: Option<String>,
        line: usize,
    }

    fn finish(p: Pending) -> Result<SourceDescriptor> {
        let missing = |key: &str| Error::Config(format!("[source] at line {} lacks {key}", p.line));
        Ok(SourceDescriptor {
            id: p.id.clone().ok_or_else(|| missing("id"))?,
            kind: p.kind.ok_or_else(|| missing("kind"))?,
            root: p.root.clone().ok_or_else(|| missing("root"))?,
            label: p.label.unwrap_or_default(),
        })
    }

    let mut config = SourceConfig {
        descriptors: Vec::new(),
        extensions: None,
        update_interval_days: None,
    };
    let mut current: Option<Pending> = None;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') {
            if line != "[source]" {
                return Err(Error::Config(format!("line {line_no}: unknown section {line}")));
            }
            if let Some(p) = current.take() {
                config.descriptors.push(finish(p)?);
            }
            current = Some(Pending {
                line: line_no,
                ..Pending::default()
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Config(format!("line {line_no}: expected key = value")))?;
        match (&mut current, key) {
            (Some(p), "id") => p.id = Some(value.to_string()),
            (Some(p), "kind") => p.kind = Some(value.parse()?),
            (Some(p), "root") => p.root = Some(base_dir.join(value)),
            (Some(p), "label") => p.label = Some(value.to_string()),
            (None, "extensions") => {
                let exts: BTreeSet<String> = value
                    .split(',')
                    .map(str::trim)
                    .filter(|e| !e.is_empty())
                    .map(|e| if e.starts_with('.') { e.to_string() } else { format!(".{e}") })
                    .collect();
                if exts.is_empty() {
                    return Err(Error::Config(format!("line {line_no}: empty extension list")));
                }
                config.extensions = Some(exts);
            }
            (None, "interval_days") => {
                let days: u32 = value
                    .parse()
                    .map_err(|_| Error::Config(format!("line {line_no}: bad interval {value:?}")))?;
                if days == 0 {
                    return Err(Error::Config(format!("line {line_no}: interval must be positive")));
                }
                config.update_interval_days = Some(days);
            }
            _ => return Err(Error::Config(format!("line {line_no}: unknown key {key:?}"))),
        }
    }
    if let Some(p) = current.take() {
        config.descriptors.push(finish(p)?);
    }
    if config.descriptors.is_empty() {
        return Err(Error::Config("no [source] sections".into()));
    }
    Ok(config)
}
