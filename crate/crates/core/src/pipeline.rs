//! End-to-end steps: corpus to central repository, central to mined
//! repository, and summary statistics.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};

use crate::abstraction::{abstract_units, DefaultNamespace, ItemKind};
use crate::corpus::{check_staleness, scan_sources, Manifest, ScanOptions, SourceDescriptor, SourceUnit, Staleness};
use crate::error::{Error, Result};
use crate::mine::{build_sequence_db, mine_patterns, MiningConfig};
use crate::store::{central_digest, read_central_xml, write_central_xml, write_mined_xml, CentralRepository, MinedRepository, Provenance};

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub central: CentralRepository,
    pub xml: Vec<u8>,
    pub items: usize,
    pub method_blocks: usize,
    pub degraded_units: Vec<String>,
    pub warnings: Vec<String>,
    pub staleness: Staleness,
}

/// Abstracts already-loaded units into a central repository document.
pub fn build_from_units(manifest: Manifest, units: &[SourceUnit], now: DateTime<Utc>) -> Result<BuildOutput> {
    if units.is_empty() {
        return Err(Error::EmptyCorpus("no source units found".into()));
    }
    let abs = abstract_units(units, &DefaultNamespace::default());
    let xml = write_central_xml(&manifest, &abs.transactions)?;
    let central = CentralRepository::new(manifest, abs.transactions)?;
    let staleness = check_staleness(&central.manifest, now)?;
    Ok(BuildOutput {
        items: central.transactions.iter().map(|t| t.items.len()).sum(),
        central,
        xml,
        method_blocks: abs.method_blocks,
        degraded_units: abs.degraded_units,
        warnings: abs.warnings,
        staleness,
    })
}

/// Scans the declared sources, abstracts every unit and serializes the
/// central repository.
pub fn build_central(descriptors: &[SourceDescriptor], options: &ScanOptions, now: DateTime<Utc>) -> Result<BuildOutput> {
    let scan = scan_sources(descriptors, options, now)?;
    let mut out = build_from_units(scan.manifest, &scan.units, now)?;
    let mut warnings = scan.warnings;
    warnings.append(&mut out.warnings);
    out.warnings = warnings;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct MineOutput {
    pub repo: MinedRepository,
    pub xml: Vec<u8>,
}

/// Mines a serialized central repository. A repository without
/// transactions yields an empty mined repository.
pub fn mine_central(central_xml: &[u8], config: &MiningConfig, parallel: bool) -> Result<MineOutput> {
    config.validate()?;
    let central = read_central_xml(central_xml)?;
    let digest = central_digest(central_xml);
    let (patterns, sequences) = if central.transactions.is_empty() {
        (Vec::new(), 0)
    } else {
        let db = build_sequence_db(&central.transactions)?;
        (mine_patterns(&db, config, parallel)?, db.size())
    };
    let provenance = Provenance {
        central_digest: digest,
        sequences,
    };
    let xml = write_mined_xml(&patterns, config, &provenance)?;
    let repo = MinedRepository::new(patterns, config, provenance)?;
    Ok(MineOutput { repo, xml })
}

/// Most frequent package prefix among qualified type names in the
/// repository, with its count. Ties go to the lexicographically smaller
/// prefix.
pub fn prominent_api(central: &CentralRepository) -> Option<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &central.transactions {
        for i in &t.items {
            if !matches!(i.kind, ItemKind::Im | ItemKind::Fd | ItemKind::Vd | ItemKind::Ci | ItemKind::Xt | ItemKind::Ip) {
                continue;
            }
            let name = i.name.strip_prefix("static ").unwrap_or(&i.name);
            let name = name.split(['<', '[']).next().unwrap_or(name);
            if let Some((prefix, _)) = name.rsplit_once('.') {
                let prefix = prefix.trim_end_matches(".*");
                if !prefix.is_empty() {
                    *counts.entry(prefix).or_default() += 1;
                }
            }
        }
    }
    let mut best: Option<(&str, usize)> = None;
    for (prefix, n) in counts {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((prefix, n));
        }
    }
    best.map(|(p, n)| (p.to_string(), n))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stats {
    pub files: Option<usize>,
    pub method_transactions: Option<usize>,
    pub patterns: Option<usize>,
    pub prominent_api: Option<(String, usize)>,
}

pub fn stats(central: Option<&CentralRepository>, mined: Option<&MinedRepository>) -> Result<Stats> {
    if central.is_none() && mined.is_none() {
        return Err(Error::Config("neither a central nor a mined repository is available".into()));
    }
    Ok(Stats {
        files: central.map(|c| c.manifest.units.len()),
        method_transactions: central.map(CentralRepository::method_transactions),
        patterns: mined.map(MinedRepository::len),
        prominent_api: central.and_then(prominent_api),
    })
}
