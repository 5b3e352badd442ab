use std::collections::BTreeSet;
use std::path::Path;

use chrono::{DateTime, TimeZone, Utc};

use esdp_core::corpus::{parse_source_config, SourceDescriptor, SourceKind};
use esdp_core::mine::MiningConfig;
use esdp_core::pipeline::{build_central, mine_central, prominent_api, stats};
use esdp_core::recommend::{assemble_skeleton, match_patterns, parse_query};
use esdp_core::store::read_central_xml;
use esdp_core::synth::{desk_corpus, planted_corpus, PLANTED_COUNT};
use esdp_core::Error;

fn now() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2026, 5, 1, 0, 0, 0).unwrap()
}

fn descriptor(root: &Path) -> SourceDescriptor {
    SourceDescriptor::new("fx", SourceKind::OpenSourceProject, root, "fixture")
}

#[test]
fn build_from_disk_matches_recount() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = desk_corpus(3, 12);
    corpus.write_to(tmp.path()).unwrap();
    let out = build_central(&[descriptor(tmp.path())], &Default::default(), now()).unwrap();

    let reread = read_central_xml(&out.xml).unwrap();
    assert_eq!(reread.transactions, out.central.transactions);
    assert_eq!(reread.manifest.units.len(), corpus.files.len());

    let method_txs = out
        .central
        .transactions
        .iter()
        .filter(|t| t.block.as_str() == "method")
        .count();
    let s = stats(Some(&out.central), None).unwrap();
    assert_eq!(s.files, Some(corpus.files.len()));
    assert_eq!(s.method_transactions, Some(method_txs));
    assert_eq!(s.patterns, None);
    assert_eq!(s.prominent_api, prominent_api(&out.central));
    assert!(!out.staleness.stale);
}

#[test]
fn config_file_drives_build() {
    let tmp = tempfile::tempdir().unwrap();
    planted_corpus(2).write_to(&tmp.path().join("code")).unwrap();
    let text = "interval_days = 30\n[source]\nid = fx\nkind = company-project\nroot = code\n";
    let config = parse_source_config(text, tmp.path()).unwrap();
    let out = build_central(&config.descriptors, &config.scan_options(), now()).unwrap();
    assert_eq!(out.central.manifest.update_interval_days, 30);
    assert_eq!(out.central.method_transactions(), 20);
}

#[test]
fn skeleton_reads_source_then_falls_back() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = planted_corpus(5);
    corpus.write_to(tmp.path()).unwrap();
    let built = build_central(&[descriptor(tmp.path())], &Default::default(), now()).unwrap();
    let mined = mine_central(&built.xml, &MiningConfig::default(), false).unwrap();
    let rec = match_patterns(&parse_query("open()").unwrap(), &mined.repo, 5).unwrap();
    let top = &rec.entries[0].pattern;
    assert_eq!(top.support, PLANTED_COUNT);

    let skeleton = assemble_skeleton(top, &built.central, 0).unwrap();
    assert!(!skeleton.synthetic);
    let highlighted: Vec<&str> = skeleton
        .lines
        .iter()
        .filter(|(n, _)| skeleton.highlights.contains(n))
        .map(|(_, l)| l.trim())
        .collect();
    assert_eq!(highlighted, ["store.open();", "store.query();", "store.commit();"]);
    assert!(skeleton.render().contains("> "));
    assert!(matches!(
        assemble_skeleton(top, &built.central, 99),
        Err(Error::Range { index: 99, .. })
    ));

    // Editing the file invalidates its digest.
    let tx = built.central.transaction(&top.exemplars[0]).unwrap();
    let path = tmp.path().join(tx.unit.split_once('/').unwrap().1);
    std::fs::write(&path, "// rewritten\n").unwrap();
    let fallback = assemble_skeleton(top, &built.central, 0).unwrap();
    assert!(fallback.synthetic);
    assert_eq!(fallback.lines.len(), 3);
    let lines: BTreeSet<usize> = fallback.lines.iter().map(|(n, _)| *n).collect();
    assert_eq!(lines, skeleton.highlights);
}

#[test]
fn unavailable_source_is_an_error() {
    let missing = descriptor(Path::new("/definitely/not/here"));
    assert!(build_central(&[missing], &Default::default(), now()).is_err());
}
