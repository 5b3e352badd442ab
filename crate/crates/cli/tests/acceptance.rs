//! End-to-end acceptance checks. Runs with a plain `main` so every
//! criterion prints its own PASS/FAIL line under `cargo test`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use esdp_core::abstraction::ItemKind;
use esdp_core::corpus::SourceKind;
use esdp_core::mine::{prefixspan, prefixspan_parallel, ItemId, MiningConfig, SequenceDb, SequencePattern};
use esdp_core::recommend::{match_patterns, parse_query};
use esdp_core::store::{
    read_central_xml, read_mined_xml, write_central_xml, write_mined_xml, MinedRepository, Provenance,
};
use esdp_core::synth::{
    desk_corpus, planted_corpus, random_central_model, random_corpus, random_patterns, SyntheticCorpus, PLANTED_CALLS,
    PLANTED_COUNT,
};

const NOW: &str = "2026-05-01T12:00:00Z";
const DEFAULT_QUERIES: &str = include_str!("../data/default_queries.txt");

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Workspace {
    _tmp: tempfile::TempDir,
    dir: PathBuf,
}

impl Workspace {
    /// Writes `corpus` under `src/` next to a one-source config file.
    fn new(corpus: &SyntheticCorpus) -> Self {
        let tmp = tempfile::tempdir().expect("tempdir");
        let dir = tmp.path().to_path_buf();
        corpus.write_to(&dir.join("src")).expect("write corpus");
        let kind = SourceKind::OpenSourceProject;
        std::fs::write(
            dir.join("esdp.conf"),
            format!("[source]\nid = fixture\nkind = {kind}\nroot = src\nlabel = fixture corpus\n"),
        )
        .expect("write config");
        Workspace { _tmp: tmp, dir }
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_esdp"))
            .args(args)
            .current_dir(&self.dir)
            .env("ESDP_NOW", NOW)
            .output()
            .expect("spawn esdp")
    }

    /// Runs and requires exit status 0.
    fn ok(&self, args: &[&str]) -> Result<String, String> {
        let out = self.run(args);
        if out.status.success() {
            Ok(String::from_utf8_lossy(&out.stdout).into_owned())
        } else {
            Err(format!(
                "esdp {} exited with {:?}: {}",
                args.join(" "),
                out.status.code(),
                String::from_utf8_lossy(&out.stderr).trim()
            ))
        }
    }

    fn read(&self, name: &str) -> Vec<u8> {
        std::fs::read(self.dir.join(name)).unwrap_or_default()
    }
}

fn strip_built(xml: &[u8]) -> String {
    String::from_utf8_lossy(xml)
        .lines()
        .map(|l| match l.find(" built=\"") {
            Some(start) => {
                let rest = &l[start + 8..];
                let end = rest.find('"').map_or(rest.len(), |e| e + 1);
                format!("{}{}", &l[..start], &rest[end..])
            }
            None => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn strip_elapsed(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("elapsed:"))
        .map(|l| format!("{l}\n"))
        .collect()
}

// Brute force: every distinct subsequence of every sequence, counted once per sequence.
fn oracle(seqs: &[Vec<ItemId>], min_support: usize) -> BTreeSet<(Vec<ItemId>, usize)> {
    let mut counts: BTreeMap<Vec<ItemId>, usize> = BTreeMap::new();
    for s in seqs {
        let mut subs = BTreeSet::new();
        for mask in 1u32..(1 << s.len()) {
            subs.insert(
                (0..s.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| s[i])
                    .collect::<Vec<_>>(),
            );
        }
        for sub in subs {
            *counts.entry(sub).or_default() += 1;
        }
    }
    counts.into_iter().filter(|&(_, n)| n >= min_support).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let strategy = (1u32..=6).prop_flat_map(|alpha| prop::collection::vec(prop::collection::vec(0..alpha, 0..=8), 1..=10));
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: 1000,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let dbs = std::cell::Cell::new(0usize);
    let result = runner.run(&strategy, |seqs| {
        dbs.set(dbs.get() + 1);
        let db = SequenceDb::from_id_sequences(&seqs);
        for min_support in 1..=3 {
            let config = MiningConfig {
                min_support,
                max_k: 8,
                ..MiningConfig::default()
            };
            let named = |items: &[ItemId]| -> Vec<ItemId> {
                items
                    .iter()
                    .map(|&i| db.dictionary.item(i).name.parse().expect("numeric item"))
                    .collect()
            };
            let mined: BTreeSet<_> = prefixspan(&db, &config)
                .into_iter()
                .map(|f| (named(&f.items), f.support))
                .collect();
            prop_assert_eq!(&mined, &oracle(&seqs, min_support));
            let parallel: BTreeSet<_> = prefixspan_parallel(&db, &config)
                .into_iter()
                .map(|f| (named(&f.items), f.support))
                .collect();
            prop_assert_eq!(&parallel, &mined);
        }
        Ok(())
    });
    let elapsed = start.elapsed();
    result.map_err(|e| format!("{e}"))?;
    let dbs = dbs.get();
    check(dbs >= 1000, || format!("only {dbs} databases checked"))?;
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{dbs} databases x min_support 1..=3, exact set equality, {:.1} s", elapsed.as_secs_f64()))
}

fn reference_corpus() -> SyntheticCorpus {
    let test = "package com;\n\nclass Test {\n\n    dom.ASTParser p;\n}\n";
    let mut b = String::from(
        "package com;\n\nclass class_B {\n    void method_A(java.lang.String s) {\n    }\n\n    void method_C() {\n",
    );
    while b.lines().count() < 129 {
        b.push_str("        // setup\n");
    }
    b.push_str("        method_A(\"s\");\n    }\n}\n");
    SyntheticCorpus {
        files: vec![
            esdp_core::synth::SynthFile {
                path: "com/Test.java".into(),
                text: test.into(),
            },
            esdp_core::synth::SynthFile {
                path: "com/class_B.java".into(),
                text: b,
            },
        ],
    }
}

fn criterion_2() -> Outcome {
    let ws = Workspace::new(&reference_corpus());
    ws.ok(&["build", "--config", "esdp.conf"])?;
    let central = read_central_xml(&ws.read("esdp-central.xml")).map_err(|e| e.to_string())?;
    let rendered: BTreeSet<String> = central
        .transactions
        .iter()
        .flat_map(|t| t.items.iter().map(|i| i.render()))
        .collect();
    let expected = [
        "FD, dom.ASTParser, com.Test:05",
        "MI, method_A(java.lang.String):void, com.class_B.method_C():130",
    ];
    for e in expected {
        check(rendered.contains(e), || format!("missing {e:?}; got {rendered:?}"))?;
    }
    Ok(format!("{:?} and {:?} present in central repository", expected[0], expected[1]))
}

type SortKey<'a> = (std::cmp::Reverse<u64>, std::cmp::Reverse<usize>, std::cmp::Reverse<usize>, Vec<&'a str>, Vec<ItemKind>);

fn sort_key(p: &SequencePattern) -> SortKey<'_> {
    use std::cmp::Reverse;
    (
        Reverse(p.score),
        Reverse(p.support),
        Reverse(p.k),
        p.items.iter().map(|i| i.name.as_str()).collect(),
        p.items.iter().map(|i| i.kind).collect(),
    )
}

fn check_ranking(label: &str, repo: &MinedRepository) -> Result<(), String> {
    let patterns = repo.patterns();
    let by_items: HashMap<Vec<(ItemKind, &str)>, usize> = patterns
        .iter()
        .map(|p| (p.items.iter().map(|i| (i.kind, i.name.as_str())).collect(), p.support))
        .collect();
    let sequences = repo.provenance().sequences;
    for (i, p) in patterns.iter().enumerate() {
        check(p.rank == i + 1, || format!("{label}: rank {} at position {}", p.rank, i + 1))?;
        check(p.k == p.items.len(), || format!("{label}: rank {} k mismatch", p.rank))?;
        check(p.score == (p.k * p.support) as u64, || {
            format!("{label}: rank {} score {} != {} x {}", p.rank, p.score, p.k, p.support)
        })?;
        let prefix_support = if p.k == 1 {
            sequences
        } else {
            let prefix: Vec<_> = p.items[..p.k - 1].iter().map(|i| (i.kind, i.name.as_str())).collect();
            *by_items
                .get(&prefix)
                .ok_or_else(|| format!("{label}: rank {} prefix not mined", p.rank))?
        };
        let expected = p.support as f64 / prefix_support as f64;
        check((p.confidence - expected).abs() < 1e-6, || {
            format!("{label}: rank {} confidence {} != {expected}", p.rank, p.confidence)
        })?;
        if i > 0 {
            check(sort_key(&patterns[i - 1]) < sort_key(p), || {
                format!("{label}: ranks {} and {} out of order", i, i + 1)
            })?;
        }
    }
    Ok(())
}

fn criterion_3() -> Outcome {
    let mut corpora: Vec<(String, SyntheticCorpus)> = vec![
        ("planted-1".into(), planted_corpus(1)),
        ("planted-2".into(), planted_corpus(2)),
        ("desk-8".into(), desk_corpus(8, 8)),
        ("reference".into(), reference_corpus()),
    ];
    corpora.extend((0..6).map(|s| (format!("random-{s}"), random_corpus(100 + s))));
    let mut total = 0;
    for (label, corpus) in &corpora {
        let ws = Workspace::new(corpus);
        ws.ok(&["build", "--config", "esdp.conf"])?;
        ws.ok(&["mine"])?;
        let repo = read_mined_xml(&ws.read("esdp-mined.xml")).map_err(|e| format!("{label}: {e}"))?;
        check_ranking(label, &repo)?;
        total += repo.len();
    }
    Ok(format!("{total} patterns over {} corpora obey score = k x support, contiguous ranks, comparator", corpora.len()))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let ws = Workspace::new(&planted_corpus(4));
    ws.ok(&["build", "--config", "esdp.conf"])?;
    ws.ok(&["mine"])?;
    let out = ws.ok(&["query", &format!("{}()", PLANTED_CALLS[0])])?;
    let elapsed = start.elapsed();
    let expected = PLANTED_CALLS
        .iter()
        .map(|c| format!("MI {c}(arity=0):?"))
        .collect::<Vec<_>>()
        .join(" → ");
    let first = out.lines().next().unwrap_or_default();
    let fields: Vec<&str> = first.split('\t').collect();
    check(fields.len() == 5 && fields[4] == expected, || format!("first entry is {first:?}, want {expected:?}"))?;
    check(fields[2] == PLANTED_COUNT.to_string(), || format!("support {} != {PLANTED_COUNT}", fields[2]))?;
    check(elapsed < Duration::from_secs(5), || format!("end-to-end took {elapsed:?}"))?;
    Ok(format!("planted 3-pattern is entry 1 (support {}), {:.2} s end-to-end", fields[2], elapsed.as_secs_f64()))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn criterion_5() -> Outcome {
    let ws = Workspace::new(&desk_corpus(42, 60));
    ws.ok(&["build", "--config", "esdp.conf"])?;
    ws.ok(&["mine"])?;
    let central = read_central_xml(&ws.read("esdp-central.xml")).map_err(|e| e.to_string())?;
    let files = central.manifest.units.len();
    let txs = central.transactions.len();
    check(files >= 50 && txs >= 200, || format!("fixture too small: {files} files, {txs} transactions"))?;
    let repo = read_mined_xml(&ws.read("esdp-mined.xml")).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for query in DEFAULT_QUERIES.lines().filter(|l| !l.trim().is_empty()) {
        let sketch = parse_query(query).map_err(|e| e.to_string())?;
        let times = (0..5)
            .map(|_| match_patterns(&sketch, &repo, 10).map(|r| r.elapsed_ms()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let m = median(times);
        check(m <= 200.0, || format!("{query}: median {m:.3} ms"))?;
        worst = worst.max(m);
    }
    let csv = ws.ok(&["bench"])?;
    check(csv.lines().count() == 6, || format!("bench printed {csv:?}"))?;
    Ok(format!(
        "{files} files, {txs} transactions, {} patterns, worst median {worst:.3} ms",
        repo.len()
    ))
}

fn criterion_6() -> Outcome {
    let config = MiningConfig {
        min_support: 1,
        max_k: 6,
        ..MiningConfig::default()
    };
    let mut rejected = 0;
    for seed in 0..100 {
        let (manifest, txs) = random_central_model(seed);
        let first = write_central_xml(&manifest, &txs).map_err(|e| format!("seed {seed}: {e}"))?;
        let back = read_central_xml(&first).map_err(|e| format!("seed {seed}: {e}"))?;
        let second = write_central_xml(&back.manifest, &back.transactions).map_err(|e| e.to_string())?;
        check(first == second, || format!("central seed {seed} not byte-identical"))?;

        let patterns = random_patterns(seed);
        let provenance = Provenance {
            central_digest: format!("{seed:064x}"),
            sequences: 50,
        };
        let first = write_mined_xml(&patterns, &config, &provenance).map_err(|e| format!("seed {seed}: {e}"))?;
        let back = read_mined_xml(&first).map_err(|e| format!("seed {seed}: {e}"))?;
        let second = back.to_xml().map_err(|e| e.to_string())?;
        check(first == second, || format!("mined seed {seed} not byte-identical"))?;

        if let Some(p) = patterns.first() {
            let text = String::from_utf8(first).map_err(|e| e.to_string())?;
            let bad_score = text.replacen(&format!("score=\"{}\"", p.score), &format!("score=\"{}\"", p.score + 1), 1);
            check(read_mined_xml(bad_score.as_bytes()).is_err(), || format!("seed {seed}: bad score accepted"))?;
            let last = patterns.len();
            let bad_rank = text.replacen(&format!("rank=\"{last}\""), &format!("rank=\"{}\"", last + 1), 1);
            check(read_mined_xml(bad_rank.as_bytes()).is_err(), || format!("seed {seed}: rank gap accepted"))?;
            rejected += 2;
        }
    }
    Ok(format!("100 central + 100 mined models byte-identical, {rejected} corrupted documents rejected"))
}

fn criterion_7() -> Outcome {
    let mut degraded = 0;
    let mut crashes = Vec::new();
    for seed in 0..50u64 {
        let ws = Workspace::new(&random_corpus(seed));
        let build = ws.run(&["build", "--config", "esdp.conf"]);
        let mut steps = vec![("build", build)];
        if steps[0].1.status.success() {
            if String::from_utf8_lossy(&steps[0].1.stdout).contains("degraded units") {
                degraded += 1;
            }
            steps.push(("mine", ws.run(&["mine"])));
            if steps[1].1.status.success() {
                for q in ["m0()", "java.util.List", "f", "new C00()"] {
                    steps.push(("query", ws.run(&["query", q])));
                }
            }
        }
        for (step, out) in steps {
            // Anything other than a clean 0/1/2 exit is a crash (panic = 101, signal = None).
            if !matches!(out.status.code(), Some(0..=2)) {
                crashes.push(format!(
                    "seed {seed} {step}: {:?} {}",
                    out.status.code(),
                    String::from_utf8_lossy(&out.stderr).trim()
                ));
            } else if !out.status.success() {
                crashes.push(format!("seed {seed} {step} failed: {}", String::from_utf8_lossy(&out.stderr).trim()));
            }
        }
    }
    check(crashes.is_empty(), || crashes.join("; "))?;
    check(degraded > 0, || "no corpus exercised the degraded parse path".into())?;
    Ok(format!("50 corpora, 0 crashes, {degraded} with degraded units"))
}

fn criterion_8() -> Outcome {
    let corpus = desk_corpus(9, 16);
    let queries = ["Connection", "getConnection()", "XMLParser", "new ArrayList()", "ActionListener"];
    let mut central = Vec::new();
    let mut mined = Vec::new();
    let mut answers = Vec::new();
    for parallel in [false, false, true] {
        let ws = Workspace::new(&corpus);
        let flag: &[&str] = if parallel { &["--parallel"] } else { &[] };
        ws.ok(&[&["build", "--config", "esdp.conf"][..], flag].concat())?;
        ws.ok(&[&["mine"][..], flag].concat())?;
        central.push(strip_built(&ws.read("esdp-central.xml")));
        mined.push(ws.read("esdp-mined.xml"));
        let mut out = String::new();
        for q in queries {
            out.push_str(&strip_elapsed(&ws.ok(&[&["query", "--skeleton", q][..], flag].concat())?));
        }
        answers.push(out);
        ws.ok(&[&["bench", "--runs", "2"][..], flag].concat())?;
    }
    check(central.iter().all(|c| *c == central[0]), || "central XML differs between runs".into())?;
    check(mined.iter().all(|m| *m == mined[0]), || "mined XML differs between runs".into())?;
    for (run, a) in answers.iter().enumerate().skip(1) {
        let diff = a.lines().zip(answers[0].lines()).find(|(x, y)| x != y);
        check(a == &answers[0], || format!("query results differ in run {}: {diff:?}", run + 1))?;
    }
    check(!mined[0].is_empty() && answers[0].lines().count() > queries.len(), || "nothing was compared".into())?;
    Ok(format!(
        "2 serial runs + 1 parallel run: identical central ({} bytes), mined ({} bytes), query output",
        central[0].len(),
        mined[0].len()
    ))
}

fn main() {
    let criteria: [(&str, Criterion); 8] = [
        ("miner oracle equivalence", criterion_1),
        ("abstraction fidelity", criterion_2),
        ("ranking law", criterion_3),
        ("planted-pattern retrieval", criterion_4),
        ("query latency", criterion_5),
        ("XML round-trip", criterion_6),
        ("pipeline robustness", criterion_7),
        ("determinism", criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {} {name}", n + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {label}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {label}: {detail}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

