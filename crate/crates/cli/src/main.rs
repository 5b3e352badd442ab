use std::io::{BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use esdp_core::corpus::{check_staleness, load_term_list, parse_source_config, TermList};
use esdp_core::mine::MiningConfig;
use esdp_core::pipeline::{build_central, mine_central, stats};
use esdp_core::recommend::{
    assemble_skeleton, match_patterns, parse_query, render_text, render_xml, suggest_terms, Recommendation,
};
use esdp_core::store::{read_central_xml, read_file, read_mined_xml, write_file, CentralRepository, MinedRepository};

const DEFAULT_QUERIES: &str = include_str!("../data/default_queries.txt");

#[derive(Parser)]
#[command(name = "esdp", version, about = "Mine API usage patterns from Java sources and query them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Source configuration file (required by `build`)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Central repository file
    #[arg(long, global = true, default_value = "esdp-central.xml")]
    central: PathBuf,
    /// Mined repository file
    #[arg(long, global = true, default_value = "esdp-mined.xml")]
    mined: PathBuf,
    #[arg(long, global = true, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    min_support: u32,
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    max_k: u32,
    #[arg(long, global = true, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    top_k: u32,
    /// Print the code skeleton of the top recommendation
    #[arg(long, global = true)]
    skeleton: bool,
    /// Mine and benchmark with parallel workers
    #[arg(long, global = true)]
    parallel: bool,
    /// Extra trending-terms file for suggestions
    #[arg(long, global = true)]
    terms: Option<PathBuf>,
    /// Print recommendations as XML
    #[arg(long, global = true)]
    xml: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the configured sources and write the central repository
    Build,
    /// Mine the central repository into ranked patterns
    Mine,
    /// Run one query against the mined repository
    Query {
        /// Query words, joined with spaces
        #[arg(required = true)]
        words: Vec<String>,
    },
    /// Read queries line by line; `?prefix` suggests terms, `:quit` exits
    Repl,
    /// Time the queries in a file (default: built-in list) and print CSV
    Bench {
        queries: Option<PathBuf>,
        /// Timed runs per query
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
        runs: u32,
    },
    /// Print corpus and pattern counts
    Stats,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<esdp_core::Error> for Failure {
    fn from(e: esdp_core::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match &cli.command {
        Command::Build => cmd_build(&cli.opts),
        Command::Mine => cmd_mine(&cli.opts),
        Command::Query { words } => cmd_query(&cli.opts, &words.join(" ")),
        Command::Repl => cmd_repl(&cli.opts),
        Command::Bench { queries, runs } => cmd_bench(&cli.opts, queries.as_deref(), *runs as usize),
        Command::Stats => cmd_stats(&cli.opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Current time, overridable through `ESDP_NOW` (RFC 3339) for reproducible runs.
fn now() -> anyhow::Result<DateTime<Utc>> {
    match std::env::var("ESDP_NOW") {
        Ok(s) => Ok(DateTime::parse_from_rfc3339(&s)
            .with_context(|| format!("ESDP_NOW={s:?}"))?
            .with_timezone(&Utc)),
        Err(_) => Ok(Utc::now()),
    }
}

fn mining_config(opts: &Opts) -> MiningConfig {
    MiningConfig {
        min_support: opts.min_support as usize,
        max_k: opts.max_k as usize,
        ..MiningConfig::default()
    }
}

fn load_central(path: &Path) -> anyhow::Result<CentralRepository> {
    let bytes = read_file(path)?;
    read_central_xml(&bytes).with_context(|| format!("reading {}", path.display()))
}

fn load_mined(path: &Path) -> anyhow::Result<MinedRepository> {
    let bytes = read_file(path)?;
    read_mined_xml(&bytes).with_context(|| format!("reading {}", path.display()))
}

fn cmd_build(opts: &Opts) -> CmdResult {
    let config_path = opts
        .config
        .as_deref()
        .ok_or_else(|| Failure::Usage("build requires --config PATH".into()))?;
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", config_path.display())))?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let config = parse_source_config(&text, base).map_err(|e| Failure::Usage(e.to_string()))?;
    let now = now()?;

    if opts.central.exists() {
        if let Ok(previous) = load_central(&opts.central) {
            match check_staleness(&previous.manifest, now) {
                Ok(s) if s.stale => println!("repository stale: {} days", s.age_days),
                Ok(_) => {}
                Err(e) => eprintln!("warning: {e}"),
            }
        }
    }

    let out = build_central(&config.descriptors, &config.scan_options(), now)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    write_file(&opts.central, &out.xml)?;
    let c = &out.central;
    println!("units: {}", c.manifest.units.len());
    println!("transactions: {} ({} method blocks)", c.transactions.len(), c.method_transactions());
    println!("items: {}", out.items);
    if !out.degraded_units.is_empty() {
        println!("degraded units: {}", out.degraded_units.len());
    }
    println!(
        "staleness: {} (age {} days, interval {} days)",
        if out.staleness.stale { "stale" } else { "fresh" },
        out.staleness.age_days,
        c.manifest.update_interval_days
    );
    println!("wrote {}", opts.central.display());
    Ok(())
}

fn cmd_mine(opts: &Opts) -> CmdResult {
    let bytes = read_file(&opts.central)?;
    let out = mine_central(&bytes, &mining_config(opts), opts.parallel)
        .with_context(|| format!("mining {}", opts.central.display()))?;
    write_file(&opts.mined, &out.xml)?;
    println!("patterns: {}", out.repo.len());
    for p in out.repo.patterns().iter().take(5) {
        println!("{}\t{}\t{}\t{:.6}\t{}", p.rank, p.score, p.support, p.confidence, p.render());
    }
    println!("wrote {}", opts.mined.display());
    Ok(())
}

fn print_recommendation(opts: &Opts, rec: &Recommendation, central: Option<&CentralRepository>) {
    let skeleton = if opts.skeleton {
        match (rec.entries.first(), central) {
            (Some(top), Some(central)) => match assemble_skeleton(&top.pattern, central, 0) {
                Ok(s) => Some(s),
                Err(e) => {
                    eprintln!("skeleton unavailable: {e}");
                    None
                }
            },
            (Some(_), None) => {
                eprintln!("skeleton unavailable: central repository not loaded");
                None
            }
            (None, _) => None,
        }
    } else {
        None
    };
    if opts.xml {
        print!("{}", render_xml(rec, skeleton.as_ref()));
    } else {
        if rec.entries.is_empty() {
            println!("0 results");
        } else {
            print!("{}", render_text(rec));
        }
        if let Some(s) = &skeleton {
            print!("{}", s.render());
        }
    }
    println!("elapsed: {:.3} ms", rec.elapsed_ms());
}

fn cmd_query(opts: &Opts, raw: &str) -> CmdResult {
    let sketch = parse_query(raw).map_err(|e| Failure::Usage(e.to_string()))?;
    let repo = load_mined(&opts.mined)?;
    let central = if opts.skeleton { load_central(&opts.central).ok() } else { None };
    let rec = match_patterns(&sketch, &repo, opts.top_k as usize)?;
    print_recommendation(opts, &rec, central.as_ref());
    Ok(())
}

fn collect_terms(opts: &Opts, central: Option<&CentralRepository>) -> anyhow::Result<TermList> {
    let mut all = Vec::new();
    if let Some(c) = central {
        all.extend(c.manifest.terms.iter().flat_map(|t| t.terms.iter().cloned()));
    }
    if let Some(path) = &opts.terms {
        all.extend(load_term_list(path, "cli")?.terms);
    }
    Ok(TermList::new("all", all))
}

fn cmd_repl(opts: &Opts) -> CmdResult {
    let repo = load_mined(&opts.mined)?;
    let central = load_central(&opts.central).ok();
    let terms = collect_terms(opts, central.as_ref())?;
    let interactive = std::io::stdin().is_terminal();
    let mut stdout = std::io::stdout();
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    loop {
        if interactive {
            print!("esdp> ");
            let _ = stdout.flush();
        }
        let Some(line) = lines.next() else { break };
        let line = line.context("reading input")?;
        let line = line.trim();
        if line == ":quit" || line == ":q" {
            break;
        }
        if let Some(prefix) = line.strip_prefix('?') {
            let found = suggest_terms(prefix.trim(), &terms, opts.top_k as usize);
            if found.is_empty() {
                println!("no suggestions");
            }
            for t in found {
                println!("{t}");
            }
            continue;
        }
        let result = parse_query(line)
            .map_err(anyhow::Error::from)
            .and_then(|s| match_patterns(&s, &repo, opts.top_k as usize).map_err(Into::into));
        match result {
            Ok(rec) => print_recommendation(opts, &rec, central.as_ref()),
            Err(e) => println!("error: {e}"),
        }
    }
    Ok(())
}

struct BenchQuery {
    text: String,
    /// Rendering of the pattern the query is meant to find.
    expected: Option<String>,
}

fn parse_bench_queries(text: &str) -> Vec<BenchQuery> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| match l.split_once('\t') {
            Some((q, e)) => BenchQuery {
                text: q.trim().to_string(),
                expected: Some(e.trim().to_string()),
            },
            None => BenchQuery {
                text: l.trim().to_string(),
                expected: None,
            },
        })
        .collect()
}

fn first_match_rank(rec: &Recommendation, expected: Option<&str>) -> Option<usize> {
    let pos = match expected {
        Some(e) => rec.entries.iter().position(|x| x.pattern.render() == e),
        None => rec.entries.iter().position(|x| x.match_strength >= 2),
    };
    pos.map(|p| p + 1)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

struct BenchRow {
    query: String,
    median_ms: f64,
    first_match_rank: Option<usize>,
    entries: usize,
    rec: Recommendation,
}

fn bench_one(q: &BenchQuery, repo: &MinedRepository, top_k: usize, runs: usize) -> anyhow::Result<BenchRow> {
    let sketch = parse_query(&q.text)?;
    let mut times = Vec::with_capacity(runs);
    let mut last = None;
    for _ in 0..runs {
        let rec = match_patterns(&sketch, repo, top_k)?;
        times.push(rec.elapsed_ms());
        last = Some(rec);
    }
    let rec = last.expect("runs >= 1");
    Ok(BenchRow {
        query: q.text.clone(),
        median_ms: median(&mut times),
        first_match_rank: first_match_rank(&rec, q.expected.as_deref()),
        entries: rec.entries.len(),
        rec,
    })
}

fn cmd_bench(opts: &Opts, queries: Option<&Path>, runs: usize) -> CmdResult {
    let text = match queries {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => DEFAULT_QUERIES.to_string(),
    };
    let queries = parse_bench_queries(&text);
    if queries.is_empty() {
        return Err(anyhow!("no queries to run").into());
    }
    let load_start = Instant::now();
    let repo = load_mined(&opts.mined)?;
    eprintln!(
        "loaded {} patterns in {:.3} ms",
        repo.len(),
        load_start.elapsed().as_secs_f64() * 1000.0
    );
    let top_k = opts.top_k as usize;
    let rows = queries
        .iter()
        .map(|q| bench_one(q, &repo, top_k, runs))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if opts.parallel {
        let parallel = queries
            .par_iter()
            .map(|q| bench_one(q, &repo, top_k, runs))
            .collect::<anyhow::Result<Vec<_>>>()?;
        for (s, p) in rows.iter().zip(&parallel) {
            if s.rec.entries != p.rec.entries {
                return Err(anyhow!("parallel results differ from serial for query {:?}", s.query).into());
            }
        }
        eprintln!("parallel run matches serial results");
    }
    let mut csv = csv::Writer::from_writer(std::io::stdout());
    csv.write_record(["query", "median_ms", "first_match_rank", "entries"])
        .context("writing CSV")?;
    for r in &rows {
        csv.write_record([
            r.query.clone(),
            format!("{:.3}", r.median_ms),
            r.first_match_rank.map(|n| n.to_string()).unwrap_or_default(),
            r.entries.to_string(),
        ])
        .context("writing CSV")?;
    }
    csv.flush().context("writing CSV")?;
    let mut medians: Vec<f64> = rows.iter().map(|r| r.median_ms).collect();
    let max = medians.iter().copied().fold(0.0, f64::max);
    eprintln!("summary: median {:.3} ms, max {:.3} ms", median(&mut medians), max);
    Ok(())
}

fn cmd_stats(opts: &Opts) -> CmdResult {
    let central = opts.central.exists().then(|| load_central(&opts.central)).transpose()?;
    let mined = opts.mined.exists().then(|| load_mined(&opts.mined)).transpose()?;
    let s = stats(central.as_ref(), mined.as_ref())?;
    if let Some(files) = s.files {
        println!("files: {files}");
    }
    if let Some(m) = s.method_transactions {
        println!("method transactions: {m}");
    }
    if let Some(p) = s.patterns {
        println!("patterns: {p}");
    }
    if let Some((prefix, n)) = &s.prominent_api {
        println!("prominent API: {prefix} ({n})");
    }
    if let Some(c) = &central {
        if let Ok(st) = check_staleness(&c.manifest, now()?) {
            if st.stale {
                println!("repository stale: {} days", st.age_days);
            }
        }
    }
    Ok(())
}
