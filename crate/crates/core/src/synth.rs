//! Deterministic generators for Java test corpora and repository models.
//!
//! Everything here is seeded, so the same seed always yields the same
//! files and models.

use std::fmt::Write as _;
use std::path::Path;

use chrono::{TimeZone, Utc};
use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{RngExt, SeedableRng};

use crate::abstraction::{BlockKind, Item, ItemKind, Transaction};
use crate::corpus::{unit_key, Manifest, SourceDescriptor, SourceKind, SourceUnit, TermList, UnitSummary};
use crate::error::{Error, Result};
use crate::mine::{rank_patterns, PatternItem, SequencePattern};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthFile {
    /// Relative path with `/` separators.
    pub path: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SyntheticCorpus {
    pub files: Vec<SynthFile>,
}

impl SyntheticCorpus {
    pub fn write_to(&self, root: &Path) -> Result<()> {
        for f in &self.files {
            let path = root.join(&f.path);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(&path, &f.text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn units(&self, source_id: &str) -> Vec<SourceUnit> {
        let mut units: Vec<_> = self
            .files
            .iter()
            .map(|f| SourceUnit::from_bytes(f.path.clone(), source_id, f.text.as_bytes()))
            .collect();
        units.sort_by(|a, b| a.path.cmp(&b.path));
        units
    }
}

const MODULES: &[&str] = &["billing", "catalog", "inventory", "reporting", "accounts", "gateway"];
const ROLES: &[&str] = &["Service", "Manager", "Controller", "Repository", "Helper", "Loader", "Panel"];
const VERBS: &[&str] = &["load", "save", "refresh", "render", "sync", "export", "collect", "check"];
const NOUNS: &[&str] = &[
    "Orders", "Users", "Prices", "Stock", "Report", "Invoice", "Session", "Layout", "Queue", "Ledger", "Profile",
    "Cache",
];

/// Keeps each line with probability `p`, always keeping at least the first.
fn some_of(rng: &mut StdRng, lines: &[String], p: f64) -> String {
    let mut out = String::new();
    for (i, l) in lines.iter().enumerate() {
        if i == 0 || rng.random_bool(p) {
            out.push_str("        ");
            out.push_str(l);
            out.push('\n');
        }
    }
    out
}

/// One statement group inside a generated method body.
struct Snippet {
    imports: &'static [&'static str],
    body: fn(&mut StdRng, &str) -> String,
}

fn jdbc(rng: &mut StdRng, v: &str) -> String {
    let table = ["orders", "users", "items", "audit"].choose(rng).unwrap();
    let mut lines = vec![format!("Connection {v}Conn = DriverManager.getConnection(url, user, password);")];
    match rng.random_range(0..3) {
        0 => {
            lines.push(format!("Statement {v}St = {v}Conn.createStatement();"));
            lines.push(format!("ResultSet {v}Rs = {v}St.executeQuery(\"SELECT * FROM {table}\");"));
        }
        1 => {
            lines.push(format!("PreparedStatement {v}Ps = {v}Conn.prepareStatement(\"DELETE FROM {table}\");"));
            lines.push(format!("{v}Ps.executeUpdate();"));
        }
        _ => lines.push(format!("{v}Conn.setAutoCommit(false);")),
    }
    lines.push(format!("{v}Conn.close();"));
    some_of(rng, &lines, 0.8)
}

fn xml(rng: &mut StdRng, v: &str) -> String {
    let lines = [
        format!("XMLParser {v}Parser = new XMLParser(path);"),
        format!("Document {v}Doc = {v}Parser.parse();"),
        format!("Element {v}Root = {v}Doc.getDocumentElement();"),
        format!("label = {v}Root.getTagName();"),
    ];
    some_of(rng, &lines, 0.6)
}

fn swing(rng: &mut StdRng, v: &str) -> String {
    let label = ["OK", "Cancel", "Apply", "Close"].choose(rng).unwrap();
    let lines = [
        format!("JButton {v}Button = new JButton(\"{label}\");"),
        format!("{v}Button.addActionListener(this);"),
        format!("{v}Button.setEnabled(ready);"),
        format!("frame.add({v}Button);"),
    ];
    some_of(rng, &lines, 0.6)
}

fn scanner(rng: &mut StdRng, v: &str) -> String {
    let mut s = format!("        Scanner {v}In = new Scanner(System.in);\n");
    if rng.random_bool(0.7) {
        let _ = write!(
            s,
            "        try {{\n            total += {v}In.nextInt();\n        }} catch (InputMissmatchException ex) {{\n            label = ex.getMessage();\n        }}\n"
        );
    } else {
        let _ = writeln!(s, "        label = {v}In.nextLine();");
    }
    if rng.random_bool(0.5) {
        let _ = writeln!(s, "        {v}In.close();");
    }
    s
}

fn io(rng: &mut StdRng, v: &str) -> String {
    let lines = [
        format!("BufferedReader {v}Reader = new BufferedReader(new FileReader(path));"),
        format!("label = {v}Reader.readLine();"),
        format!("{v}Reader.close();"),
    ];
    some_of(rng, &lines, 0.7)
}

fn collections(rng: &mut StdRng, v: &str) -> String {
    let lines = [
        format!("List<String> {v}Items = new ArrayList<>();"),
        format!("{v}Items.add(path);"),
        format!("total += {v}Items.size();"),
    ];
    some_of(rng, &lines, 0.6)
}

const SNIPPETS: &[Snippet] = &[
    Snippet {
        imports: &[
            "java.sql.Connection",
            "java.sql.DriverManager",
            "java.sql.PreparedStatement",
            "java.sql.ResultSet",
            "java.sql.Statement",
        ],
        body: jdbc,
    },
    Snippet {
        imports: &["util.XMLParser", "org.w3c.dom.Document", "org.w3c.dom.Element"],
        body: xml,
    },
    Snippet {
        imports: &["javax.swing.JButton"],
        body: swing,
    },
    Snippet {
        imports: &["java.util.Scanner", "util.InputMissmatchException"],
        body: scanner,
    },
    Snippet {
        imports: &["java.io.BufferedReader", "java.io.FileReader"],
        body: io,
    },
    Snippet {
        imports: &["java.util.ArrayList", "java.util.List"],
        body: collections,
    },
];

const FIELDS: &[(&str, &str)] = &[
    ("String", "url = \"jdbc:h2:mem:app\""),
    ("String", "user = \"sa\""),
    ("String", "password = \"\""),
    ("String", "label"),
    ("int", "total"),
    ("boolean", "ready"),
    ("long", "updatedAt"),
    ("double", "ratio"),
];

const XML_PARSER: &str = "package util;

import org.w3c.dom.Document;
import javax.xml.parsers.DocumentBuilder;
import javax.xml.parsers.DocumentBuilderFactory;

public class XMLParser {
    private final String path;

    public XMLParser(String path) {
        this.path = path;
    }

    public Document parse() throws Exception {
        DocumentBuilder builder = DocumentBuilderFactory.newInstance().newDocumentBuilder();
        return builder.parse(path);
    }
}
";

const INPUT_EXCEPTION: &str = "package util;

public class InputMissmatchException extends RuntimeException {
    public InputMissmatchException(String message) {
        super(message);
    }
}
";

/// A desk-scale application corpus: `files` generated classes plus two
/// shared utility classes. Each method body uses one API family (JDBC,
/// XML, Swing, console input, file input or collections), sometimes two,
/// with optional statements dropped at random and calls to class-local
/// helpers mixed in.
pub fn desk_corpus(seed: u64, files: usize) -> SyntheticCorpus {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = vec![
        SynthFile {
            path: "util/XMLParser.java".into(),
            text: XML_PARSER.into(),
        },
        SynthFile {
            path: "util/InputMissmatchException.java".into(),
            text: INPUT_EXCEPTION.into(),
        },
    ];
    for n in 0..files {
        let module = MODULES[n % MODULES.len()];
        let class = format!("{}{}", ROLES.choose(&mut rng).unwrap(), n);
        let methods = rng.random_range(3..=5);
        let mut imports: Vec<&str> = Vec::new();
        let mut bodies = Vec::new();
        let mut uses_swing = false;
        for m in 0..methods {
            let mut body = String::new();
            let picks = if rng.random_bool(0.25) { 2 } else { 1 };
            for p in 0..picks {
                let idx = rng.random_range(0..SNIPPETS.len());
                uses_swing |= idx == 2;
                let snip = &SNIPPETS[idx];
                imports.extend(snip.imports);
                body.push_str(&(snip.body)(&mut rng, &format!("v{p}")));
                if rng.random_bool(0.5) {
                    let _ = writeln!(body, "        step{n}x{m}x{p}();");
                }
            }
            let verb = VERBS.choose(&mut rng).unwrap();
            let noun = NOUNS.choose(&mut rng).unwrap();
            bodies.push(format!("    public void {verb}{noun}{m}(String path) throws Exception {{\n{body}    }}\n"));
        }
        if uses_swing {
            imports.extend(["java.awt.event.ActionEvent", "java.awt.event.ActionListener", "javax.swing.JFrame"]);
        }
        imports.sort_unstable();
        imports.dedup();
        imports.retain(|_| rng.random_bool(0.9));
        let mut text = format!("package app.{module};\n\n");
        for i in &imports {
            let _ = writeln!(text, "import {i};");
        }
        let implements = if uses_swing { " implements ActionListener" } else { "" };
        let _ = write!(text, "\n/** Generated {module} component. */\npublic class {class}{implements} {{\n");
        for (ty, decl) in FIELDS {
            if rng.random_bool(0.3) {
                let _ = writeln!(text, "    private {ty} {decl};");
            }
        }
        if uses_swing {
            text.push_str("    private JFrame frame = new JFrame();\n");
        }
        text.push('\n');
        text.push_str(&bodies.join("\n"));
        if uses_swing {
            text.push_str(
                "\n    @Override\n    public void actionPerformed(ActionEvent event) {\n        frame.dispose();\n    }\n",
            );
        }
        text.push_str("}\n");
        out.push(SynthFile {
            path: format!("app/{module}/{class}.java"),
            text,
        });
    }
    SyntheticCorpus { files: out }
}

/// Total method blocks and planted blocks of [`planted_corpus`].
pub const PLANTED_BLOCKS: usize = 20;
pub const PLANTED_COUNT: usize = 8;
/// The planted call sequence, as written in the source.
pub const PLANTED_CALLS: [&str; 3] = ["open", "query", "commit"];

/// Twenty parameterless method blocks across four classes; eight of them
/// contain the calls `store.open()`, `store.query()`, `store.commit()` in
/// that order, interleaved with calls to block-unique helpers.
pub fn planted_corpus(seed: u64) -> SyntheticCorpus {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut blocks: Vec<bool> = (0..PLANTED_BLOCKS).map(|i| i < PLANTED_COUNT).collect();
    blocks.shuffle(&mut rng);
    let mut files = Vec::new();
    for (c, chunk) in blocks.chunks(PLANTED_BLOCKS / 4).enumerate() {
        let mut text = format!("package planted;\n\npublic class Job{c} {{\n    private Store store;\n");
        for (m, &planted) in chunk.iter().enumerate() {
            let id = c * 10 + m;
            let _ = writeln!(text, "\n    void task{m}() {{");
            let mut noise = (0..rng.random_range(1..=3)).map(|k| format!("helper{id}x{k}"));
            if planted {
                for call in PLANTED_CALLS {
                    if rng.random_bool(0.5) {
                        if let Some(h) = noise.next() {
                            let _ = writeln!(text, "        {h}();");
                        }
                    }
                    let _ = writeln!(text, "        store.{call}();");
                }
            }
            for h in noise {
                let _ = writeln!(text, "        {h}();");
            }
            let _ = writeln!(text, "    }}");
        }
        text.push_str("}\n");
        files.push(SynthFile {
            path: format!("planted/Job{c}.java"),
            text,
        });
    }
    SyntheticCorpus { files }
}

const IDENTS: &[&str] = &["a", "b", "value", "list", "map", "conn", "x1", "Node", "Tree", "data"];
const TYPES: &[&str] = &["int", "String", "List<String>", "Map<String, Integer>", "Object", "Widget", "long[]"];

fn random_statement(rng: &mut StdRng) -> String {
    let id = IDENTS.choose(rng).unwrap();
    let ty = TYPES.choose(rng).unwrap();
    match rng.random_range(0..10) {
        0 => format!("{ty} {id} = new {}();", TYPES.choose(rng).unwrap()),
        1 => format!("{id}.{}({});", IDENTS.choose(rng).unwrap(), IDENTS.choose(rng).unwrap()),
        2 => format!("if ({id} != null) {{ {id}.run(); }}"),
        3 => format!("for (int i = 0; i < {id}.size(); i++) {{ total += i; }}"),
        4 => format!("try {{ {id}.close(); }} catch (Exception e) {{ throw new IllegalStateException(e); }}"),
        5 => format!("String s = \"{id} \\\"quoted\\\" text\";"),
        6 => format!("Object o = ({ty}) {id};"),
        7 => format!("this.{id}.next.{}.value = 3;", IDENTS.choose(rng).unwrap()),
        8 => "// comment with { brace".to_string(),
        _ => format!("return {id};"),
    }
}

fn corrupt(rng: &mut StdRng, text: &mut String) {
    let pos = |rng: &mut StdRng, text: &String| {
        let mut p = rng.random_range(0..=text.len());
        while !text.is_char_boundary(p) {
            p -= 1;
        }
        p
    };
    match rng.random_range(0..7) {
        0 => {
            if let Some(p) = text.rfind('}') {
                text.remove(p);
            }
        }
        1 => {
            let p = pos(rng, text);
            text.insert(p, '{');
        }
        2 => {
            let p = pos(rng, text);
            text.insert_str(p, "\"never closed ");
        }
        3 => {
            let p = pos(rng, text);
            text.insert_str(p, "/* open comment ");
        }
        4 => {
            let p = pos(rng, text);
            text.truncate(p);
        }
        5 => {
            let p = pos(rng, text);
            text.insert_str(p, "'x ñ ☃ \u{0}");
        }
        _ => {
            let p = pos(rng, text);
            text.insert(p, '}');
        }
    }
}

/// A small corpus of loosely Java-shaped files. Roughly half the files are
/// damaged with unbalanced braces, unterminated literals or comments,
/// truncation or odd characters.
pub fn random_corpus(seed: u64) -> SyntheticCorpus {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut files = Vec::new();
    for f in 0..rng.random_range(1..=6) {
        let mut text = String::new();
        if rng.random_bool(0.8) {
            let _ = writeln!(text, "package gen.p{};", rng.random_range(0..3));
        }
        for _ in 0..rng.random_range(0..4) {
            let _ = writeln!(text, "import {}.{};", ["java.util", "java.io", "lib"].choose(&mut rng).unwrap(), TYPES.choose(&mut rng).unwrap().split('<').next().unwrap().trim_end_matches("[]"));
        }
        for c in 0..rng.random_range(1..=2) {
            let kind = ["class", "interface", "enum", "record"].choose(&mut rng).unwrap();
            let header = if *kind == "record" {
                format!("record R{f}{c}(int a, String b)")
            } else {
                format!("{kind} C{f}{c}")
            };
            let _ = writeln!(text, "public {header} {{");
            if *kind == "enum" {
                text.push_str("    A, B(2), C { void f() {} };\n");
            }
            for m in 0..rng.random_range(0..4) {
                let ty = TYPES.choose(&mut rng).unwrap();
                let _ = writeln!(text, "    private {ty} f{m};");
                let _ = writeln!(text, "    {ty} m{m}({ty} p, int q) {{");
                for _ in 0..rng.random_range(0..6) {
                    let _ = writeln!(text, "        {}", random_statement(&mut rng));
                }
                text.push_str("    }\n");
            }
            text.push_str("}\n");
        }
        if rng.random_bool(0.5) {
            for _ in 0..rng.random_range(1..=2) {
                corrupt(&mut rng, &mut text);
            }
        }
        files.push(SynthFile {
            path: format!("gen/F{f}.java"),
            text,
        });
    }
    SyntheticCorpus { files }
}

const NAME_CHARS: &[char] = &['a', 'b', 'Z', '.', '(', ')', ':', '<', '>', '&', '"', '\'', ' ', '_', 'é', '\t'];

fn random_name(rng: &mut StdRng) -> String {
    let len = rng.random_range(1..=12);
    (0..len).map(|_| *NAME_CHARS.choose(rng).unwrap()).collect()
}

/// A random but internally consistent manifest with transactions.
pub fn random_central_model(seed: u64) -> (Manifest, Vec<Transaction>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let built = Utc.timestamp_opt(rng.random_range(1_500_000_000..1_900_000_000), rng.random_range(0..1_000_000_000)).unwrap();
    let mut m = Manifest::empty(built);
    m.update_interval_days = rng.random_range(1..=365);
    for s in 0..rng.random_range(0..=3) {
        let kind = *SourceKind::ALL.choose(&mut rng).unwrap();
        m.sources.push(SourceDescriptor::new(format!("s{s}"), kind, format!("/corpus/{}", random_name(&mut rng)), random_name(&mut rng)));
        if kind == SourceKind::TrendingTerms {
            let terms = (0..rng.random_range(0..4)).map(|t| format!("term{t}<&>"));
            m.terms.push(TermList::new(format!("s{s}"), terms));
        }
    }
    let mut txs = Vec::new();
    let source_ids: Vec<String> = m.sources.iter().map(|s| s.id.clone()).collect();
    for u in 0..if source_ids.is_empty() { 0 } else { rng.random_range(0..=4) } {
        let source = source_ids.choose(&mut rng).unwrap().clone();
        let path = format!("p{u}/{}.java", random_name(&mut rng).replace(['/', '\t'], "_"));
        let key = unit_key(&source, &path);
        m.units.push(UnitSummary {
            path,
            source_id: source,
            package: format!("pkg{u}"),
            digest: format!("{:064x}", rng.random::<u64>()),
        });
        let mut line = 1;
        for t in 0..rng.random_range(0..=4) {
            let entity = format!("pkg{u}.C{t}{}", random_name(&mut rng));
            let start = line;
            let items: Vec<Item> = (0..rng.random_range(1..=5))
                .map(|_| {
                    line += rng.random_range(0..3);
                    Item::new(*ItemKind::ALL.choose(&mut rng).unwrap(), random_name(&mut rng), entity.clone(), line)
                })
                .collect();
            line += 1;
            let span = (start, line);
            txs.push(Transaction {
                id: Transaction::make_id(&key, &entity, span),
                entity,
                block: if t == 0 { BlockKind::Class } else { BlockKind::Method },
                items,
                unit: key.clone(),
                span,
            });
        }
    }
    (m, txs)
}

/// A random ranked pattern list satisfying the mined-repository invariants.
pub fn random_patterns(seed: u64) -> Vec<SequencePattern> {
    let mut rng = StdRng::seed_from_u64(seed);
    let patterns = (0..rng.random_range(0..=12))
        .map(|_| {
            let items = (0..rng.random_range(1..=6))
                .map(|_| PatternItem::new(*ItemKind::ALL.choose(&mut rng).unwrap(), random_name(&mut rng)))
                .collect();
            let support = rng.random_range(1..=50);
            let prefix_support = support + rng.random_range(0..=50);
            let mut p = SequencePattern::new(items, support, support as f64 / prefix_support as f64);
            p.exemplars = (0..rng.random_range(0..=3)).map(|e| format!("u#{}@{e}", random_name(&mut rng))).collect();
            p
        })
        .collect();
    rank_patterns(patterns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(desk_corpus(7, 5), desk_corpus(7, 5));
        assert_eq!(planted_corpus(3), planted_corpus(3));
        assert_eq!(random_corpus(11), random_corpus(11));
        assert_eq!(random_central_model(5), random_central_model(5));
        assert_eq!(random_patterns(5), random_patterns(5));
        assert_ne!(desk_corpus(1, 5), desk_corpus(2, 5));
    }

    #[test]
    fn planted_layout() {
        let c = planted_corpus(1);
        let all: String = c.files.iter().map(|f| f.text.as_str()).collect();
        assert_eq!(all.matches("void task").count(), PLANTED_BLOCKS);
        assert_eq!(all.matches("store.open()").count(), PLANTED_COUNT);
        assert_eq!(all.matches("store.commit()").count(), PLANTED_COUNT);
    }

    #[test]
    fn random_models_are_valid() {
        for seed in 0..20 {
            let (m, _) = random_central_model(seed);
            m.validate().unwrap();
        }
    }
}
