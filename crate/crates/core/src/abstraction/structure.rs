//! Block-structure recovery over the token stream.
//!
//! This is not a full Java parser. It recognizes declarations (package,
//! imports, types, fields, methods, constructors) and a fixed set of
//! statement-level facts inside method bodies. Brace matching runs on the
//! tokenizer output, so braces inside comments and literals never count.
//! Unbalanced input produces a partial tree flagged as degraded.

use std::collections::{BTreeMap, HashMap};

use super::tokenizer::{is_keyword, is_primitive, Token, TokenKind, Tokens};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypeKind {
    Class,
    Interface,
    Enum,
    Record,
    Annotation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Pos {
    fn of(t: &Token) -> Self {
        Pos {
            line: t.line,
            col: t.col,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageDecl {
    pub name: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportDecl {
    /// Imported name as written, `.*` included for on-demand imports.
    pub name: String,
    pub is_static: bool,
    pub pos: Pos,
}

/// A type as written in source, generic arguments stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeRef {
    pub name: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub type_name: String,
    pub name: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub type_name: String,
    pub name: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactKind {
    LocalVar { type_name: String, name: String },
    Invocation { name: String, arity: usize },
    Creation { type_name: String },
    /// Dotted read; the head segment may be a local variable name.
    FieldAccess { chain: Vec<String> },
    Cast { type_name: String },
    Catch { type_name: String },
    Throw { type_name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fact {
    pub kind: FactKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: String,
    pub is_constructor: bool,
    pub return_type: Option<String>,
    pub params: Vec<Param>,
    pub pos: Pos,
    pub span: (usize, usize),
    pub has_body: bool,
    pub facts: Vec<Fact>,
}

impl MethodDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub kind: TypeKind,
    pub name: String,
    /// Package- and outer-class-qualified name.
    pub qualified: String,
    pub pos: Pos,
    pub span: (usize, usize),
    pub extends: Vec<TypeRef>,
    pub implements: Vec<TypeRef>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub nested: Vec<ClassDecl>,
}

impl ClassDecl {
    /// This class and every nested class, depth first.
    pub fn walk(&self) -> Vec<&ClassDecl> {
        let mut out = vec![self];
        for n in &self.nested {
            out.extend(n.walk());
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockTree {
    pub package: Option<PackageDecl>,
    pub imports: Vec<ImportDecl>,
    /// Simple name to qualified name, from single-type imports.
    pub import_table: BTreeMap<String, String>,
    pub classes: Vec<ClassDecl>,
    pub degraded: bool,
    pub warnings: Vec<String>,
}

impl BlockTree {
    pub fn package_name(&self) -> &str {
        self.package.as_ref().map_or("", |p| p.name.as_str())
    }

    pub fn all_classes(&self) -> Vec<&ClassDecl> {
        self.classes.iter().flat_map(ClassDecl::walk).collect()
    }

    /// Simple names of every type declared in this file, mapped to their
    /// qualified names. Outer declarations win over nested ones.
    pub fn declared_types(&self) -> HashMap<&str, &str> {
        let mut out = HashMap::new();
        for c in self.all_classes() {
            out.entry(c.name.as_str()).or_insert(c.qualified.as_str());
        }
        out
    }
}

const MODIFIERS: &[&str] = &[
    "public", "protected", "private", "static", "final", "abstract", "native", "synchronized",
    "transient", "volatile", "strictfp", "default",
];

/// Contextual modifiers that tokenize as identifiers.
const SOFT_MODIFIERS: &[&str] = &["sealed", "non", "-"];

struct Parser<'a> {
    toks: Vec<&'a Token>,
    /// Index of the matching bracket for every bracket token.
    matches: Vec<Option<usize>>,
    tree: BlockTree,
}

impl<'a> Parser<'a> {
    fn new(tokens: &'a Tokens) -> Self {
        let toks: Vec<&Token> = tokens.significant().collect();
        let mut matches = vec![None; toks.len()];
        let mut stack: Vec<(usize, char)> = Vec::new();
        let mut unbalanced = false;
        for (i, t) in toks.iter().enumerate() {
            if t.kind != TokenKind::Punctuation {
                continue;
            }
            let open = match t.text.as_str() {
                "{" | "(" | "[" => {
                    stack.push((i, t.text.chars().next().unwrap()));
                    continue;
                }
                "}" => '{',
                ")" => '(',
                "]" => '[',
                _ => continue,
            };
            match stack.iter().rposition(|&(_, c)| c == open) {
                Some(depth) => {
                    if depth + 1 != stack.len() {
                        unbalanced = true;
                    }
                    let (j, _) = stack[depth];
                    stack.truncate(depth);
                    matches[i] = Some(j);
                    matches[j] = Some(i);
                }
                None => unbalanced = true,
            }
        }
        if !stack.is_empty() {
            unbalanced = true;
        }
        let mut tree = BlockTree::default();
        if unbalanced {
            tree.degraded = true;
            tree.warnings.push("unbalanced brackets".into());
        }
        Parser { toks, matches, tree }
    }

    fn len(&self) -> usize {
        self.toks.len()
    }

    fn text(&self, i: usize) -> &str {
        self.toks.get(i).map_or("", |t| t.text.as_str())
    }

    fn is(&self, i: usize, s: &str) -> bool {
        self.toks.get(i).is_some_and(|t| t.text == s)
    }

    fn is_ident(&self, i: usize) -> bool {
        self.toks.get(i).is_some_and(|t| t.is_ident())
    }

    fn last_line(&self) -> usize {
        self.toks.last().map_or(1, |t| t.line)
    }

    /// Index one past the group opened at `i`, or the end of input when the
    /// group never closes.
    fn skip_group(&mut self, i: usize, limit: usize) -> usize {
        match self.matches[i] {
            Some(j) if j > i => j + 1,
            _ => {
                self.mark_degraded(i);
                limit
            }
        }
    }

    fn mark_degraded(&mut self, i: usize) {
        if !self.tree.degraded {
            self.tree.degraded = true;
        }
        let t = self.toks[i];
        self.tree
            .warnings
            .push(format!("{}:{}: unclosed {:?}", t.line, t.col, t.text));
    }

    /// Skips `<...>` starting at `i`. Returns the index after the closing
    /// `>`, or `None` if this does not look like a type-argument list.
    fn skip_generics(&self, i: usize, limit: usize) -> Option<usize> {
        if !self.is(i, "<") {
            return None;
        }
        let mut depth = 0usize;
        let mut j = i;
        while j < limit {
            match self.text(j) {
                "<" => depth += 1,
                ">" => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(j + 1);
                    }
                }
                "," | "." | "?" | "&" | "[" | "]" | "@" => {}
                "extends" | "super" => {}
                _ if self.is_ident(j) || is_primitive(self.text(j)) => {}
                _ => return None,
            }
            j += 1;
        }
        None
    }

    fn skip_annotation(&mut self, i: usize, limit: usize) -> usize {
        let mut j = i + 1;
        while j < limit && (self.is_ident(j) || self.is(j, ".")) {
            j += 1;
        }
        if self.is(j, "(") && j < limit {
            j = self.skip_group(j, limit);
        }
        j
    }

    /// Reads a type starting at `i`: an optionally qualified name or a
    /// primitive, type arguments stripped, array dimensions and varargs
    /// rendered as `[]`. Leading annotations are skipped.
    fn parse_type(&mut self, mut i: usize, limit: usize) -> Option<(String, usize)> {
        while i < limit && self.is(i, "@") && !self.is(i + 1, "interface") {
            i = self.skip_annotation(i, limit);
        }
        if i >= limit {
            return None;
        }
        let first = self.toks[i];
        let mut name = if first.is_ident() || is_primitive(&first.text) {
            first.text.clone()
        } else {
            return None;
        };
        let mut j = i + 1;
        if !is_primitive(&first.text) {
            loop {
                if self.is(j, "<") {
                    j = self.skip_generics(j, limit)?;
                }
                if self.is(j, ".") && self.is_ident(j + 1) && j + 1 < limit {
                    name.push('.');
                    name.push_str(self.text(j + 1));
                    j += 2;
                } else {
                    break;
                }
            }
        }
        loop {
            if self.is(j, "[") && self.is(j + 1, "]") && j + 1 < limit {
                name.push_str("[]");
                j += 2;
            } else if self.is(j, ".") && self.is(j + 1, ".") && self.is(j + 2, ".") && j + 2 < limit {
                name.push_str("[]");
                j += 3;
            } else {
                break;
            }
        }
        Some((name, j))
    }

    fn parse(mut self) -> BlockTree {
        let n = self.len();
        let mut i = 0;
        while i < n {
            match self.text(i) {
                "package" => {
                    let (name, next) = self.qualified_until_semicolon(i + 1, n);
                    if self.tree.package.is_none() && !name.is_empty() {
                        self.tree.package = Some(PackageDecl {
                            name,
                            pos: Pos::of(self.toks[i]),
                        });
                    }
                    i = next;
                }
                "import" => {
                    let is_static = self.is(i + 1, "static");
                    let start = if is_static { i + 2 } else { i + 1 };
                    let (name, next) = self.qualified_until_semicolon(start, n);
                    if !name.is_empty() {
                        if !is_static && !name.ends_with(".*") {
                            let simple = name.rsplit('.').next().unwrap_or(&name).to_string();
                            self.tree.import_table.entry(simple).or_insert(name.clone());
                        }
                        self.tree.imports.push(ImportDecl {
                            name,
                            is_static,
                            pos: Pos::of(self.toks[i]),
                        });
                    }
                    i = next;
                }
                "@" if !self.is(i + 1, "interface") => i = self.skip_annotation(i, n),
                "}" => {
                    self.tree.degraded = true;
                    let t = self.toks[i];
                    self.tree
                        .warnings
                        .push(format!("{}:{}: stray '}}'", t.line, t.col));
                    i += 1;
                }
                _ => {
                    if let Some(kind) = self.type_keyword(i) {
                        let (decl, next) = self.parse_type_decl(i, kind, None, n);
                        if let Some(decl) = decl {
                            self.tree.classes.push(decl);
                        }
                        i = next;
                    } else {
                        i += 1;
                    }
                }
            }
        }
        self.tree
    }

    fn qualified_until_semicolon(&self, mut i: usize, limit: usize) -> (String, usize) {
        let mut name = String::new();
        while i < limit && !self.is(i, ";") {
            let t = self.toks[i];
            if t.is_ident() || t.is(".") || t.is("*") {
                name.push_str(&t.text);
            } else {
                break;
            }
            i += 1;
        }
        while i < limit && !self.is(i, ";") && !self.is(i, "{") && !self.is(i, "}") {
            i += 1;
        }
        if self.is(i, ";") {
            i += 1;
        }
        (name, i)
    }

    fn type_keyword(&self, i: usize) -> Option<TypeKind> {
        match self.text(i) {
            "class" if self.is_ident(i + 1) => Some(TypeKind::Class),
            "interface" if self.is_ident(i + 1) => Some(TypeKind::Interface),
            "enum" if self.is_ident(i + 1) => Some(TypeKind::Enum),
            "@" if self.is(i + 1, "interface") && self.is_ident(i + 2) => Some(TypeKind::Annotation),
            "record"
                if self.is_ident(i + 1)
                    && (self.is(i + 2, "(") || self.is(i + 2, "<"))
                    && self.toks[i].is_ident() =>
            {
                Some(TypeKind::Record)
            }
            _ => None,
        }
    }

    fn type_list(&mut self, mut i: usize, limit: usize) -> (Vec<TypeRef>, usize) {
        let mut out = Vec::new();
        while i < limit {
            match self.parse_type(i, limit) {
                Some((name, next)) => {
                    out.push(TypeRef {
                        name,
                        pos: Pos::of(self.toks[i]),
                    });
                    i = next;
                }
                None => break,
            }
            if self.is(i, ",") {
                i += 1;
            } else {
                break;
            }
        }
        (out, i)
    }

    fn parse_type_decl(
        &mut self,
        kw: usize,
        kind: TypeKind,
        outer: Option<&str>,
        limit: usize,
    ) -> (Option<ClassDecl>, usize) {
        let name_idx = if kind == TypeKind::Annotation { kw + 2 } else { kw + 1 };
        let name = self.text(name_idx).to_string();
        let qualified = match (outer, self.tree.package.as_ref()) {
            (Some(o), _) => format!("{o}.{name}"),
            (None, Some(p)) => format!("{}.{name}", p.name),
            (None, None) => name.clone(),
        };
        let mut decl = ClassDecl {
            kind,
            name,
            qualified,
            pos: Pos::of(self.toks[name_idx]),
            span: (self.toks[kw].line, self.toks[kw].line),
            extends: Vec::new(),
            implements: Vec::new(),
            fields: Vec::new(),
            methods: Vec::new(),
            nested: Vec::new(),
        };
        let mut i = name_idx + 1;
        if let Some(next) = self.skip_generics(i, limit) {
            i = next;
        }
        while i < limit && !self.is(i, "{") {
            match self.text(i) {
                "extends" => {
                    let (types, next) = self.type_list(i + 1, limit);
                    decl.extends.extend(types);
                    i = next;
                }
                "implements" => {
                    let (types, next) = self.type_list(i + 1, limit);
                    decl.implements.extend(types);
                    i = next;
                }
                "(" => i = self.skip_group(i, limit),
                ";" | "}" => {
                    self.tree.degraded = true;
                    self.tree
                        .warnings
                        .push(format!("{}: type {} has no body", decl.pos.line, decl.name));
                    return (Some(decl), i + 1);
                }
                _ => i += 1,
            }
        }
        if i >= limit {
            self.tree.degraded = true;
            return (Some(decl), limit);
        }
        let open = i;
        let close = match self.matches[open] {
            Some(c) if c > open => c,
            _ => {
                self.mark_degraded(open);
                limit
            }
        };
        decl.span.1 = if close < self.len() {
            self.toks[close].line
        } else {
            self.last_line()
        };
        let mut body = open + 1;
        if kind == TypeKind::Enum {
            body = self.skip_enum_constants(body, close);
        }
        self.parse_members(&mut decl, body, close);
        (Some(decl), close + 1)
    }

    fn skip_enum_constants(&mut self, mut i: usize, limit: usize) -> usize {
        while i < limit {
            match self.text(i) {
                ";" => return i + 1,
                "(" | "{" => i = self.skip_group(i, limit),
                _ => i += 1,
            }
        }
        limit
    }

    fn parse_members(&mut self, class: &mut ClassDecl, mut i: usize, limit: usize) {
        while i < limit {
            let t = self.text(i);
            if t == ";" {
                i += 1;
            } else if t == "@" && !self.is(i + 1, "interface") {
                i = self.skip_annotation(i, limit);
            } else if MODIFIERS.contains(&t) && !self.is(i + 1, "{") || SOFT_MODIFIERS.contains(&t) {
                i += 1;
            } else if t == "static" || t == "{" {
                // Initializer blocks carry no member facts.
                let open = if t == "static" { i + 1 } else { i };
                i = self.skip_group(open, limit);
            } else if let Some(kind) = self.type_keyword(i) {
                let outer = class.qualified.clone();
                let (decl, next) = self.parse_type_decl(i, kind, Some(&outer), limit);
                if let Some(decl) = decl {
                    class.nested.push(decl);
                }
                i = next;
            } else {
                i = self.parse_member(class, i, limit);
            }
        }
    }

    /// Parses one field or method declaration beginning at `start`.
    fn parse_member(&mut self, class: &mut ClassDecl, start: usize, limit: usize) -> usize {
        let mut i = start;
        if let Some(next) = self.skip_generics(i, limit) {
            i = next;
        }
        let head_start = i;
        // Find the token that decides what this member is.
        let mut j = i;
        while j < limit {
            match self.text(j) {
                "(" | "=" | ";" | "{" | "}" => break,
                "<" => match self.skip_generics(j, limit) {
                    Some(next) => j = next,
                    None => j += 1,
                },
                "@" => j = self.skip_annotation(j, limit),
                _ => j += 1,
            }
        }
        if j >= limit {
            return limit;
        }
        match self.text(j) {
            "(" => self.parse_method(class, head_start, j, limit),
            "=" | ";" => self.parse_fields(class, head_start, limit),
            "{" => self.skip_group(j, limit),
            _ => j + 1,
        }
    }

    fn parse_method(&mut self, class: &mut ClassDecl, head: usize, paren: usize, limit: usize) -> usize {
        let after_params = self.skip_group(paren, limit);
        if paren == head || !self.is_ident(paren - 1) {
            return after_params;
        }
        let name_tok = self.toks[paren - 1];
        let is_constructor = paren - 1 == head && name_tok.text == class.name;
        let return_type = if is_constructor {
            None
        } else {
            match self.parse_type(head, paren - 1) {
                Some((ty, next)) if next == paren - 1 => Some(ty),
                _ => return after_params,
            }
        };
        let params = self.parse_params(paren, after_params.saturating_sub(1));
        let mut i = after_params;
        while i < limit && !self.is(i, "{") && !self.is(i, ";") && !self.is(i, "}") {
            i += 1;
        }
        let mut method = MethodDecl {
            name: name_tok.text.clone(),
            is_constructor,
            return_type,
            params,
            pos: Pos::of(name_tok),
            span: (self.toks[head].line, self.toks[head].line),
            has_body: false,
            facts: Vec::new(),
        };
        let next = if self.is(i, "{") && i < limit {
            let close = match self.matches[i] {
                Some(c) if c > i => c,
                _ => {
                    self.mark_degraded(i);
                    limit
                }
            };
            method.has_body = true;
            method.span.1 = if close < self.len() {
                self.toks[close].line
            } else {
                self.last_line()
            };
            method.facts = self.scan_body(i + 1, close.min(limit), &method.params);
            close + 1
        } else if self.is(i, ";") {
            method.span.1 = self.toks[i].line;
            i + 1
        } else {
            i
        };
        class.methods.push(method);
        next
    }

    fn parse_params(&mut self, open: usize, close: usize) -> Vec<Param> {
        let mut params = Vec::new();
        let mut i = open + 1;
        while i < close {
            while i < close && (self.is(i, "final") || self.is(i, "@")) {
                i = if self.is(i, "@") {
                    self.skip_annotation(i, close)
                } else {
                    i + 1
                };
            }
            let start = i;
            match self.parse_type(i, close) {
                Some((mut ty, next)) if self.is_ident(next) => {
                    let mut k = next + 1;
                    while self.is(k, "[") && self.is(k + 1, "]") {
                        ty.push_str("[]");
                        k += 2;
                    }
                    params.push(Param {
                        type_name: ty,
                        name: self.text(next).to_string(),
                        pos: Pos::of(self.toks[start.min(self.len() - 1)]),
                    });
                    i = k;
                }
                _ => i += 1,
            }
            while i < close && !self.is(i, ",") {
                i = match self.text(i) {
                    "(" | "[" | "{" => self.skip_group(i, close),
                    _ => i + 1,
                };
            }
            i += 1;
        }
        params
    }

    fn parse_fields(&mut self, class: &mut ClassDecl, start: usize, limit: usize) -> usize {
        let Some((ty, mut i)) = self.parse_type(start, limit) else {
            return self.skip_statement(start, limit);
        };
        loop {
            if !self.is_ident(i) || i >= limit {
                return self.skip_statement(i, limit);
            }
            let name_tok = self.toks[i];
            let mut field_ty = ty.clone();
            i += 1;
            while self.is(i, "[") && self.is(i + 1, "]") {
                field_ty.push_str("[]");
                i += 2;
            }
            class.fields.push(FieldDecl {
                type_name: field_ty,
                name: name_tok.text.clone(),
                pos: Pos::of(name_tok),
            });
            if self.is(i, "=") {
                i += 1;
                while i < limit && !self.is(i, ",") && !self.is(i, ";") {
                    i = match self.text(i) {
                        "(" | "[" | "{" => self.skip_group(i, limit),
                        "}" => return i,
                        _ => i + 1,
                    };
                }
            }
            match self.text(i) {
                "," => i += 1,
                ";" => return i + 1,
                _ => return self.skip_statement(i, limit),
            }
        }
    }

    fn skip_statement(&mut self, mut i: usize, limit: usize) -> usize {
        while i < limit {
            match self.text(i) {
                ";" => return i + 1,
                "}" => return i,
                "(" | "[" | "{" => i = self.skip_group(i, limit),
                _ => i += 1,
            }
        }
        limit
    }

    fn arity(&self, open: usize, limit: usize) -> usize {
        let close = match self.matches[open] {
            Some(c) if c > open => c.min(limit),
            _ => limit,
        };
        if close == open + 1 {
            return 0;
        }
        let mut commas = 0;
        let mut i = open + 1;
        while i < close {
            match self.text(i) {
                "(" | "[" | "{" => {
                    i = match self.matches[i] {
                        Some(c) if c > i => c + 1,
                        _ => close,
                    }
                }
                "," => {
                    commas += 1;
                    i += 1;
                }
                "<" if i > open + 1 && self.is_ident(i - 1) => {
                    i = self.skip_generics(i, close).unwrap_or(i + 1);
                }
                _ => i += 1,
            }
        }
        commas + 1
    }

    fn statement_start(&self, i: usize, body_start: usize) -> bool {
        if i == body_start {
            return true;
        }
        match self.text(i - 1) {
            "{" | "}" | ";" => true,
            "(" => i >= 2 && matches!(self.text(i - 2), "for" | "try"),
            "final" => self.statement_start(i - 1, body_start),
            _ => false,
        }
    }

    /// Collects statement-level facts from a method body.
    fn scan_body(&mut self, start: usize, end: usize, params: &[Param]) -> Vec<Fact> {
        let mut facts = Vec::new();
        let mut locals: HashMap<String, String> = params
            .iter()
            .map(|p| (p.name.clone(), p.type_name.clone()))
            .collect();
        let mut after_dot = false;
        let mut i = start;
        while i < end {
            let tok = self.toks[i];
            let forced_dot = std::mem::take(&mut after_dot);

            if tok.is("@") && !self.is(i + 1, "interface") {
                i = self.skip_annotation(i, end);
                continue;
            }

            if self.statement_start(i, start) && !tok.is("final") {
                if let Some((ty, j)) = self.parse_type(i, end) {
                    let declares = self.is_ident(j)
                        && j + 1 < end
                        && matches!(self.text(j + 1), "=" | ";" | "," | ":" | "[");
                    if declares && ty != "return" {
                        let name = self.text(j).to_string();
                        facts.push(Fact {
                            kind: FactKind::LocalVar {
                                type_name: ty.clone(),
                                name: name.clone(),
                            },
                            pos: Pos::of(tok),
                        });
                        locals.insert(name, ty);
                        i = j + 1;
                        continue;
                    }
                }
            }

            match tok.text.as_str() {
                "new" => {
                    if let Some((ty, j)) = self.parse_type(i + 1, end) {
                        if self.is(j, "(") {
                            facts.push(Fact {
                                kind: FactKind::Creation { type_name: ty },
                                pos: Pos::of(self.toks[i + 1]),
                            });
                        }
                        i = j;
                    } else {
                        i += 1;
                    }
                    continue;
                }
                "catch" if self.is(i + 1, "(") => {
                    let close = self.skip_group(i + 1, end).saturating_sub(1);
                    let mut j = i + 2;
                    while j < close && (self.is(j, "final") || self.is(j, "@")) {
                        j = if self.is(j, "@") { self.skip_annotation(j, close) } else { j + 1 };
                    }
                    let mut first_type = None;
                    while let Some((ty, next)) = self.parse_type(j, close) {
                        facts.push(Fact {
                            kind: FactKind::Catch {
                                type_name: ty.clone(),
                            },
                            pos: Pos::of(self.toks[j]),
                        });
                        first_type.get_or_insert(ty);
                        if self.is(next, "|") {
                            j = next + 1;
                        } else {
                            if let (Some(ty), true) = (first_type.take(), self.is_ident(next)) {
                                locals.insert(self.text(next).to_string(), ty);
                            }
                            break;
                        }
                    }
                    i = close + 1;
                    continue;
                }
                "throw" => {
                    if self.is(i + 1, "new") {
                        if let Some((ty, _)) = self.parse_type(i + 2, end) {
                            facts.push(Fact {
                                kind: FactKind::Throw { type_name: ty },
                                pos: Pos::of(tok),
                            });
                        }
                    } else if self.is_ident(i + 1) && self.is(i + 2, ";") {
                        if let Some(ty) = locals.get(self.text(i + 1)) {
                            facts.push(Fact {
                                kind: FactKind::Throw {
                                    type_name: ty.clone(),
                                },
                                pos: Pos::of(tok),
                            });
                        }
                    }
                    i += 1;
                    continue;
                }
                "(" => {
                    if let Some(next) = self.try_cast(i, end, &mut facts) {
                        i = next;
                        continue;
                    }
                    i += 1;
                    continue;
                }
                "." if self.is(i + 1, "<") => {
                    if let Some(next) = self.skip_generics(i + 1, end) {
                        i = next;
                        after_dot = true;
                        continue;
                    }
                    i += 1;
                    continue;
                }
                _ => {}
            }

            let chain_head = tok.is_ident() || tok.is("this") || tok.is("super");
            if !chain_head {
                i += 1;
                continue;
            }
            let prev_dot = forced_dot || (i > start && self.is(i - 1, "."));

            if tok.is_ident() && self.is(i + 1, "(") {
                let prev = if i > start { Some(self.toks[i - 1]) } else { None };
                let declaration = !forced_dot
                    && prev.is_some_and(|p| {
                        p.is_ident()
                            || is_primitive(&p.text)
                            || p.is(">")
                            || (p.is("]") && i >= 2 && self.is(i - 2, "["))
                    });
                if !declaration {
                    facts.push(Fact {
                        kind: FactKind::Invocation {
                            name: tok.text.clone(),
                            arity: self.arity(i + 1, end),
                        },
                        pos: Pos::of(tok),
                    });
                }
                i += 1;
                continue;
            }

            if !prev_dot && self.is(i + 1, ".") {
                let mut segs = vec![tok.text.clone()];
                let mut last = i;
                while self.is(last + 1, ".") && self.is_ident(last + 2) && last + 2 < end {
                    segs.push(self.text(last + 2).to_string());
                    last += 2;
                }
                let invoked = self.is(last + 1, "(");
                let accessed = if invoked { &segs[..segs.len() - 1] } else { &segs[..] };
                if accessed.len() >= 2 && !looks_like_qualified_type(accessed) {
                    facts.push(Fact {
                        kind: FactKind::FieldAccess {
                            chain: accessed.to_vec(),
                        },
                        pos: Pos::of(tok),
                    });
                }
                i = if invoked { last } else { last + 1 };
                continue;
            }
            i += 1;
        }
        // Resolve local-variable heads of field-access chains to their types.
        for f in &mut facts {
            if let FactKind::FieldAccess { chain } = &mut f.kind {
                if let Some(ty) = locals.get(&chain[0]) {
                    chain[0] = ty.clone();
                }
            }
        }
        facts
    }

    fn try_cast(&mut self, open: usize, end: usize, facts: &mut Vec<Fact>) -> Option<usize> {
        if open > 0 {
            let prev = self.toks[open - 1];
            let allowed = prev.is("return")
                || (prev.kind == TokenKind::Punctuation && !prev.is(")") && !prev.is("]"));
            if !allowed {
                return None;
            }
        }
        let (ty, j) = self.parse_type(open + 1, end)?;
        if !self.is(j, ")") {
            return None;
        }
        let upper = ty.chars().next().is_some_and(char::is_uppercase)
            || ty.rsplit('.').next().is_some_and(|s| s.starts_with(char::is_uppercase));
        if !(upper || is_primitive(ty.trim_end_matches("[]"))) {
            return None;
        }
        let next = self.toks.get(j + 1)?;
        let operand = match next.kind {
            TokenKind::Identifier
            | TokenKind::Number
            | TokenKind::StringLiteral
            | TokenKind::CharLiteral => true,
            TokenKind::Keyword => matches!(
                next.text.as_str(),
                "new" | "this" | "super" | "null" | "true" | "false"
            ),
            TokenKind::Punctuation => next.is("(") || next.is("!") || next.is("~"),
            _ => false,
        };
        if !operand {
            return None;
        }
        facts.push(Fact {
            kind: FactKind::Cast { type_name: ty },
            pos: Pos::of(self.toks[open + 1]),
        });
        Some(j + 1)
    }
}

/// `java.util.List` style chains: lowercase package segments then a type.
fn looks_like_qualified_type(segs: &[String]) -> bool {
    let (last, init) = segs.split_last().expect("non-empty chain");
    last.starts_with(char::is_uppercase)
        && init.iter().all(|s| s.starts_with(char::is_lowercase) && !is_keyword(s))
}

pub fn parse_structure(tokens: &Tokens) -> BlockTree {
    let mut tree = Parser::new(tokens).parse();
    tree.warnings.extend(tokens.warnings.iter().cloned());
    tree
}
