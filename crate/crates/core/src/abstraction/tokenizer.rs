//! Lossless tokenizer for a Java-like language subset.
//!
//! Every byte of the input belongs to exactly one token, so concatenating the
//! token texts reproduces the file. Comments and literals are atomic, which
//! keeps braces inside them away from structure recovery.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Punctuation,
    StringLiteral,
    CharLiteral,
    Number,
    Comment,
    Whitespace,
}

impl TokenKind {
    /// Whitespace and comments carry no structure.
    pub fn is_trivia(self) -> bool {
        matches!(self, TokenKind::Whitespace | TokenKind::Comment)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: usize,
    pub col: usize,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Identifier
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tokens {
    pub tokens: Vec<Token>,
    pub warnings: Vec<String>,
}

impl Tokens {
    pub fn significant(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| !t.kind.is_trivia())
    }

    pub fn concat(&self) -> String {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }
}

pub const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "false", "final",
    "finally", "float", "for", "goto", "if", "implements", "import", "instanceof", "int",
    "interface", "long", "native", "new", "null", "package", "private", "protected", "public",
    "return", "short", "static", "strictfp", "super", "switch", "synchronized", "this", "throw",
    "throws", "transient", "true", "try", "void", "volatile", "while",
];

pub const PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "double", "float", "int", "long", "short", "void",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub fn is_primitive(s: &str) -> bool {
    PRIMITIVES.contains(&s)
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.text[self.pos..].chars().nth(n)
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn bump_while(&mut self, pred: impl Fn(char) -> bool) {
        while self.peek().is_some_and(&pred) {
            self.bump();
        }
    }

    fn bump_to_end(&mut self) {
        while self.bump().is_some() {}
    }
}

/// Splits `text` into tokens. Unterminated comments and literals extend to
/// the end of the input and leave a warning.
pub fn tokenize(text: &str) -> Tokens {
    let mut cur = Cursor {
        text,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Tokens::default();
    while let Some(c) = cur.peek() {
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let kind = if c.is_whitespace() {
            cur.bump_while(char::is_whitespace);
            TokenKind::Whitespace
        } else if cur.rest().starts_with("//") {
            cur.bump_while(|c| c != '\n');
            TokenKind::Comment
        } else if cur.rest().starts_with("/*") {
            cur.bump();
            cur.bump();
            match cur.rest().find("*/") {
                Some(end) => {
                    let target = cur.pos + end + 2;
                    while cur.pos < target {
                        cur.bump();
                    }
                }
                None => {
                    out.warnings
                        .push(format!("{line}:{col}: unterminated block comment"));
                    cur.bump_to_end();
                }
            }
            TokenKind::Comment
        } else if cur.rest().starts_with("\"\"\"") {
            for _ in 0..3 {
                cur.bump();
            }
            match cur.rest().find("\"\"\"") {
                Some(end) => {
                    let target = cur.pos + end + 3;
                    while cur.pos < target {
                        cur.bump();
                    }
                }
                None => {
                    out.warnings.push(format!("{line}:{col}: unterminated text block"));
                    cur.bump_to_end();
                }
            }
            TokenKind::StringLiteral
        } else if c == '"' || c == '\'' {
            cur.bump();
            let mut closed = false;
            while let Some(n) = cur.bump() {
                if n == '\\' {
                    cur.bump();
                } else if n == c {
                    closed = true;
                    break;
                }
            }
            let what = if c == '"' { "string" } else { "char" };
            if !closed {
                out.warnings
                    .push(format!("{line}:{col}: unterminated {what} literal"));
            }
            if c == '"' {
                TokenKind::StringLiteral
            } else {
                TokenKind::CharLiteral
            }
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            let mut prev = '\0';
            while let Some(n) = cur.peek() {
                let exponent_sign = (n == '+' || n == '-')
                    && matches!(prev, 'e' | 'E' | 'p' | 'P')
                    && !cur.text[start..cur.pos].starts_with("0x")
                    && !cur.text[start..cur.pos].starts_with("0X");
                if n.is_ascii_alphanumeric() || n == '_' || n == '.' || exponent_sign {
                    prev = n;
                    cur.bump();
                } else {
                    break;
                }
            }
            TokenKind::Number
        } else if is_ident_start(c) {
            cur.bump_while(is_ident_continue);
            if is_keyword(&text[start..cur.pos]) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else {
            cur.bump();
            TokenKind::Punctuation
        };
        out.tokens.push(Token {
            kind,
            text: text[start..cur.pos].to_string(),
            line,
            col,
        });
    }
    out
}

/// The package declared by a compilation unit, if any.
pub fn package_name(text: &str) -> Option<String> {
    let tokens = tokenize(text);
    let mut name = String::new();
    let mut in_package = false;
    // Leading annotations, `@Name(...)`, may precede the declaration.
    let mut depth = 0usize;
    for t in tokens.significant() {
        if in_package {
            if t.is(";") {
                return (!name.is_empty()).then_some(name);
            }
            if t.is_ident() || t.is(".") {
                name.push_str(&t.text);
                continue;
            }
            return None;
        }
        match t.text.as_str() {
            "(" => depth += 1,
            ")" => depth = depth.saturating_sub(1),
            "package" if depth == 0 => in_package = true,
            _ if depth > 0 => {}
            "@" | "." => {}
            _ if t.is_ident() => {}
            _ => return None,
        }
    }
    None
}
