use std::collections::BTreeMap;

use super::structure::BlockTree;
use super::tokenizer::is_primitive;

/// Simple names visible without an import, mapped to qualified names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefaultNamespace {
    names: BTreeMap<String, String>,
}

const JAVA_LANG: &[&str] = &[
    "AutoCloseable", "ArithmeticException", "ArrayIndexOutOfBoundsException", "Boolean", "Byte",
    "CharSequence", "Character", "Class", "ClassCastException", "ClassNotFoundException",
    "CloneNotSupportedException", "Cloneable", "Comparable", "Deprecated", "Double", "Enum",
    "Error", "Exception", "Float", "FunctionalInterface", "IllegalArgumentException",
    "IllegalStateException", "IndexOutOfBoundsException", "Integer", "InterruptedException",
    "Iterable", "Long", "Math", "NullPointerException", "Number", "NumberFormatException",
    "Object", "OutOfMemoryError", "Override", "Process", "ProcessBuilder", "Record", "Runnable",
    "Runtime", "RuntimeException", "SafeVarargs", "SecurityException", "Short",
    "StackOverflowError", "StrictMath", "String", "StringBuffer", "StringBuilder",
    "SuppressWarnings", "System", "Thread", "ThreadLocal", "Throwable",
    "UnsupportedOperationException", "Void",
];

impl DefaultNamespace {
    pub fn empty() -> Self {
        Self {
            names: BTreeMap::new(),
        }
    }

    /// The common `java.lang` names.
    pub fn java_lang() -> Self {
        let mut ns = Self::empty();
        for n in JAVA_LANG {
            ns.insert(*n, format!("java.lang.{n}"));
        }
        ns
    }

    pub fn insert(&mut self, simple: impl Into<String>, qualified: impl Into<String>) {
        self.names.insert(simple.into(), qualified.into());
    }

    pub fn get(&self, simple: &str) -> Option<&str> {
        self.names.get(simple).map(String::as_str)
    }
}

impl Default for DefaultNamespace {
    fn default() -> Self {
        Self::java_lang()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Resolved(String),
    Unresolved(String),
}

impl Resolution {
    pub fn name(&self) -> &str {
        match self {
            Resolution::Resolved(n) | Resolution::Unresolved(n) => n,
        }
    }

    pub fn into_name(self) -> String {
        match self {
            Resolution::Resolved(n) | Resolution::Unresolved(n) => n,
        }
    }

    pub fn is_resolved(&self) -> bool {
        matches!(self, Resolution::Resolved(_))
    }
}

/// Drops `<...>` type arguments, keeping array suffixes.
pub fn strip_generics(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut depth = 0usize;
    for c in name.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth = depth.saturating_sub(1),
            _ if depth == 0 && !c.is_whitespace() => out.push(c),
            _ => {}
        }
    }
    out
}

/// Qualifies a type name as seen from the file described by `tree`.
///
/// Order: already qualified, single-type imports, types declared in the same
/// file, then the default namespace. Anything else comes back unchanged and
/// marked unresolved. Primitives resolve to themselves.
pub fn resolve_type(simple_name: &str, tree: &BlockTree, defaults: &DefaultNamespace) -> Resolution {
    let stripped = strip_generics(simple_name);
    let base = stripped.trim_end_matches("[]");
    let dims = &stripped[base.len()..];
    let with_dims = |q: &str| format!("{q}{dims}");
    if base.contains('.') || is_primitive(base) {
        return Resolution::Resolved(stripped.clone());
    }
    if let Some(q) = tree.import_table.get(base) {
        return Resolution::Resolved(with_dims(q));
    }
    if let Some(q) = tree.declared_types().get(base) {
        return Resolution::Resolved(with_dims(q));
    }
    if let Some(q) = defaults.get(base) {
        return Resolution::Resolved(with_dims(q));
    }
    Resolution::Unresolved(stripped)
}
