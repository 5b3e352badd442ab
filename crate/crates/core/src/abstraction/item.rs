use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The seventeen item kinds recovered by source abstraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ItemKind {
    /// Package declaration.
    Pk,
    /// Import.
    Im,
    /// Class declaration.
    Cd,
    /// Interface declaration.
    Id,
    /// Enum declaration.
    Ed,
    /// Extends clause.
    Xt,
    /// Implements clause.
    Ip,
    /// Field declaration.
    Fd,
    /// Method declaration.
    Md,
    /// Constructor declaration.
    Ct,
    /// Parameter declaration.
    Pm,
    /// Local variable declaration.
    Vd,
    /// Method invocation.
    Mi,
    /// Class instantiation (`new`).
    Ci,
    /// Field access.
    Fa,
    /// Cast expression.
    Cs,
    /// Exception handling: caught or thrown type.
    Eh,
}

impl ItemKind {
    pub const ALL: [ItemKind; 17] = [
        ItemKind::Pk,
        ItemKind::Im,
        ItemKind::Cd,
        ItemKind::Id,
        ItemKind::Ed,
        ItemKind::Xt,
        ItemKind::Ip,
        ItemKind::Fd,
        ItemKind::Md,
        ItemKind::Ct,
        ItemKind::Pm,
        ItemKind::Vd,
        ItemKind::Mi,
        ItemKind::Ci,
        ItemKind::Fa,
        ItemKind::Cs,
        ItemKind::Eh,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ItemKind::Pk => "PK",
            ItemKind::Im => "IM",
            ItemKind::Cd => "CD",
            ItemKind::Id => "ID",
            ItemKind::Ed => "ED",
            ItemKind::Xt => "XT",
            ItemKind::Ip => "IP",
            ItemKind::Fd => "FD",
            ItemKind::Md => "MD",
            ItemKind::Ct => "CT",
            ItemKind::Pm => "PM",
            ItemKind::Vd => "VD",
            ItemKind::Mi => "MI",
            ItemKind::Ci => "CI",
            ItemKind::Fa => "FA",
            ItemKind::Cs => "CS",
            ItemKind::Eh => "EH",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ItemKind::Pk => "package declaration",
            ItemKind::Im => "import",
            ItemKind::Cd => "class declaration",
            ItemKind::Id => "interface declaration",
            ItemKind::Ed => "enum declaration",
            ItemKind::Xt => "extends clause",
            ItemKind::Ip => "implements clause",
            ItemKind::Fd => "field declaration",
            ItemKind::Md => "method declaration",
            ItemKind::Ct => "constructor declaration",
            ItemKind::Pm => "parameter declaration",
            ItemKind::Vd => "local variable declaration",
            ItemKind::Mi => "method invocation",
            ItemKind::Ci => "class instantiation",
            ItemKind::Fa => "field access",
            ItemKind::Cs => "cast expression",
            ItemKind::Eh => "exception handling",
        }
    }

    /// Kinds that belong to class-block transactions.
    pub fn is_class_level(self) -> bool {
        matches!(
            self,
            ItemKind::Pk
                | ItemKind::Im
                | ItemKind::Cd
                | ItemKind::Id
                | ItemKind::Ed
                | ItemKind::Xt
                | ItemKind::Ip
                | ItemKind::Fd
                | ItemKind::Md
                | ItemKind::Ct
        )
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ItemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ItemKind::ALL
            .into_iter()
            .find(|k| k.code() == s)
            .ok_or_else(|| Error::Schema(format!("unknown item kind {s:?}")))
    }
}

/// One abstracted code fact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Item {
    pub kind: ItemKind,
    pub name: String,
    pub entity: String,
    pub line: usize,
}

impl Item {
    pub fn new(kind: ItemKind, name: impl Into<String>, entity: impl Into<String>, line: usize) -> Self {
        Self {
            kind,
            name: name.into(),
            entity: entity.into(),
            line,
        }
    }

    /// `KIND, name, entity:NN`, the line zero-padded to two digits.
    pub fn render(&self) -> String {
        format!("{}, {}, {}:{:02}", self.kind, self.name, self.entity, self.line)
    }

    pub fn parse_rendered(s: &str) -> Result<Self> {
        let bad = || Error::Schema(format!("malformed item rendering {s:?}"));
        let (kind, rest) = s.split_once(", ").ok_or_else(bad)?;
        let (rest, line) = rest.rsplit_once(':').ok_or_else(bad)?;
        let (name, entity) = rest.rsplit_once(", ").ok_or_else(bad)?;
        let line: usize = line.parse().map_err(|_| bad())?;
        if name.is_empty() || entity.is_empty() || line == 0 {
            return Err(bad());
        }
        Ok(Item::new(kind.parse()?, name, entity, line))
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockKind {
    Class,
    Method,
}

impl BlockKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Class => "class",
            BlockKind::Method => "method",
        }
    }
}

impl FromStr for BlockKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "class" => Ok(BlockKind::Class),
            "method" => Ok(BlockKind::Method),
            _ => Err(Error::Schema(format!("unknown block kind {s:?}"))),
        }
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The ordered items of one class or method block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub id: String,
    pub entity: String,
    pub block: BlockKind,
    pub items: Vec<Item>,
    /// Source-qualified unit key (`source/path`).
    pub unit: String,
    pub span: (usize, usize),
}

impl Transaction {
    pub fn make_id(unit: &str, entity: &str, span: (usize, usize)) -> String {
        format!("{unit}#{entity}@{}-{}", span.0, span.1)
    }
}
