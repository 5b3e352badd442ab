//! Block tree to typed items, and items to per-block transactions.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::item::{BlockKind, Item, ItemKind, Transaction};
use super::resolve::{resolve_type, DefaultNamespace};
use super::structure::{BlockTree, ClassDecl, FactKind, MethodDecl, Pos, TypeKind};
use crate::corpus::SourceUnit;

#[derive(Debug, Clone, PartialEq, Eq)]
struct MethodSig {
    class: String,
    rendered: String,
}

/// Method declarations of the whole corpus, keyed by name and arity.
///
/// Built once before extraction and read-only afterwards.
#[derive(Debug, Clone, Default)]
pub struct DeclIndex {
    by_class: HashMap<String, Vec<(String, usize, String)>>,
    by_name: BTreeMap<(String, usize), Vec<MethodSig>>,
}

impl DeclIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_trees<'a>(
        trees: impl IntoIterator<Item = &'a BlockTree>,
        defaults: &DefaultNamespace,
    ) -> Self {
        let mut index = Self::new();
        for tree in trees {
            index.add_tree(tree, defaults);
        }
        index.finish();
        index
    }

    pub fn add_tree(&mut self, tree: &BlockTree, defaults: &DefaultNamespace) {
        for class in tree.all_classes() {
            for m in class.methods.iter().filter(|m| !m.is_constructor) {
                let rendered = render_method(m, tree, defaults);
                self.by_class.entry(class.qualified.clone()).or_default().push((
                    m.name.clone(),
                    m.arity(),
                    rendered.clone(),
                ));
                self.by_name
                    .entry((m.name.clone(), m.arity()))
                    .or_default()
                    .push(MethodSig {
                        class: class.qualified.clone(),
                        rendered,
                    });
            }
        }
    }

    fn finish(&mut self) {
        for sigs in self.by_name.values_mut() {
            sigs.sort_by(|a, b| a.class.cmp(&b.class));
        }
    }

    fn in_class(&self, class: &str, name: &str, arity: usize) -> Option<&str> {
        self.by_class.get(class).and_then(|ms| {
            ms.iter()
                .find(|(n, a, _)| n == name && *a == arity)
                .map(|(_, _, r)| r.as_str())
        })
    }

    /// Signature lookup: enclosing classes, then imported classes, then the
    /// lexicographically first declaring class anywhere in the corpus.
    fn lookup(&self, enclosing: &[&str], imports: &[&str], name: &str, arity: usize) -> Option<&str> {
        enclosing
            .iter()
            .chain(imports)
            .find_map(|c| self.in_class(c, name, arity))
            .or_else(|| {
                self.by_name
                    .get(&(name.to_string(), arity))
                    .and_then(|sigs| sigs.first())
                    .map(|s| s.rendered.as_str())
            })
    }
}

fn resolve(name: &str, tree: &BlockTree, defaults: &DefaultNamespace) -> String {
    resolve_type(name, tree, defaults).into_name()
}

fn param_list(m: &MethodDecl, tree: &BlockTree, defaults: &DefaultNamespace) -> String {
    m.params
        .iter()
        .map(|p| resolve(&p.type_name, tree, defaults))
        .collect::<Vec<_>>()
        .join(",")
}

/// `name(T1,T2):Ret` with resolved types.
fn render_method(m: &MethodDecl, tree: &BlockTree, defaults: &DefaultNamespace) -> String {
    let ret = m
        .return_type
        .as_deref()
        .map_or_else(|| "void".to_string(), |r| resolve(r, tree, defaults));
    format!("{}({}):{}", m.name, param_list(m, tree, defaults), ret)
}

fn render_constructor(class: &ClassDecl, m: &MethodDecl, tree: &BlockTree, defaults: &DefaultNamespace) -> String {
    format!("{}({})", class.name, param_list(m, tree, defaults))
}

pub fn method_entity(class: &ClassDecl, m: &MethodDecl) -> String {
    format!("{}.{}()", class.qualified, m.name)
}

/// Item with the column kept for canonical ordering.
#[derive(Debug, Clone)]
struct Positioned {
    item: Item,
    col: usize,
}

impl Positioned {
    fn new(kind: ItemKind, name: String, entity: &str, pos: &Pos) -> Self {
        Positioned {
            item: Item::new(kind, name, entity, pos.line),
            col: pos.col,
        }
    }

    fn key(&self) -> (usize, usize, &'static str, &str) {
        (self.item.line, self.col, self.item.kind.code(), &self.item.name)
    }
}

/// Extracts every item from a block tree, in canonical order
/// (line, column, kind code, name).
pub fn extract_items(
    tree: &BlockTree,
    unit: &SourceUnit,
    index: &DeclIndex,
    defaults: &DefaultNamespace,
) -> Vec<Item> {
    let _ = unit;
    let mut out: Vec<Positioned> = Vec::new();
    let r = |n: &str| resolve(n, tree, defaults);
    let imported: Vec<&str> = tree.import_table.values().map(String::as_str).collect();

    if let Some(first) = tree.classes.first() {
        let entity = first.qualified.as_str();
        if let Some(p) = &tree.package {
            out.push(Positioned::new(ItemKind::Pk, p.name.clone(), entity, &p.pos));
        }
        for imp in &tree.imports {
            let name = if imp.is_static {
                format!("static {}", imp.name)
            } else {
                imp.name.clone()
            };
            out.push(Positioned::new(ItemKind::Im, name, entity, &imp.pos));
        }
    }

    fn walk<'t>(c: &'t ClassDecl, outers: &mut Vec<&'t str>, f: &mut dyn FnMut(&'t ClassDecl, &[&'t str])) {
        outers.insert(0, &c.qualified);
        f(c, outers);
        for n in &c.nested {
            walk(n, outers, f);
        }
        outers.remove(0);
    }

    let mut visit = |class: &ClassDecl, enclosing: &[&str]| {
        let entity = class.qualified.as_str();
        let decl_kind = match class.kind {
            TypeKind::Interface | TypeKind::Annotation => ItemKind::Id,
            TypeKind::Enum => ItemKind::Ed,
            TypeKind::Class | TypeKind::Record => ItemKind::Cd,
        };
        out.push(Positioned::new(decl_kind, class.qualified.clone(), entity, &class.pos));
        for t in &class.extends {
            out.push(Positioned::new(ItemKind::Xt, r(&t.name), entity, &t.pos));
        }
        for t in &class.implements {
            out.push(Positioned::new(ItemKind::Ip, r(&t.name), entity, &t.pos));
        }
        for f in &class.fields {
            out.push(Positioned::new(ItemKind::Fd, r(&f.type_name), entity, &f.pos));
        }
        for m in &class.methods {
            let (kind, name) = if m.is_constructor {
                (ItemKind::Ct, render_constructor(class, m, tree, defaults))
            } else {
                (ItemKind::Md, render_method(m, tree, defaults))
            };
            out.push(Positioned::new(kind, name, entity, &m.pos));
            if !m.has_body {
                continue;
            }
            let mentity = method_entity(class, m);
            for p in &m.params {
                out.push(Positioned::new(ItemKind::Pm, r(&p.type_name), &mentity, &p.pos));
            }
            for fact in &m.facts {
                let (kind, name) = match &fact.kind {
                    FactKind::LocalVar { type_name, .. } => (ItemKind::Vd, r(type_name)),
                    FactKind::Invocation { name, arity } => (
                        ItemKind::Mi,
                        index
                            .lookup(enclosing, &imported, name, *arity)
                            .map(str::to_string)
                            .unwrap_or_else(|| format!("{name}(arity={arity}):?")),
                    ),
                    FactKind::Creation { type_name } => (ItemKind::Ci, r(type_name)),
                    FactKind::FieldAccess { chain } => (ItemKind::Fa, render_access(chain, tree, defaults)),
                    FactKind::Cast { type_name } => (ItemKind::Cs, r(type_name)),
                    FactKind::Catch { type_name } | FactKind::Throw { type_name } => {
                        (ItemKind::Eh, r(type_name))
                    }
                };
                out.push(Positioned::new(kind, name, &mentity, &fact.pos));
            }
        }
    };
    let mut outers = Vec::new();
    for c in &tree.classes {
        walk(c, &mut outers, &mut visit);
    }

    out.sort_by(|a, b| a.key().cmp(&b.key()));
    out.into_iter().map(|p| p.item).collect()
}

fn render_access(chain: &[String], tree: &BlockTree, defaults: &DefaultNamespace) -> String {
    let (head, rest) = chain.split_first().expect("non-empty chain");
    if head == "this" || head == "super" {
        return rest.join(".");
    }
    let head = if head.starts_with(char::is_uppercase) || head.contains('.') {
        resolve(head, tree, defaults)
    } else {
        head.clone()
    };
    std::iter::once(head)
        .chain(rest.iter().cloned())
        .collect::<Vec<_>>()
        .join(".")
}

/// Number of method and constructor bodies, i.e. method-block transaction
/// candidates before empty blocks are dropped.
pub fn method_block_count(tree: &BlockTree) -> usize {
    tree.all_classes()
        .iter()
        .flat_map(|c| &c.methods)
        .filter(|m| m.has_body)
        .count()
}

/// Groups canonically ordered items into one transaction per class block
/// and one per method block. Empty transactions are dropped.
///
/// Package and import items join the class block of the first top-level
/// type, whose span is widened to cover them.
pub fn build_transactions(items: &[Item], tree: &BlockTree, unit: &SourceUnit) -> Vec<Transaction> {
    struct Block {
        entity: String,
        kind: BlockKind,
        span: (usize, usize),
        items: Vec<Item>,
    }

    let mut blocks: Vec<Block> = Vec::new();
    let mut class_slot: HashMap<&str, usize> = HashMap::new();
    let mut method_slots: HashMap<String, Vec<usize>> = HashMap::new();
    for class in tree.all_classes() {
        class_slot.insert(class.qualified.as_str(), blocks.len());
        blocks.push(Block {
            entity: class.qualified.clone(),
            kind: BlockKind::Class,
            span: class.span,
            items: Vec::new(),
        });
        for m in class.methods.iter().filter(|m| m.has_body) {
            let entity = method_entity(class, m);
            method_slots.entry(entity.clone()).or_default().push(blocks.len());
            blocks.push(Block {
                entity,
                kind: BlockKind::Method,
                span: m.span,
                items: Vec::new(),
            });
        }
    }

    for item in items {
        let slot = if item.kind.is_class_level() {
            class_slot.get(item.entity.as_str()).copied()
        } else {
            method_slots.get(&item.entity).and_then(|slots| {
                slots
                    .iter()
                    .copied()
                    .find(|&s| (blocks[s].span.0..=blocks[s].span.1).contains(&item.line))
                    .or_else(|| slots.first().copied())
            })
        };
        if let Some(s) = slot {
            blocks[s].items.push(item.clone());
        }
    }

    let unit_key = unit.key();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out: Vec<Transaction> = blocks
        .into_iter()
        .filter(|b| !b.items.is_empty())
        .map(|mut b| {
            let lo = b.items.iter().map(|i| i.line).min().unwrap_or(b.span.0);
            let hi = b.items.iter().map(|i| i.line).max().unwrap_or(b.span.1);
            b.span = (b.span.0.min(lo), b.span.1.max(hi));
            let base = Transaction::make_id(&unit_key, &b.entity, b.span);
            let n = seen.entry(base.clone()).or_insert(0);
            *n += 1;
            let id = if *n == 1 { base } else { format!("{base}~{n}") };
            Transaction {
                id,
                entity: b.entity,
                block: b.kind,
                items: b.items,
                unit: unit_key.clone(),
                span: b.span,
            }
        })
        .collect();
    sort_transactions(&mut out);
    out
}

/// Canonical transaction order within a unit.
pub fn sort_transactions(txs: &mut [Transaction]) {
    txs.sort_by(|a, b| {
        (a.span, a.block, &a.entity, &a.id).cmp(&(b.span, b.block, &b.entity, &b.id))
    });
}

/// Unresolved type names seen while extracting, for diagnostics.
pub fn unresolved_types(tree: &BlockTree, defaults: &DefaultNamespace) -> BTreeSet<String> {
    let mut names = Vec::new();
    for c in tree.all_classes() {
        names.extend(c.extends.iter().chain(&c.implements).map(|t| t.name.clone()));
        names.extend(c.fields.iter().map(|f| f.type_name.clone()));
        for m in &c.methods {
            names.extend(m.params.iter().map(|p| p.type_name.clone()));
            names.extend(m.return_type.clone());
            for f in &m.facts {
                match &f.kind {
                    FactKind::LocalVar { type_name, .. }
                    | FactKind::Creation { type_name }
                    | FactKind::Cast { type_name }
                    | FactKind::Catch { type_name }
                    | FactKind::Throw { type_name } => names.push(type_name.clone()),
                    _ => {}
                }
            }
        }
    }
    names
        .into_iter()
        .filter(|n| !resolve_type(n, tree, defaults).is_resolved())
        .collect()
}
