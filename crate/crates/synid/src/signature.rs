//! Monoidal category signatures: objects, named causal-module morphisms and
//! their domain/codomain words.
//!
//! A signature generated from an ADMG has one module per node. Its canonical
//! text form prints one morphism per line, lines ordered by the module
//! object's topological position, word factors ordered by node declaration.
//! Both ranks are carried on the object table so rewrites and combination
//! stay canonical. Equality is value equality: the object set, the morphism
//! set and the module assignment, independent of ordering.

use crate::admg::{valid_name, Admg, TopoOrder};
use crate::error::{Error, Result};
use crate::word::ObjectWord;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Rank pair `(base rank, prime level)`; primed copies of an object sort
/// right after their base.
pub type Rank = (u32, u32);

#[derive(Debug, Clone, PartialEq, Eq)]
struct ObjEntry {
    name: String,
    decl: Rank,
    topo: Rank,
}

/// A named morphism with its module object and type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism {
    pub name: String,
    /// The object this morphism is the causal module of. `None` only for
    /// morphisms parsed from text whose codomain is the unit, where the
    /// association cannot be recovered.
    pub object: Option<String>,
    pub dom: ObjectWord,
    pub cod: ObjectWord,
}

/// A monoidal signature: an ordered object table plus a list of morphisms.
#[derive(Debug, Clone, Default)]
pub struct MonoidalSignature {
    objects: Vec<ObjEntry>,
    morphisms: Vec<Morphism>,
}

impl PartialEq for MonoidalSignature {
    fn eq(&self, other: &Self) -> bool {
        self.object_set() == other.object_set() && self.morphism_map() == other.morphism_map()
    }
}

impl Eq for MonoidalSignature {}

impl MonoidalSignature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Object names in canonical (declaration) order.
    pub fn objects(&self) -> Vec<&str> {
        self.objects.iter().map(|o| o.name.as_str()).collect()
    }

    fn object_set(&self) -> BTreeSet<&str> {
        self.objects.iter().map(|o| o.name.as_str()).collect()
    }

    fn morphism_map(&self) -> BTreeMap<&str, (&Option<String>, &ObjectWord, &ObjectWord)> {
        self.morphisms
            .iter()
            .map(|m| (m.name.as_str(), (&m.object, &m.dom, &m.cod)))
            .collect()
    }

    pub fn morphisms(&self) -> &[Morphism] {
        &self.morphisms
    }

    pub fn has_object(&self, name: &str) -> bool {
        self.objects.iter().any(|o| o.name == name)
    }

    pub fn morphism(&self, name: &str) -> Option<&Morphism> {
        self.morphisms.iter().find(|m| m.name == name)
    }

    /// The module of `object`, if one is assigned.
    pub fn module_of(&self, object: &str) -> Option<&Morphism> {
        self.morphisms
            .iter()
            .find(|m| m.object.as_deref() == Some(object))
    }

    pub fn decl_rank(&self, name: &str) -> Rank {
        self.objects
            .iter()
            .find(|o| o.name == name)
            .map(|o| o.decl)
            .unwrap_or((u32::MAX, 0))
    }

    pub fn topo_rank(&self, name: &str) -> Rank {
        self.objects
            .iter()
            .find(|o| o.name == name)
            .map(|o| o.topo)
            .unwrap_or((u32::MAX, 0))
    }

    /// Registers an object with explicit ranks; keeps the existing entry if
    /// the name is already present.
    pub fn add_object(&mut self, name: impl Into<String>, decl: Rank, topo: Rank) {
        let name = name.into();
        if !self.has_object(&name) {
            self.objects.push(ObjEntry { name, decl, topo });
            self.objects.sort_by(|a, b| a.decl.cmp(&b.decl).then(a.name.cmp(&b.name)));
        }
    }

    /// Registers a fresh primed copy of `base`, sorting right after it on
    /// both ranks. Returns the new name.
    pub fn add_primed_copy(&mut self, base: &str) -> String {
        let (decl, topo) = (self.decl_rank(base), self.topo_rank(base));
        let mut name = format!("{base}'");
        let mut level = 1;
        while self.has_object(&name) {
            name.push('\'');
            level += 1;
        }
        self.objects.push(ObjEntry {
            name: name.clone(),
            decl: (decl.0, decl.1 + level),
            topo: (topo.0, topo.1 + level),
        });
        self.objects.sort_by(|a, b| a.decl.cmp(&b.decl).then(a.name.cmp(&b.name)));
        name
    }

    pub fn push_morphism(&mut self, m: Morphism) {
        self.morphisms.push(m);
    }

    pub fn remove_morphism(&mut self, name: &str) {
        self.morphisms.retain(|m| m.name != name);
    }

    /// Mutable access by morphism name.
    pub fn morphism_mut(&mut self, name: &str) -> Option<&mut Morphism> {
        self.morphisms.iter_mut().find(|m| m.name == name)
    }

    /// Mutable access to the module of `object`.
    pub fn module_mut(&mut self, object: &str) -> Option<&mut Morphism> {
        self.morphisms
            .iter_mut()
            .find(|m| m.object.as_deref() == Some(object))
    }

    /// Sorts morphism lines by the module object's topological position
    /// (objectless morphisms last, by name).
    pub fn sort_morphisms(&mut self) {
        let ranks: BTreeMap<String, Rank> = self
            .objects
            .iter()
            .map(|o| (o.name.clone(), o.topo))
            .collect();
        self.morphisms.sort_by(|a, b| {
            let ka = a
                .object
                .as_ref()
                .and_then(|o| ranks.get(o).copied())
                .unwrap_or((u32::MAX, u32::MAX));
            let kb = b
                .object
                .as_ref()
                .and_then(|o| ranks.get(o).copied())
                .unwrap_or((u32::MAX, u32::MAX));
            ka.cmp(&kb).then_with(|| a.name.cmp(&b.name))
        });
    }

    /// Drops objects that no surviving morphism references.
    pub fn restrict_to_referenced(&mut self) {
        let mut used = BTreeSet::new();
        for m in &self.morphisms {
            used.extend(m.dom.objects().cloned());
            used.extend(m.cod.objects().cloned());
        }
        self.objects.retain(|o| used.contains(&o.name));
    }

    // ── signature-level parent/child queries ─────────────────────────────

    /// Morphisms whose codomain shares an object with `dom(Module(v))`.
    pub fn pa_sig(&self, v: &str) -> Result<BTreeSet<String>> {
        let module = self.module_of(v).ok_or_else(|| Error::NoModule(v.to_string()))?;
        let dom = module.dom.clone();
        let name = module.name.clone();
        Ok(self
            .morphisms
            .iter()
            .filter(|m| m.name != name && m.cod.meets(&dom))
            .map(|m| m.name.clone())
            .collect())
    }

    /// Morphisms whose domain shares an object with `cod(Module(v))`.
    pub fn ch_sig(&self, v: &str) -> Result<BTreeSet<String>> {
        let module = self.module_of(v).ok_or_else(|| Error::NoModule(v.to_string()))?;
        let cod = module.cod.clone();
        let name = module.name.clone();
        Ok(self
            .morphisms
            .iter()
            .filter(|m| m.name != name && m.dom.meets(&cod))
            .map(|m| m.name.clone())
            .collect())
    }

    // ── text format ──────────────────────────────────────────────────────

    pub fn format_word(&self, w: &ObjectWord) -> String {
        w.format_with(|name| self.decl_rank(name))
    }

    /// Canonical text: one `name: DOM -> COD` per line.
    pub fn to_text(&self) -> String {
        self.morphisms
            .iter()
            .map(|m| format!("{}: {} -> {}", m.name, self.format_word(&m.dom), self.format_word(&m.cod)))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Parses the interchange format. Object ranks follow first appearance;
    /// the module association of unit-codomain morphisms is not recoverable.
    pub fn parse_text(src: &str) -> Result<Self> {
        let mut sig = MonoidalSignature::new();
        let mut next_rank = 0u32;
        for (lineno, raw) in src.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => raw[..i].trim(),
                None => raw.trim(),
            };
            if line.is_empty() {
                continue;
            }
            let lineno = lineno + 1;
            let (name, rest) = line.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("expected `name: DOM -> COD`, got `{line}`"),
            })?;
            let name = name.trim();
            if !valid_name(name) {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("invalid morphism name `{name}`"),
                });
            }
            if sig.morphism(name).is_some() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("duplicate morphism `{name}`"),
                });
            }
            let (dom_s, cod_s) = rest.split_once("->").ok_or_else(|| Error::Parse {
                line: lineno,
                msg: "missing `->`".to_string(),
            })?;
            let dom = parse_word(dom_s.trim(), lineno)?;
            let cod = parse_word(cod_s.trim(), lineno)?;
            for obj in dom.objects().chain(cod.objects()) {
                if !sig.has_object(obj) {
                    sig.add_object(obj.clone(), (next_rank, 0), (next_rank, 0));
                    next_rank += 1;
                }
            }
            let object = cod.objects().next().cloned().filter(|_| !cod.is_unit());
            if let Some(obj) = &object {
                if let Some(prev) = sig.module_of(obj) {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("object `{obj}` already has module `{}`", prev.name),
                    });
                }
            }
            sig.push_morphism(Morphism {
                name: name.to_string(),
                object,
                dom,
                cod,
            });
        }
        Ok(sig)
    }

    /// JSON mirror with explicit multiplicity maps.
    pub fn to_json(&self) -> serde_json::Value {
        let word_json = |w: &ObjectWord| {
            let mut map = serde_json::Map::new();
            for (obj, k) in w.iter() {
                map.insert(obj.clone(), serde_json::json!(k));
            }
            serde_json::Value::Object(map)
        };
        serde_json::json!({
            "objects": self.objects().iter().collect::<Vec<_>>(),
            "morphisms": self.morphisms.iter().map(|m| serde_json::json!({
                "name": m.name,
                "object": m.object,
                "dom": word_json(&m.dom),
                "cod": word_json(&m.cod),
            })).collect::<Vec<_>>(),
        })
    }

    /// Checks the structural invariants: module objects declared, module
    /// codomains pure powers of their object, unique names.
    pub fn check_invariants(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        let mut objects = BTreeSet::new();
        for m in &self.morphisms {
            if !names.insert(&m.name) {
                return Err(Error::Internal(format!("duplicate morphism name `{}`", m.name)));
            }
            if let Some(obj) = &m.object {
                if !objects.insert(obj) {
                    return Err(Error::Internal(format!("object `{obj}` has two modules")));
                }
                let pure = m.cod.is_unit()
                    || (m.cod.objects().count() == 1 && m.cod.contains(obj));
                if !pure {
                    return Err(Error::Internal(format!(
                        "cod of `{}` is not a power of `{obj}`",
                        m.name
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for MonoidalSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

fn parse_word(s: &str, lineno: usize) -> Result<ObjectWord> {
    if s == "1" {
        return Ok(ObjectWord::unit());
    }
    let mut w = ObjectWord::unit();
    for factor in s.split_whitespace() {
        let (name, k) = match factor.split_once('^') {
            Some((n, e)) => {
                let k: u32 = e.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad exponent in `{factor}`"),
                })?;
                (n, k)
            }
            None => (factor, 1),
        };
        if !valid_name(name) {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("invalid object name `{name}`"),
            });
        }
        if k == 0 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("zero exponent in `{factor}`"),
            });
        }
        w.insert(name, k);
    }
    Ok(w)
}

// ── construction from graphs ─────────────────────────────────────────────────

/// Module names are the lowercased node names, freshened with primes on
/// collision (declaration order wins the plain name).
fn module_names(g: &Admg) -> BTreeMap<String, String> {
    let mut used = BTreeSet::new();
    let mut map = BTreeMap::new();
    for node in g.nodes() {
        let mut name = node.to_lowercase();
        if name.chars().next().map(|c| !c.is_ascii_alphabetic()).unwrap_or(true) {
            name = format!("m{name}");
        }
        while used.contains(&name) {
            name.push('\'');
        }
        used.insert(name.clone());
        map.insert(node.clone(), name);
    }
    map
}

fn base_signature(g: &Admg) -> MonoidalSignature {
    let mut sig = MonoidalSignature::new();
    for node in g.nodes() {
        let decl = g.decl_rank(node).unwrap() as u32;
        let topo = g.topo_rank(node).unwrap() as u32;
        sig.add_object(node.clone(), (decl, 0), (topo, 0));
    }
    sig
}

/// The signature generated by an ADMG: one module per node, domain the
/// product of its parents, codomain `V^(children + 1)`.
pub fn signature_from_admg(g: &Admg) -> MonoidalSignature {
    let names = module_names(g);
    let mut sig = base_signature(g);
    let order = g.topo_order();
    for node in order.sequence() {
        let parents = g.parents(node).expect("node exists");
        let children = g.children(node).expect("node exists");
        sig.push_morphism(Morphism {
            name: names[node].clone(),
            object: Some(node.clone()),
            dom: ObjectWord::from_pairs(parents.iter().map(|p| (p.clone(), 1))),
            cod: ObjectWord::power(node.clone(), children.len() as u32 + 1),
        });
    }
    sig
}

/// The chain-factored signature for a topological order: each module's
/// domain is the product of all strictly earlier nodes, its codomain
/// `V^(later + 1)`.
pub fn chain_factored(g: &Admg, order: &TopoOrder) -> MonoidalSignature {
    let names = module_names(g);
    let mut sig = base_signature(g);
    let seq = order.sequence();
    let n = seq.len();
    for (i, node) in seq.iter().enumerate() {
        sig.push_morphism(Morphism {
            name: names[node].clone(),
            object: Some(node.clone()),
            dom: ObjectWord::from_pairs(seq[..i].iter().map(|p| (p.clone(), 1))),
            cod: ObjectWord::power(node.clone(), (n - i) as u32),
        });
    }
    sig
}
