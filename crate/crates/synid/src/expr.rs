//! Composite morphism expressions, exterior signatures and interior
//! exposure.
//!
//! Collapsing a signature to its exterior hides internal mechanisms behind
//! one morphism per output object; the interior is recorded so it can be
//! re-exposed later (with primed names where inlining would clash with the
//! surrounding signature).

use crate::error::{Error, Result};
use crate::signature::{MonoidalSignature, Morphism, Rank};
use crate::word::ObjectWord;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A composition tree over morphism names, identities, copies and deletions.
///
/// `Seq` stores layers in application order (first applied first); the
/// conventional right-to-left composition is produced by `Display`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MorphismExpr {
    Gen(String),
    Id(String),
    Copy(String, u32),
    Del(String),
    Seq(Vec<MorphismExpr>),
    Par(Vec<MorphismExpr>),
}

impl fmt::Display for MorphismExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MorphismExpr::Gen(name) => write!(f, "{name}"),
            MorphismExpr::Id(obj) => write!(f, "id_{obj}"),
            MorphismExpr::Copy(obj, _) => write!(f, "Δ_{obj}"),
            MorphismExpr::Del(obj) => write!(f, "del_{obj}"),
            MorphismExpr::Seq(layers) => {
                let parts: Vec<String> = layers
                    .iter()
                    .rev()
                    .map(|l| match l {
                        MorphismExpr::Par(items) if items.len() > 1 => format!("({l})"),
                        _ => l.to_string(),
                    })
                    .collect();
                write!(f, "{}", parts.join(" · "))
            }
            MorphismExpr::Par(items) => {
                let parts: Vec<String> = items.iter().map(|i| i.to_string()).collect();
                write!(f, "{}", parts.join(" ⊗ "))
            }
        }
    }
}

impl MorphismExpr {
    /// Folds the expression to its `(dom, cod)` type, resolving generator
    /// names against `types`.
    pub fn type_in(
        &self,
        types: &BTreeMap<String, (ObjectWord, ObjectWord)>,
    ) -> Result<(ObjectWord, ObjectWord)> {
        match self {
            MorphismExpr::Gen(name) => types
                .get(name)
                .cloned()
                .ok_or_else(|| Error::NoMorphism(name.clone())),
            MorphismExpr::Id(obj) => {
                Ok((ObjectWord::single(obj.clone()), ObjectWord::single(obj.clone())))
            }
            MorphismExpr::Copy(obj, k) => Ok((
                ObjectWord::single(obj.clone()),
                ObjectWord::power(obj.clone(), *k),
            )),
            MorphismExpr::Del(obj) => Ok((ObjectWord::single(obj.clone()), ObjectWord::unit())),
            MorphismExpr::Par(items) => {
                let mut dom = ObjectWord::unit();
                let mut cod = ObjectWord::unit();
                for item in items {
                    let (d, c) = item.type_in(types)?;
                    dom = dom.product(&d);
                    cod = cod.product(&c);
                }
                Ok((dom, cod))
            }
            MorphismExpr::Seq(layers) => {
                let mut iter = layers.iter();
                let first = iter.next().ok_or_else(|| {
                    Error::Internal("empty sequential composition".to_string())
                })?;
                let (dom, mut cod) = first.type_in(types)?;
                for layer in iter {
                    let (d, c) = layer.type_in(types)?;
                    if d != cod {
                        return Err(Error::Internal(format!(
                            "type mismatch in composition: {:?} then {:?}",
                            cod, d
                        )));
                    }
                    cod = c;
                }
                Ok((dom, cod))
            }
        }
    }
}

// ── wire threading ───────────────────────────────────────────────────────────

/// Per-morphism split of the domain into internally supplied wires and free
/// (exterior) inputs, computed by threading production along morphism order.
#[derive(Debug, Clone)]
pub struct ThreadedModule {
    pub name: String,
    pub object: Option<String>,
    pub dom_internal: ObjectWord,
    pub dom_external: ObjectWord,
    pub cod: ObjectWord,
}

#[derive(Debug, Clone)]
pub struct Threading {
    pub modules: Vec<ThreadedModule>,
    /// Distinct free-input objects.
    pub externals: ObjectWord,
    /// Total free uses per object (≥ the deduplicated `externals`).
    pub external_uses: ObjectWord,
    /// Production left over after all internal consumption.
    pub surplus: ObjectWord,
}

/// Threads a signature's morphisms in list order: each domain occurrence is
/// drawn from earlier production when available, otherwise from outside.
pub fn thread(sig: &MonoidalSignature) -> Threading {
    thread_restricted(sig, None, &BTreeSet::new())
}

/// Threading restricted to `members` (all morphisms when `None`); objects in
/// `stop` are never drawn from the pool even if produced.
fn thread_restricted(
    sig: &MonoidalSignature,
    members: Option<&BTreeSet<String>>,
    stop: &BTreeSet<String>,
) -> Threading {
    let mut pool: BTreeMap<String, u32> = BTreeMap::new();
    let mut modules = Vec::new();
    let mut external_uses = ObjectWord::unit();
    for m in sig.morphisms() {
        if let Some(set) = members {
            if !set.contains(&m.name) {
                continue;
            }
        }
        let mut dom_internal = ObjectWord::unit();
        let mut dom_external = ObjectWord::unit();
        for (obj, k) in m.dom.iter() {
            let available = if stop.contains(obj) {
                0
            } else {
                pool.get(obj).copied().unwrap_or(0)
            };
            let taken = k.min(available);
            if taken > 0 {
                *pool.get_mut(obj).unwrap() -= taken;
                dom_internal.insert(obj.clone(), taken);
            }
            if k > taken {
                dom_external.insert(obj.clone(), k - taken);
                external_uses.insert(obj.clone(), k - taken);
            }
        }
        for (obj, k) in m.cod.iter() {
            *pool.entry(obj.clone()).or_insert(0) += k;
        }
        modules.push(ThreadedModule {
            name: m.name.clone(),
            object: m.object.clone(),
            dom_internal,
            dom_external,
            cod: m.cod.clone(),
        });
    }
    let externals = ObjectWord::from_pairs(external_uses.objects().map(|o| (o.clone(), 1)));
    let surplus = ObjectWord::from_pairs(
        pool.iter().filter(|(_, &k)| k > 0).map(|(o, &k)| (o.clone(), k)),
    );
    Threading {
        modules,
        externals,
        external_uses,
        surplus,
    }
}

/// The type of a signature's maximal model: free inputs (deduplicated) and
/// leftover outputs.
pub fn maximal_model_type(sig: &MonoidalSignature) -> (ObjectWord, ObjectWord) {
    let t = thread(sig);
    (t.externals, t.surplus)
}

/// Layered expression of a signature's maximal model: generators in list
/// order with copies for fanned-out free inputs and identities for
/// pass-through wires.
pub fn maximal_model_expr(sig: &MonoidalSignature) -> MorphismExpr {
    let t = thread(sig);
    build_expr(sig, &t.modules, &t.externals, &t.external_uses)
}

fn build_expr(
    sig: &MonoidalSignature,
    modules: &[ThreadedModule],
    externals: &ObjectWord,
    external_uses: &ObjectWord,
) -> MorphismExpr {
    let mut layers = Vec::new();
    let mut word = ObjectWord::unit();
    // fan out multi-use free inputs first
    let mut intro = Vec::new();
    let mut fanned = false;
    for obj in externals.objects() {
        let uses = external_uses.multiplicity(obj);
        word.insert(obj.clone(), uses);
        if uses > 1 {
            intro.push(MorphismExpr::Copy(obj.clone(), uses));
            fanned = true;
        } else {
            intro.push(MorphismExpr::Id(obj.clone()));
        }
    }
    if fanned {
        layers.push(MorphismExpr::Par(intro));
    }
    for m in modules {
        let consumed = m.dom_internal.product(&m.dom_external);
        let rest = word.difference(&consumed);
        let mut items = vec![MorphismExpr::Gen(m.name.clone())];
        let mut rest_sorted: Vec<(&String, u32)> = rest.iter().collect();
        rest_sorted.sort_by_key(|(o, _)| sig.decl_rank(o));
        for (obj, k) in rest_sorted {
            for _ in 0..k {
                items.push(MorphismExpr::Id(obj.clone()));
            }
        }
        layers.push(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            MorphismExpr::Par(items)
        });
        word = rest.product(&m.cod);
    }
    if layers.len() == 1 {
        layers.pop().unwrap()
    } else {
        MorphismExpr::Seq(layers)
    }
}

// ── exterior signatures ──────────────────────────────────────────────────────

/// One interior constituent of a collapsed composite, with its domain split
/// into wires fed from inside the composite and wires fed from its exterior
/// inputs. The codomain is trimmed to what the composite itself consumes
/// (the terminal module keeps the composite's output).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteriorModule {
    pub name: String,
    pub object: String,
    pub decl: Rank,
    pub topo: Rank,
    pub dom_external: ObjectWord,
    pub dom_internal: ObjectWord,
    pub cod: ObjectWord,
}

/// The recorded interior of a composite exterior morphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interior {
    pub modules: Vec<InteriorModule>,
    pub dom: ObjectWord,
    pub cod: ObjectWord,
}

impl Interior {
    /// Rebuilds the layered expression of this interior.
    pub fn expr(&self) -> MorphismExpr {
        let mut sig = MonoidalSignature::new();
        let mut all = BTreeSet::new();
        for m in &self.modules {
            all.extend(m.dom_external.objects().cloned());
            all.extend(m.dom_internal.objects().cloned());
            all.extend(m.cod.objects().cloned());
        }
        for (i, obj) in all.iter().enumerate() {
            sig.add_object(obj.clone(), (i as u32, 0), (i as u32, 0));
        }
        for m in &self.modules {
            sig.push_morphism(Morphism {
                name: m.name.clone(),
                object: Some(m.object.clone()),
                dom: m.dom_external.product(&m.dom_internal),
                cod: m.cod.clone(),
            });
        }
        maximal_model_expr(&sig)
    }

    /// Type-checks the recorded expression against the recorded type.
    pub fn check(&self) -> Result<()> {
        let types: BTreeMap<String, (ObjectWord, ObjectWord)> = self
            .modules
            .iter()
            .map(|m| {
                (
                    m.name.clone(),
                    (m.dom_external.product(&m.dom_internal), m.cod.clone()),
                )
            })
            .collect();
        let (dom, cod) = self.expr().type_in(&types)?;
        // the expression's dom lists each free input once
        if dom != self.dom || cod != self.cod {
            return Err(Error::Internal(format!(
                "interior type mismatch: recorded {:?} -> {:?}, expression {:?} -> {:?}",
                self.dom, self.cod, dom, cod
            )));
        }
        Ok(())
    }
}

/// A signature together with the recorded interiors of its composite
/// morphisms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExteriorSignature {
    pub sig: MonoidalSignature,
    pub interiors: BTreeMap<String, Interior>,
}

impl ExteriorSignature {
    /// Wraps a signature with no recorded interiors.
    pub fn plain(sig: MonoidalSignature) -> Self {
        Self {
            sig,
            interiors: BTreeMap::new(),
        }
    }
}

/// Collapses a (simplified) signature to its exterior.
///
/// Output objects are those with leftover production after internal
/// matching. Each gets one exterior morphism; a single-module composite is
/// kept verbatim, a genuine composite is collapsed under a fresh name with
/// its interior recorded. When several output objects exist, later
/// composites treat earlier output objects as exterior inputs rather than
/// re-deriving them.
pub fn exterior(sig: &MonoidalSignature) -> Result<ExteriorSignature> {
    let full = thread(sig);
    let surplus = &full.surplus;
    let mut outputs: Vec<String> = surplus.objects().cloned().collect();
    outputs.sort_by_key(|o| sig.topo_rank(o));
    let output_set: BTreeSet<String> = outputs.iter().cloned().collect();

    let mut out = MonoidalSignature::new();
    let mut interiors = BTreeMap::new();
    let mut used_names: BTreeSet<String> =
        sig.morphisms().iter().map(|m| m.name.clone()).collect();

    for object in &outputs {
        let terminal = sig
            .module_of(object)
            .ok_or_else(|| Error::Internal(format!("output object `{object}` has no module")))?
            .name
            .clone();
        // membership: transitive producers of the terminal, stopping at the
        // other output objects
        let mut members = BTreeSet::from([terminal.clone()]);
        let mut queue = vec![terminal.clone()];
        while let Some(name) = queue.pop() {
            let m = sig.morphism(&name).expect("member exists");
            for obj in m.dom.objects() {
                if output_set.contains(obj) && obj != object {
                    continue;
                }
                if let Some(producer) = sig.module_of(obj) {
                    if producer.name != name && members.insert(producer.name.clone()) {
                        queue.push(producer.name.clone());
                    }
                }
            }
        }

        let mut stop = output_set.clone();
        stop.remove(object);
        let t = thread_restricted(sig, Some(&members), &stop);
        let ext_cod = ObjectWord::power(object.clone(), surplus.multiplicity(object));

        let register = |out: &mut MonoidalSignature, w: &ObjectWord| {
            for obj in w.objects() {
                out.add_object(obj.clone(), sig.decl_rank(obj), sig.topo_rank(obj));
            }
        };

        if members.len() == 1 {
            // not composite: the morphism itself is already exterior
            let m = sig.morphism(&terminal).expect("terminal exists");
            register(&mut out, &m.dom);
            register(&mut out, &m.cod);
            out.push_morphism(m.clone());
            continue;
        }

        // internal consumption per object, to trim recorded codomains
        let mut consumed = ObjectWord::unit();
        for tm in &t.modules {
            consumed = consumed.product(&tm.dom_internal);
        }
        let mut int_modules = Vec::new();
        for tm in &t.modules {
            let obj = tm.object.clone().ok_or_else(|| {
                Error::Internal(format!("composite member `{}` has no module object", tm.name))
            })?;
            let cod = if obj == *object {
                ext_cod.clone()
            } else {
                ObjectWord::power(obj.clone(), consumed.multiplicity(&obj))
            };
            int_modules.push(InteriorModule {
                name: tm.name.clone(),
                object: obj.clone(),
                decl: sig.decl_rank(&obj),
                topo: sig.topo_rank(&obj),
                dom_external: tm.dom_external.clone(),
                dom_internal: tm.dom_internal.clone(),
                cod,
            });
        }

        let mut name = "q".to_string();
        while used_names.contains(&name) {
            name.push('\'');
        }
        used_names.insert(name.clone());

        register(&mut out, &t.externals);
        register(&mut out, &ext_cod);
        out.push_morphism(Morphism {
            name: name.clone(),
            object: Some(object.clone()),
            dom: t.externals.clone(),
            cod: ext_cod.clone(),
        });
        interiors.insert(
            name,
            Interior {
                modules: int_modules,
                dom: t.externals,
                cod: ext_cod,
            },
        );
    }

    Ok(ExteriorSignature {
        sig: out,
        interiors,
    })
}

// ── combination ──────────────────────────────────────────────────────────────

/// Union of two exterior signatures. Objects and morphisms are unioned,
/// morphism-name clashes on distinct objects are freshened, and every
/// module's codomain is recomputed as `V^(child modules + 1)` in the
/// combined signature.
pub fn combine(a: &ExteriorSignature, b: &ExteriorSignature) -> Result<ExteriorSignature> {
    let mut sig = MonoidalSignature::new();
    let mut interiors = BTreeMap::new();

    for src in [&a.sig, &b.sig] {
        for obj in src.objects() {
            sig.add_object(obj, src.decl_rank(obj), src.topo_rank(obj));
        }
    }
    for m in a.sig.morphisms() {
        sig.push_morphism(m.clone());
        if let Some(int) = a.interiors.get(&m.name) {
            interiors.insert(m.name.clone(), int.clone());
        }
    }
    for m in b.sig.morphisms() {
        if let Some(obj) = &m.object {
            if let Some(prev) = sig.module_of(obj) {
                if prev == m {
                    continue; // identical module contributed by both sides
                }
                return Err(Error::ModuleConflict {
                    object: obj.clone(),
                    left: prev.name.clone(),
                    right: m.name.clone(),
                });
            }
        }
        let mut m = m.clone();
        let original = m.name.clone();
        while sig.morphism(&m.name).is_some() {
            m.name.push('\'');
        }
        if let Some(int) = b.interiors.get(&original) {
            interiors.insert(m.name.clone(), int.clone());
        }
        sig.push_morphism(m);
    }

    // recompute codomains from combined consumption
    let counts: Vec<(String, u32)> = sig
        .morphisms()
        .iter()
        .filter_map(|m| m.object.clone().map(|o| (m.name.clone(), o)))
        .map(|(name, obj)| {
            let ch = sig
                .morphisms()
                .iter()
                .filter(|m2| m2.name != name && m2.dom.contains(&obj))
                .count() as u32;
            (name, ch + 1)
        })
        .collect();
    for (name, k) in counts {
        let obj = sig.morphism(&name).unwrap().object.clone().unwrap();
        sig.morphism_mut(&name).unwrap().cod = ObjectWord::power(obj, k);
    }

    sig.sort_morphisms();
    Ok(ExteriorSignature { sig, interiors })
}

// ── interior exposure ────────────────────────────────────────────────────────

impl ExteriorSignature {
    /// Inlines the recorded interior of `name`, relabelling interior objects
    /// that clash with exterior objects (`X` becomes `X'`, its module `x`
    /// becomes `x'`). A morphism that was never composite has nothing to
    /// inline; exposing it is the identity transformation.
    pub fn expose(&self, name: &str) -> Result<MonoidalSignature> {
        if self.sig.morphism(name).is_none() {
            return Err(Error::NoMorphism(name.to_string()));
        }
        if !self.interiors.contains_key(name) {
            return Ok(self.sig.clone());
        }
        let mut work = self.clone();
        work.expose_in_place(name)?;
        Ok(work.sig)
    }

    /// Inlines every composite with a recorded interior.
    pub fn expose_all(&self) -> Result<MonoidalSignature> {
        let mut work = self.clone();
        let names: Vec<String> = work.sig.morphisms().iter().map(|m| m.name.clone()).collect();
        for name in names {
            if work.interiors.contains_key(&name) {
                work.expose_in_place(&name)?;
            }
        }
        Ok(work.sig)
    }

    fn expose_in_place(&mut self, name: &str) -> Result<()> {
        let interior = self
            .interiors
            .remove(name)
            .ok_or_else(|| Error::NoInterior(name.to_string()))?;
        let current = self
            .sig
            .morphism(name)
            .ok_or_else(|| Error::NoMorphism(name.to_string()))?
            .clone();
        let object = current.object.clone().ok_or_else(|| {
            Error::Internal(format!("composite `{name}` has no module object"))
        })?;
        // marginalization applied after collapse carries over to the
        // terminal module
        let recorded = interior.cod.multiplicity(&object) as i64;
        let delta = current.cod.multiplicity(&object) as i64 - recorded;

        self.sig.remove_morphism(name);

        let mut rename: BTreeMap<String, String> = BTreeMap::new();
        for im in &interior.modules {
            let terminal = im.object == object;
            let new_obj = if terminal {
                object.clone()
            } else if self.sig.has_object(&im.object) {
                let primed = self.sig.add_primed_copy(&im.object);
                rename.insert(im.object.clone(), primed.clone());
                primed
            } else {
                self.sig.add_object(im.object.clone(), im.decl, im.topo);
                im.object.clone()
            };

            let mut new_name = im.name.clone();
            if new_obj != im.object {
                new_name.push('\'');
            }
            while self.sig.morphism(&new_name).is_some() {
                new_name.push('\'');
            }

            let mut dom = im.dom_external.clone();
            for (obj, k) in im.dom_internal.iter() {
                let mapped = rename.get(obj).cloned().unwrap_or_else(|| obj.clone());
                dom.insert(mapped, k);
            }
            let mult = if terminal {
                (im.cod.multiplicity(&object) as i64 + delta).max(0) as u32
            } else {
                im.cod.multiplicity(&im.object)
            };
            self.sig.push_morphism(Morphism {
                name: new_name,
                object: Some(new_obj.clone()),
                dom,
                cod: ObjectWord::power(new_obj, mult),
            });
        }
        self.sig.sort_morphisms();
        Ok(())
    }
}
