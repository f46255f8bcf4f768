//! Signature manipulations: marginalization (hide), control, fixing,
//! simplification to a fixed point, and the recursive fixing-sequence
//! planner.
//!
//! Planning runs on a companion conditional graph: the chain-factored
//! signature erases bidirected structure, so fixability and the hide/fix
//! choice are read off the evolving [`Cadmg`] while the rewrites themselves
//! run on the signature.

use crate::admg::{Admg, Cadmg, NodeSet};
use crate::error::{Error, Result};
use crate::signature::MonoidalSignature;
use crate::word::ObjectWord;
use std::fmt;

/// Marginalization: one output copy of `v` is removed from its module's
/// codomain (the unit if the last one goes).
pub fn hide(sig: &MonoidalSignature, v: &str) -> Result<MonoidalSignature> {
    let mut out = sig.clone();
    let module = out.module_mut(v).ok_or_else(|| Error::NoModule(v.to_string()))?;
    if module.cod.is_unit() {
        return Err(Error::HideUnit(v.to_string()));
    }
    module.cod.remove_one(v);
    Ok(out)
}

/// Control: the module of `v` becomes a copied identity (`dom := v`) and the
/// wires that fed it are deleted from every other codomain by truncated
/// multiset difference.
pub fn control(sig: &MonoidalSignature, v: &str) -> Result<MonoidalSignature> {
    let mut out = sig.clone();
    let old_dom = out
        .module_of(v)
        .ok_or_else(|| Error::NoModule(v.to_string()))?
        .dom
        .clone();
    let module_name = out.module_of(v).unwrap().name.clone();
    for m in out.morphisms().iter().map(|m| m.name.clone()).collect::<Vec<_>>() {
        if m == module_name {
            continue;
        }
        let morphism = out.morphism_mut(&m).unwrap();
        morphism.cod = morphism.cod.difference(&old_dom);
    }
    out.module_mut(v).unwrap().dom = ObjectWord::single(v);
    Ok(out)
}

/// Fixing: hide then control.
pub fn fix(sig: &MonoidalSignature, v: &str) -> Result<MonoidalSignature> {
    control(&hide(sig, v)?, v)
}

/// Removes every module equal to an identity (`dom = cod = V`); objects are
/// kept.
pub fn delete_identities(sig: &MonoidalSignature) -> MonoidalSignature {
    let mut out = sig.clone();
    let victims: Vec<String> = out
        .morphisms()
        .iter()
        .filter(|m| {
            m.dom == m.cod
                && m.dom.total() == 1
                && m.object.as_deref().map(|o| m.dom.contains(o)).unwrap_or(false)
        })
        .map(|m| m.name.clone())
        .collect();
    for name in victims {
        out.remove_morphism(&name);
    }
    out
}

/// One simplification pass: modules with unit codomain are removed; each
/// removed module's domain is deleted from the surviving producers'
/// codomains. Objects no longer referenced drop out of the signature.
pub fn simplify_step(sig: &MonoidalSignature) -> MonoidalSignature {
    let mut out = sig.clone();
    let victims: Vec<(String, ObjectWord)> = out
        .morphisms()
        .iter()
        .filter(|m| m.cod.is_unit())
        .map(|m| (m.name.clone(), m.dom.clone()))
        .collect();
    if victims.is_empty() {
        return out;
    }
    for (name, _) in &victims {
        out.remove_morphism(name);
    }
    for (_, dom) in &victims {
        for m in out.morphisms().iter().map(|m| m.name.clone()).collect::<Vec<_>>() {
            let morphism = out.morphism_mut(&m).unwrap();
            morphism.cod = morphism.cod.difference(dom);
        }
    }
    out.restrict_to_referenced();
    out
}

/// Iterates [`simplify_step`] to its fixed point, then deletes identities.
pub fn simple(sig: &MonoidalSignature) -> MonoidalSignature {
    let mut current = sig.clone();
    loop {
        let next = simplify_step(&current);
        if next == current {
            break;
        }
        current = next;
    }
    delete_identities(&current)
}

// ── fixing sequences ─────────────────────────────────────────────────────────

/// One step of a fixing sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Hide(String),
    Fix(String),
}

impl Step {
    pub fn node(&self) -> &str {
        match self {
            Step::Hide(v) | Step::Fix(v) => v,
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Hide(v) => write!(f, "Hide({v})"),
            Step::Fix(v) => write!(f, "Fix({v})"),
        }
    }
}

/// A validated fixing sequence for one district, stored in application
/// order (conventional composition reads right to left).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixPlan {
    pub steps: Vec<Step>,
    /// The nodes left unfixed: the target district of the plan.
    pub district: NodeSet,
}

impl fmt::Display for FixPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.steps.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// Plans a fixing sequence for `w` on a companion conditional graph.
///
/// Dropping a node's chain factor (the signature-side effect of `Fix`) is
/// only sound when the factor coincides with the node's Markov-blanket
/// conditional in the evolving kernel. That needs two things:
///
/// * the candidate is *clean* — every remaining bidirected-district mate
///   precedes it topologically (fixing earlier nodes clears bidirected
///   edges and can make candidates clean);
/// * no *persisting* hidden node sits in the candidate's Markov pillow — a
///   hidden node's mechanism stays inside the kernel as a summed marginal
///   whenever a district node follows it, and a chain factor genuinely
///   conditioned on that wire cannot be divided out. The pillow is read
///   off the original graph: the bidirected component of the candidate
///   among its topological predecessors, plus that component's parents.
///
/// Everything else is emitted as `Hide`, as are childless candidates. The
/// planner picks the earliest clean fixable candidate, falling back to the
/// earliest fixable one, and fails with [`Error::NoValidSequence`] when no
/// remaining candidate is fixable — which signals non-identifiability for
/// this district.
pub fn plan_fixseq(g: &Admg, w: &NodeSet) -> Result<FixPlan> {
    for v in w {
        if !g.contains(v) {
            return Err(Error::UnknownNode(v.clone()));
        }
    }
    let district: NodeSet = g
        .nodes()
        .iter()
        .filter(|n| !w.contains(*n))
        .cloned()
        .collect();
    let rank = |v: &str| g.topo_rank(v).expect("node exists");
    let last_district_rank = district.iter().map(|d| rank(d)).max();
    let markov_pillow = |v: &str| -> NodeSet {
        let keep: NodeSet = g
            .nodes()
            .iter()
            .filter(|n| rank(n) <= rank(v))
            .cloned()
            .collect();
        let sub = g.subgraph(&keep).expect("predecessor subgraph");
        let component = sub.district(v).expect("node exists");
        let mut pillow = component.clone();
        for c in &component {
            pillow.extend(g.parents(c).expect("node exists"));
        }
        pillow.remove(v);
        pillow
    };
    let mut remaining: Vec<String> = w.iter().cloned().collect();
    remaining.sort_by_key(|v| rank(v));
    let mut cadmg = Cadmg::new(g.clone());
    let mut steps = Vec::new();
    let mut persisting_hidden = NodeSet::new();
    while !remaining.is_empty() {
        let clean = |cadmg: &Cadmg, v: &str| -> bool {
            cadmg
                .graph()
                .district(v)
                .map(|mates| mates.iter().all(|m| m == v || rank(m) < rank(v)))
                .unwrap_or(false)
        };
        let pick = remaining
            .iter()
            .position(|v| cadmg.is_fixable(v).unwrap_or(false) && clean(&cadmg, v))
            .or_else(|| {
                remaining
                    .iter()
                    .position(|v| cadmg.is_fixable(v).unwrap_or(false))
            });
        let Some(i) = pick else {
            let ordered: Vec<String> = {
                let mut d: Vec<String> = district.iter().cloned().collect();
                d.sort_by_key(|v| rank(v));
                d
            };
            return Err(Error::NoValidSequence {
                district: ordered,
                stuck: remaining,
            });
        };
        let is_clean = clean(&cadmg, &remaining[i]);
        let v = remaining.remove(i);
        let has_children = !cadmg.children(&v)?.is_empty();
        let blocked = markov_pillow(&v)
            .iter()
            .any(|h| persisting_hidden.contains(h));
        let step = if has_children && is_clean && !blocked {
            Step::Fix(v.clone())
        } else {
            let persists = last_district_rank.map(|d| d > rank(&v)).unwrap_or(false);
            if persists {
                persisting_hidden.insert(v.clone());
            }
            Step::Hide(v.clone())
        };
        cadmg = cadmg.fix(&v)?;
        steps.push(step);
    }
    Ok(FixPlan { steps, district })
}

/// Applies a plan's steps in order.
pub fn apply_plan(sig: &MonoidalSignature, plan: &FixPlan) -> Result<MonoidalSignature> {
    let mut current = sig.clone();
    for step in &plan.steps {
        current = match step {
            Step::Hide(v) => hide(&current, v)?,
            Step::Fix(v) => fix(&current, v)?,
        };
    }
    Ok(current)
}

/// Like [`apply_plan`] but keeps the signature after every step, for
/// derivation traces.
pub fn apply_plan_traced(
    sig: &MonoidalSignature,
    plan: &FixPlan,
) -> Result<(MonoidalSignature, Vec<(Step, MonoidalSignature)>)> {
    let mut current = sig.clone();
    let mut trace = Vec::new();
    for step in &plan.steps {
        current = match step {
            Step::Hide(v) => hide(&current, v)?,
            Step::Fix(v) => fix(&current, v)?,
        };
        trace.push((step.clone(), current.clone()));
    }
    Ok((current, trace))
}
