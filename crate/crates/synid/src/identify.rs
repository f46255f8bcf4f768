//! End-to-end syntactic identification: district decomposition, per-district
//! fixing, exterior combination and final marginalization.

use crate::admg::{Admg, NodeSet};
use crate::error::{Error, Result};
use crate::expr::{combine, exterior, ExteriorSignature};
use crate::rewrite::{apply_plan_traced, hide, plan_fixseq, simple, FixPlan, Step};
use crate::signature::{chain_factored, MonoidalSignature};
use std::collections::BTreeSet;

/// A request for the effect of `do(causes)` on `effects`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalQuery {
    pub effects: NodeSet,
    pub causes: NodeSet,
}

impl CausalQuery {
    /// Both sets must be non-empty and disjoint.
    pub fn new(effects: NodeSet, causes: NodeSet) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidQuery("effect set is empty".to_string()));
        }
        if causes.is_empty() {
            return Err(Error::InvalidQuery("cause set is empty".to_string()));
        }
        if let Some(v) = effects.intersection(&causes).next() {
            return Err(Error::InvalidQuery(format!(
                "`{v}` appears as both cause and effect"
            )));
        }
        Ok(Self { effects, causes })
    }

    /// Convenience constructor from name lists.
    pub fn of(effects: &[&str], causes: &[&str]) -> Result<Self> {
        Self::new(
            effects.iter().map(|s| s.to_string()).collect(),
            causes.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn validate_against(&self, g: &Admg) -> Result<()> {
        for v in self.effects.iter().chain(self.causes.iter()) {
            if !g.contains(v) {
                return Err(Error::InvalidQuery(format!("unknown node `{v}`")));
            }
        }
        Ok(())
    }
}

/// Ancestors of the effects within the graph minus the causes: the
/// variables the identified formula ranges over.
pub fn y_star(g: &Admg, query: &CausalQuery) -> Result<NodeSet> {
    query.validate_against(g)?;
    let keep: NodeSet = g
        .nodes()
        .iter()
        .filter(|n| !query.causes.contains(*n))
        .cloned()
        .collect();
    let sub = g.subgraph(&keep)?;
    sub.ancestors(&query.effects)
}

/// True when a directed path from `from` reaches `target` using only
/// intermediate nodes from `allowed`.
fn reaches_through(g: &Admg, from: &str, allowed: &NodeSet, target: &NodeSet) -> bool {
    let mut stack = vec![from.to_string()];
    let mut seen = NodeSet::new();
    while let Some(v) = stack.pop() {
        for child in g.children(&v).expect("node exists") {
            if target.contains(&child) {
                return true;
            }
            if allowed.contains(&child) && seen.insert(child.clone()) {
                stack.push(child);
            }
        }
    }
    false
}

/// Everything recorded while processing one district.
#[derive(Debug, Clone)]
pub struct DistrictTrace {
    /// District members in topological order.
    pub district: Vec<String>,
    pub plan: FixPlan,
    /// Signature after each plan step, for derivation traces.
    pub steps: Vec<(Step, MonoidalSignature)>,
    /// `Simple(Fixseq(chain signature))` for this district.
    pub simplified: MonoidalSignature,
    pub exterior: ExteriorSignature,
}

/// A successful identification with full provenance.
#[derive(Debug, Clone)]
pub struct Identification {
    /// The interventional signature, with interiors of collapsed composites
    /// still attached for exposure.
    pub result: ExteriorSignature,
    /// The combination of the district exteriors before the final
    /// marginalization.
    pub combined: MonoidalSignature,
    pub districts: Vec<DistrictTrace>,
    pub y_star: NodeSet,
    pub effects: NodeSet,
    pub causes: NodeSet,
    pub chain: MonoidalSignature,
}

impl Identification {
    /// The interventional signature itself.
    pub fn signature(&self) -> &MonoidalSignature {
        &self.result.sig
    }

    /// The evaluation form: every district kernel laid out as its
    /// constituent modules, with each district's hidden mechanisms shared
    /// rather than duplicated per composite, and interior objects that
    /// clash with exterior names primed. Codomains are recomputed so the
    /// surplus outputs are exactly the effects.
    pub fn exposed(&self) -> Result<MonoidalSignature> {
        let mut out = MonoidalSignature::new();
        // names that must keep their meaning: the variables the formula
        // ranges over, the interventional inputs, and every context wire
        let mut reserved: BTreeSet<String> = self.y_star.iter().cloned().collect();
        reserved.extend(self.causes.iter().cloned());
        for trace in &self.districts {
            for tm in crate::expr::thread(&trace.simplified).modules {
                reserved.extend(tm.dom_external.objects().cloned());
            }
        }

        for trace in &self.districts {
            let outputs: BTreeSet<&str> = trace.district.iter().map(|s| s.as_str()).collect();
            let threaded = crate::expr::thread(&trace.simplified);
            let mut rename: std::collections::BTreeMap<String, String> =
                std::collections::BTreeMap::new();
            for tm in &threaded.modules {
                let object = tm.object.clone().ok_or_else(|| {
                    Error::Internal(format!("survivor `{}` has no module object", tm.name))
                })?;
                let new_obj = if outputs.contains(object.as_str()) {
                    let (decl, topo) = (
                        trace.simplified.decl_rank(&object),
                        trace.simplified.topo_rank(&object),
                    );
                    out.add_object(object.clone(), decl, topo);
                    object.clone()
                } else if reserved.contains(&object) || out.has_object(&object) {
                    // a hidden mechanism's wire, not the variable itself
                    if !out.has_object(&object) {
                        let (decl, topo) = (
                            trace.simplified.decl_rank(&object),
                            trace.simplified.topo_rank(&object),
                        );
                        out.add_object(object.clone(), decl, topo);
                    }
                    let primed = out.add_primed_copy(&object);
                    rename.insert(object.clone(), primed.clone());
                    primed
                } else {
                    let (decl, topo) = (
                        trace.simplified.decl_rank(&object),
                        trace.simplified.topo_rank(&object),
                    );
                    out.add_object(object.clone(), decl, topo);
                    object.clone()
                };

                let mut name = tm.name.clone();
                if new_obj != object {
                    name.push('\'');
                }
                while out.morphism(&name).is_some() {
                    name.push('\'');
                }
                let mut dom = tm.dom_external.clone();
                for (obj, k) in tm.dom_internal.iter() {
                    let mapped = rename.get(obj).cloned().unwrap_or_else(|| obj.clone());
                    dom.insert(mapped, k);
                }
                for obj in dom.objects() {
                    if !out.has_object(obj) {
                        out.add_object(
                            obj.clone(),
                            trace.simplified.decl_rank(obj),
                            trace.simplified.topo_rank(obj),
                        );
                    }
                }
                out.push_morphism(crate::signature::Morphism {
                    name,
                    object: Some(new_obj.clone()),
                    dom,
                    cod: crate::word::ObjectWord::single(new_obj),
                });
            }
        }

        // surplus must be exactly the effect set
        let recompute: Vec<(String, String, u32)> = out
            .morphisms()
            .iter()
            .map(|m| {
                let obj = m.object.clone().expect("constructed with objects");
                let consumed: u32 = out
                    .morphisms()
                    .iter()
                    .filter(|m2| m2.name != m.name)
                    .map(|m2| m2.dom.multiplicity(&obj))
                    .sum();
                let surplus = u32::from(self.effects.contains(&obj));
                (m.name.clone(), obj, consumed + surplus)
            })
            .collect();
        for (name, obj, k) in recompute {
            out.morphism_mut(&name).unwrap().cod = crate::word::ObjectWord::power(obj, k);
        }
        out.sort_morphisms();
        Ok(out)
    }
}

/// Outcome of [`identify`]: non-identifiability is a result, not an error.
#[derive(Debug, Clone)]
pub enum IdentifyResult {
    Identified(Box<Identification>),
    NotIdentifiable {
        /// The first district (in iteration order) with no valid fixing
        /// sequence, in topological order.
        district: Vec<String>,
        /// The nodes of its fixing set that were still unfixable.
        stuck: Vec<String>,
        pub_y_star: NodeSet,
    },
}

impl IdentifyResult {
    pub fn is_identified(&self) -> bool {
        matches!(self, IdentifyResult::Identified(_))
    }

    pub fn identification(&self) -> Option<&Identification> {
        match self {
            IdentifyResult::Identified(id) => Some(id),
            IdentifyResult::NotIdentifiable { .. } => None,
        }
    }
}

/// The syntactic identification algorithm.
///
/// Computes `Y*`, decomposes the induced subgraph into districts, plans and
/// applies a fixing sequence for the complement of each district on the
/// chain-factored signature, simplifies, collapses each result to its
/// exterior, combines the exteriors, and finally marginalizes `Y* \ Y`.
pub fn identify(g: &Admg, query: &CausalQuery) -> Result<IdentifyResult> {
    query.validate_against(g)?;
    let ystar = y_star(g, query)?;
    let sub = g.subgraph(&ystar)?;
    let districts = sub.districts();
    let order = g.topo_order();
    let chain = chain_factored(g, &order);

    let mut traces: Vec<DistrictTrace> = Vec::new();
    for district in &districts {
        let dset: NodeSet = district.iter().cloned().collect();
        let w: NodeSet = g
            .nodes()
            .iter()
            .filter(|n| !dset.contains(*n))
            .cloned()
            .collect();
        let plan = match plan_fixseq(g, &w) {
            Ok(plan) => plan,
            Err(Error::NoValidSequence { stuck, .. }) => {
                return Ok(IdentifyResult::NotIdentifiable {
                    district: district.clone(),
                    stuck,
                    pub_y_star: ystar,
                });
            }
            Err(e) => return Err(e),
        };
        // A hidden cause keeps its mechanism inside the district's kernel
        // as a summed marginal. If its influence reaches the district
        // through mechanisms that also stay inside (hidden or district
        // nodes), the do() context is irretrievably averaged out and this
        // calculus cannot express the kernel. Influence routed through
        // fixed nodes is fine: those enter as contexts at the top level.
        let hidden: NodeSet = plan
            .steps
            .iter()
            .filter_map(|s| match s {
                Step::Hide(v) => Some(v.clone()),
                Step::Fix(_) => None,
            })
            .collect();
        let inside: NodeSet = hidden.union(&dset).cloned().collect();
        let mut lost: Vec<String> = query
            .causes
            .iter()
            .filter(|a| hidden.contains(*a) && reaches_through(g, a, &inside, &dset))
            .cloned()
            .collect();
        // A persisting hidden marginal correlates, through its bidirected
        // component, everything that component touches. Confined to this
        // district that correlation is summed out correctly; reaching
        // another district it cannot be, because every district kernel
        // carries its own private copy of the marginal.
        let district_max_rank = district
            .iter()
            .map(|d| g.topo_rank(d).expect("node exists"))
            .max()
            .unwrap_or(0);
        for h in &hidden {
            let persists = g.topo_rank(h).expect("node exists") < district_max_rank;
            if !persists {
                continue;
            }
            let component = g.district(h)?;
            if !component.iter().all(|m| m == h || dset.contains(m)) {
                lost.push(h.clone());
            }
        }
        if !lost.is_empty() {
            lost.sort_by_key(|v| g.topo_rank(v));
            lost.dedup();
            return Ok(IdentifyResult::NotIdentifiable {
                district: district.clone(),
                stuck: lost,
                pub_y_star: ystar,
            });
        }
        let (fixed, steps) = apply_plan_traced(&chain, &plan)?;
        let simplified = simple(&fixed);
        let ext = exterior(&simplified)?;

        // the exterior of a district's kernel exposes exactly the district
        let outputs: BTreeSet<&str> = ext
            .sig
            .morphisms()
            .iter()
            .filter_map(|m| m.object.as_deref())
            .collect();
        let expected: BTreeSet<&str> = district.iter().map(|s| s.as_str()).collect();
        if outputs != expected {
            return Err(Error::Internal(format!(
                "district {{{}}} produced exterior outputs {{{}}}",
                district.join(", "),
                outputs.into_iter().collect::<Vec<_>>().join(", ")
            )));
        }

        traces.push(DistrictTrace {
            district: district.clone(),
            plan,
            steps,
            simplified,
            exterior: ext,
        });
    }

    let mut combined = ExteriorSignature::plain(MonoidalSignature::new());
    for trace in &traces {
        combined = combine(&combined, &trace.exterior)?;
    }
    let combined_sig = combined.sig.clone();

    // marginalize Y* \ Y; every such object must carry a module
    let mut final_sig = combined.sig.clone();
    let mut hidden: Vec<String> = ystar.difference(&query.effects).cloned().collect();
    hidden.sort_by_key(|v| g.topo_rank(v));
    for v in &hidden {
        if final_sig.module_of(v).is_none() {
            return Err(Error::Internal(format!(
                "object `{v}` of Y* \\ Y has no module in the combined signature"
            )));
        }
        final_sig = hide(&final_sig, v)?;
    }

    Ok(IdentifyResult::Identified(Box::new(Identification {
        result: ExteriorSignature {
            sig: final_sig,
            interiors: combined.interiors,
        },
        combined: combined_sig,
        districts: traces,
        y_star: ystar,
        effects: query.effects.clone(),
        causes: query.causes.clone(),
        chain,
    })))
}

/// Human-readable derivation trace.
pub fn explain(g: &Admg, query: &CausalQuery, result: &IdentifyResult) -> String {
    let mut out = String::new();
    let line = |out: &mut String, s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    let indent = |out: &mut String, sig: &MonoidalSignature| {
        if sig.morphisms().is_empty() {
            out.push_str("    (no morphisms)\n");
        }
        for l in sig.to_text().lines() {
            out.push_str("    ");
            out.push_str(l);
            out.push('\n');
        }
    };
    let fmt_set = |s: &[String]| format!("{{{}}}", s.join(", "));
    let sorted = |s: &NodeSet| {
        let mut v: Vec<String> = s.iter().cloned().collect();
        v.sort_by_key(|n| g.topo_rank(n));
        v
    };

    line(
        &mut out,
        format!(
            "query: {} | do({})",
            sorted(&query.effects).join(", "),
            sorted(&query.causes).join(", ")
        ),
    );

    match result {
        IdentifyResult::NotIdentifiable {
            district,
            stuck,
            pub_y_star,
        } => {
            line(&mut out, format!("Y* = {}", fmt_set(&sorted(pub_y_star))));
            line(
                &mut out,
                format!(
                    "district {} has no valid fixing sequence: stuck on {}",
                    fmt_set(district),
                    fmt_set(stuck)
                ),
            );
            line(&mut out, "not identifiable".to_string());
        }
        IdentifyResult::Identified(id) => {
            line(&mut out, format!("Y* = {}", fmt_set(&sorted(&id.y_star))));
            let names: Vec<String> = id
                .districts
                .iter()
                .map(|t| fmt_set(&t.district))
                .collect();
            line(&mut out, format!("districts of the subgraph on Y*: {}", names.join(", ")));
            line(&mut out, "chain-factored signature:".to_string());
            indent(&mut out, &id.chain);
            for trace in &id.districts {
                line(&mut out, format!("district {}:", fmt_set(&trace.district)));
                line(&mut out, format!("  plan: {}", trace.plan));
                for (step, sig) in &trace.steps {
                    line(&mut out, format!("  after {step}:"));
                    indent(&mut out, sig);
                }
                line(&mut out, "  simplified:".to_string());
                indent(&mut out, &trace.simplified);
                line(&mut out, "  exterior:".to_string());
                indent(&mut out, &trace.exterior.sig);
                for (name, interior) in &trace.exterior.interiors {
                    line(&mut out, format!("    where {name} = {}", interior.expr()));
                }
            }
            line(&mut out, "combined exterior signature:".to_string());
            indent(&mut out, &id.combined);
            let hidden = sorted(
                &id.y_star
                    .difference(&query.effects)
                    .cloned()
                    .collect::<NodeSet>(),
            );
            if hidden.is_empty() {
                line(&mut out, "nothing to marginalize".to_string());
            } else {
                line(&mut out, format!("marginalize {}:", fmt_set(&hidden)));
            }
            indent(&mut out, id.signature());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn back_door() -> Admg {
        Admg::from_edges(&["X", "Y", "U"], &["U -> X", "U -> Y", "X -> Y"]).unwrap()
    }

    fn front_door() -> Admg {
        Admg::from_edges(&["X", "Y", "Z"], &["X -> Z", "Z -> Y", "X <-> Y"]).unwrap()
    }

    fn example_51() -> Admg {
        Admg::from_edges(
            &["X1", "X2", "X3", "X4"],
            &["X1 -> X2", "X1 -> X3", "X2 -> X3", "X3 -> X4", "X2 <-> X4"],
        )
        .unwrap()
    }

    fn set(names: &[&str]) -> NodeSet {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn y_star_examples() {
        let q = CausalQuery::of(&["Y"], &["X"]).unwrap();
        assert_eq!(y_star(&front_door(), &q).unwrap(), set(&["Y", "Z"]));
        let q51 = CausalQuery::of(&["X4"], &["X2"]).unwrap();
        assert_eq!(y_star(&example_51(), &q51).unwrap(), set(&["X1", "X3", "X4"]));
        // a parentless effect is its own ancestry
        let g = Admg::from_edges(&["A", "B"], &["A -> B"]).unwrap();
        let q = CausalQuery::of(&["A"], &["B"]).unwrap();
        assert_eq!(y_star(&g, &q).unwrap(), set(&["A"]));
    }

    #[test]
    fn query_validation() {
        assert!(CausalQuery::of(&[], &["X"]).is_err());
        assert!(CausalQuery::of(&["Y"], &[]).is_err());
        assert!(CausalQuery::of(&["Y"], &["Y"]).is_err());
        let q = CausalQuery::of(&["Y"], &["W"]).unwrap();
        assert!(identify(&front_door(), &q).is_err());
    }

    #[test]
    fn identify_back_door() {
        let q = CausalQuery::of(&["Y"], &["X"]).unwrap();
        let r = identify(&back_door(), &q).unwrap();
        let id = r.identification().expect("identifiable");
        assert_eq!(id.signature().to_text(), "u: 1 -> U\ny: X U -> Y");
        assert_eq!(id.combined.to_text(), "u: 1 -> U^2\ny: X U -> Y");
    }

    #[test]
    fn identify_front_door() {
        let q = CausalQuery::of(&["Y"], &["X"]).unwrap();
        let r = identify(&front_door(), &q).unwrap();
        let id = r.identification().expect("identifiable");
        assert_eq!(id.signature().to_text(), "z: X -> Z\nq: Z -> Y");
        // intermediate district signatures, in district iteration order
        assert_eq!(id.districts[0].simplified.to_text(), "z: X -> Z");
        assert_eq!(id.districts[1].simplified.to_text(), "x: 1 -> X\ny: X Z -> Y");
        // interior exposure relabels the hidden mechanism
        let exposed = id.result.expose("q").unwrap();
        assert_eq!(exposed.to_text(), "x': 1 -> X'\nz: X -> Z\ny: X' Z -> Y");
    }

    #[test]
    fn identify_example_51() {
        let q = CausalQuery::of(&["X4"], &["X2"]).unwrap();
        let r = identify(&example_51(), &q).unwrap();
        let id = r.identification().expect("identifiable");
        assert_eq!(
            id.signature().to_text(),
            "x1: 1 -> X1^2\nx3: X1 X2 -> X3\nq: X1 X3 -> X4"
        );
        assert_eq!(
            id.combined.to_text(),
            "x1: 1 -> X1^3\nx3: X1 X2 -> X3^2\nq: X1 X3 -> X4"
        );
    }

    #[test]
    fn identify_bow_graph_not_identifiable() {
        let g = Admg::from_edges(&["X", "Y"], &["X -> Y", "X <-> Y"]).unwrap();
        let q = CausalQuery::of(&["Y"], &["X"]).unwrap();
        match identify(&g, &q).unwrap() {
            IdentifyResult::NotIdentifiable { district, stuck, .. } => {
                assert_eq!(district, vec!["Y".to_string()]);
                assert_eq!(stuck, vec!["X".to_string()]);
            }
            IdentifyResult::Identified(_) => panic!("bow graph must not identify"),
        }
    }

    #[test]
    fn identify_is_deterministic() {
        let q = CausalQuery::of(&["X4"], &["X2"]).unwrap();
        let a = identify(&example_51(), &q).unwrap();
        let b = identify(&example_51(), &q).unwrap();
        assert_eq!(
            a.identification().unwrap().signature().to_text(),
            b.identification().unwrap().signature().to_text()
        );
    }

    #[test]
    fn modules_cover_y_star_before_marginalization() {
        for (g, q) in [
            (back_door(), CausalQuery::of(&["Y"], &["X"]).unwrap()),
            (front_door(), CausalQuery::of(&["Y"], &["X"]).unwrap()),
            (example_51(), CausalQuery::of(&["X4"], &["X2"]).unwrap()),
        ] {
            let r = identify(&g, &q).unwrap();
            let id = r.identification().unwrap();
            let with_modules: NodeSet = id
                .combined
                .morphisms()
                .iter()
                .filter_map(|m| m.object.clone())
                .collect();
            assert_eq!(with_modules, id.y_star);
        }
    }

    #[test]
    fn downstream_junk_is_simplified_away() {
        // W sits outside an(Y) ∪ A and must not survive anywhere
        let g = Admg::from_edges(&["X", "Y", "W"], &["X -> Y", "Y -> W"]).unwrap();
        let q = CausalQuery::of(&["Y"], &["X"]).unwrap();
        let r = identify(&g, &q).unwrap();
        let id = r.identification().unwrap();
        assert_eq!(id.signature().to_text(), "y: X -> Y");
        assert!(!id.signature().has_object("W"));
    }

    #[test]
    fn every_query_identifies_without_bidirected_edges() {
        // exhaustive: all DAGs on up to 4 nodes (edges along declaration
        // order) and all valid cause/effect pairs, including set-valued ones
        let names = ["A", "B", "C", "D"];
        for n in 1..=4usize {
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    pairs.push((i, j));
                }
            }
            for mask in 0u32..(1 << pairs.len()) {
                let edges: Vec<(String, String)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask & (1 << k) != 0)
                    .map(|(_, &(a, b))| (names[a].to_string(), names[b].to_string()))
                    .collect();
                let g = Admg::new(
                    names[..n].iter().map(|s| s.to_string()).collect(),
                    edges,
                    vec![],
                )
                .unwrap();
                // 0 = neither, 1 = cause, 2 = effect
                for split in 0u32..3u32.pow(n as u32) {
                    let mut causes = NodeSet::new();
                    let mut effects = NodeSet::new();
                    let mut code = split;
                    for name in &names[..n] {
                        match code % 3 {
                            1 => {
                                causes.insert(name.to_string());
                            }
                            2 => {
                                effects.insert(name.to_string());
                            }
                            _ => {}
                        }
                        code /= 3;
                    }
                    if causes.is_empty() || effects.is_empty() {
                        continue;
                    }
                    let q = CausalQuery::new(effects, causes).unwrap();
                    let r = identify(&g, &q).expect("no internal errors");
                    assert!(
                        r.is_identified(),
                        "query {q:?} must identify on a fully observed DAG"
                    );
                }
            }
        }
    }

    #[test]
    fn explain_mentions_the_pieces() {
        let q = CausalQuery::of(&["Y"], &["X"]).unwrap();
        let r = identify(&front_door(), &q).unwrap();
        let text = explain(&front_door(), &q, &r);
        assert!(text.contains("Y* = {Z, Y}") || text.contains("Y* = {Y, Z}"));
        assert!(text.contains("plan: Hide(Y);Fix(X)"));
        assert!(text.contains("plan: Fix(Z);Hide(X)"));
        assert!(text.contains("q: Z -> Y"));

        let bow = Admg::from_edges(&["X", "Y"], &["X -> Y", "X <-> Y"]).unwrap();
        let r = identify(&bow, &q).unwrap();
        let text = explain(&bow, &q, &r);
        assert!(text.contains("not identifiable"));
        assert!(text.contains("{Y}"));
        assert!(text.contains("{X}"));
    }
}
