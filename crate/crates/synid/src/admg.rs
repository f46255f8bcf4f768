//! Acyclic directed mixed graphs (ADMGs) and the topological queries the
//! identification algorithm consumes.
//!
//! An ADMG has directed edges for direct causal influence and bidirected
//! edges for unmeasured confounding. The directed part must be acyclic.
//! All values here are immutable after construction and all operations are
//! pure functions.

use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};

pub type NodeSet = BTreeSet<String>;

/// Checks the `[A-Za-z][A-Za-z0-9_']*` shape shared by node, value and
/// morphism names.
pub fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// An acyclic directed mixed graph.
///
/// Nodes keep their declaration order; a deterministic topological order of
/// the directed part is computed at construction (stable Kahn, ties broken
/// by declaration order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Admg {
    nodes: Vec<String>,
    index: BTreeMap<String, usize>,
    directed: BTreeSet<(usize, usize)>,
    bidirected: BTreeSet<(usize, usize)>, // stored with lo < hi
    topo: Vec<usize>,                     // topo[i] = node index at topological position i
    topo_pos: Vec<usize>,                 // inverse of `topo`
}

/// A topological order of an [`Admg`], as a permutation of its node names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopoOrder {
    sequence: Vec<String>,
}

impl TopoOrder {
    pub fn sequence(&self) -> &[String] {
        &self.sequence
    }

    pub fn position(&self, node: &str) -> Option<usize> {
        self.sequence.iter().position(|n| n == node)
    }
}

impl Admg {
    /// Builds an ADMG from node names (declaration order matters) and edge
    /// lists. Parallel edges are deduplicated; bidirected pairs are stored
    /// canonically.
    pub fn new(
        nodes: Vec<String>,
        directed: Vec<(String, String)>,
        bidirected: Vec<(String, String)>,
    ) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if !valid_name(n) {
                return Err(Error::InvalidName(n.clone()));
            }
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::DuplicateNode(n.clone()));
            }
        }
        let resolve = |n: &String| -> Result<usize> {
            index.get(n).copied().ok_or_else(|| Error::UnknownNode(n.clone()))
        };

        let mut dir = BTreeSet::new();
        for (a, b) in &directed {
            let (ia, ib) = (resolve(a)?, resolve(b)?);
            if ia == ib {
                return Err(Error::SelfLoop(a.clone()));
            }
            dir.insert((ia, ib));
        }
        let mut bid = BTreeSet::new();
        for (a, b) in &bidirected {
            let (ia, ib) = (resolve(a)?, resolve(b)?);
            if ia == ib {
                return Err(Error::SelfLoop(a.clone()));
            }
            bid.insert((ia.min(ib), ia.max(ib)));
        }

        let topo = stable_topo(nodes.len(), &dir).map_err(|i| Error::Cycle(nodes[i].clone()))?;
        let mut topo_pos = vec![0; nodes.len()];
        for (pos, &i) in topo.iter().enumerate() {
            topo_pos[i] = pos;
        }

        Ok(Self {
            nodes,
            index,
            directed: dir,
            bidirected: bid,
            topo,
            topo_pos,
        })
    }

    /// Convenience constructor for tests and examples: `"A -> B"` and
    /// `"A <-> B"` edge descriptions over the given nodes.
    pub fn from_edges(nodes: &[&str], edges: &[&str]) -> Result<Self> {
        let mut dir = Vec::new();
        let mut bid = Vec::new();
        for e in edges {
            let parts: Vec<&str> = e.split_whitespace().collect();
            match parts.as_slice() {
                [a, "->", b] => dir.push((a.to_string(), b.to_string())),
                [a, "<->", b] => bid.push((a.to_string(), b.to_string())),
                _ => {
                    return Err(Error::Parse {
                        line: 0,
                        msg: format!("bad edge description `{e}`"),
                    })
                }
            }
        }
        Self::new(nodes.iter().map(|s| s.to_string()).collect(), dir, bid)
    }

    /// Parses the text format: one declaration per line, `#` starts a
    /// comment, `node <NAME>`, `edge <A> -> <B>`, `edge <A> <-> <B>`.
    ///
    /// Lines that belong to the model-file extension (`domain`, `cpt`) are
    /// rejected here; use the model parser for those.
    pub fn parse_text(src: &str) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut dir = Vec::new();
        let mut bid = Vec::new();
        for (lineno, raw) in src.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            parse_graph_line(line, lineno + 1, &mut nodes, &mut dir, &mut bid)?;
        }
        Self::new(nodes, dir, bid)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn contains(&self, node: &str) -> bool {
        self.index.contains_key(node)
    }

    /// Declaration rank of a node.
    pub fn decl_rank(&self, node: &str) -> Option<usize> {
        self.index.get(node).copied()
    }

    /// Position of a node in the canonical topological order.
    pub fn topo_rank(&self, node: &str) -> Option<usize> {
        self.index.get(node).map(|&i| self.topo_pos[i])
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.directed
            .iter()
            .map(move |&(a, b)| (self.nodes[a].as_str(), self.nodes[b].as_str()))
    }

    pub fn bidirected_edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.bidirected
            .iter()
            .map(move |&(a, b)| (self.nodes[a].as_str(), self.nodes[b].as_str()))
    }

    fn idx(&self, node: &str) -> Result<usize> {
        self.index
            .get(node)
            .copied()
            .ok_or_else(|| Error::UnknownNode(node.to_string()))
    }

    fn names(&self, ids: impl IntoIterator<Item = usize>) -> NodeSet {
        ids.into_iter().map(|i| self.nodes[i].clone()).collect()
    }

    /// Tails of directed edges into `v`.
    pub fn parents(&self, v: &str) -> Result<NodeSet> {
        let i = self.idx(v)?;
        Ok(self.names(self.directed.iter().filter(|&&(_, b)| b == i).map(|&(a, _)| a)))
    }

    /// Heads of directed edges out of `v`.
    pub fn children(&self, v: &str) -> Result<NodeSet> {
        let i = self.idx(v)?;
        Ok(self.names(self.directed.iter().filter(|&&(a, _)| a == i).map(|&(_, b)| b)))
    }

    /// Bidirected neighbours of `v`.
    pub fn spouses(&self, v: &str) -> Result<NodeSet> {
        let i = self.idx(v)?;
        Ok(self.names(self.bidirected.iter().filter_map(|&(a, b)| {
            if a == i {
                Some(b)
            } else if b == i {
                Some(a)
            } else {
                None
            }
        })))
    }

    /// Reflexive-transitive closure of `seed` against edge direction.
    pub fn ancestors(&self, seed: &NodeSet) -> Result<NodeSet> {
        self.closure(seed, false)
    }

    /// Reflexive-transitive closure of `seed` along edge direction.
    pub fn descendants(&self, seed: &NodeSet) -> Result<NodeSet> {
        self.closure(seed, true)
    }

    fn closure(&self, seed: &NodeSet, forward: bool) -> Result<NodeSet> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = Vec::new();
        for n in seed {
            let i = self.idx(n)?;
            if !seen[i] {
                seen[i] = true;
                stack.push(i);
            }
        }
        while let Some(u) = stack.pop() {
            for &(a, b) in &self.directed {
                let (from, to) = if forward { (a, b) } else { (b, a) };
                if from == u && !seen[to] {
                    seen[to] = true;
                    stack.push(to);
                }
            }
        }
        Ok(self.names((0..self.nodes.len()).filter(|&i| seen[i])))
    }

    /// Connected component of `v` under bidirected edges only.
    pub fn district(&self, v: &str) -> Result<NodeSet> {
        let start = self.idx(v)?;
        let mut seen = vec![false; self.nodes.len()];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(a, b) in &self.bidirected {
                for (x, y) in [(a, b), (b, a)] {
                    if x == u && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        Ok(self.names((0..self.nodes.len()).filter(|&i| seen[i])))
    }

    /// Partition of the nodes into bidirected-connected components.
    ///
    /// Districts come sorted by their earliest member in topological order,
    /// members sorted the same way.
    pub fn districts(&self) -> Vec<Vec<String>> {
        let mut assigned = vec![false; self.nodes.len()];
        let mut out: Vec<Vec<usize>> = Vec::new();
        // scan in topological order so each district is discovered at its
        // earliest member
        for &start in &self.topo {
            if assigned[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            assigned[start] = true;
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &(a, b) in &self.bidirected {
                    for (x, y) in [(a, b), (b, a)] {
                        if x == u && !assigned[y] {
                            assigned[y] = true;
                            stack.push(y);
                        }
                    }
                }
            }
            comp.sort_by_key(|&i| self.topo_pos[i]);
            out.push(comp);
        }
        out.into_iter()
            .map(|comp| comp.into_iter().map(|i| self.nodes[i].clone()).collect())
            .collect()
    }

    /// Induced subgraph on `keep`: both edge kinds restricted.
    pub fn subgraph(&self, keep: &NodeSet) -> Result<Admg> {
        for n in keep {
            self.idx(n)?;
        }
        let nodes: Vec<String> = self
            .nodes
            .iter()
            .filter(|n| keep.contains(*n))
            .cloned()
            .collect();
        let directed = self
            .directed
            .iter()
            .filter(|&&(a, b)| keep.contains(&self.nodes[a]) && keep.contains(&self.nodes[b]))
            .map(|&(a, b)| (self.nodes[a].clone(), self.nodes[b].clone()))
            .collect();
        let bidirected = self
            .bidirected
            .iter()
            .filter(|&&(a, b)| keep.contains(&self.nodes[a]) && keep.contains(&self.nodes[b]))
            .map(|&(a, b)| (self.nodes[a].clone(), self.nodes[b].clone()))
            .collect();
        Admg::new(nodes, directed, bidirected)
    }

    /// The canonical topological order (stable Kahn, declaration-order ties).
    pub fn topo_order(&self) -> TopoOrder {
        TopoOrder {
            sequence: self.topo.iter().map(|&i| self.nodes[i].clone()).collect(),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Shared line parser for the graph part of the text format.
pub(crate) fn parse_graph_line(
    line: &str,
    lineno: usize,
    nodes: &mut Vec<String>,
    dir: &mut Vec<(String, String)>,
    bid: &mut Vec<(String, String)>,
) -> Result<bool> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    match parts.as_slice() {
        ["node", name] => {
            nodes.push(name.to_string());
            Ok(true)
        }
        ["edge", a, "->", b] => {
            dir.push((a.to_string(), b.to_string()));
            Ok(true)
        }
        ["edge", a, "<->", b] => {
            bid.push((a.to_string(), b.to_string()));
            Ok(true)
        }
        ["edge", ..] => Err(Error::Parse {
            line: lineno,
            msg: format!("bad edge declaration `{line}`"),
        }),
        _ => Err(Error::Parse {
            line: lineno,
            msg: format!("unrecognized declaration `{line}`"),
        }),
    }
}

/// Kahn's algorithm with a deterministic ready queue (declaration order).
/// Returns `Err(i)` with some node on a cycle.
fn stable_topo(n: usize, directed: &BTreeSet<(usize, usize)>) -> std::result::Result<Vec<usize>, usize> {
    let mut indeg = vec![0usize; n];
    for &(_, b) in directed {
        indeg[b] += 1;
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&i) = ready.iter().next() {
        ready.remove(&i);
        order.push(i);
        for &(a, b) in directed {
            if a == i {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    ready.insert(b);
                }
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&i| indeg[i] > 0).unwrap_or(0))
    }
}

// ── Conditional ADMGs ────────────────────────────────────────────────────────

/// An ADMG with a distinguished set of fixed (context) nodes.
///
/// Fixed nodes have no incoming directed edges and no incident bidirected
/// edges; [`Cadmg::fix`] maintains that invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cadmg {
    graph: Admg,
    fixed: NodeSet,
}

impl Cadmg {
    pub fn new(graph: Admg) -> Self {
        Self {
            graph,
            fixed: NodeSet::new(),
        }
    }

    pub fn graph(&self) -> &Admg {
        &self.graph
    }

    pub fn fixed(&self) -> &NodeSet {
        &self.fixed
    }

    fn check_random(&self, v: &str) -> Result<()> {
        if !self.graph.contains(v) {
            return Err(Error::UnknownNode(v.to_string()));
        }
        if self.fixed.contains(v) {
            return Err(Error::AlreadyFixed(v.to_string()));
        }
        Ok(())
    }

    /// The fixability test: `district(v) ∩ descendants(v) = {v}` evaluated
    /// on the subgraph induced by the non-fixed nodes.
    pub fn is_fixable(&self, v: &str) -> Result<bool> {
        self.check_random(v)?;
        let live: NodeSet = self
            .graph
            .nodes()
            .iter()
            .filter(|n| !self.fixed.contains(*n))
            .cloned()
            .collect();
        let sub = self.graph.subgraph(&live)?;
        let dis = sub.district(v)?;
        let de = sub.descendants(&NodeSet::from([v.to_string()]))?;
        let inter: NodeSet = dis.intersection(&de).cloned().collect();
        Ok(inter.len() == 1 && inter.contains(v))
    }

    /// Children of `v` through the remaining directed edges.
    pub fn children(&self, v: &str) -> Result<NodeSet> {
        self.graph.children(v)
    }

    /// Graph-side effect of fixing `v`: all directed edges into `v` and all
    /// bidirected edges at `v` are removed, and `v` joins the context.
    pub fn fix(&self, v: &str) -> Result<Cadmg> {
        if !self.is_fixable(v)? {
            return Err(Error::NotFixable(v.to_string()));
        }
        let directed = self
            .graph
            .directed_edges()
            .filter(|&(_, b)| b != v)
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let bidirected = self
            .graph
            .bidirected_edges()
            .filter(|&(a, b)| a != v && b != v)
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let graph = Admg::new(self.graph.nodes().to_vec(), directed, bidirected)?;
        let mut fixed = self.fixed.clone();
        fixed.insert(v.to_string());
        Ok(Cadmg { graph, fixed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn front_door() -> Admg {
        Admg::from_edges(&["X", "Y", "Z"], &["X -> Z", "Z -> Y", "X <-> Y"]).unwrap()
    }

    fn back_door() -> Admg {
        Admg::from_edges(&["X", "Y", "U"], &["U -> X", "U -> Y", "X -> Y"]).unwrap()
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
    fn parents_and_children() {
        let g = back_door();
        assert_eq!(g.parents("Y").unwrap(), set(&["X", "U"]));
        assert_eq!(g.children("U").unwrap(), set(&["X", "Y"]));
        let f = front_door();
        assert_eq!(f.children("X").unwrap(), set(&["Z"]));
        assert_eq!(f.children("Y").unwrap(), set(&[]));
        // bidirected edges never contribute parents
        let e = example_51();
        assert_eq!(e.parents("X4").unwrap(), set(&["X3"]));
    }

    #[test]
    fn isolated_node_has_no_parents() {
        let g = Admg::from_edges(&["A", "B"], &[]).unwrap();
        assert_eq!(g.parents("A").unwrap(), set(&[]));
        assert!(g.parents("missing").is_err());
    }

    #[test]
    fn closures() {
        let f = front_door();
        assert_eq!(f.descendants(&set(&["X"])).unwrap(), set(&["X", "Z", "Y"]));
        assert_eq!(f.ancestors(&set(&[])).unwrap(), set(&[]));
        let sub = f.subgraph(&set(&["Y", "Z"])).unwrap();
        assert_eq!(sub.ancestors(&set(&["Y"])).unwrap(), set(&["Y", "Z"]));
    }

    #[test]
    fn closure_monotone_and_idempotent() {
        let e = example_51();
        let a1 = e.ancestors(&set(&["X3"])).unwrap();
        let a2 = e.ancestors(&set(&["X3", "X4"])).unwrap();
        assert!(a1.is_subset(&a2));
        assert_eq!(e.ancestors(&a1).unwrap(), a1);
    }

    #[test]
    fn districts_partition() {
        let f = front_door();
        assert_eq!(f.district("X").unwrap(), set(&["X", "Y"]));
        assert_eq!(back_door().district("U").unwrap(), set(&["U"]));
        assert_eq!(example_51().district("X2").unwrap(), set(&["X2", "X4"]));

        let sub = f.subgraph(&set(&["Y", "Z"])).unwrap();
        assert_eq!(sub.districts(), vec![vec!["Z".to_string()], vec!["Y".to_string()]]);

        let empty = Admg::from_edges(&[], &[]).unwrap();
        assert!(empty.districts().is_empty());

        let e51sub = example_51().subgraph(&set(&["X1", "X3", "X4"])).unwrap();
        assert_eq!(
            e51sub.districts(),
            vec![vec!["X1".to_string()], vec!["X3".to_string()], vec!["X4".to_string()]]
        );
    }

    #[test]
    fn subgraph_restricts_both_edge_kinds() {
        let f = front_door();
        let sub = f.subgraph(&set(&["Y", "Z"])).unwrap();
        assert_eq!(sub.directed_edges().collect::<Vec<_>>(), vec![("Z", "Y")]);
        assert_eq!(sub.bidirected_edges().count(), 0);
        // full keep is the identity
        let all: NodeSet = f.nodes().iter().cloned().collect();
        assert_eq!(f.subgraph(&all).unwrap(), f);
        let single = back_door().subgraph(&set(&["Y"])).unwrap();
        assert_eq!(single.nodes(), &["Y".to_string()]);
        assert_eq!(single.directed_edges().count(), 0);
    }

    #[test]
    fn topo_order_is_deterministic() {
        assert_eq!(front_door().topo_order().sequence(), &["X", "Z", "Y"]);
        assert_eq!(back_door().topo_order().sequence(), &["U", "X", "Y"]);
        let single = Admg::from_edges(&["V"], &[]).unwrap();
        assert_eq!(single.topo_order().sequence(), &["V"]);
    }

    #[test]
    fn topo_valid_and_districts_partition_on_all_small_graphs() {
        // every 3-node mixed graph with edges along declaration order
        let names = ["A", "B", "C"];
        let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
        for dir_mask in 0u32..8 {
            for bid_mask in 0u32..8 {
                let pick = |mask: u32| -> Vec<(String, String)> {
                    pairs
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| mask & (1 << k) != 0)
                        .map(|(_, &(a, b))| (names[a].to_string(), names[b].to_string()))
                        .collect()
                };
                let g = Admg::new(
                    names.iter().map(|s| s.to_string()).collect(),
                    pick(dir_mask),
                    pick(bid_mask),
                )
                .unwrap();
                // topological order respects every directed edge
                let order = g.topo_order();
                for (a, b) in g.directed_edges() {
                    assert!(order.position(a).unwrap() < order.position(b).unwrap());
                }
                // districts are disjoint and cover the nodes
                let districts = g.districts();
                let all: Vec<String> = districts.iter().flatten().cloned().collect();
                let unique: NodeSet = all.iter().cloned().collect();
                assert_eq!(all.len(), g.nodes().len());
                assert_eq!(unique.len(), g.nodes().len());
            }
        }
    }

    #[test]
    fn cycle_rejected() {
        let r = Admg::from_edges(&["A", "B"], &["A -> B", "B -> A"]);
        assert!(matches!(r, Err(Error::Cycle(_))));
    }

    #[test]
    fn self_loop_and_duplicates_rejected() {
        assert!(matches!(
            Admg::from_edges(&["A"], &["A -> A"]),
            Err(Error::SelfLoop(_))
        ));
        assert!(matches!(
            Admg::new(vec!["A".into(), "A".into()], vec![], vec![]),
            Err(Error::DuplicateNode(_))
        ));
    }

    #[test]
    fn duplicate_bidirected_edges_dedup() {
        let g = Admg::new(
            vec!["A".into(), "B".into()],
            vec![],
            vec![("A".into(), "B".into()), ("B".into(), "A".into())],
        )
        .unwrap();
        assert_eq!(g.bidirected_edges().count(), 1);
    }

    #[test]
    fn fixability() {
        let f = Cadmg::new(front_door());
        assert!(f.is_fixable("Z").unwrap());
        assert!(f.is_fixable("Y").unwrap()); // dis(Y)={X,Y}, de(Y)={Y}
        assert!(!f.is_fixable("X").unwrap()); // dis(X)={X,Y}, de(X)={X,Z,Y}

        let bow = Cadmg::new(Admg::from_edges(&["X", "Y"], &["X -> Y", "X <-> Y"]).unwrap());
        assert!(!bow.is_fixable("X").unwrap());
    }

    #[test]
    fn fix_updates_graph() {
        let c = Cadmg::new(front_door());
        let after = c.fix("Z").unwrap();
        // X -> Z removed, Z -> Y kept, X <-> Y kept
        assert_eq!(after.graph().directed_edges().collect::<Vec<_>>(), vec![("Z", "Y")]);
        assert_eq!(after.graph().bidirected_edges().collect::<Vec<_>>(), vec![("X", "Y")]);
        assert!(after.fixed().contains("Z"));
        // X now has no children, which is what drives a Hide step
        assert_eq!(after.children("X").unwrap(), set(&[]));
        // double-fixing errors
        assert!(matches!(after.fix("Z"), Err(Error::AlreadyFixed(_))));
    }

    #[test]
    fn fix_clears_incident_edges() {
        let g = example_51();
        let c = Cadmg::new(g).fix("X3").unwrap();
        assert!(c.graph().parents("X3").unwrap().is_empty());
        let c2 = c.fix("X2").unwrap();
        assert!(c2.graph().parents("X2").unwrap().is_empty());
        assert!(c2.graph().spouses("X2").unwrap().is_empty());
    }

    #[test]
    fn parse_text_roundtrip() {
        let src = "# the classic front-door graph\nnode X\nnode Y\nnode Z\nedge X -> Z\nedge Z -> Y\nedge X <-> Y\n";
        let g = Admg::parse_text(src).unwrap();
        assert_eq!(g, front_door());
        assert!(Admg::parse_text("nodule X").is_err());
        assert!(Admg::parse_text("node X\nedge X -> Y").is_err());
    }
}
