//! Discrete semantics for identified signatures.
//!
//! A signature on its own is purely syntactic. This module interprets it in
//! three concrete settings — finite discrete probability, the min-plus
//! (tropical) semifield, and deterministic functions — and verifies the
//! probability interpretation against an independent ground truth: a
//! synthesized latent DAG evaluated by exhaustive truncated-factorization
//! enumeration.
//!
//! Everything here is exact enumeration. Desk-scale graphs are tiny and the
//! verification loop needs exactness, so there is no approximate inference.

use crate::admg::Admg;
use crate::error::{Error, Result};
use crate::expr::thread;
use crate::identify::CausalQuery;
use crate::signature::MonoidalSignature;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// Hard cap on exhaustively enumerated joint state spaces.
pub const STATE_SPACE_LIMIT: u64 = 10_000_000;

/// Which category the signature is read in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpretation {
    /// Kernels are conditional distributions; composition is sum-product.
    Probability,
    /// Kernels are costs normalized to row minimum zero; composition adds,
    /// marginalization minimizes.
    MinPlus,
    /// Kernels are 0/1 tables of functions; composition is function
    /// composition.
    Deterministic,
}

impl std::str::FromStr for Interpretation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prob" => Ok(Self::Probability),
            "minplus" => Ok(Self::MinPlus),
            "det" => Ok(Self::Deterministic),
            other => Err(Error::InvalidQuery(format!(
                "unknown interpretation `{other}` (expected prob|minplus|det)"
            ))),
        }
    }
}

// ── assignments ──────────────────────────────────────────────────────────────

/// Iterates all index tuples over the given cardinalities, first coordinate
/// slowest.
pub(crate) struct Odometer {
    cards: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

pub(crate) fn odometer(cards: &[usize]) -> Odometer {
    Odometer {
        cards: cards.to_vec(),
        current: vec![0; cards.len()],
        done: cards.contains(&0),
    }
}

impl Iterator for Odometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut i = self.cards.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.current[i] += 1;
            if self.current[i] < self.cards[i] {
                break;
            }
            self.current[i] = 0;
        }
        Some(out)
    }
}

fn index_of(cards: &[usize], assign: &[usize]) -> usize {
    let mut idx = 0;
    for (a, c) in assign.iter().zip(cards) {
        idx = idx * c + a;
    }
    idx
}

// ── distributions ────────────────────────────────────────────────────────────

/// A dense table over a joint assignment of named variables. Under the
/// probability interpretation entries are probabilities; under min-plus
/// they are costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    vars: Vec<String>,
    domains: Vec<Vec<String>>,
    values: Vec<f64>,
}

impl Distribution {
    pub fn new(vars: Vec<String>, domains: Vec<Vec<String>>, values: Vec<f64>) -> Result<Self> {
        let states: usize = domains.iter().map(|d| d.len()).product();
        if vars.len() != domains.len() || values.len() != states {
            return Err(Error::Internal("distribution shape mismatch".to_string()));
        }
        Ok(Self {
            vars,
            domains,
            values,
        })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn domains(&self) -> &[Vec<String>] {
        &self.domains
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn cards(&self) -> Vec<usize> {
        self.domains.iter().map(|d| d.len()).collect()
    }

    /// Value at a joint assignment given by variable-name labels.
    pub fn get(&self, assign: &BTreeMap<String, String>) -> Result<f64> {
        let mut idx = Vec::with_capacity(self.vars.len());
        for (var, dom) in self.vars.iter().zip(&self.domains) {
            let label = assign
                .get(var)
                .ok_or_else(|| Error::MissingValue(var.clone()))?;
            let pos = dom.iter().position(|v| v == label).ok_or_else(|| {
                Error::UnknownValue {
                    var: var.clone(),
                    value: label.clone(),
                }
            })?;
            idx.push(pos);
        }
        Ok(self.values[index_of(&self.cards(), &idx)])
    }

    /// Sums (probability) over the variables not listed, reordering to
    /// `keep`.
    pub fn marginal(&self, keep: &[String]) -> Result<Distribution> {
        let positions: Vec<usize> = keep
            .iter()
            .map(|v| {
                self.vars
                    .iter()
                    .position(|x| x == v)
                    .ok_or_else(|| Error::MissingValue(v.clone()))
            })
            .collect::<Result<_>>()?;
        let out_domains: Vec<Vec<String>> =
            positions.iter().map(|&p| self.domains[p].clone()).collect();
        let out_cards: Vec<usize> = out_domains.iter().map(|d| d.len()).collect();
        let mut values = vec![0.0; out_cards.iter().product()];
        let cards = self.cards();
        for full in odometer(&cards) {
            let sub: Vec<usize> = positions.iter().map(|&p| full[p]).collect();
            values[index_of(&out_cards, &sub)] += self.values[index_of(&cards, &full)];
        }
        Distribution::new(keep.to_vec(), out_domains, values)
    }

    /// Checks the normalization invariant of the given interpretation:
    /// probabilities sum to one, min-plus costs reach zero, deterministic
    /// tables are a point mass.
    pub fn validate(&self, interp: Interpretation) -> Result<()> {
        match interp {
            Interpretation::Probability => {
                let sum: f64 = self.values.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::NotNormalized(
                        self.vars.join(","),
                        format!("sums to {sum}"),
                    ));
                }
            }
            Interpretation::MinPlus => {
                let min = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
                if min.abs() > 1e-9 {
                    return Err(Error::NotNormalized(
                        self.vars.join(","),
                        format!("minimum cost is {min}"),
                    ));
                }
            }
            Interpretation::Deterministic => {
                let ones = self.values.iter().filter(|v| (**v - 1.0).abs() < 1e-9).count();
                let zeros = self.values.iter().filter(|v| v.abs() < 1e-9).count();
                if ones != 1 || ones + zeros != self.values.len() {
                    return Err(Error::NotFunctional(format!(
                        "distribution over {} is not a point mass",
                        self.vars.join(",")
                    )));
                }
            }
        }
        Ok(())
    }

    /// The single assignment carrying all mass, for deterministic results.
    pub fn point(&self) -> Result<BTreeMap<String, String>> {
        self.validate(Interpretation::Deterministic)?;
        let pos = self
            .values
            .iter()
            .position(|v| (*v - 1.0).abs() < 1e-9)
            .expect("validated point mass");
        let cards = self.cards();
        let mut remaining = pos;
        let mut idx = vec![0; cards.len()];
        for i in (0..cards.len()).rev() {
            idx[i] = remaining % cards[i];
            remaining /= cards[i];
        }
        Ok(self
            .vars
            .iter()
            .zip(&self.domains)
            .zip(&idx)
            .map(|((v, d), &i)| (v.clone(), d[i].clone()))
            .collect())
    }
}

// ── discrete latent models ───────────────────────────────────────────────────

/// A conditional probability table: rows in row-major order over the listed
/// parents (first parent slowest), each row a distribution over the child.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// A finite-domain causal model witnessing an ADMG: one latent common
/// parent per bidirected edge, explicit CPTs for every variable.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    graph: Admg,
    latents: Vec<String>,
    latent_edges: Vec<(String, String)>,
    domains: BTreeMap<String, Vec<String>>,
    cpts: BTreeMap<String, Cpt>,
}

/// Model-file contents before latent synthesis: the graph plus optional
/// domain and CPT declarations.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub graph: Admg,
    pub domains: BTreeMap<String, Vec<String>>,
    pub cpts: Vec<CptSpec>,
}

#[derive(Debug, Clone)]
pub struct CptSpec {
    pub node: String,
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Parses a model file: the graph text format plus `domain <NODE> = v1,v2,...`
/// and `cpt <NODE> | <PARENTS...> : <row> ; <row> ; ...` lines.
pub fn parse_model(src: &str) -> Result<ModelSpec> {
    let mut nodes = Vec::new();
    let mut dir = Vec::new();
    let mut bid = Vec::new();
    let mut domains = BTreeMap::new();
    let mut cpts = Vec::new();
    for (lineno, raw) in src.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => raw[..i].trim(),
            None => raw.trim(),
        };
        if line.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        if let Some(rest) = line.strip_prefix("domain ") {
            let (node, values) = rest.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: "expected `domain <NODE> = v1,v2,...`".to_string(),
            })?;
            let values: Vec<String> = values
                .split(',')
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            if values.len() < 2 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "domains need at least two values".to_string(),
                });
            }
            let unique: BTreeSet<&String> = values.iter().collect();
            if unique.len() != values.len() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "duplicate domain value".to_string(),
                });
            }
            domains.insert(node.trim().to_string(), values);
        } else if let Some(rest) = line.strip_prefix("cpt ") {
            let (head, rows_s) = rest.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: "expected `cpt <NODE> | <PARENTS...> : rows`".to_string(),
            })?;
            let (node, parents) = match head.split_once('|') {
                Some((n, ps)) => (
                    n.trim().to_string(),
                    ps.split_whitespace().map(|s| s.to_string()).collect(),
                ),
                None => (head.trim().to_string(), Vec::new()),
            };
            let rows: Vec<Vec<f64>> = rows_s
                .split(';')
                .map(|row| {
                    row.split_whitespace()
                        .map(|v| {
                            v.parse::<f64>().map_err(|_| Error::Parse {
                                line: lineno,
                                msg: format!("bad probability `{v}`"),
                            })
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            cpts.push(CptSpec {
                node,
                parents,
                rows,
            });
        } else {
            crate::admg::parse_graph_line(line, lineno, &mut nodes, &mut dir, &mut bid)?;
        }
    }
    let graph = Admg::new(nodes, dir, bid)?;
    for node in domains.keys() {
        if !graph.contains(node) {
            return Err(Error::UnknownNode(node.clone()));
        }
    }
    Ok(ModelSpec {
        graph,
        domains,
        cpts,
    })
}

fn dirichlet_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    // unit-Dirichlet via normalized exponentials; rows are strictly positive
    let mut row: Vec<f64> = (0..k)
        .map(|_| {
            let u: f64 = rng.gen();
            -(1.0 - u).ln()
        })
        .collect();
    let sum: f64 = row.iter().sum();
    for v in &mut row {
        *v /= sum;
    }
    row
}

impl DiscreteModel {
    /// A random witness model for `g`: binary observed domains, one latent
    /// of the given arity per bidirected edge, unit-Dirichlet CPT rows drawn
    /// from a seeded generator.
    pub fn synthesize(g: &Admg, latent_arity: usize, seed: u64) -> Result<Self> {
        Self::from_spec(
            ModelSpec {
                graph: g.clone(),
                domains: BTreeMap::new(),
                cpts: Vec::new(),
            },
            latent_arity,
            seed,
        )
    }

    /// Completes a model spec into a full latent model. Undeclared observed
    /// domains default to binary `0,1`; missing CPTs are synthesized from
    /// the seed. A user CPT conditions on the node's graph parents and is
    /// replicated across the values of any synthesized latent parents.
    pub fn from_spec(spec: ModelSpec, latent_arity: usize, seed: u64) -> Result<Self> {
        if latent_arity < 2 {
            return Err(Error::InvalidQuery(
                "latent arity must be at least 2".to_string(),
            ));
        }
        let graph = spec.graph;
        let mut domains: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for node in graph.nodes() {
            let dom = spec
                .domains
                .get(node)
                .cloned()
                .unwrap_or_else(|| vec!["0".to_string(), "1".to_string()]);
            domains.insert(node.clone(), dom);
        }

        // one latent common parent per bidirected edge
        let mut latents = Vec::new();
        let mut latent_edges = Vec::new();
        let mut incident: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (a, b) in graph.bidirected_edges() {
            let mut name = format!("L_{a}_{b}");
            while graph.contains(&name) || latents.contains(&name) {
                name.push('\'');
            }
            latents.push(name.clone());
            latent_edges.push((a.to_string(), b.to_string()));
            incident.entry(a.to_string()).or_default().push(name.clone());
            incident.entry(b.to_string()).or_default().push(name.clone());
            domains.insert(
                name,
                (0..latent_arity).map(|i| i.to_string()).collect(),
            );
        }

        let mut user: BTreeMap<String, CptSpec> = BTreeMap::new();
        for c in spec.cpts {
            if !graph.contains(&c.node) {
                return Err(Error::UnknownNode(c.node.clone()));
            }
            user.insert(c.node.clone(), c);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cpts = BTreeMap::new();
        for node in graph.nodes() {
            let mut graph_parents: Vec<String> =
                graph.parents(node)?.into_iter().collect();
            graph_parents.sort_by_key(|p| graph.decl_rank(p));
            let latent_parents = incident.get(node).cloned().unwrap_or_default();
            let mut parents = graph_parents.clone();
            parents.extend(latent_parents.iter().cloned());
            let cards: Vec<usize> = parents.iter().map(|p| domains[p].len()).collect();
            let n_rows: usize = cards.iter().product();
            let card = domains[node].len();

            let rows = match user.remove(node) {
                Some(c) => expand_user_cpt(node, &c, &graph_parents, &parents, &domains, card)?,
                None => (0..n_rows).map(|_| dirichlet_row(&mut rng, card)).collect(),
            };
            cpts.insert(
                node.clone(),
                Cpt {
                    parents,
                    rows,
                },
            );
        }
        for latent in &latents {
            let card = domains[latent].len();
            cpts.insert(
                latent.clone(),
                Cpt {
                    parents: Vec::new(),
                    rows: vec![dirichlet_row(&mut rng, card)],
                },
            );
        }

        let model = Self {
            graph,
            latents,
            latent_edges,
            domains,
            cpts,
        };
        model.check_state_space()?;
        Ok(model)
    }

    pub fn graph(&self) -> &Admg {
        &self.graph
    }

    pub fn latents(&self) -> &[String] {
        &self.latents
    }

    /// The bidirected edge each latent witnesses, aligned with
    /// [`Self::latents`].
    pub fn latent_edges(&self) -> &[(String, String)] {
        &self.latent_edges
    }

    pub fn domain(&self, var: &str) -> Result<&Vec<String>> {
        self.domains
            .get(var)
            .ok_or_else(|| Error::MissingDomain(var.to_string()))
    }

    pub fn cpt(&self, var: &str) -> Option<&Cpt> {
        self.cpts.get(var)
    }

    /// Observed nodes then latents, the enumeration order.
    fn all_vars(&self) -> Vec<String> {
        let mut vars: Vec<String> = self.graph.nodes().to_vec();
        vars.extend(self.latents.iter().cloned());
        vars
    }

    fn check_state_space(&self) -> Result<()> {
        let mut states: u64 = 1;
        for var in self.all_vars() {
            states = states.saturating_mul(self.domains[&var].len() as u64);
            if states > STATE_SPACE_LIMIT {
                return Err(Error::StateSpaceTooLarge(states, STATE_SPACE_LIMIT));
            }
        }
        Ok(())
    }

    fn factor(&self, var: &str, values: &BTreeMap<String, usize>) -> f64 {
        let cpt = &self.cpts[var];
        let cards: Vec<usize> = cpt.parents.iter().map(|p| self.domains[p].len()).collect();
        let assign: Vec<usize> = cpt.parents.iter().map(|p| values[p]).collect();
        cpt.rows[index_of(&cards, &assign)][values[var]]
    }
}

fn expand_user_cpt(
    node: &str,
    c: &CptSpec,
    graph_parents: &[String],
    full_parents: &[String],
    domains: &BTreeMap<String, Vec<String>>,
    card: usize,
) -> Result<Vec<Vec<f64>>> {
    let listed: BTreeSet<&String> = c.parents.iter().collect();
    let expected: BTreeSet<&String> = graph_parents.iter().collect();
    if listed != expected {
        return Err(Error::Parse {
            line: 0,
            msg: format!(
                "cpt for `{node}` must condition on its parents {{{}}}",
                graph_parents.join(", ")
            ),
        });
    }
    let listed_cards: Vec<usize> = c.parents.iter().map(|p| domains[p].len()).collect();
    let n_listed: usize = listed_cards.iter().product();
    if c.rows.len() != n_listed {
        return Err(Error::Parse {
            line: 0,
            msg: format!(
                "cpt for `{node}` needs {n_listed} rows, found {}",
                c.rows.len()
            ),
        });
    }
    let mut rows = Vec::new();
    for row in &c.rows {
        if row.len() != card {
            return Err(Error::Parse {
                line: 0,
                msg: format!("cpt row for `{node}` needs {card} entries"),
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || row.iter().any(|v| *v < 0.0) {
            return Err(Error::NotNormalized(
                node.to_string(),
                format!("row sums to {sum}"),
            ));
        }
        rows.push(row.iter().map(|v| v / sum).collect::<Vec<f64>>());
    }
    // replicate across latent parent values
    let full_cards: Vec<usize> = full_parents.iter().map(|p| domains[p].len()).collect();
    let mut out = Vec::with_capacity(full_cards.iter().product());
    for assign in odometer(&full_cards) {
        let listed_assign: Vec<usize> = c
            .parents
            .iter()
            .map(|p| {
                let pos = full_parents.iter().position(|f| f == p).expect("subset");
                assign[pos]
            })
            .collect();
        out.push(rows[index_of(&listed_cards, &listed_assign)].clone());
    }
    Ok(out)
}

// ── enumeration oracle ───────────────────────────────────────────────────────

/// The observational joint over the observed nodes: latents summed out by
/// exhaustive enumeration.
pub fn observational_joint(m: &DiscreteModel) -> Result<Distribution> {
    m.check_state_space()?;
    let observed: Vec<String> = m.graph.nodes().to_vec();
    let obs_domains: Vec<Vec<String>> = observed.iter().map(|v| m.domains[v].clone()).collect();
    let obs_cards: Vec<usize> = obs_domains.iter().map(|d| d.len()).collect();
    let mut values = vec![0.0; obs_cards.iter().product()];

    let all = m.all_vars();
    let cards: Vec<usize> = all.iter().map(|v| m.domains[v].len()).collect();
    for assign in odometer(&cards) {
        let values_map: BTreeMap<String, usize> =
            all.iter().cloned().zip(assign.iter().copied()).collect();
        let mut p = 1.0;
        for var in &all {
            p *= m.factor(var, &values_map);
        }
        let obs_assign: Vec<usize> = (0..observed.len()).map(|i| assign[i]).collect();
        values[index_of(&obs_cards, &obs_assign)] += p;
    }
    Distribution::new(observed, obs_domains, values)
}

/// Ground-truth interventional distribution by truncated factorization:
/// the intervened nodes' factors are dropped, their values clamped, the
/// rest enumerated and marginalized onto the effects.
pub fn oracle_interventional(
    m: &DiscreteModel,
    query: &CausalQuery,
    a_values: &BTreeMap<String, String>,
) -> Result<Distribution> {
    m.check_state_space()?;
    query.validate_against(&m.graph)?;
    let mut clamp: BTreeMap<String, usize> = BTreeMap::new();
    for cause in &query.causes {
        let label = a_values
            .get(cause)
            .ok_or_else(|| Error::MissingValue(cause.clone()))?;
        let dom = m.domain(cause)?;
        let pos = dom.iter().position(|v| v == label).ok_or_else(|| {
            Error::UnknownValue {
                var: cause.clone(),
                value: label.clone(),
            }
        })?;
        clamp.insert(cause.clone(), pos);
    }

    let effects: Vec<String> = m
        .graph
        .nodes()
        .iter()
        .filter(|n| query.effects.contains(*n))
        .cloned()
        .collect();
    let eff_domains: Vec<Vec<String>> = effects.iter().map(|v| m.domains[v].clone()).collect();
    let eff_cards: Vec<usize> = eff_domains.iter().map(|d| d.len()).collect();
    let mut values = vec![0.0; eff_cards.iter().product()];

    let free: Vec<String> = m
        .all_vars()
        .into_iter()
        .filter(|v| !clamp.contains_key(v))
        .collect();
    let cards: Vec<usize> = free.iter().map(|v| m.domains[v].len()).collect();
    for assign in odometer(&cards) {
        let mut values_map = clamp.clone();
        for (var, &val) in free.iter().zip(&assign) {
            values_map.insert(var.clone(), val);
        }
        let mut p = 1.0;
        for var in &free {
            // intervened factors are exactly the dropped ones
            p *= m.factor(var, &values_map);
        }
        let eff_assign: Vec<usize> = effects.iter().map(|v| values_map[v]).collect();
        values[index_of(&eff_cards, &eff_assign)] += p;
    }
    Distribution::new(effects, eff_domains, values)
}

// ── module tables ────────────────────────────────────────────────────────────

/// The kernel of one signature morphism under an interpretation: one row
/// per input assignment (row-major over `inputs`).
#[derive(Debug, Clone)]
pub struct ModuleTable {
    pub morphism: String,
    /// Input wire objects with their resolved model variables.
    pub inputs: Vec<(String, String)>,
    pub input_domains: Vec<Vec<String>>,
    pub output_object: String,
    pub output_var: String,
    pub output_domain: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Rows whose conditioning event had no observational mass; filled with
    /// the uniform distribution.
    pub flagged: BTreeSet<usize>,
}

impl ModuleTable {
    fn input_cards(&self) -> Vec<usize> {
        self.input_domains.iter().map(|d| d.len()).collect()
    }
}

/// Strips primes until the name denotes a variable of the joint.
fn resolve_base(object: &str, vars: &[String]) -> Result<String> {
    let mut name = object.to_string();
    loop {
        if vars.iter().any(|v| v == &name) {
            return Ok(name);
        }
        if name.ends_with('\'') {
            name.pop();
        } else {
            return Err(Error::UnresolvableObject(object.to_string()));
        }
    }
}

/// Derives one kernel per module of `sig` from the observational joint:
/// the conditional of the module's variable given its domain variables.
/// Primed copies share the unprimed variable's domain and conditional.
///
/// Under min-plus the conditionals are tropicalized (`-ln`, shifted to row
/// minimum zero); under the deterministic interpretation every unflagged
/// row must already be 0/1.
pub fn module_tables(
    joint: &Distribution,
    sig: &MonoidalSignature,
    interp: Interpretation,
) -> Result<Vec<ModuleTable>> {
    let mut tables = Vec::new();
    for m in sig.morphisms() {
        let object = m
            .object
            .clone()
            .ok_or_else(|| Error::NoModule(m.name.clone()))?;
        let output_var = resolve_base(&object, joint.vars())?;
        let mut inputs = Vec::new();
        for (obj, k) in m.dom.iter() {
            if k != 1 {
                return Err(Error::Internal(format!(
                    "domain of `{}` uses `{obj}` {k} times; kernels need single wires",
                    m.name
                )));
            }
            inputs.push((obj.clone(), resolve_base(obj, joint.vars())?));
        }
        inputs.sort_by_key(|(obj, _)| sig.decl_rank(obj));

        // marginal over the distinct variables involved
        let mut distinct: Vec<String> = Vec::new();
        for (_, var) in &inputs {
            if !distinct.contains(var) {
                distinct.push(var.clone());
            }
        }
        let out_in_inputs = distinct.contains(&output_var);
        if !out_in_inputs {
            distinct.push(output_var.clone());
        }
        let marg = joint.marginal(&distinct)?;

        let input_domains: Vec<Vec<String>> = inputs
            .iter()
            .map(|(_, var)| {
                let pos = joint.vars().iter().position(|v| v == var).expect("resolved");
                joint.domains()[pos].clone()
            })
            .collect();
        let output_domain: Vec<String> = {
            let pos = joint
                .vars()
                .iter()
                .position(|v| v == &output_var)
                .expect("resolved");
            joint.domains()[pos].clone()
        };

        let input_cards: Vec<usize> = input_domains.iter().map(|d| d.len()).collect();
        let card = output_domain.len();
        let mut rows = Vec::new();
        let mut flagged = BTreeSet::new();
        for (row_idx, assign) in odometer(&input_cards).enumerate() {
            // project the input assignment onto distinct variables; clashes
            // between inputs sharing a variable have zero mass
            let mut var_vals: BTreeMap<&str, usize> = BTreeMap::new();
            let mut consistent = true;
            for ((_, var), &val) in inputs.iter().zip(&assign) {
                match var_vals.get(var.as_str()) {
                    Some(&prev) if prev != val => consistent = false,
                    _ => {
                        var_vals.insert(var, val);
                    }
                }
            }
            let mut row = vec![0.0; card];
            let mut mass = 0.0;
            if consistent {
                for out_val in 0..card {
                    let ok = match var_vals.get(output_var.as_str()) {
                        Some(&v) => v == out_val, // copy kernels are diagonal
                        None => true,
                    };
                    if !ok {
                        continue;
                    }
                    let mut full: BTreeMap<String, String> = var_vals
                        .iter()
                        .map(|(var, &val)| {
                            let pos = joint.vars().iter().position(|v| v == var).unwrap();
                            ((*var).to_string(), joint.domains()[pos][val].clone())
                        })
                        .collect();
                    full.insert(output_var.clone(), output_domain[out_val].clone());
                    row[out_val] = marg.get(&full)?;
                    mass += row[out_val];
                }
            }
            if mass <= 0.0 {
                flagged.insert(row_idx);
                row = vec![1.0 / card as f64; card];
            } else {
                for v in &mut row {
                    *v /= mass;
                }
            }
            rows.push(row);
        }

        let rows = match interp {
            Interpretation::Probability => rows,
            Interpretation::MinPlus => rows
                .into_iter()
                .map(|row| {
                    let costs: Vec<f64> = row.iter().map(|p| -p.ln()).collect();
                    let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
                    costs.iter().map(|c| c - min).collect()
                })
                .collect(),
            Interpretation::Deterministic => {
                for (i, row) in rows.iter().enumerate() {
                    if flagged.contains(&i) {
                        continue;
                    }
                    let functional = row
                        .iter()
                        .all(|v| v.abs() < 1e-9 || (v - 1.0).abs() < 1e-9);
                    if !functional {
                        return Err(Error::NotFunctional(format!(
                            "row {i} of `{}` is {row:?}",
                            m.name
                        )));
                    }
                }
                rows
            }
        };

        tables.push(ModuleTable {
            morphism: m.name.clone(),
            inputs,
            input_domains,
            output_object: object,
            output_var,
            output_domain,
            rows,
            flagged,
        });
    }
    Ok(tables)
}

// ── evaluation ───────────────────────────────────────────────────────────────

/// Evaluates a signature against module kernels at a context assignment.
///
/// Free input objects (consumed but produced by no module) must all be
/// assigned in `a_values`. Internal wires are summed out (probability),
/// minimized out (min-plus) or threaded through (deterministic); the result
/// ranges over the surplus output objects.
pub fn evaluate(
    sig: &MonoidalSignature,
    tables: &[ModuleTable],
    a_values: &BTreeMap<String, String>,
    interp: Interpretation,
) -> Result<Distribution> {
    let by_name: BTreeMap<&str, &ModuleTable> =
        tables.iter().map(|t| (t.morphism.as_str(), t)).collect();
    for m in sig.morphisms() {
        if !by_name.contains_key(m.name.as_str()) {
            return Err(Error::MissingTable(m.name.clone()));
        }
    }

    let threading = thread(sig);
    // resolve free inputs to value indices
    let mut context: BTreeMap<String, usize> = BTreeMap::new();
    for obj in threading.externals.objects() {
        let label = a_values
            .get(obj)
            .ok_or_else(|| Error::MissingValue(obj.clone()))?;
        let dom = tables
            .iter()
            .find_map(|t| {
                t.inputs
                    .iter()
                    .position(|(o, _)| o == obj)
                    .map(|i| &t.input_domains[i])
            })
            .ok_or_else(|| Error::UnresolvableObject(obj.clone()))?;
        let pos = dom.iter().position(|v| v == label).ok_or_else(|| {
            Error::UnknownValue {
                var: obj.clone(),
                value: label.clone(),
            }
        })?;
        context.insert(obj.clone(), pos);
    }

    // one value per module object, enumerated exhaustively
    let mut wire_objects: Vec<String> = Vec::new();
    let mut wire_tables: Vec<&ModuleTable> = Vec::new();
    for m in sig.morphisms() {
        let t = by_name[m.name.as_str()];
        wire_objects.push(t.output_object.clone());
        wire_tables.push(t);
    }

    let mut outputs: Vec<String> = threading.surplus.objects().cloned().collect();
    outputs.sort_by_key(|o| sig.decl_rank(o));
    let out_tables: Vec<&ModuleTable> = outputs
        .iter()
        .map(|o| {
            wire_objects
                .iter()
                .position(|w| w == o)
                .map(|i| wire_tables[i])
                .ok_or_else(|| Error::Internal(format!("output `{o}` has no producing module")))
        })
        .collect::<Result<_>>()?;
    let out_vars: Vec<String> = out_tables.iter().map(|t| t.output_var.clone()).collect();
    let out_domains: Vec<Vec<String>> =
        out_tables.iter().map(|t| t.output_domain.clone()).collect();
    let out_cards: Vec<usize> = out_domains.iter().map(|d| d.len()).collect();
    {
        let unique: BTreeSet<&String> = out_vars.iter().collect();
        if unique.len() != out_vars.len() {
            return Err(Error::Internal(
                "two output objects share a model variable".to_string(),
            ));
        }
    }

    let init = match interp {
        Interpretation::MinPlus => f64::INFINITY,
        _ => 0.0,
    };
    let mut values = vec![init; out_cards.iter().product()];

    let cards: Vec<usize> = wire_tables
        .iter()
        .map(|t| t.output_domain.len())
        .collect();
    for assign in odometer(&cards) {
        let lookup = |obj: &str| -> usize {
            match wire_objects.iter().position(|w| w == obj) {
                Some(i) => assign[i],
                None => context[obj],
            }
        };
        let mut weight: f64 = match interp {
            Interpretation::MinPlus => 0.0,
            _ => 1.0,
        };
        for (i, t) in wire_tables.iter().enumerate() {
            let in_assign: Vec<usize> = t.inputs.iter().map(|(obj, _)| lookup(obj)).collect();
            let row = index_of(&t.input_cards(), &in_assign);
            let k = t.rows[row][assign[i]];
            match interp {
                Interpretation::MinPlus => weight += k,
                _ => weight *= k,
            }
        }
        let out_assign: Vec<usize> = outputs.iter().map(|o| lookup(o)).collect();
        let slot = &mut values[index_of(&out_cards, &out_assign)];
        match interp {
            Interpretation::MinPlus => *slot = slot.min(weight),
            _ => *slot += weight,
        }
    }

    let dist = Distribution::new(out_vars, out_domains, values)?;
    if interp == Interpretation::Deterministic {
        dist.validate(Interpretation::Deterministic)?;
    }
    Ok(dist)
}

// ── end-to-end verification ──────────────────────────────────────────────────

/// Outcome of comparing an identified signature against the enumeration
/// oracle over randomized models.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub trials: usize,
    pub assignments_checked: usize,
    pub max_deviation: f64,
    pub flagged_rows: usize,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.max_deviation < 1e-9
    }
}

/// For each trial: synthesize a binary witness model, derive module tables
/// from its observational joint, evaluate the identified signature for
/// every cause assignment and compare against truncated-factorization
/// enumeration.
pub fn check_identification(
    g: &Admg,
    query: &CausalQuery,
    trials: usize,
    seed: u64,
) -> Result<CheckReport> {
    let result = crate::identify::identify(g, query)?;
    let id = result.identification().ok_or_else(|| {
        Error::InvalidQuery("query is not identifiable; nothing to check".to_string())
    })?;
    let exposed = id.exposed()?;
    check_identification_of(g, query, &exposed, trials, seed)
}

/// The verification loop against an already-exposed signature.
pub fn check_identification_of(
    g: &Admg,
    query: &CausalQuery,
    exposed: &MonoidalSignature,
    trials: usize,
    seed: u64,
) -> Result<CheckReport> {
    let threading = thread(exposed);
    let mut max_deviation: f64 = 0.0;
    let mut flagged_rows = 0;
    let mut assignments_checked = 0;

    for trial in 0..trials {
        let model = DiscreteModel::synthesize(g, 2, seed.wrapping_add(trial as u64))?;
        let joint = observational_joint(&model)?;
        let tables = module_tables(&joint, exposed, Interpretation::Probability)?;
        flagged_rows += tables.iter().map(|t| t.flagged.len()).sum::<usize>();

        let causes: Vec<String> = g
            .nodes()
            .iter()
            .filter(|n| query.causes.contains(*n))
            .cloned()
            .collect();
        let cause_cards: Vec<usize> = causes
            .iter()
            .map(|c| model.domain(c).map(|d| d.len()))
            .collect::<Result<_>>()?;
        for assign in odometer(&cause_cards) {
            let mut a_values: BTreeMap<String, String> = causes
                .iter()
                .zip(&assign)
                .map(|(c, &i)| (c.clone(), model.domain(c).unwrap()[i].clone()))
                .collect();
            // contexts the signature carries but the query does not pin are
            // provably irrelevant; any value works
            for obj in threading.externals.objects() {
                if !a_values.contains_key(obj) {
                    let base = resolve_base(obj, joint.vars())?;
                    a_values.insert(obj.clone(), model.domain(&base)?[0].clone());
                }
            }
            let oracle_a: BTreeMap<String, String> = causes
                .iter()
                .map(|c| (c.clone(), a_values[c].clone()))
                .collect();

            let evaluated = evaluate(exposed, &tables, &a_values, Interpretation::Probability)?;
            evaluated.validate(Interpretation::Probability)?;
            let truth = oracle_interventional(&model, query, &oracle_a)?;

            let eff_cards: Vec<usize> = truth.domains().iter().map(|d| d.len()).collect();
            for eff_assign in odometer(&eff_cards) {
                let labels: BTreeMap<String, String> = truth
                    .vars()
                    .iter()
                    .zip(&eff_assign)
                    .map(|(v, &i)| {
                        let pos = truth.vars().iter().position(|x| x == v).unwrap();
                        (v.clone(), truth.domains()[pos][i].clone())
                    })
                    .collect();
                let dev = (truth.get(&labels)? - evaluated.get(&labels)?).abs();
                max_deviation = max_deviation.max(dev);
            }
            assignments_checked += 1;
        }
    }

    Ok(CheckReport {
        trials,
        assignments_checked,
        max_deviation,
        flagged_rows,
    })
}
