//! Sparsest-cut instances: capacity graph, demand graph, cut evaluation,
//! seeded corpus generation and the canonical JSON form.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::rng::seeded;
use crate::treedec::TreeDecomposition;

pub type VertexId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub u: VertexId,
    pub v: VertexId,
    #[serde(with = "rational::decimal_serde")]
    pub w: Rational,
}

impl WeightedEdge {
    pub fn new(u: VertexId, v: VertexId, w: Rational) -> Self {
        Self { u, v, w }
    }

    pub fn unit(u: VertexId, v: VertexId) -> Self {
        Self::new(u, v, rational::int(1))
    }

    fn key(&self) -> (VertexId, VertexId) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

/// Undirected graph with positive edge weights on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<WeightedEdge>,
}

fn check_edges(n: usize, edges: &[WeightedEdge], what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for e in edges {
        if e.u >= n || e.v >= n {
            return Err(Error::InvalidInstance(format!(
                "{what} edge ({}, {}) references a vertex outside 0..{n}",
                e.u, e.v
            )));
        }
        if e.u == e.v {
            return Err(Error::InvalidInstance(format!("{what} self-loop at vertex {}", e.u)));
        }
        if !e.w.is_positive() {
            return Err(Error::InvalidInstance(format!("{what} edge ({}, {}) has non-positive weight", e.u, e.v)));
        }
        if !seen.insert(e.key()) {
            return Err(Error::InvalidInstance(format!("duplicate {what} edge ({}, {})", e.u, e.v)));
        }
    }
    Ok(())
}

impl Graph {
    pub fn new(n: usize, edges: Vec<WeightedEdge>) -> Result<Self> {
        check_edges(n, &edges, "capacity")?;
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    pub fn adjacency(&self) -> Vec<Vec<VertexId>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        let key = (u.min(v), u.max(v));
        self.edges.iter().any(|e| e.key() == key)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// A capacity graph together with a non-empty demand graph on the same vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutInstance {
    graph: Graph,
    demands: Vec<WeightedEdge>,
}

impl CutInstance {
    pub fn new(n: usize, cap_edges: Vec<WeightedEdge>, dem_edges: Vec<WeightedEdge>) -> Result<Self> {
        let graph = Graph::new(n, cap_edges)?;
        Self::with_demands(graph, dem_edges)
    }

    pub fn with_demands(graph: Graph, dem_edges: Vec<WeightedEdge>) -> Result<Self> {
        check_edges(graph.n, &dem_edges, "demand")?;
        if dem_edges.is_empty() {
            return Err(Error::InvalidInstance("demand edge list is empty".into()));
        }
        Ok(Self { graph, demands: dem_edges })
    }

    pub fn n(&self) -> usize {
        self.graph.n
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn cap_edges(&self) -> &[WeightedEdge] {
        &self.graph.edges
    }

    pub fn dem_edges(&self) -> &[WeightedEdge] {
        &self.demands
    }

    /// Multiplies capacities by `cap_factor` and demands by `dem_factor`.
    pub fn scaled(&self, cap_factor: &Rational, dem_factor: &Rational) -> Result<Self> {
        let scale = |edges: &[WeightedEdge], c: &Rational| {
            edges.iter().map(|e| WeightedEdge::new(e.u, e.v, &e.w * c)).collect::<Vec<_>>()
        };
        Self::new(self.n(), scale(self.cap_edges(), cap_factor), scale(&self.demands, dem_factor))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: InstanceJson = serde_json::from_str(text)?;
        Self::new(raw.n, raw.cap_edges, raw.dem_edges)
    }

    /// Canonical JSON: keys `n`, `cap_edges`, `dem_edges` in that order, weights as decimal strings.
    pub fn to_json(&self) -> String {
        let raw = InstanceJsonRef { n: self.n(), cap_edges: self.cap_edges(), dem_edges: &self.demands };
        serde_json::to_string(&raw).expect("instance serialization is infallible")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceJson {
    n: usize,
    cap_edges: Vec<WeightedEdge>,
    dem_edges: Vec<WeightedEdge>,
}

#[derive(Serialize)]
struct InstanceJsonRef<'a> {
    n: usize,
    cap_edges: &'a [WeightedEdge],
    dem_edges: &'a [WeightedEdge],
}

/// A total map from a vertex set `X` to `{0,1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    domain: Vec<VertexId>,
    values: Vec<bool>,
}

impl Assignment {
    /// Builds an assignment from `(vertex, label)` pairs; the domain is exactly the listed vertices.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (VertexId, bool)>) -> Result<Self> {
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        pairs.sort_unstable_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParams("assignment lists a vertex twice".into()));
        }
        let (domain, values) = pairs.into_iter().unzip();
        Ok(Self { domain, values })
    }

    /// Assignment over `0..values.len()`.
    pub fn over_vertices(values: Vec<bool>) -> Self {
        Self { domain: (0..values.len()).collect(), values }
    }

    /// Decodes bit `i` of `mask` as the label of `domain[i]`; `domain` must be sorted.
    pub fn from_mask(domain: &[VertexId], mask: u64) -> Self {
        debug_assert!(domain.windows(2).all(|w| w[0] < w[1]));
        Self { domain: domain.to_vec(), values: (0..domain.len()).map(|i| mask >> i & 1 == 1).collect() }
    }

    pub fn domain(&self) -> &[VertexId] {
        &self.domain
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, v: VertexId) -> Option<bool> {
        self.domain.binary_search(&v).ok().map(|i| self.values[i])
    }

    pub fn mirror(&self) -> Self {
        Self { domain: self.domain.clone(), values: self.values.iter().map(|b| !b).collect() }
    }

    pub fn restrict(&self, sub: &[VertexId]) -> Option<Self> {
        let pairs: Option<Vec<_>> = sub.iter().map(|&v| self.get(v).map(|b| (v, b))).collect();
        Self::from_pairs(pairs?).ok()
    }

    /// Labels as 0/1 integers in domain order.
    pub fn bits(&self) -> Vec<u8> {
        self.values.iter().map(|&b| b as u8).collect()
    }

    fn covers_all(&self, n: usize) -> bool {
        self.domain.len() == n && self.domain.iter().enumerate().all(|(i, &v)| i == v)
    }
}

/// Capacity and demand crossing the cut described by a V-assignment.
pub fn cut_totals(inst: &CutInstance, f: &Assignment) -> Result<(Rational, Rational)> {
    if !f.covers_all(inst.n()) {
        return Err(Error::InvalidParams("assignment is not total on the vertex set".into()));
    }
    let crossing = |edges: &[WeightedEdge]| {
        edges.iter().filter(|e| f.values[e.u] != f.values[e.v]).fold(Rational::zero(), |acc, e| acc + &e.w)
    };
    Ok((crossing(inst.cap_edges()), crossing(inst.dem_edges())))
}

/// Cut capacity divided by separated demand.
pub fn sparsity(inst: &CutInstance, f: &Assignment) -> Result<Rational> {
    let (cap, dem) = cut_totals(inst, f)?;
    if dem.is_zero() {
        return Err(Error::NoDemandSeparated);
    }
    Ok(cap / dem)
}

pub fn mirror(f: &Assignment) -> Assignment {
    f.mirror()
}

/// Random connected subgraph of a random k-tree with unit capacities, plus a
/// witnessing decomposition of width at most `k`.
///
/// The first `k+1` vertices (after a seeded relabelling) form the base clique;
/// every later vertex is attached to a random k-subset of an existing bag.
/// Each edge survives with probability `keep_prob`, except one edge per new
/// vertex and a spanning path of the base clique, which keep the graph connected.
pub fn generate_partial_ktree(n: usize, k: usize, keep_prob: f64, seed: u64) -> Result<(Graph, TreeDecomposition)> {
    if n < k + 1 {
        return Err(Error::InvalidParams(format!("need n >= k+1, got n={n}, k={k}")));
    }
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(Error::InvalidParams(format!("keep_prob must lie in (0,1], got {keep_prob}")));
    }
    let mut rng = seeded(seed);
    let mut label: Vec<VertexId> = (0..n).collect();
    label.shuffle(&mut rng);

    let mut bags: Vec<Vec<VertexId>> = vec![label[..=k].to_vec()];
    let mut tree_edges = Vec::new();
    let mut edges: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
    let mut forced: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
    let key = |a: VertexId, b: VertexId| (a.min(b), a.max(b));

    for i in 0..=k {
        for j in i + 1..=k {
            edges.insert(key(label[i], label[j]));
        }
        if i > 0 {
            forced.insert(key(label[i - 1], label[i]));
        }
    }
    for &v in &label[k + 1..] {
        let host = rng.random_range(0..bags.len());
        let mut clique = bags[host].clone();
        if k > 0 {
            let drop = rng.random_range(0..clique.len());
            clique.remove(drop);
        } else {
            clique.clear();
        }
        for &u in &clique {
            edges.insert(key(u, v));
        }
        if let Some(&anchor) = clique.choose(&mut rng) {
            forced.insert(key(anchor, v));
        }
        clique.push(v);
        tree_edges.push((host, bags.len()));
        bags.push(clique);
    }

    let mut kept = Vec::new();
    for &(u, v) in &edges {
        if forced.contains(&(u, v)) || keep_prob >= 1.0 || rng.random_bool(keep_prob) {
            kept.push(WeightedEdge::unit(u, v));
        }
    }
    let graph = Graph::new(n, kept)?;
    let dec = TreeDecomposition::new(bags, tree_edges, 0)?;
    Ok((graph, dec))
}

/// Attaches `m_d` distinct uniformly random unit-demand pairs.
pub fn attach_random_demands(graph: &Graph, m_d: usize, seed: u64) -> Result<CutInstance> {
    let n = graph.n();
    let available = n * n.saturating_sub(1) / 2;
    if m_d == 0 {
        return Err(Error::InvalidParams("at least one demand pair is required".into()));
    }
    if m_d > available {
        return Err(Error::TooManyDemands { requested: m_d, available });
    }
    let mut pairs: Vec<(VertexId, VertexId)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let mut rng = seeded(seed);
    let (chosen, _) = pairs.partial_shuffle(&mut rng, m_d);
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    let dems = chosen.into_iter().map(|(u, v)| WeightedEdge::unit(u, v)).collect();
    CutInstance::with_demands(graph.clone(), dems)
}

/// Attaches `m_d` distinct random unit demands whose endpoints share a bag of `dec`.
pub fn attach_bag_local_demands(graph: &Graph, dec: &TreeDecomposition, m_d: usize, seed: u64) -> Result<CutInstance> {
    let mut pairs: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
    for bag in dec.bags() {
        for (i, &u) in bag.iter().enumerate() {
            for &v in &bag[i + 1..] {
                pairs.insert((u.min(v), u.max(v)));
            }
        }
    }
    let mut pairs: Vec<_> = pairs.into_iter().collect();
    if m_d == 0 {
        return Err(Error::InvalidParams("at least one demand pair is required".into()));
    }
    if m_d > pairs.len() {
        return Err(Error::TooManyDemands { requested: m_d, available: pairs.len() });
    }
    let mut rng = seeded(seed);
    let (chosen, _) = pairs.partial_shuffle(&mut rng, m_d);
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    let dems = chosen.into_iter().map(|(u, v)| WeightedEdge::unit(u, v)).collect();
    CutInstance::with_demands(graph.clone(), dems)
}
