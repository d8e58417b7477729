//! Redundant bags, path simplification, and combinatorial length/diameter.
//!
//! An interior node `v` of a bag path with neighbours `a`, `b` is redundant
//! when `B_v ∩ B_b ⊆ B_a` or `B_v ∩ B_a ⊆ B_b`. Bypassing it joins `a` and `b`
//! directly. The combinatorial length of a path is the minimum edge count
//! reachable by bypassing; the diameter is the maximum over node pairs.

use std::collections::HashSet;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::VertexId;
use crate::treedec::{is_subset, tree_path, NodeId, TreeDecomposition};

pub const DEFAULT_EXACT_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecPath {
    nodes: Vec<NodeId>,
    bags: Vec<Vec<VertexId>>,
}

impl DecPath {
    /// Bag path along `nodes`; bags are taken from `t`.
    pub fn from_nodes(t: &TreeDecomposition, nodes: Vec<NodeId>) -> Self {
        let bags = nodes.iter().map(|&i| t.bag(i).to_vec()).collect();
        Self { nodes, bags }
    }

    /// The tree path between two decomposition nodes.
    pub fn between(t: &TreeDecomposition, from: NodeId, to: NodeId) -> Self {
        Self::from_nodes(t, tree_path(t, from, to))
    }

    /// A path given directly by labelled bags (node ids are labels only).
    pub fn from_bags(nodes: Vec<NodeId>, bags: Vec<Vec<VertexId>>) -> Self {
        assert_eq!(nodes.len(), bags.len());
        let bags = bags
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        Self { nodes, bags }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn bags(&self) -> &[Vec<VertexId>] {
        &self.bags
    }

    /// Edge count; an empty or single-node path has length 0.
    pub fn len(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn start(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn end(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    fn bypass(&mut self, idx: usize) -> NodeId {
        self.bags.remove(idx);
        self.nodes.remove(idx)
    }

    fn subpath(&self, keep: &[bool]) -> DecPath {
        let mut out = DecPath { nodes: Vec::new(), bags: Vec::new() };
        for (i, &k) in keep.iter().enumerate() {
            if k {
                out.nodes.push(self.nodes[i]);
                out.bags.push(self.bags[i].clone());
            }
        }
        out
    }

    /// Position of node `id` on the path.
    pub fn position(&self, id: NodeId) -> Option<usize> {
        self.nodes.iter().position(|&x| x == id)
    }
}

fn redundant_at(bags: &[Vec<VertexId>], prev: usize, idx: usize, next: usize) -> bool {
    let v = &bags[idx];
    let (a, b) = (&bags[prev], &bags[next]);
    let covered = |other: &[VertexId], host: &[VertexId]| {
        v.iter().filter(|x| other.binary_search(x).is_ok()).all(|x| host.binary_search(x).is_ok())
    };
    covered(b, a) || covered(a, b)
}

/// Whether the interior node at `idx` can be bypassed.
pub fn is_redundant(path: &DecPath, idx: usize) -> Result<bool> {
    if idx == 0 || idx + 1 >= path.nodes.len() {
        return Err(Error::IndexOutOfRange { index: idx, len: path.len() });
    }
    Ok(redundant_at(&path.bags, idx - 1, idx, idx + 1))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplificationTrace {
    pub initial: DecPath,
    /// Bypassed node ids in application order.
    pub bypassed: Vec<NodeId>,
    pub final_path: DecPath,
}

impl SimplificationTrace {
    pub fn new(initial: DecPath) -> Self {
        Self { final_path: initial.clone(), initial, bypassed: Vec::new() }
    }

    /// Bypasses node `id` if it is interior and currently redundant.
    pub fn try_bypass(&mut self, id: NodeId) -> bool {
        match self.final_path.position(id) {
            Some(idx) if is_redundant(&self.final_path, idx).unwrap_or(false) => {
                self.final_path.bypass(idx);
                self.bypassed.push(id);
                true
            }
            _ => false,
        }
    }

    /// Replays the recorded bypasses on `initial`, checking each one is legal.
    pub fn verify(&self) -> bool {
        let mut replay = SimplificationTrace::new(self.initial.clone());
        self.bypassed.iter().all(|&id| replay.try_bypass(id)) && replay.final_path == self.final_path
    }
}

/// Repeatedly bypasses the lowest-index redundant interior node.
pub fn simplify_greedy(path: &DecPath) -> SimplificationTrace {
    let mut trace = SimplificationTrace::new(path.clone());
    loop {
        let p = &trace.final_path;
        let hit = (1..p.nodes.len().saturating_sub(1)).find(|&i| redundant_at(&p.bags, i - 1, i, i + 1));
        match hit {
            Some(i) => {
                let id = trace.final_path.bypass(i);
                trace.bypassed.push(id);
            }
            None => return trace,
        }
    }
}

/// Minimum length over every bypass sequence, by breadth-first search over
/// surviving-node subsets. Fails once more than `budget` states are visited.
pub fn combinatorial_length_exact(path: &DecPath, budget: usize) -> Result<usize> {
    Ok(exact_search(path, budget)?.len())
}

/// A shortest simplification found by exhaustive search.
pub fn simplify_exact(path: &DecPath, budget: usize) -> Result<DecPath> {
    exact_search(path, budget)
}

fn exact_search(path: &DecPath, budget: usize) -> Result<DecPath> {
    let count = path.nodes.len();
    if count <= 2 {
        return Ok(path.clone());
    }
    let start = vec![true; count];
    let mut best = start.clone();
    let mut best_len = count;
    let mut seen: HashSet<Vec<bool>> = HashSet::from([start.clone()]);
    let mut frontier = vec![start];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for state in frontier {
            let alive: Vec<usize> = (0..count).filter(|&i| state[i]).collect();
            if alive.len() < best_len {
                best_len = alive.len();
                best = state.clone();
                if best_len == 2 {
                    return Ok(path.subpath(&best));
                }
            }
            for w in 1..alive.len() - 1 {
                if redundant_at(&path.bags, alive[w - 1], alive[w], alive[w + 1]) {
                    let mut child = state.clone();
                    child[alive[w]] = false;
                    if seen.insert(child.clone()) {
                        if seen.len() > budget {
                            return Err(Error::Exceeded { budget });
                        }
                        next.push(child);
                    }
                }
            }
        }
        frontier = next;
    }
    Ok(path.subpath(&best))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Greedy,
    Exact,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::Exact => "exact",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Method::Greedy),
            "exact" => Ok(Method::Exact),
            other => Err(Error::InvalidParams(format!("unknown method {other:?}"))),
        }
    }
}

/// Combinatorial length of `path` by the chosen method.
pub fn path_length(path: &DecPath, method: Method, budget: usize) -> Result<usize> {
    match method {
        Method::Greedy => Ok(simplify_greedy(path).final_path.len()),
        Method::Exact => combinatorial_length_exact(path, budget),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Diameter {
    pub diameter: usize,
    pub witness: (NodeId, NodeId),
}

/// Maximum combinatorial length over all node pairs; the witness is the
/// lexicographically smallest attaining pair.
pub fn combinatorial_diameter(t: &TreeDecomposition, method: Method, budget: usize) -> Result<Diameter> {
    let count = t.num_nodes();
    let pairs: Vec<(NodeId, NodeId)> = (0..count).flat_map(|u| (u + 1..count).map(move |v| (u, v))).collect();
    let lengths: Vec<Result<(usize, (NodeId, NodeId))>> = pairs
        .par_iter()
        .map(|&(u, v)| path_length(&DecPath::between(t, u, v), method, budget).map(|l| (l, (u, v))))
        .collect();
    let mut best = Diameter { diameter: 0, witness: (0, 0) };
    for item in lengths {
        let (len, pair) = item?;
        if len > best.diameter {
            best = Diameter { diameter: len, witness: pair };
        }
    }
    Ok(best)
}

/// Checks that bypassing `path[idx]` only drops vertices that occur nowhere
/// else on the path beyond the covering neighbour.
pub fn bypass_is_local(path: &DecPath, idx: usize) -> bool {
    let v = &path.bags[idx];
    let (a, b) = (&path.bags[idx - 1], &path.bags[idx + 1]);
    let side_ok = |host: &[VertexId], far: std::ops::Range<usize>| {
        v.iter()
            .filter(|x| host.binary_search(x).is_err())
            .all(|x| far.clone().all(|j| path.bags[j].binary_search(x).is_err()))
    };
    let n = path.bags.len();
    (is_subset(&intersection(v, b), a) && side_ok(a, idx + 1..n))
        || (is_subset(&intersection(v, a), b) && side_ok(b, 0..idx))
}

fn intersection(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Bags {ab},{abc},{acd},{ade},{aef},{afg},{a} with a..g = 0..6.
    pub fn fan_bags() -> Vec<Vec<VertexId>> {
        vec![vec![0, 1], vec![0, 1, 2], vec![0, 2, 3], vec![0, 3, 4], vec![0, 4, 5], vec![0, 5, 6], vec![0]]
    }

    pub fn fan_path() -> DecPath {
        DecPath::from_bags((0..7).collect(), fan_bags())
    }

    pub fn fan_subpath() -> DecPath {
        let mut bags = fan_bags();
        bags.pop();
        DecPath::from_bags((0..6).collect(), bags)
    }

    pub fn fan_decomposition() -> TreeDecomposition {
        TreeDecomposition::new(fan_bags(), (1..7).map(|i| (i - 1, i)).collect(), 0).unwrap()
    }
}
