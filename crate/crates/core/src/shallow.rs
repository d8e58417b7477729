//! Bag augmentations that trade width for combinatorial diameter.
//!
//! All three keep the tree and root of the input and only grow bags towards
//! the root, so `B_v ⊆ B'_v ⊆ B_v ∪ B'_{p(v)}` holds node by node and the
//! output is again a valid decomposition.

use std::collections::BTreeSet;
use std::str::FromStr;

use crate::combdiam::{DecPath, SimplificationTrace};
use crate::error::{Error, Result};
use crate::instance::VertexId;
use crate::treedec::{is_subset, NodeId, TreeDecomposition};

/// Synchronisation nodes at spacing `lambda` and each node's synchronisation ancestor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncAnnotation {
    pub lambda: usize,
    pub sync_nodes: Vec<bool>,
    pub sigma: Vec<Option<NodeId>>,
}

impl SyncAnnotation {
    /// `lambda` is clamped to `1..=max(depth, 1)`.
    pub fn new(t: &TreeDecomposition, lambda: usize) -> Self {
        let lambda = lambda.clamp(1, t.depth().max(1));
        let sync_nodes: Vec<bool> = (0..t.num_nodes()).map(|i| t.level(i).is_multiple_of(lambda)).collect();
        let sigma = (0..t.num_nodes())
            .map(|v| {
                let mut x = t.parent(v)?;
                while !sync_nodes[x] {
                    x = t.parent(x).expect("root is a synchronisation node");
                }
                Some(x)
            })
            .collect();
        Self { lambda, sync_nodes, sigma }
    }
}

/// Layer spacings `s_0 | s_1 | ... | s_{q-1}` and each node's layer (−1 for none).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerAnnotation {
    pub q: usize,
    pub spacing: Vec<usize>,
    pub pi: Vec<i64>,
}

impl LayerAnnotation {
    /// Spacings `max(1, round(k^{j/q} d / k))` lifted to a divisibility chain,
    /// with `k = width + 1` and `d = depth` of `t`.
    pub fn new(t: &TreeDecomposition, q: usize) -> Self {
        let q = q.max(1);
        let k = (t.width() + 1) as f64;
        let d = t.depth() as f64;
        let raw = |j: usize| ((k.powf(j as f64 / q as f64) * d / k).round() as usize).max(1);
        let mut spacing = vec![raw(0)];
        for j in 1..q {
            let prev = spacing[j - 1];
            let factor = ((raw(j) as f64 / prev as f64).round() as usize).max(1);
            spacing.push(prev * factor);
        }
        Self::with_spacing(t, spacing)
    }

    /// Layers for explicit spacings; each entry must divide the next.
    pub fn with_spacing(t: &TreeDecomposition, spacing: Vec<usize>) -> Self {
        assert!(!spacing.is_empty() && spacing[0] >= 1);
        assert!(spacing.windows(2).all(|w| w[1] % w[0] == 0), "spacings must form a divisibility chain");
        let pi = (0..t.num_nodes())
            .map(|v| {
                let l = t.level(v);
                (0..spacing.len()).rev().find(|&j| l.is_multiple_of(spacing[j])).map_or(-1, |j| j as i64)
            })
            .collect();
        Self { q: spacing.len(), spacing, pi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Bridges,
    Highways,
    SuperHighways,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Bridges => "bridges",
            Mode::Highways => "highways",
            Mode::SuperHighways => "superhighways",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bridges" => Ok(Mode::Bridges),
            "highways" => Ok(Mode::Highways),
            "superhighways" | "super-highways" => Ok(Mode::SuperHighways),
            other => Err(Error::InvalidParams(format!("unknown mode {other:?}"))),
        }
    }
}

/// Output of a construction together with the annotation it was built from.
#[derive(Debug, Clone)]
pub struct Shallow {
    pub mode: Mode,
    pub decomposition: TreeDecomposition,
    pub sync: Option<SyncAnnotation>,
    pub layers: Option<LayerAnnotation>,
}

fn union_of(t: &TreeDecomposition, nodes: impl IntoIterator<Item = NodeId>) -> Vec<VertexId> {
    let set: BTreeSet<VertexId> = nodes.into_iter().flat_map(|i| t.bag(i).iter().copied()).collect();
    set.into_iter().collect()
}

fn union_of_slices(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    let set: BTreeSet<VertexId> = a.iter().chain(b).copied().collect();
    set.into_iter().collect()
}

/// Nodes from `v` up to (and including) its ancestor `top`.
fn climb(t: &TreeDecomposition, v: NodeId, top: NodeId) -> Vec<NodeId> {
    let mut out = vec![v];
    let mut x = v;
    while x != top {
        x = t.parent(x).expect("top is an ancestor");
        out.push(x);
    }
    out
}

/// `B'_v = B(T_{v↔σ(v)})`; the root keeps its bag.
pub fn bridges(t: &TreeDecomposition, lambda: usize) -> Shallow {
    let sync = SyncAnnotation::new(t, lambda);
    let bags = (0..t.num_nodes())
        .map(|v| match sync.sigma[v] {
            Some(top) => union_of(t, climb(t, v, top)),
            None => t.bag(v).to_vec(),
        })
        .collect();
    Shallow { mode: Mode::Bridges, decomposition: t.with_bags(bags), sync: Some(sync), layers: None }
}

/// Bridges plus the bags of every synchronisation node on the root path.
pub fn highways(t: &TreeDecomposition, lambda: usize) -> Shallow {
    let sync = SyncAnnotation::new(t, lambda);
    let bags = (0..t.num_nodes())
        .map(|v| match sync.sigma[v] {
            Some(top) => {
                let bridge = climb(t, v, top);
                let highway = t.root_path(v).into_iter().filter(|&w| sync.sync_nodes[w]);
                union_of(t, bridge.into_iter().chain(highway))
            }
            None => t.bag(v).to_vec(),
        })
        .collect();
    Shallow { mode: Mode::Highways, decomposition: t.with_bags(bags), sync: Some(sync), layers: None }
}

/// Nodes whose bags form `B'_v`: `v` plus the walk from `p(v)` to the root
/// keeping each node whose layer reaches the running maximum.
pub fn super_highway_nodes(t: &TreeDecomposition, layers: &LayerAnnotation, v: NodeId) -> Vec<NodeId> {
    let mut out = vec![v];
    let mut best = i64::MIN;
    let mut x = t.parent(v);
    while let Some(w) = x {
        if layers.pi[w] >= best {
            best = layers.pi[w];
            out.push(w);
        }
        x = t.parent(w);
    }
    out
}

pub fn super_highways(t: &TreeDecomposition, q: usize) -> Shallow {
    super_highways_with(t, LayerAnnotation::new(t, q))
}

pub fn super_highways_with(t: &TreeDecomposition, layers: LayerAnnotation) -> Shallow {
    let bags = (0..t.num_nodes())
        .map(|v| if v == t.root() { t.bag(v).to_vec() } else { union_of(t, super_highway_nodes(t, &layers, v)) })
        .collect();
    Shallow { mode: Mode::SuperHighways, decomposition: t.with_bags(bags), sync: None, layers: Some(layers) }
}

/// Nodes violating `B_v ⊆ B'_v ⊆ B_v ∪ B'_{p(v)}` (or `B'_r = B_r` at the root).
pub fn sandwich_violations(original: &TreeDecomposition, augmented: &TreeDecomposition) -> Vec<NodeId> {
    (0..original.num_nodes())
        .filter(|&v| {
            let (b, nb) = (original.bag(v), augmented.bag(v));
            match original.parent(v) {
                None => b != nb,
                Some(p) => {
                    let upper = union_of_slices(b, augmented.bag(p));
                    !(is_subset(b, nb) && is_subset(nb, &upper))
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CertifiedBound {
    pub bound: usize,
    pub traces: Vec<SimplificationTrace>,
}

/// The construction's explicit diameter bound, plus bypass traces for up to
/// `max_pairs` node pairs that replay the bypass order behind the bound.
///
/// Bridges: `2*floor(depth/lambda) + 2`; highways: 3; super-highways: `2q + 1`.
/// Replay: non-synchronisation interiors first, then synchronisation nodes
/// (layer by layer for super-highways) except the one nearest the lowest
/// common ancestor on each side, then the ancestor itself.
pub fn certified_diameter_bound(shallow: &Shallow, max_pairs: usize) -> Result<CertifiedBound> {
    let t = &shallow.decomposition;
    let bound = match shallow.mode {
        Mode::Bridges => {
            let sync = shallow.sync.as_ref().expect("bridges carry a sync annotation");
            2 * (t.depth() / sync.lambda) + 2
        }
        Mode::Highways => 3,
        Mode::SuperHighways => 2 * shallow.layers.as_ref().expect("layers present").q + 1,
    };
    let count = t.num_nodes();
    let total = count * count.saturating_sub(1) / 2;
    let stride = total.div_ceil(max_pairs.max(1)).max(1);
    let pairs = (0..count).flat_map(|u| (u + 1..count).map(move |v| (u, v)));
    let mut traces = Vec::new();
    for (s, e) in pairs.step_by(stride) {
        let trace = replay(shallow, s, e)?;
        if trace.final_path.len() > bound {
            return Err(Error::TraceFailed(
                s,
                e,
                format!("replay left length {} above bound {bound}", trace.final_path.len()),
            ));
        }
        traces.push(trace);
    }
    Ok(CertifiedBound { bound, traces })
}

/// Replay phase of a node: −1 for plain nodes, otherwise its synchronisation layer.
fn layer_of(shallow: &Shallow, v: NodeId) -> i64 {
    match (&shallow.sync, &shallow.layers) {
        (Some(sync), _) => {
            if sync.sync_nodes[v] {
                0
            } else {
                -1
            }
        }
        (None, Some(layers)) => layers.pi[v],
        _ => -1,
    }
}

fn replay(shallow: &Shallow, s: NodeId, e: NodeId) -> Result<SimplificationTrace> {
    let t = &shallow.decomposition;
    let x = t.lca(s, e);
    let mut trace = SimplificationTrace::new(DecPath::between(t, s, e));
    let fail = |why: String| Error::TraceFailed(s, e, why);

    let nodes = trace.final_path.nodes().to_vec();
    let plain: Vec<NodeId> = nodes[1..nodes.len().saturating_sub(1)]
        .iter()
        .copied()
        .filter(|&v| v != x && layer_of(shallow, v) == -1)
        .collect();
    bypass_all(&mut trace, &plain).map_err(|v| fail(format!("plain node {v} not redundant")))?;
    if shallow.mode == Mode::Bridges {
        return Ok(trace);
    }

    let top = shallow.layers.as_ref().map_or(1, |l| l.q as i64);
    for layer in 0..top {
        let cur = trace.final_path.nodes().to_vec();
        let xi = cur.iter().position(|&v| v == x).expect("ancestor stays on the path");
        let mut pending = Vec::new();
        if xi > 0 {
            let left: Vec<NodeId> = cur[1..xi].iter().copied().filter(|&v| layer_of(shallow, v) == layer).collect();
            pending.extend(left.iter().take(left.len().saturating_sub(1)));
        }
        if xi + 1 < cur.len() {
            let right: Vec<NodeId> =
                cur[xi + 1..cur.len() - 1].iter().rev().copied().filter(|&v| layer_of(shallow, v) == layer).collect();
            pending.extend(right.iter().take(right.len().saturating_sub(1)));
        }
        bypass_all(&mut trace, &pending).map_err(|v| fail(format!("layer-{layer} node {v} not redundant")))?;
    }

    if x != s && x != e && !trace.try_bypass(x) {
        return Err(fail(format!("ancestor {x} not redundant")));
    }
    Ok(trace)
}

/// Bypasses every listed node, sweeping until no progress; returns a stuck node on failure.
fn bypass_all(trace: &mut SimplificationTrace, nodes: &[NodeId]) -> std::result::Result<(), NodeId> {
    let mut pending = nodes.to_vec();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|&v| !trace.try_bypass(v));
        if pending.len() == before {
            return Err(pending[0]);
        }
    }
    Ok(())
}
