//! Rooted tree decompositions: validation, path queries, min-fill construction
//! and depth balancing by recursive centroid splitting.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Graph, VertexId};

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub struct TreeDecomposition {
    bags: Vec<Vec<VertexId>>,
    edges: Vec<(NodeId, NodeId)>,
    adj: Vec<Vec<NodeId>>,
    root: NodeId,
    parent: Vec<Option<NodeId>>,
    level: Vec<usize>,
}

impl PartialEq for TreeDecomposition {
    fn eq(&self, other: &Self) -> bool {
        self.bags == other.bags && self.root == other.root && self.sorted_edges() == other.sorted_edges()
    }
}

impl Eq for TreeDecomposition {}

fn normalize_bag(mut bag: Vec<VertexId>) -> Vec<VertexId> {
    bag.sort_unstable();
    bag.dedup();
    bag
}

fn check_tree_shape(count: usize, edges: &[(NodeId, NodeId)], root: NodeId) -> std::result::Result<(), String> {
    if count == 0 {
        return Err("decomposition has no nodes".into());
    }
    if root >= count {
        return Err(format!("root {root} is not a node"));
    }
    if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= count || b >= count) {
        return Err(format!("tree edge ({a}, {b}) references an unknown node"));
    }
    if let Some(&(a, _)) = edges.iter().find(|&&(a, b)| a == b) {
        return Err(format!("self-loop at node {a}"));
    }
    if edges.len() != count - 1 {
        return Err(format!("{} tree edges for {count} nodes", edges.len()));
    }
    let mut adj = vec![Vec::new(); count];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; count];
    let mut stack = vec![root];
    seen[root] = true;
    let mut reached = 1;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                reached += 1;
                stack.push(y);
            }
        }
    }
    if reached != count {
        return Err(format!("tree edges leave {} of {count} nodes unreachable", count - reached));
    }
    Ok(())
}

impl TreeDecomposition {
    /// Builds a decomposition, checking that `edges` form a tree on the bags.
    pub fn new(bags: Vec<Vec<VertexId>>, edges: Vec<(NodeId, NodeId)>, root: NodeId) -> Result<Self> {
        check_tree_shape(bags.len(), &edges, root).map_err(Error::InvalidDecomposition)?;
        Ok(Self::from_parts_unchecked(bags, edges, root))
    }

    /// Builds without the tree-shape check; `validate` reports any defects.
    pub fn from_parts_unchecked(bags: Vec<Vec<VertexId>>, edges: Vec<(NodeId, NodeId)>, root: NodeId) -> Self {
        let bags: Vec<_> = bags.into_iter().map(normalize_bag).collect();
        let count = bags.len();
        let mut adj = vec![Vec::new(); count];
        for &(a, b) in &edges {
            if a < count && b < count && a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let mut parent = vec![None; count];
        let mut level = vec![usize::MAX; count];
        if root < count {
            level[root] = 0;
            let mut queue = VecDeque::from([root]);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if level[y] == usize::MAX {
                        level[y] = level[x] + 1;
                        parent[y] = Some(x);
                        queue.push_back(y);
                    }
                }
            }
        }
        Self { bags, edges, adj, root, parent, level }
    }

    /// Single-bag decomposition.
    pub fn single(bag: Vec<VertexId>) -> Self {
        Self::from_parts_unchecked(vec![bag], Vec::new(), 0)
    }

    /// Same tree and root with replacement bags.
    pub fn with_bags(&self, bags: Vec<Vec<VertexId>>) -> Self {
        assert_eq!(bags.len(), self.bags.len(), "bag count must match node count");
        Self::from_parts_unchecked(bags, self.edges.clone(), self.root)
    }

    pub fn rerooted(&self, root: NodeId) -> Self {
        Self::from_parts_unchecked(self.bags.clone(), self.edges.clone(), root)
    }

    pub fn num_nodes(&self) -> usize {
        self.bags.len()
    }

    pub fn bag(&self, node: NodeId) -> &[VertexId] {
        &self.bags[node]
    }

    pub fn bags(&self) -> &[Vec<VertexId>] {
        &self.bags
    }

    pub fn tree_edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    fn sorted_edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut e: Vec<_> = self.edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        e.sort_unstable();
        e
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adj[node]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.parent[node]
    }

    pub fn children(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adj[node].iter().copied().filter(move |&c| self.parent[c] == Some(node))
    }

    /// Number of edges between `node` and the root.
    pub fn level(&self, node: NodeId) -> usize {
        self.level[node]
    }

    pub fn depth(&self) -> usize {
        self.level.iter().copied().filter(|&l| l != usize::MAX).max().unwrap_or(0)
    }

    /// Largest bag size minus one (0 when every bag is empty).
    pub fn width(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(0).saturating_sub(1)
    }

    pub fn contains(&self, node: NodeId, v: VertexId) -> bool {
        self.bags[node].binary_search(&v).is_ok()
    }

    /// Nodes whose bags contain `v`, ascending.
    pub fn nodes_containing(&self, v: VertexId) -> Vec<NodeId> {
        (0..self.num_nodes()).filter(|&i| self.contains(i, v)).collect()
    }

    pub fn lca(&self, mut a: NodeId, mut b: NodeId) -> NodeId {
        while self.level[a] > self.level[b] {
            a = self.parent[a].expect("non-root node has a parent");
        }
        while self.level[b] > self.level[a] {
            b = self.parent[b].expect("non-root node has a parent");
        }
        while a != b {
            a = self.parent[a].expect("non-root node has a parent");
            b = self.parent[b].expect("non-root node has a parent");
        }
        a
    }

    /// Ancestors from `node` up to the root, inclusive at both ends.
    pub fn root_path(&self, node: NodeId) -> Vec<NodeId> {
        let mut out = vec![node];
        let mut x = node;
        while let Some(p) = self.parent[x] {
            out.push(p);
            x = p;
        }
        out
    }

    pub fn is_vertex_covered(&self, v: VertexId) -> bool {
        self.bags.iter().any(|b| b.binary_search(&v).is_ok())
    }

    pub fn to_json(&self) -> String {
        let canon = self.without_empty_bags();
        let nodes = (0..canon.num_nodes())
            .map(|i| NodeJson { id: i, bag: canon.bags[i].clone(), parent: canon.parent[i] })
            .collect();
        serde_json::to_string(&DecompositionJson { root: canon.root, nodes })
            .expect("decomposition serialization is infallible")
    }

    /// Parses the JSON form; node ids are renumbered densely in ascending id order.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: DecompositionJson = serde_json::from_str(text)?;
        let index: BTreeMap<usize, usize> =
            raw.nodes.iter().map(|n| n.id).collect::<BTreeSet<_>>().into_iter().zip(0..).collect();
        if index.len() != raw.nodes.len() {
            return Err(Error::InvalidDecomposition("duplicate node id".into()));
        }
        let lookup = |id: usize| {
            index.get(&id).copied().ok_or_else(|| Error::InvalidDecomposition(format!("unknown node id {id}")))
        };
        let mut bags = vec![Vec::new(); raw.nodes.len()];
        let mut edges = Vec::new();
        for node in &raw.nodes {
            let i = lookup(node.id)?;
            bags[i] = node.bag.clone();
            match node.parent {
                Some(p) => edges.push((lookup(p)?, i)),
                None if node.id != raw.root => {
                    return Err(Error::InvalidDecomposition(format!(
                        "node {} has no parent but is not the root",
                        node.id
                    )))
                }
                None => {}
            }
        }
        let root = lookup(raw.root)?;
        if raw.nodes.iter().any(|n| n.id == raw.root && n.parent.is_some()) {
            return Err(Error::InvalidDecomposition("root has a parent".into()));
        }
        Self::new(bags, edges, root)
    }

    /// Contracts nodes with empty bags into a neighbour and renumbers densely.
    pub fn without_empty_bags(&self) -> Self {
        if self.bags.iter().all(|b| !b.is_empty()) || self.bags.iter().all(Vec::is_empty) {
            return self.clone();
        }
        let keep: Vec<bool> = self.bags.iter().map(|b| !b.is_empty()).collect();
        self.contract(&keep)
    }

    /// Keeps the nodes flagged in `keep` (at least one), attaching each kept node to its
    /// nearest kept ancestor; dropped nodes must not be needed for validity.
    fn contract(&self, keep: &[bool]) -> Self {
        // Re-root at a kept node so every kept node has a kept ancestor chain.
        let root = if keep[self.root] {
            self.root
        } else {
            (0..self.num_nodes()).find(|&i| keep[i]).expect("at least one kept node")
        };
        let t = self.rerooted(root);
        let new_id: Vec<Option<usize>> = {
            let mut next = 0;
            keep.iter()
                .map(|&k| {
                    k.then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect()
        };
        let mut bags = Vec::new();
        let mut edges = Vec::new();
        for i in 0..t.num_nodes() {
            if !keep[i] {
                continue;
            }
            bags.push(t.bags[i].clone());
            let mut p = t.parent[i];
            while let Some(x) = p {
                if keep[x] {
                    break;
                }
                p = t.parent[x];
            }
            if let Some(x) = p {
                edges.push((new_id[x].unwrap(), new_id[i].unwrap()));
            }
        }
        Self::from_parts_unchecked(bags, edges, new_id[root].unwrap())
    }

    /// Merges every node whose bag is a subset of an adjacent bag into that neighbour.
    pub fn without_subset_bags(&self) -> Self {
        let mut bags = self.bags.clone();
        let mut adj: Vec<BTreeSet<NodeId>> = self.adj.iter().map(|a| a.iter().copied().collect()).collect();
        let mut alive = vec![true; bags.len()];
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..bags.len() {
                if !alive[i] || alive.iter().filter(|&&a| a).count() == 1 {
                    continue;
                }
                let host = adj[i].iter().copied().find(|&j| is_subset(&bags[i], &bags[j]));
                if let Some(j) = host {
                    let others: Vec<_> = adj[i].iter().copied().filter(|&x| x != j).collect();
                    for x in others {
                        adj[x].remove(&i);
                        adj[x].insert(j);
                        adj[j].insert(x);
                    }
                    adj[j].remove(&i);
                    adj[i].clear();
                    alive[i] = false;
                    bags[i].clear();
                    changed = true;
                }
            }
        }
        let ids: Vec<Option<usize>> = {
            let mut next = 0;
            alive
                .iter()
                .map(|&a| {
                    a.then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect()
        };
        let mut new_bags = Vec::new();
        let mut edges = Vec::new();
        for i in 0..bags.len() {
            if let Some(id) = ids[i] {
                new_bags.push(std::mem::take(&mut bags[i]));
                for &j in &adj[i] {
                    if j > i {
                        edges.push((id, ids[j].unwrap()));
                    }
                }
            }
        }
        let mut root = self.root;
        while !alive[root] {
            // the root was absorbed; any surviving node works
            root = (0..alive.len()).find(|&i| alive[i]).unwrap();
        }
        Self::from_parts_unchecked(new_bags, edges, ids[root].unwrap())
    }
}

pub(crate) fn is_subset(a: &[VertexId], b: &[VertexId]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: usize,
    bag: Vec<VertexId>,
    parent: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct DecompositionJson {
    root: usize,
    nodes: Vec<NodeJson>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NotATree(String),
    VertexOutOfRange {
        node: NodeId,
        vertex: VertexId,
    },
    UncoveredVertex(VertexId),
    UncoveredEdge(VertexId, VertexId),
    /// The nodes holding `vertex` split into `components` pieces; `nodes` lists them.
    DisconnectedVertex {
        vertex: VertexId,
        nodes: Vec<NodeId>,
        components: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotATree(why) => write!(f, "not a tree: {why}"),
            Violation::VertexOutOfRange { node, vertex } => write!(f, "bag {node} holds unknown vertex {vertex}"),
            Violation::UncoveredVertex(v) => write!(f, "vertex {v} is in no bag"),
            Violation::UncoveredEdge(u, v) => write!(f, "edge ({u}, {v}) is in no bag"),
            Violation::DisconnectedVertex { vertex, components, .. } => {
                write!(f, "bags holding vertex {vertex} form {components} components")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the tree shape and the three decomposition properties, listing every violation.
pub fn validate(graph: &Graph, t: &TreeDecomposition) -> ValidationReport {
    let mut violations = Vec::new();
    if let Err(why) = check_tree_shape(t.num_nodes(), &t.edges, t.root) {
        violations.push(Violation::NotATree(why));
    }
    let n = graph.n();
    for (node, bag) in t.bags.iter().enumerate() {
        for &v in bag.iter().filter(|&&v| v >= n) {
            violations.push(Violation::VertexOutOfRange { node, vertex: v });
        }
    }
    let mut holders: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for (node, bag) in t.bags.iter().enumerate() {
        for &v in bag.iter().filter(|&&v| v < n) {
            holders[v].push(node);
        }
    }
    for (v, nodes) in holders.iter().enumerate() {
        if nodes.is_empty() {
            violations.push(Violation::UncoveredVertex(v));
        }
    }
    for e in graph.edges() {
        if !t.bags.iter().any(|b| b.binary_search(&e.u).is_ok() && b.binary_search(&e.v).is_ok()) {
            violations.push(Violation::UncoveredEdge(e.u.min(e.v), e.u.max(e.v)));
        }
    }
    let mut mark = vec![false; t.num_nodes()];
    for (v, nodes) in holders.iter().enumerate() {
        if nodes.len() < 2 {
            continue;
        }
        for &x in nodes {
            mark[x] = true;
        }
        let mut seen = vec![false; t.num_nodes()];
        let mut components = 0;
        for &start in nodes {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(x) = stack.pop() {
                for &y in &t.adj[x] {
                    if mark[y] && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        for &x in nodes {
            mark[x] = false;
        }
        if components > 1 {
            violations.push(Violation::DisconnectedVertex { vertex: v, nodes: nodes.clone(), components });
        }
    }
    ValidationReport { violations }
}

/// Union of the bags of `nodes`, sorted.
pub fn bag_union(t: &TreeDecomposition, nodes: &[NodeId]) -> Vec<VertexId> {
    let set: BTreeSet<VertexId> = nodes.iter().flat_map(|&i| t.bag(i).iter().copied()).collect();
    set.into_iter().collect()
}

/// Nodes on the unique tree path from `i` to `j`, inclusive.
pub fn tree_path(t: &TreeDecomposition, i: NodeId, j: NodeId) -> Vec<NodeId> {
    let x = t.lca(i, j);
    let mut up = Vec::new();
    let mut a = i;
    while a != x {
        up.push(a);
        a = t.parent(a).unwrap();
    }
    up.push(x);
    let mut down = Vec::new();
    let mut b = j;
    while b != x {
        down.push(b);
        b = t.parent(b).unwrap();
    }
    up.extend(down.into_iter().rev());
    up
}

pub fn level(t: &TreeDecomposition, node: NodeId) -> usize {
    t.level(node)
}

/// Decomposition from a min-fill elimination ordering, with subset bags merged away.
///
/// Ties on fill-in break by degree, then by vertex id. Disconnected inputs are
/// handled by chaining the component trees.
pub fn min_fill_decomposition(graph: &Graph) -> TreeDecomposition {
    let n = graph.n();
    if n == 0 {
        return TreeDecomposition::single(Vec::new());
    }
    let mut adj: Vec<BTreeSet<VertexId>> = graph.adjacency().into_iter().map(|a| a.into_iter().collect()).collect();
    let mut eliminated = vec![false; n];
    let mut position = vec![0usize; n];
    let mut order = Vec::with_capacity(n);
    let mut bags = Vec::with_capacity(n);

    for step in 0..n {
        let fill = |v: VertexId| {
            let nb: Vec<_> = adj[v].iter().copied().collect();
            let mut missing = 0usize;
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    if !adj[a].contains(&b) {
                        missing += 1;
                    }
                }
            }
            missing
        };
        let v = (0..n).filter(|&v| !eliminated[v]).min_by_key(|&v| (fill(v), adj[v].len(), v)).unwrap();
        let nb: Vec<_> = adj[v].iter().copied().collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nb {
            adj[a].remove(&v);
        }
        eliminated[v] = true;
        position[v] = step;
        order.push(v);
        let mut bag = nb.clone();
        bag.push(v);
        bags.push((bag, nb));
    }

    let mut edges = Vec::new();
    for (step, (_, nb)) in bags.iter().enumerate() {
        let next = nb.iter().map(|&u| position[u]).min();
        match next {
            Some(p) => edges.push((step, p)),
            None if step + 1 < n => edges.push((step, step + 1)),
            None => {}
        }
    }
    let t = TreeDecomposition::from_parts_unchecked(bags.into_iter().map(|b| b.0).collect(), edges, n - 1);
    t.without_subset_bags()
}

/// Rebalances `t` to depth at most `2*ceil(log2 N) + 1` and width at most `3w + 2`.
///
/// Recursive centroid splitting over the decomposition tree. Each recursion
/// component keeps at most two attachment nodes (inside nodes adjacent to
/// already-chosen splitters); the splitter of a component receives its own
/// bag plus every vertex the component shares with the outside, which lies in
/// the bags of the attachment nodes. With two attachment nodes the splitter is
/// taken on the path between them, at the point nearest the centroid, so the
/// attachment count never grows past two and sizes halve every two levels.
pub fn balance(t: &TreeDecomposition) -> TreeDecomposition {
    let count = t.num_nodes();
    if count <= 1 {
        return t.clone();
    }
    let mut new_bags: Vec<Vec<VertexId>> = vec![Vec::new(); count];
    let mut new_edges = Vec::with_capacity(count - 1);
    let mut owner = vec![usize::MAX; count];
    let mut next_label = 0usize;

    struct Task {
        nodes: Vec<NodeId>,
        attach: Vec<NodeId>,
        parent: Option<NodeId>,
    }
    let mut stack = vec![Task { nodes: (0..count).collect(), attach: Vec::new(), parent: None }];
    let mut root = 0;

    while let Some(task) = stack.pop() {
        let label = next_label;
        next_label += 1;
        for &x in &task.nodes {
            owner[x] = label;
        }
        let inside = |x: NodeId, owner: &[usize]| owner[x] == label;

        let centroid = centroid_of(t, &task.nodes, |x| inside(x, &owner));
        let splitter = if task.attach.len() < 2 {
            centroid
        } else {
            let path = path_within(t, task.attach[0], task.attach[1], |x| inside(x, &owner));
            nearest_on_path(t, centroid, &path, |x| inside(x, &owner))
        };

        let mut bag: BTreeSet<VertexId> = t.bag(splitter).iter().copied().collect();
        for &y in &task.nodes {
            for &a in t.neighbors(y) {
                if !inside(a, &owner) {
                    bag.extend(intersect(t.bag(a), t.bag(y)));
                }
            }
        }
        new_bags[splitter] = bag.into_iter().collect();
        match task.parent {
            Some(p) => new_edges.push((p, splitter)),
            None => root = splitter,
        }

        for &start in t.neighbors(splitter) {
            if !inside(start, &owner) {
                continue;
            }
            let mut comp = vec![start];
            let mut seen: BTreeSet<NodeId> = BTreeSet::from([start, splitter]);
            let mut i = 0;
            while i < comp.len() {
                let x = comp[i];
                i += 1;
                for &y in t.neighbors(x) {
                    if inside(y, &owner) && seen.insert(y) {
                        comp.push(y);
                    }
                }
            }
            let mut attach: Vec<NodeId> = task.attach.iter().copied().filter(|a| comp.contains(a)).collect();
            if !attach.contains(&start) {
                attach.push(start);
            }
            comp.sort_unstable();
            stack.push(Task { nodes: comp, attach, parent: Some(splitter) });
        }
        // Children re-label their nodes when processed; the splitter leaves every component.
        owner[splitter] = usize::MAX;
    }
    TreeDecomposition::from_parts_unchecked(new_bags, new_edges, root)
}

fn intersect(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

/// Node minimising the largest remaining component (lowest id on ties).
fn centroid_of(t: &TreeDecomposition, nodes: &[NodeId], inside: impl Fn(NodeId) -> bool) -> NodeId {
    let start = nodes[0];
    let mut order = vec![start];
    let mut par: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut i = 0;
    while i < order.len() {
        let x = order[i];
        i += 1;
        for &y in t.neighbors(x) {
            if inside(y) && Some(&y) != par.get(&x) && y != start && !par.contains_key(&y) {
                par.insert(y, x);
                order.push(y);
            }
        }
    }
    let total = order.len();
    let mut size: BTreeMap<NodeId, usize> = order.iter().map(|&x| (x, 1)).collect();
    for &x in order.iter().rev() {
        if let Some(&p) = par.get(&x) {
            let s = size[&x];
            *size.get_mut(&p).unwrap() += s;
        }
    }
    let mut best = (usize::MAX, usize::MAX);
    for &x in &order {
        let mut worst = total - size[&x];
        for &y in t.neighbors(x) {
            if inside(y) && par.get(&y) == Some(&x) {
                worst = worst.max(size[&y]);
            }
        }
        best = best.min((worst, x));
    }
    best.1
}

fn path_within(t: &TreeDecomposition, a: NodeId, b: NodeId, inside: impl Fn(NodeId) -> bool) -> Vec<NodeId> {
    let mut prev: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut queue = VecDeque::from([a]);
    prev.insert(a, a);
    while let Some(x) = queue.pop_front() {
        if x == b {
            break;
        }
        for &y in t.neighbors(x) {
            if inside(y) && !prev.contains_key(&y) {
                prev.insert(y, x);
                queue.push_back(y);
            }
        }
    }
    let mut path = vec![b];
    let mut x = b;
    while x != a {
        x = prev[&x];
        path.push(x);
    }
    path
}

fn nearest_on_path(t: &TreeDecomposition, from: NodeId, path: &[NodeId], inside: impl Fn(NodeId) -> bool) -> NodeId {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(x) = queue.pop_front() {
        if path.contains(&x) {
            return x;
        }
        for &y in t.neighbors(x) {
            if inside(y) && seen.insert(y) {
                queue.push_back(y);
            }
        }
    }
    unreachable!("component is connected")
}
