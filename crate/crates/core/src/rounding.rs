//! Conditional-sampling rounding of local distributions, repeated rounding,
//! and exact separation probabilities along bag paths.
//!
//! A run samples the start bag from its marginal, then visits the remaining
//! nodes in BFS order. At node `B` with processed neighbour `B'`, the labels of
//! `B⁻ = B ∖ B'` are drawn from `μ_B` conditioned on the labels already fixed
//! on `B⁺ = B ∩ B'`.

use std::collections::{HashMap, VecDeque};

use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::instance::{cut_totals, Assignment, CutInstance, VertexId};
use crate::lifting::{project, LiftedSolution};
use crate::rational::{to_f64, to_ratio_string, Rational};
use crate::rng;
use crate::treedec::{NodeId, TreeDecomposition};

/// Nodes in BFS order from `start`, each with the neighbour it was reached from.
pub fn bfs_order(t: &TreeDecomposition, start: NodeId) -> Vec<(NodeId, Option<NodeId>)> {
    let mut seen = vec![false; t.num_nodes()];
    let mut out = Vec::with_capacity(t.num_nodes());
    let mut queue = VecDeque::from([(start, None)]);
    seen[start] = true;
    while let Some((v, from)) = queue.pop_front() {
        out.push((v, from));
        for &w in t.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back((w, Some(v)));
            }
        }
    }
    out
}

/// Nodes in DFS preorder from `start`, visiting higher-numbered neighbours first.
pub fn dfs_order(t: &TreeDecomposition, start: NodeId) -> Vec<(NodeId, Option<NodeId>)> {
    let mut seen = vec![false; t.num_nodes()];
    let mut out = Vec::with_capacity(t.num_nodes());
    let mut stack = vec![(start, None)];
    while let Some((v, from)) = stack.pop() {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        out.push((v, from));
        let mut nb: Vec<NodeId> = t.neighbors(v).iter().copied().filter(|&w| !seen[w]).collect();
        nb.sort_unstable();
        stack.extend(nb.into_iter().map(|w| (w, Some(v))));
    }
    out
}

fn positions(domain: &[VertexId], sub: &[VertexId]) -> Vec<usize> {
    sub.iter().map(|v| domain.binary_search(v).expect("subset of domain")).collect()
}

fn intersect(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    a.iter().copied().filter(|v| b.binary_search(v).is_ok()).collect()
}

/// Sampling table for one node: conditional CDFs over the bag keyed by the `B⁺` labels.
#[derive(Debug, Clone)]
struct Step {
    node: NodeId,
    bag: Vec<VertexId>,
    /// Positions of `B⁺` inside the bag (empty at the start node).
    plus: Vec<usize>,
    /// Per `B⁺` mask: candidate bag masks and cumulative weights; `None` if the condition has probability 0.
    tables: Vec<Option<(Vec<u64>, Vec<f64>)>>,
}

/// Labels for every covered vertex plus the sampled bag mask per step.
pub type Sample = (Vec<bool>, Vec<(NodeId, u64)>);

/// Precomputed traversal and conditional tables for repeated sampling.
#[derive(Debug, Clone)]
pub struct RoundingPlan {
    pub start: NodeId,
    pub order: Vec<NodeId>,
    steps: Vec<Step>,
    n: usize,
}

impl RoundingPlan {
    pub fn new(t: &TreeDecomposition, sol: &LiftedSolution, start: NodeId) -> Result<Self> {
        Self::with_order(t, sol, &bfs_order(t, start))
    }

    /// Plan for an explicit connected traversal (each node after the first names an earlier neighbour).
    pub fn with_order(t: &TreeDecomposition, sol: &LiftedSolution, order: &[(NodeId, Option<NodeId>)]) -> Result<Self> {
        let n = t.bags().iter().flatten().map(|&v| v + 1).max().unwrap_or(0);
        let mut steps = Vec::with_capacity(order.len());
        for &(node, from) in order {
            let bag = t.bag(node).to_vec();
            let plus_set = from.map(|p| intersect(&bag, t.bag(p))).unwrap_or_default();
            let plus = positions(&bag, &plus_set);
            let mu = &sol.bag_marginals[node];
            let mut groups: Vec<(Vec<u64>, Vec<f64>, Rational)> =
                vec![(Vec::new(), Vec::new(), Rational::zero()); 1 << plus.len()];
            for (m, p) in mu.probs().iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                let g = &mut groups[project(m as u64, &plus) as usize];
                let acc = g.1.last().copied().unwrap_or(0.0) + to_f64(p);
                g.0.push(m as u64);
                g.1.push(acc);
                g.2 += p;
            }
            let tables =
                groups.into_iter().map(|(masks, cdf, total)| (!total.is_zero()).then_some((masks, cdf))).collect();
            steps.push(Step { node, bag, plus, tables });
        }
        Ok(Self { start: order[0].0, order: order.iter().map(|o| o.0).collect(), steps, n })
    }

    /// One run: labels for every covered vertex plus the sampled bag mask per step.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<Sample> {
        let mut labels = vec![false; self.n];
        let mut choices = Vec::with_capacity(self.steps.len());
        for step in &self.steps {
            let key = step.plus.iter().enumerate().fold(0u64, |acc, (k, &p)| acc | (labels[step.bag[p]] as u64) << k);
            let (masks, cdf) = step.tables[key as usize].as_ref().ok_or(Error::ZeroProbabilityCondition(step.node))?;
            let r = rng.random::<f64>() * cdf[cdf.len() - 1];
            let idx = cdf.partition_point(|&c| c <= r).min(masks.len() - 1);
            let m = masks[idx];
            for (b, &v) in step.bag.iter().enumerate() {
                labels[v] = m >> b & 1 == 1;
            }
            choices.push((step.node, m));
        }
        Ok((labels, choices))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingRun {
    pub seed: u64,
    pub order: Vec<NodeId>,
    pub assignment: Assignment,
    /// Sampled bag mask at each processed node, in order.
    pub choices: Vec<(NodeId, u64)>,
}

/// One rounding run from `start`, deterministic in `seed`.
pub fn sc_round(t: &TreeDecomposition, sol: &LiftedSolution, start: NodeId, seed: u64) -> Result<RoundingRun> {
    let plan = RoundingPlan::new(t, sol, start)?;
    let (labels, choices) = plan.sample(&mut rng::seeded(seed))?;
    Ok(RoundingRun { seed, order: plan.order, assignment: Assignment::over_vertices(labels), choices })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatedRound {
    pub best: Assignment,
    pub best_sparsity: Rational,
    pub best_trial: usize,
    pub degenerate_runs: usize,
    /// Fraction of runs with `cap - (alpha / c) * dem <= 0`.
    pub good_fraction: f64,
}

impl RepeatedRound {
    pub fn to_json(&self) -> Value {
        json!({
            "sparsity": to_ratio_string(&self.best_sparsity),
            "cut": self.best.bits(),
            "best_trial": self.best_trial,
            "degenerate_runs": self.degenerate_runs,
            "good_fraction": self.good_fraction,
        })
    }
}

/// Runs `trials` independent roundings from the root and keeps the sparsest cut
/// (ties go to the lowest trial index).
pub fn repeated_round(
    inst: &CutInstance,
    t: &TreeDecomposition,
    sol: &LiftedSolution,
    trials: usize,
    seed: u64,
    c: &Rational,
) -> Result<RepeatedRound> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    if c.is_zero() {
        return Err(Error::InvalidParams("c must be non-zero".into()));
    }
    if (0..inst.n()).any(|v| !t.is_vertex_covered(v)) {
        return Err(Error::InvalidDecomposition("every vertex must appear in some bag".into()));
    }
    let plan = RoundingPlan::new(t, sol, t.root())?;
    let threshold = &sol.alpha / c;
    // (trial, sparsity and labels if some demand is separated, below threshold)
    type Run = (usize, Option<(Rational, Vec<bool>)>, bool);
    let runs: Vec<Run> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let (labels, _) = plan.sample(&mut rng::seeded(rng::split(seed, i as u64)))?;
            let f = Assignment::over_vertices(labels);
            let (cap, dem) = cut_totals(inst, &f)?;
            let good = cap.clone() - &threshold * &dem <= Rational::zero();
            let best = (!dem.is_zero()).then(|| (cap / dem, f.values().to_vec()));
            Ok((i, best, good))
        })
        .collect::<Result<_>>()?;
    let good = runs.iter().filter(|r| r.2).count();
    let degenerate = runs.iter().filter(|r| r.1.is_none()).count();
    let (best_trial, (best_sparsity, labels)) = runs
        .into_iter()
        .filter_map(|(i, b, _)| b.map(|b| (i, b)))
        .min_by(|a, b| a.1 .0.cmp(&b.1 .0).then(a.0.cmp(&b.0)))
        .ok_or(Error::AllRunsDegenerate)?;
    Ok(RepeatedRound {
        best: Assignment::over_vertices(labels),
        best_sparsity,
        best_trial,
        degenerate_runs: degenerate,
        good_fraction: good as f64 / trials as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// 95% normal-approximation confidence half-width.
    pub half_width: f64,
}

/// Monte Carlo estimate of `Pr[f(s) != f(t)]` under rounding from the root.
pub fn algcut_estimate(
    t: &TreeDecomposition,
    sol: &LiftedSolution,
    s: VertexId,
    v: VertexId,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    if s == v || trials == 0 {
        return Ok(Estimate { value: 0.0, half_width: 0.0 });
    }
    let plan = RoundingPlan::new(t, sol, t.root())?;
    let hits = (0..trials)
        .into_par_iter()
        .map(|i| {
            let (labels, _) = plan.sample(&mut rng::seeded(rng::split(seed, i as u64)))?;
            Ok(usize::from(labels[s] != labels[v]))
        })
        .sum::<Result<usize>>()?;
    let p = hits as f64 / trials as f64;
    Ok(Estimate { value: p, half_width: 1.96 * (p * (1.0 - p) / trials as f64).sqrt() })
}

/// Shortest tree path from a node containing `s` to a node containing `v`.
pub fn pair_path(t: &TreeDecomposition, s: VertexId, v: VertexId) -> Result<Vec<NodeId>> {
    let a = t.nodes_containing(s);
    let b = t.nodes_containing(v);
    let dist = |x: NodeId, y: NodeId| t.level(x) + t.level(y) - 2 * t.level(t.lca(x, y));
    let (x, y) = a
        .iter()
        .flat_map(|&x| b.iter().map(move |&y| (x, y)))
        .min_by_key(|&(x, y)| (dist(x, y), x, y))
        .ok_or(Error::PairNotConnected(s, v))?;
    Ok(crate::treedec::tree_path(t, x, y))
}

/// Exact joint law `[f(s)][f(v)]` of the rounding process restricted to the
/// bag sequence `nodes` (`s` in the first bag, `v` in the last).
pub fn path_joint(sol: &LiftedSolution, nodes: &[NodeId], s: VertexId, v: VertexId) -> Result<[[Rational; 2]; 2]> {
    let bag = |i: usize| -> &[VertexId] { &sol.bags[nodes[i]] };
    let first = bag(0);
    let last = bag(nodes.len() - 1);
    let ps = first.binary_search(&s).map_err(|_| Error::EndpointNotInBag(s))?;
    let pv = last.binary_search(&v).map_err(|_| Error::EndpointNotInBag(v))?;
    let mut joint: [[Rational; 2]; 2] = Default::default();
    let mu0 = &sol.bag_marginals[nodes[0]];
    if nodes.len() == 1 {
        for (m, p) in mu0.probs().iter().enumerate() {
            joint[m >> ps & 1][m >> pv & 1] += p;
        }
        return Ok(joint);
    }

    // State: (f(s), labels on the current intersection).
    let mut cur = intersect(first, bag(1));
    let pos = positions(first, &cur);
    let mut states: HashMap<(usize, u64), Rational> = HashMap::new();
    for (m, p) in mu0.probs().iter().enumerate() {
        if !p.is_zero() {
            *states.entry((m >> ps & 1, project(m as u64, &pos))).or_insert_with(Rational::zero) += p;
        }
    }
    for j in 1..nodes.len() {
        let b = bag(j);
        let mu = &sol.bag_marginals[nodes[j]];
        let cond = positions(b, &cur);
        let next = if j + 1 < nodes.len() { intersect(b, bag(j + 1)) } else { Vec::new() };
        let npos = positions(b, &next);
        let mut totals: Vec<Rational> = vec![Rational::zero(); 1 << cond.len()];
        for (m, p) in mu.probs().iter().enumerate() {
            totals[project(m as u64, &cond) as usize] += p;
        }
        let mut out: HashMap<(usize, u64), Rational> = HashMap::new();
        for ((fs, h), w) in states {
            let total = &totals[h as usize];
            if total.is_zero() {
                return Err(Error::ZeroProbabilityCondition(nodes[j]));
            }
            for (m, p) in mu.probs().iter().enumerate() {
                if p.is_zero() || project(m as u64, &cond) != h {
                    continue;
                }
                let weight = &w * p / total;
                if j + 1 < nodes.len() {
                    *out.entry((fs, project(m as u64, &npos))).or_insert_with(Rational::zero) += weight;
                } else {
                    joint[fs][m >> pv & 1] += weight;
                }
            }
        }
        states = out;
        cur = next;
    }
    Ok(joint)
}

fn separation(joint: &[[Rational; 2]; 2]) -> Rational {
    &joint[0][1] + &joint[1][0]
}

/// Exact `Pr[f(s) != f(v)]` under rounding, by a Markov chain over the
/// intersections along the shortest bag path between `s` and `v`.
pub fn algcut_exact(t: &TreeDecomposition, sol: &LiftedSolution, s: VertexId, v: VertexId) -> Result<Rational> {
    if s == v {
        return Ok(Rational::zero());
    }
    algcut_on_path(sol, &pair_path(t, s, v)?, s, v)
}

/// [`algcut_exact`] along an explicit bag sequence, such as a simplified path.
pub fn algcut_on_path(sol: &LiftedSolution, nodes: &[NodeId], s: VertexId, v: VertexId) -> Result<Rational> {
    if s == v {
        return Ok(Rational::zero());
    }
    Ok(separation(&path_joint(sol, nodes, s, v)?))
}

/// `Pr[f(s) != f(v)]` for a given traversal, by summing the product formula over
/// every labelling of the covered vertices. Independent of [`path_joint`];
/// exponential in the number of covered vertices (capped at 20).
pub fn algcut_by_enumeration(
    t: &TreeDecomposition,
    sol: &LiftedSolution,
    order: &[(NodeId, Option<NodeId>)],
    s: VertexId,
    v: VertexId,
) -> Result<Rational> {
    let mut covered: Vec<VertexId> = t.bags().iter().flatten().copied().collect();
    covered.sort_unstable();
    covered.dedup();
    if covered.len() > 20 {
        return Err(Error::TooLarge(format!("{} covered vertices", covered.len())));
    }
    let factors: Vec<(Vec<usize>, Vec<usize>, NodeId)> = order
        .iter()
        .map(|&(node, from)| {
            let bag = t.bag(node);
            let plus: Vec<VertexId> = from.map(|p| intersect(bag, t.bag(p))).unwrap_or_default();
            (positions(&covered, bag), positions(bag, &plus), node)
        })
        .collect();
    let (is, iv) = (positions(&covered, &[s])[0], positions(&covered, &[v])[0]);
    let mut total = Rational::zero();
    for f in 0..(1u64 << covered.len()) {
        if (f >> is & 1) == (f >> iv & 1) {
            continue;
        }
        let mut p = Rational::one();
        for (bag_pos, plus_pos, node) in &factors {
            let mu = &sol.bag_marginals[*node];
            let m = project(f, bag_pos);
            let num = mu.prob_mask(m);
            if num.is_zero() {
                p = Rational::zero();
                break;
            }
            let h = project(m, plus_pos);
            let den: Rational =
                (0..mu.probs().len() as u64).filter(|&x| project(x, plus_pos) == h).map(|x| mu.prob_mask(x)).sum();
            p = p * num / den;
        }
        total += p;
    }
    Ok(total)
}
