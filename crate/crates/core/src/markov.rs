//! The layered flow graph of a rounding walk along a bag path, its explicit
//! LP flow, exact max flow / min cut, and the potential-function checks that
//! bound the min cut by the separation probability of the walk.
//!
//! For bags `v_1..v_l` with `s ∈ B_{v_1}` and `t ∈ B_{v_l}`, the conditioning
//! sets are `I_0 = {s}`, `I_i = B_{v_i} ∩ B_{v_{i+1}}`, `I_l = {t}`. Layer `i`
//! holds every `I_i`-assignment and the edge `(f_i, f_{i+1})` carries the
//! probability under `μ_{B_{v_{i+1}}}` that both labellings occur.

use std::collections::VecDeque;

use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::instance::VertexId;
use crate::lifting::{project, LiftedSolution};
use crate::rational::{frac, half, int, to_ratio_string, Rational};
use crate::rounding::path_joint;
use crate::treedec::NodeId;

/// Largest conditioning set whose assignments are enumerated.
pub const MAX_CONDITIONING: usize = 16;

#[derive(Debug, Clone)]
pub struct MarkovFlowGraph {
    pub nodes: Vec<NodeId>,
    pub s: VertexId,
    pub t: VertexId,
    /// Conditioning sets `I_0..I_l`.
    pub sets: Vec<Vec<VertexId>>,
    /// `weights[i][a][b] = w_H(a, b)` for `a ∈ L_i`, `b ∈ L_{i+1}`.
    pub weights: Vec<Vec<Vec<Rational>>>,
}

fn positions(domain: &[VertexId], sub: &[VertexId]) -> Vec<usize> {
    sub.iter().map(|v| domain.binary_search(v).expect("subset of domain")).collect()
}

fn intersect(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    a.iter().copied().filter(|v| b.binary_search(v).is_ok()).collect()
}

impl MarkovFlowGraph {
    /// Number of edge layers `l` (equal to the number of bags on the path).
    pub fn ell(&self) -> usize {
        self.weights.len()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.sets.iter().map(|s| 1 << s.len()).collect()
    }

    /// `Pr[f|_{I_i} = a]` as the out-weight of `a` (the in-weight for the last layer).
    pub fn layer_probs(&self, i: usize) -> Vec<Rational> {
        if i < self.ell() {
            self.weights[i].iter().map(|row| row.iter().sum()).collect()
        } else {
            let last = &self.weights[i - 1];
            (0..1 << self.sets[i].len()).map(|b| last.iter().map(|row| &row[b]).sum()).collect()
        }
    }
}

/// Builds the flow graph for the walk along `nodes` from `s` to `t`.
pub fn build_h(sol: &LiftedSolution, nodes: &[NodeId], s: VertexId, t: VertexId) -> Result<MarkovFlowGraph> {
    if nodes.is_empty() {
        return Err(Error::InvalidParams("bag path is empty".into()));
    }
    let bag = |i: usize| -> &[VertexId] { &sol.bags[nodes[i]] };
    if bag(0).binary_search(&s).is_err() {
        return Err(Error::EndpointNotInBag(s));
    }
    if bag(nodes.len() - 1).binary_search(&t).is_err() {
        return Err(Error::EndpointNotInBag(t));
    }
    let l = nodes.len();
    let mut sets = vec![vec![s]];
    for i in 1..l {
        sets.push(intersect(bag(i - 1), bag(i)));
    }
    sets.push(vec![t]);
    if let Some(big) = sets.iter().find(|s| s.len() > MAX_CONDITIONING) {
        return Err(Error::TooLarge(format!("conditioning set of size {}", big.len())));
    }
    let weights = (0..l)
        .map(|i| {
            let mu = &sol.bag_marginals[nodes[i]];
            let (pa, pb) = (positions(mu.domain(), &sets[i]), positions(mu.domain(), &sets[i + 1]));
            let mut w = vec![vec![Rational::zero(); 1 << sets[i + 1].len()]; 1 << sets[i].len()];
            for (m, p) in mu.probs().iter().enumerate() {
                if !p.is_zero() {
                    w[project(m as u64, &pa) as usize][project(m as u64, &pb) as usize] += p;
                }
            }
            w
        })
        .collect();
    Ok(MarkovFlowGraph { nodes: nodes.to_vec(), s, t, sets, weights })
}

/// An edge function on the flow graph, shaped like `weights`.
#[derive(Debug, Clone)]
pub struct Flow {
    pub edges: Vec<Vec<Vec<Rational>>>,
    pub value: Rational,
}

impl Flow {
    /// Largest conservation residual at interior nodes (layers `1..l`) and
    /// whether `0 <= g <= w_H` everywhere, with no flow leaving `s_1` or entering `t_0`.
    pub fn check(&self, h: &MarkovFlowGraph) -> (Rational, bool) {
        let mut residual = Rational::zero();
        for i in 1..h.ell() {
            for a in 0..self.edges[i].len() {
                let inflow: Rational = self.edges[i - 1].iter().map(|row| &row[a]).sum();
                let outflow: Rational = self.edges[i][a].iter().sum();
                residual = residual.max((inflow - outflow).abs());
            }
        }
        let capacity = self
            .edges
            .iter()
            .zip(&h.weights)
            .all(|(g, w)| g.iter().flatten().zip(w.iter().flatten()).all(|(x, c)| !x.is_negative() && x <= c));
        let l = h.ell();
        let stray =
            self.edges[0][1].iter().any(|x| !x.is_zero()) || self.edges[l - 1].iter().any(|row| !row[0].is_zero());
        (residual, capacity && !stray)
    }
}

/// The explicit `(s_0, t_1)` flow read off the demand distributions at each bag.
pub fn lp_flow(h: &MarkovFlowGraph, sol: &LiftedSolution) -> Result<Flow> {
    let e = sol.demand_index(h.s, h.t).ok_or(Error::PairNotCovered(h.s, h.t))?;
    let mut edges = Vec::with_capacity(h.ell());
    for i in 0..h.ell() {
        let d = sol.distribution(h.nodes[i], e);
        let dom = d.domain();
        let (pa, pb) = (positions(dom, &h.sets[i]), positions(dom, &h.sets[i + 1]));
        let (ps, pt) = (positions(dom, &[h.s])[0], positions(dom, &[h.t])[0]);
        let mut g = vec![vec![Rational::zero(); 1 << h.sets[i + 1].len()]; 1 << h.sets[i].len()];
        for (m, p) in d.probs().iter().enumerate() {
            if !p.is_zero() && m >> ps & 1 == 0 && m >> pt & 1 == 1 {
                g[project(m as u64, &pa) as usize][project(m as u64, &pb) as usize] += p;
            }
        }
        edges.push(g);
    }
    let value = edges[0][0].iter().sum();
    Ok(Flow { edges, value })
}

#[derive(Debug, Clone)]
pub struct MaxFlow {
    pub value: Rational,
    /// Saturated edges `(layer, from, to)` crossing the minimum cut.
    pub cut: Vec<(usize, usize, usize)>,
}

/// Exact maximum flow between two layer nodes (shortest augmenting paths).
pub fn max_flow(h: &MarkovFlowGraph, source: (usize, usize), sink: (usize, usize)) -> MaxFlow {
    let offsets: Vec<usize> = h
        .layer_sizes()
        .iter()
        .scan(0, |acc, &sz| {
            let o = *acc;
            *acc += sz;
            Some(o)
        })
        .collect();
    let total: usize = h.layer_sizes().iter().sum();
    let id = |layer: usize, a: usize| offsets[layer] + a;
    // Residual graph as adjacency lists of (to, edge index); edge k and k^1 are paired.
    let mut to = Vec::new();
    let mut cap: Vec<Rational> = Vec::new();
    let mut adj = vec![Vec::new(); total];
    let mut origin = Vec::new();
    for (i, w) in h.weights.iter().enumerate() {
        for (a, row) in w.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                if c.is_positive() {
                    let (u, v) = (id(i, a), id(i + 1, b));
                    adj[u].push(to.len());
                    to.push(v);
                    cap.push(c.clone());
                    origin.push(Some((i, a, b)));
                    adj[v].push(to.len());
                    to.push(u);
                    cap.push(Rational::zero());
                    origin.push(None);
                }
            }
        }
    }
    let (src, dst) = (id(source.0, source.1), id(sink.0, sink.1));
    let mut value = Rational::zero();
    let reach = |cap: &[Rational]| -> Vec<Option<usize>> {
        let mut prev: Vec<Option<usize>> = vec![None; total];
        let mut seen = vec![false; total];
        seen[src] = true;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &k in &adj[u] {
                if cap[k].is_positive() && !seen[to[k]] {
                    seen[to[k]] = true;
                    prev[to[k]] = Some(k);
                    queue.push_back(to[k]);
                }
            }
        }
        prev.iter().zip(&seen).map(|(p, s)| if *s { Some(p.unwrap_or(usize::MAX)) } else { None }).collect()
    };
    if src != dst {
        loop {
            let prev = reach(&cap);
            if prev[dst].is_none() {
                break;
            }
            let mut path = Vec::new();
            let mut v = dst;
            while v != src {
                let k = prev[v].expect("on augmenting path");
                path.push(k);
                v = to[k ^ 1];
            }
            let bottleneck = path.iter().map(|&k| cap[k].clone()).min().expect("non-empty path");
            for &k in &path {
                cap[k] -= &bottleneck;
                cap[k ^ 1] += &bottleneck;
            }
            value += bottleneck;
        }
    }
    let reachable = reach(&cap);
    let cut = (0..to.len())
        .step_by(2)
        .filter(|&k| reachable[to[k ^ 1]].is_some() && reachable[to[k]].is_none())
        .filter_map(|k| origin[k])
        .collect();
    MaxFlow { value, cut }
}

#[derive(Debug, Clone)]
pub struct PotentialProfile {
    /// `a[i][v] = Pr[X_0 = s_0 | X_i = v] - 1/2`, or 0 where `Pr[X_i = v] = 0`.
    pub a: Vec<Vec<Rational>>,
    /// `phi[i] = Var[A(X_i)]`.
    pub phi: Vec<Rational>,
    /// `Pr[X_i = v]` from the walk.
    pub visit: Vec<Vec<Rational>>,
    /// `Pr[X_0 = s_0 and X_i = v]`.
    pub joint_s0: Vec<Vec<Rational>>,
}

/// Exact `A` and `phi` by a forward pass over the walk.
pub fn potential_profile(h: &MarkovFlowGraph) -> PotentialProfile {
    let start = h.layer_probs(0);
    let mut visit = vec![start.clone()];
    let mut joint = vec![vec![start[0].clone(), Rational::zero()]];
    for i in 0..h.ell() {
        let out = h.layer_probs(i);
        let width = 1 << h.sets[i + 1].len();
        let mut nv = vec![Rational::zero(); width];
        let mut nj = vec![Rational::zero(); width];
        for (a, row) in h.weights[i].iter().enumerate() {
            if out[a].is_zero() {
                continue;
            }
            for (b, w) in row.iter().enumerate() {
                if !w.is_zero() {
                    let step = w / &out[a];
                    nv[b] += &visit[i][a] * &step;
                    nj[b] += &joint[i][a] * &step;
                }
            }
        }
        visit.push(nv);
        joint.push(nj);
    }
    let a: Vec<Vec<Rational>> = visit
        .iter()
        .zip(&joint)
        .map(|(v, j)| {
            v.iter().zip(j).map(|(p, q)| if p.is_zero() { Rational::zero() } else { q / p - half() }).collect()
        })
        .collect();
    let phi = visit
        .iter()
        .zip(&a)
        .map(|(v, a)| {
            let mean: Rational = v.iter().zip(a).map(|(p, x)| p * x).sum();
            let second: Rational = v.iter().zip(a).map(|(p, x)| p * x * x).sum();
            second - &mean * &mean
        })
        .collect();
    PotentialProfile { a, phi, visit, joint_s0: joint }
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub s: VertexId,
    pub t: VertexId,
    pub ell: usize,
    pub layer_sizes: Vec<usize>,
    pub flow_value: Rational,
    pub mu_s0_t1: Rational,
    pub flow_residual: Rational,
    pub flow_capacity_ok: bool,
    pub max_flow: Rational,
    pub phi: Vec<Rational>,
    pub phi_non_increasing: bool,
    pub walk_marginals_ok: bool,
    /// `phi(0) - phi(l)`.
    pub phi_drop: Rational,
    /// `Pr[X_0 = s_0 and X_l = t_1]`.
    pub walk_s0_t1: Rational,
    pub a_t1: Rational,
    pub rho: Rational,
    pub threshold_weight: Rational,
    pub threshold_separates: bool,
    /// Rounding probability of `f(s) = 0, f(t) = 1`.
    pub alg_s0_t1: Rational,
    /// `alg_s0_t1 * 4 l^2 / mincut` when `A(t_1) < 0` and the cut is positive.
    pub slack_4l2: Option<Rational>,
}

impl BoundReport {
    pub fn flow_ok(&self) -> bool {
        self.flow_residual.is_zero() && self.flow_capacity_ok && self.flow_value == self.mu_s0_t1
    }

    pub fn max_flow_ok(&self) -> bool {
        self.max_flow >= self.flow_value
    }

    /// `phi(0) - phi(l) <= 2 Pr[X_0 = s_0 and X_l = t_1]`.
    pub fn potential_drop_ok(&self) -> bool {
        self.phi_drop <= int(2) * &self.walk_s0_t1
    }

    /// Threshold edges weigh at most `(phi(0) - phi(l)) / rho^2`.
    pub fn threshold_ok(&self) -> bool {
        self.threshold_weight <= &self.phi_drop / (&self.rho * &self.rho)
    }

    /// When `A(t_1) < 0`: the threshold edges separate `s_0` from `t_1` and the
    /// min cut is at most `4 l^2 (phi(0) - phi(l))`.
    pub fn cut_bound_ok(&self) -> bool {
        if !self.a_t1.is_negative() {
            return true;
        }
        let l2 = int(4) * int(self.ell as i64) * int(self.ell as i64);
        self.threshold_separates && self.max_flow <= l2 * &self.phi_drop
    }

    /// Rounding keeps `Pr[f(s)=0, f(t)=1] >= mincut / (8 l^2)` when `A(t_1) < 0`,
    /// and `>= Pr_mu[f(s)=0, f(t)=1] / 2` otherwise.
    pub fn rounding_bound_ok(&self) -> bool {
        if self.a_t1.is_negative() {
            let l2 = int(8) * int(self.ell as i64) * int(self.ell as i64);
            self.alg_s0_t1.clone() * l2 >= self.max_flow
        } else {
            self.alg_s0_t1 >= &self.mu_s0_t1 * frac(1, 2)
        }
    }

    /// Names of failed checks; empty when everything holds.
    pub fn violations(&self) -> Vec<&'static str> {
        let checks = [
            ("flow", self.flow_ok()),
            ("max_flow", self.max_flow_ok()),
            ("walk_marginals", self.walk_marginals_ok),
            ("potential_drop", self.potential_drop_ok()),
            ("threshold", self.threshold_ok()),
            ("cut_bound", self.cut_bound_ok()),
            ("rounding_bound", self.rounding_bound_ok()),
        ];
        checks.iter().filter(|c| !c.1).map(|c| c.0).collect()
    }

    pub fn to_json(&self) -> Value {
        let r = to_ratio_string;
        json!({
            "s": self.s,
            "t": self.t,
            "ell": self.ell,
            "layer_sizes": self.layer_sizes,
            "flow_value": r(&self.flow_value),
            "mu_s0_t1": r(&self.mu_s0_t1),
            "max_flow": r(&self.max_flow),
            "phi": self.phi.iter().map(r).collect::<Vec<_>>(),
            "phi_non_increasing": self.phi_non_increasing,
            "phi_drop": r(&self.phi_drop),
            "walk_s0_t1": r(&self.walk_s0_t1),
            "a_t1": r(&self.a_t1),
            "rho": r(&self.rho),
            "threshold_weight": r(&self.threshold_weight),
            "threshold_separates": self.threshold_separates,
            "alg_s0_t1": r(&self.alg_s0_t1),
            "slack_4l2": self.slack_4l2.as_ref().map(r),
            "violations": self.violations(),
        })
    }
}

/// Whether removing the `(layer, from, to)` edges disconnects `s_0` from `t_1`
/// in the complete layered graph (zero-weight edges included).
fn separates(h: &MarkovFlowGraph, removed: &[Vec<Vec<bool>>]) -> bool {
    let mut frontier = vec![true, false];
    for (i, layer) in removed.iter().enumerate() {
        let mut next = vec![false; 1 << h.sets[i + 1].len()];
        for (a, row) in layer.iter().enumerate() {
            if frontier[a] {
                for (b, &cut) in row.iter().enumerate() {
                    next[b] |= !cut;
                }
            }
        }
        frontier = next;
    }
    !frontier[1]
}

/// Runs every flow, cut, and potential check on one demand pair's graph.
pub fn check_bounds(h: &MarkovFlowGraph, sol: &LiftedSolution) -> Result<BoundReport> {
    let flow = lp_flow(h, sol)?;
    let (flow_residual, flow_capacity_ok) = flow.check(h);
    let e = sol.demand_index(h.s, h.t).ok_or(Error::PairNotCovered(h.s, h.t))?;
    let d = sol.distribution(h.nodes[0], e);
    let (ps, pt) = (positions(d.domain(), &[h.s])[0], positions(d.domain(), &[h.t])[0]);
    let mu_s0_t1: Rational =
        d.probs().iter().enumerate().filter(|(m, _)| m >> ps & 1 == 0 && m >> pt & 1 == 1).map(|(_, p)| p).sum();

    let l = h.ell();
    let mf = max_flow(h, (0, 0), (l, 1));
    let profile = potential_profile(h);
    let walk_marginals_ok = (0..=l).all(|i| {
        let expected = if i == 0 {
            h.layer_probs(0)
        } else {
            let w = &h.weights[i - 1];
            (0..1 << h.sets[i].len()).map(|b| w.iter().map(|row| &row[b]).sum()).collect()
        };
        let out_ok = i == l || profile.visit[i] == h.layer_probs(i);
        profile.visit[i] == expected && out_ok
    });
    let phi_drop = &profile.phi[0] - &profile.phi[l];
    let walk_s0_t1 = profile.joint_s0[l][1].clone();
    let a_t1 = profile.a[l][1].clone();
    let rho = Rational::new(1.into(), (2 * l).into());

    let mut threshold_weight = Rational::zero();
    let removed: Vec<Vec<Vec<bool>>> = h
        .weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            w.iter()
                .enumerate()
                .map(|(a, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(b, wt)| {
                            let hit = (&profile.a[i][a] - &profile.a[i + 1][b]).abs() >= rho;
                            if hit {
                                threshold_weight += wt;
                            }
                            hit
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let threshold_separates = separates(h, &removed);

    let joint = path_joint(sol, &h.nodes, h.s, h.t)?;
    let alg_s0_t1 = joint[0][1].clone();
    let slack_4l2 =
        (a_t1.is_negative() && mf.value.is_positive()).then(|| &alg_s0_t1 * int(4 * (l * l) as i64) / &mf.value);

    Ok(BoundReport {
        s: h.s,
        t: h.t,
        ell: l,
        layer_sizes: h.layer_sizes(),
        flow_value: flow.value,
        mu_s0_t1,
        flow_residual,
        flow_capacity_ok,
        max_flow: mf.value,
        phi_non_increasing: profile.phi.windows(2).all(|w| w[1] <= w[0]),
        phi: profile.phi,
        walk_marginals_ok,
        phi_drop,
        walk_s0_t1,
        a_t1,
        rho,
        threshold_weight,
        threshold_separates,
        alg_s0_t1,
        slack_4l2,
    })
}
