//! Lifted LP over local distributions and its ratio-objective solver.
//!
//! For every decomposition node `i` and demand edge `e = {s,t}` there is one
//! distribution over `{0,1}`-assignments of `L = B_i ∪ {s,t}`. Adjacent nodes
//! agree on `(B_i ∩ B_j) ∪ {s,t}`, distributions at one node agree on `B_i`,
//! and each distribution is invariant under flipping every label.
//!
//! Assignments of a domain are bitmasks: bit `b` is the label of `domain[b]`.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::instance::{Assignment, CutInstance, VertexId};
use crate::lp::{LinearProgram, Solver};
use crate::rational::{to_ratio_string, Rational};
use crate::treedec::{NodeId, TreeDecomposition};

/// Largest local domain the LP will enumerate.
pub const MAX_LOCAL_DOMAIN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalDistribution {
    domain: Vec<VertexId>,
    probs: Vec<Rational>,
}

/// Positions of `sub` inside sorted `domain`, or `None` if not a subset.
fn positions(domain: &[VertexId], sub: &[VertexId]) -> Option<Vec<usize>> {
    sub.iter().map(|v| domain.binary_search(v).ok()).collect()
}

/// Projects `mask` over a domain onto the bit positions `pos`.
pub(crate) fn project(mask: u64, pos: &[usize]) -> u64 {
    pos.iter().enumerate().fold(0, |acc, (k, &p)| acc | (mask >> p & 1) << k)
}

fn sorted_union(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    let mut out: Vec<VertexId> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

impl LocalDistribution {
    /// `probs[mask]` for each assignment mask; the domain is sorted and deduplicated.
    pub fn new(domain: Vec<VertexId>, probs: Vec<Rational>) -> Result<Self> {
        if domain.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams("distribution domain must be sorted and distinct".into()));
        }
        if probs.len() != 1usize << domain.len() {
            return Err(Error::InvalidParams(format!(
                "expected {} probabilities for a domain of size {}",
                1usize << domain.len(),
                domain.len()
            )));
        }
        if probs.iter().any(|p| p.is_negative()) || probs.iter().sum::<Rational>() != Rational::one() {
            return Err(Error::InvalidParams("probabilities must be non-negative and sum to 1".into()));
        }
        Ok(Self { domain, probs })
    }

    pub fn uniform(domain: Vec<VertexId>) -> Self {
        let size = 1usize << domain.len();
        let p = Rational::new(1.into(), size.into());
        Self { domain, probs: vec![p; size] }
    }

    pub fn domain(&self) -> &[VertexId] {
        &self.domain
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn prob_mask(&self, mask: u64) -> &Rational {
        &self.probs[mask as usize]
    }

    /// Probability of a full assignment of the domain; `None` if the domains differ.
    pub fn prob(&self, f: &Assignment) -> Option<&Rational> {
        if f.domain() != self.domain.as_slice() {
            return None;
        }
        let mask = f.values().iter().enumerate().fold(0u64, |m, (i, &b)| m | (b as u64) << i);
        Some(&self.probs[mask as usize])
    }

    /// Marginal onto `sub`, which must be contained in the domain.
    pub fn marginal(&self, sub: &[VertexId]) -> Result<LocalDistribution> {
        let mut sub = sub.to_vec();
        sub.sort_unstable();
        sub.dedup();
        let pos = positions(&self.domain, &sub)
            .ok_or_else(|| Error::InvalidParams("marginal set is not inside the domain".into()))?;
        let mut probs = vec![Rational::zero(); 1 << sub.len()];
        for (mask, p) in self.probs.iter().enumerate() {
            if !p.is_zero() {
                probs[project(mask as u64, &pos) as usize] += p;
            }
        }
        Ok(LocalDistribution { domain: sub, probs })
    }

    pub fn is_symmetric(&self) -> bool {
        let full = (1u64 << self.domain.len()) - 1;
        (0..self.probs.len() as u64).all(|m| self.probs[m as usize] == self.probs[(m ^ full) as usize])
    }

    /// `Pr[f(u) != f(v)]`; both must be in the domain.
    pub fn separation(&self, u: VertexId, v: VertexId) -> Result<Rational> {
        let pos = positions(&self.domain, &[u, v]).ok_or(Error::PairNotCovered(u, v))?;
        Ok(self
            .probs
            .iter()
            .enumerate()
            .filter(|(m, _)| (*m >> pos[0] & 1) != (*m >> pos[1] & 1))
            .map(|(_, p)| p)
            .sum())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "domain": self.domain,
            "probs": self.probs.iter().map(to_ratio_string).collect::<Vec<_>>(),
        })
    }
}

/// One LP block: the distribution for (node, demand) over `domain`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub node: NodeId,
    pub demand: usize,
    pub domain: Vec<VertexId>,
    pub offset: usize,
}

impl Block {
    pub fn size(&self) -> usize {
        1 << self.domain.len()
    }
}

/// Variable layout of the lifted LP.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedIndex {
    pub blocks: Vec<Block>,
    pub num_nodes: usize,
    pub num_demands: usize,
    /// Linear forms of the numerator (capacity) and denominator (demand).
    pub numerator: Vec<Rational>,
    pub denominator: Vec<Rational>,
}

impl LiftedIndex {
    pub fn block(&self, node: NodeId, demand: usize) -> &Block {
        &self.blocks[node * self.num_demands + demand]
    }
}

/// Adds rows equating the marginals of blocks `a` and `b` onto `shared`.
fn add_marginal_rows(lp: &mut LinearProgram, a: &Block, b: &Block, shared: &[VertexId]) {
    let pa = positions(&a.domain, shared).expect("shared set inside first block");
    let pb = positions(&b.domain, shared).expect("shared set inside second block");
    let mut rows: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); 1 << shared.len()];
    for m in 0..a.size() as u64 {
        rows[project(m, &pa) as usize].push((a.offset + m as usize, Rational::one()));
    }
    for m in 0..b.size() as u64 {
        rows[project(m, &pb) as usize].push((b.offset + m as usize, -Rational::one()));
    }
    // One marginal row is implied by the two normalisations.
    for row in rows.into_iter().skip(1) {
        lp.add_row(row, Rational::zero());
    }
}

/// Separation indicator `f(u) != f(v)` as a linear form over `block`.
fn separation_form(block: &Block, u: VertexId, v: VertexId, weight: &Rational, out: &mut [Rational]) {
    let pos = positions(&block.domain, &[u, v]).expect("pair inside block");
    for m in 0..block.size() {
        if (m >> pos[0] & 1) != (m >> pos[1] & 1) {
            out[block.offset + m] += weight;
        }
    }
}

/// Builds the lifted LP (feasibility rows only; objectives live in the index).
pub fn build_lifted_lp(inst: &CutInstance, t: &TreeDecomposition) -> Result<(LinearProgram, LiftedIndex)> {
    let demands = inst.dem_edges();
    if demands.is_empty() {
        return Err(Error::DegenerateDenominator);
    }
    let mut blocks = Vec::with_capacity(t.num_nodes() * demands.len());
    let mut offset = 0;
    for i in 0..t.num_nodes() {
        for (e, d) in demands.iter().enumerate() {
            let domain = sorted_union(t.bag(i), &[d.u, d.v]);
            if domain.len() > MAX_LOCAL_DOMAIN {
                return Err(Error::TooLarge(format!(
                    "local domain of size {} at node {i} exceeds {MAX_LOCAL_DOMAIN}",
                    domain.len()
                )));
            }
            let block = Block { node: i, demand: e, domain, offset };
            offset += block.size();
            blocks.push(block);
        }
    }
    let mut lp = LinearProgram::new(offset);
    let nd = demands.len();

    for b in &blocks {
        lp.add_row((b.offset..b.offset + b.size()).map(|j| (j, Rational::one())), Rational::one());
    }
    for &(i, j) in t.tree_edges() {
        let shared: Vec<VertexId> = t.bag(i).iter().copied().filter(|v| t.contains(j, *v)).collect();
        for (e, d) in demands.iter().enumerate() {
            let set = sorted_union(&shared, &[d.u, d.v]);
            add_marginal_rows(&mut lp, &blocks[i * nd + e], &blocks[j * nd + e], &set);
        }
    }
    for i in 0..t.num_nodes() {
        for e in 1..nd {
            add_marginal_rows(&mut lp, &blocks[i * nd + e - 1], &blocks[i * nd + e], t.bag(i));
        }
    }
    for b in &blocks {
        let full = b.size() - 1;
        for m in 0..b.size() {
            if m < m ^ full {
                lp.add_row(
                    [(b.offset + m, Rational::one()), (b.offset + (m ^ full), -Rational::one())],
                    Rational::zero(),
                );
            }
        }
    }

    let mut numerator = vec![Rational::zero(); offset];
    for c in inst.cap_edges() {
        let node = (0..t.num_nodes())
            .find(|&i| t.contains(i, c.u) && t.contains(i, c.v))
            .ok_or_else(|| Error::InvalidDecomposition(format!("edge ({}, {}) is not covered by a bag", c.u, c.v)))?;
        separation_form(&blocks[node * nd], c.u, c.v, &c.w, &mut numerator);
    }
    let mut denominator = vec![Rational::zero(); offset];
    for (e, d) in demands.iter().enumerate() {
        separation_form(&blocks[e], d.u, d.v, &d.w, &mut denominator);
    }
    let index = LiftedIndex { blocks, num_nodes: t.num_nodes(), num_demands: nd, numerator, denominator };
    Ok((lp, index))
}

/// Optimal local distributions and the ratio they achieve.
#[derive(Debug, Clone)]
pub struct LiftedSolution {
    pub index: LiftedIndex,
    pub distributions: Vec<LocalDistribution>,
    pub bag_marginals: Vec<LocalDistribution>,
    pub alpha: Rational,
    /// Ratios visited by the fractional-programming iteration, starting value first.
    pub alpha_sequence: Vec<Rational>,
    pub demand_pairs: Vec<(VertexId, VertexId)>,
    pub bags: Vec<Vec<VertexId>>,
    pub pivots: usize,
}

fn dot(a: &[Rational], x: &[Rational]) -> Rational {
    a.iter().zip(x).filter(|(c, _)| !c.is_zero()).map(|(c, v)| c * v).sum()
}

/// Minimises capacity-lpcut over demand-lpcut across the lifted polytope.
///
/// Each step minimises `N - alpha*D` from the previous basis and replaces
/// `alpha` by the ratio at the minimiser, stopping when the minimum is exactly 0.
pub fn solve_ratio(inst: &CutInstance, t: &TreeDecomposition) -> Result<LiftedSolution> {
    let (lp, index) = build_lifted_lp(inst, t)?;
    let mut solver = Solver::new(&lp)?;

    // The product of uniform distributions is feasible and separates every
    // demand with probability 1/2, so it seeds the iteration with D > 0.
    let mut x: Vec<Rational> = index
        .blocks
        .iter()
        .flat_map(|b| std::iter::repeat_n(Rational::new(1.into(), b.size().into()), b.size()))
        .collect();
    let d0 = dot(&index.denominator, &x);
    if !d0.is_positive() {
        return Err(Error::DegenerateDenominator);
    }
    let mut alpha = dot(&index.numerator, &x) / d0;
    let mut sequence = vec![alpha.clone()];
    loop {
        let objective: Vec<Rational> =
            index.numerator.iter().zip(&index.denominator).map(|(n, d)| n - &alpha * d).collect();
        let sol = solver.minimize(&objective)?;
        if !sol.value.is_negative() {
            break;
        }
        let d = dot(&index.denominator, &sol.x);
        if !d.is_positive() {
            return Err(Error::DegenerateDenominator);
        }
        alpha = dot(&index.numerator, &sol.x) / d;
        sequence.push(alpha.clone());
        x = sol.x;
    }

    let distributions: Vec<LocalDistribution> = index
        .blocks
        .iter()
        .map(|b| LocalDistribution { domain: b.domain.clone(), probs: x[b.offset..b.offset + b.size()].to_vec() })
        .collect();
    let bag_marginals = (0..t.num_nodes())
        .map(|i| distributions[i * index.num_demands].marginal(t.bag(i)))
        .collect::<Result<Vec<_>>>()?;
    let solution = LiftedSolution {
        distributions,
        bag_marginals,
        alpha,
        alpha_sequence: sequence,
        demand_pairs: inst.dem_edges().iter().map(|d| (d.u, d.v)).collect(),
        bags: t.bags().to_vec(),
        pivots: solver.total_pivots(),
        index,
    };
    solution.check_consistency(t)?;
    Ok(solution)
}

impl LiftedSolution {
    pub fn distribution(&self, node: NodeId, demand: usize) -> &LocalDistribution {
        &self.distributions[node * self.index.num_demands + demand]
    }

    pub fn demand_index(&self, u: VertexId, v: VertexId) -> Option<usize> {
        self.demand_pairs.iter().position(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u))
    }

    /// Separation probability of `u, v` under the local distributions.
    pub fn lpcut(&self, u: VertexId, v: VertexId) -> Result<Rational> {
        if u == v {
            return Ok(Rational::zero());
        }
        if let Some(e) = self.demand_index(u, v) {
            return self.distribution(0, e).separation(u, v);
        }
        let node = self
            .bags
            .iter()
            .position(|b| b.binary_search(&u).is_ok() && b.binary_search(&v).is_ok())
            .ok_or(Error::PairNotCovered(u, v))?;
        self.bag_marginals[node].separation(u, v)
    }

    /// Marginal onto `B_i`, checking that every demand's distribution at `i` agrees.
    pub fn bag_marginal(&self, node: NodeId) -> Result<LocalDistribution> {
        let first = &self.bag_marginals[node];
        for e in 1..self.index.num_demands {
            if self.distribution(node, e).marginal(&self.bags[node])? != *first {
                return Err(Error::InconsistencyDetected(format!("demands 0 and {e} disagree on bag {node}")));
            }
        }
        Ok(first.clone())
    }

    /// Marginal onto `set` taken from the distribution for `demand` at `node`.
    pub fn marginal_at(&self, node: NodeId, demand: usize, set: &[VertexId]) -> Result<LocalDistribution> {
        self.distribution(node, demand).marginal(set)
    }

    /// Exact normalisation, symmetry, tree-edge and same-node agreement checks.
    pub fn check_consistency(&self, t: &TreeDecomposition) -> Result<()> {
        let fail = |msg: String| Err(Error::InconsistencyDetected(msg));
        for (k, d) in self.distributions.iter().enumerate() {
            if d.probs.iter().any(|p| p.is_negative()) || d.probs.iter().sum::<Rational>() != Rational::one() {
                return fail(format!("block {k} is not a probability distribution"));
            }
            if !d.is_symmetric() {
                return fail(format!("block {k} is not mirror-symmetric"));
            }
        }
        for &(i, j) in t.tree_edges() {
            let shared: Vec<VertexId> = t.bag(i).iter().copied().filter(|v| t.contains(j, *v)).collect();
            for (e, &(u, v)) in self.demand_pairs.iter().enumerate() {
                let set = sorted_union(&shared, &[u, v]);
                if self.distribution(i, e).marginal(&set)? != self.distribution(j, e).marginal(&set)? {
                    return fail(format!("nodes {i} and {j} disagree for demand {e}"));
                }
            }
        }
        for i in 0..t.num_nodes() {
            self.bag_marginal(i)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "alpha": to_ratio_string(&self.alpha),
            "alpha_sequence": self.alpha_sequence.iter().map(to_ratio_string).collect::<Vec<_>>(),
            "bag_marginals": self.bag_marginals.iter().map(LocalDistribution::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Assignment probabilities of a distribution keyed by mask, for quick lookup.
pub fn mask_table(d: &LocalDistribution) -> HashMap<u64, Rational> {
    d.probs.iter().enumerate().filter(|(_, p)| !p.is_zero()).map(|(m, p)| (m as u64, p.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{attach_bag_local_demands, attach_random_demands, generate_partial_ktree, WeightedEdge};
    use crate::oracle::brute_force;
    use crate::rational::{frac, int};
    use crate::treedec::min_fill_decomposition;
    use proptest::prelude::*;

    fn unit(n: usize, caps: &[(usize, usize)], dems: &[(usize, usize)]) -> CutInstance {
        CutInstance::new(
            n,
            caps.iter().map(|&(u, v)| WeightedEdge::unit(u, v)).collect(),
            dems.iter().map(|&(u, v)| WeightedEdge::unit(u, v)).collect(),
        )
        .unwrap()
    }

    fn p3() -> (CutInstance, TreeDecomposition) {
        let inst = unit(3, &[(0, 1), (1, 2)], &[(0, 2)]);
        let t = TreeDecomposition::new(vec![vec![0, 1], vec![1, 2]], vec![(0, 1)], 0).unwrap();
        (inst, t)
    }

    #[test]
    fn variable_counts() {
        let inst = unit(2, &[(0, 1)], &[(0, 1)]);
        let t = TreeDecomposition::single(vec![0, 1]);
        let (lp, index) = build_lifted_lp(&inst, &t).unwrap();
        assert_eq!(lp.num_vars, 4);
        assert_eq!(index.blocks.len(), 1);
        // Symmetry ties the four assignments into two classes; normalisation fixes one more.
        let solver = Solver::new(&lp).unwrap();
        assert_eq!(solver.reduced_size(), (1, 2));

        let (inst, t) = p3();
        let (lp, _) = build_lifted_lp(&inst, &t).unwrap();
        assert_eq!(lp.num_vars, 16);
        for row in &lp.rows {
            if row.rhs.is_zero() {
                assert!(row.coeffs.iter().all(|(_, a)| a.abs() == int(1)));
            }
        }
    }

    #[test]
    fn p3_matches_hand_solution() {
        let (inst, t) = p3();
        let sol = solve_ratio(&inst, &t).unwrap();
        // Both blocks cover all three vertices, so the LP is exact here.
        assert_eq!(sol.alpha, int(1));
        assert_eq!(sol.lpcut(0, 0).unwrap(), int(0));
        let n: Rational = sol.lpcut(0, 1).unwrap() + sol.lpcut(1, 2).unwrap();
        assert_eq!(n / sol.lpcut(0, 2).unwrap(), int(1));
        let m = sol.bag_marginal(0).unwrap();
        assert_eq!(m.marginal(&[1]).unwrap().probs, vec![frac(1, 2), frac(1, 2)]);
        assert!(matches!(sol.lpcut(0, 3), Err(Error::PairNotCovered(0, 3))));
    }

    #[test]
    fn single_bag_is_exact_on_k3() {
        let inst = unit(3, &[(0, 1), (1, 2), (0, 2)], &[(0, 1), (1, 2), (0, 2)]);
        let sol = solve_ratio(&inst, &TreeDecomposition::single(vec![0, 1, 2])).unwrap();
        assert_eq!(sol.alpha, int(1));
    }

    #[test]
    fn scaling_capacities_scales_alpha() {
        let (g, t) = generate_partial_ktree(8, 2, 0.9, 3).unwrap();
        let inst = attach_random_demands(&g, 2, 5).unwrap();
        let a = solve_ratio(&inst, &t).unwrap().alpha;
        let b = solve_ratio(&inst.scaled(&int(3), &int(1)).unwrap(), &t).unwrap().alpha;
        assert_eq!(b, a * int(3));
    }

    #[test]
    fn marginal_tower_and_uniform() {
        let d = LocalDistribution::uniform(vec![2, 5, 7]);
        assert!(d.is_symmetric());
        assert_eq!(d.separation(2, 7).unwrap(), frac(1, 2));
        let m = d.marginal(&[5, 7]).unwrap();
        assert_eq!(m.marginal(&[7]).unwrap(), d.marginal(&[7]).unwrap());
        assert_eq!(d.marginal(&[7]).unwrap().probs, vec![frac(1, 2), frac(1, 2)]);
        assert!(LocalDistribution::new(vec![1], vec![int(1), int(1)]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn relaxation_is_sound_and_consistent(n in 4usize..9, k in 1usize..3, seed in 0u64..400, m_d in 1usize..3, local in any::<bool>()) {
            prop_assume!(n > k);
            let (g, _) = generate_partial_ktree(n, k, 0.8, seed).unwrap();
            let t = min_fill_decomposition(&g);
            let inst = if local {
                attach_bag_local_demands(&g, &t, m_d, seed + 1).unwrap()
            } else {
                attach_random_demands(&g, m_d, seed + 1).unwrap()
            };
            let sol = solve_ratio(&inst, &t).unwrap();
            sol.check_consistency(&t).unwrap();
            prop_assert!(sol.alpha_sequence.windows(2).all(|w| w[1] < w[0]));
            let phi = brute_force(&inst).unwrap().phi;
            prop_assert!(sol.alpha <= phi, "alpha {} > phi {}", sol.alpha, phi);
            for b in &sol.bag_marginals {
                for &v in b.domain() {
                    prop_assert_eq!(b.marginal(&[v]).unwrap().probs().to_vec(), vec![frac(1, 2), frac(1, 2)]);
                }
            }
            if local {
                prop_assert_eq!(sol.alpha, phi);
            }
        }
    }
}
