//! Brute-force ground truth: exact sparsest cut and exact treewidth for small inputs.

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::instance::{cut_totals, Assignment, CutInstance, Graph};
use crate::rational::{to_ratio_string, Rational};

pub const MAX_ORACLE_VERTICES: usize = 24;
pub const MAX_TREEWIDTH_VERTICES: usize = 10;

/// Low bits enumerated sequentially inside each parallel chunk.
const CHUNK_BITS: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `true` marks the side containing vertex 0.
    pub cut: Assignment,
    pub phi: Rational,
    pub enumerated: u64,
}

impl OracleResult {
    pub fn to_json(&self) -> Value {
        json!({
            "phi": to_ratio_string(&self.phi),
            "cut": self.cut.bits(),
            "enumerated": self.enumerated,
        })
    }
}

/// Best (cap, dem, mask) seen; ties keep the smaller mask.
#[derive(Clone, Copy)]
struct Best {
    cap: i128,
    dem: i128,
    mask: u64,
}

impl Best {
    fn better_than(&self, other: &Option<Best>) -> bool {
        match other {
            None => true,
            Some(o) => {
                let (l, r) = (self.cap * o.dem, o.cap * self.dem);
                l < r || (l == r && self.mask < o.mask)
            }
        }
    }
}

/// Integer edge lists scaled by a common denominator, if totals stay small.
type IntEdges = Vec<(usize, usize, i128)>;

fn scaled_edges(inst: &CutInstance) -> Option<(IntEdges, IntEdges)> {
    let lcm = inst
        .cap_edges()
        .iter()
        .chain(inst.dem_edges())
        .fold(num_bigint::BigInt::from(1), |acc, e| acc.lcm(e.w.denom()));
    let scale = |e: &crate::WeightedEdge| -> Option<(usize, usize, i128)> {
        let v = (e.w.numer() * (&lcm / e.w.denom())).to_i128()?;
        Some((e.u, e.v, v))
    };
    let caps: Vec<_> = inst.cap_edges().iter().map(scale).collect::<Option<_>>()?;
    let dems: Vec<_> = inst.dem_edges().iter().map(scale).collect::<Option<_>>()?;
    let limit = i128::from(i64::MAX);
    let total_c: i128 = caps.iter().map(|e| e.2).sum();
    let total_d: i128 = dems.iter().map(|e| e.2).sum();
    (total_c < limit && total_d < limit).then_some((caps, dems))
}

/// Exact sparsest cut by enumerating every vertex set containing vertex 0.
pub fn brute_force(inst: &CutInstance) -> Result<OracleResult> {
    let n = inst.n();
    if n > MAX_ORACLE_VERTICES {
        return Err(Error::TooLarge(format!("oracle supports n <= {MAX_ORACLE_VERTICES}, got {n}")));
    }
    if n < 2 {
        return Err(Error::NoDemandSeparated);
    }
    let free = n - 1;
    let total: u64 = 1 << free;
    let assignment = |mask: u64| {
        let mut values = vec![true; n];
        for (v, slot) in values.iter_mut().enumerate().skip(1) {
            *slot = mask >> (v - 1) & 1 == 1;
        }
        Assignment::over_vertices(values)
    };

    let Some((caps, dems)) = scaled_edges(inst) else {
        return brute_force_rational(inst, total, assignment);
    };
    let mut incident_c = vec![Vec::new(); n];
    let mut incident_d = vec![Vec::new(); n];
    for &(u, v, w) in &caps {
        incident_c[u].push((v, w));
        incident_c[v].push((u, w));
    }
    for &(u, v, w) in &dems {
        incident_d[u].push((v, w));
        incident_d[v].push((u, w));
    }

    let low = free.min(CHUNK_BITS);
    let chunks: u64 = 1 << (free - low);
    let best = (0..chunks)
        .into_par_iter()
        .map(|hi| {
            let mut side = vec![false; n];
            side[0] = true;
            for (v, s) in side.iter_mut().enumerate().skip(low + 1) {
                *s = hi >> (v - 1 - low) & 1 == 1;
            }
            let cross = |edges: &[(usize, usize, i128)], side: &[bool]| -> i128 {
                edges.iter().filter(|(u, v, _)| side[*u] != side[*v]).map(|e| e.2).sum()
            };
            let (mut c, mut d) = (cross(&caps, &side), cross(&dems, &side));
            let mut best: Option<Best> = None;
            let mut consider = |c: i128, d: i128, gray: u64| {
                if d > 0 {
                    let cand = Best { cap: c, dem: d, mask: hi << low | gray };
                    if cand.better_than(&best) {
                        best = Some(cand);
                    }
                }
            };
            consider(c, d, 0);
            for i in 1..(1u64 << low) {
                let bit = i.trailing_zeros() as usize;
                let v = bit + 1;
                side[v] = !side[v];
                for &(u, w) in &incident_c[v] {
                    c += if side[u] != side[v] { w } else { -w };
                }
                for &(u, w) in &incident_d[v] {
                    d += if side[u] != side[v] { w } else { -w };
                }
                consider(c, d, i ^ (i >> 1));
            }
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(x), y) if x.better_than(&y) => Some(x),
                (x, None) => x,
                (_, y) => y,
            },
        );
    let best = best.ok_or(Error::NoDemandSeparated)?;
    Ok(OracleResult {
        cut: assignment(best.mask),
        phi: Rational::new(best.cap.into(), best.dem.into()),
        enumerated: total,
    })
}

fn brute_force_rational(
    inst: &CutInstance,
    total: u64,
    assignment: impl Fn(u64) -> Assignment + Sync,
) -> Result<OracleResult> {
    let best = (0..total)
        .into_par_iter()
        .filter_map(|mask| {
            let f = assignment(mask);
            let (c, d) = cut_totals(inst, &f).ok()?;
            (!d.is_zero()).then(|| (c / d, mask))
        })
        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)))
        .ok_or(Error::NoDemandSeparated)?;
    Ok(OracleResult { cut: assignment(best.1), phi: best.0, enumerated: total })
}

/// Exact treewidth by dynamic programming over elimination prefixes.
pub fn treewidth_exact(g: &Graph) -> Result<usize> {
    let n = g.n();
    if n > MAX_TREEWIDTH_VERTICES {
        return Err(Error::TooLarge(format!("exact treewidth supports n <= {MAX_TREEWIDTH_VERTICES}, got {n}")));
    }
    if n == 0 {
        return Ok(0);
    }
    let adj: Vec<u32> = g.adjacency().iter().map(|nb| nb.iter().fold(0u32, |m, &u| m | 1 << u)).collect();
    // Vertices outside S ∪ {v} reachable from v through S.
    let q = |s: u32, v: usize| -> u32 {
        let mut seen = 1u32 << v;
        let mut stack = vec![v];
        let mut out = 0u32;
        while let Some(x) = stack.pop() {
            let nb = adj[x] & !seen;
            seen |= nb;
            out |= nb & !s;
            let mut inside = nb & s;
            while inside != 0 {
                let y = inside.trailing_zeros() as usize;
                inside &= inside - 1;
                stack.push(y);
            }
        }
        out.count_ones()
    };
    let full = (1u32 << n) - 1;
    let mut tw = vec![i64::MAX; 1 << n];
    tw[0] = i64::MIN;
    for s in 1..=full {
        let mut rest = s;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let prev = s & !(1 << v);
            let cand = tw[prev as usize].max(i64::from(q(prev, v)));
            tw[s as usize] = tw[s as usize].min(cand);
        }
    }
    Ok(tw[full as usize].max(0) as usize)
}
