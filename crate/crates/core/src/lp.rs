//! Exact rational linear programming: `min cᵀx` subject to `Ax = b`, `x ≥ 0`.
//!
//! Two-phase primal simplex on a sparse tableau. Entering columns follow
//! Dantzig's rule and switch to Bland's rule during long degenerate stretches,
//! which rules out cycling. A presolve pass merges columns tied by `x_a = x_b`
//! rows and removes empty and duplicate rows. A [`Solver`] keeps its basis
//! between objectives, so a sequence of objectives over one feasible region
//! warm-starts from the previous optimum.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::{to_ratio_string, Rational};

/// Degenerate pivots tolerated under Dantzig pricing before switching to Bland.
const DEGENERATE_STREAK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<(usize, Rational)>,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub rows: Vec<LpRow>,
    pub objective: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<Rational>,
    pub value: Rational,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, rows: Vec::new(), objective: vec![Rational::zero(); num_vars] }
    }

    /// Adds `Σ coeffs = rhs`; repeated columns are summed and zeros dropped.
    pub fn add_row(&mut self, coeffs: impl IntoIterator<Item = (usize, Rational)>, rhs: Rational) {
        self.rows.push(LpRow { coeffs: normalize(coeffs), rhs });
    }

    pub fn set_objective(&mut self, objective: Vec<Rational>) {
        assert_eq!(objective.len(), self.num_vars);
        self.objective = objective;
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Whether `x` satisfies every row and is non-negative.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars
            && x.iter().all(|v| !v.is_negative())
            && self.rows.iter().all(|r| r.coeffs.iter().map(|(j, a)| a * &x[*j]).sum::<Rational>() == r.rhs)
    }

    /// Sparse triplet form: `{"num_vars", "num_rows", "objective", "entries": [[row, col, "p/q"]], "rhs"}`.
    pub fn to_triplet_json(&self) -> Value {
        let entries: Vec<Value> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.coeffs.iter().map(move |(j, a)| json!([i, j, to_ratio_string(a)])))
            .collect();
        json!({
            "num_vars": self.num_vars,
            "num_rows": self.rows.len(),
            "objective": self.objective.iter().map(to_ratio_string).collect::<Vec<_>>(),
            "entries": entries,
            "rhs": self.rows.iter().map(|r| to_ratio_string(&r.rhs)).collect::<Vec<_>>(),
        })
    }
}

fn normalize(coeffs: impl IntoIterator<Item = (usize, Rational)>) -> Vec<(usize, Rational)> {
    let mut v: Vec<(usize, Rational)> = coeffs.into_iter().collect();
    v.sort_by_key(|(j, _)| *j);
    let mut out: Vec<(usize, Rational)> = Vec::with_capacity(v.len());
    for (j, a) in v {
        match out.last_mut() {
            Some((k, b)) if *k == j => *b += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|(_, a)| !a.is_zero());
    out
}

/// Column merging and row cleanup, with the maps needed to undo it.
#[derive(Debug, Clone)]
struct Presolve {
    /// Original column to reduced column.
    column_of: Vec<usize>,
    num_reduced: usize,
    rows: Vec<LpRow>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl Presolve {
    fn new(lp: &LinearProgram) -> Result<Self> {
        let mut parent: Vec<usize> = (0..lp.num_vars).collect();
        for r in &lp.rows {
            if let [(a, ca), (b, cb)] = r.coeffs.as_slice() {
                if r.rhs.is_zero() && (ca + cb).is_zero() {
                    let (ra, rb) = (find(&mut parent, *a), find(&mut parent, *b));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
        let mut ids: HashMap<usize, usize> = HashMap::new();
        let column_of: Vec<usize> = (0..lp.num_vars)
            .map(|j| {
                let root = find(&mut parent, j);
                let next = ids.len();
                *ids.entry(root).or_insert(next)
            })
            .collect();
        let mut rows = Vec::new();
        let mut seen: HashMap<Vec<(usize, Rational)>, Rational> = HashMap::new();
        for r in &lp.rows {
            let mut coeffs = normalize(r.coeffs.iter().map(|(j, a)| (column_of[*j], a.clone())));
            let mut rhs = r.rhs.clone();
            if coeffs.is_empty() {
                if rhs.is_zero() {
                    continue;
                }
                return Err(Error::Infeasible);
            }
            // Scale so the leading coefficient is 1; duplicates then compare equal.
            let lead = coeffs[0].1.clone();
            if !lead.is_one() {
                for (_, a) in coeffs.iter_mut() {
                    *a /= &lead;
                }
                rhs /= &lead;
            }
            match seen.get(&coeffs) {
                Some(prev) if *prev == rhs => continue,
                Some(_) => return Err(Error::Infeasible),
                None => {
                    seen.insert(coeffs.clone(), rhs.clone());
                    rows.push(LpRow { coeffs, rhs });
                }
            }
        }
        Ok(Self { column_of, num_reduced: ids.len(), rows })
    }

    fn reduce_objective(&self, c: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.num_reduced];
        for (j, v) in c.iter().enumerate() {
            out[self.column_of[j]] += v;
        }
        out
    }

    fn expand(&self, x: &[Rational]) -> Vec<Rational> {
        self.column_of.iter().map(|&k| x[k].clone()).collect()
    }
}

type SparseRow = Vec<(usize, Rational)>;

fn coef(row: &SparseRow, col: usize) -> Option<&Rational> {
    row.binary_search_by_key(&col, |(j, _)| *j).ok().map(|i| &row[i].1)
}

/// `row - factor * pivot`, both sorted by column.
fn axpy(row: &SparseRow, factor: &Rational, pivot: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let (mut i, mut k) = (0, 0);
    while i < row.len() || k < pivot.len() {
        let take_row = k >= pivot.len() || (i < row.len() && row[i].0 < pivot[k].0);
        let take_pivot = i >= row.len() || (k < pivot.len() && pivot[k].0 < row[i].0);
        if take_row {
            out.push(row[i].clone());
            i += 1;
        } else if take_pivot {
            out.push((pivot[k].0, -(factor * &pivot[k].1)));
            k += 1;
        } else {
            let v = &row[i].1 - factor * &pivot[k].1;
            if !v.is_zero() {
                out.push((row[i].0, v));
            }
            i += 1;
            k += 1;
        }
    }
    out
}

/// Sparse simplex tableau in canonical form for its current basis.
#[derive(Debug, Clone)]
struct Tableau {
    rows: Vec<SparseRow>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    num_cols: usize,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize, reduced: &mut [Rational]) {
        let p = coef(&self.rows[r], c).expect("pivot entry is nonzero").clone();
        if !p.is_one() {
            for (_, a) in self.rows[r].iter_mut() {
                *a /= &p;
            }
            self.rhs[r] /= &p;
        }
        let prow = std::mem::take(&mut self.rows[r]);
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            if let Some(f) = coef(&self.rows[i], c).cloned() {
                self.rows[i] = axpy(&self.rows[i], &f, &prow);
                self.rhs[i] -= &f * &prhs;
            }
        }
        let d = reduced[c].clone();
        if !d.is_zero() {
            for (j, a) in &prow {
                reduced[*j] -= &d * a;
            }
        }
        self.rows[r] = prow;
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs primal simplex to optimality for the given reduced costs.
    /// Columns at or beyond `limit` never enter.
    fn optimize(&mut self, reduced: &mut [Rational], limit: usize) -> Result<()> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_STREAK;
            let entering = if bland {
                (0..limit).find(|&j| reduced[j].is_negative())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..limit {
                    if reduced[j].is_negative() && best.is_none_or(|b| reduced[j] < reduced[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                if let Some(a) = coef(&self.rows[i], c) {
                    if a.is_positive() {
                        let ratio = &self.rhs[i] / a;
                        let better = match &leave {
                            None => true,
                            Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                        };
                        if better {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
            let Some((r, ratio)) = leave else { return Err(Error::Unbounded) };
            if ratio.is_zero() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c, reduced);
        }
    }

    fn solution(&self, n: usize) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rhs[i].clone();
            }
        }
        x
    }
}

/// Feasible basis for one constraint system, reusable across objectives.
#[derive(Debug, Clone)]
pub struct Solver {
    presolve: Presolve,
    tableau: Tableau,
    num_vars: usize,
}

impl Solver {
    /// Presolves and finds an initial feasible basis; fails with `Infeasible`.
    pub fn new(lp: &LinearProgram) -> Result<Self> {
        let presolve = Presolve::new(lp)?;
        let n = presolve.num_reduced;
        let m = presolve.rows.len();
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (i, r) in presolve.rows.iter().enumerate() {
            let flip = r.rhs.is_negative();
            let mut row: SparseRow =
                r.coeffs.iter().map(|(j, a)| (*j, if flip { -a.clone() } else { a.clone() })).collect();
            row.push((n + i, Rational::one()));
            rows.push(row);
            rhs.push(if flip { -r.rhs.clone() } else { r.rhs.clone() });
        }
        let mut tableau = Tableau { rows, rhs, basis: (n..n + m).collect(), num_cols: n + m, pivots: 0 };

        let mut reduced = vec![Rational::zero(); n + m];
        for row in &tableau.rows {
            for (j, a) in row {
                if *j < n {
                    reduced[*j] -= a;
                }
            }
        }
        tableau.optimize(&mut reduced, n)?;
        let residual: Rational =
            tableau.basis.iter().zip(&tableau.rhs).filter(|(b, _)| **b >= n).map(|(_, v)| v.clone()).sum();
        if residual.is_positive() {
            return Err(Error::Infeasible);
        }

        // Pivot remaining artificials out, dropping rows that turn out redundant.
        let mut i = 0;
        while i < tableau.rows.len() {
            if tableau.basis[i] >= n {
                match tableau.rows[i].iter().find(|(j, _)| *j < n).map(|(j, _)| *j) {
                    Some(c) => {
                        let mut dummy = vec![Rational::zero(); tableau.num_cols];
                        tableau.pivot(i, c, &mut dummy);
                    }
                    None => {
                        tableau.rows.remove(i);
                        tableau.rhs.remove(i);
                        tableau.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for row in tableau.rows.iter_mut() {
            row.retain(|(j, _)| *j < n);
        }
        tableau.num_cols = n;
        Ok(Self { presolve, tableau, num_vars: lp.num_vars })
    }

    /// Minimises `objective` from the current basis and keeps the optimal basis.
    pub fn minimize(&mut self, objective: &[Rational]) -> Result<LpSolution> {
        assert_eq!(objective.len(), self.num_vars);
        let c = self.presolve.reduce_objective(objective);
        let mut reduced = c.clone();
        for (i, &b) in self.tableau.basis.iter().enumerate() {
            let cb = &c[b];
            if !cb.is_zero() {
                for (j, a) in &self.tableau.rows[i] {
                    reduced[*j] -= cb * a;
                }
            }
        }
        let start = self.tableau.pivots;
        self.tableau.optimize(&mut reduced, self.tableau.num_cols)?;
        let xr = self.tableau.solution(self.presolve.num_reduced);
        let value = c.iter().zip(&xr).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x: self.presolve.expand(&xr), value, pivots: self.tableau.pivots - start })
    }

    /// Rows and columns left after presolve.
    pub fn reduced_size(&self) -> (usize, usize) {
        (self.tableau.rows.len(), self.presolve.num_reduced)
    }

    pub fn total_pivots(&self) -> usize {
        self.tableau.pivots
    }
}

/// Optimal solution of `lp`; `Infeasible` or `Unbounded` otherwise.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    Solver::new(lp)?.minimize(&lp.objective)
}
