//! End-to-end runs shared by the command-line tool, the bench harness, and tests.

use std::time::Instant;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::combdiam::{combinatorial_diameter, simplify_exact, simplify_greedy, DecPath, Method, DEFAULT_EXACT_BUDGET};
use crate::error::{Error, Result};
use crate::instance::{attach_bag_local_demands, attach_random_demands, generate_partial_ktree, CutInstance};
use crate::lifting::{build_lifted_lp, solve_ratio, LiftedSolution};
use crate::lp::LinearProgram;
use crate::markov::{build_h, check_bounds, BoundReport};
use crate::oracle::brute_force;
use crate::rational::{int, to_f64, to_ratio_string, Rational};
use crate::rounding::{algcut_on_path, pair_path, repeated_round};
use crate::shallow::{bridges, certified_diameter_bound, highways, super_highways, Mode, Shallow};
use crate::treedec::{balance, min_fill_decomposition, validate, TreeDecomposition};

/// Oracle runs by default only up to this many vertices.
pub const DEFAULT_ORACLE_LIMIT: usize = 20;
/// Pairs replayed when certifying a diameter bound.
pub const CERTIFY_PAIRS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransformSpec {
    pub mode: Option<Mode>,
    pub lambda: usize,
    pub q: usize,
}

impl Default for TransformSpec {
    fn default() -> Self {
        Self { mode: None, lambda: 1, q: 1 }
    }
}

pub fn apply_transform(t: &TreeDecomposition, spec: &TransformSpec) -> Option<Shallow> {
    spec.mode.map(|mode| match mode {
        Mode::Bridges => bridges(t, spec.lambda),
        Mode::Highways => highways(t, spec.lambda),
        Mode::SuperHighways => super_highways(t, spec.q),
    })
}

/// Decomposition after optional balancing and transformation, validated against the instance.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub base: TreeDecomposition,
    pub used: TreeDecomposition,
    pub shallow: Option<Shallow>,
}

pub fn prepare(
    inst: &CutInstance,
    dec: Option<TreeDecomposition>,
    balanced: bool,
    spec: &TransformSpec,
) -> Result<Prepared> {
    let mut base = dec.unwrap_or_else(|| min_fill_decomposition(inst.graph()));
    let report = validate(inst.graph(), &base);
    if !report.is_valid() {
        return Err(Error::InvalidDecomposition(format!("{:?}", report.violations)));
    }
    if balanced {
        base = balance(&base);
    }
    let shallow = apply_transform(&base, spec);
    let used = shallow.as_ref().map_or_else(|| base.clone(), |s| s.decomposition.clone());
    let report = validate(inst.graph(), &used);
    if !report.is_valid() {
        return Err(Error::InvalidDecomposition(format!("transformed: {:?}", report.violations)));
    }
    Ok(Prepared { base, used, shallow })
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub transform: TransformSpec,
    pub balance: bool,
    pub trials: usize,
    pub seed: u64,
    pub oracle_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            transform: TransformSpec::default(),
            balance: false,
            trials: 400,
            seed: 0,
            oracle_limit: DEFAULT_ORACLE_LIMIT,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub alpha: Rational,
    pub cut: Vec<u8>,
    pub sparsity: Rational,
    pub oracle_sparsity: Option<Rational>,
    pub diameter_used: usize,
    pub solution: LiftedSolution,
    pub prepared: Prepared,
}

impl SolveReport {
    pub fn to_json(&self) -> Value {
        json!({
            "alpha": to_ratio_string(&self.alpha),
            "cut": self.cut,
            "sparsity": to_ratio_string(&self.sparsity),
            "oracle_sparsity": self.oracle_sparsity.as_ref().map(to_ratio_string),
            "diameter_used": self.diameter_used,
        })
    }
}

/// The lifted LP for the decomposition `solve` would use, for external cross-checks.
pub fn lifted_lp(inst: &CutInstance, dec: Option<TreeDecomposition>, opts: &SolveOptions) -> Result<LinearProgram> {
    let prepared = prepare(inst, dec, opts.balance, &opts.transform)?;
    let (mut lp, index) = build_lifted_lp(inst, &prepared.used)?;
    // Dump the linearised objective at the starting ratio total-cap / total-demand.
    let cap: Rational = inst.cap_edges().iter().map(|e| e.w.clone()).sum();
    let dem: Rational = inst.dem_edges().iter().map(|e| e.w.clone()).sum();
    let alpha = cap / dem;
    lp.set_objective(index.numerator.iter().zip(&index.denominator).map(|(n, d)| n - &alpha * d).collect());
    Ok(lp)
}

pub fn solve(inst: &CutInstance, dec: Option<TreeDecomposition>, opts: &SolveOptions) -> Result<SolveReport> {
    let prepared = prepare(inst, dec, opts.balance, &opts.transform)?;
    let solution = solve_ratio(inst, &prepared.used)?;
    let rounded = repeated_round(inst, &prepared.used, &solution, opts.trials, opts.seed, &int(1))?;
    let oracle_sparsity = if inst.n() <= opts.oracle_limit { Some(brute_force(inst)?.phi) } else { None };
    let diameter_used = combinatorial_diameter(&prepared.used, Method::Greedy, 0)?.diameter;
    Ok(SolveReport {
        alpha: solution.alpha.clone(),
        cut: rounded.best.bits(),
        sparsity: rounded.best_sparsity,
        oracle_sparsity,
        diameter_used,
        solution,
        prepared,
    })
}

#[derive(Debug, Clone)]
pub struct PairDiagnosis {
    pub s: usize,
    pub t: usize,
    pub raw_length: usize,
    /// Combinatorial length of the simplified path (edges).
    pub length: usize,
    pub exact: bool,
    pub lpcut: Rational,
    pub algcut: Rational,
    /// `lpcut / (algcut * max(1, length)^2)`; `None` when `algcut = 0 < lpcut`.
    pub fitted_c: Option<Rational>,
    pub report: BoundReport,
}

impl PairDiagnosis {
    pub fn to_json(&self) -> Value {
        json!({
            "s": self.s,
            "t": self.t,
            "raw_length": self.raw_length,
            "length": self.length,
            "length_exact": self.exact,
            "lpcut": to_ratio_string(&self.lpcut),
            "algcut": to_ratio_string(&self.algcut),
            "fitted_c": self.fitted_c.as_ref().map(to_ratio_string),
            "checks": self.report.to_json(),
        })
    }
}

/// Flow, cut, and potential checks plus the fitted approximation constant for every demand pair.
pub fn diagnose_pairs(
    inst: &CutInstance,
    t: &TreeDecomposition,
    sol: &LiftedSolution,
    budget: usize,
) -> Result<Vec<PairDiagnosis>> {
    inst.dem_edges()
        .par_iter()
        .map(|d| {
            let raw = DecPath::from_nodes(t, pair_path(t, d.u, d.v)?);
            let (path, exact) = match simplify_exact(&raw, budget) {
                Ok(p) => (p, true),
                Err(Error::Exceeded { .. }) => (simplify_greedy(&raw).final_path, false),
                Err(e) => return Err(e),
            };
            let h = build_h(sol, path.nodes(), d.u, d.v)?;
            let report = check_bounds(&h, sol)?;
            let lpcut = sol.lpcut(d.u, d.v)?;
            let algcut = algcut_on_path(sol, path.nodes(), d.u, d.v)?;
            let l = path.len().max(1) as i64;
            let fitted_c = if lpcut.is_zero() {
                Some(Rational::zero())
            } else if algcut.is_positive() {
                Some(&lpcut / (&algcut * int(l * l)))
            } else {
                None
            };
            Ok(PairDiagnosis {
                s: d.u,
                t: d.v,
                raw_length: raw.len(),
                length: path.len(),
                exact,
                lpcut,
                algcut,
                fitted_c,
                report,
            })
        })
        .collect()
}

/// Largest fitted constant; `None` if some pair has `algcut = 0 < lpcut`.
pub fn max_fitted_c(pairs: &[PairDiagnosis]) -> Option<Rational> {
    pairs.iter().try_fold(Rational::zero(), |acc, p| p.fitted_c.as_ref().map(|c| acc.max(c.clone())))
}

pub fn diagnose(
    inst: &CutInstance,
    dec: Option<TreeDecomposition>,
    balanced: bool,
    spec: &TransformSpec,
    budget: usize,
) -> Result<Value> {
    let prepared = prepare(inst, dec, balanced, spec)?;
    let sol = solve_ratio(inst, &prepared.used)?;
    let pairs = diagnose_pairs(inst, &prepared.used, &sol, budget)?;
    Ok(json!({
        "alpha": to_ratio_string(&sol.alpha),
        "max_fitted_c": max_fitted_c(&pairs).as_ref().map(to_ratio_string),
        "pairs": pairs.iter().map(PairDiagnosis::to_json).collect::<Vec<_>>(),
    }))
}

fn default_keep() -> f64 {
    0.8
}
fn default_demands() -> usize {
    2
}
fn default_one() -> usize {
    1
}
fn default_trials() -> usize {
    200
}
fn default_true() -> bool {
    true
}

/// One line of a bench spec; expands to one row per seed.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchEntry {
    pub n: usize,
    pub k: usize,
    #[serde(default = "default_keep")]
    pub keep_prob: f64,
    #[serde(default = "default_demands")]
    pub demands: usize,
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default = "default_one")]
    pub lambda: usize,
    #[serde(default = "default_one")]
    pub q: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_true")]
    pub balance: bool,
    /// Solve the LP and round; defaults to `n <= 14`.
    #[serde(default)]
    pub solve: Option<bool>,
}

pub const BENCH_COLUMNS: [&str; 16] = [
    "id",
    "n",
    "k",
    "mode",
    "lambda",
    "q",
    "seed",
    "width_before",
    "width_after",
    "depth",
    "certified_diameter",
    "measured_diameter",
    "alpha",
    "rounded_sparsity",
    "phi",
    "max_fitted_c",
];

pub fn parse_bench_spec(text: &str) -> Result<Vec<BenchEntry>> {
    let entries: Vec<BenchEntry> = serde_json::from_str(text)?;
    for e in &entries {
        if let Some(m) = &e.mode {
            if m != "none" {
                m.parse::<Mode>()?;
            }
        }
        if e.lambda == 0 || e.q == 0 {
            return Err(Error::InvalidParams("lambda and q must be at least 1".into()));
        }
    }
    Ok(entries)
}

fn bench_row(id: usize, e: &BenchEntry, seed: u64, timings: bool) -> Result<Vec<String>> {
    let start = Instant::now();
    let (g, t0) = generate_partial_ktree(e.n, e.k, e.keep_prob, seed)?;
    let inst = attach_random_demands(&g, e.demands, seed)?;
    let mode = match e.mode.as_deref() {
        None | Some("none") => None,
        Some(m) => Some(m.parse::<Mode>()?),
    };
    let spec = TransformSpec { mode, lambda: e.lambda, q: e.q };
    let prepared = prepare(&inst, Some(t0), e.balance, &spec)?;
    let certified = match &prepared.shallow {
        Some(s) => certified_diameter_bound(s, CERTIFY_PAIRS)?.bound.to_string(),
        None => String::new(),
    };
    let measured = combinatorial_diameter(&prepared.used, Method::Greedy, 0)?.diameter;
    let mut solved = vec![String::new(); 4];
    if e.solve.unwrap_or(e.n <= 14) {
        let sol = solve_ratio(&inst, &prepared.used)?;
        let rounded = repeated_round(&inst, &prepared.used, &sol, e.trials, seed, &int(1))?;
        solved[0] = to_ratio_string(&sol.alpha);
        solved[1] = to_ratio_string(&rounded.best_sparsity);
        if inst.n() <= DEFAULT_ORACLE_LIMIT {
            solved[2] = to_ratio_string(&brute_force(&inst)?.phi);
        }
        let pairs = diagnose_pairs(&inst, &prepared.used, &sol, DEFAULT_EXACT_BUDGET)?;
        solved[3] = max_fitted_c(&pairs).map_or_else(|| "inf".to_string(), |c| format!("{:.6}", to_f64(&c)));
    }
    let mut row = vec![
        id.to_string(),
        e.n.to_string(),
        e.k.to_string(),
        mode.map_or("none", Mode::as_str).to_string(),
        e.lambda.to_string(),
        e.q.to_string(),
        seed.to_string(),
        prepared.base.width().to_string(),
        prepared.used.width().to_string(),
        prepared.used.depth().to_string(),
        certified,
        measured.to_string(),
    ];
    row.extend(solved);
    if timings {
        row.push(format!("{:.3}", start.elapsed().as_secs_f64() * 1000.0));
    }
    Ok(row)
}

/// CSV table with one row per (entry, seed); wall time only when `timings` is set.
pub fn bench(entries: &[BenchEntry], timings: bool) -> Result<String> {
    let jobs: Vec<(usize, &BenchEntry, u64)> = entries
        .iter()
        .flat_map(|e| e.seeds.iter().map(move |&s| (e, s)))
        .enumerate()
        .map(|(i, (e, s))| (i, e, s))
        .collect();
    let rows = jobs.par_iter().map(|&(i, e, s)| bench_row(i, e, s, timings)).collect::<Result<Vec<_>>>()?;
    let mut header: Vec<&str> = BENCH_COLUMNS.to_vec();
    if timings {
        header.push("wall_ms");
    }
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Generated instance plus the generator's own decomposition.
pub fn generate(
    n: usize,
    k: usize,
    keep_prob: f64,
    demands: usize,
    seed: u64,
    bag_local: bool,
) -> Result<(CutInstance, TreeDecomposition)> {
    let (g, t) = generate_partial_ktree(n, k, keep_prob, seed)?;
    let inst = if bag_local {
        attach_bag_local_demands(&g, &t, demands, seed)?
    } else {
        attach_random_demands(&g, demands, seed)?
    };
    Ok((inst, t))
}

/// Decomposition JSON with an extra `stats` object.
pub fn decomposition_with_stats(t: &TreeDecomposition, extra: Value) -> Result<Value> {
    let mut v: Value = serde_json::from_str(&t.to_json())?;
    let mut stats = json!({ "width": t.width(), "depth": t.depth() });
    if let (Value::Object(s), Value::Object(e)) = (&mut stats, extra) {
        s.extend(e);
    }
    v.as_object_mut().expect("decomposition JSON is an object").insert("stats".into(), stats);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_pipeline_on_small_instance() {
        let (inst, t) = generate(9, 2, 0.8, 2, 4, false).unwrap();
        let opts = SolveOptions {
            transform: TransformSpec { mode: Some(Mode::Highways), lambda: 2, q: 1 },
            balance: true,
            trials: 50,
            seed: 1,
            ..Default::default()
        };
        let report = solve(&inst, Some(t.clone()), &opts).unwrap();
        let phi = report.oracle_sparsity.clone().unwrap();
        assert!(report.alpha <= phi && phi <= report.sparsity);
        assert!(report.diameter_used <= 3);
        let again = solve(&inst, Some(t), &opts).unwrap();
        assert_eq!(report.to_json(), again.to_json());
    }

    #[test]
    fn bench_header_and_rows() {
        assert_eq!(bench(&[], false).unwrap(), BENCH_COLUMNS.join(",") + "\n");
        let entries =
            parse_bench_spec(r#"[{"n": 10, "k": 2, "mode": "highways", "lambda": 2, "seeds": [1, 2, 3]}]"#).unwrap();
        let csv = bench(&entries, false).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(csv, bench(&entries, false).unwrap());
        for line in csv.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), BENCH_COLUMNS.len());
            assert!(cols[11].parse::<usize>().unwrap() <= 3);
        }
    }

    #[test]
    fn transform_output_round_trips() {
        let (_, t) = generate(12, 2, 0.8, 1, 2, false).unwrap();
        let v = decomposition_with_stats(&t, json!({"certified_diameter": 3})).unwrap();
        let back = TreeDecomposition::from_json(&v.to_string()).unwrap();
        assert_eq!(back.bags(), t.without_empty_bags().bags());
        assert_eq!(v["stats"]["certified_diameter"], 3);
    }
}
