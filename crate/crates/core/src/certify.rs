//! Integer-infeasibility certificates: "no line-free set of size `T` exists
//! in F_p^3".
//!
//! Each of the `p^2 + p + 1` parallel classes of planes splits a size-`T`
//! set into `p` plane sizes. Counting point pairs over all planes gives one
//! linear equation in the number of classes of each size pattern. Every
//! (p-1)-line lies in `p + 1` planes whose sizes form one of a few
//! multisets; an integer vector orthogonal to all of them turns this into a
//! linear identity between the numbers `P_s` of (line, plane) incidences
//! with planes of size `s`. Bounds on the number of (p-1)-lines in a plane
//! of each size then refute every class-count vector in turn.
//!
//! Sweeps enumerate class-count vectors in colex order (last coordinate most
//! significant) and record the first failing inequality for each, so the
//! certificate is the same for any thread count.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_integer::binomial;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::is_prime;
use crate::linalg::integer_null_space;
use crate::search::{default_threads, max_free_exact, SearchConfig};
use crate::verifier::{degree_line_bound, lp_line_bounds, quadratic_line_bound};
use crate::VERSION;

/// Where `r_{p-1}(F_p^2)` comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubplaneSource {
    /// Built-in values for p = 5 and p = 7, searching otherwise.
    Table,
    /// Always run the exact search.
    Search { budget: Option<Duration> },
    /// Caller-supplied value.
    Given(u32),
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    /// Use the bounds of the original hand proofs instead of the tightest
    /// derivable ones.
    pub paper_faithful: bool,
    pub threads: usize,
    /// Give up (verdict UNKNOWN) after sweeping this many vectors.
    pub max_vectors: Option<u64>,
    pub time_budget: Option<Duration>,
    pub subplane: SubplaneSource,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            paper_faithful: false,
            threads: default_threads(),
            max_vectors: None,
            time_budget: None,
            subplane: SubplaneSource::Table,
        }
    }
}

const SUBPLANE_TABLE: [(u32, u32); 2] = [(5, 11), (7, 29)];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionInstance {
    pub p: u32,
    pub target: u32,
    /// Largest line-free plane, `(p-1)^2`.
    pub max_plane: u32,
    /// Largest plane without `p - 1` collinear points, `r_{p-1}(F_p^2)`.
    pub r_sub: u32,
    pub r_sub_source: String,
    /// Smallest possible size of a plane containing a (p-1)-line.
    pub min_line_plane: i64,
    pub allowed_sizes: Vec<u32>,
    pub num_classes: u64,
    pub planes_per_pair: u32,
}

impl ExclusionInstance {
    pub fn new(p: u32, target: u32, r_sub: u32, r_sub_source: impl Into<String>) -> Result<Self> {
        if p < 5 || !is_prime(p as u64) {
            return Err(Error::input(format!(
                "certificates need a prime p >= 5, got {p}"
            )));
        }
        if target > p * p * p {
            return Err(Error::input(format!(
                "target {target} exceeds p^3 = {}",
                p * p * p
            )));
        }
        let m = (p - 1) * (p - 1);
        if r_sub > m {
            return Err(Error::input(format!(
                "r_sub = {r_sub} exceeds (p-1)^2 = {m}"
            )));
        }
        let (pi, t, mi) = (p as i64, target as i64, m as i64);
        let l = (t - (pi - 1)) + (pi + 1) * (pi - 1) - pi * mi;
        let mut inst = ExclusionInstance {
            p,
            target,
            max_plane: m,
            r_sub,
            r_sub_source: r_sub_source.into(),
            min_line_plane: l,
            allowed_sizes: Vec::new(),
            num_classes: (p as u64).pow(2) + p as u64 + 1,
            planes_per_pair: p + 1,
        };
        inst.allowed_sizes = allowed_plane_sizes(&inst);
        Ok(inst)
    }

    /// Instance with `r_sub` resolved according to `source`.
    pub fn resolve(p: u32, target: u32, source: &SubplaneSource) -> Result<Self> {
        let table = SUBPLANE_TABLE
            .iter()
            .find(|(q, _)| *q == p)
            .map(|&(_, r)| r);
        let (r, why) = match (source, table) {
            (SubplaneSource::Given(r), _) => (*r, "supplied".to_string()),
            (SubplaneSource::Table, Some(r)) => (r, "table (computer search)".to_string()),
            (SubplaneSource::Table, None) => (
                subplane_search(p, Some(Duration::from_secs(600)))?,
                "search".into(),
            ),
            (SubplaneSource::Search { budget }, _) => {
                (subplane_search(p, *budget)?, "search".into())
            }
        };
        ExclusionInstance::new(p, target, r, why)
    }

    /// Pigeonhole: `p` parallel planes hold at most `p·M` points.
    pub fn pigeonhole(&self) -> bool {
        self.target > self.p * self.max_plane
    }
}

fn subplane_search(p: u32, budget: Option<Duration>) -> Result<u32> {
    let cfg = SearchConfig {
        time_budget: budget,
        fix_frame: true,
        ..SearchConfig::default()
    };
    let r = max_free_exact(p, 2, p - 1, &cfg)?;
    if !r.optimal {
        return Err(Error::Resource(format!(
            "r_{}(F_{p}^2) not settled within budget",
            p - 1
        )));
    }
    Ok(r.size() as u32)
}

/// Plane sizes compatible with the target: at least `T - (p-1)M`, at most
/// `M`, and outside the open gap `(r_sub, L)`.
pub fn allowed_plane_sizes(inst: &ExclusionInstance) -> Vec<u32> {
    let lo = inst.target as i64 - (inst.p as i64 - 1) * inst.max_plane as i64;
    (lo.max(0)..=inst.max_plane as i64)
        .filter(|&s| !(s > inst.r_sub as i64 && s < inst.min_line_plane))
        .map(|s| s as u32)
        .collect()
}

/// All multisets of `len` values from `sizes` summing to `total`, each
/// sorted ascending, listed in lexicographic order.
fn multisets(sizes: &[u32], len: usize, total: u64) -> Vec<Vec<u32>> {
    fn rec(
        sizes: &[u32],
        from: usize,
        left: usize,
        total: u64,
        cur: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if left == 0 {
            if total == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for i in from..sizes.len() {
            let s = sizes[i] as u64;
            let max = *sizes.last().unwrap() as u64;
            if s * left as u64 > total {
                break;
            }
            if max * (left as u64) < total {
                continue;
            }
            cur.push(sizes[i]);
            rec(sizes, i, left - 1, total - s, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if !sizes.is_empty() {
        rec(sizes, 0, len, total, &mut Vec::new(), &mut out);
    }
    out
}

/// Possible size patterns of one parallel class.
pub fn class_distributions(inst: &ExclusionInstance) -> Vec<Vec<u32>> {
    multisets(&inst.allowed_sizes, inst.p as usize, inst.target as u64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEquation {
    /// `Σ_{s ∈ D} C(s, 2)` per distribution.
    pub coefficients: Vec<u64>,
    /// `(p+1)·C(T, 2)`.
    pub rhs: u64,
    /// Right-hand side of the class-count equation.
    pub count_rhs: u64,
}

pub fn pair_equation(inst: &ExclusionInstance, dists: &[Vec<u32>]) -> PairEquation {
    PairEquation {
        coefficients: dists
            .iter()
            .map(|d| d.iter().map(|&s| binomial(s as u64, 2)).sum())
            .collect(),
        rhs: inst.planes_per_pair as u64 * binomial(inst.target as u64, 2),
        count_rhs: inst.num_classes,
    }
}

/// Possible sizes of the `p + 1` planes through a (p-1)-line.
pub fn line_plane_multisets(inst: &ExclusionInstance) -> Vec<Vec<u32>> {
    let sizes: Vec<u32> = inst
        .allowed_sizes
        .iter()
        .copied()
        .filter(|&s| s as i64 >= inst.min_line_plane)
        .collect();
    let p = inst.p as i64;
    let total = (inst.target as i64 - (p - 1)) + (p + 1) * (p - 1);
    if total < 0 {
        return Vec::new();
    }
    multisets(&sizes, inst.p as usize + 1, total as u64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "basis")]
pub enum NullWeights {
    Unique(Vec<i64>),
    Empty,
    Ambiguous(Vec<Vec<i64>>),
}

/// Distinct sizes occurring in the multisets, largest first.
pub fn weight_sizes(multisets: &[Vec<u32>]) -> Vec<u32> {
    let mut sizes: Vec<u32> = multisets.iter().flatten().copied().collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes.dedup();
    sizes
}

/// Primitive integer vector `w` over `sizes` with `Σ_s w_s·mult_D(s) = 0`
/// for every multiset `D`.
pub fn null_weights(multisets: &[Vec<u32>], sizes: &[u32]) -> NullWeights {
    let rows: Vec<Vec<i64>> = multisets
        .iter()
        .map(|d| {
            sizes
                .iter()
                .map(|s| d.iter().filter(|&x| x == s).count() as i64)
                .collect()
        })
        .collect();
    let basis = integer_null_space(&rows, sizes.len());
    match basis.len() {
        0 => NullWeights::Empty,
        1 => NullWeights::Unique(basis.into_iter().next().unwrap()),
        _ => NullWeights::Ambiguous(basis),
    }
}

/// Lower and upper bound on the number of (p-1)-lines in a line-free plane
/// of one size, with the rule that produced each.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeBound {
    pub size: u32,
    pub lower: u64,
    pub lower_source: String,
    pub upper: u64,
    pub upper_source: String,
}

/// Line-count bounds per plane size.
///
/// Derived mode takes the exact LP range and the point-degree cap.
/// Paper-faithful mode uses the hand-proof rules: the lower bound
/// `C(m,2) - (p-3)/2·(p+1)m ≤ (p-1)/2·x_{p-1}` at the largest size only, and
/// the degree cap for `p = 5` or the quadratic combination with offset 2
/// otherwise.
pub fn size_bounds(
    p: u32,
    sizes: &[u32],
    max_plane: u32,
    paper_faithful: bool,
) -> Result<Vec<SizeBound>> {
    sizes
        .iter()
        .map(|&s| {
            let m = s as u64;
            if paper_faithful {
                let (lower, lower_source) = if s == max_plane {
                    let p64 = p as i64;
                    let excess = binomial(m, 2) as i64 - (p64 - 3) * (p64 + 1) * m as i64 / 2;
                    let weight = (p64 - 1) / 2;
                    (
                        (excess.max(0) + weight - 1) / weight,
                        "pairs minus incidences",
                    )
                } else {
                    (0, "none")
                };
                let (upper, upper_source) = if p == 5 {
                    (degree_line_bound(p, m).cap, "degree")
                } else {
                    (quadratic_line_bound(p, m, 2)?, "quadratic")
                };
                Ok(SizeBound {
                    size: s,
                    lower: lower as u64,
                    lower_source: lower_source.into(),
                    upper,
                    upper_source: upper_source.into(),
                })
            } else {
                let lp = lp_line_bounds(p, m)?
                    .ok_or_else(|| Error::Internal(format!("no line-free plane of size {s}")))?;
                let deg = degree_line_bound(p, m).cap;
                let (upper, upper_source) = if deg < lp.max {
                    (deg, "degree")
                } else {
                    (lp.max, "lp")
                };
                Ok(SizeBound {
                    size: s,
                    lower: lp.min,
                    lower_source: "lp".into(),
                    upper,
                    upper_source: upper_source.into(),
                })
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Infeasible,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// The weighted identity is at least `lower > 0`.
    WeightedLower,
    /// The weighted identity is at most `upper < 0`.
    WeightedUpper,
    /// Some plane size outside the identity must hold a (p-1)-line.
    ForcedLine,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub counts: Vec<u32>,
    /// `(size, number of planes)` for every size that occurs.
    pub planes: Vec<(u32, u64)>,
    /// Range of `Σ_s w_s·P_s` allowed by the line bounds.
    pub lower: i64,
    pub upper: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub version: String,
    pub instance: ExclusionInstance,
    pub paper_faithful: bool,
    pub distributions: Vec<Vec<u32>>,
    pub pair_equation: PairEquation,
    pub line_plane_multisets: Vec<Vec<u32>>,
    pub weight_sizes: Vec<u32>,
    pub weights: NullWeights,
    pub line_bounds: Vec<SizeBound>,
    pub sweep: Vec<SweepEntry>,
    /// Total vectors satisfying both equations, when the sweep completed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vectors: Option<u64>,
    pub verdict: Verdict,
    pub reason: String,
}

/// Everything the sweep needs to judge one class-count vector.
struct Judge<'a> {
    dists: &'a [Vec<u32>],
    weights: BTreeMap<u32, i64>,
    bounds: BTreeMap<u32, &'a SizeBound>,
    no_lines: bool,
}

impl Judge<'_> {
    fn planes(&self, counts: &[u32]) -> Vec<(u32, u64)> {
        let mut n: BTreeMap<u32, u64> = BTreeMap::new();
        for (d, &c) in self.dists.iter().zip(counts) {
            if c > 0 {
                for &s in d {
                    *n.entry(s).or_default() += c as u64;
                }
            }
        }
        n.into_iter().rev().collect()
    }

    fn judge(&self, counts: &[u32]) -> SweepEntry {
        let planes = self.planes(counts);
        let (mut lower, mut upper) = (0i64, 0i64);
        for &(s, n) in &planes {
            let Some(&w) = self.weights.get(&s) else {
                continue;
            };
            let b = self.bounds[&s];
            let n = n as i64;
            let (lo, hi) = (b.lower as i64 * n, b.upper as i64 * n);
            if w > 0 {
                lower += w * lo;
                upper += w * hi;
            } else {
                lower += w * hi;
                upper += w * lo;
            }
        }
        let forced = planes.iter().any(|&(s, n)| {
            let outside = self.no_lines || !self.weights.contains_key(&s);
            outside && n > 0 && self.bounds.get(&s).is_some_and(|b| b.lower > 0)
        });
        let rule = if !self.no_lines && lower > 0 {
            Some(Rule::WeightedLower)
        } else if !self.no_lines && upper < 0 {
            Some(Rule::WeightedUpper)
        } else if forced {
            Some(Rule::ForcedLine)
        } else {
            None
        };
        SweepEntry {
            counts: counts.to_vec(),
            planes,
            lower,
            upper,
            rule,
        }
    }
}

/// Visits the nonnegative integer vectors with `Σ x = count` and
/// `Σ c·x = pairs` in colex order. The first `fixed.len()` coordinates
/// counted from the end are prescribed. Returns false if `visit` stopped.
fn sweep_vectors(
    coef: &[u64],
    count: u64,
    pairs: u64,
    fixed: &[u32],
    visit: &mut dyn FnMut(&[u32]) -> bool,
) -> bool {
    let d = coef.len();
    let pmin: Vec<u64> = (0..d)
        .scan(u64::MAX, |m, i| {
            *m = (*m).min(coef[i]);
            Some(*m)
        })
        .collect();
    let pmax: Vec<u64> = (0..d)
        .scan(0, |m, i| {
            *m = (*m).max(coef[i]);
            Some(*m)
        })
        .collect();
    let mut x = vec![0u32; d];
    let mut r = count;
    let mut q = pairs;
    for (j, &v) in fixed.iter().enumerate() {
        let i = d - 1 - j;
        let (c, v64) = (coef[i], v as u64);
        if v64 > r || c * v64 > q {
            return true;
        }
        x[i] = v;
        r -= v64;
        q -= c * v64;
    }
    let top = d - fixed.len();
    if top == 0 {
        return if r == 0 && q == 0 { visit(&x) } else { true };
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        r: u64,
        q: u64,
        coef: &[u64],
        pmin: &[u64],
        pmax: &[u64],
        x: &mut [u32],
        visit: &mut dyn FnMut(&[u32]) -> bool,
    ) -> bool {
        if i == 0 {
            if coef[0] * r == q {
                x[0] = r as u32;
                let go = visit(x);
                x[0] = 0;
                return go;
            }
            return true;
        }
        for v in 0..=r {
            let cv = coef[i] * v;
            if cv > q {
                break;
            }
            let (r2, q2) = (r - v, q - cv);
            if q2 < pmin[i - 1] * r2 || q2 > pmax[i - 1] * r2 {
                continue;
            }
            x[i] = v as u32;
            if !rec(i - 1, r2, q2, coef, pmin, pmax, x, visit) {
                x[i] = 0;
                return false;
            }
        }
        x[i] = 0;
        true
    }
    rec(top - 1, r, q, coef, &pmin, &pmax, &mut x, visit)
}

/// Prefixes (values of the last coordinates) used to split the sweep.
fn sweep_tasks(coef: &[u64], count: u64, depth: usize) -> Vec<Vec<u32>> {
    let depth = depth.min(coef.len().saturating_sub(1));
    let mut out = vec![Vec::new()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for prefix in &out {
            let used: u64 = prefix.iter().map(|&v| v as u64).sum();
            for v in 0..=(count - used) as u32 {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    // Colex order: the last coordinate (first prefix entry) varies slowest.
    out.sort();
    out
}

struct Sweep {
    entries: Vec<SweepEntry>,
    vectors: u64,
    verdict: Verdict,
    reason: String,
}

fn run_sweep(judge: &Judge, eq: &PairEquation, opts: &CertifyOptions) -> Sweep {
    let start = Instant::now();
    let tasks = sweep_tasks(&eq.coefficients, eq.count_rhs, 2);
    let segments: Mutex<Vec<Option<Vec<SweepEntry>>>> = Mutex::new(vec![None; tasks.len()]);
    let first_fail = AtomicUsize::new(usize::MAX);
    let swept = AtomicU64::new(0);
    let out_of_budget = AtomicBool::new(false);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..opts.threads.max(1).min(tasks.len().max(1)) {
            scope.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                if t >= tasks.len() || out_of_budget.load(Ordering::Relaxed) {
                    break;
                }
                if t > first_fail.load(Ordering::Relaxed) {
                    continue;
                }
                let mut seg = Vec::new();
                sweep_vectors(
                    &eq.coefficients,
                    eq.count_rhs,
                    eq.rhs,
                    &tasks[t],
                    &mut |x| {
                        let e = judge.judge(x);
                        let refuted = e.rule.is_some();
                        seg.push(e);
                        let n = swept.fetch_add(1, Ordering::Relaxed) + 1;
                        if opts.max_vectors.is_some_and(|m| n > m)
                            || (n.is_multiple_of(4096)
                                && opts.time_budget.is_some_and(|b| start.elapsed() > b))
                        {
                            out_of_budget.store(true, Ordering::Relaxed);
                            return false;
                        }
                        if !refuted {
                            first_fail.fetch_min(t, Ordering::Relaxed);
                            return false;
                        }
                        t <= first_fail.load(Ordering::Relaxed)
                    },
                );
                segments.lock().unwrap()[t] = Some(seg);
            });
        }
    });

    let mut entries = Vec::new();
    let segments = segments.into_inner().unwrap();
    if out_of_budget.load(Ordering::Relaxed) {
        for seg in segments.into_iter().flatten() {
            entries.extend(seg);
        }
        let n = entries.len() as u64;
        return Sweep {
            entries,
            vectors: n,
            verdict: Verdict::Unknown,
            reason: format!("budget exhausted after {n} vectors"),
        };
    }
    for seg in segments
        .into_iter()
        .take(first_fail.load(Ordering::Relaxed).saturating_add(1))
    {
        let seg = seg.expect("every task up to the first failure ran");
        let stop = seg.iter().position(|e| e.rule.is_none());
        match stop {
            Some(i) => {
                entries.extend(seg.into_iter().take(i + 1));
                let n = entries.len() as u64;
                let reason = format!(
                    "class-count vector {:?} is not refuted",
                    entries[entries.len() - 1].counts
                );
                return Sweep {
                    entries,
                    vectors: n,
                    verdict: Verdict::Unknown,
                    reason,
                };
            }
            None => entries.extend(seg),
        }
    }
    let n = entries.len() as u64;
    Sweep {
        entries,
        vectors: n,
        verdict: Verdict::Infeasible,
        reason: format!("all {n} class-count vectors refuted"),
    }
}

/// Attempts to prove that no line-free set of size `target` exists in
/// F_p^3.
pub fn certify(p: u32, target: u32, opts: &CertifyOptions) -> Result<Certificate> {
    let inst = ExclusionInstance::resolve(p, target, &opts.subplane)?;
    prove_infeasible(inst, opts)
}

pub fn prove_infeasible(inst: ExclusionInstance, opts: &CertifyOptions) -> Result<Certificate> {
    let dists = class_distributions(&inst);
    let eq = pair_equation(&inst, &dists);
    let lines = line_plane_multisets(&inst);
    let wsizes = weight_sizes(&lines);
    let weights = if lines.is_empty() {
        NullWeights::Empty
    } else {
        null_weights(&lines, &wsizes)
    };
    let mut bound_sizes = inst.allowed_sizes.clone();
    bound_sizes.reverse();
    let line_bounds = size_bounds(inst.p, &bound_sizes, inst.max_plane, opts.paper_faithful)?;
    let mut cert = Certificate {
        version: VERSION.to_string(),
        instance: inst.clone(),
        paper_faithful: opts.paper_faithful,
        distributions: dists.clone(),
        pair_equation: eq.clone(),
        line_plane_multisets: lines.clone(),
        weight_sizes: wsizes.clone(),
        weights: weights.clone(),
        line_bounds: line_bounds.clone(),
        sweep: Vec::new(),
        vectors: None,
        verdict: Verdict::Unknown,
        reason: String::new(),
    };
    if inst.pigeonhole() {
        cert.verdict = Verdict::Infeasible;
        cert.reason = format!(
            "pigeonhole: {} > p·M = {}",
            inst.target,
            inst.p * inst.max_plane
        );
        return Ok(cert);
    }
    if dists.is_empty() {
        cert.verdict = Verdict::Infeasible;
        cert.reason = "no parallel class can split the target into allowed plane sizes".into();
        return Ok(cert);
    }
    let weight_map: BTreeMap<u32, i64> = match (&weights, lines.is_empty()) {
        (NullWeights::Unique(w), _) => wsizes.iter().copied().zip(w.iter().copied()).collect(),
        (_, true) => BTreeMap::new(),
        (NullWeights::Empty, false) => {
            cert.reason = "the line-plane multisets admit no weight identity".into();
            return Ok(cert);
        }
        (NullWeights::Ambiguous(b), false) => {
            cert.reason = format!(
                "the weight identity is not unique (null space of dimension {})",
                b.len()
            );
            return Ok(cert);
        }
    };
    let judge = Judge {
        dists: &dists,
        weights: weight_map,
        bounds: line_bounds.iter().map(|b| (b.size, b)).collect(),
        no_lines: lines.is_empty(),
    };
    let sweep = run_sweep(&judge, &eq, opts);
    cert.vectors = (sweep.verdict == Verdict::Infeasible).then_some(sweep.vectors);
    cert.sweep = sweep.entries;
    cert.verdict = sweep.verdict;
    cert.reason = sweep.reason;
    Ok(cert)
}

/// Re-derives every intermediate from the instance data and re-checks every
/// logged inequality. Any mismatch is reported as an input error.
pub fn replay(cert: &Certificate) -> Result<()> {
    let fail = |what: &str| Err(Error::input(format!("certificate replay failed: {what}")));
    let inst = &cert.instance;
    let fresh = ExclusionInstance::new(inst.p, inst.target, inst.r_sub, inst.r_sub_source.clone())?;
    if &fresh != inst {
        return fail("instance data");
    }
    if inst.pigeonhole() {
        return if cert.verdict == Verdict::Infeasible {
            Ok(())
        } else {
            fail("pigeonhole verdict")
        };
    }
    let dists = class_distributions(inst);
    if dists != cert.distributions {
        return fail("distributions");
    }
    let eq = pair_equation(inst, &dists);
    if eq != cert.pair_equation {
        return fail("pair equation");
    }
    let lines = line_plane_multisets(inst);
    if lines != cert.line_plane_multisets {
        return fail("line-plane multisets");
    }
    let wsizes = weight_sizes(&lines);
    if wsizes != cert.weight_sizes {
        return fail("weight sizes");
    }
    if !lines.is_empty() {
        if null_weights(&lines, &wsizes) != cert.weights {
            return fail("weights");
        }
        if let NullWeights::Unique(w) = &cert.weights {
            for d in &lines {
                let dot: i64 = wsizes
                    .iter()
                    .zip(w)
                    .map(|(s, &x)| x * d.iter().filter(|&y| y == s).count() as i64)
                    .sum();
                if dot != 0 {
                    return fail("weights are not orthogonal to a multiset");
                }
            }
        }
    }
    let mut bound_sizes = inst.allowed_sizes.clone();
    bound_sizes.reverse();
    if size_bounds(inst.p, &bound_sizes, inst.max_plane, cert.paper_faithful)? != cert.line_bounds {
        return fail("line bounds");
    }
    if dists.is_empty() {
        return if cert.verdict == Verdict::Infeasible {
            Ok(())
        } else {
            fail("empty verdict")
        };
    }
    let weight_map: BTreeMap<u32, i64> = match &cert.weights {
        NullWeights::Unique(w) => wsizes.iter().copied().zip(w.iter().copied()).collect(),
        _ => BTreeMap::new(),
    };
    let judge = Judge {
        dists: &dists,
        weights: weight_map,
        bounds: cert.line_bounds.iter().map(|b| (b.size, b)).collect(),
        no_lines: lines.is_empty(),
    };
    for e in &cert.sweep {
        if e.counts.len() != dists.len() {
            return fail("vector length");
        }
        let total: u64 = e.counts.iter().map(|&c| c as u64).sum();
        let pairs: u64 = e
            .counts
            .iter()
            .zip(&eq.coefficients)
            .map(|(&c, &k)| c as u64 * k)
            .sum();
        if total != eq.count_rhs || pairs != eq.rhs {
            return fail("logged vector violates the class or pair equation");
        }
        if &judge.judge(&e.counts) != e {
            return fail("logged inequality does not re-evaluate");
        }
    }
    if cert.verdict == Verdict::Infeasible {
        if cert.sweep.iter().any(|e| e.rule.is_none()) {
            return fail("INFEASIBLE verdict with an unrefuted vector");
        }
        // Completeness: the log must be exactly the colex enumeration.
        let mut i = 0usize;
        let mut ok = true;
        sweep_vectors(&eq.coefficients, eq.count_rhs, eq.rhs, &[], &mut |x| {
            ok = cert.sweep.get(i).is_some_and(|e| e.counts == x);
            i += 1;
            ok
        });
        if !ok || i != cert.sweep.len() || cert.vectors != Some(i as u64) {
            return fail("sweep is incomplete or out of order");
        }
    }
    Ok(())
}

fn multiset_text(d: &[u32]) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < d.len() {
        let j = d[i..].iter().take_while(|&&x| x == d[i]).count();
        parts.push(if j == 1 {
            d[i].to_string()
        } else {
            format!("{}^{j}", d[i])
        });
        i += j;
    }
    format!("{{{}}}", parts.join(","))
}

impl Certificate {
    /// Human-readable proof.
    pub fn render_text(&self) -> String {
        let inst = &self.instance;
        let mut out = String::new();
        let p = inst.p;
        let claim = match self.verdict {
            Verdict::Infeasible => {
                format!("no line-free set of size {} exists in F_{p}^3", inst.target)
            }
            Verdict::Unknown => format!("size {} in F_{p}^3 is not refuted", inst.target),
        };
        writeln!(out, "certificate: {claim}").unwrap();
        writeln!(
            out,
            "instance: p={p} T={} M={} r_sub={} ({}) L={} classes={} planes per pair={}",
            inst.target,
            inst.max_plane,
            inst.r_sub,
            inst.r_sub_source,
            inst.min_line_plane,
            inst.num_classes,
            inst.planes_per_pair
        )
        .unwrap();
        writeln!(
            out,
            "mode: {}",
            if self.paper_faithful {
                "paper-faithful"
            } else {
                "derived"
            }
        )
        .unwrap();
        let sizes: Vec<String> = inst.allowed_sizes.iter().map(|s| s.to_string()).collect();
        writeln!(out, "allowed plane sizes: {}", sizes.join(" ")).unwrap();
        writeln!(out, "distributions:").unwrap();
        for (i, (d, c)) in self
            .distributions
            .iter()
            .zip(&self.pair_equation.coefficients)
            .enumerate()
        {
            writeln!(out, "  D{} {}  pairs {c}", i + 1, multiset_text(d)).unwrap();
        }
        let names: Vec<String> = (1..=self.distributions.len())
            .map(|i| format!("D{i}"))
            .collect();
        writeln!(
            out,
            "class equation: {} = {}",
            names.join(" + "),
            self.pair_equation.count_rhs
        )
        .unwrap();
        let terms: Vec<String> = self
            .pair_equation
            .coefficients
            .iter()
            .zip(&names)
            .map(|(c, n)| format!("{c} {n}"))
            .collect();
        writeln!(
            out,
            "pair equation: {} = {}",
            terms.join(" + "),
            self.pair_equation.rhs
        )
        .unwrap();
        let ms: Vec<String> = self
            .line_plane_multisets
            .iter()
            .map(|d| multiset_text(d))
            .collect();
        writeln!(out, "planes through a {}-line: {}", p - 1, ms.join(" ")).unwrap();
        match &self.weights {
            NullWeights::Unique(w) => {
                let ss: Vec<String> = self.weight_sizes.iter().map(|s| s.to_string()).collect();
                let ws: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                writeln!(
                    out,
                    "weights over sizes ({}): ({})",
                    ss.join(","),
                    ws.join(",")
                )
                .unwrap();
            }
            NullWeights::Empty => writeln!(out, "weights: none").unwrap(),
            NullWeights::Ambiguous(b) => writeln!(out, "weights: ambiguous, basis {b:?}").unwrap(),
        }
        writeln!(out, "line bounds:").unwrap();
        for b in &self.line_bounds {
            writeln!(
                out,
                "  size {:>3}: {} <= lines ({}) , lines <= {} ({})",
                b.size, b.lower, b.lower_source, b.upper, b.upper_source
            )
            .unwrap();
        }
        writeln!(out, "sweep ({} vectors):", self.sweep.len()).unwrap();
        for e in &self.sweep {
            let planes: Vec<String> = e.planes.iter().map(|(s, n)| format!("{s}:{n}")).collect();
            let verdict = match e.rule {
                Some(Rule::WeightedLower) => format!("sum >= {} > 0", e.lower),
                Some(Rule::WeightedUpper) => format!("sum <= {} < 0", e.upper),
                Some(Rule::ForcedLine) => "forced line outside identity".to_string(),
                None => format!("NOT REFUTED (sum in [{}, {}])", e.lower, e.upper),
            };
            writeln!(
                out,
                "  {:?} planes {} -> {verdict}",
                e.counts,
                planes.join(" ")
            )
            .unwrap();
        }
        let v = match self.verdict {
            Verdict::Infeasible => "INFEASIBLE",
            Verdict::Unknown => "UNKNOWN",
        };
        writeln!(out, "verdict: {v} ({})", self.reason).unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(p: u32, t: u32) -> ExclusionInstance {
        ExclusionInstance::resolve(p, t, &SubplaneSource::Table).unwrap()
    }

    #[test]
    fn allowed_sizes_examples() {
        assert_eq!(inst(5, 74).allowed_sizes, vec![10, 11, 14, 15, 16]);
        assert_eq!(inst(7, 243).allowed_sizes, vec![27, 28, 29, 33, 34, 35, 36]);
        assert_eq!(inst(5, 70).allowed_sizes, (6..=16).collect::<Vec<_>>());
        assert_eq!(inst(5, 70).min_line_plane, 10);
    }

    #[test]
    fn distributions_and_pairs() {
        let i = inst(5, 74);
        let d = class_distributions(&i);
        assert_eq!(
            d,
            vec![
                vec![10, 16, 16, 16, 16],
                vec![11, 15, 16, 16, 16],
                vec![14, 14, 14, 16, 16],
                vec![14, 14, 15, 15, 16],
                vec![14, 15, 15, 15, 15],
            ]
        );
        let eq = pair_equation(&i, &d);
        assert_eq!(eq.coefficients, vec![525, 520, 513, 512, 511]);
        assert_eq!((eq.rhs, eq.count_rhs), (16206, 31));
        // At T = 80 every plane would need a 4-line and at least 20 points.
        assert!(class_distributions(&inst(5, 80)).is_empty());
        assert_eq!(multisets(&[16], 5, 80), vec![vec![16; 5]]);
        let i7 = inst(7, 243);
        let d7 = class_distributions(&i7);
        assert!(d7.contains(&vec![27, 36, 36, 36, 36, 36, 36]));
        assert_eq!(pair_equation(&i7, &d7).rhs, 235224);
    }

    #[test]
    fn line_plane_multisets_examples() {
        assert_eq!(
            line_plane_multisets(&inst(5, 74)),
            vec![vec![14, 16, 16, 16, 16, 16], vec![15, 15, 16, 16, 16, 16]]
        );
        assert_eq!(
            line_plane_multisets(&inst(7, 243)),
            vec![
                vec![33, 36, 36, 36, 36, 36, 36, 36],
                vec![34, 35, 36, 36, 36, 36, 36, 36],
                vec![35, 35, 35, 36, 36, 36, 36, 36],
            ]
        );
        assert_eq!(
            line_plane_multisets(&inst(5, 75)),
            vec![vec![15, 16, 16, 16, 16, 16]]
        );
    }

    #[test]
    fn weights_examples() {
        let l5 = line_plane_multisets(&inst(5, 74));
        assert_eq!(weight_sizes(&l5), vec![16, 15, 14]);
        assert_eq!(
            null_weights(&l5, &[16, 15, 14]),
            NullWeights::Unique(vec![1, -2, -5])
        );
        let l7 = line_plane_multisets(&inst(7, 243));
        assert_eq!(
            null_weights(&l7, &weight_sizes(&l7)),
            NullWeights::Unique(vec![3, -5, -13, -21])
        );
        let single = vec![vec![15, 16, 16, 16, 16, 16]];
        assert_eq!(
            null_weights(&single, &[16, 15]),
            NullWeights::Unique(vec![1, -5])
        );
        assert_eq!(null_weights(&[vec![16, 16]], &[16]), NullWeights::Empty);
    }

    #[test]
    fn paper_bounds_reproduce_hand_proof() {
        let b = size_bounds(5, &[16, 15, 14], 16, true).unwrap();
        assert_eq!(b[0].lower, 12);
        assert_eq!((b[1].upper, b[2].upper), (15, 14));
        let b7 = size_bounds(7, &[36, 35, 34, 33], 36, true).unwrap();
        assert_eq!(b7[0].lower, 18);
        let caps: Vec<u64> = b7[1..].iter().map(|b| b.upper).collect();
        assert_eq!(caps, vec![33, 30, 28]);
    }

    #[test]
    fn paper_inequalities_per_distribution() {
        // A >= 48a+36b+24c+12d, B <= 15b+30d+60e, C <= 42c+28d+14e.
        let i = inst(5, 74);
        let dists = class_distributions(&i);
        let bounds = size_bounds(5, &[16, 15, 14], 16, true).unwrap();
        let per = |s: u32, lower: bool| -> Vec<u64> {
            let b = bounds.iter().find(|b| b.size == s).unwrap();
            dists
                .iter()
                .map(|d| {
                    d.iter().filter(|&&x| x == s).count() as u64
                        * if lower { b.lower } else { b.upper }
                })
                .collect()
        };
        assert_eq!(per(16, true), vec![48, 36, 24, 12, 0]);
        assert_eq!(per(15, false), vec![0, 15, 0, 30, 60]);
        assert_eq!(per(14, false), vec![0, 0, 42, 28, 14]);
    }

    #[test]
    fn five_seventy_four_is_infeasible() {
        for paper_faithful in [false, true] {
            let opts = CertifyOptions {
                paper_faithful,
                threads: 2,
                ..CertifyOptions::default()
            };
            let c = certify(5, 74, &opts).unwrap();
            assert_eq!(c.verdict, Verdict::Infeasible);
            assert_eq!(c.vectors, Some(11));
            replay(&c).unwrap();
        }
    }

    #[test]
    fn certificates_do_not_depend_on_threads() {
        let one = certify(
            5,
            74,
            &CertifyOptions {
                threads: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let many = certify(
            5,
            74,
            &CertifyOptions {
                threads: 8,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&many).unwrap()
        );
    }

    #[test]
    fn tampering_is_detected() {
        let c = certify(5, 74, &CertifyOptions::default()).unwrap();
        let mut bad = c.clone();
        bad.sweep[0].lower += 1;
        assert!(replay(&bad).is_err());
        let mut bad = c.clone();
        bad.sweep.pop();
        assert!(replay(&bad).is_err());
        let mut bad = c.clone();
        bad.line_bounds[0].lower = 20;
        assert!(replay(&bad).is_err());
        let mut bad = c;
        bad.weights = NullWeights::Unique(vec![1, -2, -4]);
        assert!(replay(&bad).is_err());
    }

    #[test]
    fn shortcuts() {
        let c = certify(5, 81, &CertifyOptions::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Infeasible);
        assert!(c.reason.contains("pigeonhole"));
        replay(&c).unwrap();
        assert!(certify(5, 126, &CertifyOptions::default()).is_err());
        assert!(certify(3, 10, &CertifyOptions::default()).is_err());
    }

    #[test]
    fn known_sets_are_never_refuted() {
        let opts = CertifyOptions {
            max_vectors: Some(20_000),
            ..CertifyOptions::default()
        };
        for t in [64, 65, 66, 70] {
            assert_eq!(
                certify(5, t, &opts).unwrap().verdict,
                Verdict::Unknown,
                "T={t}"
            );
        }
    }

    #[test]
    fn text_rendering_mentions_the_identity() {
        let c = certify(5, 74, &CertifyOptions::default()).unwrap();
        let text = c.render_text();
        assert!(text.contains("weights over sizes (16,15,14): (1,-2,-5)"));
        assert!(text.contains("{10,16^4}"));
        assert!(text.contains("verdict: INFEASIBLE"));
    }
}
