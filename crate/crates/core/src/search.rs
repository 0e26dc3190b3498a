//! Exact maximum progression-free sets by branch and bound, and a
//! brute-force oracle for tiny spaces.
//!
//! The tree branches on one undecided point at a time (include first).
//! Choosing `k - 1` points of a forbidden progression excludes the last one.
//! The default bound sums, over the lines of one parallel class, the chosen
//! plus still-available points of each line capped at the largest
//! progression-free subset of a line, and takes the smallest class sum.
//!
//! Parallel runs split the tree at a fixed depth, independent of the thread
//! count. A subtree may prune on ties against incumbents of earlier
//! subtrees but only on strict inequality against later ones, so the
//! reported set is the first maximum in depth-first order for any number of
//! threads.
//!
//! # Frame fixing
//!
//! With [`SearchConfig::fix_frame`] the points `0, e_1, ..., e_n` are
//! excluded up front. This loses no optimum: for `n ≥ 2` the complement of
//! a progression-free set `S` is not contained in any hyperplane `H`, since
//! a hyperplane parallel to `H` and disjoint from it contains a line and so
//! a `k`-progression, which would then lie in `S`. The complement therefore
//! contains `n + 1` affinely independent points, and an affine bijection
//! (which maps progressions to progressions) sends them to the frame. For
//! `n = 1` only the origin is fixed, using a translation and the fact that
//! `F_p` itself contains a `k`-progression.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{for_each_line, SpaceSpec};
use crate::pointset::PointSet;
use crate::verifier::find_progression;

/// Largest space the branch and bound accepts.
pub const MAX_SEARCH_POINTS: usize = 1 << 12;
/// Largest space the brute-force oracle accepts.
pub const MAX_ORACLE_POINTS: usize = 20;

/// Which undecided point to branch on next.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointOrder {
    /// Least index first.
    Natural,
    /// The point whose lines already hold the most chosen points.
    GreedyDegree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Cardinality,
    LineCapacity,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub order: PointOrder,
    pub bound: BoundKind,
    pub warm_start: Option<PointSet>,
    pub time_budget: Option<Duration>,
    pub node_budget: Option<u64>,
    pub threads: usize,
    pub fix_frame: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            order: PointOrder::GreedyDegree,
            bound: BoundKind::LineCapacity,
            warm_start: None,
            time_budget: None,
            node_budget: None,
            threads: default_threads(),
            fix_frame: false,
        }
    }
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub p: u32,
    pub n: u32,
    pub k: u32,
    pub best: PointSet,
    pub optimal: bool,
    /// Approximate in parallel runs.
    pub nodes: u64,
    pub wall_time: Duration,
}

impl SearchResult {
    pub fn size(&self) -> usize {
        self.best.len()
    }
}

/// The forbidden structure of a search: lines with their capacity, and the
/// `k`-point progressions as sets (the lines themselves when `k = p`).
struct Problem {
    n_points: usize,
    k: u32,
    cap: u32,
    line_class: Vec<u32>,
    num_classes: usize,
    point_lines: Vec<Vec<u32>>,
    edges: Vec<Vec<u32>>,
    point_edges: Vec<Vec<u32>>,
}

impl Problem {
    fn build(space: &SpaceSpec, k: u32, cap: u32) -> Problem {
        let p = space.p() as usize;
        let n_points = space.num_points();
        let mut line_class = Vec::new();
        let mut lines: Vec<Vec<u32>> = Vec::new();
        let mut edges: Vec<Vec<u32>> = Vec::new();
        let mut seen = HashSet::new();
        for_each_line(space, |dir_id, _, pts| {
            line_class.push(dir_id as u32);
            lines.push(pts.iter().map(|&x| x as u32).collect());
            if k as usize == p {
                return;
            }
            for start in 0..p {
                for step in 1..p {
                    let mut e: Vec<u32> = (0..k as usize)
                        .map(|i| pts[(start + i * step) % p] as u32)
                        .collect();
                    e.sort_unstable();
                    if seen.insert(e.clone()) {
                        edges.push(e);
                    }
                }
            }
        });
        if k as usize == p {
            edges = lines.clone();
        }
        let mut point_lines = vec![Vec::new(); n_points];
        for (id, l) in lines.iter().enumerate() {
            for &q in l {
                point_lines[q as usize].push(id as u32);
            }
        }
        let mut point_edges = vec![Vec::new(); n_points];
        for (id, e) in edges.iter().enumerate() {
            for &q in e {
                point_edges[q as usize].push(id as u32);
            }
        }
        Problem {
            n_points,
            k,
            cap,
            num_classes: space.num_directions(),
            line_class,
            point_lines,
            edges,
            point_edges,
        }
    }
}

const AVAIL: u8 = 0;
const CHOSEN: u8 = 1;
const EXCLUDED: u8 = 2;

#[derive(Clone)]
struct State<'a> {
    pb: &'a Problem,
    status: Vec<u8>,
    chosen: usize,
    avail: usize,
    chosen_line: Vec<u32>,
    avail_line: Vec<u32>,
    class_sum: Vec<u32>,
    edge_cnt: Vec<u32>,
    trail: Vec<(u32, u8)>,
}

impl<'a> State<'a> {
    fn new(pb: &'a Problem) -> State<'a> {
        let nl = pb.line_class.len();
        let p_line = (pb.n_points * pb.point_lines.first().map_or(0, |l| l.len()))
            .checked_div(nl)
            .unwrap_or(0);
        let per_line = (p_line as u32).min(pb.cap);
        let lines_per_class = nl.checked_div(pb.num_classes).unwrap_or(0);
        State {
            pb,
            status: vec![AVAIL; pb.n_points],
            chosen: 0,
            avail: pb.n_points,
            chosen_line: vec![0; nl],
            avail_line: vec![p_line as u32; nl],
            class_sum: vec![per_line * lines_per_class as u32; pb.num_classes],
            edge_cnt: vec![0; pb.edges.len()],
            trail: Vec::new(),
        }
    }

    /// Returns false if the point cannot be chosen.
    fn choose(&mut self, q: usize) -> bool {
        if self.status[q] != AVAIL {
            return false;
        }
        self.status[q] = CHOSEN;
        self.chosen += 1;
        self.avail -= 1;
        self.trail.push((q as u32, CHOSEN));
        for &l in &self.pb.point_lines[q] {
            self.avail_line[l as usize] -= 1;
            self.chosen_line[l as usize] += 1;
        }
        for &e in &self.pb.point_edges[q] {
            let c = &mut self.edge_cnt[e as usize];
            *c += 1;
            if *c == self.pb.k - 1 {
                let last = self.pb.edges[e as usize]
                    .iter()
                    .copied()
                    .find(|&x| self.status[x as usize] != CHOSEN);
                if let Some(r) = last {
                    self.exclude(r as usize);
                }
            }
        }
        true
    }

    fn exclude(&mut self, q: usize) {
        if self.status[q] != AVAIL {
            return;
        }
        self.status[q] = EXCLUDED;
        self.avail -= 1;
        self.trail.push((q as u32, EXCLUDED));
        for &l in &self.pb.point_lines[q] {
            let l = l as usize;
            if self.chosen_line[l] + self.avail_line[l] <= self.pb.cap {
                self.class_sum[self.pb.line_class[l] as usize] -= 1;
            }
            self.avail_line[l] -= 1;
        }
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (q, kind) = self.trail.pop().unwrap();
            let q = q as usize;
            self.status[q] = AVAIL;
            self.avail += 1;
            if kind == CHOSEN {
                self.chosen -= 1;
                for &l in &self.pb.point_lines[q] {
                    self.avail_line[l as usize] += 1;
                    self.chosen_line[l as usize] -= 1;
                }
                for &e in &self.pb.point_edges[q] {
                    self.edge_cnt[e as usize] -= 1;
                }
            } else {
                for &l in &self.pb.point_lines[q] {
                    let l = l as usize;
                    self.avail_line[l] += 1;
                    if self.chosen_line[l] + self.avail_line[l] <= self.pb.cap {
                        self.class_sum[self.pb.line_class[l] as usize] += 1;
                    }
                }
            }
        }
    }

    fn bound(&self, kind: BoundKind) -> usize {
        let card = self.chosen + self.avail;
        match kind {
            BoundKind::Cardinality => card,
            BoundKind::LineCapacity => self
                .class_sum
                .iter()
                .map(|&s| s as usize)
                .min()
                .map_or(card, |m| m.min(card)),
        }
    }

    fn select(&self, order: PointOrder) -> Option<usize> {
        let mut cand = self
            .status
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == AVAIL)
            .map(|(i, _)| i);
        match order {
            PointOrder::Natural => cand.next(),
            PointOrder::GreedyDegree => {
                let mut best: Option<(u32, usize)> = None;
                for q in cand {
                    let score: u32 = self.pb.point_lines[q]
                        .iter()
                        .map(|&l| self.chosen_line[l as usize])
                        .sum();
                    if best.is_none_or(|(s, _)| score > s) {
                        best = Some((score, q));
                    }
                }
                best.map(|(_, q)| q)
            }
        }
    }

    fn chosen_set(&self) -> Vec<usize> {
        (0..self.pb.n_points)
            .filter(|&i| self.status[i] == CHOSEN)
            .collect()
    }
}

/// One branching decision on the path to a subtree root.
type Path = Vec<(usize, bool)>;
/// Size and members of the best set found in one subtree.
type Found = (usize, Vec<usize>);

struct Shared {
    /// Best size found inside each subtree so far.
    task_best: Vec<AtomicUsize>,
    warm: usize,
    nodes: AtomicU64,
    stop: AtomicBool,
    deadline: Option<Instant>,
    node_budget: Option<u64>,
}

impl Shared {
    fn thresholds(&self, task: usize) -> (usize, usize) {
        let le = self.task_best[..task]
            .iter()
            .map(|b| b.load(Ordering::Relaxed))
            .max()
            .unwrap_or(0)
            .max(self.warm);
        let lt = self.task_best[task + 1..]
            .iter()
            .map(|b| b.load(Ordering::Relaxed))
            .max()
            .unwrap_or(0);
        (le, lt)
    }
}

struct Worker<'a, 's> {
    state: State<'a>,
    cfg: &'s SearchConfig,
    shared: &'s Shared,
    task: usize,
    best: usize,
    best_set: Option<Vec<usize>>,
    le: usize,
    lt: usize,
    local_nodes: u64,
    aborted: bool,
}

impl Worker<'_, '_> {
    fn refresh(&mut self) {
        let total = self
            .shared
            .nodes
            .fetch_add(self.local_nodes, Ordering::Relaxed)
            + self.local_nodes;
        self.local_nodes = 0;
        let (le, lt) = self.shared.thresholds(self.task);
        self.le = le.max(self.best);
        self.lt = lt;
        let out_of_nodes = self.shared.node_budget.is_some_and(|b| total >= b);
        let out_of_time = self.shared.deadline.is_some_and(|d| Instant::now() >= d);
        if out_of_nodes || out_of_time {
            self.shared.stop.store(true, Ordering::Relaxed);
        }
        if self.shared.stop.load(Ordering::Relaxed) {
            self.aborted = true;
        }
    }

    fn dfs(&mut self) {
        if self.aborted {
            return;
        }
        self.local_nodes += 1;
        if self.local_nodes >= 1024 {
            self.refresh();
            if self.aborted {
                return;
            }
        }
        let bound = self.state.bound(self.cfg.bound);
        if bound <= self.le || bound < self.lt {
            return;
        }
        let Some(q) = self.state.select(self.cfg.order) else {
            // Every point is decided and the bound beat the incumbent.
            self.best = self.state.chosen;
            self.le = self.le.max(self.best);
            self.best_set = Some(self.state.chosen_set());
            self.shared.task_best[self.task].fetch_max(self.best, Ordering::Relaxed);
            return;
        };
        let mark = self.state.trail.len();
        self.state.choose(q);
        self.dfs();
        self.state.undo_to(mark);
        self.state.exclude(q);
        self.dfs();
        self.state.undo_to(mark);
    }
}

/// Subtree roots at a fixed depth, in depth-first order.
fn split(state: &mut State, order: PointOrder, depth: usize, path: &mut Path, out: &mut Vec<Path>) {
    if depth == 0 {
        out.push(path.clone());
        return;
    }
    let Some(q) = state.select(order) else {
        out.push(path.clone());
        return;
    };
    let mark = state.trail.len();
    for include in [true, false] {
        if include {
            state.choose(q);
        } else {
            state.exclude(q);
        }
        path.push((q, include));
        split(state, order, depth - 1, path, out);
        path.pop();
        state.undo_to(mark);
    }
}

const SPLIT_DEPTH: usize = 6;

fn line_capacity(p: u32, k: u32) -> Result<u32> {
    if k == p {
        return Ok(p - 1);
    }
    let cfg = SearchConfig {
        bound: BoundKind::Cardinality,
        threads: 1,
        ..SearchConfig::default()
    };
    Ok(max_free_exact(p, 1, k, &cfg)?.size() as u32)
}

fn check_args(p: u32, n: u32, k: u32) -> Result<SpaceSpec> {
    let space = SpaceSpec::new(p, n)?;
    if k < 3 || k > p {
        return Err(Error::input(format!(
            "progression length k = {k} must lie in [3, {p}]"
        )));
    }
    if space.num_points() > MAX_SEARCH_POINTS {
        return Err(Error::Resource(format!(
            "{space} has {} points, search is limited to {MAX_SEARCH_POINTS}",
            space.num_points()
        )));
    }
    Ok(space)
}

/// Maximum size of a `k`-progression-free subset of F_p^n.
pub fn max_free_exact(p: u32, n: u32, k: u32, cfg: &SearchConfig) -> Result<SearchResult> {
    let space = check_args(p, n, k)?;
    if cfg.threads == 0 {
        return Err(Error::input("thread count must be positive"));
    }
    if cfg.time_budget == Some(Duration::ZERO) || cfg.node_budget == Some(0) {
        return Err(Error::input("budgets must be positive"));
    }
    let start = Instant::now();
    let warm = match &cfg.warm_start {
        Some(w) => {
            if w.space() != space {
                return Err(Error::input(format!(
                    "warm start lives in {}, not {space}",
                    w.space()
                )));
            }
            if find_progression(w, k)?.is_some() {
                return Err(Error::input(format!(
                    "warm start contains a {k}-progression"
                )));
            }
            Some(w.clone())
        }
        None => None,
    };
    let cap = if n == 1 { k - 1 } else { line_capacity(p, k)? };
    // For n = 1 the single line gives no useful capacity bound.
    let pb = Problem::build(&space, k, if n == 1 { p } else { cap });
    let mut root = State::new(&pb);
    if cfg.fix_frame {
        root.exclude(0);
        if n >= 2 {
            for i in 0..n {
                root.exclude((p as usize).pow(i));
            }
        }
    }
    let mut tasks = Vec::new();
    split(
        &mut root,
        cfg.order,
        SPLIT_DEPTH,
        &mut Vec::new(),
        &mut tasks,
    );

    let shared = Shared {
        task_best: (0..tasks.len()).map(|_| AtomicUsize::new(0)).collect(),
        warm: warm.as_ref().map_or(0, |w| w.len()),
        nodes: AtomicU64::new(0),
        stop: AtomicBool::new(false),
        deadline: cfg.time_budget.map(|d| start + d),
        node_budget: cfg.node_budget,
    };
    let results: Mutex<Vec<Option<Found>>> = Mutex::new(vec![None; tasks.len()]);
    let next = AtomicUsize::new(0);
    let aborted = AtomicBool::new(false);
    std::thread::scope(|scope| {
        for _ in 0..cfg.threads.min(tasks.len()) {
            scope.spawn(|| {
                let mut state = root.clone();
                loop {
                    let t = next.fetch_add(1, Ordering::Relaxed);
                    if t >= tasks.len() {
                        break;
                    }
                    let mark = state.trail.len();
                    let mut feasible = true;
                    for &(q, include) in &tasks[t] {
                        if include {
                            feasible &= state.choose(q);
                        } else {
                            state.exclude(q);
                        }
                    }
                    if feasible {
                        let mut w = Worker {
                            state,
                            cfg,
                            shared: &shared,
                            task: t,
                            best: 0,
                            best_set: None,
                            le: 0,
                            lt: 0,
                            local_nodes: 0,
                            aborted: false,
                        };
                        w.refresh();
                        if !w.aborted {
                            w.dfs();
                        }
                        shared.nodes.fetch_add(w.local_nodes, Ordering::Relaxed);
                        if w.aborted {
                            aborted.store(true, Ordering::Relaxed);
                        }
                        if let Some(set) = w.best_set.take() {
                            results.lock().unwrap()[t] = Some((w.best, set));
                        }
                        state = w.state;
                    }
                    state.undo_to(mark);
                }
            });
        }
    });

    let mut best: Option<(usize, Vec<usize>)> = None;
    for r in results.into_inner().unwrap().into_iter().flatten() {
        if best.as_ref().is_none_or(|b| r.0 > b.0) {
            best = Some(r);
        }
    }
    let best_set = match (best, warm) {
        (Some((size, set)), w) if w.as_ref().is_none_or(|w| size > w.len()) => {
            PointSet::from_indices(space, set)?
        }
        (_, Some(w)) => w,
        (_, None) => PointSet::empty(space),
    };
    if find_progression(&best_set, k)?.is_some() {
        return Err(Error::Internal(
            "search produced a set containing a progression".into(),
        ));
    }
    Ok(SearchResult {
        p,
        n,
        k,
        best: best_set,
        optimal: !aborted.load(Ordering::Relaxed),
        nodes: shared.nodes.load(Ordering::Relaxed),
        wall_time: start.elapsed(),
    })
}

/// Budget-limited search seeded with a known progression-free set.
pub fn heuristic_lower(p: u32, n: u32, k: u32, cfg: &SearchConfig) -> Result<SearchResult> {
    if cfg.warm_start.is_none() {
        return Err(Error::input("heuristic search needs a warm start"));
    }
    max_free_exact(p, n, k, cfg)
}

/// Exhaustive maximum over all subsets of a space with at most 20 points.
/// Progressions are generated directly from coordinates, independently of
/// the line machinery used by the search.
pub fn brute_force_oracle(p: u32, n: u32, k: u32) -> Result<usize> {
    let space = SpaceSpec::new(p, n)?;
    if k < 3 || k > p {
        return Err(Error::input(format!(
            "progression length k = {k} must lie in [3, {p}]"
        )));
    }
    let np = space.num_points();
    if np > MAX_ORACLE_POINTS {
        return Err(Error::Resource(format!(
            "oracle is limited to {MAX_ORACLE_POINTS} points"
        )));
    }
    let mut masks: Vec<u32> = Vec::new();
    for a in 0..np {
        let ca = space.index_point(a);
        for b in 1..np {
            let cb = space.index_point(b);
            let mut m = 0u32;
            for i in 0..k {
                let c: Vec<u32> =
                    ca.0.iter()
                        .zip(&cb.0)
                        .map(|(&x, &y)| (x + i * y) % p)
                        .collect();
                m |= 1 << space.index_of(&c);
            }
            masks.push(m);
        }
    }
    masks.sort_unstable();
    masks.dedup();
    let mut best = 0;
    for s in 0u32..(1u32 << np) {
        let size = s.count_ones() as usize;
        if size > best && masks.iter().all(|&m| m & s != m) {
            best = size;
        }
    }
    Ok(best)
}
