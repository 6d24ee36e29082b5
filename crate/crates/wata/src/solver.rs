//! Emptiness decision: the backward fixpoint over upward closed sets of
//! "no good continuation" configurations, the forward reachability tree, and
//! lasso witnesses.

use std::collections::{HashMap, HashSet, VecDeque};

use rayon::prelude::*;
use thiserror::Error;

use crate::ata::{Automaton, Condition};
use crate::contexts;
use crate::compressed::{self, all_letters, bound_b, covering_delay, covering_sigma_star, Budget};
use crate::orders::{leq, leq_r, Order, UpSet};
use crate::region::{AbstractError, Abstraction, Bits, Config, Letter, Move};

pub const DEFAULT_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    /// At most this many candidates per generator enumeration.
    Capped(usize),
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Capped(_) => "capped",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub mode: Mode,
    /// Node budget for one reachability tree (pre-Σ* membership, forward tree).
    pub tree_nodes: usize,
    /// Largest configuration size explored by the lasso search.
    pub witness_max_size: usize,
    pub witness_nodes: usize,
    /// Node budget of each exact context search.
    pub context_nodes: usize,
    pub covering: Budget,
}

impl Default for SolverOptions {
    fn default() -> SolverOptions {
        SolverOptions {
            mode: Mode::Exact,
            tree_nodes: 200_000,
            witness_max_size: 8,
            witness_nodes: 200_000,
            context_nodes: 2_000_000,
            covering: Budget::default(),
        }
    }
}

impl SolverOptions {
    pub fn with_mode(mode: Mode) -> SolverOptions {
        SolverOptions { mode, ..SolverOptions::default() }
    }

    fn covering_budget(&self) -> Budget {
        match self.mode {
            Mode::Exact => self.covering,
            Mode::Capped(n) => Budget { items: self.covering.items.min(n), closure: self.covering.closure.min(n), ..self.covering },
        }
    }

    fn context_budget(&self) -> usize {
        match self.mode {
            Mode::Exact => self.context_nodes,
            Mode::Capped(n) => self.context_nodes.min(n),
        }
    }

    fn candidate_limit(&self) -> usize {
        match self.mode {
            Mode::Exact => usize::MAX,
            Mode::Capped(n) => n,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub iterations: usize,
    pub generators_per_z: Vec<usize>,
    pub generators_per_y: Vec<usize>,
    pub candidates: usize,
    /// Word-length stop bounds per iteration (`None` when not computable).
    pub delay_bounds: Vec<Option<u64>>,
    pub sigma_bounds: Vec<Option<u64>>,
    pub nodes_explored: usize,
    pub exact: bool,
    /// Every step of the chain satisfied `Z_{i-1}↑ ⊆ Z_i↑`.
    pub monotone: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("acceptance condition is {0}; only weak (0,1) is supported")]
    OutOfClass(Condition),
    #[error(transparent)]
    Abstract(#[from] AbstractError),
    #[error("resource limit in exact mode: {what} (after {iterations} iterations, {candidates} candidates)")]
    Resource { what: String, iterations: usize, candidates: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub mv: Move,
    pub to: Config,
}

/// A path from the start configuration followed by a cycle returning to
/// the configuration the stem ends in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LassoWitness {
    pub stem: Vec<Step>,
    pub cycle: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VerdictKind {
    Nonempty,
    Empty,
    Unknown(String),
}

impl VerdictKind {
    pub fn label(&self) -> &'static str {
        match self {
            VerdictKind::Nonempty => "NONEMPTY",
            VerdictKind::Empty => "EMPTY",
            VerdictKind::Unknown(_) => "UNKNOWN",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Present for every NONEMPTY verdict whose lasso was found within the
    /// search bounds; always validated.
    pub witness: Option<LassoWitness>,
    pub stats: Stats,
    pub mode: Mode,
}

/// All delay successors of `c` lie in `x`. A configuration with an empty
/// word has no delay successors; the empty configuration is treated as a
/// dead end instead, so it is a member only if `x` contains it.
pub fn pre_delay_member(h: &Abstraction, c: &Config, x: &UpSet) -> bool {
    if c.word.is_empty() {
        return c.inf != 0 || x.contains(c);
    }
    let mut moves = vec![Move::DelayEps];
    moves.extend((0..h.n_actions()).map(Move::DelayAct));
    moves.into_iter().all(|mv| h.successors(c, mv).iter().all(|s| x.contains(s)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exhausted;

/// Every configuration reachable from `c` by letter moves (including `c`)
/// lies in `y`. Explores the reachability tree, skipping nodes that dominate
/// an already seen node under the refined order.
pub fn pre_sigma_member(h: &Abstraction, c: &Config, y: &UpSet, node_budget: usize) -> Result<bool, Exhausted> {
    if !y.contains(c) {
        return Ok(false);
    }
    let mut seen: Vec<Config> = vec![c.clone()];
    let mut queue = VecDeque::from([c.clone()]);
    while let Some(d) = queue.pop_front() {
        for act in 0..h.n_actions() {
            for s in h.act_successors(&d, act) {
                if seen.iter().any(|e| *e == s || leq_r(e, &s)) {
                    continue;
                }
                if !y.contains(&s) {
                    return Ok(false);
                }
                if seen.len() >= node_budget {
                    return Err(Exhausted);
                }
                seen.push(s.clone());
                queue.push_back(s);
            }
        }
    }
    Ok(true)
}

/// Candidate configurations grouped by size.
pub struct CandidateSpace {
    by_pop: Vec<Vec<Letter>>,
    infs_by_pop: Vec<Vec<Bits>>,
}

impl CandidateSpace {
    pub fn new(h: &Abstraction) -> Result<CandidateSpace, SolverError> {
        let letters = all_letters(h).map_err(|_| AbstractError::TooLarge { pairs: h.n_pairs() })?;
        let mut by_pop = vec![vec![]; h.n_pairs() + 1];
        for l in letters {
            by_pop[l.len()].push(l);
        }
        let mut infs_by_pop = vec![vec![]; h.n + 1];
        for s in 0..(1u128 << h.n) {
            infs_by_pop[s.count_ones() as usize].push(s);
        }
        Ok(CandidateSpace { by_pop, infs_by_pop })
    }

    pub fn n_pairs(&self) -> usize {
        self.by_pop.len() - 1
    }

    pub fn n_states(&self) -> usize {
        self.infs_by_pop.len() - 1
    }

    /// Configurations of exactly `size` with at most `max_len` letters,
    /// appended to `out` until it holds `limit` items. Returns false when the
    /// limit cut the listing short.
    pub fn of_size(&self, size: usize, nonempty_word: bool, max_len: Option<usize>, limit: usize, out: &mut Vec<Config>) -> bool {
        for j in 0..=size.min(self.infs_by_pop.len() - 1) {
            let m = size - j;
            if nonempty_word && m == 0 {
                continue;
            }
            for &inf in &self.infs_by_pop[j] {
                let mut word = vec![];
                if !self.words(m, &mut word, max_len.unwrap_or(usize::MAX), inf, limit, out) {
                    return false;
                }
            }
        }
        true
    }

    fn words(&self, m: usize, word: &mut Vec<Letter>, max_len: usize, inf: Bits, limit: usize, out: &mut Vec<Config>) -> bool {
        if m == 0 {
            if out.len() >= limit {
                return false;
            }
            out.push(Config::new(word.clone(), inf));
            return true;
        }
        if (max_len - word.len().min(max_len)).saturating_mul(self.n_pairs()) < m {
            return true;
        }
        for p in 1..=m.min(self.by_pop.len() - 1) {
            for &l in &self.by_pop[p] {
                word.push(l);
                let ok = self.words(m - p, word, max_len, inf, limit, out);
                word.pop();
                if !ok {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    pub generators: Vec<Config>,
    pub exact: bool,
    pub candidates: usize,
}

/// Minimal members of an upward closed predicate among configurations whose
/// word is at most `max_len` letters long (unbounded when `None`), listed by
/// nondecreasing size. A member not dominated by an earlier one is minimal,
/// since anything strictly below it is smaller. `member` returning `None`
/// marks the result inexact.
pub fn enumerate_min_generators<F>(
    space: &CandidateSpace,
    member: F,
    order: Order,
    max_len: Option<u64>,
    cap: usize,
) -> Enumeration
where
    F: Fn(&Config) -> Option<bool> + Sync,
{
    let mut kept = UpSet::new(order);
    let mut candidates = 0usize;
    let mut exact = true;
    let mut size = 0usize;
    let len = max_len.map(|l| l.min(usize::MAX as u64) as usize);
    let last_size = len.map(|l| l.saturating_mul(space.n_pairs()).saturating_add(space.n_states()));
    loop {
        if last_size.is_some_and(|m| size > m) {
            break;
        }
        let mut batch = vec![];
        let complete = space.of_size(size, order == Order::LeqR, len, cap.saturating_sub(candidates), &mut batch);
        candidates += batch.len();
        let fresh: Vec<Config> = batch.into_iter().filter(|c| !kept.contains(c)).collect();
        let verdicts: Vec<Option<bool>> = fresh.par_iter().map(&member).collect();
        for (c, v) in fresh.into_iter().zip(verdicts) {
            match v {
                Some(true) => {
                    kept.insert(c);
                }
                Some(false) => {}
                None => exact = false,
            }
        }
        if !complete {
            exact = false;
            break;
        }
        size += 1;
    }
    Enumeration { generators: kept.generators().to_vec(), exact, candidates }
}

fn item_bound(x: &UpSet, inf: Bits) -> u64 {
    x.generators()
        .iter()
        .filter(|g| g.inf & !inf == 0)
        .fold(1u64, |acc, g| acc.saturating_mul(g.word.len() as u64 + 1))
        .saturating_add(1)
}

/// Word-length bound for the refined-order minimal elements of the delay
/// preimage of `x`, or `None` when it cannot be computed. Uses the
/// materialized covering family when it fits the budget and otherwise
/// counts transition choices, which over-approximates the family.
pub fn compute_m_delay(h: &Abstraction, x: &UpSet, budget: &Budget) -> Option<u64> {
    let universe = all_letters(h).ok()?;
    let mut counts = vec![];
    for act in 0..h.n_actions() {
        let mut count: u64 = 1;
        for &l in &universe {
            let m = h.letter_step(l, act).len();
            if m > budget.transitions_per_letter {
                return None;
            }
            count = count.saturating_mul(1u64.checked_shl(m as u32).unwrap_or(u64::MAX));
        }
        counts.push(count);
    }
    let materialize = counts.iter().fold(0u64, |a, &c| a.saturating_add(c)) <= budget.items as u64;
    let mut best = 0u64;
    for &last in &universe {
        for inf in 0..(1u128 << h.n) {
            let b = if materialize {
                bound_b(&covering_delay(h, last, inf, &universe, budget).ok()?, x)
            } else {
                let mut b = 0u64;
                if let Some(c) = h.delay_eps(&Config::new(vec![last], inf)) {
                    b = b.saturating_add(item_bound(x, c.inf));
                }
                for (act, &count) in counts.iter().enumerate() {
                    let fixed: HashSet<(Bits, Bits)> = h
                        .delay_act_successors(&Config::new(vec![last], inf), act)
                        .into_iter()
                        .map(|c| (c.word[0].0, c.inf))
                        .collect();
                    for (_, inf2) in fixed {
                        b = b.saturating_add(count.saturating_mul(item_bound(x, inf2)));
                    }
                }
                b
            };
            best = best.max(b);
        }
    }
    Some(best.saturating_add(2))
}

/// Word-length bound for the minimal elements of the letter-move preimage of `y`.
pub fn compute_m_sigma(h: &Abstraction, y: &UpSet, budget: &Budget) -> Result<u64, compressed::CompressedError> {
    let universe = all_letters(h)?;
    let mut best = 0u64;
    for inf in 0..(1u128 << h.n) {
        let fam = covering_sigma_star(h, inf, &universe, budget)?;
        best = best.max(bound_b(&fam, y));
    }
    Ok(best.saturating_add(1))
}

/// Configuration size reached by words of `len` letters.
pub fn size_bound(h: &Abstraction, len: u64) -> u64 {
    len.saturating_mul(h.n_pairs() as u64).saturating_add(h.n as u64)
}

/// One step of the chain.
#[derive(Clone, Debug)]
pub struct ZStep {
    pub iteration: usize,
    pub y: UpSet,
    pub z: UpSet,
    pub m_delay: Option<u64>,
    pub m_sigma: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct Fixpoint {
    pub z: UpSet,
    pub chain: Vec<ZStep>,
    pub stats: Stats,
}

fn resource(what: impl Into<String>, stats: &Stats) -> SolverError {
    SolverError::Resource { what: what.into(), iterations: stats.iterations, candidates: stats.candidates }
}

/// The increasing chain `Z_i = pre_Σ*(pre_delay(Z_{i-1}↑))` from `Z_{-1} = ∅`
/// until two consecutive upward closures agree.
pub fn z_fixpoint(h: &Abstraction, opts: &SolverOptions) -> Result<Fixpoint, SolverError> {
    let space = CandidateSpace::new(h)?;
    let universe = all_letters(h).map_err(|e| resource(e.to_string(), &Stats::default()))?;
    let exact_mode = opts.mode == Mode::Exact;
    let budget = opts.covering_budget();
    let nodes = opts.context_budget();
    let mut stats = Stats { exact: true, monotone: true, ..Stats::default() };
    let mut prev = UpSet::new(Order::Leq);
    let mut chain = vec![];
    loop {
        let m_delay = compute_m_delay(h, &prev, &budget);
        stats.delay_bounds.push(m_delay);
        // The context search is complete on its own; the stop bound only
        // limits its depth.
        let mut used = 0;
        let searched = contexts::delay_generators(h, &prev, &universe, m_delay.unwrap_or(u64::MAX), nodes, &mut used);
        stats.candidates += used;
        let y = match searched {
            Ok(y) => y,
            Err(e) if exact_mode => return Err(resource(format!("delay preimage: {e}"), &stats)),
            Err(_) => {
                let ye = enumerate_min_generators(
                    &space,
                    |c| Some(pre_delay_member(h, c, &prev)),
                    Order::LeqR,
                    m_delay,
                    opts.candidate_limit(),
                );
                stats.candidates += ye.candidates;
                stats.exact &= ye.exact;
                let mut y = UpSet::with_bare_inf(Order::LeqR);
                for g in ye.generators {
                    y.insert(g);
                }
                y
            }
        };
        let families = contexts::sigma_families(h, &universe, &budget);
        let m_sigma = families.as_ref().ok().map(|fams| fams.iter().map(|f| bound_b(f, &y)).max().unwrap_or(0).saturating_add(1));
        stats.sigma_bounds.push(m_sigma);
        let searched = match &families {
            Ok(fams) => {
                let mut used = 0;
                let r = contexts::sigma_generators(fams, &y, &universe, m_sigma.unwrap_or(u64::MAX), nodes, &mut used);
                stats.candidates += used;
                r.map_err(|e| e.to_string())
            }
            Err(e) => Err(e.to_string()),
        };
        let z = match searched {
            Ok(z) => z,
            Err(e) if exact_mode => return Err(resource(format!("letter-move preimage: {e}"), &stats)),
            Err(_) => {
                let ze = enumerate_min_generators(
                    &space,
                    |c| pre_sigma_member(h, c, &y, opts.tree_nodes).ok(),
                    Order::Leq,
                    m_sigma,
                    opts.candidate_limit(),
                );
                stats.candidates += ze.candidates;
                stats.exact &= ze.exact;
                UpSet::from_generators(Order::Leq, ze.generators)
            }
        };
        if !z.includes(&prev) {
            stats.monotone = false;
        }
        stats.generators_per_y.push(y.len());
        stats.generators_per_z.push(z.len());
        let iteration = chain.len();
        let done = crate::orders::upset_equal(&z, &prev);
        chain.push(ZStep { iteration, y, z: z.clone(), m_delay, m_sigma });
        stats.iterations = chain.len();
        if done {
            return Ok(Fixpoint { z, chain, stats });
        }
        if !stats.exact && chain.len() > 64 {
            return Ok(Fixpoint { z, chain, stats });
        }
        prev = z;
    }
}

/// Forward reachability tree from the start configuration, pruned by the
/// embedding order. Returns a reachable configuration with only rank-0
/// states lying outside `z`, if any.
pub fn reach_good(h: &Abstraction, z: &UpSet, node_budget: usize) -> Result<(Option<Config>, usize), Exhausted> {
    let start = h.start();
    let mut seen = vec![start.clone()];
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        if h.is_positive_only(&c) && !z.contains(&c) {
            return Ok((Some(c), seen.len()));
        }
        for (_, s) in h.all_successors(&c) {
            if seen.iter().any(|e| leq(e, &s)) {
                continue;
            }
            if seen.len() >= node_budget {
                return Err(Exhausted);
            }
            seen.push(s.clone());
            queue.push_back(s);
        }
    }
    Ok((None, seen.len()))
}

/// Shortest-stem, then shortest-cycle lasso over configurations of size at
/// most `max_size`, whose cycle contains a delay move and only rank-0 states.
pub fn witness_search(h: &Abstraction, max_size: usize) -> Option<LassoWitness> {
    witness_search_budget(h, max_size, usize::MAX)
}

pub fn witness_search_budget(h: &Abstraction, max_size: usize, node_budget: usize) -> Option<LassoWitness> {
    let start = h.start();
    if start.size() > max_size {
        return None;
    }
    let mut index: HashMap<Config, usize> = HashMap::from([(start.clone(), 0)]);
    let mut nodes = vec![start];
    let mut parent: Vec<Option<(usize, Move)>> = vec![None];
    let mut succs: Vec<Vec<(Move, usize)>> = vec![];
    let mut i = 0;
    while i < nodes.len() {
        let c = nodes[i].clone();
        let mut out = vec![];
        for (mv, s) in h.all_successors(&c) {
            if s.size() > max_size {
                continue;
            }
            let j = match index.get(&s) {
                Some(&j) => j,
                None => {
                    if nodes.len() >= node_budget {
                        continue;
                    }
                    let j = nodes.len();
                    index.insert(s.clone(), j);
                    nodes.push(s);
                    parent.push(Some((i, mv)));
                    j
                }
            };
            out.push((mv, j));
        }
        succs.push(out);
        i += 1;
    }
    let positive: Vec<bool> = nodes.iter().map(|c| h.is_positive_only(c)).collect();
    for root in 0..nodes.len() {
        if !positive[root] {
            continue;
        }
        if let Some(cycle) = shortest_delay_cycle(root, &succs, &positive) {
            let mut stem = vec![];
            let mut cur = root;
            while let Some((p, mv)) = parent[cur] {
                stem.push(Step { mv, to: nodes[cur].clone() });
                cur = p;
            }
            stem.reverse();
            let cycle = cycle.into_iter().map(|(mv, j)| Step { mv, to: nodes[j].clone() }).collect();
            return Some(LassoWitness { stem, cycle });
        }
    }
    None
}

/// BFS over (node, delay seen) inside the rank-0 part of the graph.
fn shortest_delay_cycle(root: usize, succs: &[Vec<(Move, usize)>], positive: &[bool]) -> Option<Vec<(Move, usize)>> {
    let mut prev: HashMap<(usize, bool), ((usize, bool), Move)> = HashMap::new();
    let mut queue = VecDeque::from([(root, false)]);
    let goal = (root, true);
    while let Some(u) = queue.pop_front() {
        for &(mv, j) in &succs[u.0] {
            if !positive[j] {
                continue;
            }
            let v = (j, u.1 || mv.is_delay());
            if v == (root, false) || prev.contains_key(&v) {
                continue;
            }
            prev.insert(v, (u, mv));
            if v == goal {
                let mut path = vec![];
                let mut cur = goal;
                while cur != (root, false) {
                    let (p, mv) = prev[&cur];
                    path.push((mv, cur.0));
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(v);
        }
    }
    None
}

/// Replays the lasso move by move and checks the accepting-path conditions.
pub fn validate_witness(h: &Abstraction, w: &LassoWitness) -> bool {
    let mut cur = h.start();
    for st in &w.stem {
        if !h.successors(&cur, st.mv).contains(&st.to) {
            return false;
        }
        cur = st.to.clone();
    }
    let anchor = cur.clone();
    if w.cycle.is_empty() || !h.is_positive_only(&anchor) {
        return false;
    }
    for st in &w.cycle {
        if !h.successors(&cur, st.mv).contains(&st.to) || !h.is_positive_only(&st.to) {
            return false;
        }
        cur = st.to.clone();
    }
    cur == anchor && w.cycle.iter().any(|st| st.mv.is_delay())
}

pub fn decide_emptiness(a: &Automaton, opts: &SolverOptions) -> Result<Verdict, SolverError> {
    let a = a.normalize();
    let cond = a.classify_condition();
    if cond != Condition::Weak01 {
        return Err(SolverError::OutOfClass(cond));
    }
    let h = Abstraction::new(&a)?;
    let find_witness = || -> Option<LassoWitness> {
        let mut size = h.start().size().max(2);
        while size <= opts.witness_max_size {
            if let Some(w) = witness_search_budget(&h, size, opts.witness_nodes) {
                debug_assert!(validate_witness(&h, &w));
                return Some(w);
            }
            size += 2;
        }
        None
    };
    let fix = z_fixpoint(&h, opts)?;
    let mut stats = fix.stats.clone();
    let tree_budget = match opts.mode {
        Mode::Exact => opts.tree_nodes,
        Mode::Capped(n) => n.max(1),
    };
    let reach = reach_good(&h, &fix.z, tree_budget);
    let (kind, witness) = match reach {
        Ok((found, explored)) => {
            stats.nodes_explored = explored;
            match (found, stats.exact) {
                (Some(_), true) => (VerdictKind::Nonempty, find_witness()),
                (None, true) => (VerdictKind::Empty, None),
                (_, false) => match find_witness() {
                    Some(w) => (VerdictKind::Nonempty, Some(w)),
                    None => (VerdictKind::Unknown("fixpoint enumeration hit the cap and no lasso was found".into()), None),
                },
            }
        }
        Err(Exhausted) => {
            stats.nodes_explored = tree_budget;
            if opts.mode == Mode::Exact {
                return Err(resource("forward reachability tree", &stats));
            }
            stats.exact = false;
            match find_witness() {
                Some(w) => (VerdictKind::Nonempty, Some(w)),
                None => (VerdictKind::Unknown("reachability tree hit the cap and no lasso was found".into()), None),
            }
        }
    };
    Ok(Verdict { kind, witness, stats, mode: opts.mode })
}
