//! Exact minimal generators of the two preimage sets, computed on finite
//! automata that read the configuration word right to left.
//!
//! A state records, for every way the successor side can be chosen, how far
//! each target generator has been matched from the right (greedy rightmost
//! embedding). Two words reaching the same state behave identically under
//! any extension to the left, so a breadth-first search that drops a word
//! whenever a smaller word already reached its state visits every minimal
//! member and terminates.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::hash::Hash;

use crate::compressed::{covering_sigma_star, Budget, Compressed, CompressedError};
use crate::orders::{embeds, Order, UpSet};
use crate::region::{Abstraction, Bits, Config, Letter};

/// The breadth-first search generated more nodes than its budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchError(pub usize);

impl std::fmt::Display for SearchError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "context search exceeded {} nodes", self.0)
    }
}

pub trait ContextAutomaton {
    type State: Clone + Eq + Hash;
    fn init(&self) -> Self::State;
    /// Prepend `l` to the word read so far.
    fn step(&self, s: &Self::State, l: Letter) -> Self::State;
    fn accepts(&self, s: &Self::State) -> bool;
}

/// Accepted words that are minimal among those found; words are extended to
/// the left and never past `max_len` letters.
pub fn minimal_contexts<A: ContextAutomaton>(
    a: &A,
    universe: &[Letter],
    max_len: usize,
    node_budget: usize,
    nodes: &mut usize,
) -> Result<Vec<Vec<Letter>>, SearchError> {
    let mut memo: HashMap<A::State, Vec<Vec<Letter>>> = HashMap::new();
    let s0 = a.init();
    memo.insert(s0.clone(), vec![vec![]]);
    let mut queue = VecDeque::from([(s0, Vec::<Letter>::new())]);
    let mut found = vec![];
    while let Some((s, w)) = queue.pop_front() {
        if a.accepts(&s) {
            found.push(w);
            continue;
        }
        if w.len() >= max_len {
            continue;
        }
        for &l in universe {
            *nodes += 1;
            if *nodes > node_budget {
                return Err(SearchError(node_budget));
            }
            let mut w2 = Vec::with_capacity(w.len() + 1);
            w2.push(l);
            w2.extend_from_slice(&w);
            let s2 = a.step(&s, l);
            let seen = memo.entry(s2.clone()).or_default();
            if seen.iter().any(|v| embeds(v, &w2)) {
                continue;
            }
            seen.push(w2.clone());
            queue.push_back((s2, w2));
        }
    }
    Ok(found)
}

/// Minimise a progress set: keep the pointwise-smallest entries, which are
/// the hardest for membership.
fn minimize<T: Ord + Clone>(items: BTreeSet<T>, le: impl Fn(&T, &T) -> bool) -> BTreeSet<T> {
    let v: Vec<T> = items.into_iter().collect();
    v.iter()
        .enumerate()
        .filter(|(i, a)| !v.iter().enumerate().any(|(j, b)| j != *i && le(b, a) && (b != *a || j < *i)))
        .map(|(_, a)| a.clone())
        .collect()
}

fn vec_le(a: &[u16], b: &[u16]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Per action and context letter: the possible `(image, resets)`.
pub struct StepTables {
    acts: Vec<HashMap<Letter, Vec<(Letter, Bits)>>>,
}

impl StepTables {
    pub fn new(h: &Abstraction, universe: &[Letter]) -> StepTables {
        let acts = (0..h.n_actions())
            .map(|act| {
                universe
                    .iter()
                    .map(|&l| (l, h.letter_step(l, act).into_iter().map(|(l2, g)| (l2, g.0)).collect()))
                    .collect()
            })
            .collect();
        StepTables { acts }
    }
}

/// One way a delay move can act on the context letters: unchanged (`None`)
/// or by a letter move.
struct DelayVariant {
    act: Option<usize>,
    /// `(first letter without context resets, unbounded part)` choices.
    fixed: Vec<(Bits, Bits)>,
}

/// Reads the context `w` of a configuration `w·last` with unbounded part
/// `inf`; accepts when every delay successor lies in `x`.
pub struct DelayAutomaton<'a> {
    gens: &'a [Config],
    tables: &'a StepTables,
    variants: Vec<DelayVariant>,
}

type DelayState = Vec<BTreeSet<(Vec<u16>, Bits)>>;

impl<'a> DelayAutomaton<'a> {
    pub fn new(h: &Abstraction, x: &'a UpSet, tables: &'a StepTables, last: Letter, inf: Bits) -> DelayAutomaton<'a> {
        assert_eq!(x.order, Order::Leq);
        let mut variants = vec![];
        if let Some(c) = h.delay_eps(&Config::new(vec![last], inf)) {
            // The last letter moves to the front.
            let head = if c.word.len() == 1 { c.word[0].0 } else { 0 };
            variants.push(DelayVariant { act: None, fixed: vec![(head, c.inf)] });
        }
        for act in 0..h.n_actions() {
            let fixed: BTreeSet<(Bits, Bits)> = h
                .delay_act_successors(&Config::new(vec![last], inf), act)
                .into_iter()
                .map(|c| (c.word[0].0, c.inf))
                .collect();
            if !fixed.is_empty() {
                variants.push(DelayVariant { act: Some(act), fixed: fixed.into_iter().collect() });
            }
        }
        DelayAutomaton { gens: x.generators(), tables, variants }
    }

    fn advance(&self, p: &[u16], v: Letter) -> Vec<u16> {
        p.iter()
            .zip(self.gens)
            .map(|(&k, g)| {
                let n = g.word.len() as u16;
                if k < n && g.word[(n - 1 - k) as usize].subset_of(v) {
                    k + 1
                } else {
                    k
                }
            })
            .collect()
    }
}

impl ContextAutomaton for DelayAutomaton<'_> {
    type State = DelayState;

    fn init(&self) -> DelayState {
        let zero = vec![0u16; self.gens.len()];
        self.variants.iter().map(|_| BTreeSet::from([(zero.clone(), 0)])).collect()
    }

    fn step(&self, s: &DelayState, l: Letter) -> DelayState {
        s.iter()
            .zip(&self.variants)
            .map(|(set, var)| {
                let mut next = BTreeSet::new();
                for (p, g) in set {
                    match var.act {
                        None => {
                            next.insert((self.advance(p, l), *g));
                        }
                        Some(act) => {
                            for &(img, r) in &self.tables.acts[act][&l] {
                                next.insert((self.advance(p, img), g | r));
                            }
                        }
                    }
                }
                minimize(next, |a, b| vec_le(&a.0, &b.0) && a.1 & !b.1 == 0)
            })
            .collect()
    }

    fn accepts(&self, s: &DelayState) -> bool {
        s.iter().zip(&self.variants).all(|(set, var)| {
            set.iter().all(|(p, g)| {
                var.fixed.iter().all(|&(head, inf)| {
                    let first = Letter(head | g);
                    self.gens.iter().zip(p).any(|(gen, &k)| {
                        let rem = gen.word.len() - k as usize;
                        gen.inf & !inf == 0 && (rem == 0 || (rem == 1 && !first.is_empty() && gen.word[0].subset_of(first)))
                    })
                })
            })
        })
    }
}

/// Progress of one compressed item against refined-order generators.
/// Entry `0` marks a generator whose last letter is not covered; `k + 1`
/// means `k` letters of its remaining prefix are matched from the right.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ItemState {
    Start,
    Progress(BTreeSet<Vec<u16>>),
}

struct SigmaItem {
    item: Compressed,
    gens: Vec<Config>,
}

/// Interned progress sets of one item with memoized transitions; id 0 is
/// `Start`.
#[derive(Default)]
struct ItemTable {
    states: Vec<ItemState>,
    index: HashMap<ItemState, u32>,
    trans: HashMap<(u32, Letter), u32>,
    accept: Vec<bool>,
}

/// Reads a whole configuration word with fixed unbounded part; accepts when
/// every configuration reachable by letter moves lies in `y`.
pub struct SigmaAutomaton<'a> {
    items: Vec<SigmaItem>,
    tables: RefCell<Vec<ItemTable>>,
    y: &'a UpSet,
}

impl<'a> SigmaAutomaton<'a> {
    pub fn new(family: Vec<Compressed>, y: &'a UpSet) -> SigmaAutomaton<'a> {
        assert_eq!(y.order, Order::LeqR);
        let items: Vec<SigmaItem> = family
            .into_iter()
            .map(|item| {
                let gens = y.generators().iter().filter(|g| g.inf & !item.inf == 0).cloned().collect();
                SigmaItem { item, gens }
            })
            .collect();
        let a = SigmaAutomaton { tables: RefCell::new(items.iter().map(|_| ItemTable::default()).collect()), items, y };
        for i in 0..a.items.len() {
            a.intern(i, ItemState::Start);
        }
        a
    }

    fn intern(&self, i: usize, st: ItemState) -> u32 {
        if let Some(&id) = self.tables.borrow()[i].index.get(&st) {
            return id;
        }
        let acc = self.item_accepts(&self.items[i], &st);
        let mut tables = self.tables.borrow_mut();
        let t = &mut tables[i];
        let id = t.states.len() as u32;
        t.states.push(st.clone());
        t.index.insert(st, id);
        t.accept.push(acc);
        id
    }

    fn advance(gens: &[Config], p: &[u16], v: Letter) -> Vec<u16> {
        p.iter()
            .zip(gens)
            .map(|(&k, g)| {
                let n = g.word.len() as u16;
                if k > 0 && k < n && g.word[(n - 1 - k) as usize].subset_of(v) {
                    k + 1
                } else {
                    k
                }
            })
            .collect()
    }

    fn item_step(it: &SigmaItem, st: &ItemState, l: Letter) -> ItemState {
        let mut next = BTreeSet::new();
        match st {
            ItemState::Start => {
                for v in it.item.image(l) {
                    next.insert(it.gens.iter().map(|g| u16::from(g.word.last().unwrap().subset_of(v))).collect());
                }
            }
            ItemState::Progress(set) => {
                for p in set {
                    for v in it.item.image(l) {
                        next.insert(Self::advance(&it.gens, p, v));
                    }
                }
            }
        }
        // A vector with a complete match stays complete under further
        // left extension, so it no longer constrains acceptance.
        next.retain(|p: &Vec<u16>| !p.iter().zip(&it.gens).any(|(&k, g)| k as usize == g.word.len()));
        ItemState::Progress(minimize(next, |a: &Vec<u16>, b: &Vec<u16>| vec_le(a, b)))
    }

    fn item_accepts(&self, it: &SigmaItem, st: &ItemState) -> bool {
        match st {
            ItemState::Start => self.y.contains(&it.item.head_config()),
            ItemState::Progress(set) => set.iter().all(|p| {
                let mut p = p.clone();
                for &v in it.item.head.iter().rev() {
                    p = Self::advance(&it.gens, &p, v);
                }
                p.iter().zip(&it.gens).any(|(&k, g)| k as usize == g.word.len())
            }),
        }
    }
}

impl ContextAutomaton for SigmaAutomaton<'_> {
    type State = Vec<u32>;

    fn init(&self) -> Self::State {
        vec![0; self.items.len()]
    }

    fn step(&self, s: &Self::State, l: Letter) -> Self::State {
        s.iter()
            .enumerate()
            .map(|(i, &id)| {
                if let Some(&to) = self.tables.borrow()[i].trans.get(&(id, l)) {
                    return to;
                }
                let st = self.tables.borrow()[i].states[id as usize].clone();
                let to = self.intern(i, Self::item_step(&self.items[i], &st, l));
                self.tables.borrow_mut()[i].trans.insert((id, l), to);
                to
            })
            .collect()
    }

    fn accepts(&self, s: &Self::State) -> bool {
        let tables = self.tables.borrow();
        s.iter().enumerate().all(|(i, &id)| tables[i].accept[id as usize])
    }
}

/// Generators of the delay preimage of `x` (refined order), excluding the
/// implicit empty-word members.
pub fn delay_generators(
    h: &Abstraction,
    x: &UpSet,
    universe: &[Letter],
    max_len: u64,
    node_budget: usize,
    nodes: &mut usize,
) -> Result<UpSet, SearchError> {
    let tables = StepTables::new(h, universe);
    let mut found = vec![];
    for &last in universe {
        for inf in 0..(1u128 << h.n) {
            let a = DelayAutomaton::new(h, x, &tables, last, inf);
            let ctx_len = max_len.saturating_sub(1).min(usize::MAX as u64) as usize;
            for mut w in minimal_contexts(&a, universe, ctx_len, node_budget, nodes)? {
                w.push(last);
                found.push(Config::new(w, inf));
            }
        }
    }
    found.sort_by_key(|c| c.size());
    let mut y = UpSet::with_bare_inf(Order::LeqR);
    for c in found {
        y.insert(c);
    }
    Ok(y)
}

/// Generators of the letter-move preimage of `y` (plain order), given the
/// letter-move covering family of every unbounded part (indexed by it).
pub fn sigma_generators(
    families: &[Vec<Compressed>],
    y: &UpSet,
    universe: &[Letter],
    max_len: u64,
    node_budget: usize,
    nodes: &mut usize,
) -> Result<UpSet, SearchError> {
    let mut found = vec![];
    for (inf, fam) in families.iter().enumerate() {
        let a = SigmaAutomaton::new(fam.clone(), y);
        let len = max_len.min(usize::MAX as u64) as usize;
        for w in minimal_contexts(&a, universe, len, node_budget, nodes)? {
            found.push(Config::new(w, inf as Bits));
        }
    }
    found.sort_by_key(|c| c.size());
    Ok(UpSet::from_generators(Order::Leq, found))
}

/// The letter-move covering family of every unbounded part.
pub fn sigma_families(h: &Abstraction, universe: &[Letter], budget: &Budget) -> Result<Vec<Vec<Compressed>>, CompressedError> {
    (0..(1u128 << h.n)).map(|inf| covering_sigma_star(h, inf, universe, budget)).collect()
}
