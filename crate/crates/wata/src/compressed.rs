//! Compressed configurations: a head word, a letter-to-letter-set expansion
//! map and an unbounded part. Families of them over-approximate the
//! successors of every configuration sharing a suffix shape, independently
//! of the context word in front.
//!
//! Expansion maps are stored relative to a finite letter universe; contexts
//! passed to `expand` must draw their letters from that universe.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::ata::ActionId;
use crate::orders::{compressed_leq, Order, UpSet};
use crate::region::{Abstraction, Bits, Config, Letter};

/// Expansion map; letters without an entry map to the empty set.
pub type FMap = BTreeMap<Letter, BTreeSet<Letter>>;

/// Largest pair count for which the full letter universe is materialized.
pub const MAX_UNIVERSE_PAIRS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompressedError {
    #[error("{what} exceeded its budget of {limit}")]
    Budget { what: &'static str, limit: usize },
    #[error("letter universe over {pairs} pairs is too large to enumerate")]
    UniverseTooLarge { pairs: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Compressed {
    pub head: Vec<Letter>,
    pub f: FMap,
    pub inf: Bits,
}

impl Compressed {
    /// `(head, sgl, inf)` with the identity map on `universe`.
    pub fn sgl(head: Vec<Letter>, inf: Bits, universe: &[Letter]) -> Compressed {
        Compressed { head, f: identity(universe), inf }
    }

    pub fn head_config(&self) -> Config {
        Config::new(self.head.clone(), self.inf)
    }

    pub fn image(&self, l: Letter) -> impl Iterator<Item = Letter> + '_ {
        self.f.get(&l).into_iter().flatten().copied()
    }
}

pub fn identity(universe: &[Letter]) -> FMap {
    universe.iter().map(|&l| (l, BTreeSet::from([l]))).collect()
}

/// Every non-empty letter over the pairs of `abs`.
pub fn all_letters(abs: &Abstraction) -> Result<Vec<Letter>, CompressedError> {
    let pairs = abs.n_pairs();
    if pairs > MAX_UNIVERSE_PAIRS {
        return Err(CompressedError::UniverseTooLarge { pairs });
    }
    Ok((1..(1u128 << pairs)).map(Letter).collect())
}

/// Distinct letters of a set of words, in order.
pub fn letters_of<'a>(words: impl IntoIterator<Item = &'a [Letter]>) -> Vec<Letter> {
    let set: BTreeSet<Letter> = words.into_iter().flatten().copied().collect();
    set.into_iter().collect()
}

/// `Exp(ĉ, w)`: head followed by one image per context letter.
pub fn expand(c: &Compressed, ctx: &[Letter]) -> Vec<Config> {
    let mut words: Vec<Vec<Letter>> = vec![c.head.clone()];
    for &l in ctx {
        let imgs: Vec<Letter> = c.image(l).collect();
        let mut next = Vec::with_capacity(words.len() * imgs.len());
        for w in &words {
            for &i in &imgs {
                let mut w2 = w.clone();
                w2.push(i);
                next.push(w2);
            }
        }
        words = next;
    }
    let mut out: Vec<Config> = words.into_iter().map(|w| Config::new(w, c.inf)).collect();
    out.sort();
    out.dedup();
    out
}

pub fn expand_family(family: &[Compressed], ctx: &[Letter]) -> BTreeSet<Config> {
    family.iter().flat_map(|c| expand(c, ctx)).collect()
}

/// Limits on the work done while building families.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    /// Transitions of one letter whose subsets are enumerated.
    pub transitions_per_letter: usize,
    /// Items produced by a single covering step.
    pub items: usize,
    /// Items generated by the star closure.
    pub closure: usize,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget { transitions_per_letter: 12, items: 200_000, closure: 200_000 }
    }
}

/// For one letter and action: the distinct `(images, reset union)` pairs
/// obtained from the subsets of its transitions.
fn t_options(abs: &Abstraction, l: Letter, act: ActionId, budget: &Budget) -> Result<Vec<(BTreeSet<Letter>, Bits)>, CompressedError> {
    let trans = abs.letter_step(l, act);
    if trans.len() > budget.transitions_per_letter {
        return Err(CompressedError::Budget { what: "transitions per letter", limit: budget.transitions_per_letter });
    }
    let mut out = BTreeSet::new();
    for mask in 0u64..(1u64 << trans.len()) {
        let mut imgs = BTreeSet::new();
        let mut g = 0;
        for (i, &(l2, g2)) in trans.iter().enumerate() {
            if mask >> i & 1 == 1 {
                imgs.insert(l2);
                g |= g2.0;
            }
        }
        out.insert((imgs, g));
    }
    Ok(out.into_iter().collect())
}

/// Product over `letters` of their transition-subset options: every
/// resulting `(map on letters, reset union)`.
fn t_choices(
    abs: &Abstraction,
    letters: &[Letter],
    act: ActionId,
    budget: &Budget,
) -> Result<Vec<(BTreeMap<Letter, BTreeSet<Letter>>, Bits)>, CompressedError> {
    let mut acc: Vec<(BTreeMap<Letter, BTreeSet<Letter>>, Bits)> = vec![(BTreeMap::new(), 0)];
    for &l in letters {
        let opts = t_options(abs, l, act, budget)?;
        if acc.len().saturating_mul(opts.len()) > budget.items {
            return Err(CompressedError::Budget { what: "covering family size", limit: budget.items });
        }
        let mut next = Vec::with_capacity(acc.len() * opts.len());
        for (m, g) in &acc {
            for (imgs, g2) in &opts {
                let mut m2 = m.clone();
                if !imgs.is_empty() {
                    m2.insert(l, imgs.clone());
                }
                next.push((m2, g | g2));
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// Family covering every delay successor of `w·last` with unbounded part
/// `inf`, for all contexts `w` over `universe`.
pub fn covering_delay(
    abs: &Abstraction,
    last: Letter,
    inf: Bits,
    universe: &[Letter],
    budget: &Budget,
) -> Result<Vec<Compressed>, CompressedError> {
    let mut out = BTreeSet::new();
    if let Some(c) = abs.delay_eps(&Config::new(vec![last], inf)) {
        out.insert(Compressed::sgl(c.word, c.inf, universe));
    }
    for act in 0..abs.n_actions() {
        // With an empty context the successors are exactly the fixed parts.
        let fixed: BTreeSet<(Bits, Bits)> = abs
            .delay_act_successors(&Config::new(vec![last], inf), act)
            .into_iter()
            .map(|c| (c.word[0].0, c.inf))
            .collect();
        if fixed.is_empty() {
            continue;
        }
        let choices = t_choices(abs, universe, act, budget)?;
        for &(g_fixed, inf2) in &fixed {
            for (m, g_t) in &choices {
                out.insert(Compressed { head: vec![Letter(g_fixed | g_t)], f: m.clone(), inf: inf2 });
                if out.len() > budget.items {
                    return Err(CompressedError::Budget { what: "covering family size", limit: budget.items });
                }
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Family covering the one-step letter successors of `Exp(c0, w)` for every
/// context `w` in the domain of `c0.f`.
pub fn covering_step(
    abs: &Abstraction,
    c0: &Compressed,
    budget: &Budget,
) -> Result<Vec<Compressed>, CompressedError> {
    let images: Vec<Letter> = c0.f.values().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut out = BTreeSet::new();
    for act in 0..abs.n_actions() {
        // Head letters and the unbounded part step exactly as in a full configuration.
        let mut fixed: BTreeSet<(Bits, Vec<Letter>, Bits)> = BTreeSet::new();
        let mut per_pos = vec![];
        let mut blocked = false;
        for &l in &c0.head {
            let opts = abs.letter_step(l, act);
            if opts.is_empty() {
                blocked = true;
                break;
            }
            per_pos.push(opts);
        }
        if blocked {
            continue;
        }
        for (ninf, ginf) in abs.inf_step(c0.inf, act) {
            let mut partial: BTreeSet<(Bits, Vec<Letter>)> = BTreeSet::from([(ginf.0, vec![])]);
            for opts in &per_pos {
                let mut next = BTreeSet::new();
                for (g, w) in &partial {
                    for &(l2, g2) in opts {
                        let mut w2 = w.clone();
                        w2.push(l2);
                        next.insert((g | g2.0, w2));
                    }
                }
                partial = next;
            }
            for (g, w) in partial {
                fixed.insert((g, w, ninf));
            }
        }
        if fixed.is_empty() {
            continue;
        }
        let choices = t_choices(abs, &images, act, budget)?;
        for (m, g_t) in &choices {
            let f2: FMap = c0
                .f
                .iter()
                .filter_map(|(&l0, src)| {
                    let img: BTreeSet<Letter> = src.iter().filter_map(|l| m.get(l)).flatten().copied().collect();
                    (!img.is_empty()).then_some((l0, img))
                })
                .collect();
            for (g, w, ninf) in &fixed {
                let gamma = g | g_t;
                if gamma == 0 {
                    continue;
                }
                let mut head = Vec::with_capacity(w.len() + 1);
                head.push(Letter(gamma));
                head.extend_from_slice(w);
                out.insert(Compressed { head, f: f2.clone(), inf: *ninf });
                if out.len() > budget.items {
                    return Err(CompressedError::Budget { what: "covering family size", limit: budget.items });
                }
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Minimal elements of the closure of `(ε, sgl, inf)` under covering steps.
pub fn covering_sigma_star(
    abs: &Abstraction,
    inf: Bits,
    universe: &[Letter],
    budget: &Budget,
) -> Result<Vec<Compressed>, CompressedError> {
    let seed = Compressed::sgl(vec![], inf, universe);
    // `⊑` only relates items with equal expansion maps, so group by map.
    let mut kept: BTreeMap<FMap, Vec<Compressed>> = BTreeMap::new();
    kept.entry(seed.f.clone()).or_default().push(seed.clone());
    let mut queue = VecDeque::from([seed]);
    let mut generated = 0;
    while let Some(x) = queue.pop_front() {
        for y in covering_step(abs, &x, budget)? {
            generated += 1;
            if generated > budget.closure {
                return Err(CompressedError::Budget { what: "covering closure", limit: budget.closure });
            }
            let group = kept.entry(y.f.clone()).or_default();
            if group.iter().any(|k| *k == y || compressed_leq(k, &y)) {
                continue;
            }
            group.retain(|k| !compressed_leq(&y, k));
            group.push(y.clone());
            queue.push_back(y);
        }
    }
    let mut out: Vec<Compressed> = kept.into_values().flatten().collect();
    out.sort();
    Ok(out)
}

/// Upper bound on the length of a deletion-minimal context whose expansion
/// leaves `x` (saturating).
pub fn bound_b(family: &[Compressed], x: &UpSet) -> u64 {
    family
        .iter()
        .map(|c| {
            x.generators()
                .iter()
                .filter(|g| g.inf & !c.inf == 0)
                .fold(1u64, |acc, g| acc.saturating_mul(g.word.len() as u64 + 1))
                .saturating_add(1)
        })
        .fold(0u64, |a, b| a.saturating_add(b))
}

/// `Exp(family, ctx) ⊆ x`.
pub fn check_exp_subset(family: &[Compressed], ctx: &[Letter], x: &UpSet) -> bool {
    family.iter().all(|c| member_subset(c, ctx, x))
}

fn member_subset(c: &Compressed, ctx: &[Letter], x: &UpSet) -> bool {
    fn go(word: &mut Vec<Letter>, inf: Bits, c: &Compressed, ctx: &[Letter], x: &UpSet) -> bool {
        // Under the plain embedding order, membership survives appending letters.
        if x.order == Order::Leq && x.contains(&Config::new(word.clone(), inf)) {
            return true;
        }
        let Some((&l, rest)) = ctx.split_first() else {
            return x.contains(&Config::new(word.clone(), inf));
        };
        let imgs: Vec<Letter> = c.image(l).collect();
        for i in imgs {
            word.push(i);
            let ok = go(word, inf, c, rest, x);
            word.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    if ctx.iter().any(|&l| c.image(l).next().is_none()) {
        return true;
    }
    go(&mut c.head.clone(), c.inf, c, ctx, x)
}

/// Greedily delete context letters while the expansion stays inside `x`,
/// ending at a deletion-minimal context.
pub fn shrink(family: &[Compressed], ctx: &[Letter], x: &UpSet) -> Vec<Letter> {
    let mut w = ctx.to_vec();
    'outer: loop {
        for i in 0..w.len() {
            let mut w2 = w.clone();
            w2.remove(i);
            if check_exp_subset(family, &w2, x) {
                w = w2;
                continue 'outer;
            }
        }
        return w;
    }
}
