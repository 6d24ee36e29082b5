//! Independent oracles shared by the integration tests: brute-force
//! embeddings, exhaustive configuration enumeration, successor BFS, random
//! concrete configurations and a set of hand-written micro automata.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use wata::ata::{parse_automaton, Automaton};
use wata::concrete::ConcreteConfig;
use wata::region::{Abstraction, Bits, Config, Letter, Move};

/// Two-state (or smaller) automata with every disjunct carrying a nop and a
/// reset atom, so normalization adds no helper states.
pub const MICRO: &[(&str, &str)] = &[
    ("keep-and-reset", "alphabet: a\nstate: q rank=0\ninit: q\ntrans: q , a , \"x>=0\" -> (q,nop)&(q,reset)\n"),
    (
        "swap-below-one",
        "alphabet: a\nstate: p rank=1\nstate: q rank=0\ninit: p\n\
         trans: p , a , \"x<1\" -> (p,nop)&(q,reset) | (q,nop)&(p,reset)\n\
         trans: q , a , \"x>=0\" -> (q,nop)&(q,reset)\n",
    ),
    (
        "two-letters",
        "alphabet: a b\nstate: p rank=1\nstate: q rank=1\ninit: p\n\
         trans: p , a , \"x>0\" -> (p,nop)&(q,reset)\n\
         trans: p , b , \"x<=1\" -> (p,nop)&(p,reset)\n\
         trans: q , a , \"x<1\" -> (q,nop)&(p,reset) | (p,nop)&(q,reset)\n\
         trans: q , b , \"x=1\" -> (q,nop)&(q,reset)\n",
    ),
    (
        "point-guards",
        "alphabet: a\nstate: p rank=0\nstate: q rank=0\ninit: p\n\
         trans: p , a , \"x=0\" -> (p,nop)&(q,reset)\n\
         trans: p , a , \"x>0\" -> (q,nop)&(p,reset)\n\
         trans: q , a , \"x>=1\" -> (q,nop)&(q,reset)\n",
    ),
];

pub fn micro_abstractions() -> Vec<(&'static str, Abstraction)> {
    MICRO
        .iter()
        .map(|(name, src)| {
            let a = parse_automaton(src).unwrap().normalize();
            assert!(a.states.len() <= 2 && a.d_max == 1, "{name} must stay a 2-state, d_max=1 automaton");
            (*name, Abstraction::new(&a).unwrap())
        })
        .collect()
}

pub fn fixture(name: &str) -> Automaton {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_automaton(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

/// Subsequence embedding by exhaustive backtracking over index choices.
pub fn brute_embeds(small: &[Letter], big: &[Letter]) -> bool {
    match small.split_first() {
        None => true,
        Some((x, rest)) => (0..big.len()).any(|j| x.0 & !big[j].0 == 0 && brute_embeds(rest, &big[j + 1..])),
    }
}

pub fn brute_leq(c1: &Config, c2: &Config) -> bool {
    c1.inf & !c2.inf == 0 && brute_embeds(&c1.word, &c2.word)
}

pub fn brute_leq_r(c1: &Config, c2: &Config) -> bool {
    let (Some((l1, r1)), Some((l2, r2))) = (c1.word.split_last(), c2.word.split_last()) else {
        return false;
    };
    c1.inf & !c2.inf == 0 && l1.0 & !l2.0 == 0 && brute_embeds(r1, r2)
}

/// `⪯_r` extended to empty words: `(ε, A) ⪯ (ε, B)` iff `A ⊆ B`.
pub fn leq_r_or_bare(c1: &Config, c2: &Config) -> bool {
    if c1.word.is_empty() && c2.word.is_empty() {
        return c1.inf & !c2.inf == 0;
    }
    brute_leq_r(c1, c2)
}

pub fn words(letters: &[Letter], max_len: usize) -> Vec<Vec<Letter>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = vec![];
        for w in &frontier {
            for &l in letters {
                let mut w2: Vec<Letter> = w.clone();
                w2.push(l);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Every configuration with at most `max_len` letters over `pairs` pairs
/// and `states` states.
pub fn all_configs(pairs: usize, states: usize, max_len: usize) -> Vec<Config> {
    let letters: Vec<Letter> = (1..(1u128 << pairs)).map(Letter).collect();
    let mut out = vec![];
    for w in words(&letters, max_len) {
        for inf in 0..(1u128 << states) {
            out.push(Config::new(w.clone(), inf));
        }
    }
    out
}

pub fn plain_moves(h: &Abstraction) -> Vec<Move> {
    (0..h.n_actions()).map(Move::Act).collect()
}

pub fn delay_moves(h: &Abstraction) -> Vec<Move> {
    let mut out = vec![Move::DelayEps];
    out.extend((0..h.n_actions()).map(Move::DelayAct));
    out
}

/// Configurations reachable from `c` by at most `depth` plain-letter moves.
pub fn sigma_reach(h: &Abstraction, c: &Config, depth: usize) -> BTreeSet<Config> {
    let mut seen = BTreeSet::from([c.clone()]);
    let mut frontier = vec![c.clone()];
    for _ in 0..depth {
        let mut next = vec![];
        for x in &frontier {
            for mv in plain_moves(h) {
                for s in h.successors(x, mv) {
                    if seen.insert(s.clone()) {
                        next.push(s);
                    }
                }
            }
        }
        frontier = next;
    }
    seen
}

/// A concrete configuration whose bounded clocks are non-integer, with a
/// few shared fractional parts and some clocks beyond `d_max`. With
/// `canonical`, each state has at most one clock beyond `d_max`.
pub fn random_concrete(rng: &mut ChaCha8Rng, n_states: usize, d_max: u32, canonical: bool) -> ConcreteConfig {
    let n_fracts = rng.gen_range(1..=3);
    let fracts: Vec<i64> = (0..n_fracts).map(|_| rng.gen_range(1..20)).collect();
    let n_clocks = rng.gen_range(1..=4);
    let mut p = ConcreteConfig::new();
    let mut unbounded = BTreeSet::new();
    for _ in 0..n_clocks {
        let q = rng.gen_range(0..n_states);
        let f = fracts[rng.gen_range(0..fracts.len())];
        let beyond = rng.gen_bool(0.25) && (!canonical || unbounded.insert(q));
        let int = if beyond { d_max as i64 + rng.gen_range(0..2) } else { rng.gen_range(0..d_max as i64) };
        p.insert((q, BigRational::new((int * 20 + f).into(), 20.into())));
    }
    p
}

/// Number of clocks beyond `d_max` per state.
pub fn unbounded_copies(p: &ConcreteConfig, d_max: u32) -> BTreeMap<usize, usize> {
    let dm = BigRational::from_integer(d_max.into());
    tally(p.iter().filter(|(_, v)| *v > dm).map(|(q, _)| *q))
}

/// Letters of `h` in a stable order, for reporting.
pub fn letter_count(h: &Abstraction) -> usize {
    (1usize << h.n_pairs()) - 1
}

/// Subsequence test used by the shrink checks.
pub fn is_subsequence<T: PartialEq>(small: &[T], big: &[T]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

pub fn bits_subsets(n: usize) -> Vec<Bits> {
    (0..(1u128 << n)).collect()
}

/// Groups a list of results by a key, counting occurrences.
pub fn tally<K: Ord>(items: impl IntoIterator<Item = K>) -> BTreeMap<K, usize> {
    let mut m = BTreeMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}
