//! Region-word abstraction: letters over `(state, interval)` pairs, the
//! mapping from concrete configurations, and the three families of
//! abstract moves.
//!
//! A letter is a bitset over pairs laid out interval-major: pair `(q, I_d)`
//! is bit `(d-1)*|Q| + q`. Raising every pair by one interval is then a
//! left shift by `|Q|`, and the `I_1` block doubles as a plain state set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::ata::{ActionId, Automaton, Region, RuleTable, StateId};
use crate::concrete::ConcreteConfig;

pub type Bits = u128;

/// Largest `|Q| * d_max` the abstract engine supports.
pub const MAX_PAIRS: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(pub Bits);

impl Letter {
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn subset_of(self, other: Letter) -> bool {
        self.0 & !other.0 == 0
    }
}

/// An abstract configuration: a word of letters ordered by fractional part
/// plus the set of states whose clock exceeds `d_max`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub word: Vec<Letter>,
    pub inf: Bits,
}

impl Config {
    pub fn new(word: Vec<Letter>, inf: Bits) -> Config {
        Config { word, inf }
    }

    pub fn empty() -> Config {
        Config::default()
    }

    /// Total pair count plus the number of unbounded states.
    pub fn size(&self) -> usize {
        self.word.iter().map(|l| l.len()).sum::<usize>() + self.inf.count_ones() as usize
    }

    pub fn last(&self) -> Option<Letter> {
        self.word.last().copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    Act(ActionId),
    DelayEps,
    DelayAct(ActionId),
}

impl Move {
    pub fn is_delay(self) -> bool {
        !matches!(self, Move::Act(_))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbstractError {
    #[error("automaton has {pairs} state/interval pairs; at most {MAX_PAIRS} are supported")]
    TooLarge { pairs: usize },
    #[error("configuration syntax: {0}")]
    Syntax(String),
}

/// How the pairs of a letter are read when firing a letter step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Reading {
    Intervals,
    Points,
}

/// Abstract transition system of a normalized automaton.
#[derive(Clone, Debug)]
pub struct Abstraction {
    pub automaton: Automaton,
    pub n: usize,
    pub d_max: u32,
    table: RuleTable,
    /// Per rule, per disjunct: (nop target states, reset target states).
    disjuncts: Vec<Vec<(Bits, Bits)>>,
    pair_mask: Bits,
    state_mask: Bits,
}

fn mask(bits: usize) -> Bits {
    if bits >= 128 {
        Bits::MAX
    } else {
        (1u128 << bits) - 1
    }
}

impl Abstraction {
    pub fn new(a: &Automaton) -> Result<Abstraction, AbstractError> {
        let n = a.states.len();
        let pairs = n * a.d_max as usize;
        if pairs > MAX_PAIRS || n > 128 {
            return Err(AbstractError::TooLarge { pairs });
        }
        let disjuncts = a
            .rules
            .iter()
            .map(|r| {
                r.formula
                    .iter()
                    .map(|d| {
                        let mut nop = 0;
                        let mut reset = 0;
                        for &(q, rs) in &d.atoms {
                            if rs {
                                reset |= 1u128 << q;
                            } else {
                                nop |= 1u128 << q;
                            }
                        }
                        (nop, reset)
                    })
                    .collect()
            })
            .collect();
        Ok(Abstraction {
            automaton: a.clone(),
            n,
            d_max: a.d_max,
            table: RuleTable::new(a),
            disjuncts,
            pair_mask: mask(pairs),
            state_mask: mask(n),
        })
    }

    pub fn n_actions(&self) -> usize {
        self.automaton.alphabet.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.n * self.d_max as usize
    }

    pub fn pair_bit(&self, q: StateId, d: u32) -> Bits {
        1u128 << ((d as usize - 1) * self.n + q)
    }

    pub fn pairs(&self, l: Letter) -> Vec<(StateId, u32)> {
        let mut out = vec![];
        let mut b = l.0;
        while b != 0 {
            let i = b.trailing_zeros() as usize;
            b &= b - 1;
            out.push((i % self.n, (i / self.n) as u32 + 1));
        }
        out.sort();
        out
    }

    pub fn letter(&self, pairs: &[(StateId, u32)]) -> Letter {
        Letter(pairs.iter().fold(0, |acc, &(q, d)| acc | self.pair_bit(q, d)))
    }

    pub fn states_of(&self, bits: Bits) -> Vec<StateId> {
        (0..self.n).filter(|q| bits >> q & 1 == 1).collect()
    }

    /// Every state occurring in `c`.
    pub fn occurring_states(&self, c: &Config) -> Bits {
        let mut s = c.inf;
        for l in &c.word {
            for d in 0..self.d_max as usize {
                s |= (l.0 >> (d * self.n)) & self.state_mask;
            }
        }
        s
    }

    pub fn is_positive_only(&self, c: &Config) -> bool {
        let s = self.occurring_states(c);
        self.states_of(s).iter().all(|&q| self.automaton.is_positive(q))
    }

    pub fn start(&self) -> Config {
        Config::new(vec![Letter(self.pair_bit(self.automaton.initial, 1))], 0)
    }

    /// Raise every pair by one interval: returns the pairs that stay bounded
    /// and the states that leave `I_dmax`.
    fn raise(&self, bits: Bits) -> (Bits, Bits) {
        let top_shift = (self.d_max as usize - 1) * self.n;
        let overflow = (bits >> top_shift) & self.state_mask;
        let kept = if self.d_max == 1 { 0 } else { (bits << self.n) & self.pair_mask };
        (kept, overflow)
    }

    pub fn delay_eps(&self, c: &Config) -> Option<Config> {
        let (&last, rest) = c.word.split_last()?;
        let (raised, overflow) = self.raise(last.0);
        let mut word = Vec::with_capacity(c.word.len());
        if raised != 0 {
            word.push(Letter(raised));
        }
        word.extend_from_slice(rest);
        Some(Config::new(word, c.inf | overflow))
    }

    fn step_bits(&self, bits: Bits, act: ActionId, reading: Reading) -> Vec<(Bits, Bits)> {
        let mut partial: BTreeSet<(Bits, Bits)> = BTreeSet::from([(0, 0)]);
        let mut b = bits;
        while b != 0 {
            let i = b.trailing_zeros() as usize;
            b &= b - 1;
            let (q, block) = (i % self.n, i / self.n);
            let region = match reading {
                Reading::Intervals => Region::Interval(block as u32 + 1),
                Reading::Points => Region::Point(block as u32 + 1),
            };
            let Some(rule) = self.table.rule(q, act, region.index(self.d_max)) else {
                return vec![];
            };
            let opts = &self.disjuncts[rule];
            let mut next = BTreeSet::new();
            for &(n_acc, r_acc) in &partial {
                for &(nop, reset) in opts {
                    next.insert((n_acc | nop << (block * self.n), r_acc | reset));
                }
            }
            partial = next;
        }
        partial.into_iter().collect()
    }

    /// `λ →a (λ', γ')`: one result per choice of disjuncts; `γ'` sits in `I_1`.
    pub fn letter_step(&self, l: Letter, act: ActionId) -> Vec<(Letter, Letter)> {
        self.step_bits(l.0, act, Reading::Intervals)
            .into_iter()
            .map(|(n, r)| (Letter(n), Letter(r)))
            .collect()
    }

    /// The same step fired from every pair of `l` placed on the integer
    /// right of its interval; the nop part keeps the pair layout of `l`.
    pub fn point_step(&self, l: Letter, act: ActionId) -> Vec<(Letter, Letter)> {
        self.step_bits(l.0, act, Reading::Points)
            .into_iter()
            .map(|(n, r)| (Letter(n), Letter(r)))
            .collect()
    }

    /// Letter step from the unbounded region; results are `(λ'_∞, γ')`.
    pub fn inf_step(&self, inf: Bits, act: ActionId) -> Vec<(Bits, Letter)> {
        let mut partial: BTreeSet<(Bits, Bits)> = BTreeSet::from([(0, 0)]);
        let ub = Region::Unbounded.index(self.d_max);
        for q in self.states_of(inf) {
            let Some(rule) = self.table.rule(q, act, ub) else {
                return vec![];
            };
            let opts = &self.disjuncts[rule];
            let mut next = BTreeSet::new();
            for &(n_acc, r_acc) in &partial {
                for &(nop, reset) in opts {
                    next.insert((n_acc | nop, r_acc | reset));
                }
            }
            partial = next;
        }
        partial.into_iter().map(|(n, r)| (n, Letter(r))).collect()
    }

    /// Combine per-position choices into full successors. `lead` holds
    /// `(γ part, inf part)` options already fixed for the special positions.
    fn combine(&self, per_pos: &[Vec<(Letter, Letter)>], lead: Vec<(Bits, Bits)>) -> Vec<Config> {
        let mut partial: BTreeSet<(Bits, Vec<Letter>, Bits)> =
            lead.into_iter().map(|(g, inf)| (g, Vec::new(), inf)).collect();
        for opts in per_pos {
            let mut next = BTreeSet::new();
            for (g, w, inf) in &partial {
                for &(l, r) in opts {
                    let mut w2 = w.clone();
                    w2.push(l);
                    next.insert((g | r.0, w2, *inf));
                }
            }
            partial = next;
        }
        let mut out: Vec<Config> = partial
            .into_iter()
            .filter(|(g, w, _)| *g != 0 && w.iter().all(|l| !l.is_empty()))
            .map(|(g, w, inf)| {
                let mut word = Vec::with_capacity(w.len() + 1);
                word.push(Letter(g));
                word.extend(w);
                Config::new(word, inf)
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn act_successors(&self, c: &Config, act: ActionId) -> Vec<Config> {
        let mut per_pos = Vec::with_capacity(c.word.len());
        for &l in &c.word {
            let opts = self.letter_step(l, act);
            if opts.is_empty() {
                return vec![];
            }
            per_pos.push(opts);
        }
        let lead: Vec<(Bits, Bits)> = self.inf_step(c.inf, act).into_iter().map(|(n, r)| (r.0, n)).collect();
        self.combine(&per_pos, lead)
    }

    pub fn delay_act_successors(&self, c: &Config, act: ActionId) -> Vec<Config> {
        let Some((&last, rest)) = c.word.split_last() else {
            return vec![];
        };
        let mut per_pos = Vec::with_capacity(rest.len());
        for &l in rest {
            let opts = self.letter_step(l, act);
            if opts.is_empty() {
                return vec![];
            }
            per_pos.push(opts);
        }
        let mut lead = BTreeSet::new();
        for (nk, gk) in self.point_step(last, act) {
            let (raised, overflow) = self.raise(nk.0);
            for (ninf, ginf) in self.inf_step(c.inf, act) {
                lead.insert((gk.0 | raised | ginf.0, ninf | overflow));
            }
        }
        self.combine(&per_pos, lead.into_iter().collect())
    }

    pub fn successors(&self, c: &Config, mv: Move) -> Vec<Config> {
        match mv {
            Move::Act(a) => self.act_successors(c, a),
            Move::DelayEps => self.delay_eps(c).into_iter().collect(),
            Move::DelayAct(a) => self.delay_act_successors(c, a),
        }
    }

    pub fn moves(&self) -> Vec<Move> {
        let mut out = vec![Move::DelayEps];
        for a in 0..self.n_actions() {
            out.push(Move::Act(a));
            out.push(Move::DelayAct(a));
        }
        out
    }

    pub fn all_successors(&self, c: &Config) -> Vec<(Move, Config)> {
        let mut out = vec![];
        for mv in self.moves() {
            for s in self.successors(c, mv) {
                out.push((mv, s));
            }
        }
        out
    }

    /// Region word of a concrete configuration. A clock sitting exactly on
    /// an integer `d <= d_max` is read as lying just after it, matching the
    /// convention for the start configuration.
    pub fn h_of(&self, p: &ConcreteConfig) -> Config {
        let dm = BigRational::from_integer(self.d_max.into());
        let mut groups: BTreeMap<BigRational, Bits> = BTreeMap::new();
        let mut inf = 0;
        for (q, v) in p {
            let fl = v.floor();
            let d = fl.to_integer().to_u32().expect("clock fits u32");
            if *v > dm || (*v == dm && v.is_integer()) {
                inf |= 1u128 << q;
                continue;
            }
            let interval = d + 1;
            *groups.entry(v - &fl).or_insert(0) |= self.pair_bit(*q, interval);
        }
        Config::new(groups.into_values().map(Letter).collect(), inf)
    }

    pub fn letter_text(&self, l: Letter) -> String {
        let parts: Vec<String> = self
            .pairs(l)
            .into_iter()
            .map(|(q, d)| format!("{}:I{}", self.automaton.states[q].name, d))
            .collect();
        format!("{{{}}}", parts.join(","))
    }

    pub fn states_text(&self, bits: Bits) -> String {
        let names: Vec<&str> = self.states_of(bits).into_iter().map(|q| self.automaton.states[q].name.as_str()).collect();
        format!("{{{}}}", names.join(","))
    }

    /// Stable dump format, e.g. `[{q:I1,p:I2} {q:I1}] inf={p}`.
    pub fn dump(&self, c: &Config) -> String {
        let letters: Vec<String> = c.word.iter().map(|&l| self.letter_text(l)).collect();
        format!("[{}] inf={}", letters.join(" "), self.states_text(c.inf))
    }

    pub fn move_text(&self, mv: Move) -> String {
        match mv {
            Move::Act(a) => format!("act({})", self.automaton.alphabet[a]),
            Move::DelayEps => "delay_eps".to_string(),
            Move::DelayAct(a) => format!("delay_act({})", self.automaton.alphabet[a]),
        }
    }

    pub fn parse_move(&self, text: &str) -> Option<Move> {
        let t = text.trim();
        if t == "delay_eps" {
            return Some(Move::DelayEps);
        }
        let inner = |p: &str| t.strip_prefix(p).and_then(|r| r.strip_suffix(')')).and_then(|n| self.automaton.action_index(n));
        inner("act(").map(Move::Act).or_else(|| inner("delay_act(").map(Move::DelayAct))
    }

    /// Inverse of `dump`.
    pub fn parse_config(&self, text: &str) -> Result<Config, AbstractError> {
        let err = |m: &str| AbstractError::Syntax(m.to_string());
        let t = text.trim();
        let t = t.strip_prefix('[').ok_or_else(|| err("expected '['"))?;
        let close = t.find(']').ok_or_else(|| err("expected ']'"))?;
        let (body, tail) = (&t[..close], t[close + 1..].trim());
        let mut word = vec![];
        let mut rest = body.trim();
        while !rest.is_empty() {
            let r = rest.strip_prefix('{').ok_or_else(|| err("expected '{'"))?;
            let end = r.find('}').ok_or_else(|| err("expected '}'"))?;
            let mut bits = 0;
            for item in r[..end].split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (name, reg) = item.split_once(':').ok_or_else(|| err("expected state:Id"))?;
                let q = self.automaton.state_index(name.trim()).ok_or_else(|| err("unknown state"))?;
                let d: u32 = reg
                    .trim()
                    .strip_prefix('I')
                    .and_then(|x| x.parse().ok())
                    .filter(|d| (1..=self.d_max).contains(d))
                    .ok_or_else(|| err("expected interval I1..Idmax"))?;
                bits |= self.pair_bit(q, d);
            }
            if bits == 0 {
                return Err(err("empty letter"));
            }
            word.push(Letter(bits));
            rest = r[end + 1..].trim();
        }
        let inf_txt = tail.strip_prefix("inf=").ok_or_else(|| err("expected inf="))?;
        let inf_body = inf_txt
            .trim()
            .strip_prefix('{')
            .and_then(|x| x.strip_suffix('}'))
            .ok_or_else(|| err("expected inf={...}"))?;
        let mut inf = 0;
        for name in inf_body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            inf |= 1u128 << self.automaton.state_index(name).ok_or_else(|| err("unknown state"))?;
        }
        Ok(Config::new(word, inf))
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Act(a) => write!(f, "act#{a}"),
            Move::DelayEps => write!(f, "delay_eps"),
            Move::DelayAct(a) => write!(f, "delay_act#{a}"),
        }
    }
}
