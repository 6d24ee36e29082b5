//! Test instances: five-counter machines with insertion errors encoded as
//! automata with a weak (1,2) condition, and seeded random small automata.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ata::{ActionId, Automaton, Cmp, Disjunct, Guard, Rule, State, StateId};
use crate::concrete::{elapse, letter_successors, rational, Clock, ConcreteConfig};

pub const COUNTERS: u8 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instr {
    Inc,
    IfZero,
    Dec,
}

impl Instr {
    fn keyword(self) -> &'static str {
        match self {
            Instr::Inc => "inc",
            Instr::IfZero => "ifz",
            Instr::Dec => "dec",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub from: String,
    pub instr: Instr,
    /// 1..=5.
    pub counter: u8,
    pub to: String,
}

impl Transition {
    /// The input letter reading this transition.
    pub fn letter(&self) -> String {
        format!("{}_{}{}_{}", self.from, self.instr.keyword(), self.counter, self.to)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterMachine {
    pub states: Vec<String>,
    pub transitions: Vec<Transition>,
    pub initial: String,
    pub accepting: BTreeSet<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

const RESERVED: [&str; 9] = ["c1", "c2", "c3", "c4", "c5", "$", "q_inf", "q_init", "q_minus"];

/// Parses `state: q [acc]`, `init: q` and `trans: q inc|ifz|dec i q2` lines.
pub fn parse_machine(text: &str) -> Result<CounterMachine, MachineError> {
    let mut states: Vec<String> = vec![];
    let mut accepting = BTreeSet::new();
    let mut initial = None;
    let mut pending = vec![];
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let err = |msg: String| MachineError::Parse { line, msg };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, rest) = body.split_once(':').ok_or_else(|| err("expected 'keyword:'".into()))?;
        let toks: Vec<&str> = rest.split_whitespace().collect();
        match (key.trim(), toks.as_slice()) {
            ("state", [name, flags @ ..]) => {
                let ident = name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_');
                if !ident || RESERVED.contains(name) {
                    return Err(err(format!("bad or reserved state name '{name}'")));
                }
                if states.iter().any(|s| s == name) {
                    return Err(err(format!("duplicate state '{name}'")));
                }
                match flags {
                    [] => {}
                    ["acc"] => {
                        accepting.insert(name.to_string());
                    }
                    _ => return Err(err("expected 'acc' or nothing after the state name".into())),
                }
                states.push(name.to_string());
            }
            ("init", [name]) => initial = Some(name.to_string()),
            ("trans", [from, kind, ctr, to]) => {
                let instr = match *kind {
                    "inc" => Instr::Inc,
                    "ifz" => Instr::IfZero,
                    "dec" => Instr::Dec,
                    _ => return Err(err(format!("unknown instruction '{kind}'"))),
                };
                let counter: u8 = ctr.parse().ok().filter(|c| (1..=COUNTERS).contains(c)).ok_or_else(|| err(format!("counter must be 1..5, got '{ctr}'")))?;
                pending.push((line, Transition { from: from.to_string(), instr, counter, to: to.to_string() }));
            }
            (k, _) => return Err(err(format!("malformed '{k}' line"))),
        }
    }
    let initial = initial.ok_or(MachineError::Parse { line: 0, msg: "missing 'init:' line".into() })?;
    let known = |s: &str| states.iter().any(|t| t == s);
    if !known(&initial) {
        return Err(MachineError::Parse { line: 0, msg: format!("unknown initial state '{initial}'") });
    }
    let mut transitions = vec![];
    for (line, t) in pending {
        if !known(&t.from) || !known(&t.to) {
            return Err(MachineError::Parse { line, msg: "transition mentions an undeclared state".into() });
        }
        if !transitions.contains(&t) {
            transitions.push(t);
        }
    }
    Ok(CounterMachine { states, transitions, initial, accepting })
}

/// State and letter numbering of `encode(m)`.
#[derive(Clone, Debug)]
pub struct Layout {
    pub machine: Vec<StateId>,
    /// `counter[i - 1]` holds counter `i`.
    pub counter: [StateId; 5],
    pub dollar: StateId,
    pub q_inf: StateId,
    pub q_init: StateId,
    pub q_minus: StateId,
    pub transition: Vec<ActionId>,
    pub shc: ActionId,
    pub sh_dollar: ActionId,
    pub new: ActionId,
    pub init: ActionId,
}

impl Layout {
    pub fn of(m: &CounterMachine) -> Layout {
        let k = m.states.len();
        let t = m.transitions.len();
        Layout {
            machine: (0..k).collect(),
            counter: [k, k + 1, k + 2, k + 3, k + 4],
            dollar: k + 5,
            q_inf: k + 6,
            q_init: k + 7,
            q_minus: k + 8,
            transition: (0..t).collect(),
            shc: t,
            sh_dollar: t + 1,
            new: t + 2,
            init: t + 3,
        }
    }

    pub fn counter_of(&self, q: StateId) -> Option<u8> {
        self.counter.iter().position(|&c| c == q).map(|i| i as u8 + 1)
    }
}

/// Rule-for-rule encoding of `m`. Clock regions are `x <= 1` and `x > 1`;
/// `q_minus` is the only rank-1 state.
pub fn encode(m: &CounterMachine) -> Automaton {
    let lay = Layout::of(m);
    let mut states: Vec<State> = m.states.iter().map(|s| State { name: s.clone(), rank: 0 }).collect();
    for name in RESERVED {
        let rank = u32::from(name == "q_minus");
        states.push(State { name: name.into(), rank });
    }
    let mut alphabet: Vec<String> = m.transitions.iter().map(Transition::letter).collect();
    alphabet.extend(["shc", "sh$", "new", "init"].map(String::from));
    let state = |name: &str| m.states.iter().position(|s| s == name).unwrap();
    let low = Guard { conjuncts: vec![(Cmp::Le, 1)] };
    let high = Guard { conjuncts: vec![(Cmp::Gt, 1)] };
    let nop = |q: StateId| (q, false);
    let reset = |q: StateId| (q, true);
    let mut rules = vec![];
    let mut rule = |source: StateId, letter: ActionId, guard: &Guard, formula: Vec<Disjunct>| {
        rules.push(Rule { source, letter, guard: guard.clone(), formula });
    };
    let all_letters = 0..alphabet.len();

    rule(lay.q_init, lay.init, &high, vec![Disjunct::new([nop(state(&m.initial)), nop(lay.q_inf)])]);
    for sigma in all_letters.clone() {
        rule(lay.dollar, sigma, &low, vec![Disjunct::new([nop(lay.dollar)])]);
        for i in 1..=COUNTERS {
            let tests_zero = m.transitions.get(sigma).is_some_and(|t| t.instr == Instr::IfZero && t.counter == i);
            if !tests_zero {
                let c = lay.counter[i as usize - 1];
                rule(c, sigma, &low, vec![Disjunct::new([nop(c)])]);
            }
        }
    }
    rule(lay.dollar, lay.sh_dollar, &high, vec![Disjunct::new([reset(lay.dollar)])]);
    for &c in &lay.counter {
        rule(c, lay.shc, &high, vec![Disjunct::new([nop(lay.dollar), reset(c)])]);
    }
    for &q in lay.machine.iter().chain([&lay.q_inf, &lay.q_minus]) {
        for sigma in [lay.sh_dollar, lay.shc] {
            rule(q, sigma, &high, vec![Disjunct::new([nop(q)])]);
        }
    }
    for (sigma, t) in m.transitions.iter().enumerate() {
        let (from, to) = (state(&t.from), state(&t.to));
        let c = lay.counter[t.counter as usize - 1];
        match t.instr {
            Instr::IfZero => rule(from, sigma, &high, vec![Disjunct::new([nop(to)])]),
            Instr::Dec => {
                rule(from, sigma, &high, vec![Disjunct::new([nop(to)])]);
                rule(c, sigma, &high, vec![Disjunct::default()]);
            }
            Instr::Inc => rule(from, sigma, &high, vec![Disjunct::new([nop(to), nop(lay.dollar), reset(c)])]),
        }
    }
    for &q in &lay.machine {
        let options = lay.counter.iter().map(|&c| Disjunct::new([nop(q), nop(lay.dollar), reset(c)])).collect();
        rule(q, lay.new, &high, options);
    }
    for sigma in all_letters {
        rule(lay.q_inf, sigma, &high, vec![Disjunct::new([nop(lay.q_inf), nop(lay.q_minus)])]);
        let to_accepting = m.transitions.get(sigma).is_some_and(|t| m.accepting.contains(&t.to));
        let formula = if to_accepting { Disjunct::default() } else { Disjunct::new([nop(lay.q_minus)]) };
        rule(lay.q_minus, sigma, &high, vec![formula]);
    }
    Automaton { states, alphabet, initial: lay.q_init, rules, d_max: 1 }
}

/// The four well-formedness conditions on an e-configuration of `encode(m)`.
pub fn well_formed(p: &ConcreteConfig, m: &CounterMachine) -> bool {
    let lay = Layout::of(m);
    let one = BigRational::one();
    let bounded_state = |q: StateId| q == lay.dollar || lay.counter_of(q).is_some();
    if p.iter().any(|(q, v)| bounded_state(*q) != (*v <= one)) {
        return false;
    }
    let low: Vec<&(StateId, Clock)> = p.iter().filter(|(_, v)| *v <= one).collect();
    let values: BTreeSet<&Clock> = low.iter().map(|(_, v)| v).collect();
    if values.len() != low.len() {
        return false;
    }
    let count = |pred: &dyn Fn(StateId) -> bool| p.iter().filter(|(q, _)| pred(*q)).count();
    if count(&|q| lay.machine.contains(&q)) != 1 || count(&|q| q == lay.q_inf) != 1 || count(&|q| q == lay.q_init) != 0 {
        return false;
    }
    let mut by_value = low.clone();
    by_value.sort_by(|a, b| a.1.cmp(&b.1));
    by_value.iter().enumerate().all(|(i, (q, _))| lay.counter_of(*q).is_none() || (i > 0 && by_value[i - 1].0 == lay.dollar))
}

/// Counter values and machine state of a well-formed e-configuration.
pub fn decode(p: &ConcreteConfig, m: &CounterMachine) -> Option<(String, [usize; 5])> {
    let lay = Layout::of(m);
    let q = p.iter().find(|(q, _)| lay.machine.contains(q))?.0;
    let mut counts = [0; 5];
    for (s, _) in p {
        if let Some(i) = lay.counter_of(*s) {
            counts[i as usize - 1] += 1;
        }
    }
    Some((m.states[q].clone(), counts))
}

/// One machine step scripted as moves of `encode(m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MachineStep {
    /// Index into `m.transitions`.
    Take(usize),
    /// An insertion error on the given counter.
    Insert(u8),
}

/// Drives a well-formed e-configuration through one machine step and
/// returns every intermediate e-configuration after a letter, ending in a
/// well-formed one; `None` when the step is not enabled.
pub fn simulate(m: &CounterMachine, p: &ConcreteConfig, step: &MachineStep) -> Option<Vec<ConcreteConfig>> {
    let a = encode(m);
    let lay = Layout::of(m);
    let mut cur = p.clone();
    let mut trail = vec![];
    let mut read = |cur: &mut ConcreteConfig, t: Clock, act: ActionId, pick: &dyn Fn(&ConcreteConfig) -> bool| -> Option<()> {
        let next = elapse(cur, &t).ok()?;
        let succ = letter_successors(&a, &next, act).into_iter().find(|s| pick(s))?;
        *cur = succ;
        trail.push(cur.clone());
        Some(())
    };
    let any = |_: &ConcreteConfig| true;
    // Leave room below 1 so the next letter is read with no bounded clock crossing it.
    let settle = |cur: &mut ConcreteConfig, read: &mut dyn FnMut(&mut ConcreteConfig, Clock, ActionId, &dyn Fn(&ConcreteConfig) -> bool) -> Option<()>| -> Option<()> {
        if top_values(cur).0 == Some(BigRational::one()) {
            rotate(cur, &lay, read)?;
        }
        Some(())
    };
    match step {
        MachineStep::Insert(i) => {
            settle(&mut cur, &mut read)?;
            let c = lay.counter[*i as usize - 1];
            let t = small_delay(&cur);
            read(&mut cur, t, lay.new, &|s| s.iter().any(|(q, v)| *q == c && v.is_zero()))?;
            let t = small_delay(&cur);
            read(&mut cur, t, lay.sh_dollar, &any)?;
        }
        MachineStep::Take(k) => {
            let tr = m.transitions.get(*k)?;
            let c = lay.counter[tr.counter as usize - 1];
            match tr.instr {
                Instr::IfZero => {
                    settle(&mut cur, &mut read)?;
                    let t = small_delay(&cur);
                    read(&mut cur, t, *k, &any)?;
                }
                Instr::Inc => {
                    settle(&mut cur, &mut read)?;
                    let t = small_delay(&cur);
                    read(&mut cur, t, *k, &any)?;
                    let t = small_delay(&cur);
                    read(&mut cur, t, lay.sh_dollar, &any)?;
                }
                Instr::Dec => {
                    if !cur.iter().any(|(q, _)| *q == c) {
                        return None;
                    }
                    loop {
                        let (top, _) = top_values(&cur);
                        let top = top?;
                        let at_top = cur.iter().find(|(_, v)| *v == top)?.0;
                        if at_top == c {
                            let t = crossing_delay(&cur);
                            read(&mut cur, t, *k, &any)?;
                            break;
                        }
                        rotate(&mut cur, &lay, &mut read)?;
                    }
                }
            }
        }
    }
    Some(trail)
}

/// Largest and second largest clock values at most 1.
fn top_values(p: &ConcreteConfig) -> (Option<Clock>, Option<Clock>) {
    let one = BigRational::one();
    let vals: BTreeSet<&Clock> = p.iter().map(|(_, v)| v).filter(|v| **v <= one).collect();
    let mut it = vals.into_iter().rev();
    (it.next().cloned(), it.next().cloned())
}

/// A delay keeping every bounded clock at most 1 and below 1 unless already there.
fn small_delay(p: &ConcreteConfig) -> Clock {
    match top_values(p).0 {
        Some(top) if top < BigRational::one() => (BigRational::one() - top) / BigRational::from_integer(2.into()),
        _ => rational(1, 2),
    }
}

/// A delay taking only the largest bounded clock above 1.
fn crossing_delay(p: &ConcreteConfig) -> Clock {
    let one = BigRational::one();
    let half = rational(1, 2);
    match top_values(p) {
        (Some(top), Some(second)) => (&one - &top) + (&top - &second) * &half,
        (Some(top), None) => (&one - &top) + half,
        _ => half,
    }
}

/// Moves the largest bounded pair above 1 and shifts it back to the front.
fn rotate(
    cur: &mut ConcreteConfig,
    lay: &Layout,
    read: &mut dyn FnMut(&mut ConcreteConfig, Clock, ActionId, &dyn Fn(&ConcreteConfig) -> bool) -> Option<()>,
) -> Option<()> {
    let (top, _) = top_values(cur);
    let q = cur.iter().find(|(_, v)| Some(v) == top.as_ref())?.0;
    let t = crossing_delay(cur);
    if q == lay.dollar {
        read(cur, t, lay.sh_dollar, &|_| true)
    } else {
        read(cur, t, lay.shc, &|_| true)?;
        let t = small_delay(cur);
        read(cur, t, lay.sh_dollar, &|_| true)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RandomParams {
    /// 1..=3.
    pub n_states: usize,
    /// 1..=2.
    pub n_letters: usize,
    /// 1..=2.
    pub d_max: u32,
    /// Probability that a state gets rank 1.
    pub rank1_prob: f64,
}

impl Default for RandomParams {
    fn default() -> RandomParams {
        RandomParams { n_states: 3, n_letters: 2, d_max: 2, rank1_prob: 0.5 }
    }
}

/// A normalized automaton with a weak (0,1) condition, determined by `seed`.
pub fn random_ata(seed: u64, params: &RandomParams) -> Automaton {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.n_states.clamp(1, 3);
    let n_letters = params.n_letters.clamp(1, 2);
    let d_max = params.d_max.clamp(1, 2);
    let states: Vec<State> = (0..n)
        .map(|i| State { name: format!("s{i}"), rank: u32::from(rng.gen_bool(params.rank1_prob.clamp(0.0, 1.0))) })
        .collect();
    let alphabet: Vec<String> = (0..n_letters).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let rank0: Vec<StateId> = (0..n).filter(|&q| states[q].rank == 0).collect();
    let mut rules = vec![];
    for q in 0..n {
        let targets: Vec<StateId> = if states[q].rank == 0 { rank0.clone() } else { (0..n).collect() };
        for letter in 0..n_letters {
            for _ in 0..rng.gen_range(0..=2) {
                let guard = random_guard(&mut rng, d_max);
                let formula = match rng.gen_range(0..10) {
                    0 => vec![],
                    1 => vec![Disjunct::default()],
                    _ => (0..rng.gen_range(1..=2))
                        .map(|_| Disjunct::new((0..rng.gen_range(1..=2)).map(|_| (targets[rng.gen_range(0..targets.len())], rng.gen_bool(0.5)))))
                        .collect(),
                };
                rules.push(Rule { source: q, letter, guard, formula });
            }
        }
    }
    let mut a = Automaton { states, alphabet, initial: 0, rules, d_max };
    a.d_max = a.max_constant().max(1);
    a.normalize()
}

fn random_guard(rng: &mut ChaCha8Rng, d_max: u32) -> Guard {
    let cmps = [Cmp::Lt, Cmp::Le, Cmp::Gt, Cmp::Ge, Cmp::Eq];
    let conjuncts = (0..rng.gen_range(0..=2))
        .map(|_| (cmps[rng.gen_range(0..cmps.len())], rng.gen_range(0..=d_max)))
        .collect();
    Guard { conjuncts }
}
