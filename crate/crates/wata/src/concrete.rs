//! Concrete semantics: finite sets of `(state, exact clock)` pairs, time
//! elapse, letter steps and timed-word replay.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::ata::{ActionId, Automaton, StateId};
use crate::region::Move;

pub type Clock = BigRational;
pub type ConcreteConfig = BTreeSet<(StateId, Clock)>;

pub const DEFAULT_BRANCH_CAP: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConcreteError {
    #[error("elapse requires a positive delay, got {0}")]
    NonPositiveDelay(String),
    #[error("token {index}: {msg}")]
    Word { index: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedWord {
    pub events: Vec<(ActionId, Clock)>,
}

pub fn rational(num: i64, den: i64) -> Clock {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn parse_rational(text: &str) -> Option<Clock> {
    let (n, d) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let n: BigInt = n.trim().parse().ok()?;
    let d: BigInt = d.trim().parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, d))
}

/// Parse `a@1/2 b@3/4`: timestamps must start above zero and strictly increase.
pub fn parse_timed_word(text: &str, a: &Automaton) -> Result<TimedWord, ConcreteError> {
    let mut events = vec![];
    let mut last = BigRational::zero();
    for (index, tok) in text.split_whitespace().enumerate() {
        let err = |msg: &str| ConcreteError::Word { index, msg: format!("'{tok}': {msg}") };
        let (act, ts) = tok.split_once('@').ok_or_else(|| err("expected action@time"))?;
        let act = a.action_index(act).ok_or_else(|| err("unknown action"))?;
        let t = parse_rational(ts).ok_or_else(|| err("bad timestamp"))?;
        if t <= last {
            return Err(err("timestamps must be positive and strictly increasing"));
        }
        last = t.clone();
        events.push((act, t));
    }
    Ok(TimedWord { events })
}

pub fn format_timed_word(w: &TimedWord, a: &Automaton) -> String {
    w.events
        .iter()
        .map(|(act, t)| format!("{}@{}", a.alphabet[*act], t))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn elapse(p: &ConcreteConfig, t: &Clock) -> Result<ConcreteConfig, ConcreteError> {
    if !t.is_positive() {
        return Err(ConcreteError::NonPositiveDelay(t.to_string()));
    }
    Ok(p.iter().map(|(q, v)| (*q, v + t)).collect())
}

/// All successors of `p` on `act`, one per combination of disjunct choices.
/// Empty when some pair has no enabled rule.
pub fn letter_successors(a: &Automaton, p: &ConcreteConfig, act: ActionId) -> BTreeSet<ConcreteConfig> {
    let zero = BigRational::zero();
    let mut partial: BTreeSet<ConcreteConfig> = BTreeSet::from([ConcreteConfig::new()]);
    for (q, v) in p {
        let options = a.enabled_disjuncts(*q, act, v);
        if options.is_empty() {
            return BTreeSet::new();
        }
        let mut next = BTreeSet::new();
        for acc in &partial {
            for d in &options {
                let mut s = acc.clone();
                for &(t, reset) in &d.atoms {
                    s.insert((t, if reset { zero.clone() } else { v.clone() }));
                }
                next.insert(s);
            }
        }
        partial = next;
    }
    partial
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replay {
    pub configs: BTreeSet<ConcreteConfig>,
    pub truncated: bool,
}

pub fn initial_config(a: &Automaton) -> ConcreteConfig {
    BTreeSet::from([(a.initial, BigRational::zero())])
}

/// Every configuration reachable from `{(q0,0)}` along `w`, with at most
/// `cap` live branches kept per step.
pub fn replay(a: &Automaton, w: &TimedWord, cap: usize) -> Replay {
    let mut live = BTreeSet::from([initial_config(a)]);
    let mut truncated = false;
    let mut now = BigRational::zero();
    for (act, t) in &w.events {
        let delta = t - &now;
        now = t.clone();
        let mut next = BTreeSet::new();
        for p in &live {
            let p = elapse(p, &delta).expect("timestamps increase");
            for s in letter_successors(a, &p, *act) {
                if next.len() >= cap {
                    truncated = true;
                    break;
                }
                next.insert(s);
            }
        }
        live = next;
    }
    Replay { configs: live, truncated }
}

/// For every surviving branch, the running minimum rank after each event
/// (index 0 is the initial configuration).
pub fn prefix_rank_trace(a: &Automaton, w: &TimedWord, cap: usize) -> Vec<Vec<u32>> {
    let min_rank = |p: &ConcreteConfig| p.iter().map(|(q, _)| a.states[*q].rank).min().unwrap_or(u32::MAX);
    let init = initial_config(a);
    let mut live: BTreeSet<(ConcreteConfig, Vec<u32>)> = BTreeSet::from([(init.clone(), vec![min_rank(&init)])]);
    let mut now = BigRational::zero();
    for (act, t) in &w.events {
        let delta = t - &now;
        now = t.clone();
        let mut next = BTreeSet::new();
        for (p, trace) in &live {
            let p = elapse(p, &delta).expect("timestamps increase");
            for s in letter_successors(a, &p, *act) {
                if next.len() >= cap {
                    break;
                }
                let mut tr = trace.clone();
                tr.push((*trace.last().unwrap()).min(min_rank(&s)));
                next.insert((s, tr));
            }
        }
        live = next;
    }
    live.into_iter().map(|(_, tr)| tr).collect()
}

fn fract(v: &Clock) -> Clock {
    v - v.floor()
}

/// Timed moves of the refined alphabet on a concrete configuration whose
/// bounded clocks are all non-integer. Delays are chosen as the midpoints of
/// the admissible ranges; the region word of the result does not depend on
/// that choice.
pub fn sigma_bar_successors(a: &Automaton, p: &ConcreteConfig, mv: Move) -> BTreeSet<ConcreteConfig> {
    let dm = BigRational::from_integer(a.d_max.into());
    let half = rational(1, 2);
    let bounded: Vec<Clock> = p.iter().filter(|(_, v)| *v <= dm).map(|(_, v)| v.clone()).collect();
    if bounded.iter().any(|v| v.is_integer()) {
        return BTreeSet::new();
    }
    let fracts: BTreeSet<Clock> = bounded.iter().map(fract).collect();
    match mv {
        Move::Act(act) => {
            let room = fracts.iter().next_back().map(|f| BigRational::one() - f).unwrap_or_else(BigRational::one);
            let t = room * &half;
            letter_successors(a, p, act)
                .into_iter()
                .map(|s| elapse(&s, &t).unwrap())
                .collect()
        }
        Move::DelayEps | Move::DelayAct(_) => {
            let Some(fmax) = fracts.iter().next_back().cloned() else {
                return BTreeSet::new();
            };
            let t1 = BigRational::one() - &fmax;
            let gap = fracts
                .iter()
                .rev()
                .nth(1)
                .map(|f2| &fmax - f2)
                .unwrap_or_else(BigRational::one);
            let t2 = gap * &half;
            let p1 = elapse(p, &t1).unwrap();
            match mv {
                Move::DelayEps => BTreeSet::from([elapse(&p1, &t2).unwrap()]),
                Move::DelayAct(act) => letter_successors(a, &p1, act)
                    .into_iter()
                    .map(|s| elapse(&s, &t2).unwrap())
                    .collect(),
                Move::Act(_) => unreachable!(),
            }
        }
    }
}
