//! One-variable TPTL: parsing, fragment classification and translation to
//! weak (0,1) alternating timed automata.
//!
//! A word satisfies `f` when `f` holds at its first position with the clock
//! frozen at time 0. Until is strict: `a U b` holds at `i` when `b` holds
//! at some `j > i` and `a` at every position strictly between.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use thiserror::Error;

use crate::ata::{Automaton, Cmp, Disjunct, Guard, Rule, State, StateId};
use crate::solver::{decide_emptiness, SolverError, SolverOptions, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Prop(String),
    Freeze(Box<Formula>),
    Constraint(Cmp, u32),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    DualUntil(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
}

use Formula::*;

impl Formula {
    pub fn props(&self, out: &mut BTreeSet<String>) {
        match self {
            Prop(p) => {
                out.insert(p.clone());
            }
            True | False | Constraint(..) => {}
            Freeze(a) | Eventually(a) | Always(a) => a.props(out),
            And(a, b) | Or(a, b) | Until(a, b) | DualUntil(a, b) => {
                a.props(out);
                b.props(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            True | False | Prop(_) | Constraint(..) => 0,
            Freeze(a) | Eventually(a) | Always(a) => 1 + a.depth(),
            And(a, b) | Or(a, b) | Until(a, b) | DualUntil(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Prop(p) => write!(f, "{p}"),
            Freeze(a) => write!(f, "x.({a})"),
            Constraint(c, k) => write!(f, "x{}{k}", c.symbol()),
            And(a, b) => write!(f, "({a} & {b})"),
            Or(a, b) => write!(f, "({a} | {b})"),
            Until(a, b) => write!(f, "({a} U {b})"),
            DualUntil(a, b) => write!(f, "({a} R {b})"),
            Eventually(a) => write!(f, "F({a})"),
            Always(a) => write!(f, "G({a})"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TptlError {
    #[error("col {col}: {msg}")]
    Syntax { col: usize, msg: String },
    #[error("formula is outside the constrained fragment: {0}")]
    Rejected(String),
    #[error("proposition '{0}' is not in the alphabet")]
    UnknownProp(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u32),
    Cmp(Cmp),
    Dot,
    And,
    Or,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, TptlError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = vec![];
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        match c {
            _ if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => out.push((col, Tok::LParen)),
            ')' => out.push((col, Tok::RParen)),
            '&' => out.push((col, Tok::And)),
            '|' => out.push((col, Tok::Or)),
            '.' => out.push((col, Tok::Dot)),
            '<' | '>' | '=' | '!' => {
                let (cmp, len) = match two.as_str() {
                    "<=" => (Cmp::Le, 2),
                    ">=" => (Cmp::Ge, 2),
                    "!=" => (Cmp::Ne, 2),
                    "==" => (Cmp::Eq, 2),
                    _ => match c {
                        '<' => (Cmp::Lt, 1),
                        '>' => (Cmp::Gt, 1),
                        '=' => (Cmp::Eq, 1),
                        _ => return Err(TptlError::Syntax { col, msg: "expected '!='".into() }),
                    },
                };
                out.push((col, Tok::Cmp(cmp)));
                i += len;
                continue;
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let n = s.parse().map_err(|_| TptlError::Syntax { col, msg: "constant too large".into() })?;
                out.push((col, Tok::Num(n)));
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((col, Tok::Ident(chars[start..i].iter().collect())));
                continue;
            }
            '-' => return Err(TptlError::Syntax { col, msg: "negative constants are not allowed".into() }),
            _ => return Err(TptlError::Syntax { col, msg: format!("unexpected '{c}'") }),
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end_col)
    }

    fn err<T>(&self, msg: &str) -> Result<T, TptlError> {
        Err(TptlError::Syntax { col: self.col(), msg: msg.into() })
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(i)) if i == s)
    }

    fn until(&mut self) -> Result<Formula, TptlError> {
        let lhs = self.or()?;
        if self.is_ident("U") || self.is_ident("R") {
            let dual = self.is_ident("R");
            self.pos += 1;
            let rhs = self.until()?;
            return Ok(if dual { DualUntil(lhs.into(), rhs.into()) } else { Until(lhs.into(), rhs.into()) });
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, TptlError> {
        let mut f = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            f = Or(f.into(), self.and()?.into());
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula, TptlError> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            f = And(f.into(), self.unary()?.into());
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, TptlError> {
        match self.peek().cloned() {
            Some(Tok::Ident(id)) => match id.as_str() {
                "F" | "G" => {
                    self.pos += 1;
                    let a = self.unary()?;
                    Ok(if id == "F" { Eventually(a.into()) } else { Always(a.into()) })
                }
                "x" => {
                    self.pos += 1;
                    match self.peek().cloned() {
                        Some(Tok::Dot) => {
                            self.pos += 1;
                            Ok(Freeze(self.unary()?.into()))
                        }
                        Some(Tok::Cmp(c)) => {
                            self.pos += 1;
                            match self.peek().cloned() {
                                Some(Tok::Num(n)) => {
                                    self.pos += 1;
                                    Ok(Constraint(c, n))
                                }
                                _ => self.err("expected a constant"),
                            }
                        }
                        _ => self.err("expected '.' or a comparison after x"),
                    }
                }
                "U" | "R" => self.err("operator without left operand"),
                "true" => {
                    self.pos += 1;
                    Ok(True)
                }
                "false" => {
                    self.pos += 1;
                    Ok(False)
                }
                _ => {
                    self.pos += 1;
                    Ok(Prop(id))
                }
            },
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.until()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(f)
            }
            Some(_) => self.err("unexpected token"),
            None => self.err("unexpected end of formula"),
        }
    }
}

/// Precedence, tightest first: `x.`, `F`, `G`; `&`; `|`; `U` and `R`
/// (right-associative).
pub fn parse_formula(text: &str) -> Result<Formula, TptlError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end_col: text.chars().count() + 1 };
    let f = p.until()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FragmentClass {
    Positive,
    Constrained,
    Rejected(String),
}

fn conjuncts<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    match f {
        And(a, b) => {
            conjuncts(a, out);
            conjuncts(b, out);
        }
        _ => out.push(f),
    }
}

/// `F β` is positive only when β is a conjunction bounding the clock from above.
pub fn is_positive(f: &Formula) -> bool {
    match f {
        True | False | Prop(_) | Constraint(..) => true,
        Freeze(a) | Always(a) => is_positive(a),
        And(a, b) | Or(a, b) | DualUntil(a, b) => is_positive(a) && is_positive(b),
        Until(..) => false,
        Eventually(b) => {
            let mut cs = vec![];
            conjuncts(b, &mut cs);
            is_positive(b) && cs.iter().any(|c| matches!(c, Constraint(Cmp::Le | Cmp::Lt | Cmp::Eq, _)))
        }
    }
}

fn constrained_violation(f: &Formula) -> Option<&Formula> {
    if is_positive(f) {
        return None;
    }
    match f {
        Freeze(a) | Eventually(a) => constrained_violation(a),
        And(a, b) | Or(a, b) | Until(a, b) => constrained_violation(a).or_else(|| constrained_violation(b)),
        Always(_) | DualUntil(..) => Some(f),
        True | False | Prop(_) | Constraint(..) => None,
    }
}

pub fn classify(f: &Formula) -> FragmentClass {
    if is_positive(f) {
        FragmentClass::Positive
    } else if let Some(bad) = constrained_violation(f) {
        FragmentClass::Rejected(bad.to_string())
    } else {
        FragmentClass::Constrained
    }
}

/// One disjunct of an ε-closed state: letter constraint, clock guard, and
/// the states to enter after reading the letter (with their reset flags).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Move {
    letter: Option<String>,
    guard: Vec<(Cmp, u32)>,
    targets: BTreeSet<(Formula, bool)>,
}

fn conj(l: &[Move], r: &[Move]) -> Vec<Move> {
    let mut out = BTreeSet::new();
    for a in l {
        for b in r {
            let letter = match (&a.letter, &b.letter) {
                (Some(x), Some(y)) if x != y => continue,
                (Some(x), _) | (_, Some(x)) => Some(x.clone()),
                (None, None) => None,
            };
            let mut guard = a.guard.clone();
            guard.extend(b.guard.iter().copied());
            guard.sort();
            guard.dedup();
            let targets = a.targets.union(&b.targets).cloned().collect();
            out.insert(Move { letter, guard, targets });
        }
    }
    out.into_iter().collect()
}

fn target(f: &Formula, reset: bool) -> Vec<Move> {
    match f {
        True => vec![Move { letter: None, guard: vec![], targets: BTreeSet::new() }],
        False => vec![],
        _ => vec![Move { letter: None, guard: vec![], targets: BTreeSet::from([(f.clone(), reset)]) }],
    }
}

/// Eager ε-rewriting of `f` down to moves on real letters. `reset` records
/// whether a freeze has already zeroed the clock at this position.
fn closure(f: &Formula, reset: bool) -> Vec<Move> {
    let any = || Move { letter: None, guard: vec![], targets: BTreeSet::new() };
    match f {
        True => vec![any()],
        False => vec![],
        Prop(p) => vec![Move { letter: Some(p.clone()), ..any() }],
        Constraint(c, k) => {
            if reset {
                if c.holds(&0u32, k) {
                    vec![any()]
                } else {
                    vec![]
                }
            } else {
                vec![Move { guard: vec![(*c, *k)], ..any() }]
            }
        }
        Freeze(a) => closure(a, true),
        Or(a, b) => {
            let mut v = closure(a, reset);
            v.extend(closure(b, reset));
            v.sort();
            v.dedup();
            v
        }
        And(a, b) => conj(&closure(a, reset), &closure(b, reset)),
        // Loop operators read the current letter unconditionally and carry
        // their obligations to the next position.
        Until(a, b) => {
            let mut v = target(b, reset);
            v.extend(conj(&target(a, reset), &target(f, reset)));
            v
        }
        DualUntil(a, b) => {
            let mut v = target(a, reset);
            v.extend(conj(&target(b, reset), &target(f, reset)));
            v
        }
        Eventually(b) => {
            let mut v = target(b, reset);
            v.extend(target(f, reset));
            v
        }
        Always(b) => conj(&target(b, reset), &target(f, reset)),
    }
}

#[derive(Clone, Debug)]
pub struct Compiled {
    pub automaton: Automaton,
    /// Subformula of every state, indexed like `automaton.states`.
    pub formulas: Vec<Formula>,
}

/// Translate into a normalized weak (0,1) automaton over `alphabet`.
/// States are named `s0, s1, …` in discovery order; `s0` is the formula.
pub fn compile_with_states(f: &Formula, alphabet: &[String]) -> Result<Compiled, TptlError> {
    if let FragmentClass::Rejected(r) = classify(f) {
        return Err(TptlError::Rejected(r));
    }
    let mut props = BTreeSet::new();
    f.props(&mut props);
    if let Some(p) = props.iter().find(|p| !alphabet.contains(p)) {
        return Err(TptlError::UnknownProp(p.clone()));
    }
    let mut index: BTreeMap<Formula, StateId> = BTreeMap::new();
    let mut formulas: Vec<Formula> = vec![];
    let mut rules = vec![];
    let mut work = vec![f.clone()];
    index.insert(f.clone(), 0);
    formulas.push(f.clone());
    while let Some(g) = work.pop() {
        let src = index[&g];
        for mv in closure(&g, false) {
            let mut atoms = BTreeSet::new();
            for (t, r) in &mv.targets {
                let id = *index.entry(t.clone()).or_insert_with(|| {
                    formulas.push(t.clone());
                    work.push(t.clone());
                    formulas.len() - 1
                });
                atoms.insert((id, *r));
            }
            for (li, l) in alphabet.iter().enumerate() {
                if mv.letter.as_ref().is_some_and(|m| m != l) {
                    continue;
                }
                rules.push(Rule {
                    source: src,
                    letter: li,
                    guard: Guard { conjuncts: mv.guard.clone() },
                    formula: vec![Disjunct { atoms: atoms.clone() }],
                });
            }
        }
    }
    let states = formulas
        .iter()
        .enumerate()
        .map(|(i, g)| State { name: format!("s{i}"), rank: if is_positive(g) { 0 } else { 1 } })
        .collect();
    let d_max = rules.iter().map(|r: &Rule| r.guard.max_constant()).max().unwrap_or(0).max(1);
    let raw = Automaton { states, alphabet: alphabet.to_vec(), initial: 0, rules, d_max };
    let automaton = raw.normalize();
    Ok(Compiled { automaton, formulas })
}

pub fn compile(f: &Formula, alphabet: &[String]) -> Result<Automaton, TptlError> {
    compile_with_states(f, alphabet).map(|c| c.automaton)
}

/// Alphabet of the formula's propositions, or `{a}` when it has none.
pub fn default_alphabet(f: &Formula) -> Vec<String> {
    let mut props = BTreeSet::new();
    f.props(&mut props);
    if props.is_empty() {
        vec!["a".to_string()]
    } else {
        props.into_iter().collect()
    }
}

pub fn satisfiable(f: &Formula, alphabet: &[String], opts: &SolverOptions) -> Result<Verdict, TptlError> {
    let a = compile(f, alphabet)?;
    Ok(decide_emptiness(&a, opts)?)
}

/// Three-valued truth of `f` at position `i` (0-based) of a finite prefix,
/// with clock origin `v`. `None` means the prefix does not settle it.
pub fn eval_prefix(f: &Formula, w: &[(String, BigRational)], i: usize, v: &BigRational) -> Option<bool> {
    let (a, t) = &w[i];
    let and3 = |x: Option<bool>, y: Option<bool>| match (x, y) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    };
    let or3 = |x: Option<bool>, y: Option<bool>| match (x, y) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    };
    match f {
        True => Some(true),
        False => Some(false),
        Prop(p) => Some(p == a),
        Constraint(c, k) => Some(c.holds(&(t - v), &BigRational::from_integer((*k).into()))),
        Freeze(g) => eval_prefix(g, w, i, t),
        And(x, y) => and3(eval_prefix(x, w, i, v), eval_prefix(y, w, i, v)),
        Or(x, y) => or3(eval_prefix(x, w, i, v), eval_prefix(y, w, i, v)),
        Eventually(b) => eval_prefix(&Until(True.into(), b.clone()), w, i, v),
        Always(b) => eval_prefix(&DualUntil(False.into(), b.clone()), w, i, v),
        Until(x, y) => {
            // ∃ j > i: y at j and x on (i, j); unknown past the prefix end.
            let mut acc = Some(false);
            let mut prefix_ok = Some(true);
            for j in i + 1..w.len() {
                acc = or3(acc, and3(prefix_ok, eval_prefix(y, w, j, v)));
                prefix_ok = and3(prefix_ok, eval_prefix(x, w, j, v));
                if acc == Some(true) || prefix_ok == Some(false) {
                    return acc;
                }
            }
            or3(acc, if prefix_ok == Some(false) { Some(false) } else { None })
        }
        DualUntil(x, y) => {
            // ∀ j > i: y at j or x somewhere in (i, j).
            let mut acc = Some(true);
            let mut released = Some(false);
            for j in i + 1..w.len() {
                acc = and3(acc, or3(released, eval_prefix(y, w, j, v)));
                released = or3(released, eval_prefix(x, w, j, v));
                if acc == Some(false) || released == Some(true) {
                    return acc;
                }
            }
            and3(acc, if released == Some(true) { Some(true) } else { None })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ata::Condition;

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn b(f: Formula) -> Box<Formula> {
        Box::new(f)
    }

    #[test]
    fn parses_freeze_example() {
        let f = p("x.(F(b & F(c & x<=2)))");
        let expected = Freeze(b(Eventually(b(And(
            b(Prop("b".into())),
            b(Eventually(b(And(b(Prop("c".into())), b(Constraint(Cmp::Le, 2)))))),
        )))));
        assert_eq!(f, expected);
        assert_eq!(p("a U b"), Until(b(Prop("a".into())), b(Prop("b".into()))));
        assert!(parse_formula("a U").is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(p("a U b U c"), p("a U (b U c)"));
        assert_eq!(p("a | b & c"), p("a | (b & c)"));
        assert_eq!(p("F a & b"), p("(F a) & b"));
        assert_eq!(p("a R b"), DualUntil(b(Prop("a".into())), b(Prop("b".into()))));
    }

    #[test]
    fn fragment_classes() {
        assert_eq!(classify(&p("x.(F((x<=2)&b & F((x<=2)&c)))")), FragmentClass::Positive);
        assert_eq!(classify(&p("G(F((x<=1)&a))")), FragmentClass::Positive);
        assert_eq!(classify(&p("F a")), FragmentClass::Constrained);
        assert!(matches!(classify(&p("G(F a)")), FragmentClass::Rejected(_)));
    }

    #[test]
    fn until_translation() {
        let c = compile_with_states(&p("a U b"), &["a".into(), "b".into()]).unwrap();
        let a = &c.automaton;
        assert_eq!(a.states[0].rank, 1);
        assert_eq!(a.classify_condition(), Condition::Weak01);
        // On b the state may move to [b]; on a it keeps [a] and itself.
        assert!(c.formulas.contains(&Prop("b".into())));
        assert!(c.formulas.contains(&Prop("a".into())));
    }

    #[test]
    fn unsatisfiable_constraint_has_no_rules_from_start() {
        let a = compile(&p("x<0"), &["a".into()]).unwrap();
        assert!(a.rules.iter().all(|r| r.source != a.initial));
    }

    #[test]
    fn prefix_evaluator() {
        let w: Vec<(String, BigRational)> = [("a", (2, 5)), ("b", (1, 2)), ("c", (1, 1))]
            .iter()
            .map(|(s, (n, d))| (s.to_string(), crate::concrete::rational(*n, *d)))
            .collect();
        let zero = BigRational::from_integer(0.into());
        assert_eq!(eval_prefix(&p("x.(F(b & F(c & x<=2)))"), &w, 0, &zero), Some(true));
        assert_eq!(eval_prefix(&p("G a"), &w, 0, &zero), Some(false));
        assert_eq!(eval_prefix(&p("F d"), &w, 0, &zero), None);
    }
}
