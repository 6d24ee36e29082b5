//! One-clock alternating timed automata: guards, DNF transition formulas,
//! the text format, normalization and acceptance-class checks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use thiserror::Error;

pub const TOP: &str = "q_top";
pub const BOT: &str = "q_bot";

pub type StateId = usize;
pub type ActionId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn holds<T: PartialOrd>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            Cmp::Eq => lhs == rhs,
            Cmp::Ne => lhs != rhs,
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "=",
            Cmp::Ne => "!=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }
}

/// Clock regions for a fixed `d_max`: points `{0..d_max}`, open unit
/// intervals `I_1..I_dmax` and the unbounded tail `I_inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Point(u32),
    Interval(u32),
    Unbounded,
}

impl Region {
    /// All `2(d_max+1)` regions in increasing order.
    pub fn all(d_max: u32) -> Vec<Region> {
        let mut out = vec![Region::Point(0)];
        for d in 1..=d_max {
            out.push(Region::Interval(d));
            out.push(Region::Point(d));
        }
        out.push(Region::Unbounded);
        out
    }

    /// Position in `Region::all`; equals twice a representative value.
    pub fn index(self, d_max: u32) -> usize {
        match self {
            Region::Point(d) => 2 * d as usize,
            Region::Interval(d) => 2 * d as usize - 1,
            Region::Unbounded => 2 * d_max as usize + 1,
        }
    }

    pub fn of_value(v: &BigRational, d_max: u32) -> Region {
        let dm = BigRational::from_integer(d_max.into());
        if *v > dm {
            return Region::Unbounded;
        }
        let fl = v.floor();
        let d: u32 = num_traits::ToPrimitive::to_u32(&fl.to_integer()).expect("clock fits u32");
        if *v == fl {
            Region::Point(d)
        } else {
            Region::Interval(d + 1)
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Point(d) => write!(f, "{{{d}}}"),
            Region::Interval(d) => write!(f, "I{d}"),
            Region::Unbounded => write!(f, "Iinf"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Guard {
    pub conjuncts: Vec<(Cmp, u32)>,
}

impl Guard {
    pub fn always() -> Guard {
        Guard { conjuncts: vec![] }
    }

    pub fn max_constant(&self) -> u32 {
        self.conjuncts.iter().map(|c| c.1).max().unwrap_or(0)
    }

    pub fn eval(&self, v: &BigRational) -> bool {
        self.conjuncts
            .iter()
            .all(|&(cmp, c)| cmp.holds(v, &BigRational::from_integer(c.into())))
    }

    /// Truth on a whole region. Regions never straddle a guard constant as
    /// long as every constant is at most `d_max`.
    pub fn sat_region(&self, r: Region, d_max: u32) -> Result<bool, AtaError> {
        let m = self.max_constant();
        if m > d_max {
            return Err(AtaError::ConstantAboveDmax { constant: m, d_max });
        }
        let twice = r.index(d_max) as u64;
        Ok(self
            .conjuncts
            .iter()
            .all(|&(cmp, c)| cmp.holds(&twice, &(2 * c as u64))))
    }

    /// Guard describing the contiguous run `regions[lo..=hi]` of `Region::all`.
    fn of_run(lo: Region, hi: Region, d_max: u32) -> Guard {
        if let (Region::Point(a), Region::Point(b)) = (lo, hi) {
            if a == b {
                return Guard { conjuncts: vec![(Cmp::Eq, a)] };
            }
        }
        let mut conjuncts = vec![];
        match lo {
            Region::Point(0) => {}
            Region::Point(d) => conjuncts.push((Cmp::Ge, d)),
            Region::Interval(d) => conjuncts.push((Cmp::Gt, d - 1)),
            Region::Unbounded => conjuncts.push((Cmp::Gt, d_max)),
        }
        match hi {
            Region::Point(d) => conjuncts.push((Cmp::Le, d)),
            Region::Interval(d) => conjuncts.push((Cmp::Lt, d)),
            Region::Unbounded => {}
        }
        Guard { conjuncts }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conjuncts.is_empty() {
            return write!(f, "true");
        }
        let parts: Vec<String> = self
            .conjuncts
            .iter()
            .map(|(c, k)| format!("x{}{}", c.symbol(), k))
            .collect();
        write!(f, "{}", parts.join(" & "))
    }
}

/// A conjunction of `(state, reset?)` atoms. An empty disjunct is `true`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Disjunct {
    pub atoms: BTreeSet<(StateId, bool)>,
}

impl Disjunct {
    pub fn new(atoms: impl IntoIterator<Item = (StateId, bool)>) -> Disjunct {
        Disjunct { atoms: atoms.into_iter().collect() }
    }

    pub fn has_nop(&self) -> bool {
        self.atoms.iter().any(|a| !a.1)
    }

    pub fn has_reset(&self) -> bool {
        self.atoms.iter().any(|a| a.1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub source: StateId,
    pub letter: ActionId,
    pub guard: Guard,
    /// DNF; an empty list is `false`.
    pub formula: Vec<Disjunct>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State {
    pub name: String,
    pub rank: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Automaton {
    pub states: Vec<State>,
    pub alphabet: Vec<String>,
    pub initial: StateId,
    pub rules: Vec<Rule>,
    pub d_max: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    Weak01,
    OutOfClass { min: u32, max: u32 },
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Weak01 => write!(f, "weak(0,1)"),
            Condition::OutOfClass { min, max } => write!(f, "out of class, index ({min},{max})"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AtaError {
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("guard constant {constant} exceeds d_max {d_max}")]
    ConstantAboveDmax { constant: u32, d_max: u32 },
}

fn perr(line: usize, col: usize, msg: impl Into<String>) -> AtaError {
    AtaError::Parse { line, col, msg: msg.into() }
}

impl Automaton {
    pub fn state_index(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s.name == name)
    }

    pub fn action_index(&self, name: &str) -> Option<ActionId> {
        self.alphabet.iter().position(|s| s == name)
    }

    pub fn is_positive(&self, q: StateId) -> bool {
        self.states[q].rank == 0
    }

    pub fn max_constant(&self) -> u32 {
        self.rules.iter().map(|r| r.guard.max_constant()).max().unwrap_or(0)
    }

    /// Disjuncts of every rule enabled for `(q, act)` at clock value `v`.
    pub fn enabled_disjuncts(&self, q: StateId, act: ActionId, v: &BigRational) -> Vec<&Disjunct> {
        let mut out = vec![];
        for r in &self.rules {
            if r.source == q && r.letter == act && r.guard.eval(v) {
                for d in &r.formula {
                    if !out.contains(&d) {
                        out.push(d);
                    }
                }
            }
        }
        out
    }

    pub fn classify_condition(&self) -> Condition {
        let min = self.states.iter().map(|s| s.rank).min().unwrap_or(0);
        let max = self.states.iter().map(|s| s.rank).max().unwrap_or(0);
        let ranks_ok = self.states.iter().all(|s| s.rank <= 1);
        let trap_ok = self.rules.iter().all(|r| {
            self.states[r.source].rank != 0
                || r.formula
                    .iter()
                    .all(|d| d.atoms.iter().all(|&(t, _)| self.states[t].rank == 0))
        });
        if ranks_ok && trap_ok {
            Condition::Weak01
        } else if !ranks_ok {
            Condition::OutOfClass { min, max }
        } else {
            // Rank 0 is not a trap, so acceptance is no longer "eventually
            // rank 0 only"; report it under the shifted (1,2) index.
            Condition::OutOfClass { min: min + 1, max: max + 1 }
        }
    }

    pub fn normalize(&self) -> Automaton {
        normalize(self)
    }

    /// Serialize in the line-oriented text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("alphabet: {}\n", self.alphabet.join(" ")));
        for s in &self.states {
            if s.name == TOP || s.name == BOT {
                continue;
            }
            out.push_str(&format!("state: {} rank={}\n", s.name, s.rank));
        }
        out.push_str(&format!("init: {}\n", self.states[self.initial].name));
        for r in &self.rules {
            if self.states[r.source].name == TOP {
                continue;
            }
            out.push_str(&format!(
                "trans: {} , {} , \"{}\" -> {}\n",
                self.states[r.source].name,
                self.alphabet[r.letter],
                r.guard,
                self.formula_text(&r.formula)
            ));
        }
        out
    }

    pub fn formula_text(&self, f: &[Disjunct]) -> String {
        if f.is_empty() {
            return "false".into();
        }
        let ds: Vec<String> = f
            .iter()
            .map(|d| {
                if d.atoms.is_empty() {
                    return "true".to_string();
                }
                let atoms: Vec<String> = d
                    .atoms
                    .iter()
                    .map(|&(q, r)| format!("({},{})", self.states[q].name, if r { "reset" } else { "nop" }))
                    .collect();
                atoms.join("&")
            })
            .collect();
        ds.join(" | ")
    }
}

// ---------------------------------------------------------------------------
// Parsing

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
    line: usize,
    col0: usize,
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$' || b == b'\''
}

impl<'a> Cursor<'a> {
    fn col(&self) -> usize {
        self.col0 + self.pos + 1
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && (self.s[self.pos] == b' ' || self.s[self.pos] == b'\t') {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, tok: &str) -> Result<(), AtaError> {
        self.skip_ws();
        if self.s[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            Ok(())
        } else {
            Err(perr(self.line, self.col(), format!("expected '{tok}'")))
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<(String, usize), AtaError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && is_ident_byte(self.s[self.pos]) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(perr(self.line, self.col(), "expected identifier"));
        }
        let id = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
        Ok((id, self.col0 + start + 1))
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.s.len()
    }
}

/// Parse a guard such as `x>=0 & x<1` or `true`.
pub fn parse_guard(text: &str, line: usize, col0: usize) -> Result<Guard, AtaError> {
    let mut c = Cursor { s: text.as_bytes(), pos: 0, line, col0 };
    if c.eat("true") && c.at_end() {
        return Ok(Guard::always());
    }
    c.pos = 0;
    let mut conjuncts = vec![];
    loop {
        c.expect("x")?;
        let cmp = if c.eat("!=") {
            Cmp::Ne
        } else if c.eat("<=") {
            Cmp::Le
        } else if c.eat(">=") {
            Cmp::Ge
        } else if c.eat("<") {
            Cmp::Lt
        } else if c.eat(">") {
            Cmp::Gt
        } else if c.eat("==") || c.eat("=") {
            Cmp::Eq
        } else {
            return Err(perr(line, c.col(), "expected comparison operator"));
        };
        c.skip_ws();
        if c.peek() == Some(b'-') {
            return Err(perr(line, c.col(), "negative constant"));
        }
        let start = c.pos;
        while c.pos < c.s.len() && c.s[c.pos].is_ascii_digit() {
            c.pos += 1;
        }
        if start == c.pos {
            return Err(perr(line, c.col(), "expected integer constant"));
        }
        let k: u32 = std::str::from_utf8(&c.s[start..c.pos])
            .unwrap()
            .parse()
            .map_err(|_| perr(line, col0 + start + 1, "constant out of range"))?;
        conjuncts.push((cmp, k));
        if c.at_end() {
            break;
        }
        c.expect("&")?;
    }
    Ok(Guard { conjuncts })
}

fn parse_formula(
    c: &mut Cursor<'_>,
    states: &mut BTreeMap<String, StateId>,
    decls: &mut Vec<State>,
) -> Result<Vec<Disjunct>, AtaError> {
    if c.eat("false") {
        return Ok(vec![]);
    }
    let mut out = vec![];
    loop {
        let mut d = Disjunct::default();
        if !c.eat("true") {
            loop {
                c.expect("(")?;
                let (name, col) = c.ident()?;
                if (name == TOP || name == BOT) && !states.contains_key(&name) {
                    states.insert(name.clone(), decls.len());
                    decls.push(State { name: name.clone(), rank: 0 });
                }
                let q = *states
                    .get(&name)
                    .ok_or_else(|| perr(c.line, col, format!("unknown state '{name}'")))?;
                c.expect(",")?;
                let (flag, fcol) = c.ident()?;
                let reset = match flag.as_str() {
                    "nop" => false,
                    "reset" => true,
                    _ => return Err(perr(c.line, fcol, "expected 'nop' or 'reset'")),
                };
                c.expect(")")?;
                d.atoms.insert((q, reset));
                if !c.eat("&") {
                    break;
                }
            }
        }
        out.push(d);
        if !c.eat("|") {
            break;
        }
    }
    Ok(out)
}

pub fn parse_automaton(text: &str) -> Result<Automaton, AtaError> {
    let mut alphabet: Option<Vec<String>> = None;
    let mut states: Vec<State> = vec![];
    let mut index: BTreeMap<String, StateId> = BTreeMap::new();
    let mut init: Option<(String, usize, usize)> = None;
    let mut pending: Vec<(usize, usize, String)> = vec![];

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let Some(colon) = body.find(':') else {
            return Err(perr(line, 1, "expected 'keyword:'"));
        };
        let key = body[..colon].trim();
        let rest = &body[colon + 1..];
        let rest_col = colon + 1;
        match key {
            "alphabet" => {
                let letters: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                for (i, l) in letters.iter().enumerate() {
                    if !l.bytes().all(is_ident_byte) {
                        return Err(perr(line, rest_col + 1, format!("bad letter '{l}'")));
                    }
                    if letters[..i].contains(l) {
                        return Err(perr(line, rest_col + 1, format!("duplicate letter '{l}'")));
                    }
                }
                alphabet = Some(letters);
            }
            "state" => {
                let mut c = Cursor { s: rest.as_bytes(), pos: 0, line, col0: rest_col };
                let (name, col) = c.ident()?;
                if name == TOP || name == BOT {
                    return Err(perr(line, col, format!("state name '{name}' is reserved")));
                }
                if index.contains_key(&name) {
                    return Err(perr(line, col, format!("duplicate state '{name}'")));
                }
                let mut rank = 0;
                if !c.at_end() {
                    c.expect("rank")?;
                    c.expect("=")?;
                    c.skip_ws();
                    let start = c.pos;
                    while c.pos < c.s.len() && c.s[c.pos].is_ascii_digit() {
                        c.pos += 1;
                    }
                    if start == c.pos {
                        return Err(perr(line, c.col(), "expected rank"));
                    }
                    rank = std::str::from_utf8(&c.s[start..c.pos]).unwrap().parse().unwrap_or(u32::MAX);
                    if !c.at_end() {
                        return Err(perr(line, c.col(), "trailing input"));
                    }
                }
                index.insert(name.clone(), states.len());
                states.push(State { name, rank });
            }
            "init" => {
                let mut c = Cursor { s: rest.as_bytes(), pos: 0, line, col0: rest_col };
                let (name, col) = c.ident()?;
                if !c.at_end() {
                    return Err(perr(line, c.col(), "trailing input"));
                }
                init = Some((name, line, col));
            }
            "trans" => pending.push((line, rest_col, rest.to_string())),
            other => return Err(perr(line, 1, format!("unknown keyword '{other}'"))),
        }
    }

    let alphabet = alphabet.ok_or_else(|| perr(1, 1, "missing 'alphabet:' line"))?;
    let (iname, iline, icol) = init.ok_or_else(|| perr(1, 1, "missing 'init:' line"))?;
    let initial = *index
        .get(&iname)
        .ok_or_else(|| perr(iline, icol, format!("unknown state '{iname}'")))?;

    let mut rules = vec![];
    for (line, col0, rest) in pending {
        let mut c = Cursor { s: rest.as_bytes(), pos: 0, line, col0 };
        let (src, scol) = c.ident()?;
        let source = *index
            .get(&src)
            .ok_or_else(|| perr(line, scol, format!("unknown state '{src}'")))?;
        c.expect(",")?;
        let (act, acol) = c.ident()?;
        let letter = alphabet
            .iter()
            .position(|a| *a == act)
            .ok_or_else(|| perr(line, acol, format!("unknown letter '{act}'")))?;
        c.expect(",")?;
        c.expect("\"")?;
        let gstart = c.pos;
        let Some(glen) = rest[gstart..].find('"') else {
            return Err(perr(line, c.col(), "unterminated guard"));
        };
        let guard = parse_guard(&rest[gstart..gstart + glen], line, col0 + gstart)?;
        c.pos = gstart + glen + 1;
        c.expect("->")?;
        let formula = parse_formula(&mut c, &mut index, &mut states)?;
        if !c.at_end() {
            return Err(perr(line, c.col(), "trailing input"));
        }
        rules.push(Rule { source, letter, guard, formula });
    }

    let mut a = Automaton { states, alphabet, initial, rules, d_max: 1 };
    a.d_max = a.max_constant().max(1);
    Ok(a)
}

// ---------------------------------------------------------------------------
// Normalization

/// Rewrite into canonical form: `true`/`false` replaced by `q_top`/`q_bot`,
/// every disjunct carrying a nop and a reset atom, and guards refined into
/// pairwise-disjoint region runs per `(state, letter)`. Overlapping rules
/// are merged as a disjunction of their formulas.
pub fn normalize(a: &Automaton) -> Automaton {
    let mut states = a.states.clone();
    let needs_top = a.rules.iter().any(|r| {
        r.formula.is_empty() || r.formula.iter().any(|d| !d.has_nop() || !d.has_reset())
    });
    let needs_bot = a.rules.iter().any(|r| r.formula.is_empty());
    let mut top = a.state_index(TOP);
    if top.is_none() && needs_top {
        states.push(State { name: TOP.into(), rank: 0 });
        top = Some(states.len() - 1);
    }
    let top_has_rules = top.is_some_and(|t| a.rules.iter().any(|r| r.source == t));
    let mut bot = a.state_index(BOT);
    if bot.is_none() && needs_bot {
        states.push(State { name: BOT.into(), rank: 0 });
        bot = Some(states.len() - 1);
    }

    let pad = |d: &Disjunct| -> Disjunct {
        let mut d = d.clone();
        if d.has_nop() && d.has_reset() {
            return d;
        }
        let t = top.expect("q_top present when padding is needed");
        if !d.has_nop() {
            d.atoms.insert((t, false));
        }
        if !d.has_reset() {
            d.atoms.insert((t, true));
        }
        d
    };

    let mut raw: Vec<Rule> = vec![];
    for r in &a.rules {
        let formula: Vec<Disjunct> = if r.formula.is_empty() {
            vec![pad(&Disjunct::new([(bot.unwrap(), false)]))]
        } else {
            r.formula.iter().map(&pad).collect()
        };
        raw.push(Rule { source: r.source, letter: r.letter, guard: r.guard.clone(), formula });
    }
    if let Some(t) = top {
        if !top_has_rules {
            for l in 0..a.alphabet.len() {
                raw.push(Rule {
                    source: t,
                    letter: l,
                    guard: Guard::always(),
                    formula: vec![Disjunct::new([(t, false), (t, true)])],
                });
            }
        }
    }

    let d0 = a.max_constant().max(1);
    let regions = Region::all(d0);
    let mut rules = vec![];
    for q in 0..states.len() {
        for l in 0..a.alphabet.len() {
            let mine: Vec<&Rule> = raw.iter().filter(|r| r.source == q && r.letter == l).collect();
            if mine.is_empty() {
                continue;
            }
            // Merged formula per region; None where no rule is enabled.
            let per_region: Vec<Option<Vec<Disjunct>>> = regions
                .iter()
                .map(|&reg| {
                    let mut ds: BTreeSet<Disjunct> = BTreeSet::new();
                    let mut any = false;
                    for r in &mine {
                        if r.guard.sat_region(reg, d0).expect("constants bounded by d0") {
                            any = true;
                            ds.extend(r.formula.iter().cloned());
                        }
                    }
                    any.then(|| ds.into_iter().collect())
                })
                .collect();
            let mut i = 0;
            while i < regions.len() {
                let Some(f) = &per_region[i] else {
                    i += 1;
                    continue;
                };
                let mut j = i;
                while j + 1 < regions.len() && per_region[j + 1].as_ref() == Some(f) {
                    j += 1;
                }
                rules.push(Rule {
                    source: q,
                    letter: l,
                    guard: Guard::of_run(regions[i], regions[j], d0),
                    formula: f.clone(),
                });
                i = j + 1;
            }
        }
    }
    let mut out = Automaton { states, alphabet: a.alphabet.clone(), initial: a.initial, rules, d_max: 1 };
    out.d_max = out.max_constant().max(1);
    out
}

/// Checks the structural invariants guaranteed by `normalize`.
pub fn normal_form_violations(a: &Automaton) -> Vec<String> {
    let mut out = vec![];
    for r in &a.rules {
        for d in &r.formula {
            if !d.has_nop() || !d.has_reset() {
                out.push(format!("rule from {} lacks nop/reset atom", a.states[r.source].name));
            }
        }
        if r.formula.is_empty() {
            out.push("empty formula".into());
        }
        if r.guard.max_constant() > a.d_max {
            out.push("guard constant above d_max".into());
        }
    }
    for q in 0..a.states.len() {
        for l in 0..a.alphabet.len() {
            for reg in Region::all(a.d_max) {
                let n = a
                    .rules
                    .iter()
                    .filter(|r| r.source == q && r.letter == l)
                    .filter(|r| r.guard.sat_region(reg, a.d_max).unwrap_or(true))
                    .count();
                if n > 1 {
                    out.push(format!("overlap at {} on {} in {reg}", a.states[q].name, a.alphabet[l]));
                }
            }
        }
    }
    if a.d_max < a.max_constant().max(1) {
        out.push("d_max too small".into());
    }
    out
}

/// Constant-time rule lookup for a normalized automaton, indexed by
/// `(state, action, region index)`.
#[derive(Clone, Debug)]
pub struct RuleTable {
    n_regions: usize,
    n_actions: usize,
    slots: Vec<Option<usize>>,
}

impl RuleTable {
    pub fn new(a: &Automaton) -> RuleTable {
        let regions = Region::all(a.d_max);
        let n_regions = regions.len();
        let n_actions = a.alphabet.len();
        let mut slots = vec![None; a.states.len() * n_actions * n_regions];
        for (ri, r) in a.rules.iter().enumerate() {
            for (gi, &reg) in regions.iter().enumerate() {
                if r.guard.sat_region(reg, a.d_max).unwrap_or(false) {
                    let slot = (r.source * n_actions + r.letter) * n_regions + gi;
                    if slots[slot].is_none() {
                        slots[slot] = Some(ri);
                    }
                }
            }
        }
        RuleTable { n_regions, n_actions, slots }
    }

    pub fn rule(&self, q: StateId, act: ActionId, region_index: usize) -> Option<usize> {
        self.slots[(q * self.n_actions + act) * self.n_regions + region_index]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A1: &str = "alphabet: a\nstate: q rank=0\ninit: q\ntrans: q , a , \"x>=0\" -> (q,nop)&(q,reset)\n";

    #[test]
    fn parses_fixture_a1() {
        let a = parse_automaton(A1).unwrap();
        assert_eq!(a.states.len(), 1);
        assert_eq!(a.rules.len(), 1);
        assert_eq!(a.d_max, 1);
    }

    #[test]
    fn rank_one_fixture_has_no_positive_states() {
        let a = parse_automaton(&A1.replace("rank=0", "rank=1")).unwrap();
        assert!(a.states.iter().all(|s| s.rank == 1));
    }

    #[test]
    fn unknown_state_is_reported_with_position() {
        let src = "alphabet: a\nstate: q rank=0\ninit: q\ntrans: q , a , \"true\" -> (p,nop)\n";
        let err = parse_automaton(src).unwrap_err().to_string();
        assert!(err.contains("unknown state"), "{err}");
        assert!(err.starts_with("4:"), "{err}");
    }

    #[test]
    fn negative_constant_rejected() {
        let src = "alphabet: a\nstate: q\ninit: q\ntrans: q , a , \"x<-1\" -> (q,nop)\n";
        assert!(parse_automaton(src).unwrap_err().to_string().contains("negative"));
    }

    #[test]
    fn reserved_names_rejected() {
        let src = "alphabet: a\nstate: q_top\ninit: q_top\n";
        assert!(parse_automaton(src).is_err());
    }

    #[test]
    fn normalize_keeps_a1_rules() {
        let a = parse_automaton(A1).unwrap();
        let n = a.normalize();
        assert_eq!(n.rules.len(), 1);
        assert_eq!(n.rules[0].guard, Guard::always());
        assert_eq!(n, n.normalize());
    }

    #[test]
    fn padding_adds_top_reset() {
        let src = "alphabet: a\nstate: q\ninit: q\ntrans: q , a , \"true\" -> (q,nop)\n";
        let n = parse_automaton(src).unwrap().normalize();
        let top = n.state_index(TOP).unwrap();
        let r = n.rules.iter().find(|r| r.source == 0).unwrap();
        assert_eq!(r.formula, vec![Disjunct::new([(0, false), (top, true)])]);
    }

    #[test]
    fn overlapping_guards_split_into_three_runs() {
        let src = "alphabet: a\nstate: q\nstate: p\ninit: q\n\
                   trans: q , a , \"x<2\" -> (q,nop)&(q,reset)\n\
                   trans: q , a , \"x>1\" -> (p,nop)&(p,reset)\n";
        let n = parse_automaton(src).unwrap().normalize();
        let guards: Vec<String> = n.rules.iter().filter(|r| r.source == 0).map(|r| r.guard.to_string()).collect();
        assert_eq!(guards, vec!["x<=1", "x>1 & x<2", "x>=2"]);
        let mid = n.rules.iter().find(|r| r.guard.to_string() == "x>1 & x<2").unwrap();
        assert_eq!(mid.formula.len(), 2);
        assert!(normal_form_violations(&n).is_empty());
    }

    #[test]
    fn region_guard_truth() {
        let lt1 = parse_guard("x<1", 1, 0).unwrap();
        assert!(lt1.sat_region(Region::Interval(1), 1).unwrap());
        let eq1 = parse_guard("x=1", 1, 0).unwrap();
        assert!(!eq1.sat_region(Region::Interval(1), 1).unwrap());
        let mid = parse_guard("x>1 & x<3", 1, 0).unwrap();
        assert!(mid.sat_region(Region::Interval(2), 3).unwrap());
        assert!(mid.sat_region(Region::Interval(2), 1).is_err());
    }

    #[test]
    fn classification() {
        let a = parse_automaton(A1).unwrap().normalize();
        assert_eq!(a.classify_condition(), Condition::Weak01);
        let src = "alphabet: a\nstate: q rank=0\nstate: p rank=1\ninit: q\ntrans: q , a , \"true\" -> (p,nop)&(q,reset)\n";
        let b = parse_automaton(src).unwrap().normalize();
        assert!(matches!(b.classify_condition(), Condition::OutOfClass { .. }));
    }

    #[test]
    fn text_round_trip() {
        let src = "alphabet: a b\nstate: q rank=0\nstate: p rank=1\ninit: p\n\
                   trans: p , b , \"x>=1 & x<2\" -> (q,nop)&(p,reset) | (p,nop)&(p,reset)\n";
        let a = parse_automaton(src).unwrap();
        assert_eq!(parse_automaton(&a.to_text()).unwrap(), a);
    }
}
