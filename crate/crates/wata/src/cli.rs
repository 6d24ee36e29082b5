//! Command-line front end. `run` returns the exit code and the text that
//! `main` prints, so tests can drive it in-process.

use std::fs;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::Zero;

use crate::ata::{parse_automaton, Automaton};
use crate::concrete::{elapse, initial_config, letter_successors, parse_timed_word, ConcreteConfig, DEFAULT_BRANCH_CAP};
use crate::instance_gen::{encode, parse_machine, random_ata, RandomParams};
use crate::region::{AbstractError, Abstraction};
use crate::report::Report;
use crate::solver::{decide_emptiness, Mode, SolverError, SolverOptions, Verdict, VerdictKind};
use crate::tptl::{compile, default_alphabet, parse_formula, TptlError};

pub const EXIT_NONEMPTY: i32 = 0;
pub const EXIT_EMPTY: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_OUT_OF_CLASS: i32 = 4;
pub const EXIT_RESOURCE: i32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Capped,
}

#[derive(Debug, Parser)]
#[command(name = "wata", version, about = "Emptiness and satisfiability checks for one-clock alternating timed automata")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, value_enum, default_value = "capped", global = true)]
    pub mode: ModeArg,
    /// Candidates per generator enumeration in capped mode.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    pub cap: u64,
    /// Largest configuration size tried by the lasso search.
    #[arg(long, default_value_t = 8, global = true)]
    pub max_size: usize,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub json: bool,
    /// Space-separated letters for formulas.
    #[arg(long, global = true)]
    pub alphabet: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide emptiness of an automaton file (or of a random one with --random).
    Check {
        path: Option<String>,
        /// Check `random_ata(--seed)` instead of a file.
        #[arg(long)]
        random: bool,
    },
    /// Decide satisfiability of a formula.
    Sat { formula: String },
    /// Print the automaton compiled from a formula.
    Translate { formula: String },
    /// Replay a timed word such as `a@1/2 b@3/2` and list the live configurations.
    Run { path: String, word: String },
    /// Print the automaton encoding a counter machine.
    EncodeCm { path: String },
    /// List the abstract successors of a configuration in dump format.
    Abstract { path: String, config: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn fail(code: i32, msg: impl std::fmt::Display) -> Outcome {
    Outcome { code, stdout: String::new(), stderr: format!("error: {msg}\n") }
}

fn ok(stdout: String) -> Outcome {
    Outcome { code: 0, stdout, stderr: String::new() }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            return if code == 0 { ok(text) } else { Outcome { code, stdout: String::new(), stderr: text } };
        }
    };
    if let Some(n) = cli.threads {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let opts = SolverOptions {
        witness_max_size: cli.max_size,
        ..SolverOptions::with_mode(match cli.mode {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Capped => Mode::Capped(cli.cap as usize),
        })
    };
    match &cli.command {
        Command::Check { path, random } => {
            let a = if *random {
                random_ata(cli.seed, &RandomParams::default())
            } else {
                let Some(path) = path else {
                    return fail(EXIT_USAGE, "check needs a file or --random");
                };
                match read_automaton(path) {
                    Ok(a) => a,
                    Err(o) => return o,
                }
            };
            verdict_outcome(&a, &opts, cli.json, None)
        }
        Command::Sat { formula } => {
            let (_, a) = match formula_automaton(formula, cli.alphabet.as_deref()) {
                Ok(x) => x,
                Err(o) => return o,
            };
            verdict_outcome(&a, &opts, cli.json, Some(("SAT", "UNSAT")))
        }
        Command::Translate { formula } => match formula_automaton(formula, cli.alphabet.as_deref()) {
            Ok((_, a)) => ok(a.to_text()),
            Err(o) => o,
        },
        Command::Run { path, word } => {
            let a = match read_automaton(path) {
                Ok(a) => a,
                Err(o) => return o,
            };
            let w = match parse_timed_word(word, &a) {
                Ok(w) => w,
                Err(e) => return fail(EXIT_USAGE, e),
            };
            ok(replay_trace(&a, &w.events, cli.json))
        }
        Command::EncodeCm { path } => {
            let text = match fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_USAGE, format!("{path}: {e}")),
            };
            match parse_machine(&text) {
                Ok(m) => ok(encode(&m).to_text()),
                Err(e) => fail(EXIT_USAGE, e),
            }
        }
        Command::Abstract { path, config } => {
            let a = match read_automaton(path) {
                Ok(a) => a,
                Err(o) => return o,
            };
            let h = match Abstraction::new(&a.normalize()) {
                Ok(h) => h,
                Err(e) => return fail(EXIT_RESOURCE, e),
            };
            let c = match h.parse_config(config) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_USAGE, e),
            };
            let succ: Vec<(String, String)> = h.all_successors(&c).into_iter().map(|(mv, s)| (h.move_text(mv), h.dump(&s))).collect();
            if cli.json {
                let items: Vec<serde_json::Value> = succ.iter().map(|(m, s)| serde_json::json!({"move": m, "config": s})).collect();
                ok(serde_json::to_string_pretty(&items).unwrap() + "\n")
            } else {
                ok(succ.iter().map(|(m, s)| format!("{m} -> {s}\n")).collect())
            }
        }
    }
}

fn read_automaton(path: &str) -> Result<Automaton, Outcome> {
    let text = fs::read_to_string(path).map_err(|e| fail(EXIT_USAGE, format!("{path}: {e}")))?;
    parse_automaton(&text).map_err(|e| fail(EXIT_USAGE, format!("{path}: {e}")))
}

fn formula_automaton(text: &str, alphabet: Option<&str>) -> Result<(Vec<String>, Automaton), Outcome> {
    let f = parse_formula(text).map_err(|e| fail(EXIT_USAGE, e))?;
    let alphabet = match alphabet {
        Some(s) => s.split_whitespace().map(str::to_string).collect(),
        None => default_alphabet(&f),
    };
    match compile(&f, &alphabet) {
        Ok(a) => Ok((alphabet, a)),
        Err(e @ TptlError::Rejected(_)) => Err(fail(EXIT_OUT_OF_CLASS, e)),
        Err(e) => Err(fail(EXIT_USAGE, e)),
    }
}

fn verdict_outcome(a: &Automaton, opts: &SolverOptions, json: bool, labels: Option<(&str, &str)>) -> Outcome {
    let v: Verdict = match decide_emptiness(a, opts) {
        Ok(v) => v,
        Err(e @ SolverError::OutOfClass(_)) => return fail(EXIT_OUT_OF_CLASS, e),
        Err(e @ SolverError::Abstract(AbstractError::TooLarge { .. })) => return fail(EXIT_RESOURCE, e),
        Err(e @ SolverError::Abstract(_)) => return fail(EXIT_USAGE, e),
        Err(e @ SolverError::Resource { .. }) => return fail(EXIT_RESOURCE, e),
    };
    let h = Abstraction::new(&a.normalize()).expect("decide_emptiness built the same abstraction");
    let report = Report::new(&h, &v, labels);
    let code = match v.kind {
        VerdictKind::Nonempty => EXIT_NONEMPTY,
        VerdictKind::Empty => EXIT_EMPTY,
        VerdictKind::Unknown(_) => EXIT_UNKNOWN,
    };
    let stdout = if json { report.to_json() + "\n" } else { report.to_text() };
    Outcome { code, stdout, stderr: String::new() }
}

fn config_text(a: &Automaton, p: &ConcreteConfig) -> String {
    let items: Vec<String> = p.iter().map(|(q, v)| format!("{}@{}", a.states[*q].name, v)).collect();
    format!("{{{}}}", items.join(", "))
}

fn replay_trace(a: &Automaton, events: &[(usize, crate::concrete::Clock)], json: bool) -> String {
    let mut live = vec![initial_config(a)];
    let mut now = num_rational::BigRational::zero();
    let mut rows = vec![(String::from("start"), live.clone(), false)];
    for (act, t) in events {
        let delta = t - &now;
        now = t.clone();
        let mut next = std::collections::BTreeSet::new();
        let mut truncated = false;
        for p in &live {
            let p = elapse(p, &delta).expect("timestamps increase");
            for s in letter_successors(a, &p, *act) {
                if next.len() >= DEFAULT_BRANCH_CAP {
                    truncated = true;
                    break;
                }
                next.insert(s);
            }
        }
        live = next.into_iter().collect();
        rows.push((format!("{}@{}", a.alphabet[*act], t), live.clone(), truncated));
    }
    if json {
        let items: Vec<serde_json::Value> = rows
            .iter()
            .map(|(ev, cs, tr)| serde_json::json!({"event": ev, "configs": cs.iter().map(|p| config_text(a, p)).collect::<Vec<_>>(), "truncated": tr}))
            .collect();
        return serde_json::to_string_pretty(&items).unwrap() + "\n";
    }
    let mut out = String::new();
    for (ev, cs, tr) in rows {
        out += &format!("{ev}: {} branch(es){}\n", cs.len(), if tr { " (truncated)" } else { "" });
        for p in cs {
            out += &format!("  {}\n", config_text(a, &p));
        }
    }
    out
}
