use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use wata::ata::{parse_automaton, Automaton as Ata, Condition};
use wata::concrete::{parse_timed_word, replay as replay_word, DEFAULT_BRANCH_CAP};
use wata::instance_gen::{encode, parse_machine, random_ata, RandomParams};
use wata::region::Abstraction;
use wata::report::Report;
use wata::solver::{decide_emptiness, Mode, SolverError, SolverOptions};
use wata::tptl::{classify, compile, default_alphabet, parse_formula, FragmentClass};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn solver_err(e: SolverError) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn options(mode: &str, cap: usize, max_size: usize) -> PyResult<SolverOptions> {
    let mode = match mode {
        "exact" => Mode::Exact,
        "capped" if cap >= 1 => Mode::Capped(cap),
        "capped" => return Err(value_err("cap must be at least 1")),
        other => return Err(value_err(format!("unknown mode '{other}'"))),
    };
    Ok(SolverOptions { witness_max_size: max_size, ..SolverOptions::with_mode(mode) })
}

/// A one-clock alternating timed automaton.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Automaton {
    inner: Ata,
}

#[pymethods]
impl Automaton {
    /// Parse the `.ata` text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Automaton> {
        parse_automaton(text).map(|inner| Automaton { inner }).map_err(value_err)
    }

    /// Compile a Constrained TPTL formula; the alphabet defaults to its propositions.
    #[staticmethod]
    #[pyo3(signature = (formula, alphabet=None))]
    fn from_formula(formula: &str, alphabet: Option<Vec<String>>) -> PyResult<Automaton> {
        let f = parse_formula(formula).map_err(value_err)?;
        let alphabet = alphabet.unwrap_or_else(|| default_alphabet(&f));
        compile(&f, &alphabet).map(|inner| Automaton { inner }).map_err(value_err)
    }

    /// Encode a five-counter machine given in its text format.
    #[staticmethod]
    fn from_counter_machine(text: &str) -> PyResult<Automaton> {
        parse_machine(text).map(|m| Automaton { inner: encode(&m) }).map_err(value_err)
    }

    #[staticmethod]
    #[pyo3(signature = (seed, n_states=3, n_letters=2, d_max=2, rank1_prob=0.5))]
    fn random(seed: u64, n_states: usize, n_letters: usize, d_max: u32, rank1_prob: f64) -> Automaton {
        Automaton { inner: random_ata(seed, &RandomParams { n_states, n_letters, d_max, rank1_prob }) }
    }

    #[getter]
    fn states(&self) -> Vec<(String, u32)> {
        self.inner.states.iter().map(|s| (s.name.clone(), s.rank)).collect()
    }

    #[getter]
    fn alphabet(&self) -> Vec<String> {
        self.inner.alphabet.clone()
    }

    #[getter]
    fn d_max(&self) -> u32 {
        self.inner.d_max
    }

    /// `"weak(0,1)"` or the out-of-class index.
    fn condition(&self) -> String {
        self.inner.classify_condition().to_string()
    }

    fn is_weak01(&self) -> bool {
        self.inner.classify_condition() == Condition::Weak01
    }

    fn normalize(&self) -> Automaton {
        Automaton { inner: self.inner.normalize() }
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Abstract successors of a configuration in dump format, e.g. `"[{q:I1}] inf={}"`.
    fn successors(&self, config: &str) -> PyResult<Vec<(String, String)>> {
        let h = Abstraction::new(&self.inner.normalize()).map_err(value_err)?;
        let c = h.parse_config(config).map_err(value_err)?;
        Ok(h.all_successors(&c).into_iter().map(|(mv, s)| (h.move_text(mv), h.dump(&s))).collect())
    }

    /// Live configurations after replaying a timed word such as `"a@1/2 a@3/2"`.
    fn replay(&self, word: &str) -> PyResult<Vec<Vec<(String, String)>>> {
        let w = parse_timed_word(word, &self.inner).map_err(value_err)?;
        let r = replay_word(&self.inner, &w, DEFAULT_BRANCH_CAP);
        Ok(r.configs
            .iter()
            .map(|p| p.iter().map(|(q, v)| (self.inner.states[*q].name.clone(), v.to_string())).collect())
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Automaton(states={}, alphabet={:?}, d_max={})", self.inner.states.len(), self.inner.alphabet, self.inner.d_max)
    }
}

/// Outcome of an emptiness check.
#[pyclass(frozen)]
struct Verdict {
    report: Report,
}

#[pymethods]
impl Verdict {
    /// `"NONEMPTY"`, `"EMPTY"` or `"UNKNOWN"`.
    #[getter]
    fn verdict(&self) -> String {
        self.report.verdict.clone()
    }

    #[getter]
    fn exact(&self) -> bool {
        self.report.stats.exact
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.report.stats.iterations
    }

    #[getter]
    fn generators_per_z(&self) -> Vec<usize> {
        self.report.stats.generators_per_z.clone()
    }

    /// `(stem, cycle)` as lists of `(move, config)`, or `None`.
    #[getter]
    fn witness(&self) -> Option<(Vec<(String, String)>, Vec<(String, String)>)> {
        let pairs = |v: &[wata::report::StepReport]| v.iter().map(|s| (s.mv.clone(), s.config.clone())).collect();
        self.report.witness.as_ref().map(|w| (pairs(&w.stem), pairs(&w.cycle)))
    }

    fn to_json(&self) -> String {
        self.report.to_json()
    }

    fn __repr__(&self) -> String {
        format!("Verdict({}, exact={})", self.report.verdict, self.report.stats.exact)
    }
}

fn check_ata(a: &Ata, opts: &SolverOptions, labels: Option<(&str, &str)>) -> PyResult<Verdict> {
    let v = decide_emptiness(a, opts).map_err(solver_err)?;
    let h = Abstraction::new(&a.normalize()).map_err(value_err)?;
    Ok(Verdict { report: Report::new(&h, &v, labels) })
}

/// Decide emptiness of an automaton.
#[pyfunction]
#[pyo3(signature = (automaton, mode="capped", cap=10_000, max_size=8))]
fn check(py: Python<'_>, automaton: &Automaton, mode: &str, cap: usize, max_size: usize) -> PyResult<Verdict> {
    let opts = options(mode, cap, max_size)?;
    let a = automaton.inner.clone();
    py.detach(|| check_ata(&a, &opts, None))
}

/// Decide satisfiability of a formula; the verdict reads SAT, UNSAT or UNKNOWN.
#[pyfunction]
#[pyo3(signature = (formula, alphabet=None, mode="capped", cap=10_000, max_size=8))]
fn satisfiable(py: Python<'_>, formula: &str, alphabet: Option<Vec<String>>, mode: &str, cap: usize, max_size: usize) -> PyResult<Verdict> {
    let opts = options(mode, cap, max_size)?;
    let a = Automaton::from_formula(formula, alphabet)?.inner;
    py.detach(|| check_ata(&a, &opts, Some(("SAT", "UNSAT"))))
}

/// `"positive"`, `"constrained"` or `"rejected: <reason>"`.
#[pyfunction]
fn classify_formula(formula: &str) -> PyResult<String> {
    let f = parse_formula(formula).map_err(value_err)?;
    Ok(match classify(&f) {
        FragmentClass::Positive => "positive".into(),
        FragmentClass::Constrained => "constrained".into(),
        FragmentClass::Rejected(r) => format!("rejected: {r}"),
    })
}

#[pymodule]
fn wata_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Automaton>()?;
    m.add_class::<Verdict>()?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(satisfiable, m)?)?;
    m.add_function(wrap_pyfunction!(classify_formula, m)?)?;
    Ok(())
}
