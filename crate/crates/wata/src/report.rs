//! Machine-readable verdict reports.

use serde::Serialize;

use crate::region::Abstraction;
use crate::solver::{Step, Verdict, VerdictKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepReport {
    #[serde(rename = "move")]
    pub mv: String,
    pub config: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessReport {
    pub stem: Vec<StepReport>,
    pub cycle: Vec<StepReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StatsReport {
    pub iterations: usize,
    #[serde(rename = "generators_per_Z")]
    pub generators_per_z: Vec<usize>,
    pub nodes_explored: usize,
    pub mode: String,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
    pub stats: StatsReport,
}

fn steps(h: &Abstraction, s: &[Step]) -> Vec<StepReport> {
    s.iter().map(|st| StepReport { mv: h.move_text(st.mv), config: h.dump(&st.to) }).collect()
}

impl Report {
    /// `h` must be the abstraction the verdict was computed on. `labels`
    /// renames NONEMPTY/EMPTY (for satisfiability reports).
    pub fn new(h: &Abstraction, v: &Verdict, labels: Option<(&str, &str)>) -> Report {
        let verdict = match (&v.kind, labels) {
            (VerdictKind::Nonempty, Some((yes, _))) => yes.to_string(),
            (VerdictKind::Empty, Some((_, no))) => no.to_string(),
            (k, _) => k.label().to_string(),
        };
        let reason = match &v.kind {
            VerdictKind::Unknown(r) => Some(r.clone()),
            _ => None,
        };
        Report {
            verdict,
            reason,
            witness: v.witness.as_ref().map(|w| WitnessReport { stem: steps(h, &w.stem), cycle: steps(h, &w.cycle) }),
            stats: StatsReport {
                iterations: v.stats.iterations,
                generators_per_z: v.stats.generators_per_z.clone(),
                nodes_explored: v.stats.nodes_explored,
                mode: v.mode.name().to_string(),
                exact: v.stats.exact,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut out = format!("verdict: {}\n", self.verdict);
        if let Some(r) = &self.reason {
            out += &format!("reason: {r}\n");
        }
        let s = &self.stats;
        out += &format!(
            "mode: {} (exact: {})\niterations: {}\ngenerators per Z: {:?}\nnodes explored: {}\n",
            s.mode, s.exact, s.iterations, s.generators_per_z, s.nodes_explored
        );
        if let Some(w) = &self.witness {
            out += "witness stem:\n";
            for st in &w.stem {
                out += &format!("  {} -> {}\n", st.mv, st.config);
            }
            out += "witness cycle:\n";
            for st in &w.cycle {
                out += &format!("  {} -> {}\n", st.mv, st.config);
            }
        }
        out
    }
}
