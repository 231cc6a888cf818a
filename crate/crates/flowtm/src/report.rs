//! Text and JSON rendering of analysis results.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::time::Duration;

use flowtm_core::frontend::{ProgramModel, ThreadId};
use flowtm_core::tm::AnalysisResult;
use flowtm_core::Mode;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssertionEntry {
    pub thread: String,
    pub line: u32,
    pub status: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatsEntry {
    pub outer_iters: u32,
    pub runs: u64,
    pub combos: u64,
    pub infeasible: u64,
    pub pruned_loads: u64,
    pub clusters: u64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    #[serde(skip)]
    pub mode: Mode,
    pub assertions: Vec<AssertionEntry>,
    pub stats: StatsEntry,
    /// Final environment per node, keyed by node name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envs: Option<BTreeMap<String, String>>,
}

/// Routine name, suffixed with `#k` when the routine has several instances.
pub fn thread_label(model: &ProgramModel, t: ThreadId) -> String {
    let routine = &model.thread(t).routine;
    let same: Vec<ThreadId> = model
        .threads
        .iter()
        .filter(|c| &c.routine == routine)
        .map(|c| c.id)
        .collect();
    if same.len() == 1 {
        routine.clone()
    } else {
        let k = same.iter().position(|c| *c == t).unwrap_or(0) + 1;
        format!("{routine}#{k}")
    }
}

impl Report {
    pub fn new(model: &ProgramModel, result: &AnalysisResult, wall: Duration, with_envs: bool) -> Report {
        let assertions = result
            .verdicts
            .iter()
            .map(|v| AssertionEntry {
                thread: thread_label(model, v.assertion.thread),
                line: v.assertion.line,
                status: v.verdict.as_str(),
            })
            .collect();
        let s = result.stats;
        let envs = with_envs.then(|| {
            model
                .nodes
                .iter()
                .map(|n| (n.name.clone(), result.env(n.id).render(model)))
                .collect()
        });
        Report {
            mode: result.mode,
            assertions,
            stats: StatsEntry {
                outer_iters: s.outer_iters,
                runs: s.runs,
                combos: s.combos,
                infeasible: s.infeasible,
                pruned_loads: s.pruned_loads,
                clusters: s.clusters,
                wall_ms: (wall.as_secs_f64() * 1e6).round() / 1e3,
            },
            envs,
        }
    }

    pub fn verified(&self) -> usize {
        self.assertions.iter().filter(|a| a.status == "verified").count()
    }

    pub fn all_verified(&self) -> bool {
        self.verified() == self.assertions.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("mode: {}\n", self.mode);
        for a in &self.assertions {
            let _ = writeln!(out, "{} line {}: {}", a.thread, a.line, a.status);
        }
        let _ = writeln!(out, "verified {}/{}", self.verified(), self.assertions.len());
        let s = &self.stats;
        let _ = writeln!(
            out,
            "outer_iters={} runs={} combos={} infeasible={} pruned_loads={} clusters={} wall_ms={}",
            s.outer_iters, s.runs, s.combos, s.infeasible, s.pruned_loads, s.clusters, s.wall_ms
        );
        if let Some(envs) = &self.envs {
            for (node, env) in envs {
                let _ = writeln!(out, "{node}: {env}");
            }
        }
        out
    }
}
