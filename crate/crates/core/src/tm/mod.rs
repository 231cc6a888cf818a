//! Thread-modular fixpoints.
//!
//! Both engines repeat a round over all threads, parents before children,
//! until the published interferences stop changing. The flow-insensitive
//! engine feeds every load the hull of all interfering values; the
//! flow-sensitive one runs each thread once per interference combination.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use fixedbitset::FixedBitSet;

use crate::domain::{transfer, AbstractEnv, Interval};
use crate::feasibility::{FactBase, Tuple};
use crate::frontend::{Assertion, NodeId, ProgramModel, Stmt, ThreadId, VarId};
use crate::pdg::{ClusterPlan, DependenceGraph, SlicePlan};
use crate::seq::{
    analyze_thread, initial_globals, violations, Combination, LoadPolicy, NodeEnvMap, SeqOptions, Source, ThreadShape,
};
use crate::{AnalysisConfig, AnalysisError, Mode};

/// Post-store environments published per store node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InterferenceTable {
    pub envs: BTreeMap<NodeId, AbstractEnv>,
}

impl InterferenceTable {
    /// Value a store publishes for the variable it writes.
    pub fn value(&self, model: &ProgramModel, s: NodeId) -> Interval {
        let v = model.stmt(s).stored_var().expect("store");
        self.envs.get(&s).map_or(Interval::EMPTY, |e| e.get(v))
    }

    /// Stores of other threads on `v` present in the table, in node order.
    pub fn remote_stores<'a>(
        &'a self,
        model: &'a ProgramModel,
        g: ThreadId,
        v: VarId,
    ) -> impl Iterator<Item = NodeId> + 'a {
        self.envs
            .keys()
            .copied()
            .filter(move |s| model.thread_of(*s) != g && model.stmt(*s).stored_var() == Some(v))
    }

    /// Hull of the values other threads publish, per global.
    pub fn joined_for(&self, model: &ProgramModel, g: ThreadId) -> BTreeMap<VarId, Interval> {
        let mut out: BTreeMap<VarId, Interval> = BTreeMap::new();
        for s in self.envs.keys() {
            if model.thread_of(*s) == g {
                continue;
            }
            let v = model.stmt(*s).stored_var().expect("store");
            let e = out.entry(v).or_insert(Interval::EMPTY);
            *e = e.join(&self.value(model, *s));
        }
        out
    }

    /// Per-variable hull of what thread `g` publishes.
    pub fn summary(&self, model: &ProgramModel, g: ThreadId) -> AbstractEnv {
        let mut hull: BTreeMap<VarId, Interval> = BTreeMap::new();
        for s in self.envs.keys().filter(|s| model.thread_of(**s) == g) {
            let v = model.stmt(*s).stored_var().expect("store");
            let e = hull.entry(v).or_insert(Interval::EMPTY);
            *e = e.join(&self.value(model, *s));
        }
        AbstractEnv::from_bindings(hull)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Verified,
    Unproven,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Verified => "verified",
            Verdict::Unproven => "unproven",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssertionVerdict {
    pub assertion: Assertion,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub outer_iters: u32,
    pub runs: u64,
    pub combos: u64,
    pub infeasible: u64,
    pub pruned_loads: u64,
    pub clusters: u64,
}

/// Work done for one thread in one outer iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ThreadRound {
    pub combos: usize,
    pub infeasible: usize,
    pub runs: usize,
    pub clusters: usize,
    pub pruned_loads: usize,
}

/// Source of a load with the interfering value erased.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SourceKey {
    SelfDummy,
    Store(NodeId),
    LoopMerged,
}

impl From<&Source> for SourceKey {
    fn from(s: &Source) -> Self {
        match s {
            Source::SelfDummy => SourceKey::SelfDummy,
            Source::Remote { store, .. } => SourceKey::Store(*store),
            Source::LoopMerged { .. } => SourceKey::LoopMerged,
        }
    }
}

pub type ComboShape = Vec<(NodeId, SourceKey)>;

pub fn shape_of(c: &Combination) -> ComboShape {
    c.entries.iter().map(|(l, s)| (*l, s.into())).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisResult {
    pub mode: Mode,
    /// Join over all runs of the pre-state of every node.
    pub te: Vec<AbstractEnv>,
    pub verdicts: Vec<AssertionVerdict>,
    pub stats: Stats,
    pub interference: InterferenceTable,
    /// Per thread, the final outer iteration.
    pub last_round: Vec<ThreadRound>,
    /// Combinations rejected as infeasible in any iteration.
    pub rejected: BTreeSet<ComboShape>,
    /// Per rejected combination, reads that no execution realizes together.
    pub rejected_reads: BTreeSet<Vec<Tuple>>,
    /// Nodes analyzed with the identity transfer.
    pub pruned: Option<FixedBitSet>,
}

impl AnalysisResult {
    pub fn env(&self, n: NodeId) -> &AbstractEnv {
        &self.te[n.index()]
    }

    pub fn verdict_at(&self, node: NodeId) -> Option<Verdict> {
        self.verdicts
            .iter()
            .find(|v| v.assertion.node == node)
            .map(|v| v.verdict)
    }

    pub fn verified_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.verdict == Verdict::Verified).count()
    }

    pub fn all_verified(&self) -> bool {
        self.verified_count() == self.verdicts.len()
    }

    pub fn verified_set(&self) -> BTreeSet<NodeId> {
        self.verdicts
            .iter()
            .filter(|v| v.verdict == Verdict::Verified)
            .map(|v| v.assertion.node)
            .collect()
    }
}

pub type RunOutput = Result<NodeEnvMap, AnalysisError>;

/// Executes independent interpreter runs; results come back in job order.
pub trait Runner: Sync {
    fn run(&self, jobs: usize, f: &(dyn Fn(usize) -> RunOutput + Sync)) -> Vec<RunOutput>;
}

pub struct Serial;

impl Runner for Serial {
    fn run(&self, jobs: usize, f: &(dyn Fn(usize) -> RunOutput + Sync)) -> Vec<RunOutput> {
        (0..jobs).map(f).collect()
    }
}

/// Combinations selected for one thread in one round.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CombinationSet {
    pub runs: Vec<Combination>,
    pub generated: usize,
    pub rejected: Vec<Combination>,
    /// Per rejected combination, the contradictory reads.
    pub refuted: Vec<Vec<Tuple>>,
    pub clusters: usize,
}

/// Slicing and clustering artifacts used by the optimized mode.
#[derive(Clone, Debug)]
pub struct Pruning {
    pub pdg: DependenceGraph,
    pub slices: SlicePlan,
    pub clusters: ClusterPlan,
    pub pruned: FixedBitSet,
}

/// Everything that stays fixed across outer iterations.
pub struct Analyzer<'m> {
    pub model: &'m ProgramModel,
    pub cfg: AnalysisConfig,
    pub shapes: Vec<ThreadShape>,
    on_cycle: FixedBitSet,
    pub facts: Option<FactBase>,
    pub pruning: Option<Pruning>,
    memo: BTreeMap<Vec<Tuple>, bool>,
}

impl<'m> Analyzer<'m> {
    pub fn new(model: &'m ProgramModel, cfg: &AnalysisConfig) -> Analyzer<'m> {
        let shapes: Vec<ThreadShape> = model.threads.iter().map(|t| ThreadShape::new(model, t)).collect();
        let mut on_cycle = FixedBitSet::with_capacity(model.nodes.len());
        for s in &shapes {
            for i in s.graph.on_cycle().ones() {
                on_cycle.insert(s.graph.node(i).index());
            }
        }
        let pruning = cfg.mode.uses_pdg().then(|| {
            let pdg = DependenceGraph::build(model);
            let slices = SlicePlan::build(&pdg, model);
            let clusters = ClusterPlan::build(model, &pdg, &slices);
            let pruned = slices.pruned();
            Pruning {
                pdg,
                slices,
                clusters,
                pruned,
            }
        });
        let loads_in_loops = model
            .nodes
            .iter()
            .any(|n| matches!(n.stmt, Stmt::Load { .. }) && on_cycle.contains(n.id.index()));
        let need_facts = cfg.mode.uses_feasibility() || (cfg.mode != Mode::FlowInsensitive && loads_in_loops);
        Analyzer {
            model,
            cfg: cfg.clone(),
            shapes,
            on_cycle,
            facts: need_facts.then(|| FactBase::build(model)),
            pruning,
            memo: BTreeMap::new(),
        }
    }

    pub fn is_self_reachable(&self, n: NodeId) -> bool {
        self.on_cycle.contains(n.index())
    }

    fn pruned(&self) -> Option<&FixedBitSet> {
        self.pruning.as_ref().map(|p| &p.pruned)
    }

    fn on_slice(&self, n: NodeId) -> bool {
        self.pruning.as_ref().is_none_or(|p| p.slices.on_slice(n))
    }

    /// The refuted reads of an infeasible combination.
    fn refute(&mut self, c: &Combination) -> Option<Vec<Tuple>> {
        if !self.cfg.mode.uses_feasibility() {
            return None;
        }
        let facts = self.facts.as_ref().expect("facts built for constrained modes");
        facts.refuting_chain(&facts.reads_from(c), &mut self.memo)
    }

    /// Candidate sources of every considered load of `g`.
    fn candidates(&self, g: ThreadId, table: &InterferenceTable) -> Vec<(NodeId, Vec<Source>)> {
        let m = self.model;
        m.loads_of(g)
            .into_iter()
            .filter(|l| self.on_slice(*l))
            .map(|l| {
                let v = m.stmt(l).loaded_var().expect("load");
                let stores = table.remote_stores(m, g, v);
                let srcs = if self.is_self_reachable(l) {
                    let facts = self.facts.as_ref().expect("facts built for loops");
                    let value = stores
                        .filter(|s| !facts.must_happen_before(l, *s))
                        .fold(Interval::EMPTY, |acc, s| acc.join(&table.value(m, s)));
                    vec![Source::LoopMerged { value }]
                } else {
                    let mut c: Vec<Source> = stores
                        .map(|s| Source::Remote {
                            store: s,
                            value: table.value(m, s),
                        })
                        .collect();
                    c.push(Source::SelfDummy);
                    c
                };
                (l, srcs)
            })
            .collect()
    }

    /// Cartesian product, first load varying fastest.
    fn product(&self, g: ThreadId, cands: &[&(NodeId, Vec<Source>)]) -> Result<Vec<Combination>, AnalysisError> {
        let count = cands
            .iter()
            .try_fold(1usize, |acc, (_, c)| acc.checked_mul(c.len()))
            .unwrap_or(usize::MAX);
        if count > self.cfg.combo_cap {
            return Err(AnalysisError::CombinationBudgetExceeded {
                thread: g,
                count,
                cap: self.cfg.combo_cap,
            });
        }
        let mut out = Vec::with_capacity(count);
        let mut idx = vec![0usize; cands.len()];
        for _ in 0..count {
            out.push(Combination::new(
                cands.iter().zip(&idx).map(|((l, c), i)| (*l, c[*i].clone())).collect(),
            ));
            for (k, (_, c)) in cands.iter().enumerate() {
                idx[k] += 1;
                if idx[k] < c.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(out)
    }

    pub fn compute_combinations(
        &mut self,
        g: ThreadId,
        table: &InterferenceTable,
    ) -> Result<CombinationSet, AnalysisError> {
        let cands = self.candidates(g, table);
        let groups: Vec<Vec<&(NodeId, Vec<Source>)>> = match &self.pruning {
            Some(p) => {
                let clusters = p.clusters.clusters_of(g);
                clusters
                    .iter()
                    .map(|ls| cands.iter().filter(|(l, _)| ls.contains(l)).collect())
                    .collect()
            }
            None => vec![cands.iter().collect()],
        };
        let mut set = CombinationSet {
            clusters: if self.pruning.is_some() { groups.len() } else { 0 },
            ..CombinationSet::default()
        };
        let mut per_cluster: Vec<Vec<Combination>> = Vec::new();
        for group in &groups {
            let all = self.product(g, group)?;
            set.generated += all.len();
            let mut ok = Vec::new();
            for c in all {
                match self.refute(&c) {
                    None => ok.push(c),
                    Some(reads) => {
                        set.rejected.push(c);
                        set.refuted.push(reads);
                    }
                }
            }
            per_cluster.push(ok);
        }
        if per_cluster.iter().any(|c| c.is_empty()) {
            return Ok(set);
        }
        if per_cluster.len() == 1 {
            set.runs = per_cluster.pop().unwrap();
            return Ok(set);
        }
        let width = per_cluster.iter().map(Vec::len).max().unwrap_or(1);
        let pads: Vec<Combination> = groups
            .iter()
            .zip(&per_cluster)
            .map(|(group, ok)| {
                let selfish = Combination::new(group.iter().map(|(l, _)| (*l, Source::SelfDummy)).collect());
                if ok.contains(&selfish) {
                    selfish
                } else {
                    ok[0].clone()
                }
            })
            .collect();
        for k in 0..width {
            let mut entries = Vec::new();
            for (ok, pad) in per_cluster.iter().zip(&pads) {
                entries.extend(ok.get(k).unwrap_or(pad).entries.iter().cloned());
            }
            set.runs.push(Combination::new(entries));
        }
        Ok(set)
    }

    fn entry_env(&self, g: ThreadId, te: &[AbstractEnv]) -> AbstractEnv {
        let t = self.model.thread(g);
        match t.creator {
            None => initial_globals(self.model),
            Some(site) => te[site.index()].project(|v| self.model.is_global(v)),
        }
    }

    fn publish(
        &self,
        te: &[AbstractEnv],
        old: &InterferenceTable,
        counts: &mut BTreeMap<NodeId, u32>,
    ) -> InterferenceTable {
        let m = self.model;
        let mut next = InterferenceTable::default();
        for s in m.all_stores() {
            if self.pruned().is_some_and(|p| p.contains(s.index())) {
                continue;
            }
            let pre = &te[s.index()];
            if pre.is_bottom() {
                continue;
            }
            let post = transfer(m, m.stmt(s), pre, |g, e| e.get(g)).slot(0).clone();
            let env = match old.envs.get(&s) {
                None => post,
                Some(prev) => {
                    let joined = prev.join(&post);
                    if joined == *prev {
                        joined
                    } else {
                        let c = counts.entry(s).or_insert(0);
                        *c += 1;
                        if *c > self.cfg.widening_delay {
                            prev.widen(&joined)
                        } else {
                            joined
                        }
                    }
                }
            };
            next.envs.insert(s, env);
        }
        next
    }

    /// Runs the configured engine to its fixpoint.
    pub fn run(&mut self, runner: &dyn Runner) -> Result<AnalysisResult, AnalysisError> {
        let m = self.model;
        let opts = SeqOptions::from(&self.cfg);
        let mut te = vec![AbstractEnv::Bottom; m.nodes.len()];
        let mut table = InterferenceTable::default();
        let mut counts = BTreeMap::new();
        let mut violated: BTreeSet<NodeId> = BTreeSet::new();
        let mut stats = Stats::default();
        let mut rejected = BTreeSet::new();
        let mut rejected_reads = BTreeSet::new();
        let mut last_round = vec![ThreadRound::default(); m.threads.len()];
        let flow_insensitive = self.cfg.mode == Mode::FlowInsensitive;
        loop {
            stats.outer_iters += 1;
            if stats.outer_iters > self.cfg.outer_budget {
                return Err(AnalysisError::OuterBudgetExceeded {
                    budget: self.cfg.outer_budget,
                });
            }
            for t in &m.threads {
                let g = t.id;
                let init = self.entry_env(g, &te);
                if init.is_bottom() {
                    last_round[g.index()] = ThreadRound::default();
                    continue;
                }
                let set = if flow_insensitive {
                    None
                } else {
                    Some(self.compute_combinations(g, &table)?)
                };
                let shape = &self.shapes[g.index()];
                let mut round = ThreadRound::default();
                let outputs = if let Some(set) = &set {
                    round.combos = set.generated;
                    round.infeasible = set.rejected.len();
                    round.runs = set.runs.len();
                    round.clusters = set.clusters;
                    rejected.extend(set.rejected.iter().map(shape_of));
                    rejected_reads.extend(set.refuted.iter().cloned());
                    let pruned = self.pruned();
                    runner.run(set.runs.len(), &|k| {
                        analyze_thread(m, shape, &init, LoadPolicy::PerLoad(&set.runs[k]), &opts, pruned)
                    })
                } else {
                    let joined = table.joined_for(m, g);
                    round.runs = 1;
                    vec![analyze_thread(
                        m,
                        shape,
                        &init,
                        LoadPolicy::JoinedInterference(&joined),
                        &opts,
                        None,
                    )]
                };
                if let Some(p) = &self.pruning {
                    round.pruned_loads = m.loads_of(g).iter().filter(|l| !p.slices.on_slice(**l)).count();
                }
                for out in outputs {
                    let envs = out?;
                    violated.extend(violations(m, shape, &envs));
                    for (n, e) in envs.iter() {
                        if !e.leq(&te[n.index()]) {
                            te[n.index()] = te[n.index()].join(e);
                        }
                    }
                }
                stats.combos += round.combos as u64;
                stats.infeasible += round.infeasible as u64;
                stats.runs += round.runs as u64;
                last_round[g.index()] = round;
            }
            let next = self.publish(&te, &table, &mut counts);
            if next == table {
                break;
            }
            table = next;
        }
        stats.pruned_loads = last_round.iter().map(|r| r.pruned_loads as u64).sum();
        stats.clusters = self.pruning.as_ref().map_or(0, |p| p.clusters.count as u64);
        let verdicts = m
            .assertions
            .iter()
            .map(|a| AssertionVerdict {
                assertion: *a,
                verdict: if violated.contains(&a.node) {
                    Verdict::Unproven
                } else {
                    Verdict::Verified
                },
            })
            .collect();
        Ok(AnalysisResult {
            mode: self.cfg.mode,
            te,
            verdicts,
            stats,
            interference: table,
            last_round,
            rejected,
            rejected_reads,
            pruned: self.pruned().cloned(),
        })
    }
}

pub fn analyze(model: &ProgramModel, cfg: &AnalysisConfig) -> Result<AnalysisResult, AnalysisError> {
    analyze_with(model, cfg, &Serial)
}

pub fn analyze_with(
    model: &ProgramModel,
    cfg: &AnalysisConfig,
    runner: &dyn Runner,
) -> Result<AnalysisResult, AnalysisError> {
    Analyzer::new(model, cfg).run(runner)
}

pub fn run_flow_insensitive(model: &ProgramModel, cfg: &AnalysisConfig) -> Result<AnalysisResult, AnalysisError> {
    let cfg = AnalysisConfig {
        mode: Mode::FlowInsensitive,
        ..cfg.clone()
    };
    analyze(model, &cfg)
}

/// Flow-sensitive engine; `cfg.mode` picks plain, constrained or optimized.
pub fn run_flow_sensitive(model: &ProgramModel, cfg: &AnalysisConfig) -> Result<AnalysisResult, AnalysisError> {
    let mode = match cfg.mode {
        Mode::FlowInsensitive => Mode::FlowSensitive,
        m => m,
    };
    analyze(model, &AnalysisConfig { mode, ..cfg.clone() })
}

#[cfg(test)]
mod tests;
