//! Worklist interval interpreter for a single thread.
//!
//! `Env(n)` is the state before `n` runs. Branch filters are applied on the
//! outgoing edges, and loads consult a [`LoadPolicy`] for interfering values.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use fixedbitset::FixedBitSet;

use crate::domain::{transfer, AbstractEnv, Interval, Post};
use crate::frontend::{NodeId, ProgramModel, Stmt, ThreadCfg, ThreadId, VarId};
use crate::graph::LocalGraph;
use crate::AnalysisError;

/// Where a load takes its value from in one interference combination.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    /// The thread's own view of the variable.
    SelfDummy,
    /// A store of another thread, with the value it publishes.
    Remote { store: NodeId, value: Interval },
    /// A looping load: own view joined with the hull of every admissible store.
    LoopMerged { value: Interval },
}

impl Source {
    pub fn store(&self) -> Option<NodeId> {
        match self {
            Source::Remote { store, .. } => Some(*store),
            _ => None,
        }
    }
}

/// Per-load source assignment, sorted by load node.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Combination {
    pub entries: Vec<(NodeId, Source)>,
}

impl Combination {
    pub fn new(mut entries: Vec<(NodeId, Source)>) -> Combination {
        entries.sort_by_key(|(l, _)| *l);
        Combination { entries }
    }

    pub fn get(&self, load: NodeId) -> Option<&Source> {
        self.entries
            .binary_search_by_key(&load, |(l, _)| *l)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// `(load, store)` pairs of the remote sources.
    pub fn reads_from(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.entries.iter().filter_map(|(l, s)| s.store().map(|s| (*l, s)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Copy, Debug)]
pub enum LoadPolicy<'a> {
    SelfOnly,
    /// Hull of interfering values per global.
    JoinedInterference(&'a BTreeMap<VarId, Interval>),
    /// Loads missing from the combination read their own view.
    PerLoad(&'a Combination),
}

impl LoadPolicy<'_> {
    fn value(&self, load: NodeId, global: VarId, env: &AbstractEnv) -> Interval {
        let own = env.get(global);
        match self {
            LoadPolicy::SelfOnly => own,
            LoadPolicy::JoinedInterference(i) => match i.get(&global) {
                Some(v) => own.join(v),
                None => own,
            },
            LoadPolicy::PerLoad(c) => match c.get(load) {
                None | Some(Source::SelfDummy) => own,
                Some(Source::Remote { value, .. }) => *value,
                Some(Source::LoopMerged { value }) => own.join(value),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeqOptions {
    pub widening_delay: u32,
    pub narrowing_passes: u32,
    pub visit_cap: usize,
}

impl From<&crate::AnalysisConfig> for SeqOptions {
    fn from(c: &crate::AnalysisConfig) -> Self {
        SeqOptions {
            widening_delay: c.widening_delay,
            narrowing_passes: c.narrowing_passes,
            visit_cap: c.visit_cap,
        }
    }
}

impl Default for SeqOptions {
    fn default() -> Self {
        SeqOptions::from(&crate::AnalysisConfig::default())
    }
}

/// Combination-independent structure of one thread, computed once.
#[derive(Clone, Debug)]
pub struct ThreadShape {
    pub thread: ThreadId,
    pub graph: LocalGraph,
    pub loop_heads: FixedBitSet,
    pub rpo: Vec<usize>,
    /// `(pred, successor slot)` per node.
    pub in_edges: Vec<Vec<(usize, usize)>>,
}

impl ThreadShape {
    pub fn new(model: &ProgramModel, t: &ThreadCfg) -> ThreadShape {
        let graph = LocalGraph::of_thread(model, t);
        let mut in_edges = vec![Vec::new(); graph.len()];
        for (p, succs) in graph.succs.iter().enumerate() {
            for (slot, s) in succs.iter().enumerate() {
                in_edges[*s].push((p, slot));
            }
        }
        ThreadShape {
            thread: t.id,
            loop_heads: graph.loop_heads(),
            rpo: graph.reverse_postorder(),
            graph,
            in_edges,
        }
    }
}

/// Result of one sequential run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeEnvMap {
    pub base: u32,
    pub envs: Vec<AbstractEnv>,
}

impl NodeEnvMap {
    pub fn get(&self, n: NodeId) -> &AbstractEnv {
        &self.envs[(n.0 - self.base) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &AbstractEnv)> {
        let base = self.base;
        self.envs
            .iter()
            .enumerate()
            .map(move |(i, e)| (NodeId(base + i as u32), e))
    }
}

/// Nodes whose statement is replaced by the identity.
pub type Pruned<'a> = Option<&'a FixedBitSet>;

fn post(
    model: &ProgramModel,
    shape: &ThreadShape,
    i: usize,
    env: &AbstractEnv,
    policy: &LoadPolicy<'_>,
    pruned: Pruned<'_>,
) -> Post {
    let n = shape.graph.node(i);
    let stmt = model.stmt(n);
    if pruned.is_some_and(|p| p.contains(n.index())) {
        return match stmt {
            Stmt::Branch { .. } => Post::Branch(env.clone(), env.clone()),
            _ => Post::One(env.clone()),
        };
    }
    transfer(model, stmt, env, |g, e| policy.value(n, g, e))
}

pub fn analyze_thread(
    model: &ProgramModel,
    shape: &ThreadShape,
    init: &AbstractEnv,
    policy: LoadPolicy<'_>,
    opts: &SeqOptions,
    pruned: Pruned<'_>,
) -> Result<NodeEnvMap, AnalysisError> {
    let g = &shape.graph;
    let mut envs = vec![AbstractEnv::Bottom; g.len()];
    let mut joins = vec![0u32; g.len()];
    envs[g.entry] = init.clone();
    let mut queue = VecDeque::from([g.entry]);
    let mut queued = FixedBitSet::with_capacity(g.len());
    queued.insert(g.entry);
    let mut visits = 0usize;
    while let Some(i) = queue.pop_front() {
        queued.set(i, false);
        visits += 1;
        if visits > opts.visit_cap {
            return Err(AnalysisError::AnalysisBudgetExceeded {
                thread: shape.thread,
                cap: opts.visit_cap,
            });
        }
        let out = post(model, shape, i, &envs[i], &policy, pruned);
        for (slot, &s) in g.succs[i].iter().enumerate() {
            let e = out.slot(slot);
            if e.leq(&envs[s]) {
                continue;
            }
            let joined = envs[s].join(e);
            envs[s] = if shape.loop_heads.contains(s) {
                joins[s] += 1;
                if joins[s] > opts.widening_delay {
                    envs[s].widen(&joined)
                } else {
                    joined
                }
            } else {
                joined
            };
            if !queued.put(s) {
                queue.push_back(s);
            }
        }
    }
    for _ in 0..opts.narrowing_passes.min(2) {
        for &s in &shape.rpo {
            if s == g.entry {
                continue;
            }
            let mut f = AbstractEnv::Bottom;
            for &(p, slot) in &shape.in_edges[s] {
                f = f.join(post(model, shape, p, &envs[p], &policy, pruned).slot(slot));
            }
            envs[s] = if shape.loop_heads.contains(s) {
                envs[s].narrow(&f)
            } else {
                f
            };
        }
    }
    Ok(NodeEnvMap { base: g.base, envs })
}

/// Assertions of the thread that some state of `envs` may violate.
pub fn violations(model: &ProgramModel, shape: &ThreadShape, envs: &NodeEnvMap) -> Vec<NodeId> {
    model
        .assertions
        .iter()
        .filter(|a| a.thread == shape.thread)
        .filter(|a| match model.stmt(a.node) {
            Stmt::Assert { cond } => crate::domain::may_violate(cond, envs.get(a.node)),
            _ => false,
        })
        .map(|a| a.node)
        .collect()
}

/// Post-state of every edge is below the target's env.
pub fn is_stable(
    model: &ProgramModel,
    shape: &ThreadShape,
    envs: &NodeEnvMap,
    policy: LoadPolicy<'_>,
    pruned: Pruned<'_>,
) -> bool {
    (0..shape.graph.len()).all(|i| {
        let out = post(model, shape, i, &envs.envs[i], &policy, pruned);
        shape.graph.succs[i]
            .iter()
            .enumerate()
            .all(|(slot, &s)| out.slot(slot).leq(&envs.envs[s]))
    })
}

/// Environment holding the declared initial value of every global.
pub fn initial_globals(model: &ProgramModel) -> AbstractEnv {
    AbstractEnv::from_bindings(
        model
            .globals
            .iter()
            .map(|g| (*g, Interval::constant(model.var(*g).init.unwrap_or(0)))),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load;

    fn run_main(src: &str) -> (ProgramModel, NodeEnvMap) {
        let m = load(src).unwrap();
        let shape = ThreadShape::new(&m, m.thread(ThreadId(0)));
        let envs = analyze_thread(
            &m,
            &shape,
            &initial_globals(&m),
            LoadPolicy::SelfOnly,
            &SeqOptions::default(),
            None,
        )
        .unwrap();
        assert!(is_stable(&m, &shape, &envs, LoadPolicy::SelfOnly, None));
        (m, envs)
    }

    #[test]
    fn counting_loop_narrows_back() {
        let (m, envs) =
            run_main("thread main() {\n int i = 0;\n while (i < 10) {\n  i = i + 1;\n }\n assert(i == 10);\n}");
        let i = m.vars.iter().find(|v| v.name == "i").unwrap().id;
        let exit = m.thread(ThreadId(0)).exit;
        assert_eq!(envs.get(exit).get(i), Interval::constant(10));
        let shape = ThreadShape::new(&m, m.thread(ThreadId(0)));
        assert!(violations(&m, &shape, &envs).is_empty());
    }

    #[test]
    fn unreachable_branch_is_bottom() {
        let (m, envs) = run_main("thread main() {\n int t = 25;\n if (t < 0) {\n  error;\n }\n}");
        let err = m.assertions[0].node;
        assert!(envs.get(err).is_bottom());
    }

    #[test]
    fn joined_policy_reads_hull() {
        let m = load("int x = 10; thread main() {\n int t = x;\n}").unwrap();
        let shape = ThreadShape::new(&m, m.thread(ThreadId(0)));
        let x = m.global_by_name("x").unwrap();
        let i = BTreeMap::from([(x, Interval::range(50, 60))]);
        let envs = analyze_thread(
            &m,
            &shape,
            &initial_globals(&m),
            LoadPolicy::JoinedInterference(&i),
            &SeqOptions::default(),
            None,
        )
        .unwrap();
        let t = m.vars.iter().find(|v| v.name == "t").unwrap().id;
        assert_eq!(envs.get(m.thread(ThreadId(0)).exit).get(t), Interval::range(10, 60));
    }

    #[test]
    fn visit_cap_is_enforced() {
        let m = load("thread main() {\n int i = 0;\n while (i < 100) { i = i + 1; }\n}").unwrap();
        let shape = ThreadShape::new(&m, m.thread(ThreadId(0)));
        let opts = SeqOptions {
            widening_delay: 1000,
            narrowing_passes: 1,
            visit_cap: 50,
        };
        let err = analyze_thread(&m, &shape, &AbstractEnv::top(), LoadPolicy::SelfOnly, &opts, None);
        assert!(matches!(err, Err(AnalysisError::AnalysisBudgetExceeded { .. })));
    }
}
