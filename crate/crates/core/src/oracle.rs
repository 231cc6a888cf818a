//! Exhaustive concrete execution under sequential consistency.
//!
//! Used as ground truth by the test suites: every interleaving and nondet
//! valuation of a bounded program is explored, and the states it reaches are
//! compared with an analysis result.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::domain::Interval;
use crate::feasibility::{init_store, Tuple};
use crate::frontend::ast::{BinOp, ScalarType};
use crate::frontend::{Expr, NodeId, ProgramModel, Stmt, ThreadId, VarId};
use crate::tm::{AnalysisResult, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Granularity {
    /// Every statement is a scheduling point.
    Full,
    /// Only global accesses and joins are; local steps run eagerly.
    VisibleOnly,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleBounds {
    pub nondet_int: Vec<i64>,
    /// Extra executions allowed per node and thread beyond the first.
    pub unroll: u32,
    pub max_executions: usize,
    pub granularity: Granularity,
    /// Merge executions that reach identical configurations, keeping one
    /// witness interleaving.
    pub merge_states: bool,
}

impl Default for OracleBounds {
    fn default() -> Self {
        OracleBounds {
            nondet_int: vec![-1, 0, 1],
            unroll: 0,
            max_executions: 200_000,
            granularity: Granularity::VisibleOnly,
            merge_states: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("oracle budget exceeded: more than {cap} executions")]
    OracleBudgetExceeded { cap: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Status {
    NotStarted,
    At(NodeId),
    Done,
}

/// Snapshot of a running program.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConcreteState {
    status: Vec<Status>,
    /// Values of all variables; locals of distinct threads never alias.
    pub values: Vec<i64>,
    /// Last store per global (fact constant), in `globals` order.
    last_store: Vec<u32>,
    visits: Vec<u32>,
}

impl ConcreteState {
    pub fn is_running(&self, t: ThreadId) -> bool {
        matches!(self.status[t.index()], Status::At(_))
    }

    pub fn is_terminated(&self, t: ThreadId) -> bool {
        self.status[t.index()] == Status::Done
    }

    pub fn pc(&self, t: ThreadId) -> Option<NodeId> {
        match self.status[t.index()] {
            Status::At(n) => Some(n),
            _ => None,
        }
    }
}

/// One complete execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionRecord {
    pub interleaving: Vec<(ThreadId, NodeId)>,
    /// `(load, occurrence)` to the store it read from; initial values are
    /// their virtual init stores.
    pub read_map: BTreeMap<(NodeId, u32), u32>,
    pub violated: BTreeSet<NodeId>,
    pub final_values: Vec<i64>,
}

impl ExecutionRecord {
    pub fn reads_from(&self) -> BTreeSet<Tuple> {
        self.read_map.iter().map(|((l, _), s)| (l.0, *s)).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Exploration {
    pub records: Vec<ExecutionRecord>,
    /// Per node, every state in which it executed.
    pub visited: Vec<BTreeSet<Vec<i64>>>,
}

impl Exploration {
    pub fn violated_assertions(&self) -> BTreeSet<NodeId> {
        self.records.iter().flat_map(|r| r.violated.iter().copied()).collect()
    }

    pub fn final_values_of(&self, v: VarId) -> BTreeSet<i64> {
        self.records.iter().map(|r| r.final_values[v.index()]).collect()
    }
}

pub fn eval_concrete(e: &Expr, values: &[i64]) -> i64 {
    match e {
        Expr::Const(c) => *c,
        Expr::Var(v) => values[v.index()],
        Expr::Not(a) => (eval_concrete(a, values) == 0) as i64,
        Expr::Binary(op, a, b) => {
            let (x, y) = (eval_concrete(a, values), eval_concrete(b, values));
            match op {
                BinOp::Add => x.saturating_add(y),
                BinOp::Sub => x.saturating_sub(y),
                BinOp::Mul => x.saturating_mul(y),
                BinOp::Div => {
                    if y == 0 {
                        0
                    } else {
                        x.checked_div(y).unwrap_or(i64::MAX)
                    }
                }
                BinOp::Lt => (x < y) as i64,
                BinOp::Le => (x <= y) as i64,
                BinOp::Gt => (x > y) as i64,
                BinOp::Ge => (x >= y) as i64,
                BinOp::Eq => (x == y) as i64,
                BinOp::Ne => (x != y) as i64,
                BinOp::And => (x != 0 && y != 0) as i64,
                BinOp::Or => (x != 0 || y != 0) as i64,
            }
        }
    }
}

/// Successor states of executing `stmt`, one per nondet choice, with the
/// successor slot taken.
pub fn step_concrete(model: &ProgramModel, stmt: &Stmt, values: &[i64], nondet_int: &[i64]) -> Vec<(Vec<i64>, usize)> {
    let with = |v: VarId, x: i64| {
        let mut out = values.to_vec();
        out[v.index()] = x;
        out
    };
    match stmt {
        Stmt::LocalAssign { dst, expr } => vec![(with(*dst, eval_concrete(expr, values)), 0)],
        Stmt::Store { global, expr } => vec![(with(*global, eval_concrete(expr, values)), 0)],
        Stmt::Load { dst, global } => vec![(with(*dst, values[global.index()]), 0)],
        Stmt::Nondet { dst } => match model.var(*dst).ty {
            ScalarType::Int => nondet_int.iter().map(|x| (with(*dst, *x), 0)).collect(),
            ScalarType::Bool => vec![(with(*dst, 0), 0), (with(*dst, 1), 0)],
        },
        Stmt::Branch { cond } => {
            let slot = if eval_concrete(cond, values) != 0 { 0 } else { 1 };
            vec![(values.to_vec(), slot)]
        }
        _ => vec![(values.to_vec(), 0)],
    }
}

fn initial_state(model: &ProgramModel) -> ConcreteState {
    let mut values = vec![0; model.vars.len()];
    for g in &model.globals {
        values[g.index()] = model.var(*g).init.unwrap_or(0);
    }
    let mut status = vec![Status::NotStarted; model.threads.len()];
    let main = model.entry_thread();
    status[main.id.index()] = Status::At(main.entry);
    ConcreteState {
        status,
        values,
        last_store: model.globals.iter().map(|g| init_store(model, *g)).collect(),
        visits: vec![0; model.nodes.len()],
    }
}

type Configuration = (ConcreteState, BTreeMap<(NodeId, u32), u32>, BTreeSet<NodeId>);

struct Explorer<'a> {
    model: &'a ProgramModel,
    bounds: &'a OracleBounds,
    out: Exploration,
    seen: BTreeSet<Configuration>,
}

struct Path {
    interleaving: Vec<(ThreadId, NodeId)>,
    read_map: BTreeMap<(NodeId, u32), u32>,
    violated: BTreeSet<NodeId>,
}

impl Explorer<'_> {
    fn enabled(&self, st: &ConcreteState, t: usize) -> Option<NodeId> {
        let Status::At(n) = st.status[t] else {
            return None;
        };
        match self.model.stmt(n) {
            Stmt::Join { child, .. } if st.status[child.index()] != Status::Done => None,
            _ => Some(n),
        }
    }

    fn is_local(&self, n: NodeId) -> bool {
        !matches!(
            self.model.stmt(n),
            Stmt::Load { .. } | Stmt::Store { .. } | Stmt::Join { .. }
        )
    }

    /// All successors of thread `t` executing its current node.
    fn step(&mut self, st: &ConcreteState, path: &Path, t: usize, n: NodeId) -> Vec<(ConcreteState, Path)> {
        let m = self.model;
        if st.visits[n.index()] > self.bounds.unroll {
            return Vec::new();
        }
        self.out.visited[n.index()].insert(st.values.clone());
        let stmt = m.stmt(n);
        let mut base_path = Path {
            interleaving: path.interleaving.clone(),
            read_map: path.read_map.clone(),
            violated: path.violated.clone(),
        };
        base_path.interleaving.push((ThreadId(t as u32), n));
        match stmt {
            Stmt::Load { global, .. } => {
                let pos = m.globals.iter().position(|g| g == global).expect("global");
                base_path.read_map.insert((n, st.visits[n.index()]), st.last_store[pos]);
            }
            Stmt::Assert { cond } if eval_concrete(cond, &st.values) == 0 => {
                base_path.violated.insert(n);
            }
            _ => {}
        }
        let mut out = Vec::new();
        for (values, slot) in step_concrete(m, stmt, &st.values, &self.bounds.nondet_int) {
            let mut next = st.clone();
            next.values = values;
            next.visits[n.index()] += 1;
            match stmt {
                Stmt::Store { global, .. } => {
                    let pos = m.globals.iter().position(|g| g == global).expect("global");
                    next.last_store[pos] = n.0;
                }
                Stmt::Create { child, .. } => {
                    next.status[child.index()] = Status::At(m.thread(*child).entry);
                }
                _ => {}
            }
            next.status[t] = match stmt {
                Stmt::Exit => Status::Done,
                _ => Status::At(m.succs(n)[slot]),
            };
            let p = Path {
                interleaving: base_path.interleaving.clone(),
                read_map: base_path.read_map.clone(),
                violated: base_path.violated.clone(),
            };
            out.push((next, p));
        }
        out
    }

    fn explore(&mut self, st: ConcreteState, path: Path) -> Result<(), OracleError> {
        if self.bounds.merge_states {
            let key = (st.clone(), path.read_map.clone(), path.violated.clone());
            if !self.seen.insert(key) {
                return Ok(());
            }
        }
        if self.bounds.granularity == Granularity::VisibleOnly {
            let local =
                (0..st.status.len()).find_map(|t| self.enabled(&st, t).filter(|n| self.is_local(*n)).map(|n| (t, n)));
            if let Some((t, n)) = local {
                for (next, p) in self.step(&st, &path, t, n) {
                    self.explore(next, p)?;
                }
                return Ok(());
            }
        }
        let mut any = false;
        for t in 0..st.status.len() {
            if let Some(n) = self.enabled(&st, t) {
                any = true;
                for (next, p) in self.step(&st, &path, t, n) {
                    self.explore(next, p)?;
                }
            }
        }
        if !any {
            if self.out.records.len() >= self.bounds.max_executions {
                return Err(OracleError::OracleBudgetExceeded {
                    cap: self.bounds.max_executions,
                });
            }
            self.out.records.push(ExecutionRecord {
                interleaving: path.interleaving,
                read_map: path.read_map,
                violated: path.violated,
                final_values: st.values,
            });
        }
        Ok(())
    }
}

/// Every execution of `model` within `bounds`, or one per distinct final
/// configuration when `merge_states` is set.
pub fn enumerate(model: &ProgramModel, bounds: &OracleBounds) -> Result<Exploration, OracleError> {
    let mut ex = Explorer {
        model,
        bounds,
        out: Exploration {
            records: Vec::new(),
            visited: vec![BTreeSet::new(); model.nodes.len()],
        },
        seen: BTreeSet::new(),
    };
    let path = Path {
        interleaving: Vec::new(),
        read_map: BTreeMap::new(),
        violated: BTreeSet::new(),
    };
    ex.explore(initial_state(model), path)?;
    Ok(ex.out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SoundnessViolation {
    /// A concrete value escapes the abstract value at a node.
    State {
        node: NodeId,
        var: Option<VarId>,
        value: i64,
        abstract_value: Interval,
    },
    /// An assertion reported verified fails concretely.
    Verdict { node: NodeId },
    /// A rejected combination's reads are realized by an execution.
    Feasibility { reads_from: Vec<Tuple> },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SoundnessReport {
    pub violations: Vec<SoundnessViolation>,
    pub states_checked: usize,
}

impl SoundnessReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compares an analysis result with the concrete executions of the same model.
///
/// Locals are checked against the node's environment. A global is checked
/// against the thread's view joined with every published value of it, as that
/// is what a load at the node may observe. Nodes analyzed with the identity
/// transfer are skipped, and at on-slice nodes only the variables the
/// statement reads are checked.
pub fn check_abstraction(model: &ProgramModel, exploration: &Exploration, result: &AnalysisResult) -> SoundnessReport {
    let mut report = SoundnessReport::default();
    let mut published: BTreeMap<VarId, Interval> = BTreeMap::new();
    for s in result.interference.envs.keys() {
        let v = model.stmt(*s).stored_var().expect("store");
        let e = published.entry(v).or_insert(Interval::EMPTY);
        *e = e.join(&result.interference.value(model, *s));
    }
    for node in &model.nodes {
        let states = &exploration.visited[node.id.index()];
        if states.is_empty() {
            continue;
        }
        let env = result.env(node.id);
        let vars: Vec<VarId> = match &result.pruned {
            Some(p) if p.contains(node.id.index()) => continue,
            Some(_) => {
                let mut v = node.stmt.uses();
                v.extend(node.stmt.loaded_var());
                v
            }
            None => {
                let mut v = model.thread(node.thread).locals.clone();
                v.extend(model.globals.iter().copied());
                v
            }
        };
        for values in states {
            report.states_checked += 1;
            if env.is_bottom() {
                report.violations.push(SoundnessViolation::State {
                    node: node.id,
                    var: None,
                    value: 0,
                    abstract_value: Interval::EMPTY,
                });
                break;
            }
            for v in &vars {
                let mut allowed = env.get(*v);
                if model.is_global(*v) {
                    allowed = allowed.join(published.get(v).unwrap_or(&Interval::EMPTY));
                }
                let value = values[v.index()];
                if !allowed.contains(value) {
                    report.violations.push(SoundnessViolation::State {
                        node: node.id,
                        var: Some(*v),
                        value,
                        abstract_value: allowed,
                    });
                }
            }
        }
    }
    let violated = exploration.violated_assertions();
    for v in &result.verdicts {
        if v.verdict == Verdict::Verified && violated.contains(&v.assertion.node) {
            report
                .violations
                .push(SoundnessViolation::Verdict { node: v.assertion.node });
        }
    }
    let realized: Vec<BTreeSet<Tuple>> = exploration.records.iter().map(ExecutionRecord::reads_from).collect();
    for key in &result.rejected_reads {
        if realized.iter().any(|r| key.iter().all(|t| r.contains(t))) {
            report.violations.push(SoundnessViolation::Feasibility {
                reads_from: key.clone(),
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load;
    use crate::tm::analyze;
    use crate::{AnalysisConfig, Mode};

    const FLAG_HANDOFF: &str = "bool flag = false;
int x = 0;
thread thread1() {
  x = 4;
  x = 5;
  flag = true;
}
thread thread2() {
  bool b1 = flag;
  if (b1) {
    int t1 = x;
    if (t1 != 5) {
      error;
} } }
thread main() { create(thread1); create(thread2); }
";

    fn var(m: &ProgramModel, name: &str) -> VarId {
        m.vars.iter().find(|v| v.name == name).unwrap().id
    }

    #[test]
    fn increment_race_has_two_outcomes() {
        let m = load(
            "int x = 0; thread a() { x = x + 1; } thread b() { int tmp = x; } thread main() { create(a); create(b); }",
        )
        .unwrap();
        let ex = enumerate(&m, &OracleBounds::default()).unwrap();
        assert_eq!(ex.final_values_of(var(&m, "tmp")), BTreeSet::from([0, 1]));
    }

    #[test]
    fn deterministic_program_has_one_execution() {
        let m = load("int x = 0; thread main() { x = 3; int t = x; assert(t == 3); }").unwrap();
        let bounds = OracleBounds {
            granularity: Granularity::Full,
            merge_states: false,
            ..OracleBounds::default()
        };
        let ex = enumerate(&m, &bounds).unwrap();
        assert_eq!(ex.records.len(), 1);
        assert!(ex.violated_assertions().is_empty());
    }

    #[test]
    fn flag_handoff_error_unreachable_and_stale_read_impossible() {
        let m = load(FLAG_HANDOFF).unwrap();
        let ex = enumerate(&m, &OracleBounds::default()).unwrap();
        assert!(ex.violated_assertions().is_empty());
        let n = |s: &str| m.node_by_name(s).unwrap().0;
        assert!(ex.records.iter().all(|r| {
            let rf = r.reads_from();
            !(rf.contains(&(n("t2.9"), n("t1.6"))) && rf.contains(&(n("t2.11"), n("t1.4"))))
        }));
        let r = analyze(&m, &AnalysisConfig::with_mode(Mode::Constrained)).unwrap();
        let report = check_abstraction(&m, &ex, &r);
        assert!(report.is_clean(), "{:?}", report.violations);
        assert!(report.states_checked > 0);
    }

    #[test]
    fn trivially_true_assertion() {
        let m = load("thread main() { assert(0 == 0); }").unwrap();
        let ex = enumerate(&m, &OracleBounds::default()).unwrap();
        for mode in Mode::ALL {
            let r = analyze(&m, &AnalysisConfig::with_mode(mode)).unwrap();
            assert!(r.all_verified());
            assert!(check_abstraction(&m, &ex, &r).is_clean());
        }
    }

    #[test]
    fn budget_is_enforced() {
        let m = load(FLAG_HANDOFF).unwrap();
        let bounds = OracleBounds {
            max_executions: 2,
            granularity: Granularity::Full,
            merge_states: false,
            ..OracleBounds::default()
        };
        assert_eq!(
            enumerate(&m, &bounds),
            Err(OracleError::OracleBudgetExceeded { cap: 2 })
        );
    }

    #[test]
    fn read_map_sources_wrote_observed_value() {
        let m = load(FLAG_HANDOFF).unwrap();
        let ex = enumerate(&m, &OracleBounds::default()).unwrap();
        let x = m.global_by_name("x").unwrap();
        let t1 = var(&m, "t1");
        let l = m.node_by_name("t2.11").unwrap();
        for r in &ex.records {
            if let Some(src) = r.read_map.get(&(l, 0)) {
                let wrote = if *src == init_store(&m, x) {
                    0
                } else {
                    match model_store_value(&m, NodeId(*src)) {
                        Some(v) => v,
                        None => continue,
                    }
                };
                assert_eq!(r.final_values[t1.index()], wrote);
            }
        }
    }

    fn model_store_value(m: &ProgramModel, s: NodeId) -> Option<i64> {
        match m.stmt(s) {
            Stmt::Store {
                expr: Expr::Const(c), ..
            } => Some(*c),
            _ => None,
        }
    }
}
