//! Happens-before reasoning over interference combinations.
//!
//! Node ids of the model double as fact constants. Each global `v` also gets
//! a virtual initializing store `init.v`, numbered after the real nodes and
//! ordered before the entry thread.

pub mod datalog;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;
use fixedbitset::FixedBitSet;

pub use datalog::{DenseFacts, FactView, Overlay, Rel, Rule, SparseFacts, Tuple};

use crate::frontend::{NodeId, ProgramModel, Stmt, VarId};
use crate::graph::LocalGraph;
use crate::seq::{Combination, Source};

/// Base relations of a model closed under the combination-independent rules.
#[derive(Clone, Debug)]
pub struct FactBase {
    facts: DenseFacts,
    real_nodes: u32,
    globals: Vec<VarId>,
    rules: Vec<Rule>,
    /// Unique thread-local source of each load, if any.
    self_source: Vec<Option<u32>>,
    /// Same-thread nodes that never run before any instance of `a`.
    later: Vec<FixedBitSet>,
    /// Strict dominators per node, kept for the closure cross-check.
    dominators: Vec<FixedBitSet>,
    /// Same-thread nodes reachable by a nonempty path.
    reach: Vec<FixedBitSet>,
}

/// Upper bound on the chains examined per combination.
const CHAIN_CAP: usize = 64;

/// One store per global that holds its initial value.
pub fn init_store(model: &ProgramModel, g: VarId) -> u32 {
    let pos = model.globals.iter().position(|x| *x == g).expect("global");
    model.nodes.len() as u32 + pos as u32
}

impl FactBase {
    pub fn build(model: &ProgramModel) -> FactBase {
        let n = model.nodes.len();
        let dim = n + model.globals.len();
        let mut facts = DenseFacts::new(dim.max(model.vars.len()));
        let mut program_order = vec![FixedBitSet::with_capacity(facts.dim()); facts.dim()];
        let mut dominators = vec![FixedBitSet::with_capacity(facts.dim()); n];
        let mut later = vec![FixedBitSet::with_capacity(facts.dim()); n];
        let mut reach_nodes = vec![FixedBitSet::with_capacity(n); n];
        for t in &model.threads {
            let g = LocalGraph::of_thread(model, t);
            let dom = g.strict_dominators();
            let reach = g.reachability();
            for i in 0..g.len() {
                let ni = g.node(i).index();
                for j in reach[i].ones() {
                    reach_nodes[ni].insert(g.node(j).index());
                }
                for j in 0..g.len() {
                    let nj = g.node(j).0;
                    // NotReachableFrom(i, j): no nonempty path j -> i.
                    if !reach[j].contains(i) {
                        facts.insert(Rel::NotReachableFrom, (ni as u32, nj));
                        if i != j {
                            later[ni].insert(nj as usize);
                        }
                        if dom[j].contains(i) {
                            program_order[ni].insert(nj as usize);
                        }
                    }
                    if dom[j].contains(i) {
                        facts.insert(Rel::Dominates, (ni as u32, nj));
                        dominators[nj as usize].insert(ni);
                    }
                }
            }
        }
        let mut edges = program_order;
        for (site, child) in &model.creates {
            let entry = model.thread(*child).entry;
            facts.insert(Rel::ThCreates, (site.0, entry.0));
            edges[site.index()].insert(entry.index());
        }
        for (site, child) in &model.joins {
            let exit = model.thread(*child).exit;
            facts.insert(Rel::ThJoins, (site.0, exit.0));
            edges[exit.index()].insert(site.index());
        }
        let main_entry = model.entry_thread().entry;
        for g in &model.globals {
            let s = init_store(model, *g);
            facts.insert(Rel::IsStore, (s, g.0));
            facts.insert(Rel::Once, (s, 0));
            facts.insert(Rel::ThCreates, (s, main_entry.0));
            edges[s as usize].insert(main_entry.index());
        }
        for node in &model.nodes {
            match &node.stmt {
                Stmt::Load { global, .. } => {
                    facts.insert(Rel::IsLoad, (node.id.0, global.0));
                }
                Stmt::Store { global, .. } => {
                    facts.insert(Rel::IsStore, (node.id.0, global.0));
                }
                _ => {}
            }
        }
        for t in &model.threads {
            let cyc = LocalGraph::of_thread(model, t).on_cycle();
            for n in t.node_ids() {
                if matches!(model.stmt(n), Stmt::Store { .. }) && !cyc.contains(t.local_index(n)) {
                    facts.insert(Rel::Once, (n.0, 0));
                }
            }
        }
        let mhb = transitive_closure(edges);
        facts.set_rows(Rel::Mhb, mhb.clone());
        facts.set_rows(Rel::MustNotReadFrom, mhb);
        let mut base = FactBase {
            facts,
            real_nodes: n as u32,
            globals: model.globals.clone(),
            rules: datalog::rules(),
            self_source: vec![None; n],
            later,
            dominators,
            reach: reach_nodes,
        };
        let mut memo = SourceMemo::default();
        for node in &model.nodes {
            if let Stmt::Load { global, .. } = node.stmt {
                let srcs = memo.sources_before(model, node.id, global);
                if srcs.len() == 1 {
                    base.self_source[node.id.index()] = srcs.first().copied();
                }
            }
        }
        base
    }

    pub fn facts(&self) -> &DenseFacts {
        &self.facts
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn is_init_store(&self, s: u32) -> bool {
        s >= self.real_nodes
    }

    pub fn self_source(&self, load: NodeId) -> Option<u32> {
        self.self_source[load.index()]
    }

    /// `ReadsFrom` facts a combination asserts.
    pub fn reads_from(&self, combo: &Combination) -> Vec<Tuple> {
        let mut out: Vec<Tuple> = combo
            .entries
            .iter()
            .filter_map(|(l, src)| match src {
                Source::Remote { store, .. } => Some((l.0, store.0)),
                Source::SelfDummy => self.self_source(*l).map(|s| (l.0, s)),
                Source::LoopMerged { .. } => None,
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Facts derived from `reads_from` on top of the base, which is left untouched.
    pub fn derive(&self, reads_from: &[Tuple]) -> SparseFacts {
        let mut seed = SparseFacts::default();
        for t in reads_from {
            seed.insert(Rel::ReadsFrom, *t);
        }
        let mut ov = Overlay {
            base: &self.facts,
            local: SparseFacts::default(),
        };
        datalog::evaluate(&mut ov, &self.rules, seed);
        ov.local
    }

    pub fn contradiction(&self, local: &SparseFacts) -> bool {
        let ov = Overlay {
            base: &self.facts,
            local: local.clone(),
        };
        local
            .tuples(Rel::ReadsFrom)
            .any(|t| ov.contains(Rel::MustNotReadFrom, t))
            || local.tuples(Rel::Mhb).any(|(a, b)| a == b)
    }

    pub fn check(&self, reads_from: &[Tuple]) -> bool {
        !self.contradiction(&self.derive(reads_from))
    }

    /// Same answer as [`FactBase::check`], computed on MHB rows: the closed
    /// base plus overwrite edges, kept transitively closed as they are added.
    pub fn consistent(&self, reads_from: &[Tuple]) -> bool {
        let base = &self.facts;
        let mut rows: Vec<Option<FixedBitSet>> = vec![None; base.dim()];
        let row = |rows: &[Option<FixedBitSet>], x: usize| -> FixedBitSet {
            rows[x].clone().unwrap_or_else(|| base.row(Rel::Mhb, x as u32).clone())
        };
        let var_of = |rel: Rel, x: u32| -> Vec<u32> { base.row(rel, x).ones().map(|v| v as u32).collect() };
        let stores_of = |v: u32| -> Vec<usize> {
            let mut out = Vec::new();
            base.for_second(Rel::IsStore, v, &mut |s| out.push(s as usize));
            out
        };
        let mhb = |rows: &[Option<FixedBitSet>], a: usize, b: usize| match &rows[a] {
            Some(r) => r.contains(b),
            None => base.row(Rel::Mhb, a as u32).contains(b),
        };
        // (load, store, variable) triples the overwrite rule can use.
        let mut overwrite: Vec<(usize, usize, u32)> = Vec::new();
        for &(l, s1) in reads_from {
            for v in var_of(Rel::IsLoad, l) {
                if base.contains(Rel::IsStore, (s1, v)) {
                    overwrite.push((l as usize, s1 as usize, v));
                }
            }
        }
        let mut changed = true;
        while changed {
            changed = false;
            for &(l, s1, v) in &overwrite {
                for s2 in stores_of(v) {
                    if !mhb(&rows, s1, s2) || mhb(&rows, l, s2) {
                        continue;
                    }
                    changed = true;
                    let mut add = row(&rows, s2);
                    add.insert(s2);
                    for x in 0..base.dim() {
                        if x == l || mhb(&rows, x, l) {
                            let mut r = row(&rows, x);
                            r.union_with(&add);
                            rows[x] = Some(r);
                        }
                    }
                }
            }
        }
        if rows
            .iter()
            .enumerate()
            .any(|(x, r)| r.as_ref().is_some_and(|r| r.contains(x)))
        {
            return false;
        }
        for &(l2, s) in reads_from {
            if mhb(&rows, l2 as usize, s as usize) {
                return false;
            }
        }
        for &(l, s1) in reads_from {
            if !base.contains(Rel::Once, (s1, 0)) {
                continue;
            }
            for v in var_of(Rel::IsLoad, l) {
                for &(l2, s) in reads_from {
                    if s != s1 || !base.contains(Rel::IsLoad, (l2, v)) {
                        continue;
                    }
                    if stores_of(v)
                        .into_iter()
                        .any(|s2| mhb(&rows, l as usize, s2) && mhb(&rows, s2, l2 as usize))
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn is_feasible(&self, combo: &Combination) -> bool {
        let mut memo = alloc::collections::BTreeMap::new();
        self.refuting_chain(&self.reads_from(combo), &mut memo).is_none()
    }

    /// Loads `a` and `b` may both execute in one run of their thread.
    pub fn co_executable(&self, a: NodeId, b: NodeId) -> bool {
        a == b || self.reach[a.index()].contains(b.index()) || self.reach[b.index()].contains(a.index())
    }

    /// Maximal sets of pairwise co-executable loads among those `reads_from`
    /// constrains, each with its facts; `None` past the chain cap.
    pub fn chains(&self, reads_from: &[Tuple]) -> Option<Vec<Vec<Tuple>>> {
        let loads: Vec<u32> = {
            let mut l: Vec<u32> = reads_from.iter().map(|t| t.0).collect();
            l.dedup();
            l
        };
        let co = |a: u32, b: u32| self.co_executable(NodeId(a), NodeId(b));
        if loads.iter().all(|a| loads.iter().all(|b| co(*a, *b))) {
            return Some(vec![reads_from.to_vec()]);
        }
        let mut out: Vec<Vec<u32>> = Vec::new();
        let mut stack: Vec<(Vec<u32>, Vec<u32>, Vec<u32>)> = vec![(Vec::new(), loads.clone(), Vec::new())];
        while let Some((clique, cand, excl)) = stack.pop() {
            if cand.is_empty() {
                if excl.is_empty() {
                    if out.len() == CHAIN_CAP {
                        return None;
                    }
                    out.push(clique);
                }
                continue;
            }
            let (mut cand, mut excl) = (cand, excl);
            while let Some(v) = cand.pop() {
                let mut c = clique.clone();
                c.push(v);
                stack.push((
                    c,
                    cand.iter().copied().filter(|u| co(*u, v)).collect(),
                    excl.iter().copied().filter(|u| co(*u, v)).collect(),
                ));
                excl.push(v);
            }
        }
        Some(
            out.into_iter()
                .map(|chain| reads_from.iter().copied().filter(|t| chain.contains(&t.0)).collect())
                .collect(),
        )
    }

    /// A set of co-executable reads whose facts are contradictory, if any.
    pub fn refuting_chain(
        &self,
        reads_from: &[Tuple],
        memo: &mut alloc::collections::BTreeMap<Vec<Tuple>, bool>,
    ) -> Option<Vec<Tuple>> {
        for chain in self.chains(reads_from)? {
            let ok = match memo.get(&chain) {
                Some(v) => *v,
                None => {
                    let v = self.consistent(&chain);
                    memo.insert(chain.clone(), v);
                    v
                }
            };
            if !ok {
                return Some(chain);
            }
        }
        None
    }

    /// Every instance of `a` precedes every instance of `b` in any
    /// execution where both run.
    pub fn must_happen_before(&self, a: NodeId, b: NodeId) -> bool {
        if a == b {
            return false;
        }
        let mhb = |x: usize, y: usize| self.facts.row(Rel::Mhb, x as u32).contains(y);
        mhb(a.index(), b.index())
            || self.later[a.index()]
                .ones()
                .any(|m| m == b.index() || mhb(m, b.index()))
    }

    fn node_label(&self, model: &ProgramModel, x: u32) -> String {
        if x >= self.real_nodes {
            let g = self.globals[(x - self.real_nodes) as usize];
            alloc::format!("init.{}", model.var_name(g))
        } else {
            String::from(model.node_name(NodeId(x)))
        }
    }

    fn fact_line(&self, model: &ProgramModel, rel: Rel, (a, b): Tuple) -> String {
        match rel {
            Rel::Once => alloc::format!("{rel}({})", self.node_label(model, a)),
            Rel::IsLoad | Rel::IsStore => {
                alloc::format!("{rel}({}, {})", self.node_label(model, a), model.var_name(VarId(b)))
            }
            _ => alloc::format!("{rel}({}, {})", self.node_label(model, a), self.node_label(model, b)),
        }
    }

    /// One `REL(a, b)` line per fact of the base plus `extra`, sorted.
    pub fn dump(&self, model: &ProgramModel, extra: Option<&SparseFacts>) -> String {
        let mut lines: BTreeSet<(Rel, String)> = BTreeSet::new();
        for rel in Rel::ALL {
            for t in self.facts.tuples(rel) {
                lines.insert((rel, self.fact_line(model, rel, t)));
            }
            if let Some(x) = extra {
                for t in x.tuples(rel) {
                    lines.insert((rel, self.fact_line(model, rel, t)));
                }
            }
        }
        let mut out = String::new();
        for (_, l) in lines {
            let _ = writeln!(out, "{l}");
        }
        out
    }

    /// Strict dominators of `n` (as fact constants).
    pub fn dominators_of(&self, n: NodeId) -> &FixedBitSet {
        &self.dominators[n.index()]
    }
}

/// Reflexive-free transitive closure of a successor-row matrix.
fn transitive_closure(mut rows: Vec<FixedBitSet>) -> Vec<FixedBitSet> {
    for k in 0..rows.len() {
        if rows.iter().all(|r| !r.contains(k)) {
            continue;
        }
        let row_k = rows[k].clone();
        for row in rows.iter_mut() {
            if row.contains(k) {
                row.union_with(&row_k);
            }
        }
    }
    rows
}

#[derive(Default)]
struct SourceMemo {
    inherited: alloc::collections::BTreeMap<(u32, u32), Vec<u32>>,
}

impl SourceMemo {
    /// Stores whose value may be the thread-local view of `g` just before `n`.
    fn sources_before(&mut self, model: &ProgramModel, n: NodeId, g: VarId) -> Vec<u32> {
        let t = model.thread(model.thread_of(n));
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack: Vec<NodeId> = model.preds(n).to_vec();
        let mut reaches_entry = n == t.entry;
        while let Some(p) = stack.pop() {
            if !seen.insert(p) {
                continue;
            }
            match model.stmt(p) {
                Stmt::Store { global, .. } if *global == g => {
                    out.insert(p.0);
                    continue;
                }
                _ => {}
            }
            if p == t.entry {
                reaches_entry = true;
            }
            stack.extend_from_slice(model.preds(p));
        }
        if reaches_entry {
            out.extend(self.inherited(model, t.creator, g));
        }
        out.into_iter().collect()
    }

    fn inherited(&mut self, model: &ProgramModel, creator: Option<NodeId>, g: VarId) -> Vec<u32> {
        let Some(site) = creator else {
            return vec![init_store(model, g)];
        };
        if let Some(v) = self.inherited.get(&(site.0, g.0)) {
            return v.clone();
        }
        let v = self.sources_before(model, site, g);
        self.inherited.insert((site.0, g.0), v.clone());
        v
    }
}
