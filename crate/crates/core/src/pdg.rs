//! Program dependence graph, assertion slices and load clusters.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;
use fixedbitset::FixedBitSet;

use crate::frontend::{NodeId, ProgramModel, Stmt, ThreadId};
use crate::graph::LocalGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DepKind {
    Control,
    Data,
}

impl DepKind {
    pub fn label(self) -> &'static str {
        match self {
            DepKind::Control => "cd",
            DepKind::Data => "dd",
        }
    }
}

/// Edges run from the node depended upon to the dependent node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependenceGraph {
    pub edges: BTreeSet<(NodeId, NodeId, DepKind)>,
    preds: Vec<Vec<NodeId>>,
}

impl DependenceGraph {
    pub fn build(model: &ProgramModel) -> DependenceGraph {
        let mut edges = BTreeSet::new();
        for t in &model.threads {
            control_dependences(model, t.id, &mut edges);
            local_data_dependences(model, t.id, &mut edges);
        }
        for s in model.all_stores() {
            let v = model.stmt(s).stored_var();
            for l in model.nodes.iter().filter(|n| n.stmt.loaded_var() == v) {
                edges.insert((s, l.id, DepKind::Data));
            }
        }
        let mut preds = vec![Vec::new(); model.nodes.len()];
        for (a, b, _) in &edges {
            if !preds[b.index()].contains(a) {
                preds[b.index()].push(*a);
            }
        }
        DependenceGraph { edges, preds }
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId, kind: DepKind) -> bool {
        self.edges.contains(&(a, b, kind))
    }

    /// Nodes `n` depends on.
    pub fn dependencies(&self, n: NodeId) -> &[NodeId] {
        &self.preds[n.index()]
    }

    /// DOT rendering; nodes outside `slice` are dotted.
    pub fn to_dot(&self, model: &ProgramModel, slice: Option<&SlicePlan>) -> String {
        let mut out = String::from("digraph pdg {\n");
        for node in &model.nodes {
            let style = match slice {
                Some(s) if !s.on_slice(node.id) => ", style=dotted",
                _ => "",
            };
            let _ = writeln!(
                out,
                "  \"{}\" [label=\"{}: {}\"{}];",
                node.name,
                node.name,
                model.display_stmt(&node.stmt),
                style
            );
        }
        for (a, b, k) in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                model.node_name(*a),
                model.node_name(*b),
                k.label()
            );
        }
        out.push_str("}\n");
        out
    }
}

fn control_dependences(model: &ProgramModel, t: ThreadId, edges: &mut BTreeSet<(NodeId, NodeId, DepKind)>) {
    let g = LocalGraph::of_thread(model, model.thread(t));
    let ipdom = g.reversed().idoms();
    for a in 0..g.len() {
        if g.succs[a].len() < 2 {
            continue;
        }
        for &b in &g.succs[a] {
            let stop = ipdom[a];
            let mut cur = Some(b);
            while let Some(c) = cur {
                if Some(c) == stop {
                    break;
                }
                edges.insert((g.node(a), g.node(c), DepKind::Control));
                cur = ipdom[c];
            }
        }
    }
}

fn local_data_dependences(model: &ProgramModel, t: ThreadId, edges: &mut BTreeSet<(NodeId, NodeId, DepKind)>) {
    let thread = model.thread(t);
    for n in thread.node_ids() {
        for v in model.stmt(n).uses() {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<NodeId> = model.preds(n).to_vec();
            while let Some(p) = stack.pop() {
                if !seen.insert(p) {
                    continue;
                }
                if model.stmt(p).def() == Some(v) {
                    edges.insert((p, n, DepKind::Data));
                } else {
                    stack.extend_from_slice(model.preds(p));
                }
            }
        }
    }
}

/// Backward slices of every assertion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlicePlan {
    pub per_assertion: Vec<(NodeId, FixedBitSet)>,
    pub union: FixedBitSet,
}

impl SlicePlan {
    pub fn build(pdg: &DependenceGraph, model: &ProgramModel) -> SlicePlan {
        let n = model.nodes.len();
        let mut union = FixedBitSet::with_capacity(n);
        let mut per_assertion = Vec::new();
        for a in &model.assertions {
            let mut set = FixedBitSet::with_capacity(n);
            let mut stack = vec![a.node];
            while let Some(x) = stack.pop() {
                if set.put(x.index()) {
                    continue;
                }
                stack.extend_from_slice(pdg.dependencies(x));
            }
            union.union_with(&set);
            per_assertion.push((a.node, set));
        }
        SlicePlan { per_assertion, union }
    }

    pub fn on_slice(&self, n: NodeId) -> bool {
        self.union.contains(n.index())
    }

    pub fn slice_of(&self, assertion: NodeId) -> Option<&FixedBitSet> {
        self.per_assertion.iter().find(|(a, _)| *a == assertion).map(|(_, s)| s)
    }

    /// Nodes whose transfer becomes the identity.
    pub fn pruned(&self) -> FixedBitSet {
        let mut p = self.union.clone();
        p.toggle_range(..);
        p
    }
}

/// Partition of on-slice loads into independently combinable groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterPlan {
    /// Component id of each on-slice node.
    pub component: Vec<Option<u32>>,
    /// Per thread, its on-slice loads grouped by component.
    pub per_thread: Vec<Vec<Vec<NodeId>>>,
    pub count: usize,
}

impl ClusterPlan {
    pub fn build(model: &ProgramModel, pdg: &DependenceGraph, slices: &SlicePlan) -> ClusterPlan {
        let n = model.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for (a, b, _) in &pdg.edges {
            if slices.on_slice(*a) && slices.on_slice(*b) {
                adj[a.index()].push(b.index());
                adj[b.index()].push(a.index());
            }
        }
        let mut component = vec![None; n];
        let mut count = 0u32;
        for start in 0..n {
            if component[start].is_some() || !slices.union.contains(start) {
                continue;
            }
            let mut stack = vec![start];
            component[start] = Some(count);
            while let Some(x) = stack.pop() {
                for &y in &adj[x] {
                    if component[y].is_none() {
                        component[y] = Some(count);
                        stack.push(y);
                    }
                }
            }
            count += 1;
        }
        let per_thread = model
            .threads
            .iter()
            .map(|t| {
                let mut groups: Vec<(u32, Vec<NodeId>)> = Vec::new();
                for l in model.loads_of(t.id) {
                    let Some(c) = component[l.index()] else {
                        continue;
                    };
                    match groups.iter_mut().find(|(k, _)| *k == c) {
                        Some((_, g)) => g.push(l),
                        None => groups.push((c, vec![l])),
                    }
                }
                groups.into_iter().map(|(_, g)| g).collect()
            })
            .collect();
        let used: BTreeSet<u32> = model
            .nodes
            .iter()
            .filter(|n| matches!(n.stmt, Stmt::Load { .. }))
            .filter_map(|n| component[n.id.index()])
            .collect();
        ClusterPlan {
            component,
            per_thread,
            count: used.len(),
        }
    }

    pub fn clusters_of(&self, t: ThreadId) -> &[Vec<NodeId>] {
        &self.per_thread[t.index()]
    }
}
