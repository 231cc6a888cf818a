//! Normalized statement IR, per-thread control-flow graphs and the program model.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use super::ast::{BinOp, ScalarType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThreadId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ThreadId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Expressions over locals and constants only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Const(i64),
    Var(VarId),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn vars(&self, out: &mut Vec<VarId>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Expr::Binary(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Expr::Not(a) => a.vars(out),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    LocalAssign {
        dst: VarId,
        expr: Expr,
    },
    Load {
        dst: VarId,
        global: VarId,
    },
    Store {
        global: VarId,
        expr: Expr,
    },
    /// Successors: `[then, else]`.
    Branch {
        cond: Expr,
    },
    Assert {
        cond: Expr,
    },
    Create {
        routine: String,
        args: Vec<i64>,
        child: ThreadId,
    },
    Join {
        routine: String,
        child: ThreadId,
    },
    Nondet {
        dst: VarId,
    },
    /// Placeholder entry for threads whose body starts at a loop head.
    Skip,
    Exit,
}

impl Stmt {
    /// Locals read by the statement.
    pub fn uses(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        match self {
            Stmt::LocalAssign { expr, .. }
            | Stmt::Store { expr, .. }
            | Stmt::Branch { cond: expr }
            | Stmt::Assert { cond: expr } => expr.vars(&mut out),
            _ => {}
        }
        out
    }

    /// Local written by the statement.
    pub fn def(&self) -> Option<VarId> {
        match self {
            Stmt::LocalAssign { dst, .. } | Stmt::Load { dst, .. } | Stmt::Nondet { dst } => Some(*dst),
            _ => None,
        }
    }

    pub fn global_access(&self) -> Option<VarId> {
        match self {
            Stmt::Load { global, .. } | Stmt::Store { global, .. } => Some(*global),
            _ => None,
        }
    }

    pub fn loaded_var(&self) -> Option<VarId> {
        match self {
            Stmt::Load { global, .. } => Some(*global),
            _ => None,
        }
    }

    pub fn stored_var(&self) -> Option<VarId> {
        match self {
            Stmt::Store { global, .. } => Some(*global),
            _ => None,
        }
    }

    pub fn is_branch(&self) -> bool {
        matches!(self, Stmt::Branch { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub thread: ThreadId,
    pub line: u32,
    /// Stable name `t<thread>.<line>[.<k>]`, `t<thread>.entry` or `t<thread>.exit`.
    pub name: String,
    pub stmt: Stmt,
    pub succs: Vec<NodeId>,
    pub preds: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarScope {
    Global,
    Local(ThreadId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub ty: ScalarType,
    pub scope: VarScope,
    /// Declared initializer (globals only).
    pub init: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreadCfg {
    pub id: ThreadId,
    pub routine: String,
    /// Constant arguments bound to the routine parameters.
    pub args: Vec<i64>,
    pub nodes: Range<u32>,
    pub entry: NodeId,
    pub exit: NodeId,
    /// Node in the parent thread that creates this instance.
    pub creator: Option<NodeId>,
    pub locals: Vec<VarId>,
}

impl ThreadCfg {
    pub fn node_ids(&self) -> impl DoubleEndedIterator<Item = NodeId> + ExactSizeIterator + Clone {
        self.nodes.clone().map(NodeId)
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.contains(&n.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Position of `n` within this thread.
    pub fn local_index(&self, n: NodeId) -> usize {
        (n.0 - self.nodes.start) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Assertion {
    pub node: NodeId,
    pub thread: ThreadId,
    pub line: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramModel {
    pub threads: Vec<ThreadCfg>,
    pub nodes: Vec<Node>,
    pub vars: Vec<Variable>,
    pub globals: Vec<VarId>,
    /// `(create site, child thread)`.
    pub creates: Vec<(NodeId, ThreadId)>,
    /// `(join site, child thread)`.
    pub joins: Vec<(NodeId, ThreadId)>,
    pub assertions: Vec<Assertion>,
}

impl ProgramModel {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn stmt(&self, id: NodeId) -> &Stmt {
        &self.nodes[id.index()].stmt
    }

    pub fn succs(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.index()].succs
    }

    pub fn preds(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.index()].preds
    }

    pub fn thread(&self, id: ThreadId) -> &ThreadCfg {
        &self.threads[id.index()]
    }

    pub fn thread_of(&self, n: NodeId) -> ThreadId {
        self.nodes[n.index()].thread
    }

    pub fn entry_thread(&self) -> &ThreadCfg {
        &self.threads[0]
    }

    pub fn var(&self, v: VarId) -> &Variable {
        &self.vars[v.index()]
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v.index()].name
    }

    pub fn is_global(&self, v: VarId) -> bool {
        matches!(self.vars[v.index()].scope, VarScope::Global)
    }

    pub fn global_by_name(&self, name: &str) -> Option<VarId> {
        self.globals.iter().copied().find(|g| self.vars[g.index()].name == name)
    }

    pub fn node_name(&self, n: NodeId) -> &str {
        &self.nodes[n.index()].name
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.name == name).map(|n| n.id)
    }

    /// Load nodes of `g` in node-id order.
    pub fn loads_of(&self, g: ThreadId) -> Vec<NodeId> {
        self.thread(g)
            .node_ids()
            .filter(|n| matches!(self.stmt(*n), Stmt::Load { .. }))
            .collect()
    }

    pub fn stores_of(&self, g: ThreadId) -> Vec<NodeId> {
        self.thread(g)
            .node_ids()
            .filter(|n| matches!(self.stmt(*n), Stmt::Store { .. }))
            .collect()
    }

    pub fn all_stores(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .filter(|n| matches!(n.stmt, Stmt::Store { .. }))
            .map(|n| n.id)
    }

    pub fn assertion_at(&self, n: NodeId) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.node == n)
    }

    /// Program-wide edge list.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes.iter().flat_map(|n| n.succs.iter().map(move |s| (n.id, *s)))
    }

    /// Human-readable listing of every thread's normalized IR.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in &self.threads {
            out.push_str(&alloc::format!("thread t{} {}{:?}\n", t.id.0, t.routine, t.args));
            for n in t.node_ids() {
                let node = self.node(n);
                let succ: Vec<&str> = node.succs.iter().map(|s| self.node_name(*s)).collect();
                out.push_str(&alloc::format!(
                    "  {}: {} -> [{}]\n",
                    node.name,
                    DisplayStmt(self, &node.stmt),
                    succ.join(", ")
                ));
            }
        }
        out
    }

    pub fn display_expr<'a>(&'a self, e: &'a Expr) -> impl fmt::Display + 'a {
        DisplayExpr(self, e)
    }

    pub fn display_stmt<'a>(&'a self, s: &'a Stmt) -> impl fmt::Display + 'a {
        DisplayStmt(self, s)
    }
}

struct DisplayExpr<'a>(&'a ProgramModel, &'a Expr);

impl fmt::Display for DisplayExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.0;
        match self.1 {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => f.write_str(m.var_name(*v)),
            Expr::Binary(op, a, b) => write!(f, "({} {} {})", DisplayExpr(m, a), op.symbol(), DisplayExpr(m, b)),
            Expr::Not(a) => write!(f, "!{}", DisplayExpr(m, a)),
        }
    }
}

struct DisplayStmt<'a>(&'a ProgramModel, &'a Stmt);

impl fmt::Display for DisplayStmt<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.0;
        match self.1 {
            Stmt::LocalAssign { dst, expr } => {
                write!(f, "{} = {}", m.var_name(*dst), DisplayExpr(m, expr))
            }
            Stmt::Load { dst, global } => {
                write!(f, "{} = load {}", m.var_name(*dst), m.var_name(*global))
            }
            Stmt::Store { global, expr } => {
                write!(f, "store {} = {}", m.var_name(*global), DisplayExpr(m, expr))
            }
            Stmt::Branch { cond } => write!(f, "branch {}", DisplayExpr(m, cond)),
            Stmt::Assert { cond } => write!(f, "assert {}", DisplayExpr(m, cond)),
            Stmt::Create { routine, child, .. } => write!(f, "create {routine} as t{}", child.0),
            Stmt::Join { routine, child } => write!(f, "join {routine} (t{})", child.0),
            Stmt::Nondet { dst } => write!(f, "{} = nondet", m.var_name(*dst)),
            Stmt::Skip => f.write_str("skip"),
            Stmt::Exit => f.write_str("exit"),
        }
    }
}
