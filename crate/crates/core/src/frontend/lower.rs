//! Lowering of a [`SourceProgram`] into per-thread CFGs over the normalized IR.
//!
//! Every global read becomes its own `Load` into a temporary and every global
//! write is a single `Store`, so no node touches more than one global.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::{self, ScalarType, SourceProgram, StmtKind};
use super::ir::*;
use super::FrontendError;

/// Pending edge `(from, successor slot)` waiting for its target.
type Hole = (NodeId, usize);

struct PendingCreate {
    site: NodeId,
    routine: String,
    args: Vec<i64>,
}

struct ModelBuilder<'a> {
    ast: &'a SourceProgram,
    nodes: Vec<Node>,
    vars: Vec<Variable>,
    globals: BTreeMap<String, VarId>,
    threads: Vec<ThreadCfg>,
    creates: Vec<(NodeId, ThreadId)>,
    joins: Vec<(NodeId, ThreadId)>,
    assertions: Vec<Assertion>,
}

struct ThreadBuilder {
    id: ThreadId,
    locals: BTreeMap<String, VarId>,
    local_list: Vec<VarId>,
    temp_counter: u32,
    pending_creates: Vec<PendingCreate>,
    pending_joins: Vec<(NodeId, String)>,
}

/// Returns true when `routine` (transitively) creates itself.
fn creates_recursively(ast: &SourceProgram) -> Option<String> {
    fn created_by(stmts: &[ast::Stmt], out: &mut Vec<String>) {
        for s in stmts {
            match &s.kind {
                StmtKind::Create { routine, .. } => {
                    if !out.contains(routine) {
                        out.push(routine.clone())
                    }
                }
                StmtKind::If {
                    then_block, else_block, ..
                } => {
                    created_by(then_block, out);
                    if let Some(e) = else_block {
                        created_by(e, out);
                    }
                }
                StmtKind::While { body, .. } => created_by(body, out),
                _ => {}
            }
        }
    }
    let graph: BTreeMap<&str, Vec<String>> = ast
        .routines
        .iter()
        .map(|r| {
            let mut out = Vec::new();
            created_by(&r.body, &mut out);
            (r.name.as_str(), out)
        })
        .collect();
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit<'g>(
        name: &'g str,
        graph: &'g BTreeMap<&str, Vec<String>>,
        state: &mut BTreeMap<&'g str, u8>,
    ) -> Option<String> {
        match state.get(name) {
            Some(1) => return Some(name.to_string()),
            Some(2) => return None,
            _ => {}
        }
        state.insert(name, 1);
        for child in graph.get(name).into_iter().flatten() {
            if let Some(r) = visit(child, graph, state) {
                return Some(r);
            }
        }
        state.insert(name, 2);
        None
    }
    let mut state = BTreeMap::new();
    visit(ast.entry.as_str(), &graph, &mut state)
}

fn create_in_loop(stmts: &[ast::Stmt], in_loop: bool) -> Option<String> {
    for s in stmts {
        match &s.kind {
            StmtKind::Create { routine, .. } if in_loop => return Some(routine.clone()),
            StmtKind::If {
                then_block, else_block, ..
            } => {
                if let Some(r) = create_in_loop(then_block, in_loop) {
                    return Some(r);
                }
                if let Some(r) = else_block.as_ref().and_then(|e| create_in_loop(e, in_loop)) {
                    return Some(r);
                }
            }
            StmtKind::While { body, .. } => {
                if let Some(r) = create_in_loop(body, true) {
                    return Some(r);
                }
            }
            _ => {}
        }
    }
    None
}

impl<'a> ModelBuilder<'a> {
    fn new_var(&mut self, name: String, ty: ScalarType, scope: VarScope, init: Option<i64>) -> VarId {
        let id = VarId(self.vars.len() as u32);
        self.vars.push(Variable {
            id,
            name,
            ty,
            scope,
            init,
        });
        id
    }

    fn emit(&mut self, tb: &ThreadBuilder, holes: &[Hole], stmt: Stmt, line: u32) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        let arity = match stmt {
            Stmt::Branch { .. } => 2,
            Stmt::Exit => 0,
            _ => 1,
        };
        self.nodes.push(Node {
            id,
            thread: tb.id,
            line,
            name: String::new(),
            stmt,
            succs: alloc::vec![NodeId(u32::MAX); arity],
            preds: Vec::new(),
        });
        self.patch(holes, id);
        id
    }

    fn patch(&mut self, holes: &[Hole], target: NodeId) {
        for &(from, slot) in holes {
            self.nodes[from.index()].succs[slot] = target;
        }
    }

    fn resolve(&self, tb: &ThreadBuilder, name: &str) -> Result<VarId, FrontendError> {
        tb.locals
            .get(name)
            .or_else(|| self.globals.get(name))
            .copied()
            .ok_or_else(|| FrontendError::UnknownVariable {
                name: name.to_string(),
                routine: self.threads_routine_name(tb),
            })
    }

    fn threads_routine_name(&self, tb: &ThreadBuilder) -> String {
        self.threads
            .get(tb.id.index())
            .map(|t| t.routine.clone())
            .unwrap_or_default()
    }

    fn fresh_temp(&mut self, tb: &mut ThreadBuilder, ty: ScalarType) -> VarId {
        tb.temp_counter += 1;
        let v = self.new_var(alloc::format!("${}", tb.temp_counter), ty, VarScope::Local(tb.id), None);
        tb.local_list.push(v);
        v
    }

    fn is_global(&self, v: VarId) -> bool {
        matches!(self.vars[v.index()].scope, VarScope::Global)
    }

    fn var_type(&self, v: VarId) -> ScalarType {
        self.vars[v.index()].ty
    }

    /// Rewrites `e` over locals only, emitting a `Load` per global occurrence
    /// and a `Nondet` per `*`, left to right.
    fn hoist(
        &mut self,
        tb: &mut ThreadBuilder,
        holes: &mut Vec<Hole>,
        e: &ast::Expr,
        line: u32,
        nondet_ty: ScalarType,
    ) -> Result<Expr, FrontendError> {
        Ok(match e {
            ast::Expr::Int(v) => Expr::Const(*v),
            ast::Expr::Bool(b) => Expr::Const(*b as i64),
            ast::Expr::Var(name) => {
                let v = self.resolve(tb, name)?;
                if self.is_global(v) {
                    let ty = self.var_type(v);
                    let tmp = self.fresh_temp(tb, ty);
                    let n = self.emit(tb, holes, Stmt::Load { dst: tmp, global: v }, line);
                    *holes = alloc::vec![(n, 0)];
                    Expr::Var(tmp)
                } else {
                    Expr::Var(v)
                }
            }
            ast::Expr::Nondet => {
                let tmp = self.fresh_temp(tb, nondet_ty);
                let n = self.emit(tb, holes, Stmt::Nondet { dst: tmp }, line);
                *holes = alloc::vec![(n, 0)];
                Expr::Var(tmp)
            }
            ast::Expr::Binary(op, a, b) => {
                let a = self.hoist(tb, holes, a, line, ScalarType::Int)?;
                let b = self.hoist(tb, holes, b, line, ScalarType::Int)?;
                Expr::Binary(*op, Box::new(a), Box::new(b))
            }
            ast::Expr::Not(a) => {
                let a = self.hoist(tb, holes, a, line, ScalarType::Bool)?;
                Expr::Not(Box::new(a))
            }
        })
    }

    /// Emits code computing `value` into local `dst`.
    fn assign_local(
        &mut self,
        tb: &mut ThreadBuilder,
        mut holes: Vec<Hole>,
        dst: VarId,
        value: &ast::Expr,
        line: u32,
    ) -> Result<Vec<Hole>, FrontendError> {
        let n = match value {
            ast::Expr::Var(name) if self.is_global(self.resolve(tb, name)?) => {
                let global = self.resolve(tb, name)?;
                self.emit(tb, &holes, Stmt::Load { dst, global }, line)
            }
            ast::Expr::Nondet => self.emit(tb, &holes, Stmt::Nondet { dst }, line),
            _ => {
                let ty = self.var_type(dst);
                let expr = self.hoist(tb, &mut holes, value, line, ty)?;
                self.emit(tb, &holes, Stmt::LocalAssign { dst, expr }, line)
            }
        };
        Ok(alloc::vec![(n, 0)])
    }

    fn lower_block(
        &mut self,
        tb: &mut ThreadBuilder,
        stmts: &[ast::Stmt],
        mut holes: Vec<Hole>,
    ) -> Result<Vec<Hole>, FrontendError> {
        for s in stmts {
            holes = self.lower_stmt(tb, s, holes)?;
        }
        Ok(holes)
    }

    fn lower_stmt(
        &mut self,
        tb: &mut ThreadBuilder,
        s: &ast::Stmt,
        mut holes: Vec<Hole>,
    ) -> Result<Vec<Hole>, FrontendError> {
        let line = s.line;
        match &s.kind {
            StmtKind::Decl { ty, name, value } => {
                let dst = match tb.locals.get(name) {
                    Some(v) => *v,
                    None => {
                        // Resolve the initializer before the name comes into scope.
                        let v = self.new_var(name.clone(), *ty, VarScope::Local(tb.id), None);
                        tb.local_list.push(v);
                        let out = self.assign_local(tb, holes, v, value, line)?;
                        tb.locals.insert(name.clone(), v);
                        return Ok(out);
                    }
                };
                self.assign_local(tb, holes, dst, value, line)
            }
            StmtKind::Assign { target, value } => {
                let dst = self.resolve(tb, target)?;
                if !self.is_global(dst) {
                    return self.assign_local(tb, holes, dst, value, line);
                }
                let before = self.nodes.len();
                let expr = self.hoist(tb, &mut holes, value, line, self.var_type(dst))?;
                let hoisted = self.nodes.len() > before;
                let expr = match expr {
                    e @ (Expr::Var(_) | Expr::Const(_)) => e,
                    e if hoisted => {
                        let ty = self.var_type(dst);
                        let tmp = self.fresh_temp(tb, ty);
                        let n = self.emit(tb, &holes, Stmt::LocalAssign { dst: tmp, expr: e }, line);
                        holes = alloc::vec![(n, 0)];
                        Expr::Var(tmp)
                    }
                    e => e,
                };
                let n = self.emit(tb, &holes, Stmt::Store { global: dst, expr }, line);
                Ok(alloc::vec![(n, 0)])
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let cond = self.hoist(tb, &mut holes, cond, line, ScalarType::Bool)?;
                let b = self.emit(tb, &holes, Stmt::Branch { cond }, line);
                let mut out = self.lower_block(tb, then_block, alloc::vec![(b, 0)])?;
                match else_block {
                    Some(e) => out.extend(self.lower_block(tb, e, alloc::vec![(b, 1)])?),
                    None => out.push((b, 1)),
                }
                Ok(out)
            }
            StmtKind::While { cond, body } => {
                let head = NodeId(self.nodes.len() as u32);
                let cond = self.hoist(tb, &mut holes, cond, line, ScalarType::Bool)?;
                let b = self.emit(tb, &holes, Stmt::Branch { cond }, line);
                let back = self.lower_block(tb, body, alloc::vec![(b, 0)])?;
                self.patch(&back, head);
                Ok(alloc::vec![(b, 1)])
            }
            StmtKind::Assert(cond) => {
                let cond = self.hoist(tb, &mut holes, cond, line, ScalarType::Bool)?;
                let n = self.emit(tb, &holes, Stmt::Assert { cond }, line);
                self.assertions.push(Assertion {
                    node: n,
                    thread: tb.id,
                    line,
                });
                Ok(alloc::vec![(n, 0)])
            }
            StmtKind::Error => {
                let n = self.emit(tb, &holes, Stmt::Assert { cond: Expr::Const(0) }, line);
                self.assertions.push(Assertion {
                    node: n,
                    thread: tb.id,
                    line,
                });
                Ok(alloc::vec![(n, 0)])
            }
            StmtKind::Create { routine, args } => {
                let callee = self
                    .ast
                    .routine(routine)
                    .ok_or_else(|| FrontendError::UnknownRoutine { name: routine.clone() })?;
                if callee.params.len() != args.len() {
                    return Err(FrontendError::ArityMismatch {
                        routine: routine.clone(),
                        expected: callee.params.len(),
                        found: args.len(),
                    });
                }
                let n = self.emit(
                    tb,
                    &holes,
                    Stmt::Create {
                        routine: routine.clone(),
                        args: args.clone(),
                        child: ThreadId(u32::MAX),
                    },
                    line,
                );
                tb.pending_creates.push(PendingCreate {
                    site: n,
                    routine: routine.clone(),
                    args: args.clone(),
                });
                Ok(alloc::vec![(n, 0)])
            }
            StmtKind::Join { routine } => {
                let n = self.emit(
                    tb,
                    &holes,
                    Stmt::Join {
                        routine: routine.clone(),
                        child: ThreadId(u32::MAX),
                    },
                    line,
                );
                tb.pending_joins.push((n, routine.clone()));
                Ok(alloc::vec![(n, 0)])
            }
        }
    }

    fn instantiate(
        &mut self,
        routine: &ast::Routine,
        args: &[i64],
        creator: Option<NodeId>,
    ) -> Result<ThreadId, FrontendError> {
        let id = ThreadId(self.threads.len() as u32);
        let first = self.nodes.len() as u32;
        self.threads.push(ThreadCfg {
            id,
            routine: routine.name.clone(),
            args: args.to_vec(),
            nodes: first..first,
            entry: NodeId(first),
            exit: NodeId(first),
            creator,
            locals: Vec::new(),
        });
        let mut tb = ThreadBuilder {
            id,
            locals: BTreeMap::new(),
            local_list: Vec::new(),
            temp_counter: 0,
            pending_creates: Vec::new(),
            pending_joins: Vec::new(),
        };
        let mut holes: Vec<Hole> = Vec::new();
        for (param, value) in routine.params.iter().zip(args) {
            let v = self.new_var(param.clone(), ScalarType::Int, VarScope::Local(id), None);
            tb.local_list.push(v);
            tb.locals.insert(param.clone(), v);
            let n = self.emit(
                &tb,
                &holes,
                Stmt::LocalAssign {
                    dst: v,
                    expr: Expr::Const(*value),
                },
                routine.line,
            );
            holes = alloc::vec![(n, 0)];
        }
        if routine.params.is_empty() && matches!(routine.body.first().map(|s| &s.kind), Some(StmtKind::While { .. })) {
            let n = self.emit(&tb, &holes, Stmt::Skip, routine.line);
            holes = alloc::vec![(n, 0)];
        }
        let holes = self.lower_block(&mut tb, &routine.body, holes)?;
        let exit = self.emit(&tb, &holes, Stmt::Exit, routine.end_line);
        let end = self.nodes.len() as u32;
        {
            let t = &mut self.threads[id.index()];
            t.nodes = first..end;
            t.exit = exit;
            t.locals = tb.local_list.clone();
        }
        let mut created: Vec<(String, ThreadId)> = Vec::new();
        for pc in core::mem::take(&mut tb.pending_creates) {
            let callee = self.ast.routine(&pc.routine).expect("checked at create");
            let child = self.instantiate(callee, &pc.args, Some(pc.site))?;
            if let Stmt::Create { child: c, .. } = &mut self.nodes[pc.site.index()].stmt {
                *c = child;
            }
            self.creates.push((pc.site, child));
            created.push((pc.routine, child));
        }
        for (site, name) in core::mem::take(&mut tb.pending_joins) {
            let mut matching = created.iter().filter(|(r, _)| *r == name);
            let child = match (matching.next(), matching.next()) {
                (Some((_, c)), None) => *c,
                (None, _) => {
                    return Err(FrontendError::JoinWithoutCreate {
                        routine: name,
                        in_routine: routine.name.clone(),
                    })
                }
                (Some(_), Some(_)) => {
                    return Err(FrontendError::AmbiguousJoin {
                        routine: name,
                        in_routine: routine.name.clone(),
                    })
                }
            };
            if let Stmt::Join { child: c, .. } = &mut self.nodes[site.index()].stmt {
                *c = child;
            }
            self.joins.push((site, child));
        }
        Ok(id)
    }

    fn finish(mut self) -> ProgramModel {
        let edges: Vec<(NodeId, NodeId)> = self
            .nodes
            .iter()
            .flat_map(|n| n.succs.iter().map(move |s| (n.id, *s)))
            .collect();
        for (from, to) in edges {
            let preds = &mut self.nodes[to.index()].preds;
            if !preds.contains(&from) {
                preds.push(from);
            }
        }
        let mut seen: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for t in &self.threads {
            for n in t.node_ids() {
                let node = &self.nodes[n.index()];
                let base = match node.stmt {
                    Stmt::Exit => alloc::format!("t{}.exit", t.id.0),
                    Stmt::Skip => alloc::format!("t{}.entry", t.id.0),
                    _ => {
                        let k = seen.entry((t.id.0, node.line)).or_insert(0);
                        let name = if *k == 0 {
                            alloc::format!("t{}.{}", t.id.0, node.line)
                        } else {
                            alloc::format!("t{}.{}.{}", t.id.0, node.line, k)
                        };
                        *k += 1;
                        name
                    }
                };
                self.nodes[n.index()].name = base;
            }
        }
        self.creates.sort();
        self.joins.sort();
        ProgramModel {
            threads: self.threads,
            nodes: self.nodes,
            globals: self
                .globals
                .values()
                .copied()
                .collect::<alloc::collections::BTreeSet<_>>()
                .into_iter()
                .collect(),
            vars: self.vars,
            creates: self.creates,
            joins: self.joins,
            assertions: self.assertions,
        }
    }
}

/// Instantiate one CFG per thread instance (entry first, children in
/// depth-first creation order).
pub fn build_model(ast: &SourceProgram) -> Result<ProgramModel, FrontendError> {
    if let Some(routine) = creates_recursively(ast) {
        return Err(FrontendError::RecursiveCreate { routine });
    }
    for r in &ast.routines {
        if let Some(child) = create_in_loop(&r.body, false) {
            return Err(FrontendError::CreateInLoop {
                routine: child,
                in_routine: r.name.clone(),
            });
        }
    }
    let entry = ast.routine(&ast.entry).ok_or(FrontendError::MissingEntry)?;
    if !entry.params.is_empty() {
        return Err(FrontendError::ArityMismatch {
            routine: entry.name.clone(),
            expected: 0,
            found: entry.params.len(),
        });
    }
    let mut b = ModelBuilder {
        ast,
        nodes: Vec::new(),
        vars: Vec::new(),
        globals: BTreeMap::new(),
        threads: Vec::new(),
        creates: Vec::new(),
        joins: Vec::new(),
        assertions: Vec::new(),
    };
    for g in &ast.globals {
        let v = b.new_var(g.name.clone(), g.ty, VarScope::Global, Some(g.init));
        b.globals.insert(g.name.clone(), v);
    }
    b.instantiate(entry, &[], None)?;
    Ok(b.finish())
}
