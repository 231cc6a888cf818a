use super::{AbstractEnv, Bound, Interval};
use crate::frontend::ast::{BinOp, ScalarType};
use crate::frontend::{Expr, ProgramModel, Stmt, VarId};

pub fn eval(e: &Expr, env: &AbstractEnv) -> Interval {
    if env.is_bottom() {
        return Interval::EMPTY;
    }
    match e {
        Expr::Const(c) => Interval::constant(*c),
        Expr::Var(v) => env.get(*v),
        Expr::Not(a) => eval(a, env).not(),
        Expr::Binary(op, a, b) => {
            let (x, y) = (eval(a, env), eval(b, env));
            match op {
                BinOp::Add => x.add(&y),
                BinOp::Sub => x.sub(&y),
                BinOp::Mul => x.mul(&y),
                BinOp::Div => x.div(&y),
                BinOp::Lt => x.lt(&y),
                BinOp::Le => x.le(&y),
                BinOp::Gt => y.lt(&x),
                BinOp::Ge => y.le(&x),
                BinOp::Eq => x.eq_(&y),
                BinOp::Ne => x.ne_(&y),
                BinOp::And => x.and(&y),
                BinOp::Or => x.or(&y),
            }
        }
    }
}

fn negate(op: BinOp) -> BinOp {
    match op {
        BinOp::Lt => BinOp::Ge,
        BinOp::Le => BinOp::Gt,
        BinOp::Gt => BinOp::Le,
        BinOp::Ge => BinOp::Lt,
        BinOp::Eq => BinOp::Ne,
        BinOp::Ne => BinOp::Eq,
        other => other,
    }
}

fn at_most(b: Bound, delta: i64) -> Interval {
    Interval::new(Bound::NegInf, b).add(&Interval::constant(delta))
}

fn at_least(b: Bound, delta: i64) -> Interval {
    Interval::new(b, Bound::PosInf).add(&Interval::constant(delta))
}

/// Removes `c` from `x` when it sits on a bound.
fn exclude(x: Interval, c: Option<i64>) -> Interval {
    match c {
        Some(c) if x.lo() == Bound::Finite(c) => x.meet(&at_least(x.lo(), 1)),
        Some(c) if x.hi() == Bound::Finite(c) => x.meet(&at_most(x.hi(), -1)),
        _ => x,
    }
}

/// Tightens `x op y` assumed true.
fn tighten(op: BinOp, x: Interval, y: Interval) -> (Interval, Interval) {
    match op {
        BinOp::Lt => (x.meet(&at_most(y.hi(), -1)), y.meet(&at_least(x.lo(), 1))),
        BinOp::Le => (x.meet(&at_most(y.hi(), 0)), y.meet(&at_least(x.lo(), 0))),
        BinOp::Gt => {
            let (b, a) = tighten(BinOp::Lt, y, x);
            (a, b)
        }
        BinOp::Ge => {
            let (b, a) = tighten(BinOp::Le, y, x);
            (a, b)
        }
        BinOp::Eq => {
            let m = x.meet(&y);
            (m, m)
        }
        BinOp::Ne => (exclude(x, y.as_constant()), exclude(y, x.as_constant())),
        _ => (x, y),
    }
}

fn atom(e: &Expr) -> Option<Result<VarId, i64>> {
    match e {
        Expr::Var(v) => Some(Ok(*v)),
        Expr::Const(c) => Some(Err(*c)),
        _ => None,
    }
}

fn atom_value(a: Result<VarId, i64>, env: &AbstractEnv) -> Interval {
    match a {
        Ok(v) => env.get(v),
        Err(c) => Interval::constant(c),
    }
}

/// Restricts `env` to the states where `cond` evaluates to `want`.
pub fn filter(cond: &Expr, env: &AbstractEnv, want: bool) -> AbstractEnv {
    if env.is_bottom() {
        return AbstractEnv::Bottom;
    }
    let refined = match cond {
        Expr::Not(a) => return filter(a, env, !want),
        Expr::Binary(BinOp::And, a, b) if want => filter(b, &filter(a, env, true), true),
        Expr::Binary(BinOp::Or, a, b) if !want => filter(b, &filter(a, env, false), false),
        Expr::Binary(BinOp::And, a, b) => filter(a, env, false).join(&filter(b, env, false)),
        Expr::Binary(BinOp::Or, a, b) => filter(a, env, true).join(&filter(b, env, true)),
        Expr::Binary(op, a, b) if op.is_comparison() => match (atom(a), atom(b)) {
            (Some(p), Some(q)) => {
                let op = if want { *op } else { negate(*op) };
                let (x, y) = tighten(op, atom_value(p, env), atom_value(q, env));
                let mut out = env.clone();
                if let Ok(v) = p {
                    out.refine(v, x);
                }
                if let Ok(w) = q {
                    out.refine(w, y);
                }
                if x.is_empty() || y.is_empty() {
                    AbstractEnv::Bottom
                } else {
                    out
                }
            }
            _ => env.clone(),
        },
        Expr::Var(v) => {
            let mut out = env.clone();
            let cur = env.get(*v);
            if want {
                out.set(*v, exclude(cur, Some(0)));
            } else {
                out.refine(*v, Interval::FALSE);
            }
            out
        }
        _ => env.clone(),
    };
    match eval(cond, &refined).truthiness() {
        Some(b) if b != want => AbstractEnv::Bottom,
        _ if eval(cond, &refined).is_empty() => AbstractEnv::Bottom,
        _ => refined,
    }
}

/// Environments leaving a node, one per successor slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Post {
    One(AbstractEnv),
    Branch(AbstractEnv, AbstractEnv),
}

impl Post {
    pub fn slot(&self, i: usize) -> &AbstractEnv {
        match (self, i) {
            (Post::One(e), _) => e,
            (Post::Branch(t, _), 0) => t,
            (Post::Branch(_, f), _) => f,
        }
    }
}

pub fn assign(env: &AbstractEnv, dst: VarId, value: Interval) -> AbstractEnv {
    let mut out = env.clone();
    out.set(dst, value);
    out
}

/// Abstract effect of `stmt`. `load` supplies the value read by a `Load`.
pub fn transfer(
    model: &ProgramModel,
    stmt: &Stmt,
    env: &AbstractEnv,
    load: impl FnOnce(VarId, &AbstractEnv) -> Interval,
) -> Post {
    if env.is_bottom() {
        return match stmt {
            Stmt::Branch { .. } => Post::Branch(AbstractEnv::Bottom, AbstractEnv::Bottom),
            _ => Post::One(AbstractEnv::Bottom),
        };
    }
    match stmt {
        Stmt::LocalAssign { dst, expr } => Post::One(assign(env, *dst, eval(expr, env))),
        Stmt::Store { global, expr } => Post::One(assign(env, *global, eval(expr, env))),
        Stmt::Load { dst, global } => {
            let v = load(*global, env);
            Post::One(assign(env, *dst, v))
        }
        Stmt::Nondet { dst } => {
            let v = match model.var(*dst).ty {
                ScalarType::Int => Interval::TOP,
                ScalarType::Bool => Interval::BOOL,
            };
            Post::One(assign(env, *dst, v))
        }
        Stmt::Branch { cond } => Post::Branch(filter(cond, env, true), filter(cond, env, false)),
        Stmt::Assert { .. } | Stmt::Create { .. } | Stmt::Join { .. } | Stmt::Skip | Stmt::Exit => {
            Post::One(env.clone())
        }
    }
}

/// True when some state of `env` violates `cond`.
pub fn may_violate(cond: &Expr, env: &AbstractEnv) -> bool {
    !filter(cond, env, false).is_bottom()
}
