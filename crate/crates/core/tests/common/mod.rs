#![allow(dead_code)]

use flowtm_core::frontend::ast::{BinOp, Expr, GlobalDecl, Routine, ScalarType, SourceProgram, Stmt, StmtKind};
use proptest::prelude::*;

pub fn op() -> impl Strategy<Value = BinOp> {
    proptest::sample::select(vec![
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::And,
        BinOp::Or,
    ])
}

/// Expressions over the given names.
pub fn expr(names: &'static [&'static str], nondet: bool) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        4 => (-3i64..=3).prop_map(Expr::Int),
        1 => any::<bool>().prop_map(Expr::Bool),
        4 => proptest::sample::select(names).prop_map(|n| Expr::Var(n.to_string())),
        if nondet { 1 } else { 0 } => Just(Expr::Nondet),
    ];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            3 => (op(), inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::binary(o, a, b)),
            1 => inner.prop_map(|a| Expr::Not(Box::new(a))),
        ]
    })
}

fn at(kind: StmtKind) -> Stmt {
    Stmt { kind, line: 0 }
}

const LOCALS: &[&str] = &["a", "b"];
const ALL: &[&str] = &["a", "b", "x", "y"];

/// Expressions over the locals reading at most one global.
pub fn expr_one_global(nondet: bool) -> impl Strategy<Value = Expr> {
    (
        expr(LOCALS, nondet),
        proptest::option::of((op(), proptest::sample::select(&["x", "y"][..]))),
    )
        .prop_map(|(e, g)| match g {
            Some((o, g)) => Expr::binary(o, e, Expr::Var(g.to_string())),
            None => e,
        })
}

fn leaf_stmt() -> impl Strategy<Value = Stmt> {
    let target = proptest::sample::select(ALL).prop_map(str::to_string);
    prop_oneof![
        4 => (target, expr_one_global(true)).prop_map(|(target, value)| at(StmtKind::Assign { target, value })),
        1 => expr_one_global(false).prop_map(|c| at(StmtKind::Assert(c))),
    ]
}

/// A statement or a conditional with one statement per branch, over locals
/// `a`, `b` and globals `x`, `y`.
pub fn unit() -> impl Strategy<Value = Stmt> {
    prop_oneof![
        2 => leaf_stmt(),
        1 => (expr_one_global(false), leaf_stmt(), proptest::option::of(leaf_stmt())).prop_map(|(cond, t, e)| {
            at(StmtKind::If {
                cond,
                then_block: vec![t],
                else_block: e.map(|e| vec![e]),
            })
        }),
    ]
}

fn thread_body(units: usize) -> impl Strategy<Value = Vec<Stmt>> {
    proptest::collection::vec(unit(), 1..=units).prop_map(|mut stmts| {
        let mut body: Vec<Stmt> = LOCALS
            .iter()
            .map(|n| {
                at(StmtKind::Decl {
                    ty: ScalarType::Int,
                    name: n.to_string(),
                    value: Expr::Int(0),
                })
            })
            .collect();
        body.append(&mut stmts);
        body
    })
}

/// Well-formed loop-free programs: `main` plus up to two created workers.
pub fn program(units: usize) -> impl Strategy<Value = SourceProgram> {
    (
        0usize..=2,
        proptest::collection::vec(thread_body(units), 3),
        (-1i64..=1, -1i64..=1),
        any::<bool>(),
    )
        .prop_map(|(workers, bodies, (x0, y0), join)| {
            let mut bodies = bodies.into_iter();
            let mut main = bodies.next().unwrap();
            let names = ["w1", "w2"];
            let mut routines = Vec::new();
            for name in &names[..workers] {
                main.insert(
                    2,
                    at(StmtKind::Create {
                        routine: name.to_string(),
                        args: vec![],
                    }),
                );
                if join {
                    main.push(at(StmtKind::Join {
                        routine: name.to_string(),
                    }));
                }
                routines.push(Routine {
                    name: name.to_string(),
                    params: vec![],
                    body: bodies.next().unwrap(),
                    line: 0,
                    end_line: 0,
                });
            }
            routines.push(Routine {
                name: "main".into(),
                params: vec![],
                body: main,
                line: 0,
                end_line: 0,
            });
            SourceProgram {
                globals: vec![
                    GlobalDecl {
                        name: "x".into(),
                        ty: ScalarType::Int,
                        init: x0,
                        line: 0,
                    },
                    GlobalDecl {
                        name: "y".into(),
                        ty: ScalarType::Int,
                        init: y0,
                        line: 0,
                    },
                ],
                routines,
                entry: "main".into(),
            }
        })
}
