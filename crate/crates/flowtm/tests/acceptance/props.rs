//! Property checks rerun with 1000 cases each.

use std::collections::BTreeSet;

use flowtm_core::domain::{eval, filter, transfer, AbstractEnv, Bound, Interval};
use flowtm_core::feasibility::datalog::{fixpoint, rules, Term};
use flowtm_core::feasibility::{Rel, Rule, SparseFacts, Tuple};
use flowtm_core::frontend::ast::BinOp;
use flowtm_core::frontend::{load, Expr, Stmt, VarId};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const CASES: u32 = 1000;
const VARS: [VarId; 3] = [VarId(0), VarId(1), VarId(2)];

fn interval() -> impl Strategy<Value = Interval> {
    let bound = prop_oneof![
        1 => Just(Bound::NegInf),
        1 => Just(Bound::PosInf),
        6 => (-20i64..=20).prop_map(Bound::Finite),
    ];
    prop_oneof![
        1 => Just(Interval::EMPTY),
        1 => Just(Interval::TOP),
        8 => (bound.clone(), bound).prop_map(|(a, b)| Interval::new(a, b)),
    ]
}

fn env() -> impl Strategy<Value = AbstractEnv> {
    prop_oneof![
        1 => Just(AbstractEnv::Bottom),
        9 => proptest::collection::vec(proptest::option::weighted(0.7, interval()), 3).prop_map(|is| {
            AbstractEnv::from_bindings(VARS.iter().zip(is).filter_map(|(v, i)| i.map(|i| (*v, i))))
        }),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-5i64..=5).prop_map(Expr::Const),
        (0usize..3).prop_map(|i| Expr::Var(VARS[i]))
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        let op = proptest::sample::select(vec![
            BinOp::Add,
            BinOp::Sub,
            BinOp::Mul,
            BinOp::Div,
            BinOp::Lt,
            BinOp::Le,
            BinOp::Eq,
            BinOp::Ne,
            BinOp::And,
            BinOp::Or,
        ]);
        prop_oneof![
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Binary(o, Box::new(a), Box::new(b))),
            inner.prop_map(|a| Expr::Not(Box::new(a))),
        ]
    })
}

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

fn interval_laws() -> Result<(), String> {
    runner()
        .run(&(interval(), interval(), interval()), |(a, b, c)| {
            prop_assert_eq!(a.join(&b), b.join(&a));
            prop_assert_eq!(a.join(&b).join(&c), a.join(&b.join(&c)));
            prop_assert_eq!(a.leq(&b), a.join(&b) == b);
            prop_assert!(a.leq(&a.join(&b)) && b.leq(&a.join(&b)));
            let w = a.widen(&b);
            prop_assert!(a.leq(&w) && b.leq(&w));
            Ok(())
        })
        .map_err(|e| format!("interval laws: {e}"))
}

fn env_laws() -> Result<(), String> {
    runner()
        .run(&(env(), env(), env()), |(a, b, c)| {
            prop_assert_eq!(a.join(&b), b.join(&a));
            prop_assert_eq!(a.join(&b).join(&c), a.join(&b.join(&c)));
            prop_assert_eq!(a.leq(&b), a.join(&b) == b);
            let w = a.widen(&b);
            prop_assert!(a.leq(&w) && b.leq(&w));
            Ok(())
        })
        .map_err(|e| format!("environment laws: {e}"))
}

fn transfer_monotone() -> Result<(), String> {
    let model = load("thread main() { int a = 0; int b = 0; int c = 0; }").map_err(|e| e.to_string())?;
    runner()
        .run(&(env(), env(), expr(), 0usize..3), |(big, cut, e, dst)| {
            let small = big.meet(&cut);
            let stmts = [
                Stmt::LocalAssign {
                    dst: VARS[dst],
                    expr: e.clone(),
                },
                Stmt::Branch { cond: e.clone() },
            ];
            for s in &stmts {
                let (lo, hi) = (
                    transfer(&model, s, &small, |g, env| env.get(g)),
                    transfer(&model, s, &big, |g, env| env.get(g)),
                );
                for slot in 0..2 {
                    if matches!(s, Stmt::Branch { .. }) || slot == 0 {
                        prop_assert!(lo.slot(slot).leq(hi.slot(slot)));
                    }
                }
            }
            if !small.is_bottom() {
                prop_assert!(eval(&e, &small).leq(&eval(&e, &big)));
            }
            prop_assert!(filter(&e, &small, true).leq(&filter(&e, &big, true)));
            Ok(())
        })
        .map_err(|e| format!("transfer monotonicity: {e}"))
}

type Facts = BTreeSet<(Rel, Tuple)>;
type Property = (&'static str, fn() -> Result<(), String>);

/// Evaluates every rule against all facts each round until nothing changes.
fn naive(seed: &Facts, rules: &[Rule]) -> Facts {
    let mut all = seed.clone();
    loop {
        let mut next = all.clone();
        for r in rules {
            let mut bindings: Vec<Vec<Option<u32>>> = vec![vec![None; 8]];
            for atom in &r.body {
                let mut out = Vec::new();
                for b in &bindings {
                    for (rel, (x, y)) in &all {
                        if *rel != atom.rel {
                            continue;
                        }
                        let mut nb = b.clone();
                        let ok = [*x, *y].iter().zip(&atom.args).all(|(val, t)| match t {
                            Term::Const(c) => c == val,
                            Term::Var(i) => *nb[*i].get_or_insert(*val) == *val,
                        });
                        if ok {
                            out.push(nb);
                        }
                    }
                }
                bindings = out;
            }
            for b in bindings {
                let get = |t: &Term| match t {
                    Term::Const(c) => *c,
                    Term::Var(i) => b[*i].expect("head variable bound"),
                };
                next.insert((r.head.rel, (get(&r.head.args[0]), get(&r.head.args[1]))));
            }
        }
        if next == all {
            return all;
        }
        all = next;
    }
}

fn fixpoint_matches_naive() -> Result<(), String> {
    let fact = (proptest::sample::select(Rel::ALL.to_vec()), 0u32..6, 0u32..6).prop_map(|(r, a, b)| match r {
        Rel::Once => (r, (a, 0)),
        Rel::IsLoad | Rel::IsStore => (r, (a, b % 2)),
        _ => (r, (a, b)),
    });
    let rs = rules();
    runner()
        .run(&proptest::collection::btree_set(fact, 0..24), |seed| {
            let mut sparse = SparseFacts::default();
            for (r, t) in &seed {
                sparse.insert(*r, *t);
            }
            let fast = fixpoint(&sparse, &rs);
            let got: Facts = Rel::ALL
                .iter()
                .flat_map(|r| fast.tuples(*r).map(move |t| (*r, t)))
                .collect();
            prop_assert_eq!(got, naive(&seed, &rs));
            Ok(())
        })
        .map_err(|e| format!("semi-naive fixpoint: {e}"))
}

pub fn all() -> super::Outcome {
    let props: [Property; 4] = [
        ("interval laws", interval_laws),
        ("environment laws", env_laws),
        ("transfer monotonicity", transfer_monotone),
        ("semi-naive = naive fixpoint", fixpoint_matches_naive),
    ];
    for (_, p) in &props {
        p()?;
    }
    let names: Vec<&str> = props.iter().map(|(n, _)| *n).collect();
    Ok(format!("{} x {CASES} cases: {}", names.len(), names.join(", ")))
}
