//! Binary relations and a semi-naive evaluator for Horn rules over them.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use fixedbitset::FixedBitSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Dominates,
    NotReachableFrom,
    ThCreates,
    ThJoins,
    IsLoad,
    IsStore,
    /// Unary, stored as `(s, 0)`: `s` runs at most once per execution.
    Once,
    ReadsFrom,
    Mhb,
    MustNotReadFrom,
}

impl Rel {
    pub const ALL: [Rel; 10] = [
        Rel::Dominates,
        Rel::NotReachableFrom,
        Rel::ThCreates,
        Rel::ThJoins,
        Rel::IsLoad,
        Rel::IsStore,
        Rel::Once,
        Rel::ReadsFrom,
        Rel::Mhb,
        Rel::MustNotReadFrom,
    ];
    pub const COUNT: usize = Rel::ALL.len();

    pub fn name(self) -> &'static str {
        match self {
            Rel::Dominates => "Dominates",
            Rel::NotReachableFrom => "NotReachableFrom",
            Rel::ThCreates => "ThCreates",
            Rel::ThJoins => "ThJoins",
            Rel::IsLoad => "IsLoad",
            Rel::IsStore => "IsStore",
            Rel::Once => "Once",
            Rel::ReadsFrom => "ReadsFrom",
            Rel::Mhb => "MHB",
            Rel::MustNotReadFrom => "MustNotReadFrom",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub type Tuple = (u32, u32);

/// Read access to a set of relations.
pub trait FactView {
    fn contains(&self, rel: Rel, t: Tuple) -> bool;
    /// Calls `f(b)` for every `(a, b)` in `rel`.
    fn for_first(&self, rel: Rel, a: u32, f: &mut dyn FnMut(u32));
    /// Calls `f(a)` for every `(a, b)` in `rel`.
    fn for_second(&self, rel: Rel, b: u32, f: &mut dyn FnMut(u32));
    fn for_all(&self, rel: Rel, f: &mut dyn FnMut(Tuple));
}

/// Relations as bit matrices over a fixed `dim x dim` domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseFacts {
    dim: usize,
    fwd: Vec<Vec<FixedBitSet>>,
    bwd: Vec<Vec<FixedBitSet>>,
}

impl DenseFacts {
    pub fn new(dim: usize) -> DenseFacts {
        let matrix = || vec![FixedBitSet::with_capacity(dim); dim];
        DenseFacts {
            dim,
            fwd: (0..Rel::COUNT).map(|_| matrix()).collect(),
            bwd: (0..Rel::COUNT).map(|_| matrix()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn insert(&mut self, rel: Rel, (a, b): Tuple) -> bool {
        let (a, b) = (a as usize, b as usize);
        let fresh = !self.fwd[rel.index()][a].put(b);
        self.bwd[rel.index()][b].insert(a);
        fresh
    }

    pub fn row(&self, rel: Rel, a: u32) -> &FixedBitSet {
        &self.fwd[rel.index()][a as usize]
    }

    /// Replaces `rel` by the given rows.
    pub fn set_rows(&mut self, rel: Rel, rows: Vec<FixedBitSet>) {
        let mut bwd = vec![FixedBitSet::with_capacity(self.dim); self.dim];
        for (a, row) in rows.iter().enumerate() {
            for b in row.ones() {
                bwd[b].insert(a);
            }
        }
        self.fwd[rel.index()] = rows;
        self.bwd[rel.index()] = bwd;
    }

    pub fn len(&self, rel: Rel) -> usize {
        self.fwd[rel.index()].iter().map(|r| r.count_ones(..)).sum()
    }

    pub fn tuples(&self, rel: Rel) -> Vec<Tuple> {
        let mut out = Vec::new();
        self.for_all(rel, &mut |t| out.push(t));
        out
    }
}

impl FactView for DenseFacts {
    fn contains(&self, rel: Rel, (a, b): Tuple) -> bool {
        self.fwd[rel.index()]
            .get(a as usize)
            .is_some_and(|r| r.contains(b as usize))
    }

    fn for_first(&self, rel: Rel, a: u32, f: &mut dyn FnMut(u32)) {
        if let Some(r) = self.fwd[rel.index()].get(a as usize) {
            r.ones().for_each(|b| f(b as u32));
        }
    }

    fn for_second(&self, rel: Rel, b: u32, f: &mut dyn FnMut(u32)) {
        if let Some(r) = self.bwd[rel.index()].get(b as usize) {
            r.ones().for_each(|a| f(a as u32));
        }
    }

    fn for_all(&self, rel: Rel, f: &mut dyn FnMut(Tuple)) {
        for (a, r) in self.fwd[rel.index()].iter().enumerate() {
            r.ones().for_each(|b| f((a as u32, b as u32)));
        }
    }
}

/// Relations as ordered tuple sets, indexed both ways.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparseFacts {
    fwd: [BTreeSet<Tuple>; Rel::COUNT],
    bwd: [BTreeSet<Tuple>; Rel::COUNT],
}

impl SparseFacts {
    pub fn insert(&mut self, rel: Rel, (a, b): Tuple) -> bool {
        let fresh = self.fwd[rel.index()].insert((a, b));
        self.bwd[rel.index()].insert((b, a));
        fresh
    }

    pub fn is_empty(&self) -> bool {
        self.fwd.iter().all(|r| r.is_empty())
    }

    pub fn len(&self, rel: Rel) -> usize {
        self.fwd[rel.index()].len()
    }

    pub fn tuples(&self, rel: Rel) -> impl Iterator<Item = Tuple> + '_ {
        self.fwd[rel.index()].iter().copied()
    }

    pub fn extend(&mut self, o: &SparseFacts) {
        for rel in Rel::ALL {
            for t in o.tuples(rel) {
                self.insert(rel, t);
            }
        }
    }
}

impl FactView for SparseFacts {
    fn contains(&self, rel: Rel, t: Tuple) -> bool {
        self.fwd[rel.index()].contains(&t)
    }

    fn for_first(&self, rel: Rel, a: u32, f: &mut dyn FnMut(u32)) {
        for (_, b) in self.fwd[rel.index()].range((a, 0)..=(a, u32::MAX)) {
            f(*b);
        }
    }

    fn for_second(&self, rel: Rel, b: u32, f: &mut dyn FnMut(u32)) {
        for (_, a) in self.bwd[rel.index()].range((b, 0)..=(b, u32::MAX)) {
            f(*a);
        }
    }

    fn for_all(&self, rel: Rel, f: &mut dyn FnMut(Tuple)) {
        self.fwd[rel.index()].iter().for_each(|t| f(*t));
    }
}

/// A base view overlaid with locally derived facts; the two never share a tuple.
pub struct Overlay<'a, B: FactView> {
    pub base: &'a B,
    pub local: SparseFacts,
}

impl<B: FactView> FactView for Overlay<'_, B> {
    fn contains(&self, rel: Rel, t: Tuple) -> bool {
        self.base.contains(rel, t) || self.local.contains(rel, t)
    }

    fn for_first(&self, rel: Rel, a: u32, f: &mut dyn FnMut(u32)) {
        self.base.for_first(rel, a, f);
        self.local.for_first(rel, a, f);
    }

    fn for_second(&self, rel: Rel, b: u32, f: &mut dyn FnMut(u32)) {
        self.base.for_second(rel, b, f);
        self.local.for_second(rel, b, f);
    }

    fn for_all(&self, rel: Rel, f: &mut dyn FnMut(Tuple)) {
        self.base.for_all(rel, f);
        self.local.for_all(rel, f);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    Var(usize),
    Const(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Atom {
    pub rel: Rel,
    pub args: [Term; 2],
}

/// `head :- body[0], body[1], ...`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub name: &'static str,
    pub head: Atom,
    pub body: Vec<Atom>,
}

const MAX_VARS: usize = 8;

type Binding = [Option<u32>; MAX_VARS];

fn atom(rel: Rel, a: usize, b: usize) -> Atom {
    Atom {
        rel,
        args: [Term::Var(a), Term::Var(b)],
    }
}

fn unary(rel: Rel, a: usize) -> Atom {
    Atom {
        rel,
        args: [Term::Var(a), Term::Const(0)],
    }
}

/// The happens-before deduction rules.
pub fn rules() -> Vec<Rule> {
    use Rel::*;
    // Variable slots.
    const L: usize = 0;
    const S1: usize = 1;
    const S2: usize = 2;
    const V: usize = 3;
    const L2: usize = 4;
    vec![
        Rule {
            name: "program-order",
            head: atom(Mhb, 0, 1),
            body: vec![atom(Dominates, 0, 1), atom(NotReachableFrom, 0, 1)],
        },
        Rule {
            name: "create",
            head: atom(Mhb, 0, 1),
            body: vec![atom(ThCreates, 0, 1)],
        },
        Rule {
            name: "join",
            head: atom(Mhb, 1, 0),
            body: vec![atom(ThJoins, 0, 1)],
        },
        Rule {
            name: "overwrite",
            head: atom(Mhb, L, S2),
            body: vec![
                atom(ReadsFrom, L, S1),
                atom(Mhb, S1, S2),
                atom(IsLoad, L, V),
                atom(IsStore, S1, V),
                atom(IsStore, S2, V),
            ],
        },
        Rule {
            name: "transitivity",
            head: atom(Mhb, 0, 2),
            body: vec![atom(Mhb, 0, 1), atom(Mhb, 1, 2)],
        },
        Rule {
            name: "before-not-read",
            head: atom(MustNotReadFrom, 0, 1),
            body: vec![atom(Mhb, 0, 1)],
        },
        Rule {
            name: "read-after-overwrite",
            head: atom(MustNotReadFrom, L2, S1),
            body: vec![
                atom(ReadsFrom, L, S1),
                atom(Mhb, L, S2),
                atom(Mhb, S2, L2),
                atom(IsLoad, L, V),
                atom(IsLoad, L2, V),
                atom(IsStore, S2, V),
                unary(Once, S1),
            ],
        },
    ]
}

fn term_value(t: Term, b: &Binding) -> Option<u32> {
    match t {
        Term::Const(c) => Some(c),
        Term::Var(v) => b[v],
    }
}

fn unify(atom: &Atom, (x, y): Tuple, b: &Binding) -> Option<Binding> {
    let mut out = *b;
    for (t, val) in atom.args.iter().zip([x, y]) {
        match *t {
            Term::Const(c) if c != val => return None,
            Term::Const(_) => {}
            Term::Var(v) => match out[v] {
                Some(cur) if cur != val => return None,
                Some(_) => {}
                None => out[v] = Some(val),
            },
        }
    }
    Some(out)
}

fn solve(view: &dyn FactView, body: &[Atom], remaining: &mut Vec<usize>, b: &Binding, emit: &mut dyn FnMut(&Binding)) {
    if remaining.is_empty() {
        emit(b);
        return;
    }
    // Most-bound atom first.
    let pos = (0..remaining.len())
        .max_by_key(|&k| {
            let a = &body[remaining[k]];
            let bound = a.args.iter().filter(|t| term_value(**t, b).is_some()).count();
            (bound, usize::MAX - k)
        })
        .unwrap();
    let idx = remaining.swap_remove(pos);
    let a = body[idx];
    let (x, y) = (term_value(a.args[0], b), term_value(a.args[1], b));
    let mut cands: Vec<Tuple> = Vec::new();
    match (x, y) {
        (Some(x), Some(y)) => {
            if view.contains(a.rel, (x, y)) {
                cands.push((x, y));
            }
        }
        (Some(x), None) => view.for_first(a.rel, x, &mut |y| cands.push((x, y))),
        (None, Some(y)) => view.for_second(a.rel, y, &mut |x| cands.push((x, y))),
        (None, None) => view.for_all(a.rel, &mut |t| cands.push(t)),
    }
    for t in cands {
        if let Some(nb) = unify(&a, t, b) {
            solve(view, body, remaining, &nb, emit);
        }
    }
    remaining.push(idx);
    let last = remaining.len() - 1;
    remaining.swap(pos, last);
}

/// Extends `overlay.local` with `seed` and closes base plus local under
/// `rules`, assuming the base alone is already closed.
pub fn evaluate<B: FactView>(overlay: &mut Overlay<'_, B>, rules: &[Rule], seed: SparseFacts) {
    let mut delta = SparseFacts::default();
    for rel in Rel::ALL {
        for t in seed.tuples(rel) {
            if !overlay.contains(rel, t) {
                overlay.local.insert(rel, t);
                delta.insert(rel, t);
            }
        }
    }
    while !delta.is_empty() {
        let mut next = SparseFacts::default();
        for rule in rules {
            for (i, a) in rule.body.iter().enumerate() {
                if delta.len(a.rel) == 0 {
                    continue;
                }
                let mut remaining: Vec<usize> = (0..rule.body.len()).filter(|k| *k != i).collect();
                for t in delta.tuples(a.rel) {
                    let Some(b) = unify(a, t, &[None; MAX_VARS]) else {
                        continue;
                    };
                    solve(&*overlay, &rule.body, &mut remaining, &b, &mut |b| {
                        let head = (
                            term_value(rule.head.args[0], b).expect("range-restricted head"),
                            term_value(rule.head.args[1], b).expect("range-restricted head"),
                        );
                        if !overlay.contains(rule.head.rel, head) {
                            next.insert(rule.head.rel, head);
                        }
                    });
                }
            }
        }
        overlay.local.extend(&next);
        delta = next;
    }
}

/// Least fixpoint of `facts` under `rules`, starting from nothing derived.
pub fn fixpoint(facts: &SparseFacts, rules: &[Rule]) -> SparseFacts {
    let empty = SparseFacts::default();
    let mut ov = Overlay {
        base: &empty,
        local: SparseFacts::default(),
    };
    evaluate(&mut ov, rules, facts.clone());
    ov.local
}
