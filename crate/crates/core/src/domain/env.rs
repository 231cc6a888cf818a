use alloc::collections::BTreeMap;
use alloc::string::String;
use core::fmt::Write;

use super::Interval;
use crate::frontend::{ProgramModel, VarId};

/// Interval environment. A variable without a binding is unconstrained, so
/// the map only stores non-top intervals and never stores an empty one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AbstractEnv {
    Bottom,
    Map(BTreeMap<VarId, Interval>),
}

impl Default for AbstractEnv {
    fn default() -> Self {
        AbstractEnv::top()
    }
}

impl AbstractEnv {
    pub fn top() -> AbstractEnv {
        AbstractEnv::Map(BTreeMap::new())
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, AbstractEnv::Bottom)
    }

    pub fn from_bindings(items: impl IntoIterator<Item = (VarId, Interval)>) -> AbstractEnv {
        let mut e = AbstractEnv::top();
        for (v, i) in items {
            e.set(v, i);
        }
        e
    }

    /// Value of `v`; empty under bottom.
    pub fn get(&self, v: VarId) -> Interval {
        match self {
            AbstractEnv::Bottom => Interval::EMPTY,
            AbstractEnv::Map(m) => m.get(&v).copied().unwrap_or(Interval::TOP),
        }
    }

    pub fn set(&mut self, v: VarId, i: Interval) {
        if let AbstractEnv::Map(m) = self {
            if i.is_empty() {
                *self = AbstractEnv::Bottom;
            } else if i.is_top() {
                m.remove(&v);
            } else {
                m.insert(v, i);
            }
        }
    }

    /// Intersects the binding of `v` with `i`.
    pub fn refine(&mut self, v: VarId, i: Interval) {
        let cur = self.get(v);
        if !self.is_bottom() {
            self.set(v, cur.meet(&i));
        }
    }

    pub fn bindings(&self) -> impl Iterator<Item = (VarId, Interval)> + '_ {
        let m = match self {
            AbstractEnv::Bottom => None,
            AbstractEnv::Map(m) => Some(m),
        };
        m.into_iter().flatten().map(|(k, v)| (*k, *v))
    }

    fn pointwise(
        a: &BTreeMap<VarId, Interval>,
        b: &BTreeMap<VarId, Interval>,
        f: impl Fn(&Interval, &Interval) -> Interval,
    ) -> AbstractEnv {
        let mut out = AbstractEnv::top();
        for k in a.keys().chain(b.keys()) {
            let x = a.get(k).copied().unwrap_or(Interval::TOP);
            let y = b.get(k).copied().unwrap_or(Interval::TOP);
            out.set(*k, f(&x, &y));
        }
        out
    }

    pub fn join(&self, o: &AbstractEnv) -> AbstractEnv {
        match (self, o) {
            (AbstractEnv::Bottom, e) | (e, AbstractEnv::Bottom) => e.clone(),
            (AbstractEnv::Map(a), AbstractEnv::Map(b)) => {
                // Only variables bound on both sides can stay non-top.
                AbstractEnv::Map(
                    a.iter()
                        .filter_map(|(k, x)| b.get(k).map(|y| (*k, x.join(y))))
                        .filter(|(_, i)| !i.is_top())
                        .collect(),
                )
            }
        }
    }

    pub fn meet(&self, o: &AbstractEnv) -> AbstractEnv {
        match (self, o) {
            (AbstractEnv::Map(a), AbstractEnv::Map(b)) => AbstractEnv::pointwise(a, b, Interval::meet),
            _ => AbstractEnv::Bottom,
        }
    }

    pub fn leq(&self, o: &AbstractEnv) -> bool {
        match (self, o) {
            (AbstractEnv::Bottom, _) => true,
            (_, AbstractEnv::Bottom) => false,
            (AbstractEnv::Map(a), AbstractEnv::Map(b)) => b.iter().all(|(k, y)| a.get(k).is_some_and(|x| x.leq(y))),
        }
    }

    pub fn widen(&self, o: &AbstractEnv) -> AbstractEnv {
        match (self, o) {
            (AbstractEnv::Bottom, e) | (e, AbstractEnv::Bottom) => e.clone(),
            (AbstractEnv::Map(a), AbstractEnv::Map(b)) => AbstractEnv::Map(
                a.iter()
                    .filter_map(|(k, x)| b.get(k).map(|y| (*k, x.widen(y))))
                    .filter(|(_, i)| !i.is_top())
                    .collect(),
            ),
        }
    }

    pub fn narrow(&self, o: &AbstractEnv) -> AbstractEnv {
        match (self, o) {
            (AbstractEnv::Map(a), AbstractEnv::Map(b)) => AbstractEnv::pointwise(a, b, Interval::narrow),
            _ => AbstractEnv::Bottom,
        }
    }

    /// Keeps only the bindings selected by `keep`.
    pub fn project(&self, keep: impl Fn(VarId) -> bool) -> AbstractEnv {
        match self {
            AbstractEnv::Bottom => AbstractEnv::Bottom,
            AbstractEnv::Map(m) => {
                AbstractEnv::Map(m.iter().filter(|(k, _)| keep(**k)).map(|(k, v)| (*k, *v)).collect())
            }
        }
    }

    /// Renders as `{x:[0,5], flag:[1,1]}` over `vars`, skipping unbound ones
    /// only when `show_top` is false.
    pub fn render_vars(&self, model: &ProgramModel, vars: &[VarId], show_top: bool) -> String {
        if self.is_bottom() {
            return String::from("⊥");
        }
        let mut out = String::from("{");
        let mut first = true;
        for v in vars {
            let i = self.get(*v);
            if i.is_top() && !show_top {
                continue;
            }
            if !first {
                out.push_str(", ");
            }
            first = false;
            let _ = write!(out, "{}:{}", model.var_name(*v), i);
        }
        out.push('}');
        out
    }

    /// Renders every bound variable in declaration order.
    pub fn render(&self, model: &ProgramModel) -> String {
        let vars: alloc::vec::Vec<VarId> = self.bindings().map(|(v, _)| v).collect();
        self.render_vars(model, &vars, false)
    }
}
