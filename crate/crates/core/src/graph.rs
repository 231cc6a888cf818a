//! Per-thread graph algorithms: orderings, dominators, reachability.

use alloc::vec;
use alloc::vec::Vec;
use fixedbitset::FixedBitSet;

use crate::frontend::{NodeId, ProgramModel, ThreadCfg};

/// Adjacency of one thread's CFG over local indices `0..len`.
#[derive(Clone, Debug)]
pub struct LocalGraph {
    pub base: u32,
    pub entry: usize,
    pub exit: usize,
    pub succs: Vec<Vec<usize>>,
    pub preds: Vec<Vec<usize>>,
}

impl LocalGraph {
    pub fn of_thread(model: &ProgramModel, t: &ThreadCfg) -> LocalGraph {
        let base = t.nodes.start;
        let local = |n: &NodeId| (n.0 - base) as usize;
        LocalGraph {
            base,
            entry: local(&t.entry),
            exit: local(&t.exit),
            succs: t
                .node_ids()
                .map(|n| model.succs(n).iter().map(local).collect())
                .collect(),
            preds: t
                .node_ids()
                .map(|n| model.preds(n).iter().map(local).collect())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.succs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succs.is_empty()
    }

    pub fn node(&self, i: usize) -> NodeId {
        NodeId(self.base + i as u32)
    }

    pub fn reversed(&self) -> LocalGraph {
        LocalGraph {
            base: self.base,
            entry: self.exit,
            exit: self.entry,
            succs: self.preds.clone(),
            preds: self.succs.clone(),
        }
    }

    /// Reverse postorder of the nodes reachable from the entry.
    pub fn reverse_postorder(&self) -> Vec<usize> {
        let mut seen = FixedBitSet::with_capacity(self.len());
        let mut post = Vec::with_capacity(self.len());
        let mut stack = vec![(self.entry, 0usize)];
        seen.insert(self.entry);
        while let Some((n, k)) = stack.pop() {
            if let Some(&s) = self.succs[n].get(k) {
                stack.push((n, k + 1));
                if !seen.put(s) {
                    stack.push((s, 0));
                }
            } else {
                post.push(n);
            }
        }
        post.reverse();
        post
    }

    /// Targets of DFS back edges.
    pub fn loop_heads(&self) -> FixedBitSet {
        let mut heads = FixedBitSet::with_capacity(self.len());
        let mut state = vec![0u8; self.len()];
        let mut stack = vec![(self.entry, 0usize)];
        state[self.entry] = 1;
        while let Some((n, k)) = stack.pop() {
            if let Some(&s) = self.succs[n].get(k) {
                stack.push((n, k + 1));
                match state[s] {
                    0 => {
                        state[s] = 1;
                        stack.push((s, 0));
                    }
                    1 => heads.insert(s),
                    _ => {}
                }
            } else {
                state[n] = 2;
            }
        }
        heads
    }

    /// Immediate dominators; the entry and unreachable nodes map to `None`.
    pub fn idoms(&self) -> Vec<Option<usize>> {
        let rpo = self.reverse_postorder();
        let mut order = vec![usize::MAX; self.len()];
        for (i, n) in rpo.iter().enumerate() {
            order[*n] = i;
        }
        let mut idom: Vec<Option<usize>> = vec![None; self.len()];
        idom[self.entry] = Some(self.entry);
        let intersect = |idom: &[Option<usize>], mut a: usize, mut b: usize| {
            while a != b {
                while order[a] > order[b] {
                    a = idom[a].unwrap();
                }
                while order[b] > order[a] {
                    b = idom[b].unwrap();
                }
            }
            a
        };
        let mut changed = true;
        while changed {
            changed = false;
            for &n in rpo.iter().skip(1) {
                let mut new = None;
                for &p in &self.preds[n] {
                    if idom[p].is_none() {
                        continue;
                    }
                    new = Some(match new {
                        None => p,
                        Some(cur) => intersect(&idom, p, cur),
                    });
                }
                if new.is_some() && idom[n] != new {
                    idom[n] = new;
                    changed = true;
                }
            }
        }
        idom[self.entry] = None;
        idom
    }

    /// `dom[n]` holds the strict dominators of `n`.
    pub fn strict_dominators(&self) -> Vec<FixedBitSet> {
        let idom = self.idoms();
        (0..self.len())
            .map(|n| {
                let mut set = FixedBitSet::with_capacity(self.len());
                let mut cur = idom[n];
                while let Some(d) = cur {
                    set.insert(d);
                    cur = idom[d];
                }
                set
            })
            .collect()
    }

    /// `reach[n]` holds every node reachable from `n` by a nonempty path.
    pub fn reachability(&self) -> Vec<FixedBitSet> {
        let n = self.len();
        let mut reach: Vec<FixedBitSet> = (0..n)
            .map(|i| {
                let mut s = FixedBitSet::with_capacity(n);
                for &j in &self.succs[i] {
                    s.insert(j);
                }
                s
            })
            .collect();
        // Warshall over bit rows.
        for k in 0..n {
            let row_k = reach[k].clone();
            for row in reach.iter_mut() {
                if row.contains(k) {
                    row.union_with(&row_k);
                }
            }
        }
        reach
    }

    /// Nodes lying on some cycle.
    pub fn on_cycle(&self) -> FixedBitSet {
        let reach = self.reachability();
        let mut out = FixedBitSet::with_capacity(self.len());
        for (i, r) in reach.iter().enumerate() {
            if r.contains(i) {
                out.insert(i);
            }
        }
        out
    }
}
