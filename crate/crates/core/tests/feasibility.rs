mod common;

use flowtm_core::feasibility::{FactBase, Tuple};
use flowtm_core::frontend::load;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn direct_query_matches_fact_derivation(
        p in common::program(3),
        picks in proptest::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), 0..5),
        same_var in any::<bool>(),
    ) {
        let m = load(&p.to_string()).unwrap();
        let fb = FactBase::build(&m);
        let loads: Vec<u32> = m.nodes.iter().filter(|n| n.stmt.loaded_var().is_some()).map(|n| n.id.0).collect();
        let mut stores: Vec<u32> = m.all_stores().map(|s| s.0).collect();
        stores.extend((0..m.globals.len() as u32).map(|i| m.nodes.len() as u32 + i));
        prop_assume!(!loads.is_empty());
        let mut rf: Vec<Tuple> = Vec::new();
        for (li, si) in picks {
            let l = loads[li.index(loads.len())];
            let var = m.stmt(flowtm_core::frontend::NodeId(l)).loaded_var();
            let pool: Vec<u32> = if same_var {
                stores
                    .iter()
                    .copied()
                    .filter(|s| {
                        let s = *s as usize;
                        if s >= m.nodes.len() {
                            Some(m.globals[s - m.nodes.len()]) == var
                        } else {
                            m.nodes[s].stmt.stored_var() == var
                        }
                    })
                    .collect()
            } else {
                stores.clone()
            };
            if !pool.is_empty() {
                rf.push((l, pool[si.index(pool.len())]));
            }
        }
        rf.sort_unstable();
        rf.dedup();
        prop_assert_eq!(fb.consistent(&rf), fb.check(&rf), "{:?}\n{}", rf, p);
    }
}
