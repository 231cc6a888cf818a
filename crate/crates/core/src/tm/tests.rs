use super::*;
use crate::frontend::load;
use alloc::string::String;

const FLAG_HANDOFF: &str = "bool flag = false;
int x = 0;
thread thread1() {
  x = 4;
  x = 5;
  flag = true;
}
thread thread2() {
  bool b1 = flag;
  if (b1) {
    int t1 = x;
    if (t1 != 5) {
      error;
} } }
thread main() { create(thread1); create(thread2); }
";

const LOOP_READER: &str = "int x = 0;
thread main() {
  create(thread2);
  while (*) {
    int t1 = x; assert(t1 <= 2);
  }
  create(thread3);
}
thread thread2() {
  x = 1;
  x = 2;
}
thread thread3() {
  x = 10;
}
";

const PARAM_SLICE: &str = "int x = 0;
thread thr(int v) {
  int t1 = 5 * v;
  int t2 = x;
  x = t1 + t2;
  if (t1 < 0) {
    error;
} }
thread main() {
  create(thr, 5);
  create(thr, 10);
  x = 1;
}
";

const TWO_CLUSTERS: &str = "int x = 0;
int y = 0;
thread thread1() {
  x = 1;
  y = 1;
}
thread thread2() {
  int t1 = x;
  int t2 = y;
  assert(t1 >= 0);
  assert(t2 >= 0);
}
thread main() { create(thread1); create(thread2); }
";

const TWO_READERS: &str = "int x = 0;
int y = 0;
thread g1() {
  int a = x;
  int b = y;
}
thread g2() {
  x = 1;
  x = 2;
  y = 3;
}
thread main() { create(g1); create(g2); }
";

fn run(src: &str, mode: Mode) -> (ProgramModel, AnalysisResult) {
    let m = load(src).unwrap();
    let r = analyze(&m, &AnalysisConfig::with_mode(mode)).unwrap();
    (m, r)
}

fn names(m: &ProgramModel, c: &Combination) -> String {
    let mut out = String::new();
    for (_, s) in &c.entries {
        if !out.is_empty() {
            out.push(',');
        }
        match s {
            Source::Remote { store, .. } => out.push_str(m.node_name(*store)),
            _ => out.push_str("sd"),
        }
    }
    out
}

#[test]
fn flag_handoff_flow_insensitive_is_unproven() {
    let (m, r) = run(FLAG_HANDOFF, Mode::FlowInsensitive);
    assert!(!r.all_verified());
    assert_eq!(
        r.interference.summary(&m, ThreadId(1)).render(&m),
        "{flag:[1,1], x:[4,5]}"
    );
}

#[test]
fn flag_handoff_constraints_decide_verification() {
    let (_, fs) = run(FLAG_HANDOFF, Mode::FlowSensitive);
    assert!(!fs.all_verified());
    let (m, r) = run(FLAG_HANDOFF, Mode::Constrained);
    assert!(r.all_verified());
    let round = r.last_round[2];
    assert_eq!((round.combos, round.infeasible, round.runs), (6, 2, 4));
    let mut a = Analyzer::new(&m, &AnalysisConfig::with_mode(Mode::Constrained));
    let set = a.compute_combinations(ThreadId(2), &r.interference).unwrap();
    let rejected: Vec<String> = set.rejected.iter().map(|c| names(&m, c)).collect();
    assert_eq!(rejected, ["t1.6,t1.4", "t1.6,sd"]);
    let kept: Vec<String> = set.runs.iter().map(|c| names(&m, c)).collect();
    assert_eq!(kept, ["sd,t1.4", "t1.6,t1.5", "sd,t1.5", "sd,sd"]);
}

#[test]
fn cartesian_product_of_two_readers() {
    let (_, r) = run(TWO_READERS, Mode::FlowSensitive);
    assert_eq!(r.last_round[1].combos, 6);
}

#[test]
fn loop_reader_loop_load_ignores_later_thread() {
    let (m, r) = run(LOOP_READER, Mode::FlowSensitive);
    let a = m.assertions[0].node;
    let t1 = m.vars.iter().find(|v| v.name == "t1").unwrap().id;
    assert_eq!(r.env(a).get(t1), Interval::range(0, 2));
    assert!(r.all_verified());
    let (_, fi) = run(LOOP_READER, Mode::FlowInsensitive);
    assert!(!fi.all_verified());
}

#[test]
fn param_slice_pruning_removes_combinations() {
    let (_, r) = run(PARAM_SLICE, Mode::Constrained);
    assert_eq!(r.last_round[1].combos, 3);
    let (_, o) = run(PARAM_SLICE, Mode::Optimized);
    assert_eq!(o.last_round[1].runs, 1);
    assert_eq!(o.last_round[1].pruned_loads, 1);
    assert!(o.all_verified() && r.all_verified());
}

#[test]
fn two_clusters_clusters_halve_runs() {
    let (_, r) = run(TWO_CLUSTERS, Mode::Constrained);
    assert_eq!((r.last_round[2].combos, r.last_round[2].runs), (4, 4));
    let (_, o) = run(TWO_CLUSTERS, Mode::Optimized);
    assert_eq!((o.last_round[2].clusters, o.last_round[2].runs), (2, 2));
    assert!(o.all_verified());
}

#[test]
fn global_counter_loop_terminates() {
    let src = "int c = 0;
thread inc() { while (*) { c = c + 1; } }
thread main() { create(inc); create(inc); int t = c; assert(t >= 0); }";
    for mode in Mode::ALL {
        let (_, r) = run(src, mode);
        assert!(r.all_verified(), "{mode}");
        assert!(r.stats.outer_iters <= 16);
    }
}

#[test]
fn combination_cap_is_enforced() {
    let m = load(TWO_READERS).unwrap();
    let cfg = AnalysisConfig {
        combo_cap: 5,
        ..AnalysisConfig::with_mode(Mode::FlowSensitive)
    };
    assert!(matches!(
        analyze(&m, &cfg),
        Err(AnalysisError::CombinationBudgetExceeded { count: 6, cap: 5, .. })
    ));
}
