//! One pass/fail line per acceptance criterion; exits non-zero on any failure.

mod props;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use flowtm::bench::{self, BenchConfig};
use flowtm::corpus::{self, CORPUS};
use flowtm::gen::{self, GenConfig};
use flowtm_core::feasibility::{FactBase, Tuple};
use flowtm_core::frontend::{load, NodeId, ProgramModel, ThreadId};
use flowtm_core::oracle::{check_abstraction, enumerate, OracleBounds};
use flowtm_core::seq::{Combination, Source};
use flowtm_core::tm::{analyze, AnalysisResult, Analyzer};
use flowtm_core::{AnalysisConfig, Mode};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn model(name: &str) -> ProgramModel {
    load(corpus::get(name).expect("bundled").source).expect("corpus parses")
}

fn run(m: &ProgramModel, mode: Mode) -> AnalysisResult {
    analyze(m, &AnalysisConfig::with_mode(mode)).expect("analysis completes")
}

fn thread(m: &ProgramModel, routine: &str) -> ThreadId {
    m.threads.iter().find(|t| t.routine == routine).expect("thread").id
}

fn node(m: &ProgramModel, name: &str) -> NodeId {
    m.node_by_name(name).unwrap_or_else(|| panic!("no node {name}"))
}

/// Source names per load, `sd` for the thread's own value.
fn sources(m: &ProgramModel, c: &Combination) -> Vec<String> {
    c.entries
        .iter()
        .map(|(_, s)| match s {
            Source::Remote { store, .. } => m.node_name(*store).to_string(),
            Source::SelfDummy => "sd".into(),
            Source::LoopMerged { .. } => "loop".into(),
        })
        .collect()
}

fn pairs(list: &[[&str; 2]]) -> Vec<Vec<String>> {
    list.iter().map(|p| p.iter().map(|s| s.to_string()).collect()).collect()
}

fn flag_handoff() -> Outcome {
    let m = model("flag_handoff");
    let fi = run(&m, Mode::FlowInsensitive);
    ensure!(
        fi.verified_count() == 0 && fi.verdicts.len() == 1,
        "fi verified {}/{}",
        fi.verified_count(),
        fi.verdicts.len()
    );
    let t1 = thread(&m, "thread1");
    let summary = fi.interference.summary(&m, t1).render(&m);
    ensure!(summary == "{flag:[1,1], x:[4,5]}", "thread1 interference {summary}");
    let start = Instant::now();
    let fsc = run(&m, Mode::Constrained);
    let took = start.elapsed();
    ensure!(
        fsc.all_verified() && fsc.verdicts.len() == 1,
        "fsc verified {}/{}",
        fsc.verified_count(),
        fsc.verdicts.len()
    );
    let t2 = thread(&m, "thread2");
    let round = fsc.last_round[t2.0 as usize];
    ensure!(
        round.combos == 6 && round.infeasible == 2,
        "thread2 combos {} infeasible {}",
        round.combos,
        round.infeasible
    );
    let mut a = Analyzer::new(&m, &AnalysisConfig::with_mode(Mode::Constrained));
    let set = a
        .compute_combinations(t2, &fsc.interference)
        .map_err(|e| e.to_string())?;
    let rejected: Vec<Vec<String>> = set.rejected.iter().map(|c| sources(&m, c)).collect();
    // flag from the final store, x from the first store or from the initial value.
    let want = pairs(&[["t1.6", "t1.4"], ["t1.6", "sd"]]);
    ensure!(rejected == want, "rejected {rejected:?}");
    ensure!(took < Duration::from_secs(1), "fsc took {took:?}");
    Ok(format!(
        "fi 0/1 with {summary}; fsc 1/1, rejected {rejected:?} in {took:.1?}"
    ))
}

fn two_readers() -> Outcome {
    let m = model("two_readers");
    let r = run(&m, Mode::FlowSensitive);
    let g1 = thread(&m, "g1");
    let mut a = Analyzer::new(&m, &AnalysisConfig::with_mode(Mode::FlowSensitive));
    let set = a.compute_combinations(g1, &r.interference).map_err(|e| e.to_string())?;
    let got: Vec<Vec<String>> = set.runs.iter().map(|c| sources(&m, c)).collect();
    let loads: Vec<String> = set.runs[0]
        .entries
        .iter()
        .map(|(l, _)| m.node_name(*l).to_string())
        .collect();
    ensure!(loads == ["t1.4", "t1.5"], "loads {loads:?}");
    let mut want = Vec::new();
    for b in ["t2.10", "sd"] {
        for a in ["t2.8", "t2.9", "sd"] {
            want.push(vec![a.to_string(), b.to_string()]);
        }
    }
    ensure!(got == want, "combinations {got:?}");
    ensure!(
        r.last_round[g1.0 as usize].combos == 6,
        "stats combos {}",
        r.last_round[g1.0 as usize].combos
    );
    Ok(format!("{} combinations over loads {loads:?}", got.len()))
}

fn loop_reader() -> Outcome {
    let m = model("loop_reader");
    let r = run(&m, Mode::FlowSensitive);
    let t1 = m.vars.iter().find(|v| v.name == "t1").expect("t1").id;
    let at = m.assertions[0].node;
    let got = r.env(at).get(t1);
    ensure!(got.to_string() == "[0,2]", "t1 = {got}");
    let fb = FactBase::build(&m);
    let load = node(&m, "t0.5");
    let ten = node(&m, "t2.14");
    ensure!(
        fb.must_happen_before(load, ten),
        "store of 10 not ordered after the loop load"
    );
    ensure!(
        !fb.must_happen_before(load, node(&m, "t1.10")) && !fb.must_happen_before(load, node(&m, "t1.11")),
        "stores of thread2 wrongly excluded"
    );
    ensure!(r.all_verified(), "assert(t1 <= 2) unproven in fs");
    Ok(format!("t1 = {got}; store of 10 excluded"))
}

fn param_slice() -> Outcome {
    let m = model("param_slice");
    let thrs: Vec<ThreadId> = m.threads.iter().filter(|t| t.routine == "thr").map(|t| t.id).collect();
    ensure!(thrs.len() == 2, "thr instances {}", thrs.len());
    let fsc = run(&m, Mode::Constrained);
    for t in &thrs {
        let c = fsc.last_round[t.0 as usize].combos;
        ensure!(c == 3, "thread {} has {c} combinations without pruning", t.0);
    }
    let fso = run(&m, Mode::Optimized);
    for t in &thrs {
        let runs = fso.last_round[t.0 as usize].runs;
        ensure!(runs == 1, "thread {} has {runs} runs with pruning", t.0);
    }
    let per_iter = fso.stats.runs as f64 / fso.stats.outer_iters as f64;
    ensure!(
        fso.stats.runs == u64::from(fso.stats.outer_iters) * m.threads.len() as u64,
        "{per_iter} runs per iteration"
    );
    ensure!(
        fso.all_verified() && fso.verdicts.len() == 2,
        "fso verified {}/{}",
        fso.verified_count(),
        fso.verdicts.len()
    );
    Ok("3 combinations per thr unpruned; 1 run per thread per iteration in fso; 2/2 verified".into())
}

fn two_clusters() -> Outcome {
    let m = model("two_clusters");
    let t2 = thread(&m, "thread2");
    let fs = run(&m, Mode::FlowSensitive);
    let combos = fs.last_round[t2.0 as usize].combos;
    ensure!(combos == 4, "unclustered combinations {combos}");
    let fso = run(&m, Mode::Optimized);
    let round = fso.last_round[t2.0 as usize];
    ensure!(
        round.clusters == 2 && round.runs == 2,
        "clusters {} runs {}",
        round.clusters,
        round.runs
    );
    for mode in [Mode::FlowSensitive, Mode::Constrained, Mode::Optimized] {
        let r = run(&m, mode);
        ensure!(
            r.all_verified() && r.verdicts.len() == 2,
            "{mode}: {}/{}",
            r.verified_count(),
            r.verdicts.len()
        );
    }
    Ok("4 combinations unclustered, 2 runs clustered, 2/2 verified in fs, fsc, fso".into())
}

fn derivation_golden() -> Outcome {
    let m = model("flag_handoff");
    let fb = FactBase::build(&m);
    let q: Vec<Tuple> = [("t2.9", "t1.6"), ("t2.11", "t1.4")]
        .iter()
        .map(|(l, s)| (node(&m, l).0, node(&m, s).0))
        .collect();
    let dump = fb.dump(&m, Some(&fb.derive(&q)));
    for line in [
        "ReadsFrom(t2.9, t1.6)",
        "ReadsFrom(t2.11, t1.4)",
        "MHB(t2.11, t1.5)",
        "MHB(t2.9, t1.6)",
    ] {
        ensure!(dump.lines().any(|l| l == line), "dump lacks {line}");
    }
    ensure!(!fb.check(&q), "derivation found no contradiction");
    ensure!(!fb.consistent(&q), "direct query found no contradiction");
    Ok("MHB(t2.11, t1.5) and MHB(t2.9, t1.6) derived; query infeasible".into())
}

const RANDOM_PROGRAMS: u64 = 400;

fn random_suite() -> Vec<String> {
    (0..RANDOM_PROGRAMS)
        .map(|s| gen::seeded(s, &GenConfig::default()))
        .collect()
}

fn soundness() -> Outcome {
    let start = Instant::now();
    let mut rejected = 0;
    let mut states = 0;
    let mut programs: Vec<String> = CORPUS
        .iter()
        .filter(|p| !p.source.contains("while"))
        .map(|p| p.source.to_string())
        .collect();
    let bundled = programs.len();
    programs.extend(random_suite());
    for (i, src) in programs.iter().enumerate() {
        let m = load(src).map_err(|e| format!("program {i}: {e}"))?;
        let ex = enumerate(&m, &OracleBounds::default()).map_err(|e| format!("program {i}: {e}"))?;
        for mode in Mode::ALL {
            let r = analyze(&m, &AnalysisConfig::with_mode(mode)).map_err(|e| format!("program {i} {mode}: {e}"))?;
            rejected += r.rejected_reads.len();
            let report = check_abstraction(&m, &ex, &r);
            states += report.states_checked;
            ensure!(report.is_clean(), "program {i} {mode}: {:?}\n{src}", report.violations);
        }
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(300), "suite took {took:?}");
    Ok(format!(
        "{bundled} bundled and {RANDOM_PROGRAMS} random programs x 4 modes clean; {states} states and {rejected} rejected read sets checked in {took:.1?}"
    ))
}

fn monotonicity() -> Outcome {
    let mut checked = 0;
    let mut sources: Vec<(String, String, bool)> = CORPUS
        .iter()
        .map(|p| (p.name.to_string(), p.source.to_string(), true))
        .collect();
    sources.extend(
        random_suite()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (format!("random{i}"), s, false)),
    );
    for (name, src, bundled) in &sources {
        let m = load(src).map_err(|e| e.to_string())?;
        let v: Vec<BTreeSet<NodeId>> = Mode::ALL.iter().map(|md| run(&m, *md).verified_set()).collect();
        ensure!(v[0].is_subset(&v[1]), "{name}: fi not within fs");
        ensure!(v[1].is_subset(&v[2]), "{name}: fs not within fsc");
        if *bundled {
            ensure!(v[3] == v[2], "{name}: fso differs from fsc");
            let expected = corpus::get(name).expect("bundled").expected();
            for (md, set) in Mode::ALL.iter().zip(&v) {
                let want = expected[md];
                let got = (set.len(), m.assertions.len());
                ensure!(got == want, "{name} {md}: {got:?}, sidecar says {want:?}");
            }
        }
        checked += 1;
    }
    Ok(format!(
        "{checked} programs; fso = fsc on all {} bundled programs",
        CORPUS.len()
    ))
}

fn scaling() -> Outcome {
    let start = Instant::now();
    let sizes = vec![2, 4, 8, 16, 32];
    let rows = bench::run(&BenchConfig {
        family: "watchdog".into(),
        sizes: sizes.clone(),
        modes: Mode::ALL.to_vec(),
        seed: 7,
        repeat: 9,
        base: AnalysisConfig::default(),
    })
    .map_err(|e| e.to_string())?;
    ensure!(rows.len() == sizes.len() * 4, "{} rows", rows.len());
    let time = |n: usize, mode: Mode| {
        rows.iter()
            .find(|r| r.threads == n && r.mode == mode)
            .expect("row")
            .time_ms
    };
    let verified = |n: usize, mode: Mode| {
        rows.iter()
            .find(|r| r.threads == n && r.mode == mode)
            .expect("row")
            .verified
    };
    let mut worst: f64 = 0.0;
    for &n in &sizes {
        let ratio = time(n, Mode::Optimized) / time(n, Mode::FlowInsensitive);
        worst = worst.max(ratio);
        ensure!(ratio <= 1.25, "size {n}: fso/fi = {ratio:.2}\n{}", bench::to_csv(&rows));
        ensure!(
            verified(n, Mode::FlowInsensitive) <= verified(n, Mode::FlowSensitive)
                && verified(n, Mode::FlowSensitive) <= verified(n, Mode::Constrained),
            "size {n}: verified counts decrease"
        );
    }
    let (o, c) = (time(32, Mode::Optimized), time(32, Mode::Constrained));
    ensure!(o <= c, "size 32: fso {o:.3} ms > fsc {c:.3} ms");
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(600), "harness took {took:?}");
    Ok(format!(
        "worst fso/fi = {worst:.2}; at 32 threads fso {o:.1} ms vs fsc {c:.1} ms; done in {took:.1?}"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "flag handoff verdicts, interference and rejected combinations",
            flag_handoff,
        ),
        ("two readers combination structure", two_readers),
        ("loop reader bound and must-happen-before exclusion", loop_reader),
        ("parameterized slice pruning", param_slice),
        ("independent clusters", two_clusters),
        ("overwrite derivation golden dump", derivation_golden),
        ("soundness against exhaustive interleavings", soundness),
        ("accuracy monotonicity across modes", monotonicity),
        ("lattice, transfer and fixpoint properties", props::all),
        ("scaling on the watchdog family", scaling),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
