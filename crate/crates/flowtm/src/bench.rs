//! Scaling harness over a parametric program family.

use std::time::{Duration, Instant};

use anyhow::{bail, Result};
use flowtm_core::frontend::load;
use flowtm_core::tm::analyze;
use flowtm_core::{AnalysisConfig, Mode};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const FAMILIES: &[&str] = &["watchdog"];

/// Producer/consumer pairs handing off a value through a ready flag, all
/// bumping a shared `ticks` counter; producers also run a watchdog loop
/// that resets it. `threads` is rounded up to an even number.
pub fn watchdog(threads: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ threads as u64);
    let pairs = threads.div_ceil(2).max(1);
    let mut src = String::from("int ticks = 0;\n");
    for k in 0..pairs {
        src += &format!("int data{k} = 0;\nbool ready{k} = false;\n");
    }
    let mut creates = Vec::new();
    for k in 0..pairs {
        let c = rng.gen_range(1..=9);
        let limit = rng.gen_range(50..=150);
        let bump = "int t = ticks;\n  ticks = t + 1;";
        let publish = format!("data{k} = {c};\n  ready{k} = true;");
        let (first, second) = if rng.gen_bool(0.5) {
            (bump.to_string(), publish)
        } else {
            (publish, bump.to_string())
        };
        src += &format!(
            "thread producer{k}() {{\n  {first}\n  {second}\n  while (*) {{\n    int w = ticks;\n    if (w > {limit}) {{ ticks = 0; }}\n  }}\n}}\n"
        );
        src += &format!(
            "thread consumer{k}() {{\n  int t = ticks;\n  ticks = t + 1;\n  bool r = ready{k};\n  if (r) {{\n    int d = data{k};\n    assert(d == {c});\n  }}\n}}\n"
        );
        creates.push(format!("create(producer{k});"));
        creates.push(format!("create(consumer{k});"));
    }
    creates.shuffle(&mut rng);
    src += &format!("thread main() {{\n  {}\n}}\n", creates.join("\n  "));
    src
}

pub fn family(name: &str, threads: usize, seed: u64) -> Result<String> {
    match name {
        "watchdog" => Ok(watchdog(threads, seed)),
        _ => bail!("unknown generator `{name}` (known: {})", FAMILIES.join(", ")),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub threads: usize,
    pub mode: Mode,
    pub time_ms: f64,
    pub verified: usize,
    pub total: usize,
}

pub struct BenchConfig {
    pub family: String,
    pub sizes: Vec<usize>,
    pub modes: Vec<Mode>,
    pub seed: u64,
    /// Timed repetitions; the fastest is reported.
    pub repeat: usize,
    pub base: AnalysisConfig,
}

pub fn run(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let src = family(&cfg.family, n, cfg.seed)?;
        let model = load(&src)?;
        for &mode in &cfg.modes {
            let acfg = AnalysisConfig {
                mode,
                ..cfg.base.clone()
            };
            let mut best = Duration::MAX;
            let mut verified = 0;
            let mut total = 0;
            for _ in 0..cfg.repeat.max(1) {
                let start = Instant::now();
                let r = analyze(&model, &acfg)?;
                best = best.min(start.elapsed());
                verified = r.verified_count();
                total = r.verdicts.len();
            }
            rows.push(BenchRow {
                threads: n,
                mode,
                time_ms: best.as_secs_f64() * 1e3,
                verified,
                total,
            });
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("threads,mode,time_ms,verified,total\n");
    for r in rows {
        out += &format!("{},{},{:.3},{},{}\n", r.threads, r.mode, r.time_ms, r.verified, r.total);
    }
    out
}
