//! Seeded random MTIR programs for soundness testing.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct GenConfig {
    /// Threads created by `main`.
    pub max_workers: usize,
    /// Statements per thread, counting declarations and nested statements.
    pub max_stmts: usize,
    /// Global reads per thread; bounds the interference combinations.
    pub max_global_reads: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_workers: 2,
            max_stmts: 6,
            max_global_reads: 3,
        }
    }
}

const LOCALS: [&str; 2] = ["a", "b"];
const GLOBALS: [&str; 2] = ["x", "y"];
const OPS: [&str; 12] = ["+", "-", "*", "/", "<", "<=", ">", ">=", "==", "!=", "&&", "||"];

struct Body<'r, R> {
    rng: &'r mut R,
    reads_left: usize,
    out: Vec<String>,
}

impl<R: Rng> Body<'_, R> {
    fn local_expr(&mut self, depth: u32, nondet: bool) -> String {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return match self.rng.gen_range(0..10) {
                0..=3 => self.rng.gen_range(-3..=3i64).to_string(),
                4 => ["true", "false"].choose(self.rng).unwrap().to_string(),
                5 if nondet => "*".into(),
                _ => LOCALS.choose(self.rng).unwrap().to_string(),
            };
        }
        if self.rng.gen_bool(0.2) {
            return format!("!({})", self.local_expr(depth - 1, nondet));
        }
        let op = OPS.choose(self.rng).unwrap();
        let l = self.local_expr(depth - 1, nondet);
        let r = self.local_expr(depth - 1, nondet);
        format!("({l} {op} {r})")
    }

    /// An expression over the locals that reads at most one global.
    fn expr(&mut self, nondet: bool) -> String {
        let e = self.local_expr(2, nondet);
        if self.reads_left > 0 && self.rng.gen_bool(0.5) {
            self.reads_left -= 1;
            let op = OPS.choose(self.rng).unwrap();
            let g = GLOBALS.choose(self.rng).unwrap();
            format!("({e} {op} {g})")
        } else {
            e
        }
    }

    fn leaf(&mut self) -> String {
        if self.rng.gen_ratio(1, 5) {
            format!("assert({});", self.expr(false))
        } else {
            let target = *LOCALS
                .iter()
                .chain(&GLOBALS)
                .collect::<Vec<_>>()
                .choose(self.rng)
                .unwrap();
            format!("{target} = {};", self.expr(true))
        }
    }

    /// Appends statements until `budget` is used up.
    fn fill(&mut self, mut budget: usize) {
        while budget > 0 {
            if budget >= 2 && self.rng.gen_ratio(1, 3) {
                let cond = self.expr(false);
                let then = self.leaf();
                if budget >= 3 && self.rng.gen_bool(0.5) {
                    let other = self.leaf();
                    self.out.push(format!("if ({cond}) {{ {then} }} else {{ {other} }}"));
                    budget -= 3;
                } else {
                    self.out.push(format!("if ({cond}) {{ {then} }}"));
                    budget -= 2;
                }
            } else {
                let s = self.leaf();
                self.out.push(s);
                budget -= 1;
            }
        }
    }
}

/// A loop-free program: `main` plus up to `cfg.max_workers` created threads
/// over globals `x` and `y`.
pub fn program(rng: &mut impl Rng, cfg: &GenConfig) -> String {
    let workers = rng.gen_range(0..=cfg.max_workers);
    let join = rng.gen_bool(0.5);
    let decls = "int a = 0; int b = 0;";
    let mut src = format!(
        "int x = {};\nint y = {};\n",
        rng.gen_range(-1..=1),
        rng.gen_range(-1..=1)
    );
    let names: Vec<String> = (1..=workers).map(|i| format!("w{i}")).collect();
    for name in &names {
        let budget = rng.gen_range(1..=cfg.max_stmts - 2);
        let mut body = Body {
            rng: &mut *rng,
            reads_left: cfg.max_global_reads,
            out: Vec::new(),
        };
        body.fill(budget);
        src += &format!("thread {name}() {{\n  {decls}\n  {}\n}}\n", body.out.join("\n  "));
    }
    let fixed = 2 + workers * if join { 2 } else { 1 };
    let budget = cfg.max_stmts.saturating_sub(fixed);
    let budget = rng.gen_range(0..=budget);
    let mut body = Body {
        rng: &mut *rng,
        reads_left: cfg.max_global_reads,
        out: Vec::new(),
    };
    body.fill(budget);
    let mut main: Vec<String> = names.iter().map(|n| format!("create({n});")).collect();
    main.extend(body.out);
    if join {
        main.extend(names.iter().map(|n| format!("join({n});")));
    }
    src += &format!("thread main() {{\n  {decls}\n  {}\n}}\n", main.join("\n  "));
    src
}

pub fn seeded(seed: u64, cfg: &GenConfig) -> String {
    program(&mut ChaCha8Rng::seed_from_u64(seed), cfg)
}
