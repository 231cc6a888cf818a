//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use flowtm_core::feasibility::FactBase;
use flowtm_core::frontend::load;
use flowtm_core::pdg::{DependenceGraph, SlicePlan};
use flowtm_core::tm::{analyze_with, Serial};
use flowtm_core::{AnalysisConfig, Mode};

use crate::report::Report;
use crate::runner::Parallel;
use crate::{bench, corpus};

pub const EXIT_VERIFIED: i32 = 0;
pub const EXIT_UNPROVEN: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "flowtm",
    version,
    about = "Thread-modular interval analysis of MTIR programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analyze a program and report assertion verdicts.
    Analyze(AnalyzeArgs),
    /// Time every mode on a generated program family; prints CSV.
    Bench(BenchArgs),
    /// List the bundled programs, or print one.
    Corpus { name: Option<String> },
}

#[derive(Args, Debug, Clone)]
pub struct Tuning {
    #[arg(long, default_value_t = 3)]
    pub widening_delay: u32,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
    pub outer_budget: u32,
    #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u64).range(1..))]
    pub combo_cap: u64,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    pub file: PathBuf,
    #[arg(long, default_value = "fsc", value_parser = parse_mode)]
    pub mode: Mode,
    #[command(flatten)]
    pub tuning: Tuning,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Include the final environment of every node.
    #[arg(long)]
    pub dump_envs: bool,
    /// Print the base happens-before facts to stderr.
    #[arg(long)]
    pub dump_facts: bool,
    /// Print the dependence graph and slices (DOT) to stderr.
    #[arg(long)]
    pub dump_pdg: bool,
    /// Worker threads for interpreter runs.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub parallel: u32,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value = "watchdog")]
    pub family: String,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_mode, default_value = "fi,fs,fsc,fso")]
    pub modes: Vec<Mode>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
        .map_err(|_| format!("unknown mode `{s}` (expected fi, fs, fsc or fso)"))
}

impl Tuning {
    pub fn config(&self, mode: Mode) -> AnalysisConfig {
        AnalysisConfig {
            widening_delay: self.widening_delay,
            outer_budget: self.outer_budget,
            combo_cap: self.combo_cap as usize,
            ..AnalysisConfig::with_mode(mode)
        }
    }
}

/// Runs the CLI on `args`, returning the process exit status.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_VERIFIED };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_INPUT
        }
    }
}

fn execute(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Analyze(a) => analyze_cmd(a, out, err),
        Command::Bench(b) => {
            let rows = bench::run(&bench::BenchConfig {
                family: b.family.clone(),
                sizes: b.sizes.clone(),
                modes: b.modes.clone(),
                seed: b.seed,
                repeat: b.repeat,
                base: b.tuning.config(Mode::FlowInsensitive),
            })?;
            out.write_all(bench::to_csv(&rows).as_bytes())?;
            Ok(EXIT_VERIFIED)
        }
        Command::Corpus { name } => {
            match name {
                None => {
                    for p in corpus::CORPUS {
                        writeln!(out, "{}", p.name)?;
                    }
                }
                Some(n) => {
                    let p = corpus::get(n).with_context(|| format!("no bundled program `{n}`"))?;
                    out.write_all(p.source.as_bytes())?;
                }
            }
            Ok(EXIT_VERIFIED)
        }
    }
}

fn analyze_cmd(a: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let text = std::fs::read_to_string(&a.file).with_context(|| format!("cannot read {}", a.file.display()))?;
    let model = load(&text).with_context(|| format!("{}", a.file.display()))?;
    let cfg = a.tuning.config(a.mode);
    if a.dump_facts {
        err.write_all(FactBase::build(&model).dump(&model, None).as_bytes())?;
    }
    if a.dump_pdg {
        let pdg = DependenceGraph::build(&model);
        let slices = SlicePlan::build(&pdg, &model);
        err.write_all(pdg.to_dot(&model, Some(&slices)).as_bytes())?;
    }
    let start = Instant::now();
    let result = if a.parallel > 1 {
        analyze_with(
            &model,
            &cfg,
            &Parallel {
                workers: a.parallel as usize,
            },
        )
    } else {
        analyze_with(&model, &cfg, &Serial)
    }?;
    let report = Report::new(&model, &result, start.elapsed(), a.dump_envs);
    let body = match a.format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
    };
    out.write_all(body.as_bytes())?;
    Ok(if report.all_verified() {
        EXIT_VERIFIED
    } else {
        EXIT_UNPROVEN
    })
}
