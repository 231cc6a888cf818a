//! Analysis configuration.

use core::fmt;
use core::str::FromStr;

/// Which composition the thread-modular engine uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Every load reads the join of all interfering values.
    FlowInsensitive,
    /// One interpreter run per interference combination.
    FlowSensitive,
    /// Flow-sensitive with infeasible combinations filtered out.
    Constrained,
    /// Constrained plus slicing, pruning and clustering.
    Optimized,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::FlowInsensitive,
        Mode::FlowSensitive,
        Mode::Constrained,
        Mode::Optimized,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FlowInsensitive => "fi",
            Mode::FlowSensitive => "fs",
            Mode::Constrained => "fsc",
            Mode::Optimized => "fso",
        }
    }

    pub fn uses_feasibility(self) -> bool {
        matches!(self, Mode::Constrained | Mode::Optimized)
    }

    pub fn uses_pdg(self) -> bool {
        self == Mode::Optimized
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown mode `{0}` (expected fi, fs, fsc or fso)")]
pub struct UnknownMode(pub alloc::string::String);

impl FromStr for Mode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| UnknownMode(s.into()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisConfig {
    pub mode: Mode,
    /// Joins performed at a widening point before widening kicks in.
    pub widening_delay: u32,
    pub narrowing_passes: u32,
    pub outer_budget: u32,
    /// Per thread and outer iteration.
    pub combo_cap: usize,
    /// Node visits allowed in one sequential run.
    pub visit_cap: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            mode: Mode::Constrained,
            widening_delay: 3,
            narrowing_passes: 1,
            outer_budget: 64,
            combo_cap: 4096,
            visit_cap: 1_000_000,
        }
    }
}

impl AnalysisConfig {
    pub fn with_mode(mode: Mode) -> Self {
        AnalysisConfig {
            mode,
            ..AnalysisConfig::default()
        }
    }
}
