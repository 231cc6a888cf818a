//! Bundled MTIR programs with their expected verdicts per mode.

use std::collections::BTreeMap;

use flowtm_core::Mode;

pub struct CorpusProgram {
    pub name: &'static str,
    pub source: &'static str,
    expect: &'static str,
}

macro_rules! entry {
    ($name:literal) => {
        CorpusProgram {
            name: $name,
            source: include_str!(concat!("../corpus/", $name, ".mtir")),
            expect: include_str!(concat!("../corpus/", $name, ".expect")),
        }
    };
}

pub const CORPUS: &[CorpusProgram] = &[
    entry!("flag_handoff"),
    entry!("loop_reader"),
    entry!("two_readers"),
    entry!("param_slice"),
    entry!("two_clusters"),
    entry!("increment_race"),
];

pub fn get(name: &str) -> Option<&'static CorpusProgram> {
    CORPUS.iter().find(|p| p.name == name)
}

impl CorpusProgram {
    /// `(verified, total)` per mode, as listed in the sidecar.
    pub fn expected(&self) -> BTreeMap<Mode, (usize, usize)> {
        self.expect
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let (mode, counts) = l.split_once(' ').expect("sidecar line `<mode> <v>/<n>`");
                let (v, n) = counts.trim().split_once('/').expect("sidecar count `<v>/<n>`");
                (
                    mode.parse().expect("sidecar mode"),
                    (v.parse().expect("verified count"), n.parse().expect("total count")),
                )
            })
            .collect()
    }
}
