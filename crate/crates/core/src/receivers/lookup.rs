//! Precomputed policy table, the software analogue of a hard-coded FPGA lookup.
//!
//! Text format, one entry per line, sorted by stage, then mask, then previous:
//!
//! ```text
//! stage 1 eliminated * hypothesis 0
//! stage 5 eliminated 5 hypothesis 1
//! stage 6 eliminated 5 previous 1 hypothesis 3
//! ```
//!
//! `*` marks a static-prefix stage (any history). The `previous` field is only
//! present for the rotating policy, where the hypothesis depends on the
//! previous stage's hypothesis as well as on the eliminated set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::physics::StateIndex;

use super::{CycleRule, ReceiverConfig, StateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LookupEntry {
    pub stage: usize,
    /// `None` for static-prefix stages.
    pub eliminated: Option<StateSet>,
    /// Only set for the rotating policy.
    pub previous: Option<StateIndex>,
    pub hypothesis: StateIndex,
}

type Key = (usize, Option<StateSet>, Option<StateIndex>);

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LookupTable {
    entries: BTreeMap<Key, StateIndex>,
}

impl LookupTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = LookupEntry> + '_ {
        self.entries
            .iter()
            .map(|(&(stage, eliminated, previous), &hypothesis)| LookupEntry {
                stage,
                eliminated,
                previous,
                hypothesis,
            })
    }

    /// Hypothesis for a stage given the history summary, if the table has it.
    pub fn lookup(&self, stage: usize, eliminated: StateSet, previous: Option<StateIndex>) -> Option<StateIndex> {
        if let Some(&h) = self.entries.get(&(stage, None, None)) {
            return Some(h);
        }
        self.entries
            .get(&(stage, Some(eliminated), previous))
            .or_else(|| self.entries.get(&(stage, Some(eliminated), None)))
            .copied()
    }

    fn insert(&mut self, entry: LookupEntry) {
        self.entries
            .insert((entry.stage, entry.eliminated, entry.previous), entry.hypothesis);
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut table = LookupTable::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let entry = parse_line(line)
                .ok_or_else(|| Error::InvalidConfig(format!("lookup table line {}: cannot parse `{line}`", n + 1)))?;
            table.insert(entry);
        }
        Ok(table)
    }
}

fn parse_line(line: &str) -> Option<LookupEntry> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let state = |s: &str| s.parse::<u8>().ok().and_then(|m| StateIndex::new(m).ok());
    let (stage, mask, previous, hypothesis) = match tokens.as_slice() {
        ["stage", j, "eliminated", mask, "hypothesis", k] => (j, mask, None, k),
        ["stage", j, "eliminated", mask, "previous", p, "hypothesis", k] => (j, mask, Some(state(p)?), k),
        _ => return None,
    };
    let eliminated = match *mask {
        "*" => None,
        bits => Some(StateSet::from_bits(bits.parse().ok()?).ok()?),
    };
    Some(LookupEntry {
        stage: stage.parse().ok()?,
        eliminated,
        previous,
        hypothesis: state(hypothesis)?,
    })
}

impl fmt::Display for LookupTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in self.entries() {
            write!(f, "stage {} eliminated ", e.stage)?;
            match e.eliminated {
                Some(set) => write!(f, "{}", set.bits())?,
                None => write!(f, "*")?,
            }
            if let Some(p) = e.previous {
                write!(f, " previous {p}")?;
            }
            writeln!(f, " hypothesis {}", e.hypothesis)?;
        }
        Ok(())
    }
}

/// Tabulates the policy over every history summary reachable by some
/// outcome sequence. Histories with all four states eliminated are terminal
/// and have no entry.
pub fn build_lookup_table(config: &ReceiverConfig) -> Result<LookupTable> {
    config.validate()?;
    let mut table = LookupTable::default();
    let mut frontier: BTreeSet<(StateSet, Option<StateIndex>)> = BTreeSet::from([(StateSet::EMPTY, None)]);
    for stage in 1..=config.stages {
        let mut next = BTreeSet::new();
        for &(eliminated, previous) in &frontier {
            let Some(h) = config.hypothesis(stage, eliminated, previous) else {
                continue;
            };
            let entry = if stage <= config.static_prefix {
                LookupEntry {
                    stage,
                    eliminated: None,
                    previous: None,
                    hypothesis: h,
                }
            } else {
                let previous = match config.rule {
                    CycleRule::Rotate => previous,
                    CycleRule::RestartFromHead => None,
                };
                LookupEntry {
                    stage,
                    eliminated: Some(eliminated),
                    previous,
                    hypothesis: h,
                }
            };
            table.insert(entry);
            next.insert((eliminated, Some(h)));
            let clicked = eliminated.with(h);
            if !clicked.is_full() {
                next.insert((clicked, Some(h)));
            }
        }
        frontier = next;
    }
    Ok(table)
}
