use alloc::string::String;
use alloc::vec::Vec;

use crate::euler::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    NoViolationFound,
    Counterexample,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NoViolationFound => "NO_VIOLATION_FOUND",
            Verdict::Counterexample => "COUNTEREXAMPLE",
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::NoViolationFound
    }
}

impl core::fmt::Display for Verdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One `(δ, ᾱ)` cell of a stability grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeCell {
    pub delta: f64,
    pub alpha_bar: f64,
    pub p: f64,
    pub trials: usize,
    pub worst_excursion: f64,
    pub hit_rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbeStats {
    pub trials: usize,
    pub seeds: Vec<u64>,
    pub parameters: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub cells: Vec<ProbeCell>,
    /// Per start: first index after which the iterates stay in the target
    /// neighbourhood, `None` when the budget ran out first.
    pub hitting_times: Vec<Option<usize>>,
    pub skipped: usize,
}

impl ProbeStats {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn set_param(&mut self, name: &str, value: f64) {
        match self.parameters.iter_mut().find(|(k, _)| k == name) {
            Some(slot) => slot.1 = value,
            None => self.parameters.push((name.into(), value)),
        }
    }
}

/// Outcome of a falsification run. The verdict is a counterexample exactly
/// when a witness is attached.
#[derive(Clone, Debug)]
pub struct ProbeReport {
    verdict: Verdict,
    pub worst_margin: f64,
    witness: Option<Trajectory>,
    pub stats: ProbeStats,
}

impl ProbeReport {
    pub fn pass(worst_margin: f64, stats: ProbeStats) -> Self {
        ProbeReport {
            verdict: Verdict::NoViolationFound,
            worst_margin,
            witness: None,
            stats,
        }
    }

    pub fn fail(worst_margin: f64, witness: Trajectory, stats: ProbeStats) -> Self {
        ProbeReport {
            verdict: Verdict::Counterexample,
            worst_margin,
            witness: Some(witness),
            stats,
        }
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub fn witness(&self) -> Option<&Trajectory> {
        self.witness.as_ref()
    }
}
