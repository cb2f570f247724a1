//! Per-move proposal and acceptance counters.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    SmallStep,
    LargeStep,
    ReplicaSwap,
    TemperingSwap,
    TechniqueChange,
    InversePerturbation,
    Independence,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub proposed: u64,
    pub accepted: u64,
    /// Proposals rejected because a right inverse was undefined.
    pub inversion_failures: u64,
    /// Sum of acceptance probabilities, for the expected acceptance rate.
    pub acceptance_sum: f64,
}

impl MoveStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn merge(&mut self, o: &MoveStats) {
        self.proposed += o.proposed;
        self.accepted += o.accepted;
        self.inversion_failures += o.inversion_failures;
        self.acceptance_sum += o.acceptance_sum;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub moves: BTreeMap<MoveKind, MoveStats>,
    /// Free-form counters, e.g. how often a technique change altered the path.
    pub counters: BTreeMap<String, u64>,
}

impl Diagnostics {
    pub fn record(&mut self, kind: MoveKind, acceptance: f64, accepted: bool) {
        let s = self.moves.entry(kind).or_default();
        s.proposed += 1;
        s.acceptance_sum += acceptance;
        if accepted {
            s.accepted += 1;
        }
    }

    pub fn record_inversion_failure(&mut self, kind: MoveKind) {
        let s = self.moves.entry(kind).or_default();
        s.proposed += 1;
        s.inversion_failures += 1;
    }

    pub fn bump(&mut self, name: &str, by: u64) {
        *self.counters.entry(name.to_string()).or_default() += by;
    }

    pub fn counter(&self, name: &str) -> u64 {
        self.counters.get(name).copied().unwrap_or(0)
    }

    pub fn stats(&self, kind: MoveKind) -> MoveStats {
        self.moves.get(&kind).copied().unwrap_or_default()
    }

    pub fn merge(&mut self, o: &Diagnostics) {
        for (k, v) in &o.moves {
            self.moves.entry(*k).or_default().merge(v);
        }
        for (k, v) in &o.counters {
            *self.counters.entry(k.clone()).or_default() += v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_adds_counts() {
        let mut a = Diagnostics::default();
        a.record(MoveKind::SmallStep, 0.5, true);
        a.record_inversion_failure(MoveKind::TemperingSwap);
        let mut b = Diagnostics::default();
        b.record(MoveKind::SmallStep, 0.25, false);
        b.bump("changed", 2);
        a.merge(&b);
        let s = a.stats(MoveKind::SmallStep);
        assert_eq!((s.proposed, s.accepted), (2, 1));
        assert_eq!(s.acceptance_rate(), 0.5);
        assert_eq!(a.stats(MoveKind::TemperingSwap).inversion_failures, 1);
        assert_eq!(a.counter("changed"), 2);
        let json = serde_json::to_string(&a).unwrap();
        let back: Diagnostics = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
