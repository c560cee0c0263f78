//! Sequential conditionals of a vector of indicators, given its exact law.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

/// Conditional of indicator `t` given one history of the earlier ones.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HistoryRecord {
    pub history: Vec<bool>,
    pub probability: f64,
    pub conditional: f64,
}

/// All conditionals at position `t` (1-based).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainStep {
    pub t: usize,
    pub member: usize,
    pub marginal: f64,
    /// Minimum over histories of positive probability; `+inf` if there are
    /// none.
    pub min_conditional: f64,
    pub histories: Vec<HistoryRecord>,
    /// Histories of probability zero; these are skipped.
    pub unreachable_histories: u64,
}

/// Given the law of a packed indicator vector (bit `t` is indicator `t`),
/// returns for every `t` the law of bit `t` given bits `0..t`. Requires
/// `members.len() <= 63`.
pub fn conditional_chain(law: &[(u64, f64)], members: &[usize]) -> Vec<ChainStep> {
    debug_assert!(members.len() <= 63);
    let mut steps = Vec::with_capacity(members.len());
    for (t, &member) in members.iter().enumerate() {
        let prefix = (1u64 << t) - 1;
        let mut by_history: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
        let mut marginal = 0.0;
        for &(mask, p) in law {
            if p <= 0.0 {
                continue;
            }
            let entry = by_history.entry(mask & prefix).or_insert((0.0, 0.0));
            entry.0 += p;
            if (mask >> t) & 1 == 1 {
                entry.1 += p;
                marginal += p;
            }
        }
        let histories: Vec<HistoryRecord> = by_history
            .iter()
            .map(|(&h, &(mass, hit))| HistoryRecord {
                history: (0..t).map(|s| (h >> s) & 1 == 1).collect(),
                probability: mass,
                conditional: hit / mass,
            })
            .collect();
        let min_conditional = histories.iter().map(|h| h.conditional).fold(f64::INFINITY, f64::min);
        let unreachable_histories = (1u64 << t) - histories.len() as u64;
        steps.push(ChainStep { t: t + 1, member, marginal, min_conditional, histories, unreachable_histories });
    }
    steps
}
