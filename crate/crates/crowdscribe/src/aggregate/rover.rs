//! Word-transition-network voting: progressively aligns hypotheses into a
//! lattice of correspondence sets, then takes a per-slot plurality vote.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::textnorm::NormalizedText;

use super::AnnotatedItem;

/// Order in which hypotheses are folded into the network. Alignment is
/// order-sensitive, so this is part of the reproducibility contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentOrder {
    /// Dataset row order.
    Input,
    /// Sorted by worker id.
    WorkerId,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoverConfig {
    /// Additive bias (as a fraction of total votes) granted to the NULL
    /// token in each slot vote. At 0, NULL wins a slot only when strictly
    /// more frequent than every word.
    pub null_preference: f64,
    pub order: AlignmentOrder,
}

impl Default for RoverConfig {
    fn default() -> Self {
        RoverConfig {
            null_preference: 0.0,
            order: AlignmentOrder::Input,
        }
    }
}

/// One correspondence set: the tokens the aligned hypotheses put at this
/// position, plus how many hypotheses put nothing there.
#[derive(Debug, Clone, Default, Serialize)]
pub struct WtnSlot {
    pub token_counts: BTreeMap<String, usize>,
    pub null_count: usize,
}

impl WtnSlot {
    fn entries(&self) -> usize {
        self.token_counts.values().sum::<usize>() + self.null_count
    }

    fn contains(&self, token: &str) -> bool {
        self.token_counts.contains_key(token)
    }
}

/// ROVER's alignment lattice.
#[derive(Debug, Clone, Default, Serialize)]
pub struct WordTransitionNetwork {
    pub slots: Vec<WtnSlot>,
    pub n_hypotheses: usize,
}

#[derive(Clone, Copy)]
enum Step {
    /// Hypothesis token joins an existing slot (match or substitution).
    Diagonal,
    /// Hypothesis contributes NULL to an existing slot.
    SkipSlot,
    /// New slot created for a hypothesis token; earlier hypotheses get NULL.
    NewSlot,
}

impl WordTransitionNetwork {
    /// Progressively align each hypothesis into the network, in the order
    /// given. Every hypothesis contributes exactly one entry (token or
    /// NULL) per slot.
    pub fn build<S: AsRef<str>>(hypotheses: &[Vec<S>]) -> Self {
        let mut wtn = WordTransitionNetwork::default();
        for hyp in hypotheses {
            wtn.align(hyp);
        }
        wtn
    }

    fn align<S: AsRef<str>>(&mut self, hypothesis: &[S]) {
        if self.n_hypotheses == 0 {
            self.slots = hypothesis
                .iter()
                .map(|t| {
                    let mut slot = WtnSlot::default();
                    slot.token_counts.insert(t.as_ref().to_string(), 1);
                    slot
                })
                .collect();
            self.n_hypotheses = 1;
            return;
        }

        let ns = self.slots.len();
        let nt = hypothesis.len();
        let idx = |i: usize, j: usize| i * (nt + 1) + j;
        let mut dist = vec![0usize; (ns + 1) * (nt + 1)];
        // The NULL token is matchable like any other arc: skipping a slot
        // that already holds a NULL costs nothing.
        let skip_cost = |slot: &WtnSlot| -> usize { usize::from(slot.null_count == 0) };
        for i in 1..=ns {
            dist[idx(i, 0)] = dist[idx(i - 1, 0)] + skip_cost(&self.slots[i - 1]);
        }
        for j in 1..=nt {
            dist[idx(0, j)] = j;
        }
        for i in 1..=ns {
            let slot = &self.slots[i - 1];
            for j in 1..=nt {
                let diag = dist[idx(i - 1, j - 1)]
                    + usize::from(!slot.contains(hypothesis[j - 1].as_ref()));
                let skip = dist[idx(i - 1, j)] + skip_cost(slot);
                let ins = dist[idx(i, j - 1)] + 1;
                dist[idx(i, j)] = diag.min(skip).min(ins);
            }
        }

        // Deterministic backtrace: diagonal, then slot skip, then insertion.
        let mut steps = Vec::with_capacity(ns + nt);
        let (mut i, mut j) = (ns, nt);
        while i > 0 || j > 0 {
            let here = dist[idx(i, j)];
            if i > 0
                && j > 0
                && dist[idx(i - 1, j - 1)]
                    + usize::from(!self.slots[i - 1].contains(hypothesis[j - 1].as_ref()))
                    == here
            {
                steps.push(Step::Diagonal);
                i -= 1;
                j -= 1;
            } else if i > 0 && dist[idx(i - 1, j)] + skip_cost(&self.slots[i - 1]) == here {
                steps.push(Step::SkipSlot);
                i -= 1;
            } else {
                steps.push(Step::NewSlot);
                j -= 1;
            }
        }
        steps.reverse();

        let old = std::mem::take(&mut self.slots);
        let mut old_iter = old.into_iter();
        let mut tokens = hypothesis.iter();
        let mut slots = Vec::with_capacity(steps.len());
        for step in steps {
            match step {
                Step::Diagonal => {
                    let mut slot = old_iter.next().expect("backtrace consumes every slot");
                    let token = tokens.next().expect("backtrace consumes every token");
                    *slot
                        .token_counts
                        .entry(token.as_ref().to_string())
                        .or_insert(0) += 1;
                    slots.push(slot);
                }
                Step::SkipSlot => {
                    let mut slot = old_iter.next().expect("backtrace consumes every slot");
                    slot.null_count += 1;
                    slots.push(slot);
                }
                Step::NewSlot => {
                    let token = tokens.next().expect("backtrace consumes every token");
                    let mut slot = WtnSlot::default();
                    slot.token_counts.insert(token.as_ref().to_string(), 1);
                    slot.null_count = self.n_hypotheses;
                    slots.push(slot);
                }
            }
        }
        self.slots = slots;
        self.n_hypotheses += 1;
        debug_assert!(self.slots.iter().all(|s| s.entries() == self.n_hypotheses));
    }

    /// Plurality vote per slot. Word ties break lexicographically; NULL
    /// wins only when its (biased) share strictly exceeds the best word's.
    pub fn vote(&self, null_preference: f64) -> Vec<String> {
        let n = self.n_hypotheses.max(1) as f64;
        let mut out = Vec::new();
        for slot in &self.slots {
            let (token, count) = slot
                .token_counts
                .iter()
                .max_by(|(ta, ca), (tb, cb)| ca.cmp(cb).then(tb.cmp(ta)))
                .expect("slots always hold at least one token");
            let token_score = *count as f64 / n;
            let null_score = slot.null_count as f64 / n + null_preference;
            if null_score <= token_score {
                out.push(token.clone());
            }
        }
        out
    }
}

/// Aggregate one item's annotations by word-transition-network voting.
pub fn rover(item: &AnnotatedItem, config: &RoverConfig) -> Result<NormalizedText> {
    if item.annotations.is_empty() {
        return Err(crate::error::Error::contract(format!(
            "item {} has no annotations to aggregate",
            item.item_id
        )));
    }
    let mut order: Vec<usize> = (0..item.annotations.len()).collect();
    if config.order == AlignmentOrder::WorkerId {
        order.sort_by(|&a, &b| {
            item.annotations[a]
                .worker_id
                .cmp(&item.annotations[b].worker_id)
        });
    }
    let hypotheses: Vec<Vec<&str>> = order
        .iter()
        .map(|&i| {
            item.annotations[i]
                .text
                .tokens()
                .iter()
                .map(String::as_str)
                .collect()
        })
        .collect();
    let wtn = WordTransitionNetwork::build(&hypotheses);
    Ok(NormalizedText::from_tokens(
        wtn.vote(config.null_preference),
    ))
}
