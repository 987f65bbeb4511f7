//! Aggregation of multiple noisy transcriptions of one recording into a
//! single output: random and oracle selection, word-transition-network
//! voting, and reliability-weighted embedding methods.

mod rasa;
mod rover;

pub use rasa::{
    cosine_distance, default_embed, hrrasa, rasa, Embedder, FileEmbedder, HashedNgramEmbedder,
    RasaConfig, ReliabilityState,
};
pub use rover::{rover, AlignmentOrder, RoverConfig, WordTransitionNetwork, WtnSlot};

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::wer;
use crate::textnorm::NormalizedText;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(String);

impl ItemId {
    pub fn new(id: impl Into<String>) -> Self {
        ItemId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        ItemId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorkerId(String);

impl WorkerId {
    pub fn new(id: impl Into<String>) -> Self {
        WorkerId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for WorkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for WorkerId {
    fn from(s: &str) -> Self {
        WorkerId(s.to_string())
    }
}

/// A single worker response for one recording task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub worker_id: WorkerId,
    pub text: NormalizedText,
    pub duration_seconds: Option<f64>,
    pub is_golden: bool,
}

/// One recording task: optional ground truth plus its worker annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedItem {
    pub item_id: ItemId,
    pub ground_truth: Option<NormalizedText>,
    pub annotations: Vec<Annotation>,
}

impl AnnotatedItem {
    pub fn new(item_id: ItemId) -> Self {
        AnnotatedItem {
            item_id,
            ground_truth: None,
            annotations: Vec::new(),
        }
    }

    /// Checks the worker-distinctness invariant and that at least one
    /// annotation is present.
    pub fn validate(&self) -> Result<()> {
        if self.annotations.is_empty() {
            return Err(Error::contract(format!(
                "item {} has no annotations",
                self.item_id
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for ann in &self.annotations {
            if !seen.insert(&ann.worker_id) {
                return Err(Error::contract(format!(
                    "item {} has duplicate annotations from worker {}",
                    self.item_id, ann.worker_id
                )));
            }
        }
        Ok(())
    }

    fn require_annotations(&self) -> Result<()> {
        if self.annotations.is_empty() {
            Err(Error::contract(format!(
                "item {} has no annotations to aggregate",
                self.item_id
            )))
        } else {
            Ok(())
        }
    }
}

/// Pick one annotation uniformly at random; deterministic given the seed.
pub fn aggregate_random(item: &AnnotatedItem, seed: u64) -> Result<NormalizedText> {
    item.require_annotations()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = rng.gen_range(0..item.annotations.len());
    Ok(item.annotations[idx].text.clone())
}

/// Random selection across a whole dataset from a single seeded stream,
/// drawing one choice per item in input order.
pub fn aggregate_random_all(
    items: &[AnnotatedItem],
    seed: u64,
) -> Result<BTreeMap<ItemId, NormalizedText>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outputs = BTreeMap::new();
    for item in items {
        item.require_annotations()?;
        let idx = rng.gen_range(0..item.annotations.len());
        outputs.insert(item.item_id.clone(), item.annotations[idx].text.clone());
    }
    Ok(outputs)
}

/// Select the annotation with minimal WER against the ground truth; ties go
/// to the earliest annotation in input order.
pub fn aggregate_oracle(item: &AnnotatedItem) -> Result<NormalizedText> {
    item.require_annotations()?;
    let truth = item.ground_truth.as_ref().ok_or_else(|| {
        Error::contract(format!(
            "item {} has no ground truth for oracle",
            item.item_id
        ))
    })?;
    let mut best: Option<(f64, &Annotation)> = None;
    for ann in &item.annotations {
        let score = wer(truth, &ann.text).value;
        match best {
            Some((b, _)) if score >= b => {}
            _ => best = Some((score, ann)),
        }
    }
    Ok(best.expect("non-empty annotations").1.text.clone())
}

/// Per-item WER of one method's outputs plus the unweighted mean.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub method: String,
    pub per_item: Vec<(ItemId, f64)>,
    pub mean_wer: f64,
    pub n_items: usize,
}

/// Evaluate aggregated outputs against item ground truths.
///
/// Outputs and items must cover exactly the same ids, and every item needs
/// a ground truth.
pub fn evaluate(
    outputs: &BTreeMap<ItemId, NormalizedText>,
    items: &[AnnotatedItem],
    method: &str,
) -> Result<EvalReport> {
    let by_id: BTreeMap<&ItemId, &AnnotatedItem> =
        items.iter().map(|it| (&it.item_id, it)).collect();
    for id in outputs.keys() {
        if !by_id.contains_key(id) {
            return Err(Error::contract(format!("output for unknown item {id}")));
        }
    }
    let mut per_item = Vec::with_capacity(items.len());
    let mut sum = 0.0;
    for item in items {
        let output = outputs
            .get(&item.item_id)
            .ok_or_else(|| Error::contract(format!("no output for item {}", item.item_id)))?;
        let truth = item
            .ground_truth
            .as_ref()
            .ok_or_else(|| Error::contract(format!("item {} has no ground truth", item.item_id)))?;
        let value = wer(truth, output).value;
        sum += value;
        per_item.push((item.item_id.clone(), value));
    }
    let n_items = per_item.len();
    Ok(EvalReport {
        method: method.to_string(),
        per_item,
        mean_wer: if n_items == 0 {
            0.0
        } else {
            sum / n_items as f64
        },
        n_items,
    })
}
