//! Chance-corrected inter-rater reliability (Krippendorff's alpha) over
//! textual responses with a pluggable distance, plus a seeded sampling
//! estimator for datasets where the exact computation is too slow.
//!
//! alpha = 1 - D_o/D_e, where D_o averages the difference function over
//! co-occurring response pairs within items and D_e over all response
//! pairs in the data. The difference function is the squared distance by
//! default; [`DiffMode::Plain`] switches to the raw distance.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::aggregate::AnnotatedItem;
use crate::error::{Error, Result};
use crate::metrics::levenshtein;
use crate::metrics::myers::{BitParallelPattern, MyersWork};

/// Built-in response distances for the sampling estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TextDistance {
    /// Character-level edit distance on the normalized text.
    LevChar,
    /// Word-level edit distance on the normalized tokens.
    LevWord,
}

/// How a raw distance enters the disagreement sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffMode {
    Squared,
    Plain,
}

impl DiffMode {
    fn apply(self, d: f64) -> f64 {
        match self {
            DiffMode::Squared => d * d,
            DiffMode::Plain => d,
        }
    }
}

/// Result of the sampling estimator.
#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    /// Mean alpha over non-degenerate samples.
    pub alpha: f64,
    pub n_samples: usize,
    pub sample_size: usize,
    pub seed: u64,
    /// Population standard deviation of the per-sample alphas.
    pub std_dev: f64,
    /// Samples skipped because their expected disagreement was zero.
    pub n_skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaSampleConfig {
    pub n_samples: usize,
    pub sample_size: usize,
    pub seed: u64,
    pub distance: TextDistance,
    pub mode: DiffMode,
    /// Upper bound for the precomputed pairwise-distance table; above it
    /// the estimator computes distances per sample instead.
    pub max_table_bytes: usize,
}

impl Default for AlphaSampleConfig {
    fn default() -> Self {
        AlphaSampleConfig {
            n_samples: 10_000,
            sample_size: 100,
            seed: 0,
            distance: TextDistance::LevChar,
            mode: DiffMode::Squared,
            max_table_bytes: 1_500_000_000,
        }
    }
}

/// Krippendorff's alpha over explicit units, with an arbitrary distance.
///
/// Units with fewer than two responses are unpairable and dropped. Errors
/// when nothing is pairable or when the expected disagreement is zero
/// (every response in the data identical).
pub fn krippendorff_alpha<S: AsRef<str>>(
    units: &[(String, Vec<S>)],
    distance: impl Fn(&str, &str) -> f64,
    mode: DiffMode,
) -> Result<f64> {
    // Intern responses so the distance runs once per distinct text pair.
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut texts: Vec<&str> = Vec::new();
    let mut unit_ids: Vec<Vec<u32>> = Vec::new();
    for (_, responses) in units {
        let mut u = Vec::with_capacity(responses.len());
        for r in responses {
            let next = ids.len() as u32;
            let id = *ids.entry(r.as_ref()).or_insert_with(|| {
                texts.push(r.as_ref());
                next
            });
            u.push(id);
        }
        unit_ids.push(u);
    }
    let mut memo: HashMap<(u32, u32), f64> = HashMap::new();
    let mut delta = |a: u32, b: u32| -> f64 {
        if a == b {
            return 0.0;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        *memo
            .entry(key)
            .or_insert_with(|| mode.apply(distance(texts[key.0 as usize], texts[key.1 as usize])))
    };
    match alpha_over_units(&unit_ids, &mut delta) {
        AlphaOutcome::Value(v) => Ok(v),
        AlphaOutcome::NoVariation => Err(Error::contract(
            "alpha undefined: all responses in the data are identical",
        )),
        AlphaOutcome::NothingPairable => Err(Error::contract(
            "alpha undefined: need at least one item with two or more responses",
        )),
    }
}

enum AlphaOutcome {
    Value(f64),
    /// Expected disagreement is zero.
    NoVariation,
    NothingPairable,
}

/// Core computation on interned response ids.
/// alpha = 1 - (n-1) * S_o / S_e with
///   S_o = sum over units of (within-unit pair differences) / (m_u - 1),
///   S_e = sum over all response pairs in the pool,
///   n   = number of pairable responses.
fn alpha_over_units(units: &[Vec<u32>], delta: &mut dyn FnMut(u32, u32) -> f64) -> AlphaOutcome {
    let mut n = 0usize;
    let mut s_o = 0.0f64;
    let mut pool: Vec<u32> = Vec::new();
    for unit in units {
        let m = unit.len();
        if m < 2 {
            continue;
        }
        n += m;
        pool.extend_from_slice(unit);
        let mut unit_sum = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                unit_sum += delta(unit[i], unit[j]);
            }
        }
        s_o += unit_sum / (m - 1) as f64;
    }
    if n == 0 {
        return AlphaOutcome::NothingPairable;
    }

    // All-pairs sum over the pool, grouped by distinct text id.
    pool.sort_unstable();
    let mut groups: Vec<(u32, usize)> = Vec::new();
    for &id in &pool {
        match groups.last_mut() {
            Some((g, c)) if *g == id => *c += 1,
            _ => groups.push((id, 1)),
        }
    }
    let mut s_e = 0.0f64;
    for i in 0..groups.len() {
        for j in (i + 1)..groups.len() {
            let d = delta(groups[i].0, groups[j].0);
            s_e += (groups[i].1 * groups[j].1) as f64 * d;
        }
    }
    if s_e == 0.0 {
        return AlphaOutcome::NoVariation;
    }
    AlphaOutcome::Value(1.0 - (n - 1) as f64 * s_o / s_e)
}

/// Interned dataset: one symbol sequence per distinct response text.
struct InternedDataset {
    /// Per item, the text id of each response.
    units: Vec<Vec<u32>>,
    /// Distinct texts as symbol-id sequences (chars or tokens).
    seqs: Vec<Vec<u32>>,
    alphabet_size: usize,
}

fn intern_dataset(items: &[AnnotatedItem], distance: TextDistance) -> InternedDataset {
    let mut text_ids: HashMap<String, u32> = HashMap::new();
    let mut uniques: Vec<String> = Vec::new();
    let units = items
        .iter()
        .map(|item| {
            item.annotations
                .iter()
                .map(|ann| {
                    let joined = ann.text.joined();
                    let next = text_ids.len() as u32;
                    *text_ids.entry(joined.clone()).or_insert_with(|| {
                        uniques.push(joined);
                        next
                    })
                })
                .collect()
        })
        .collect();

    let mut symbols: HashMap<String, u32> = HashMap::new();
    let mut char_symbols: HashMap<char, u32> = HashMap::new();
    let seqs = uniques
        .iter()
        .map(|text| match distance {
            TextDistance::LevChar => text
                .chars()
                .map(|c| {
                    let next = char_symbols.len() as u32;
                    *char_symbols.entry(c).or_insert(next)
                })
                .collect(),
            TextDistance::LevWord => text
                .split_whitespace()
                .map(|tok| {
                    let next = symbols.len() as u32;
                    *symbols.entry(tok.to_string()).or_insert(next)
                })
                .collect(),
        })
        .collect();
    let alphabet_size = match distance {
        TextDistance::LevChar => char_symbols.len(),
        TextDistance::LevWord => symbols.len(),
    }
    .max(1);
    InternedDataset {
        units,
        seqs,
        alphabet_size,
    }
}

fn seq_distance(a: &[u32], b: &[u32], distance: TextDistance, work: &mut MyersWork) -> usize {
    match distance {
        TextDistance::LevChar => {
            // Alphabet size only needs to cover the symbols actually present.
            let max_sym = a
                .iter()
                .chain(b)
                .copied()
                .max()
                .map_or(0, |m| m as usize + 1);
            BitParallelPattern::new(a, max_sym.max(1)).distance_with(b, work)
        }
        TextDistance::LevWord => levenshtein(a, b),
    }
}

/// Flat upper-triangular pairwise distance table over distinct texts.
struct PairTable {
    n: usize,
    data: Vec<u16>,
}

impl PairTable {
    fn bytes_needed(n: usize) -> usize {
        n.saturating_mul(n.saturating_sub(1)) / 2 * 2
    }

    fn build(ds: &InternedDataset, distance: TextDistance) -> PairTable {
        let n = ds.seqs.len();
        let total = n * n.saturating_sub(1) / 2;
        let mut data = vec![0u16; total];

        // Carve the triangle into per-row slices so rows fill in parallel.
        let mut rows: Vec<(usize, &mut [u16])> = Vec::with_capacity(n);
        let mut rest = data.as_mut_slice();
        for i in 0..n.saturating_sub(1) {
            let (head, tail) = rest.split_at_mut(n - 1 - i);
            rows.push((i, head));
            rest = tail;
        }
        rows.into_par_iter().for_each(|(i, row)| {
            let mut work = MyersWork::default();
            match distance {
                TextDistance::LevChar => {
                    let pattern = BitParallelPattern::new(&ds.seqs[i], ds.alphabet_size);
                    for (k, slot) in row.iter_mut().enumerate() {
                        let d = pattern.distance_with(&ds.seqs[i + 1 + k], &mut work);
                        *slot = d.min(u16::MAX as usize) as u16;
                    }
                }
                TextDistance::LevWord => {
                    for (k, slot) in row.iter_mut().enumerate() {
                        let d = levenshtein(&ds.seqs[i], &ds.seqs[i + 1 + k]);
                        *slot = d.min(u16::MAX as usize) as u16;
                    }
                }
            }
        });
        PairTable { n, data }
    }

    #[inline]
    fn get(&self, a: u32, b: u32) -> f64 {
        if a == b {
            return 0.0;
        }
        let (i, j) = if a < b {
            (a as usize, b as usize)
        } else {
            (b as usize, a as usize)
        };
        let idx = i * self.n - i * (i + 1) / 2 + (j - i - 1);
        f64::from(self.data[idx])
    }
}

fn sample_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 of the (seed, sample index) pair; decorrelates the
    // per-sample streams so samples can run in parallel.
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sampling estimator: repeatedly draw `sample_size` distinct items,
/// compute alpha over their responses, and report mean and standard
/// deviation. Deterministic given the seed; samples run in parallel with
/// per-sample derived seeds.
pub fn alpha_sampled(
    items: &[AnnotatedItem],
    config: &AlphaSampleConfig,
) -> Result<AgreementReport> {
    if config.n_samples == 0 {
        return Err(Error::contract("n_samples must be positive"));
    }
    if items.len() < config.sample_size {
        return Err(Error::contract(format!(
            "dataset has {} items, fewer than the sample size {}",
            items.len(),
            config.sample_size
        )));
    }
    let ds = intern_dataset(items, config.distance);
    let table = if PairTable::bytes_needed(ds.seqs.len()) <= config.max_table_bytes {
        Some(PairTable::build(&ds, config.distance))
    } else {
        None
    };

    let alphas: Vec<Option<f64>> = (0..config.n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(config.seed, s));
            let picked = rand::seq::index::sample(&mut rng, items.len(), config.sample_size);
            let units: Vec<Vec<u32>> = picked.iter().map(|i| ds.units[i].clone()).collect();
            let outcome = match &table {
                Some(t) => {
                    let mut delta = |a: u32, b: u32| config.mode.apply(t.get(a, b));
                    alpha_over_units(&units, &mut delta)
                }
                None => {
                    let mut memo: HashMap<(u32, u32), f64> = HashMap::new();
                    let mut work = MyersWork::default();
                    let mut delta = |a: u32, b: u32| -> f64 {
                        if a == b {
                            return 0.0;
                        }
                        let key = if a < b { (a, b) } else { (b, a) };
                        *memo.entry(key).or_insert_with(|| {
                            let d = seq_distance(
                                &ds.seqs[key.0 as usize],
                                &ds.seqs[key.1 as usize],
                                config.distance,
                                &mut work,
                            );
                            config.mode.apply(d as f64)
                        })
                    };
                    alpha_over_units(&units, &mut delta)
                }
            };
            match outcome {
                AlphaOutcome::Value(v) => Some(v),
                _ => None,
            }
        })
        .collect();

    let valid: Vec<f64> = alphas.iter().copied().flatten().collect();
    let n_skipped = config.n_samples - valid.len();
    if valid.is_empty() {
        return Err(Error::contract("alpha undefined in every sample"));
    }
    let mean = valid.iter().sum::<f64>() / valid.len() as f64;
    let var = valid.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / valid.len() as f64;
    Ok(AgreementReport {
        alpha: mean,
        n_samples: config.n_samples,
        sample_size: config.sample_size,
        seed: config.seed,
        std_dev: var.sqrt(),
        n_skipped,
    })
}

/// Convenience view of a dataset as (item id, response texts) units.
pub fn alpha_units(items: &[AnnotatedItem]) -> Vec<(String, Vec<String>)> {
    items
        .iter()
        .map(|item| {
            (
                item.item_id.to_string(),
                item.annotations.iter().map(|a| a.text.joined()).collect(),
            )
        })
        .collect()
}
