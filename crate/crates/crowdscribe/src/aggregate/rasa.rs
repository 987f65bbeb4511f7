//! Reliability-weighted embedding aggregation, with and without local
//! (per-response) reliabilities.
//!
//! The embedding backend is abstracted behind [`Embedder`] so the built-in
//! hashed n-gram encoder can be swapped for externally computed vectors.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::gleu;
use crate::textnorm::NormalizedText;

use super::{AnnotatedItem, ItemId, WorkerId};

/// Deterministic text-to-vector encoder. Identical texts must yield
/// identical vectors, and only empty text may map to the zero vector.
pub trait Embedder: Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &NormalizedText) -> Result<Vec<f64>>;
}

/// Hashed character-3-gram count vector, L2-normalized. A dependency-free
/// stand-in for a neural sentence encoder, adequate for ranking near-
/// duplicate transcriptions by surface overlap.
#[derive(Debug, Clone)]
pub struct HashedNgramEmbedder {
    dimension: usize,
}

impl HashedNgramEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashedNgramEmbedder { dimension }
    }
}

impl Default for HashedNgramEmbedder {
    fn default() -> Self {
        HashedNgramEmbedder::new(256)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

impl Embedder for HashedNgramEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &NormalizedText) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dimension];
        let joined = text.joined();
        let chars: Vec<char> = joined.chars().collect();
        if chars.is_empty() {
            return Ok(v);
        }
        let mut buf = String::new();
        let bump = |gram: &str, v: &mut Vec<f64>| {
            let slot = (fnv1a(gram.as_bytes()) % self.dimension as u64) as usize;
            v[slot] += 1.0;
        };
        if chars.len() < 3 {
            bump(&joined, &mut v);
        } else {
            for w in chars.windows(3) {
                buf.clear();
                buf.extend(w);
                bump(&buf, &mut v);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        Ok(v)
    }
}

/// Embed with the default hashed-3-gram encoder.
pub fn default_embed(text: &NormalizedText, dimension: usize) -> Vec<f64> {
    HashedNgramEmbedder::new(dimension)
        .embed(text)
        .expect("hashed embedder is infallible")
}

/// Stable key for external embedding tables: FNV-1a 64 of the canonical
/// joined form, lower-case hex.
pub fn text_hash(text: &NormalizedText) -> String {
    format!("{:016x}", fnv1a(text.joined().as_bytes()))
}

/// Embeddings loaded from a TSV table with columns (text_hash, dim,
/// v1..vdim). Lookups error on missing entries so silent fallbacks cannot
/// skew an evaluation.
pub struct FileEmbedder {
    dimension: usize,
    table: HashMap<String, Vec<f64>>,
}

impl FileEmbedder {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut table = HashMap::new();
        let mut dimension = None;
        for (lineno, line) in raw.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let parse_err = |reason: String| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                reason,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 3 {
                return Err(parse_err(
                    "expected at least 3 tab-separated columns".into(),
                ));
            }
            let dim: usize = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad dimension `{}`", fields[1])))?;
            if fields.len() != 2 + dim {
                return Err(parse_err(format!(
                    "expected {} vector components, found {}",
                    dim,
                    fields.len() - 2
                )));
            }
            match dimension {
                None => dimension = Some(dim),
                Some(d) if d != dim => {
                    return Err(parse_err(format!(
                        "dimension {dim} conflicts with earlier {d}"
                    )))
                }
                _ => {}
            }
            let mut vector = Vec::with_capacity(dim);
            for f in &fields[2..] {
                vector.push(
                    f.parse::<f64>()
                        .map_err(|_| parse_err(format!("bad component `{f}`")))?,
                );
            }
            table.insert(fields[0].to_string(), vector);
        }
        let dimension = dimension.ok_or_else(|| {
            Error::contract(format!("{}: empty embeddings table", path.display()))
        })?;
        Ok(FileEmbedder { dimension, table })
    }
}

impl Embedder for FileEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &NormalizedText) -> Result<Vec<f64>> {
        let key = text_hash(text);
        self.table.get(&key).cloned().ok_or_else(|| {
            Error::contract(format!(
                "no embedding for text hash {key} (`{}`)",
                text.joined()
            ))
        })
    }
}

fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// 1 − cosine similarity; distance to a zero vector is defined as 1.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - cosine_similarity(a, b)
}

/// Worker trust weights and per-response weights from the last run.
#[derive(Debug, Clone, Serialize)]
pub struct ReliabilityState {
    /// Per-worker weights; normalized to sum to 1.
    pub global: BTreeMap<WorkerId, f64>,
    /// Per-response similarity weights within one item. Empty unless local
    /// reliabilities were used.
    pub local: BTreeMap<(ItemId, WorkerId), f64>,
    /// Update rounds actually executed.
    pub iterations: usize,
    /// Items whose responses were all empty; their output fell back to the
    /// first annotation.
    pub degenerate_items: Vec<ItemId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RasaConfig {
    pub max_iter: usize,
    /// Stop once the largest per-worker reliability change drops below this.
    pub tol: f64,
    /// Guards the inverse-distance update against division by zero.
    pub epsilon: f64,
}

impl Default for RasaConfig {
    fn default() -> Self {
        RasaConfig {
            max_iter: 50,
            tol: 1e-6,
            epsilon: 1e-9,
        }
    }
}

struct Prepared {
    /// Per item: (annotation index range start, worker ids, embeddings).
    items: Vec<PreparedItem>,
    workers: Vec<WorkerId>,
    worker_index: BTreeMap<WorkerId, usize>,
}

struct PreparedItem {
    workers: Vec<usize>,
    embeddings: Vec<Vec<f64>>,
    /// Extra per-response factor; all 1 for the global-only variant.
    local: Vec<f64>,
    all_empty: bool,
}

fn prepare(items: &[AnnotatedItem], embedder: &dyn Embedder, with_local: bool) -> Result<Prepared> {
    let mut worker_index: BTreeMap<WorkerId, usize> = BTreeMap::new();
    let mut workers = Vec::new();
    for item in items {
        item.validate()?;
        for ann in &item.annotations {
            worker_index
                .entry(ann.worker_id.clone())
                .or_insert_with(|| {
                    workers.push(ann.worker_id.clone());
                    workers.len() - 1
                });
        }
    }
    let mut prepared = Vec::with_capacity(items.len());
    for item in items {
        let mut embeddings = Vec::with_capacity(item.annotations.len());
        for ann in &item.annotations {
            embeddings.push(embedder.embed(&ann.text)?);
        }
        let local = if with_local {
            local_reliabilities(item)
        } else {
            vec![1.0; item.annotations.len()]
        };
        prepared.push(PreparedItem {
            workers: item
                .annotations
                .iter()
                .map(|a| worker_index[&a.worker_id])
                .collect(),
            embeddings,
            local,
            all_empty: item.annotations.iter().all(|a| a.text.is_empty()),
        });
    }
    Ok(Prepared {
        items: prepared,
        workers,
        worker_index,
    })
}

/// Mean GLEU similarity of each annotation to the other annotations of the
/// same item; 1 when the item has a single annotation.
fn local_reliabilities(item: &AnnotatedItem) -> Vec<f64> {
    let n = item.annotations.len();
    if n == 1 {
        return vec![1.0];
    }
    let mut local = vec![0.0; n];
    for (i, slot) in local.iter_mut().enumerate() {
        let mut sum = 0.0;
        for j in 0..n {
            if i != j {
                sum += gleu(&item.annotations[i].text, &item.annotations[j].text, 4);
            }
        }
        *slot = sum / (n - 1) as f64;
    }
    local
}

fn weighted_aggregate(item: &PreparedItem, global: &[f64], dimension: usize) -> Vec<f64> {
    let mut agg = vec![0.0; dimension];
    let mut total = 0.0;
    for (k, emb) in item.embeddings.iter().enumerate() {
        let w = global[item.workers[k]] * item.local[k];
        total += w;
        for (dst, src) in agg.iter_mut().zip(emb) {
            *dst += w * src;
        }
    }
    if total > 0.0 {
        for x in &mut agg {
            *x /= total;
        }
    } else {
        // All weights vanished (e.g. zero local similarity everywhere):
        // fall back to the unweighted mean.
        let n = item.embeddings.len() as f64;
        for emb in &item.embeddings {
            for (dst, src) in agg.iter_mut().zip(emb) {
                *dst += src / n;
            }
        }
    }
    agg
}

fn run_fixpoint(
    items: &[AnnotatedItem],
    embedder: &dyn Embedder,
    config: &RasaConfig,
    with_local: bool,
) -> Result<(BTreeMap<ItemId, NormalizedText>, ReliabilityState)> {
    if items.is_empty() {
        return Err(Error::contract("no items to aggregate"));
    }
    let prepared = prepare(items, embedder, with_local)?;
    let n_workers = prepared.workers.len();
    let dimension = embedder.dimension();
    let mut global = vec![1.0 / n_workers as f64; n_workers];
    let mut iterations = 0;

    for _ in 0..config.max_iter {
        iterations += 1;
        let aggregates: Vec<Vec<f64>> = prepared
            .items
            .iter()
            .map(|it| weighted_aggregate(it, &global, dimension))
            .collect();

        // Reliability ∝ inverse mean cosine distance of a worker's
        // responses to their items' aggregate embeddings.
        let mut dist_sum = vec![0.0; n_workers];
        let mut dist_count = vec![0usize; n_workers];
        for (item, agg) in prepared.items.iter().zip(&aggregates) {
            for (k, emb) in item.embeddings.iter().enumerate() {
                let w = item.workers[k];
                dist_sum[w] += cosine_distance(emb, agg);
                dist_count[w] += 1;
            }
        }
        let mut next: Vec<f64> = (0..n_workers)
            .map(|w| {
                let mean = dist_sum[w] / dist_count[w].max(1) as f64;
                1.0 / (config.epsilon + mean)
            })
            .collect();
        let total: f64 = next.iter().sum();
        for x in &mut next {
            *x /= total;
        }

        let delta = global
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        global = next;
        if delta < config.tol {
            break;
        }
    }

    // Final selection: the response closest to the aggregate embedding,
    // ties resolved by input order.
    let mut outputs = BTreeMap::new();
    let mut degenerate = Vec::new();
    for (item, prep) in items.iter().zip(&prepared.items) {
        let agg = weighted_aggregate(prep, &global, dimension);
        let mut best = 0usize;
        let mut best_dist = f64::INFINITY;
        for (k, emb) in prep.embeddings.iter().enumerate() {
            let d = cosine_distance(emb, &agg);
            if d < best_dist {
                best_dist = d;
                best = k;
            }
        }
        if prep.all_empty {
            degenerate.push(item.item_id.clone());
            best = 0;
        }
        outputs.insert(item.item_id.clone(), item.annotations[best].text.clone());
    }

    let mut local = BTreeMap::new();
    if with_local {
        for (item, prep) in items.iter().zip(&prepared.items) {
            for (ann, &l) in item.annotations.iter().zip(&prep.local) {
                local.insert((item.item_id.clone(), ann.worker_id.clone()), l);
            }
        }
    }
    let state = ReliabilityState {
        global: prepared
            .worker_index
            .iter()
            .map(|(w, &i)| (w.clone(), global[i]))
            .collect(),
        local,
        iterations,
        degenerate_items: degenerate,
    };
    Ok((outputs, state))
}

/// Global-reliability aggregation: iterate worker trust and per-item
/// weighted mean embeddings to a fixpoint, then pick the response closest
/// to each item's aggregate embedding.
pub fn rasa(
    items: &[AnnotatedItem],
    embedder: &dyn Embedder,
    config: &RasaConfig,
) -> Result<(BTreeMap<ItemId, NormalizedText>, ReliabilityState)> {
    run_fixpoint(items, embedder, config, false)
}

/// Like [`rasa`], but each response's weight also carries a local factor:
/// its mean GLEU similarity to the item's other responses.
pub fn hrrasa(
    items: &[AnnotatedItem],
    embedder: &dyn Embedder,
    config: &RasaConfig,
) -> Result<(BTreeMap<ItemId, NormalizedText>, ReliabilityState)> {
    run_fixpoint(items, embedder, config, true)
}
