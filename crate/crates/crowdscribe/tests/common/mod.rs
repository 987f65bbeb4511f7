//! Independent oracles and fixture generators shared by the integration
//! suites. None of these use the library's dynamic-programming paths: the
//! brute-force searcher walks the edit-script space directly and the
//! memoized oracle is a plain top-down recursion.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crowdscribe::aggregate::{AnnotatedItem, Annotation, ItemId, WorkerId};
use crowdscribe::textnorm::NormalizedText;

/// Exhaustive branch-and-bound search over all edit scripts. The bound
/// (remaining length difference) is admissible, so the minimum found is
/// the true minimal script cost.
pub fn brute_force_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, cost: usize, best: &mut usize) {
        let rem = (a.len() - i).abs_diff(b.len() - j);
        if cost + rem >= *best {
            return;
        }
        if i == a.len() {
            *best = cost + (b.len() - j);
            return;
        }
        if j == b.len() {
            *best = cost + (a.len() - i);
            return;
        }
        let sub = usize::from(a[i] != b[j]);
        go(a, b, i + 1, j + 1, cost + sub, best);
        go(a, b, i + 1, j, cost + 1, best);
        go(a, b, i, j + 1, cost + 1, best);
    }
    // Deleting all of `a` and inserting all of `b` is always achievable.
    let mut best = a.len() + b.len();
    if best == 0 {
        return 0;
    }
    go(a, b, 0, 0, 0, &mut best);
    best
}

/// Top-down memoized recursion on (i, j) suffix pairs.
pub fn memoized_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(
        a: &[T],
        b: &[T],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let sub = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let v = sub.min(del).min(ins);
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// GLEU by explicit n-gram enumeration: build both n-gram lists, count the
/// multiset intersection by sorting, and take min(precision, recall).
pub fn reference_gleu(a: &[String], b: &[String], max_n: usize) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let grams = |s: &[String], n: usize| -> Vec<Vec<String>> {
        if s.len() < n {
            return Vec::new();
        }
        s.windows(n).map(|w| w.to_vec()).collect()
    };
    let mut matched = 0usize;
    let mut total_a = 0usize;
    let mut total_b = 0usize;
    for n in 1..=max_n {
        let mut ga = grams(a, n);
        let mut gb = grams(b, n);
        total_a += ga.len();
        total_b += gb.len();
        ga.sort();
        gb.sort();
        let (mut i, mut j) = (0, 0);
        while i < ga.len() && j < gb.len() {
            match ga[i].cmp(&gb[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    matched += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    let precision = matched as f64 / total_b as f64;
    let recall = matched as f64 / total_a as f64;
    precision.min(recall)
}

/// All token sequences of length 0..=max_len over the given alphabet.
pub fn enumerate_sequences(alphabet: &[&'static str], max_len: usize) -> Vec<Vec<&'static str>> {
    let mut all: Vec<Vec<&'static str>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<&'static str>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * alphabet.len());
        for seq in &frontier {
            for sym in alphabet {
                let mut longer = seq.clone();
                longer.push(*sym);
                next.push(longer);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

const VOCAB: &[&str] = &[
    "the", "a", "cat", "dog", "sat", "ran", "on", "mat", "rug", "big", "old", "fast",
];

pub fn random_tokens(rng: &mut ChaCha8Rng, min_len: usize, max_len: usize) -> Vec<String> {
    let len = rng.gen_range(min_len..=max_len);
    (0..len)
        .map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string())
        .collect()
}

/// A randomized item: a ground truth plus noisy selections/perturbations
/// of it. `unanimous` forces every annotation identical.
pub fn random_item(rng: &mut ChaCha8Rng, id: usize, unanimous: bool) -> AnnotatedItem {
    let truth_tokens = random_tokens(rng, 1, 9);
    let n_annotations = rng.gen_range(2..=8usize);
    let canonical = NormalizedText::from_tokens(truth_tokens.clone());
    let annotations = (0..n_annotations)
        .map(|k| {
            let tokens = if unanimous || rng.gen_bool(0.4) {
                truth_tokens.clone()
            } else {
                let mut t = truth_tokens.clone();
                // drop, duplicate, or replace a token
                match rng.gen_range(0..3u8) {
                    0 => {
                        if t.len() > 1 {
                            let i = rng.gen_range(0..t.len());
                            t.remove(i);
                        }
                    }
                    1 => {
                        let i = rng.gen_range(0..t.len());
                        let dup = t[i].clone();
                        t.insert(i, dup);
                    }
                    _ => {
                        let i = rng.gen_range(0..t.len());
                        t[i] = VOCAB[rng.gen_range(0..VOCAB.len())].to_string();
                    }
                }
                t
            };
            Annotation {
                worker_id: WorkerId::new(format!("w{k}")),
                text: NormalizedText::from_tokens(tokens),
                duration_seconds: Some(15.0 + k as f64),
                is_golden: false,
            }
        })
        .collect();
    AnnotatedItem {
        item_id: ItemId::new(format!("item-{id:05}")),
        ground_truth: Some(canonical),
        annotations,
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
