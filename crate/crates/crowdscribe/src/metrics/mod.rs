//! Sequence distance and similarity metrics: edit distance, alignment
//! scripts, word error rate, and sentence-level GLEU.

pub(crate) mod myers;

use crate::textnorm::NormalizedText;

/// Minimal number of insertions, deletions, and substitutions transforming
/// `a` into `b`. Two-row dynamic programming, O(|a|·|b|) time, O(min) space.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut curr = vec![0usize; short.len() + 1];
    for (i, lt) in long.iter().enumerate() {
        curr[0] = i + 1;
        for (j, st) in short.iter().enumerate() {
            let sub = prev[j] + usize::from(lt != st);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

/// Character-level edit distance.
pub fn levenshtein_chars(a: &str, b: &str) -> usize {
    let ca: Vec<char> = a.chars().collect();
    let cb: Vec<char> = b.chars().collect();
    levenshtein(&ca, &cb)
}

/// One step of an edit script transforming a reference sequence into a
/// hypothesis sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EditOp<T> {
    Match(T),
    /// (reference token, hypothesis token)
    Substitute(T, T),
    /// Hypothesis token absent from the reference.
    Insert(T),
    /// Reference token absent from the hypothesis.
    Delete(T),
}

impl<T> EditOp<T> {
    pub fn cost(&self) -> usize {
        usize::from(!matches!(self, EditOp::Match(_)))
    }
}

/// Cost-minimal edit script from `a` (reference) to `b` (hypothesis).
///
/// Replaying the script onto `a` yields `b`, and the total cost equals
/// `levenshtein(a, b)`. Ties are broken deterministically, preferring
/// match, then substitute, then delete, then insert.
pub fn align<T: PartialEq + Clone>(a: &[T], b: &[T]) -> Vec<EditOp<T>> {
    let (la, lb) = (a.len(), b.len());
    let mut dist = vec![0usize; (la + 1) * (lb + 1)];
    let idx = |i: usize, j: usize| i * (lb + 1) + j;
    for i in 0..=la {
        dist[idx(i, 0)] = i;
    }
    for j in 0..=lb {
        dist[idx(0, j)] = j;
    }
    for i in 1..=la {
        for j in 1..=lb {
            let sub = dist[idx(i - 1, j - 1)] + usize::from(a[i - 1] != b[j - 1]);
            let del = dist[idx(i - 1, j)] + 1;
            let ins = dist[idx(i, j - 1)] + 1;
            dist[idx(i, j)] = sub.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(la.max(lb));
    let (mut i, mut j) = (la, lb);
    while i > 0 || j > 0 {
        let here = dist[idx(i, j)];
        if i > 0 && j > 0 && a[i - 1] == b[j - 1] && dist[idx(i - 1, j - 1)] == here {
            ops.push(EditOp::Match(a[i - 1].clone()));
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && dist[idx(i - 1, j - 1)] + 1 == here {
            ops.push(EditOp::Substitute(a[i - 1].clone(), b[j - 1].clone()));
            i -= 1;
            j -= 1;
        } else if i > 0 && dist[idx(i - 1, j)] + 1 == here {
            ops.push(EditOp::Delete(a[i - 1].clone()));
            i -= 1;
        } else {
            ops.push(EditOp::Insert(b[j - 1].clone()));
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// Word error rate of a hypothesis against a reference transcription.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WerScore {
    /// Word-level edit distance.
    pub errors: usize,
    pub reference_len: usize,
    /// errors / reference_len; may exceed 1.
    pub value: f64,
    /// Set when the reference was empty but the hypothesis was not. The
    /// value is then the hypothesis length over a nominal reference of 1,
    /// so dataset means stay computable.
    pub degenerate: bool,
}

pub fn wer(reference: &NormalizedText, hypothesis: &NormalizedText) -> WerScore {
    wer_tokens(reference.tokens(), hypothesis.tokens())
}

pub fn wer_tokens<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> WerScore {
    if reference.is_empty() {
        return WerScore {
            errors: hypothesis.len(),
            reference_len: 0,
            value: hypothesis.len() as f64,
            degenerate: !hypothesis.is_empty(),
        };
    }
    let errors = levenshtein(reference, hypothesis);
    WerScore {
        errors,
        reference_len: reference.len(),
        value: errors as f64 / reference.len() as f64,
        degenerate: false,
    }
}

/// Sentence-level GLEU similarity in [0, 1]: min of n-gram precision and
/// recall over n = 1..=max_n, counting with multiplicity. Symmetric, 1 for
/// identical token sequences, 1 for empty-vs-empty, 0 when one side is
/// empty or nothing matches.
pub fn gleu(a: &NormalizedText, b: &NormalizedText, max_n: usize) -> f64 {
    gleu_tokens(a.tokens(), b.tokens(), max_n)
}

pub fn gleu_tokens<T: PartialEq + std::hash::Hash + Eq>(a: &[T], b: &[T], max_n: usize) -> f64 {
    assert!(max_n >= 1, "max_n must be at least 1");
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    if a == b {
        return 1.0;
    }
    let mut matched = 0usize;
    let mut total_a = 0usize;
    let mut total_b = 0usize;
    for n in 1..=max_n {
        total_a += a.len().saturating_sub(n - 1);
        total_b += b.len().saturating_sub(n - 1);
        if a.len() < n || b.len() < n {
            continue;
        }
        let mut counts: std::collections::HashMap<&[T], isize> = std::collections::HashMap::new();
        for w in a.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
        for w in b.windows(n) {
            let c = counts.entry(w).or_insert(0);
            if *c > 0 {
                matched += 1;
            }
            *c -= 1;
        }
    }
    let precision = matched as f64 / total_b as f64;
    let recall = matched as f64 / total_a as f64;
    precision.min(recall)
}
