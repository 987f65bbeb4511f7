//! Bit-parallel Levenshtein distance (Myers' algorithm, blocked variant).
//!
//! Used by the agreement estimator where hundreds of millions of pairwise
//! character-level distances are needed. Symbols are pre-interned to dense
//! `u32` ids so the equality masks are plain table lookups. Verified against
//! the dynamic-programming implementation by exhaustive and randomized tests.

/// Reusable scratch space for [`BitParallelPattern::distance_with`].
#[derive(Default)]
pub(crate) struct MyersWork {
    pv: Vec<u64>,
    mv: Vec<u64>,
}

/// A pattern preprocessed for distance computation against many texts.
pub(crate) struct BitParallelPattern {
    len: usize,
    blocks: usize,
    /// Equality masks, indexed by `symbol * blocks + block`.
    peq: Vec<u64>,
}

impl BitParallelPattern {
    /// `alphabet_size` must exceed every symbol id in the pattern and in any
    /// text later passed to `distance_with`.
    pub fn new(pattern: &[u32], alphabet_size: usize) -> Self {
        let len = pattern.len();
        let blocks = len.div_ceil(64).max(1);
        let mut peq = vec![0u64; alphabet_size * blocks];
        for (i, &sym) in pattern.iter().enumerate() {
            peq[sym as usize * blocks + i / 64] |= 1u64 << (i % 64);
        }
        BitParallelPattern { len, blocks, peq }
    }

    pub fn distance_with(&self, text: &[u32], work: &mut MyersWork) -> usize {
        let m = self.len;
        if m == 0 {
            return text.len();
        }
        if text.is_empty() {
            return m;
        }
        let blocks = self.blocks;
        work.pv.clear();
        work.pv.resize(blocks, !0u64);
        work.mv.clear();
        work.mv.resize(blocks, 0u64);
        let pv = &mut work.pv;
        let mv = &mut work.mv;

        // Horizontal delta of the bottom row is read at the bit for row m,
        // which may sit below unused padding bits of the last block.
        let last = blocks - 1;
        let last_mask = 1u64 << ((m - 1) % 64);
        let mut score = m;

        for &sym in text {
            let row = sym as usize * blocks;
            // +1 enters block 0: the top boundary row of a global alignment
            // always increases along the text.
            let mut hin: i32 = 1;
            for blk in 0..blocks {
                let mut eq = self.peq[row + blk];
                if hin < 0 {
                    eq |= 1;
                }
                let pv_b = pv[blk];
                let mv_b = mv[blk];
                let xv = eq | mv_b;
                let xh = (((eq & pv_b).wrapping_add(pv_b)) ^ pv_b) | eq;
                let mut ph = mv_b | !(xh | pv_b);
                let mut mh = pv_b & xh;

                if blk == last {
                    if ph & last_mask != 0 {
                        score += 1;
                    } else if mh & last_mask != 0 {
                        score -= 1;
                    }
                }

                let hout = if ph >> 63 != 0 {
                    1
                } else if mh >> 63 != 0 {
                    -1
                } else {
                    0
                };
                ph <<= 1;
                mh <<= 1;
                if hin > 0 {
                    ph |= 1;
                } else if hin < 0 {
                    mh |= 1;
                }
                pv[blk] = mh | !(xv | ph);
                mv[blk] = ph & xv;
                hin = hout;
            }
        }
        score
    }
}
