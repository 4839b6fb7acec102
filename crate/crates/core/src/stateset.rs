//! Bit set over the p^d elements of F_p^d.
//!
//! States are grouped into rows of `p` bits (coordinate 0 varies inside a
//! row), each row padded to whole words. Translating the set by `x` is then
//! a permutation of rows followed by a cyclic rotation of every row by `x_0`.

use crate::group::{GroupElement, GroupParams};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSet {
    p: u32,
    d: usize,
    row_words: usize,
    rows: usize,
    words: Vec<u64>,
}

impl StateSet {
    pub fn new(params: &GroupParams) -> StateSet {
        let p = params.p;
        let row_words = (p as usize).div_ceil(64);
        let rows = (params.states() / p as u64) as usize;
        StateSet { p, d: params.d, row_words, rows, words: vec![0; row_words * rows] }
    }

    pub fn params(&self) -> GroupParams {
        GroupParams { p: self.p, d: self.d }
    }

    pub fn states(&self) -> usize {
        self.rows * self.p as usize
    }

    #[inline]
    fn locate(&self, idx: usize) -> (usize, u64) {
        let p = self.p as usize;
        let (row, col) = (idx / p, idx % p);
        (row * self.row_words + col / 64, 1u64 << (col % 64))
    }

    pub fn insert_index(&mut self, idx: usize) -> bool {
        let (w, bit) = self.locate(idx);
        let fresh = self.words[w] & bit == 0;
        self.words[w] |= bit;
        fresh
    }

    pub fn contains_index(&self, idx: usize) -> bool {
        let (w, bit) = self.locate(idx);
        self.words[w] & bit != 0
    }

    pub fn insert(&mut self, x: &GroupElement) -> bool {
        let idx = self.params().index(x);
        self.insert_index(idx)
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        self.contains_index(self.params().index(x))
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.states()
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn union_with(&mut self, other: &StateSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// |other \ self|
    pub fn count_missing_from(&self, other: &StateSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (b & !a).count_ones() as usize)
            .sum()
    }

    /// Calls `f(idx)` for every state in `other` but not in `self`.
    pub fn for_each_missing_from<F: FnMut(usize)>(&self, other: &StateSet, mut f: F) {
        let p = self.p as usize;
        for (w, (a, b)) in self.words.iter().zip(&other.words).enumerate() {
            let mut bits = b & !a;
            while bits != 0 {
                let t = bits.trailing_zeros() as usize;
                let (row, wi) = (w / self.row_words, w % self.row_words);
                f(row * p + wi * 64 + t);
                bits &= bits - 1;
            }
        }
    }

    pub fn iter_indices(&self) -> impl Iterator<Item = usize> + '_ {
        let p = self.p as usize;
        self.words.iter().enumerate().flat_map(move |(w, &word)| {
            let (row, wi) = (w / self.row_words, w % self.row_words);
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(row * p + wi * 64 + t)
            })
        })
    }

    pub fn elements(&self) -> Vec<GroupElement> {
        let params = self.params();
        let mut v: Vec<GroupElement> = self.iter_indices().map(|i| params.from_index(i)).collect();
        v.sort();
        v
    }

    /// Overwrites `out` with `self + x`.
    pub fn shift_into(&self, x: &GroupElement, out: &mut StateSet) {
        debug_assert_eq!(out.words.len(), self.words.len());
        out.clear();
        let p = self.p;
        let s = x.0[0] as usize;
        let rw = self.row_words;
        let mut digits = vec![0u32; self.d.saturating_sub(1)];
        for src_row in 0..self.rows {
            let dst_row = digits
                .iter()
                .zip(&x.0[1..])
                .rev()
                .fold(0usize, |acc, (&a, &b)| acc * p as usize + ((a + b) % p) as usize);
            let src = &self.words[src_row * rw..(src_row + 1) * rw];
            if src.iter().any(|&w| w != 0) {
                let dst = &mut out.words[dst_row * rw..(dst_row + 1) * rw];
                rotate_row_or(dst, src, s, p as usize);
            }
            for dg in digits.iter_mut() {
                *dg += 1;
                if *dg < p {
                    break;
                }
                *dg = 0;
            }
        }
    }

    pub fn shifted(&self, x: &GroupElement) -> StateSet {
        let mut out = self.clone();
        self.shift_into(x, &mut out);
        out
    }

    /// Raw little-endian bitset, bit `i` = state with mixed-radix index `i`.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let n = self.states();
        let mut out = vec![0u8; n.div_ceil(8)];
        for i in self.iter_indices() {
            out[i / 8] |= 1 << (i % 8);
        }
        out
    }

    pub fn from_le_bytes(params: &GroupParams, bytes: &[u8]) -> Option<StateSet> {
        let mut set = StateSet::new(params);
        let n = set.states();
        if bytes.len() != n.div_ceil(8) {
            return None;
        }
        for i in 0..n {
            if bytes[i / 8] >> (i % 8) & 1 == 1 {
                set.insert_index(i);
            }
        }
        Some(set)
    }
}

/// dst |= rotate(src, s) on a row of `p` bits: bit i of the result is bit
/// (i - s) mod p of `src`. Bits of `src` at positions >= p must be zero.
fn rotate_row_or(dst: &mut [u64], src: &[u64], s: usize, p: usize) {
    if s == 0 {
        for (a, b) in dst.iter_mut().zip(src) {
            *a |= b;
        }
        return;
    }
    shl_or(dst, src, s);
    shr_or(dst, src, p - s);
    let tail = p % 64;
    if tail != 0 {
        let last = dst.len() - 1;
        dst[last] &= (1u64 << tail) - 1;
    }
}

fn shl_or(dst: &mut [u64], src: &[u64], s: usize) {
    let (ws, bs) = (s / 64, s % 64);
    for w in (ws..dst.len()).rev() {
        let mut v = src[w - ws] << bs;
        if bs > 0 && w > ws {
            v |= src[w - ws - 1] >> (64 - bs);
        }
        dst[w] |= v;
    }
}

fn shr_or(dst: &mut [u64], src: &[u64], s: usize) {
    let (ws, bs) = (s / 64, s % 64);
    let n = src.len();
    for w in 0..n.saturating_sub(ws) {
        let mut v = src[w + ws] >> bs;
        if bs > 0 && w + ws + 1 < n {
            v |= src[w + ws + 1] << (64 - bs);
        }
        dst[w] |= v;
    }
}
