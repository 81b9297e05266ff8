//! Statistical WEP key recovery from (IV, keystream-prefix) pairs.
//!
//! Each sample votes, for every key position `i`, on the running key sum
//! `sigma_i = K[0] + .. + K[i]` using the first three (public) rounds of the
//! key schedule:
//!
//! ```text
//! sigma_i ~ S3^-1[(3 + i) - X[2 + i]] - (j3 + S3[3] + .. + S3[3 + i])
//! ```
//!
//! The correct value shows up with probability roughly 1.36/256, so with
//! enough samples it dominates the tally. Candidate keys are then enumerated
//! from the best-ranked sums and checked against the samples.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::rc4::Rc4;
use super::wep::{Iv, WepKey};
use super::WepError;

pub const KEYSTREAM_SAMPLE_LEN: usize = 16;
const MAX_KEY_LEN: usize = WepKey::LEN_104;
const TEST_SAMPLES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PtwSample {
    pub iv: Iv,
    pub keystream: [u8; KEYSTREAM_SAMPLE_LEN],
}

#[derive(Clone, PartialEq, Eq)]
pub struct KeyVoteTable {
    votes: Vec<[u32; 256]>,
    samples: u64,
}

impl Default for KeyVoteTable {
    fn default() -> Self {
        KeyVoteTable {
            votes: vec![[0u32; 256]; MAX_KEY_LEN],
            samples: 0,
        }
    }
}

impl std::fmt::Debug for KeyVoteTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyVoteTable")
            .field("samples", &self.samples)
            .finish_non_exhaustive()
    }
}

impl KeyVoteTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples<'a>(samples: impl IntoIterator<Item = &'a PtwSample>) -> Self {
        let mut t = Self::new();
        for s in samples {
            t.add(s);
        }
        t
    }

    pub fn add(&mut self, sample: &PtwSample) {
        // First three rounds of the key schedule only involve the IV.
        let mut s = [0u8; 256];
        for (i, v) in s.iter_mut().enumerate() {
            *v = i as u8;
        }
        let mut j = 0u8;
        for i in 0..3 {
            j = j.wrapping_add(s[i]).wrapping_add(sample.iv.0[i]);
            s.swap(i, j as usize);
        }
        let mut inv = [0u8; 256];
        for (i, &v) in s.iter().enumerate() {
            inv[v as usize] = i as u8;
        }
        let mut sum = j;
        for (i, tally) in self.votes.iter_mut().enumerate() {
            sum = sum.wrapping_add(s[3 + i]);
            let target = ((3 + i) as u8).wrapping_sub(sample.keystream[2 + i]);
            let sigma = inv[target as usize].wrapping_sub(sum);
            tally[sigma as usize] += 1;
        }
        self.samples += 1;
    }

    /// Tallies are additive, so merging is associative and commutative.
    pub fn merge(&mut self, other: &KeyVoteTable) {
        for (mine, theirs) in self.votes.iter_mut().zip(&other.votes) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
        self.samples += other.samples;
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn votes(&self, position: usize) -> &[u32; 256] {
        &self.votes[position]
    }

    /// Candidate sums for `position`, most votes first; ties go to the
    /// smaller value so the order is fully determined by the tallies.
    pub fn ranked(&self, position: usize) -> Vec<(u8, u32)> {
        let mut v: Vec<(u8, u32)> = self.votes[position]
            .iter()
            .enumerate()
            .map(|(s, &n)| (s as u8, n))
            .collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchBudget {
    /// Deepest vote rank considered at any one key position (256 = all).
    pub depth: usize,
    /// Upper bound on keys tested.
    pub max_candidates: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            depth: 256,
            max_candidates: 1 << 20,
        }
    }
}

fn keystream_matches(key: &WepKey, sample: &PtwSample) -> bool {
    let mut rc4 = Rc4::new(&key.seed_for(sample.iv)).expect("seed within bounds");
    sample.keystream.iter().all(|&k| rc4.next_byte() == k)
}

/// A key verifies when at least three quarters of the test samples
/// reproduce exactly under it.
pub fn verify_key(key: &WepKey, samples: &[PtwSample]) -> bool {
    let test: Vec<&PtwSample> = test_set(samples);
    if test.is_empty() {
        return false;
    }
    let allowed_misses = test.len() / 4;
    let mut misses = 0;
    for s in test {
        if !keystream_matches(key, s) {
            misses += 1;
            if misses > allowed_misses {
                return false;
            }
        }
    }
    true
}

// Spread across the sample list so one bad run of samples can't sink it.
fn test_set(samples: &[PtwSample]) -> Vec<&PtwSample> {
    if samples.len() <= TEST_SAMPLES {
        return samples.iter().collect();
    }
    let stride = samples.len() / TEST_SAMPLES;
    (0..TEST_SAMPLES).map(|k| &samples[k * stride]).collect()
}

fn key_from_sums(sums: &[u8]) -> WepKey {
    let mut key = Vec::with_capacity(sums.len());
    let mut prev = 0u8;
    for &s in sums {
        key.push(s.wrapping_sub(prev));
        prev = s;
    }
    WepKey::new(&key).expect("key length is 5 or 13")
}

/// Recovers a `key_len`-byte key. Returns the verified candidates in search
/// order (normally exactly one).
pub fn ptw_crack(samples: &[PtwSample], key_len: usize, budget: SearchBudget) -> Result<Vec<WepKey>, WepError> {
    if key_len != WepKey::LEN_40 && key_len != WepKey::LEN_104 {
        return Err(WepError::BadKeyLength(key_len));
    }
    if samples.is_empty() {
        return Err(WepError::InsufficientSamples("no keystream samples".into()));
    }
    let table = KeyVoteTable::from_samples(samples);
    search(&table, samples, key_len, budget)
}

struct Searcher<'a> {
    ranked: Vec<Vec<(u8, u32)>>,
    samples: &'a [PtwSample],
    budget: SearchBudget,
    tried: usize,
}

impl Searcher<'_> {
    fn deficit(&self, pos: usize, rank: usize) -> u64 {
        (self.ranked[pos][0].1 - self.ranked[pos][rank].1) as u64
    }

    fn sums_for(&self, ranks: &[u8]) -> Vec<u8> {
        ranks
            .iter()
            .enumerate()
            .map(|(p, &r)| self.ranked[p][r as usize].0)
            .collect()
    }

    fn exhausted(&self) -> bool {
        self.tried >= self.budget.max_candidates
    }

    fn test(&mut self, sums: &[u8]) -> Option<WepKey> {
        self.tried += 1;
        let key = key_from_sums(sums);
        verify_key(&key, self.samples).then_some(key)
    }

    /// Rank vectors in order of total vote deficit. Positions are visited
    /// in order of their second-choice deficit; each popped vector spawns at
    /// most three successors (bump the current position, open the next one,
    /// or move a single bump to the next one), so every vector has exactly
    /// one parent and costs never decrease along an edge.
    fn best_first(&self) -> BestFirst<'_> {
        let key_len = self.ranked.len();
        let depth = self.budget.depth.clamp(2, 256);
        let mut order: Vec<usize> = (0..key_len).collect();
        order.sort_by_key(|&p| (self.deficit(p, 1), p));
        BestFirst {
            searcher: self,
            order,
            depth,
            heap: BinaryHeap::new(),
            started: false,
        }
    }

    /// Sums for positions in `strong` are recomputed from the earlier sums
    /// according to `choice`; see `strong_sum`.
    fn with_strong(&self, ranks: &[u8], strong: &[(usize, usize)]) -> Vec<u8> {
        let mut sums = self.sums_for(ranks);
        for &(pos, j) in strong {
            sums[pos] = strong_sum(&sums, pos, j);
        }
        sums
    }
}

type Ranks = [u8; MAX_KEY_LEN];

struct BestFirst<'a> {
    searcher: &'a Searcher<'a>,
    order: Vec<usize>,
    depth: usize,
    // (cost, ranks, index into `order` of the last bumped position)
    heap: BinaryHeap<Reverse<(u64, Ranks, usize)>>,
    started: bool,
}

impl Iterator for BestFirst<'_> {
    type Item = Ranks;

    fn next(&mut self) -> Option<Ranks> {
        let s = self.searcher;
        if !self.started {
            self.started = true;
            if !self.order.is_empty() {
                let mut r = [0u8; MAX_KEY_LEN];
                r[self.order[0]] = 1;
                self.heap.push(Reverse((s.deficit(self.order[0], 1), r, 0)));
            }
            return Some([0u8; MAX_KEY_LEN]);
        }
        let Reverse((cost, ranks, last)) = self.heap.pop()?;
        let p = self.order[last];
        let r = ranks[p] as usize;
        if r + 1 < self.depth {
            let mut n = ranks;
            n[p] += 1;
            self.heap
                .push(Reverse((cost - s.deficit(p, r) + s.deficit(p, r + 1), n, last)));
        }
        if let Some(&q) = self.order.get(last + 1) {
            let mut n = ranks;
            n[q] = 1;
            self.heap.push(Reverse((cost + s.deficit(q, 1), n, last + 1)));
            if r == 1 {
                let mut m = n;
                m[p] = 0;
                self.heap
                    .push(Reverse((cost - s.deficit(p, 1) + s.deficit(q, 1), m, last + 1)));
            }
        }
        Some(ranks)
    }
}

/// For a strong position `i` the key satisfies
/// `sum_{k=j..=i} (K[k] + k + 3) == 0 (mod 256)` for some `j <= i`, so
/// `sigma_i = sigma_{j-1} - sum_{k=j..=i} (k + 3)` (with `sigma_{-1} = 0`).
fn strong_sum(sums: &[u8], i: usize, j: usize) -> u8 {
    let base = if j == 0 { 0 } else { sums[j - 1] };
    let offset: usize = (j..=i).map(|k| k + 3).sum();
    base.wrapping_sub(offset as u8)
}

// Rank vectors reused when guessing one and two strong positions.
const STRONG1_VECTORS: usize = 256;
const STRONG2_VECTORS: usize = 8;

fn search(
    table: &KeyVoteTable,
    samples: &[PtwSample],
    key_len: usize,
    budget: SearchBudget,
) -> Result<Vec<WepKey>, WepError> {
    let mut s = Searcher {
        ranked: (0..key_len).map(|p| table.ranked(p)).collect(),
        samples,
        budget,
        tried: 0,
    };
    let plain_budget = budget.max_candidates - budget.max_candidates / 4;
    let candidates: Vec<Vec<u8>> = s
        .best_first()
        .take(plain_budget)
        .map(|r| s.sums_for(&r[..key_len]))
        .collect();
    let head: Vec<Ranks> = s.best_first().take(STRONG1_VECTORS).collect();

    // Plain voting first.
    for sums in &candidates {
        if let Some(k) = s.test(sums) {
            return Ok(vec![k]);
        }
    }

    // Then assume one, and then two, positions are strong. Least confident
    // positions (fewest top votes) are tried first.
    let mut order: Vec<usize> = (0..key_len).collect();
    order.sort_by_key(|&p| (s.ranked[p][0].1, p));
    for &pos in &order {
        for ranks in head.iter().filter(|r| r[pos] == 0) {
            for j in 0..=pos {
                if s.exhausted() {
                    return Err(WepError::NotFoundWithinBudget { tried: s.tried });
                }
                if let Some(k) = s.test(&s.with_strong(&ranks[..key_len], &[(pos, j)])) {
                    return Ok(vec![k]);
                }
            }
        }
    }
    for (a, &p1) in order.iter().enumerate() {
        for &p2 in &order[a + 1..] {
            let (lo, hi) = (p1.min(p2), p1.max(p2));
            for ranks in head.iter().take(STRONG2_VECTORS).filter(|r| r[lo] == 0 && r[hi] == 0) {
                for j1 in 0..=lo {
                    for j2 in 0..=hi {
                        if s.exhausted() {
                            return Err(WepError::NotFoundWithinBudget { tried: s.tried });
                        }
                        if let Some(k) = s.test(&s.with_strong(&ranks[..key_len], &[(lo, j1), (hi, j2)])) {
                            return Ok(vec![k]);
                        }
                    }
                }
            }
        }
    }
    Err(WepError::NotFoundWithinBudget { tried: s.tried })
}
