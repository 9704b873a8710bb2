//! Exact binomials and colexicographic ranking of k-subsets of `[n] = {1, ..., n}`.
//!
//! Vertices are 1-based. The colex rank of `{s_1 < ... < s_k}` is
//! `sum_i C(s_i - 1, i)`, which does not depend on the ambient `n`, so a rank
//! computed for a subset of `[n]` is also its rank inside `[n']` for any `n' >= n`.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

/// Largest `a` for which every `C(a, b)` fits in a `u64`.
pub const MAX_U64_BINOM_ROW: u32 = 67;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CombinatError {
    #[error("subset elements must be strictly increasing and positive: {0:?}")]
    NotStrictlyIncreasing(Vec<u32>),
    #[error("colex rank of {0:?} does not fit in 64 bits")]
    RankOverflow(Vec<u32>),
    #[error("element {element} lies outside [1, {n}]")]
    OutOfRange { element: u32, n: u32 },
}

/// A finite set of positive integers, stored sorted.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
#[serde(transparent)]
pub struct Subset(Vec<u32>);

impl Subset {
    pub fn new(elements: Vec<u32>) -> Result<Self, CombinatError> {
        if !is_strictly_increasing(&elements) {
            return Err(CombinatError::NotStrictlyIncreasing(elements));
        }
        Ok(Subset(elements))
    }

    /// Sorts and deduplicates; fails only on a zero element.
    pub fn from_unsorted(mut elements: Vec<u32>) -> Result<Self, CombinatError> {
        elements.sort_unstable();
        elements.dedup();
        Subset::new(elements)
    }

    pub fn empty() -> Self {
        Subset(Vec::new())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_element(&self) -> Option<u32> {
        self.0.last().copied()
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        let mut it = other.0.iter();
        self.0.iter().all(|x| it.any(|y| y == x))
    }

    pub fn check_within(&self, n: u32) -> Result<(), CombinatError> {
        match self.0.last() {
            Some(&m) if m > n => Err(CombinatError::OutOfRange { element: m, n }),
            _ => Ok(()),
        }
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

impl AsRef<[u32]> for Subset {
    fn as_ref(&self) -> &[u32] {
        &self.0
    }
}

pub(crate) fn is_strictly_increasing(xs: &[u32]) -> bool {
    xs.first().is_none_or(|&x| x >= 1) && xs.windows(2).all(|w| w[0] < w[1])
}

/// Exact `C(a, b)`; zero when `b < 0` or `b > a`.
pub fn binom(a: u64, b: i64) -> BigUint {
    if b < 0 || b as u64 > a {
        return BigUint::zero();
    }
    let b = (b as u64).min(a - b as u64);
    let mut acc = BigUint::one();
    for i in 0..b {
        acc *= a - i;
        acc /= i + 1;
    }
    acc
}

fn small_table() -> &'static Vec<Vec<u64>> {
    static TABLE: OnceLock<Vec<Vec<u64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rows = MAX_U64_BINOM_ROW as usize + 1;
        let mut t: Vec<Vec<u64>> = Vec::with_capacity(rows);
        for a in 0..rows {
            let mut row = vec![0u64; a + 1];
            row[0] = 1;
            row[a] = 1;
            for b in 1..a {
                row[b] = t[a - 1][b - 1] + t[a - 1][b];
            }
            t.push(row);
        }
        t
    })
}

/// `C(a, b)` as a `u64` for `a <= 67`; `None` beyond the table.
#[inline]
pub fn binom_u64(a: u32, b: u32) -> Option<u64> {
    if a > MAX_U64_BINOM_ROW {
        return None;
    }
    if b > a {
        return Some(0);
    }
    Some(small_table()[a as usize][b as usize])
}

/// Table lookup without range checks on `a`; callers guarantee `a <= 67`.
#[inline]
pub(crate) fn c64(a: u32, b: u32) -> u64 {
    if b > a {
        0
    } else {
        small_table()[a as usize][b as usize]
    }
}

/// Exact Pascal triangle up to `max_n`, built once and read-only afterwards.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    max_n: u32,
    rows: Vec<Vec<BigUint>>,
}

impl BinomialTable {
    pub fn new(max_n: u32) -> Self {
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(max_n as usize + 1);
        for a in 0..=max_n as usize {
            let mut row = vec![BigUint::one(); a + 1];
            for b in 1..a {
                row[b] = &rows[a - 1][b - 1] + &rows[a - 1][b];
            }
            rows.push(row);
        }
        BinomialTable { max_n, rows }
    }

    pub fn max_n(&self) -> u32 {
        self.max_n
    }

    /// `C(a, b)`, zero outside `0 <= b <= a`. Panics if `a > max_n`.
    pub fn get(&self, a: u32, b: i64) -> BigUint {
        assert!(a <= self.max_n, "binomial table holds rows up to {}", self.max_n);
        if b < 0 || b as u64 > a as u64 {
            return BigUint::zero();
        }
        self.rows[a as usize][b as usize].clone()
    }
}

/// Colex rank of a strictly increasing set of positive integers.
pub fn rank_colex(s: &[u32]) -> Result<u64, CombinatError> {
    if !is_strictly_increasing(s) {
        return Err(CombinatError::NotStrictlyIncreasing(s.to_vec()));
    }
    let mut rank: u64 = 0;
    for (i, &x) in s.iter().enumerate() {
        let term = binom_u64(x - 1, i as u32 + 1)
            .ok_or_else(|| CombinatError::RankOverflow(s.to_vec()))?;
        rank = rank
            .checked_add(term)
            .ok_or_else(|| CombinatError::RankOverflow(s.to_vec()))?;
    }
    Ok(rank)
}

/// Rank without validation; `s` must be strictly increasing with max <= 68.
#[inline]
pub(crate) fn rank_unchecked(s: &[u32]) -> u64 {
    s.iter()
        .enumerate()
        .map(|(i, &x)| c64(x - 1, i as u32 + 1))
        .sum()
}

/// Inverse of [`rank_colex`]: the `rank`-th k-subset of the positive integers.
pub fn unrank_colex(rank: u64, k: u32) -> Subset {
    let mut out = vec![0u32; k as usize];
    unrank_into(rank, &mut out);
    Subset(out)
}

pub(crate) fn unrank_into(rank: u64, out: &mut [u32]) {
    unrank_within(rank, out, MAX_U64_BINOM_ROW + 1);
}

/// [`unrank_into`] for ranks known to name a subset of `[n]`.
#[inline]
pub(crate) fn unrank_within(mut rank: u64, out: &mut [u32], n: u32) {
    let k = out.len() as u32;
    // scanning down from the largest admissible value costs n + k steps overall
    let mut c = n.min(MAX_U64_BINOM_ROW);
    for i in (1..=k).rev() {
        c = c.max(i - 1);
        while c64(c, i) > rank {
            c -= 1;
        }
        rank -= c64(c, i);
        out[(i - 1) as usize] = c + 1;
        c = c.saturating_sub(1);
    }
}

/// Calls `f` on every k-subset of `[n]` in colex order, reusing one buffer.
pub(crate) fn for_each_subset(n: u32, k: u32, mut f: impl FnMut(&[u32])) {
    if k > n {
        return;
    }
    let mut buf: Vec<u32> = (1..=k).collect();
    loop {
        f(&buf);
        if !next_colex(&mut buf, n) {
            break;
        }
    }
}

/// Advances `s` to the next k-subset of `[n]` in colex order. Returns false
/// (leaving `s` unchanged) when `s` is the last one.
pub(crate) fn next_colex(s: &mut [u32], n: u32) -> bool {
    advance_colex(s, n).is_some()
}

/// Like [`next_colex`], reporting the highest position that changed; all
/// positions below it are reset to `1, 2, ...`.
pub(crate) fn advance_colex(s: &mut [u32], n: u32) -> Option<usize> {
    let k = s.len();
    for i in 0..k {
        let limit = if i + 1 < k { s[i + 1] } else { n + 1 };
        if s[i] + 1 < limit {
            s[i] += 1;
            for (j, slot) in s.iter_mut().enumerate().take(i) {
                *slot = j as u32 + 1;
            }
            return Some(i);
        }
    }
    None
}

/// Streams every k-subset of `[n]` in colex (= rank) order.
pub struct Subsets {
    n: u32,
    current: Vec<u32>,
    done: bool,
}

impl Iterator for Subsets {
    type Item = Subset;

    fn next(&mut self) -> Option<Subset> {
        if self.done {
            return None;
        }
        let out = Subset(self.current.clone());
        if !next_colex(&mut self.current, self.n) {
            self.done = true;
        }
        Some(out)
    }
}

pub fn iterate_subsets(n: u32, k: u32) -> Subsets {
    Subsets {
        n,
        current: (1..=k).collect(),
        done: k > n,
    }
}
