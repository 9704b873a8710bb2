//! Uniform hypergraphs on `[n]` stored as membership bitvectors over colex rank.

use std::fmt;

use thiserror::Error;

use crate::combinat::{
    self, binom_u64, c64, for_each_subset, is_strictly_increasing, rank_unchecked, unrank_within,
    Subset,
};

/// Vertex labels must stay within the exact `u64` binomial table.
pub const MAX_VERTICES: u32 = 64;

/// Upper limit on `C(n, r)` for a materialized bitvector (4 GiB of bits).
pub const MAX_UNIVERSE: u64 = 1 << 35;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("n = {n} exceeds the supported maximum of {MAX_VERTICES} vertices")]
    TooManyVertices { n: u32 },
    #[error("C({n}, {r}) is too large to materialize")]
    UniverseTooLarge { n: u32, r: u32 },
    #[error("edge {edge:?} is not an {r}-subset of [{n}]")]
    BadEdge { edge: Vec<u32>, n: u32, r: u32 },
    #[error("mismatched hypergraphs: ({n1}, {r1}) vs ({n2}, {r2})")]
    Mismatch { n1: u32, r1: u32, n2: u32, r2: u32 },
    #[error("uniformity {have} does not equal k - R = {want}")]
    UniformityMismatch { have: u32, want: u32 },
    #[error("negative extension length {0}")]
    NegativeExtension(i64),
    #[error("uniformity {r} exceeds n = {n}")]
    UniformityTooLarge { n: u32, r: u32 },
    #[error("shifting by {offset} moves vertex {vertex} past {new_n}")]
    LabelOverflow { vertex: u32, offset: u32, new_n: u32 },
}

/// Anything that can answer "is this sorted r-subset of [n] an edge?".
pub trait EdgeSet: Sync {
    fn n(&self) -> u32;
    fn r(&self) -> u32;
    fn size(&self) -> u64;
    /// `edge` is strictly increasing, has length `r`, and lies in `[n]`.
    fn contains_sorted(&self, edge: &[u32]) -> bool;
}

/// An r-uniform hypergraph on `[n]`.
#[derive(Clone, PartialEq, Eq)]
pub struct RGraph {
    n: u32,
    r: u32,
    universe: u64,
    len: u64,
    bits: Vec<u64>,
}

pub(crate) fn universe_size(n: u32, r: u32) -> Result<u64, GraphError> {
    if n > MAX_VERTICES {
        return Err(GraphError::TooManyVertices { n });
    }
    let u = binom_u64(n, r).expect("n within table");
    if u > MAX_UNIVERSE {
        return Err(GraphError::UniverseTooLarge { n, r });
    }
    Ok(u)
}

impl RGraph {
    pub fn empty(n: u32, r: u32) -> Result<Self, GraphError> {
        let universe = universe_size(n, r)?;
        Ok(RGraph {
            n,
            r,
            universe,
            len: 0,
            bits: vec![0; universe.div_ceil(64) as usize],
        })
    }

    pub fn complete(n: u32, r: u32) -> Result<Self, GraphError> {
        let mut g = RGraph::empty(n, r)?;
        g.bits.iter_mut().for_each(|w| *w = u64::MAX);
        g.trim_tail();
        g.len = g.universe;
        Ok(g)
    }

    pub fn from_edges<I, E>(n: u32, r: u32, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = E>,
        E: AsRef<[u32]>,
    {
        let mut g = RGraph::empty(n, r)?;
        for e in edges {
            g.insert(e.as_ref())?;
        }
        Ok(g)
    }

    fn trim_tail(&mut self) {
        let rem = self.universe % 64;
        if rem != 0 {
            if let Some(last) = self.bits.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `C(n, r)`, the number of possible edges.
    pub fn universe(&self) -> u64 {
        self.universe
    }

    fn check_edge(&self, edge: &[u32]) -> Result<(), GraphError> {
        let ok = edge.len() == self.r as usize
            && is_strictly_increasing(edge)
            && edge.last().is_none_or(|&m| m <= self.n);
        if ok {
            Ok(())
        } else {
            Err(GraphError::BadEdge {
                edge: edge.to_vec(),
                n: self.n,
                r: self.r,
            })
        }
    }

    /// Inserts an edge; returns whether it was new.
    pub fn insert(&mut self, edge: &[u32]) -> Result<bool, GraphError> {
        self.check_edge(edge)?;
        Ok(self.insert_rank(rank_unchecked(edge)))
    }

    pub fn remove(&mut self, edge: &[u32]) -> Result<bool, GraphError> {
        self.check_edge(edge)?;
        let rank = rank_unchecked(edge);
        let was = self.contains_rank(rank);
        if was {
            self.bits[(rank >> 6) as usize] &= !(1u64 << (rank & 63));
            self.len -= 1;
        }
        Ok(was)
    }

    /// Membership for arbitrary input; malformed edges are simply absent.
    pub fn contains(&self, edge: &[u32]) -> bool {
        self.check_edge(edge).is_ok() && self.contains_rank(rank_unchecked(edge))
    }

    #[inline]
    pub fn contains_rank(&self, rank: u64) -> bool {
        rank < self.universe && self.bits[(rank >> 6) as usize] >> (rank & 63) & 1 == 1
    }

    #[inline]
    pub(crate) fn insert_rank(&mut self, rank: u64) -> bool {
        debug_assert!(rank < self.universe);
        let word = &mut self.bits[(rank >> 6) as usize];
        let mask = 1u64 << (rank & 63);
        if *word & mask == 0 {
            *word |= mask;
            self.len += 1;
            true
        } else {
            false
        }
    }

    #[inline]
    pub(crate) fn clear_rank(&mut self, rank: u64) -> bool {
        debug_assert!(rank < self.universe);
        let word = &mut self.bits[(rank >> 6) as usize];
        let mask = 1u64 << (rank & 63);
        if *word & mask != 0 {
            *word &= !mask;
            self.len -= 1;
            true
        } else {
            false
        }
    }

    /// Set ranks in increasing order.
    pub fn ranks(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(wi as u64 * 64 + b)
            })
        })
    }

    /// Edges in colex order.
    pub fn iter(&self) -> impl Iterator<Item = Subset> + '_ {
        let r = self.r;
        self.ranks().map(move |rank| combinat::unrank_colex(rank, r))
    }

    /// Calls `f` on each edge in colex order without allocating per edge.
    pub fn for_each_edge(&self, mut f: impl FnMut(&[u32])) {
        let mut buf = vec![0u32; self.r as usize];
        for rank in self.ranks() {
            unrank_within(rank, &mut buf, self.n);
            f(&buf);
        }
    }

    /// Calls `f` with the largest vertex of every edge, in colex order
    /// (0 for the empty edge of a 0-graph).
    pub fn for_each_top(&self, mut f: impl FnMut(u32)) {
        let r = self.r;
        let mut top = 0u32;
        let mut next_start = if r == 0 { u64::MAX } else { 0 };
        for rank in self.ranks() {
            // edges with largest vertex m occupy ranks [C(m - 1, r), C(m, r))
            while rank >= next_start {
                top += 1;
                next_start = c64(top, r);
            }
            f(top);
        }
    }

    pub fn edges(&self) -> Vec<Vec<u32>> {
        let mut out = Vec::with_capacity(self.len as usize);
        self.for_each_edge(|e| out.push(e.to_vec()));
        out
    }

    pub fn max_vertex(&self) -> Option<u32> {
        // The colex-last edge carries the largest maximum.
        let last = self.ranks().last()?;
        combinat::unrank_colex(last, self.r).max_element().or(Some(0))
    }

    /// Right extension: every `(l+m)`-subset of `[n]` whose `l` smallest
    /// elements form an edge of `self`.
    pub fn extend(&self, m: i64) -> Result<RGraph, GraphError> {
        if m < 0 {
            return Err(GraphError::NegativeExtension(m));
        }
        let m = m as u32;
        let l = self.r;
        if l + m > self.n {
            return Err(GraphError::UniformityTooLarge {
                n: self.n,
                r: l + m,
            });
        }
        let mut out = RGraph::empty(self.n, l + m)?;
        let n = self.n;
        self.for_each_edge(|prefix| {
            let base = rank_unchecked(prefix);
            let top = prefix.last().copied().unwrap_or(0);
            for_each_subset(n - top, m, |tail| {
                let rank = base
                    + tail
                        .iter()
                        .enumerate()
                        .map(|(j, &z)| c64(z + top - 1, l + j as u32 + 1))
                        .sum::<u64>();
                out.insert_rank(rank);
            });
        });
        Ok(out)
    }

    /// Number of edges of `self.extend(m)`, without materializing it.
    pub fn extension_size(&self, m: u32) -> u64 {
        let mut total = 0u64;
        let n = self.n;
        self.for_each_edge(|prefix| {
            let top = prefix.last().copied().unwrap_or(0);
            total += c64(n - top, m);
        });
        total
    }

    /// All k-subsets of `[n]` containing at least one edge of `self`, where
    /// `self` is `(k - big_r)`-uniform.
    pub fn covered_sets(&self, big_r: u32, k: u32) -> Result<RGraph, GraphError> {
        if k < big_r || self.r != k - big_r {
            return Err(GraphError::UniformityMismatch {
                have: self.r,
                want: k.saturating_sub(big_r),
            });
        }
        if k > self.n {
            return Err(GraphError::UniformityTooLarge { n: self.n, r: k });
        }
        let mut out = RGraph::empty(self.n, k)?;
        let n = self.n;
        let mut merged = vec![0u32; k as usize];
        let mut outside = Vec::with_capacity(n as usize);
        self.for_each_edge(|a| {
            outside.clear();
            outside.extend((1..=n).filter(|v| a.binary_search(v).is_err()));
            for_each_subset(outside.len() as u32, big_r, |pick| {
                merge_into(a, pick.iter().map(|&i| outside[i as usize - 1]), &mut merged);
                out.insert_rank(rank_unchecked(&merged));
            });
        });
        Ok(out)
    }

    /// All r-subsets of `[n]` that are not edges.
    pub fn complement(&self) -> RGraph {
        let mut out = self.clone();
        out.bits.iter_mut().for_each(|w| *w = !*w);
        out.trim_tail();
        out.len = self.universe - self.len;
        out
    }

    /// Translates every vertex by `offset`, placing the graph on `[new_n]`.
    pub fn shift_labels(&self, offset: u32, new_n: u32) -> Result<RGraph, GraphError> {
        if let Some(m) = self.max_vertex() {
            if m + offset > new_n {
                return Err(GraphError::LabelOverflow {
                    vertex: m,
                    offset,
                    new_n,
                });
            }
        }
        let mut out = RGraph::empty(new_n, self.r)?;
        let mut shifted = vec![0u32; self.r as usize];
        self.for_each_edge(|e| {
            for (d, &v) in shifted.iter_mut().zip(e) {
                *d = v + offset;
            }
            out.insert_rank(rank_unchecked(&shifted));
        });
        Ok(out)
    }

    pub fn union(&self, other: &RGraph) -> Result<RGraph, GraphError> {
        if self.n != other.n || self.r != other.r {
            return Err(GraphError::Mismatch {
                n1: self.n,
                r1: self.r,
                n2: other.n,
                r2: other.r,
            });
        }
        let bits: Vec<u64> = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a | b)
            .collect();
        let len = bits.iter().map(|w| w.count_ones() as u64).sum();
        Ok(RGraph { bits, len, ..*self })
    }
}

/// Complement of `g` inside `C([n], k)`; `g` must be k-uniform on `[n]`.
pub fn complement_within(g: &RGraph, n: u32, k: u32) -> Result<RGraph, GraphError> {
    if g.n != n || g.r != k {
        return Err(GraphError::Mismatch {
            n1: g.n,
            r1: g.r,
            n2: n,
            r2: k,
        });
    }
    Ok(g.complement())
}

/// Sorted merge of a sorted slice with an increasing iterator of disjoint values.
pub(crate) fn merge_into(a: &[u32], b: impl Iterator<Item = u32>, out: &mut [u32]) {
    let mut i = 0;
    let mut o = 0;
    for x in b {
        while i < a.len() && a[i] < x {
            out[o] = a[i];
            o += 1;
            i += 1;
        }
        out[o] = x;
        o += 1;
    }
    out[o..].copy_from_slice(&a[i..]);
}

impl EdgeSet for RGraph {
    fn n(&self) -> u32 {
        self.n
    }
    fn r(&self) -> u32 {
        self.r
    }
    fn size(&self) -> u64 {
        self.len
    }
    #[inline]
    fn contains_sorted(&self, edge: &[u32]) -> bool {
        self.contains_rank(rank_unchecked(edge))
    }
}

impl fmt::Debug for RGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RGraph(n={}, r={}, ", self.n, self.r)?;
        f.debug_set().entries(self.iter().take(32)).finish()?;
        if self.len > 32 {
            write!(f, " ... {} edges", self.len)?;
        }
        write!(f, ")")
    }
}
