//! Recursive blocker construction of Turán `(n, r + R, r)`-systems.
//!
//! At a node `(n, r)` above the base level the construction picks a split
//! point `k`, a blocker `S` of `(k - R)`-subsets of `[n]` and lets
//! `T` be the k-sets containing no member of `S`. The system is
//!
//! ```text
//!   S* = every r-set whose (k - R)-prefix lies in S
//!   T* = Y ∪ Z  for Y in T and Z an edge of the (n - max Y, r - k) system
//!        shifted onto [max Y + 1, n]
//! ```
//!
//! Every `(r + R)`-set `X` is covered whatever `S` is: if the k-prefix `Y` of
//! `X` is in `T`, the child system covers the rest of `X`; otherwise some
//! member of `S` inside `Y` extends to an r-subset of `X` in `S*`.
//!
//! `S*` and `T*` are disjoint (an edge of `T*` has its k-prefix in `T`, so its
//! `(k - R)`-prefix is not in `S`), hence the size is exactly
//! `sum_{A in S} C(n - max A, r - k + R) + sum_{Y in T} |child(n - max Y)|`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinat::{
    advance_colex, binom, binom_u64, c64, for_each_subset, next_colex, rank_unchecked, unrank_within,
};
use crate::constants::{self, check_feasibility_general, check_feasibility_main};
use crate::hypergraph::{merge_into, EdgeSet, GraphError, RGraph, MAX_VERTICES};

pub const DEFAULT_MAX_RESAMPLES: u32 = 64;

/// Relative margin for deciding a candidate before its scan completes, wide
/// enough that the early answer always matches the full scan.
const SETTLED: f64 = 1.0 + 1e-12;

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("infeasible configuration: {0}")]
    ConfigInfeasible(String),
    #[error("random blocker at (n={n}, r={r}) exceeded the size bound in {attempts} attempts")]
    ResampleExhausted { n: u32, r: u32, attempts: u32 },
    #[error("r0 override {given} is below the smallest well-defined value {min}")]
    InvalidR0 { given: u32, min: u32 },
    #[error("system at (n={n}, r={r}) has {size} edges, above its bound {bound}")]
    BoundViolated { n: u32, r: u32, size: u64, bound: String },
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("this entry point needs the {0:?} lemma")]
    WrongLemma(Lemma),
    #[error("no blocker step at (n={n}, r={r}): {reason}")]
    NoBlockerStep { n: u32, r: u32, reason: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Which split rule and feasibility conditions drive the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lemma {
    /// `s = r + 1`, split at `k = floor(beta (r + 1))`, base level `floor(mu) - 1`.
    Main,
    /// Any gap `R`, split at `k = floor(beta r)`.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Random,
    Derandomized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionConfig {
    #[serde(rename = "R")]
    pub big_r: u32,
    pub beta: f64,
    pub c: f64,
    pub mu: f64,
    pub lemma: Lemma,
    pub mode: Mode,
    pub seed: u64,
    pub max_resamples: u32,
    pub r0_override: Option<u32>,
}

impl ConstructionConfig {
    /// `(beta, c, mu) = (0.784, 2.89, 6.239)` for `s = r + 1`, valid for every `r`.
    pub fn preset_all_r() -> Self {
        ConstructionConfig {
            big_r: 1,
            beta: 0.784,
            c: 2.89,
            mu: 6.239,
            lemma: Lemma::Main,
            mode: Mode::Derandomized,
            seed: 0,
            max_resamples: DEFAULT_MAX_RESAMPLES,
            r0_override: None,
        }
    }

    /// The stationary point `(c0 / (1 + c0), c0, (c0 + 1)^(R+1) / c0^R)`.
    pub fn optimal(big_r: u32) -> Result<Self, ConstructError> {
        let c0 = constants::solve_c0(big_r as u64, 1e-13)
            .map_err(|e| ConstructError::ConfigInfeasible(e.to_string()))?;
        Ok(ConstructionConfig {
            big_r,
            beta: c0 / (1.0 + c0),
            c: c0,
            mu: constants::mu_from_c(c0, big_r as u64),
            lemma: Lemma::General,
            mode: Mode::Derandomized,
            seed: 0,
            max_resamples: DEFAULT_MAX_RESAMPLES,
            r0_override: None,
        })
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_r0(mut self, r0: u32) -> Self {
        self.r0_override = Some(r0);
        self
    }

    /// Checks the lemma's hypotheses on `(beta, c, mu)`.
    pub fn validate(&self) -> Result<(), ConstructError> {
        if self.big_r < 1 {
            return Err(ConstructError::ConfigInfeasible("R must be at least 1".into()));
        }
        if self.max_resamples < 1 && self.mode == Mode::Random {
            return Err(ConstructError::ConfigInfeasible(
                "max_resamples must be at least 1".into(),
            ));
        }
        match self.lemma {
            Lemma::Main => {
                if self.big_r != 1 {
                    return Err(ConstructError::ConfigInfeasible(
                        "the s = r + 1 lemma needs R = 1".into(),
                    ));
                }
                let f = check_feasibility_main(self.beta, self.c, self.mu);
                if !f.feasible {
                    return Err(ConstructError::ConfigInfeasible(format!(
                        "need beta in (0,1), c, mu > 1, floor(beta mu) >= c and \
                         c/(beta mu - 1) + e^-c/(1 - beta) <= 1; got floor margin {:.6}, lhs {:.9}",
                        f.floor_margin, f.lhs
                    )));
                }
            }
            Lemma::General => {
                let f = check_feasibility_general(self.beta, self.c, self.mu, self.big_r as u64);
                if !f.feasible {
                    return Err(ConstructError::ConfigInfeasible(format!(
                        "need e^-c < (1 - beta)^R and c/beta^R + e^-c mu/(1 - beta)^R <= mu; \
                         got (1-beta)^R - e^-c = {:.6e}, lhs {:.9} vs mu {:.9}",
                        f.strict_margin, f.lhs, self.mu
                    )));
                }
            }
        }
        Ok(())
    }

    /// Split point for uniformity `r`.
    pub fn k_for(&self, r: u32) -> u32 {
        let x = match self.lemma {
            Lemma::Main => self.beta * (r as f64 + 1.0),
            Lemma::General => self.beta * r as f64,
        };
        x.floor().max(0.0) as u32
    }

    /// Whether the blocker step at uniformity `r` is well defined:
    /// `k >= R` and `c / C(k, R) <= 1`.
    fn step_defined(&self, r: u32) -> bool {
        let k = self.k_for(r);
        if k < self.big_r || k > r {
            return false;
        }
        let ways = binom(k as u64, self.big_r as i64).to_f64().unwrap_or(f64::INFINITY);
        self.c <= ways
    }

    /// Smallest `r0` such that the blocker step is defined for every `r > r0`.
    pub fn min_r0(&self) -> Result<u32, ConstructError> {
        // k and C(k, R) are non-decreasing in r, so the first good r settles it.
        (1..=4096u32)
            .find(|&r| self.step_defined(r))
            .map(|r| r - 1)
            .ok_or_else(|| {
                ConstructError::ConfigInfeasible(
                    "blocker step undefined for every r up to 4096".into(),
                )
            })
    }

    /// Largest uniformity handled by the complete r-graph.
    pub fn r0(&self) -> Result<u32, ConstructError> {
        let min = self.min_r0()?;
        let default = match self.lemma {
            Lemma::Main => (self.mu.floor() as u32).saturating_sub(1).max(min),
            Lemma::General => min,
        };
        match self.r0_override {
            Some(given) if given < min => Err(ConstructError::InvalidR0 { given, min }),
            Some(given) => Ok(given),
            None => Ok(default),
        }
    }
}

/// Derives a reproducible per-node seed, independent of construction order.
pub fn node_seed(seed: u64, n: u32, r: u32, attempt: u32) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let mut h = mix(seed);
    h = mix(h ^ n as u64);
    h = mix(h ^ ((r as u64) << 20));
    mix(h ^ ((attempt as u64) << 40))
}

// ---------------------------------------------------------------------------
// systems

/// A constructed Turán system, kept in factored form.
#[derive(Debug)]
pub struct TuranSystem {
    n: u32,
    r: u32,
    big_r: u32,
    size: u64,
    kind: SystemKind,
}

#[derive(Debug)]
pub enum SystemKind {
    /// All r-subsets of `[n]`.
    Complete,
    /// No edges; used when `n <= r`.
    Empty,
    Split(Box<SplitNode>),
}

#[derive(Debug)]
pub struct SplitNode {
    pub k: u32,
    /// The blocker `S`, a `(k - R)`-graph on `[n]`.
    pub blocker: RGraph,
    /// `T`: the k-sets of `[n]` with no `(k - R)`-subset in `S`.
    pub uncovered: RGraph,
    /// `children[m]` is the `(m, r - k)` system, for `m` in `0..=n - k`.
    pub children: Vec<Arc<TuranSystem>>,
    /// `|S*|`
    pub extension_part: u64,
    /// `|T*|`
    pub recursion_part: u64,
}

impl TuranSystem {
    fn leaf(n: u32, r: u32, big_r: u32, complete: bool) -> Self {
        TuranSystem {
            n,
            r,
            big_r,
            size: if complete { binom_u64(n, r).unwrap_or(0) } else { 0 },
            kind: if complete {
                SystemKind::Complete
            } else {
                SystemKind::Empty
            },
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Covering size `s = r + R`.
    pub fn s(&self) -> u32 {
        self.r + self.big_r
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    /// Depth of the recursion below this node (leaves have depth 0).
    pub fn depth(&self) -> u32 {
        match &self.kind {
            SystemKind::Split(node) => {
                1 + node.children.iter().map(|c| c.depth()).max().unwrap_or(0)
            }
            _ => 0,
        }
    }

    /// Expands the factored form into an explicit edge bitvector.
    pub fn materialize(&self) -> Result<RGraph, GraphError> {
        let (n, r) = (self.n, self.r);
        let node = match &self.kind {
            SystemKind::Complete => return RGraph::complete(n, r),
            SystemKind::Empty => return RGraph::empty(n, r),
            SystemKind::Split(node) => node,
        };
        let k = node.k;
        let mut out = node.blocker.extend((r + self.big_r - k) as i64)?;

        let mut child_graphs: HashMap<u32, RGraph> = HashMap::new();
        let mut current_y: Option<u32> = None;
        let mut tails: Vec<u64> = Vec::new();
        let mut y_buf = vec![0u32; k as usize];
        for rank in node.uncovered.ranks() {
            unrank_within(rank, &mut y_buf, n);
            let y = y_buf[k as usize - 1];
            if current_y != Some(y) {
                current_y = Some(y);
                let child = &node.children[(n - y) as usize];
                if let std::collections::hash_map::Entry::Vacant(e) = child_graphs.entry(child.n) {
                    e.insert(child.materialize()?);
                }
                // Edges of the child moved onto [y + 1, n]; their rank
                // contribution sits at positions k + 1 .. r.
                let placed = child_graphs[&child.n].shift_labels(y, n)?;
                tails.clear();
                placed.for_each_edge(|z| {
                    tails.push(
                        z.iter()
                            .enumerate()
                            .map(|(j, &v)| c64(v - 1, k + j as u32 + 1))
                            .sum(),
                    );
                });
            }
            for &t in &tails {
                out.insert_rank(rank + t);
            }
        }
        debug_assert_eq!(out.len(), self.size);
        Ok(out)
    }
}

impl EdgeSet for TuranSystem {
    fn n(&self) -> u32 {
        self.n
    }

    fn r(&self) -> u32 {
        self.r
    }

    fn size(&self) -> u64 {
        self.size
    }

    /// Membership without materializing: recurse into the child attached to
    /// the k-prefix.
    fn contains_sorted(&self, edge: &[u32]) -> bool {
        match &self.kind {
            SystemKind::Complete => true,
            SystemKind::Empty => false,
            SystemKind::Split(node) => {
                let k = node.k as usize;
                let kr = k - self.big_r as usize;
                if node.blocker.contains_rank(rank_unchecked(&edge[..kr])) {
                    return true;
                }
                if !node.uncovered.contains_rank(rank_unchecked(&edge[..k])) {
                    return false;
                }
                let y = edge[k - 1];
                let mut tail = [0u32; MAX_VERTICES as usize];
                let rest = &edge[k..];
                for (d, &v) in tail.iter_mut().zip(rest) {
                    *d = v - y;
                }
                node.children[(self.n - y) as usize].contains_sorted(&tail[..rest.len()])
            }
        }
    }
}

// ---------------------------------------------------------------------------
// blockers

/// Per-candidate weights of the blocker objective, as functions of the
/// largest vertex: `extend[a]` is the number of r-sets a blocker member with
/// maximum `a` contributes, `recurse[y]` the size of the subsystem attached
/// to an uncovered k-set with maximum `y`.
#[derive(Debug, Clone)]
pub struct BlockerWeights {
    pub extend: Vec<f64>,
    pub recurse: Vec<f64>,
}

/// One blocker-selection problem: choose `S ⊆ C([n], k - R)`.
#[derive(Debug, Clone)]
pub struct BlockerProblem {
    pub n: u32,
    pub k: u32,
    pub big_r: u32,
    /// Inclusion probability of the random blocker.
    pub p: f64,
    pub weights: BlockerWeights,
}

#[derive(Debug, Clone)]
pub struct Blocker {
    pub blocker: RGraph,
    pub uncovered: RGraph,
    /// Objective `|S*| + |T*|` of the fully random blocker.
    pub initial_estimate: f64,
    /// Objective of the returned blocker.
    pub objective: f64,
}

impl BlockerProblem {
    fn kr(&self) -> u32 {
        self.k - self.big_r
    }

    /// Number of `(k - R)`-subsets inside one k-set.
    fn inner_count(&self) -> u64 {
        binom_u64(self.k, self.big_r).expect("k within table")
    }

    /// `|S*| + |T*|` of a random blocker: `p sum w_s + (1 - p)^C(k,R) sum w_t`.
    pub fn initial_estimate(&self) -> f64 {
        let (n, k, kr) = (self.n, self.k, self.kr());
        let sum_s: f64 = if kr == 0 {
            self.weights.extend[0]
        } else {
            (kr..=n)
                .map(|a| c64(a - 1, kr - 1) as f64 * self.weights.extend[a as usize])
                .sum()
        };
        let sum_t: f64 = (k..=n)
            .map(|y| c64(y - 1, k - 1) as f64 * self.weights.recurse[y as usize])
            .sum();
        self.p * sum_s + (1.0 - self.p).powi(self.inner_count() as i32) * sum_t
    }

    /// `T` for a fixed blocker.
    pub fn uncovered_by(&self, blocker: &RGraph) -> Result<RGraph, GraphError> {
        Ok(blocker.covered_sets(self.big_r, self.k)?.complement())
    }

    /// `|S*| + |T*|` for a fixed blocker.
    pub fn objective(&self, blocker: &RGraph) -> Result<f64, GraphError> {
        let t = self.uncovered_by(blocker)?;
        Ok(self.objective_with(blocker, &t))
    }

    fn objective_with(&self, blocker: &RGraph, uncovered: &RGraph) -> f64 {
        let mut total = 0.0;
        blocker.for_each_top(|a| total += self.weights.extend[a as usize]);
        uncovered.for_each_top(|y| total += self.weights.recurse[y as usize]);
        total
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Result<RGraph, ConstructError> {
        sample_blocker(self.n, self.kr(), self.p, rng)
    }

    /// Method of conditional expectations over the candidates in colex order.
    ///
    /// The estimator is `sum_{A in} w_s(A) + p sum_{A undecided} w_s(A) +
    /// sum_Y Pr[Y uncovered] w_t(Y)`. Fixing `A` in changes it by `w_s(A)
    /// - sum_Y w_t(Y)(1-p)^(u_Y - 1)` relative to fixing it out, where the sum
    /// runs over live k-sets `Y ⊃ A` and `u_Y` counts their undecided
    /// `(k - R)`-subsets including `A`. The cheaper branch is taken; ties go
    /// to exclusion. Because candidates are visited in colex order, `u_Y` is
    /// `C(k, R)` minus the colex rank of `A`'s position pattern inside `Y`.
    pub fn derandomize(&self) -> Result<Blocker, ConstructError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(ConstructError::ProbabilityOutOfRange(self.p));
        }
        let (n, k, kr) = (self.n, self.k, self.kr());
        let initial_estimate = self.initial_estimate();
        if self.p == 0.0 || self.p == 1.0 {
            let blocker = if self.p == 0.0 {
                RGraph::empty(n, kr)?
            } else {
                RGraph::complete(n, kr)?
            };
            let uncovered = self.uncovered_by(&blocker)?;
            let objective = self.objective_with(&blocker, &uncovered);
            return Ok(Blocker {
                blocker,
                uncovered,
                initial_estimate,
                objective,
            });
        }
        let inner = self.inner_count();
        let pow: Vec<f64> = (0..=inner).map(|i| (1.0 - self.p).powi(i as i32)).collect();
        let mut blocker = RGraph::empty(n, kr)?;
        let mut alive = RGraph::complete(n, k)?;
        let ws = &self.weights.extend;
        let wt = &self.weights.recurse;

        if kr > n {
            let objective = self.objective_with(&blocker, &alive);
            return Ok(Blocker {
                blocker,
                uncovered: alive,
                initial_estimate,
                objective,
            });
        }

        let mut a: Vec<u32> = (1..=kr).collect();
        let mut rank_a: u64 = 0;
        let mut hits: Vec<u64> = Vec::with_capacity(64);

        if self.big_r == 1 {
            self.fill_gap_one(&pow, &mut blocker, &mut alive);
        } else {
            let mut outside: Vec<u32> = Vec::with_capacity(n as usize);
            let mut y = vec![0u32; k as usize];
            loop {
                outside.clear();
                outside.extend((1..=n).filter(|v| a.binary_search(v).is_err()));
                let top = a.last().copied().unwrap_or(0);
                hits.clear();
                let mut gain = 0.0;
                for_each_subset(outside.len() as u32, self.big_r, |pick| {
                    merge_into(&a, pick.iter().map(|&i| outside[i as usize - 1]), &mut y);
                    let y_rank = rank_unchecked(&y);
                    if alive.contains_rank(y_rank) {
                        // colex rank of A's positions inside Y
                        let mut local = 0u64;
                        let mut idx = 0u32;
                        let mut ai = 0usize;
                        for (pos, &v) in y.iter().enumerate() {
                            if ai < a.len() && a[ai] == v {
                                idx += 1;
                                local += c64(pos as u32, idx);
                                ai += 1;
                            }
                        }
                        let undecided = inner - local;
                        gain += wt[y[k as usize - 1] as usize] * pow[undecided as usize - 1];
                        hits.push(y_rank);
                    }
                });
                if ws[top as usize] < gain {
                    blocker.insert_rank(rank_a);
                    for &h in &hits {
                        alive.clear_rank(h);
                    }
                }
                rank_a += 1;
                if !next_colex(&mut a, n) {
                    break;
                }
            }
        }
        let objective = self.objective_with(&blocker, &alive);
        Ok(Blocker {
            blocker,
            uncovered: alive,
            initial_estimate,
            objective,
        })
    }

    /// The `R = 1` scan. A candidate `A` and an outside vertex `v` in the gap
    /// before `A`'s `j`-th element give `Y = A + v` with `u_Y = j + 1` and
    /// `rank(Y) = rank(A) + C(v - 1, j + 1) + delta[j]`, where `delta[j]` sums
    /// `C(a_i - 1, i + 2) - C(a_i - 1, i + 1)` over `i >= j`. Only the low
    /// positions of `A` move between colex neighbours, so `delta` is repaired
    /// in amortized constant time. A k-set above `A` has `A` as its first
    /// subset and is still alive, so those terms need no lookup.
    #[allow(clippy::needless_range_loop)]
    fn fill_gap_one(&self, pow: &[f64], blocker: &mut RGraph, alive: &mut RGraph) {
        let (n, k) = (self.n, self.k);
        let kr = (k - 1) as usize;
        let ws = &self.weights.extend;
        let wt = &self.weights.recurse;
        let stride = k as usize + 1;
        let bt: Vec<u64> = (0..=n)
            .flat_map(|v| (0..stride).map(move |i| c64(v, i as u32)))
            .collect();
        let col = |v: u32, i: usize| bt[v as usize * stride + i];
        // above[t] = sum of recursion weights over v > t
        let mut above = vec![0.0; n as usize + 1];
        for t in (0..n as usize).rev() {
            above[t] = above[t + 1] + wt[t + 1];
        }

        let mut a: Vec<u32> = (1..=kr as u32).collect();
        let mut delta = vec![0u64; kr + 1];
        let mut cap = vec![0.0; kr + 1];
        let mut dirty = kr;
        let mut rank_a: u64 = 0;
        loop {
            for i in (0..dirty.min(kr)).rev() {
                let x = a[i] - 1;
                delta[i] = delta[i + 1]
                    .wrapping_add(col(x, i + 2))
                    .wrapping_sub(col(x, i + 1));
            }
            let top = a.last().copied().unwrap_or(0);
            let base_gain = pow[kr] * above[top as usize];
            let wt_top = wt[top as usize];
            let w = ws[top as usize];
            // cap[j]: the most the gaps from position j upward can add
            for j in (0..kr).rev() {
                let below = if j == 0 { 1 } else { a[j - 1] + 1 };
                cap[j] = cap[j + 1] + pow[j] * (a[j] - below) as f64;
            }
            let include = if w < base_gain {
                true
            } else if w >= (base_gain + wt_top * cap[0]) * SETTLED {
                false
            } else {
                // stop as soon as the remaining gaps cannot change the outcome
                let mut weight = 0.0;
                let mut lo = 1u32;
                let mut decided = None;
                for j in 0..kr {
                    let off = rank_a.wrapping_add(delta[j]);
                    for v in lo..a[j] {
                        if alive.contains_rank(off.wrapping_add(col(v - 1, j + 1))) {
                            weight += pow[j];
                        }
                    }
                    lo = a[j] + 1;
                    if w < base_gain + wt_top * weight {
                        decided = Some(true);
                        break;
                    }
                    if w >= (base_gain + wt_top * (weight + cap[j + 1])) * SETTLED {
                        decided = Some(false);
                        break;
                    }
                }
                decided.unwrap_or(w < base_gain + wt_top * weight)
            };
            if include {
                blocker.insert_rank(rank_a);
                let mut lo = 1u32;
                for j in 0..kr {
                    let off = rank_a.wrapping_add(delta[j]);
                    for v in lo..a[j] {
                        alive.clear_rank(off.wrapping_add(col(v - 1, j + 1)));
                    }
                    lo = a[j] + 1;
                }
                for v in top + 1..=n {
                    alive.clear_rank(rank_a + col(v - 1, kr + 1));
                }
            }
            rank_a += 1;
            match advance_colex(&mut a, n) {
                Some(i) => dirty = i + 1,
                None => break,
            }
        }
    }
}

/// Includes each `kr`-subset of `[n]` independently with probability `p`,
/// drawing in colex order.
pub fn sample_blocker(
    n: u32,
    kr: u32,
    p: f64,
    rng: &mut impl Rng,
) -> Result<RGraph, ConstructError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ConstructError::ProbabilityOutOfRange(p));
    }
    let mut s = RGraph::empty(n, kr)?;
    for rank in 0..s.universe() {
        if rng.gen::<f64>() < p {
            s.insert_rank(rank);
        }
    }
    Ok(s)
}

/// Free-function form of [`BlockerProblem::derandomize`].
pub fn derandomize_blocker(
    n: u32,
    k: u32,
    big_r: u32,
    p: f64,
    weights: BlockerWeights,
) -> Result<Blocker, ConstructError> {
    BlockerProblem {
        n,
        k,
        big_r,
        p,
        weights,
    }
    .derandomize()
}

// ---------------------------------------------------------------------------
// ledger

#[derive(Debug, Clone)]
struct LedgerEntry {
    bound: BigRational,
    /// The recursion bound reached `C(n, r)`, so the complete graph is used.
    complete: bool,
}

/// Exact recursive size bounds `B(n, r)`.
#[derive(Debug, Default)]
pub struct BoundLedger {
    entries: Mutex<HashMap<(u32, u32), LedgerEntry>>,
}

// ---------------------------------------------------------------------------
// constructor

/// Cache of finished systems keyed by `(n, r)`, one writer per key.
#[derive(Debug, Default)]
pub struct SystemCache {
    slots: Mutex<HashMap<(u32, u32), Arc<Mutex<Option<Arc<TuranSystem>>>>>>,
}

impl SystemCache {
    fn slot(&self, key: (u32, u32)) -> Arc<Mutex<Option<Arc<TuranSystem>>>> {
        self.slots
            .lock()
            .expect("cache poisoned")
            .entry(key)
            .or_default()
            .clone()
    }

    pub fn len(&self) -> usize {
        self.slots
            .lock()
            .expect("cache poisoned")
            .values()
            .filter(|s| s.lock().map(|g| g.is_some()).unwrap_or(false))
            .count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Builds systems for one configuration, sharing subsystems across calls.
#[derive(Debug)]
pub struct Constructor {
    cfg: ConstructionConfig,
    r0: u32,
    exact_c: BigRational,
    memoize: bool,
    cache: SystemCache,
    ledger: BoundLedger,
}

impl Constructor {
    pub fn new(cfg: ConstructionConfig) -> Result<Self, ConstructError> {
        cfg.validate()?;
        let r0 = cfg.r0()?;
        let exact_c = BigRational::from_float(cfg.c)
            .ok_or_else(|| ConstructError::ConfigInfeasible(format!("c = {}", cfg.c)))?;
        Ok(Constructor {
            cfg,
            r0,
            exact_c,
            memoize: true,
            cache: SystemCache::default(),
            ledger: BoundLedger::default(),
        })
    }

    /// Disables the shared subsystem cache; every node rebuilds its children.
    pub fn without_cache(mut self) -> Self {
        self.memoize = false;
        self
    }

    pub fn config(&self) -> &ConstructionConfig {
        &self.cfg
    }

    pub fn r0(&self) -> u32 {
        self.r0
    }

    pub fn cache(&self) -> &SystemCache {
        &self.cache
    }

    fn is_base(&self, r: u32) -> bool {
        r <= self.r0
    }

    /// Exact `p = c / C(k, R)`.
    fn exact_p(&self, k: u32) -> BigRational {
        let ways = binom(k as u64, self.cfg.big_r as i64);
        &self.exact_c / BigRational::from_integer(BigInt::from(ways))
    }

    fn ledger_entry(&self, n: u32, r: u32) -> LedgerEntry {
        if let Some(e) = self.ledger.entries.lock().expect("ledger poisoned").get(&(n, r)) {
            return e.clone();
        }
        let full = BigRational::from_integer(BigInt::from(binom(n as u64, r as i64)));
        let entry = if self.is_base(r) {
            LedgerEntry {
                bound: full,
                complete: true,
            }
        } else if n <= r {
            LedgerEntry {
                bound: BigRational::zero(),
                complete: false,
            }
        } else {
            let k = self.cfg.k_for(r);
            let p = self.exact_p(k);
            let inner = binom_u64(k, self.cfg.big_r).expect("k within table") as i32;
            let q = (BigRational::one() - &p).pow(inner);
            let mut tail = BigRational::zero();
            for y in k..=n {
                let ways = binom(y as u64 - 1, k as i64 - 1);
                if ways.is_zero() {
                    continue;
                }
                let child = self.ledger_entry(n - y, r - k).bound;
                tail += child * BigRational::from_integer(BigInt::from(ways));
            }
            let rec = &p * &full + q * tail;
            if rec >= full {
                LedgerEntry {
                    bound: full,
                    complete: true,
                }
            } else {
                LedgerEntry {
                    bound: rec,
                    complete: false,
                }
            }
        };
        self.ledger
            .entries
            .lock()
            .expect("ledger poisoned")
            .insert((n, r), entry.clone());
        entry
    }

    /// `B(n, r)`: an exact upper bound on the size of the system built at `(n, r)`.
    pub fn ledger_bound(&self, n: u32, r: u32) -> BigRational {
        self.ledger_entry(n, r).bound
    }

    /// The blocker-selection problem at `(n, r)`, with child systems built.
    pub fn blocker_problem(&self, n: u32, r: u32) -> Result<BlockerProblem, ConstructError> {
        let k = self.cfg.k_for(r);
        let big_r = self.cfg.big_r;
        if k < big_r || k > r || n <= r {
            return Err(ConstructError::NoBlockerStep {
                n,
                r,
                reason: format!("k = {k} with R = {big_r}"),
            });
        }
        let ways = binom_u64(k, big_r).expect("k within table") as f64;
        let p = self.cfg.c / ways;
        if p > 1.0 {
            return Err(ConstructError::NoBlockerStep {
                n,
                r,
                reason: format!("c / C(k, R) = {p} > 1"),
            });
        }
        let children = self.children(n, r, k)?;
        Ok(self.problem_from(n, r, k, p, &children))
    }

    fn children(&self, n: u32, r: u32, k: u32) -> Result<Vec<Arc<TuranSystem>>, ConstructError> {
        (0..=n - k).map(|m| self.build(m, r - k)).collect()
    }

    fn problem_from(
        &self,
        n: u32,
        r: u32,
        k: u32,
        p: f64,
        children: &[Arc<TuranSystem>],
    ) -> BlockerProblem {
        let big_r = self.cfg.big_r;
        let m = r + big_r - k;
        let extend = (0..=n).map(|a| c64(n - a, m) as f64).collect();
        let recurse = (0..=n)
            .map(|y| {
                if y >= k {
                    children[(n - y) as usize].size as f64
                } else {
                    0.0
                }
            })
            .collect();
        BlockerProblem {
            n,
            k,
            big_r,
            p,
            weights: BlockerWeights { extend, recurse },
        }
    }

    /// Builds (or fetches) the Turán `(n, r + R, r)`-system.
    pub fn build(&self, n: u32, r: u32) -> Result<Arc<TuranSystem>, ConstructError> {
        if n > MAX_VERTICES {
            return Err(GraphError::TooManyVertices { n }.into());
        }
        if !self.memoize {
            return self.build_node(n, r).map(Arc::new);
        }
        let slot = self.cache.slot((n, r));
        let mut guard = slot.lock().expect("cache slot poisoned");
        if let Some(sys) = guard.as_ref() {
            return Ok(sys.clone());
        }
        let sys = Arc::new(self.build_node(n, r)?);
        *guard = Some(sys.clone());
        Ok(sys)
    }

    fn build_node(&self, n: u32, r: u32) -> Result<TuranSystem, ConstructError> {
        let big_r = self.cfg.big_r;
        if self.is_base(r) {
            return Ok(TuranSystem::leaf(n, r, big_r, true));
        }
        if n <= r {
            return Ok(TuranSystem::leaf(n, r, big_r, false));
        }
        let entry = self.ledger_entry(n, r);
        if entry.complete {
            return Ok(TuranSystem::leaf(n, r, big_r, true));
        }
        let k = self.cfg.k_for(r);
        let ways = binom_u64(k, big_r).expect("k within table") as f64;
        let p = self.cfg.c / ways;
        let children = self.children(n, r, k)?;
        let problem = self.problem_from(n, r, k, p, &children);

        let (blocker, uncovered, size, ext, rec) = match self.cfg.mode {
            Mode::Derandomized => {
                let b = problem.derandomize()?;
                let (size, ext, rec) = exact_size(&b.blocker, &b.uncovered, n, r, k, big_r, &children);
                if !fits(size, &entry.bound) {
                    return Err(ConstructError::BoundViolated {
                        n,
                        r,
                        size,
                        bound: entry.bound.to_string(),
                    });
                }
                (b.blocker, b.uncovered, size, ext, rec)
            }
            Mode::Random => {
                let mut accepted = None;
                for attempt in 0..self.cfg.max_resamples {
                    let mut rng = ChaCha8Rng::seed_from_u64(node_seed(self.cfg.seed, n, r, attempt));
                    let s = problem.sample(&mut rng)?;
                    let t = problem.uncovered_by(&s)?;
                    let (size, ext, rec) = exact_size(&s, &t, n, r, k, big_r, &children);
                    if fits(size, &entry.bound) {
                        accepted = Some((s, t, size, ext, rec));
                        break;
                    }
                }
                accepted.ok_or(ConstructError::ResampleExhausted {
                    n,
                    r,
                    attempts: self.cfg.max_resamples,
                })?
            }
        };
        Ok(TuranSystem {
            n,
            r,
            big_r,
            size,
            kind: SystemKind::Split(Box::new(SplitNode {
                k,
                blocker,
                uncovered,
                children,
                extension_part: ext,
                recursion_part: rec,
            })),
        })
    }
}

fn fits(size: u64, bound: &BigRational) -> bool {
    BigRational::from_integer(BigInt::from(size)) <= *bound
}

fn exact_size(
    blocker: &RGraph,
    uncovered: &RGraph,
    n: u32,
    r: u32,
    k: u32,
    big_r: u32,
    children: &[Arc<TuranSystem>],
) -> (u64, u64, u64) {
    let m = r + big_r - k;
    let mut ext = 0u64;
    blocker.for_each_top(|a| ext += c64(n - a, m));
    let mut rec = 0u64;
    uncovered.for_each_top(|y| rec += children[(n - y) as usize].size);
    (ext + rec, ext, rec)
}

/// Builds the `s = r + 1` system with the split `k = floor(beta (r + 1))`.
pub fn construct_r_plus_1(
    n: u32,
    r: u32,
    cfg: &ConstructionConfig,
) -> Result<Arc<TuranSystem>, ConstructError> {
    if cfg.lemma != Lemma::Main {
        return Err(ConstructError::WrongLemma(Lemma::Main));
    }
    Constructor::new(cfg.clone())?.build(n, r)
}

/// Builds the general-gap system with the split `k = floor(beta r)`.
pub fn construct_general(
    n: u32,
    r: u32,
    cfg: &ConstructionConfig,
) -> Result<Arc<TuranSystem>, ConstructError> {
    if cfg.lemma != Lemma::General {
        return Err(ConstructError::WrongLemma(Lemma::General));
    }
    Constructor::new(cfg.clone())?.build(n, r)
}

/// `B` as a big integer floor, for reporting.
pub fn bound_floor(bound: &BigRational) -> BigUint {
    bound.floor().to_integer().to_biguint().unwrap_or_default()
}
