//! Exact Turán numbers of tiny instances by branch and bound.
//!
//! The search repeatedly takes the colex-least uncovered s-set and branches
//! on which of its r-subsets covers it. Once a branch on edge `e` is done,
//! `e` is forbidden in the later siblings, so every system is met at most
//! once. All s-sets look alike at the root, and all r-subsets of the first
//! s-set look alike under its stabilizer, so only the first root child is
//! explored.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::trivial_lower_bound;
use crate::combinat::{binom_u64, for_each_subset, rank_unchecked};
use crate::hypergraph::{GraphError, RGraph};

pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

/// Largest number of s-sets the solver accepts.
pub const MAX_SETS: u64 = 200_000;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("need r < s, got r = {r}, s = {s}")]
    BadParameters { s: u32, r: u32 },
    #[error("C({n}, {s}) s-sets are beyond the exact solver")]
    InstanceTooLarge { n: u32, s: u32 },
    #[error("node budget exhausted: optimum lies in [{lower}, {upper}]")]
    BudgetExhausted {
        lower: u64,
        upper: u64,
        best: RGraph,
        nodes: u64,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactResult {
    pub n: u32,
    pub s: u32,
    pub r: u32,
    pub optimum: u64,
    #[serde(serialize_with = "ser_edges")]
    pub witness: RGraph,
    pub nodes_explored: u64,
    /// The search ran to completion, so nothing smaller exists.
    pub proof_of_optimality: bool,
}

fn ser_edges<S: serde::Serializer>(g: &RGraph, ser: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = ser.serialize_seq(Some(g.len() as usize))?;
    for e in g.edges() {
        seq.serialize_element(&e)?;
    }
    seq.end()
}

/// The averaging bound `C(n, r) / C(s, s - r)`.
pub fn lower_bound_lp(n: u32, s: u32, r: u32) -> BigRational {
    trivial_lower_bound(n, s, r)
}

fn lp_ceil(n: u32, s: u32, r: u32) -> u64 {
    let b = lower_bound_lp(n, s, r);
    b.ceil().to_integer().to_u64().unwrap_or(u64::MAX)
}

/// Incidence between s-sets and r-sets of `[n]`, both indexed by colex rank.
struct Incidence {
    /// r-subsets of each s-set, flattened with stride `per_set`.
    subsets: Vec<u32>,
    per_set: usize,
    /// s-sets containing each r-set.
    supersets: Vec<Vec<u32>>,
}

impl Incidence {
    fn new(n: u32, s: u32, r: u32) -> Result<Self, ExactError> {
        let sets = binom_u64(n, s).unwrap_or(u64::MAX);
        if sets > MAX_SETS {
            return Err(ExactError::InstanceTooLarge { n, s });
        }
        let per_set = binom_u64(s, r).expect("s is small") as usize;
        let edges = binom_u64(n, r).expect("n is small") as usize;
        let mut subsets = Vec::with_capacity(sets as usize * per_set);
        let mut supersets = vec![Vec::new(); edges];
        let mut idx = 0u32;
        let mut e = vec![0u32; r as usize];
        for_each_subset(n, s, |x| {
            for_each_subset(s, r, |pos| {
                for (slot, &p) in e.iter_mut().zip(pos) {
                    *slot = x[p as usize - 1];
                }
                let er = rank_unchecked(&e) as u32;
                subsets.push(er);
                supersets[er as usize].push(idx);
            });
            idx += 1;
        });
        Ok(Incidence {
            subsets,
            per_set,
            supersets,
        })
    }

    fn sets(&self) -> usize {
        self.subsets.len() / self.per_set.max(1)
    }

    fn of(&self, set: usize) -> &[u32] {
        &self.subsets[set * self.per_set..(set + 1) * self.per_set]
    }
}

/// Repeatedly adds the r-set covering the most uncovered s-sets (lowest rank
/// on ties).
pub fn greedy_upper(n: u32, s: u32, r: u32) -> Result<RGraph, ExactError> {
    if r >= s {
        return Err(ExactError::BadParameters { s, r });
    }
    let inc = Incidence::new(n, s, r)?;
    let mut out = RGraph::empty(n, r)?;
    let mut covered = vec![false; inc.sets()];
    let mut gain: Vec<usize> = inc.supersets.iter().map(|v| v.len()).collect();
    let mut left = inc.sets();
    while left > 0 {
        let (best, _) = gain
            .iter()
            .enumerate()
            .fold((0, 0), |acc, (i, &g)| if g > acc.1 { (i, g) } else { acc });
        out.insert_rank(best as u64);
        for &x in &inc.supersets[best] {
            let x = x as usize;
            if !covered[x] {
                covered[x] = true;
                left -= 1;
                for &e in inc.of(x) {
                    gain[e as usize] -= 1;
                }
            }
        }
    }
    Ok(out)
}

struct Search<'a> {
    inc: &'a Incidence,
    /// Chosen edges inside each s-set.
    hits: Vec<u32>,
    /// Uncovered s-sets containing each r-set.
    gain: Vec<u32>,
    forbidden: Vec<bool>,
    chosen: Vec<u32>,
    uncovered: usize,
    best: Vec<u32>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
    // scratch for the packing bound
    mark: Vec<u64>,
    stamp: u64,
}

impl Search<'_> {
    fn add(&mut self, e: u32) {
        self.chosen.push(e);
        for &x in &self.inc.supersets[e as usize] {
            let x = x as usize;
            self.hits[x] += 1;
            if self.hits[x] == 1 {
                self.uncovered -= 1;
                for &f in self.inc.of(x) {
                    self.gain[f as usize] -= 1;
                }
            }
        }
    }

    fn remove(&mut self, e: u32) {
        self.chosen.pop();
        for &x in &self.inc.supersets[e as usize] {
            let x = x as usize;
            self.hits[x] -= 1;
            if self.hits[x] == 0 {
                self.uncovered += 1;
                for &f in self.inc.of(x) {
                    self.gain[f as usize] += 1;
                }
            }
        }
    }

    /// Edges still needed: the larger of a counting bound and a greedy
    /// packing of uncovered s-sets with no usable r-set in common. Returns
    /// `None` if some uncovered s-set has every r-subset forbidden.
    fn lower_bound(&mut self) -> Option<usize> {
        let max_gain = self
            .gain
            .iter()
            .zip(&self.forbidden)
            .filter(|(_, &f)| !f)
            .map(|(&g, _)| g as usize)
            .max()
            .unwrap_or(0);
        if max_gain == 0 {
            return if self.uncovered == 0 { Some(0) } else { None };
        }
        let counting = self.uncovered.div_ceil(max_gain);
        self.stamp += 1;
        let mut packed = 0;
        for x in 0..self.inc.sets() {
            if self.hits[x] != 0 {
                continue;
            }
            let mut usable = false;
            let mut clash = false;
            for &e in self.inc.of(x) {
                if self.forbidden[e as usize] {
                    continue;
                }
                usable = true;
                if self.mark[e as usize] == self.stamp {
                    clash = true;
                }
            }
            if !usable {
                return None;
            }
            if !clash {
                packed += 1;
                for &e in self.inc.of(x) {
                    self.mark[e as usize] = self.stamp;
                }
            }
        }
        Some(counting.max(packed))
    }

    fn dfs(&mut self, root: bool) {
        if self.exhausted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        if self.uncovered == 0 {
            if self.chosen.len() < self.best.len() {
                self.best = self.chosen.clone();
            }
            return;
        }
        match self.lower_bound() {
            Some(lb) if self.chosen.len() + lb < self.best.len() => {}
            _ => return,
        }
        let x = (0..self.inc.sets())
            .find(|&x| self.hits[x] == 0)
            .expect("an uncovered set exists");
        let mut options: Vec<u32> = self
            .inc
            .of(x)
            .iter()
            .copied()
            .filter(|&e| !self.forbidden[e as usize])
            .collect();
        options.sort_by_key(|&e| (std::cmp::Reverse(self.gain[e as usize]), e));
        if root {
            options.truncate(1);
        }
        let mut banned = Vec::new();
        for e in options {
            self.add(e);
            self.dfs(false);
            self.remove(e);
            if self.exhausted {
                break;
            }
            self.forbidden[e as usize] = true;
            banned.push(e);
        }
        for e in banned {
            self.forbidden[e as usize] = false;
        }
    }
}

/// `T(n, s, r)` with a witness, exploring at most `budget` nodes.
pub fn solve_exact(n: u32, s: u32, r: u32, budget: u64) -> Result<ExactResult, ExactError> {
    if r >= s {
        return Err(ExactError::BadParameters { s, r });
    }
    let done = |witness: RGraph, nodes| ExactResult {
        n,
        s,
        r,
        optimum: witness.len(),
        witness,
        nodes_explored: nodes,
        proof_of_optimality: true,
    };
    if n < s {
        return Ok(done(RGraph::empty(n, r)?, 0));
    }
    if r == 0 {
        return Ok(done(RGraph::complete(n, 0)?, 0));
    }
    let inc = Incidence::new(n, s, r)?;
    let greedy = greedy_upper(n, s, r)?;
    let lower = lp_ceil(n, s, r);
    if greedy.len() <= lower {
        return Ok(done(greedy, 0));
    }
    let edges = inc.supersets.len();
    let mut search = Search {
        inc: &inc,
        hits: vec![0; inc.sets()],
        gain: inc.supersets.iter().map(|v| v.len() as u32).collect(),
        forbidden: vec![false; edges],
        chosen: Vec::new(),
        uncovered: inc.sets(),
        best: greedy.ranks().map(|e| e as u32).collect(),
        nodes: 0,
        budget,
        exhausted: false,
        mark: vec![0; edges],
        stamp: 0,
    };
    search.dfs(true);
    let mut best = RGraph::empty(n, r)?;
    for &e in &search.best {
        best.insert_rank(e as u64);
    }
    if search.exhausted {
        return Err(ExactError::BudgetExhausted {
            lower,
            upper: best.len(),
            best,
            nodes: search.nodes,
        });
    }
    Ok(done(best, search.nodes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verifier::{verify_full, VerifyStatus, DEFAULT_BUDGET};

    fn solve(n: u32, s: u32, r: u32) -> ExactResult {
        let res = solve_exact(n, s, r, DEFAULT_NODE_BUDGET).unwrap();
        let v = verify_full(&res.witness, s, DEFAULT_BUDGET).unwrap();
        assert_eq!(v.status, VerifyStatus::Covered, "({n},{s},{r})");
        assert!(res.proof_of_optimality);
        res
    }

    /// Smallest covering system by trying every r-graph in order of size.
    fn brute_force(n: u32, s: u32, r: u32) -> u64 {
        let m = binom_u64(n, r).unwrap() as u32;
        assert!(m <= 20);
        (0u32..1 << m)
            .filter(|mask| {
                let g = RGraph::from_edges(
                    n,
                    r,
                    (0..m)
                        .filter(|i| mask >> i & 1 == 1)
                        .map(|i| crate::combinat::unrank_colex(i as u64, r).into_vec()),
                )
                .unwrap();
                verify_full(&g, s, DEFAULT_BUDGET).unwrap().status == VerifyStatus::Covered
            })
            .map(|mask| mask.count_ones() as u64)
            .min()
            .unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(solve(4, 4, 3).optimum, 1);
        let t = solve(5, 4, 3);
        assert_eq!(t.optimum, 3);
        assert_eq!(solve(6, 3, 2).optimum, 6);
        assert_eq!(solve(3, 4, 2).optimum, 0);
        assert_eq!(solve(5, 3, 0).optimum, 1);
        assert!(solve_exact(5, 3, 3, 10).is_err());
    }

    #[test]
    fn agrees_with_exhaustive_search() {
        for (n, s, r) in [(5, 3, 2), (6, 4, 2), (5, 4, 2), (6, 5, 2), (5, 4, 3), (6, 4, 1)] {
            assert_eq!(solve(n, s, r).optimum, brute_force(n, s, r), "({n},{s},{r})");
        }
    }

    #[test]
    fn one_uniform_values() {
        for n in 2..=12u32 {
            for s in 2..=n {
                assert_eq!(solve(n, s, 1).optimum, (n - s + 1) as u64);
            }
        }
    }

    #[test]
    fn triangle_covering_matches_mantel() {
        // a graph covers every triple iff its complement is triangle-free
        for n in 3..=9u32 {
            let want = (n * (n - 1) / 2 - n * n / 4) as u64;
            assert_eq!(solve(n, 3, 2).optimum, want, "n={n}");
        }
    }

    #[test]
    fn bounds_sandwich() {
        for (n, s, r) in [(4, 4, 3), (5, 4, 3), (6, 4, 3), (7, 4, 3), (7, 3, 2), (7, 5, 3)] {
            let opt = solve(n, s, r).optimum;
            let greedy = greedy_upper(n, s, r).unwrap();
            assert_eq!(verify_full(&greedy, s, DEFAULT_BUDGET).unwrap().status, VerifyStatus::Covered);
            assert!(opt <= greedy.len());
            assert!(BigRational::from_integer(opt.into()) >= lower_bound_lp(n, s, r));
        }
        assert_eq!(greedy_upper(4, 4, 3).unwrap().len(), 1);
        assert!(greedy_upper(5, 4, 3).unwrap().len() <= 4);
        assert_eq!(lower_bound_lp(5, 4, 3), BigRational::new(5.into(), 2.into()));
        assert_eq!(lower_bound_lp(9, 4, 1), BigRational::new(9.into(), 4.into()));
    }

    #[test]
    fn budget_is_reported() {
        match solve_exact(8, 4, 3, 5) {
            Err(ExactError::BudgetExhausted { lower, upper, .. }) => assert!(lower <= upper),
            other => panic!("{other:?}"),
        }
    }
}
