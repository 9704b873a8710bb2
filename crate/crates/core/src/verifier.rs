//! Certifying the covering property and reporting densities.

use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::ratio;
use crate::combinat::{binom, binom_u64, next_colex, unrank_within, Subset};
use crate::constructor::{ConstructionConfig, Constructor};
use crate::hypergraph::EdgeSet;

/// Largest `C(n, s)` enumerated by default.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// s-sets per parallel work unit.
const BLOCK: u64 = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("C({n}, {s}) = {count} exceeds the enumeration budget {budget}; use sampling")]
    InstanceTooLarge { n: u32, s: u32, count: String, budget: u64 },
    #[error("s = {s} is below the uniformity r = {r}")]
    SBelowR { s: u32, r: u32 },
    #[error("need at least one sample")]
    NoSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyStatus {
    Covered,
    Counterexample,
    SampledOk,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyResult {
    pub status: VerifyStatus,
    pub counterexample: Option<Subset>,
    /// s-sets examined.
    pub checked: u64,
    pub samples: Option<u64>,
    /// With no failure in `samples` draws, the uncovered fraction is below
    /// this value at 95% confidence.
    pub failure_bound: Option<f64>,
}

impl VerifyResult {
    pub fn is_ok(&self) -> bool {
        self.status != VerifyStatus::Counterexample
    }
}

/// Whether the sorted s-set `x` contains an edge. Position patterns are
/// tried in lex order, so the r smallest elements come first.
pub fn is_covered<G: EdgeSet + ?Sized>(g: &G, x: &[u32]) -> bool {
    let (s, r) = (x.len(), g.r() as usize);
    if r > s {
        return false;
    }
    let mut pos: Vec<usize> = (0..r).collect();
    let mut edge = vec![0u32; r];
    loop {
        for (e, &p) in edge.iter_mut().zip(&pos) {
            *e = x[p];
        }
        if g.contains_sorted(&edge) {
            return true;
        }
        // lex successor of the position pattern
        let Some(i) = (0..r).rev().find(|&i| pos[i] < s - r + i) else {
            return false;
        };
        pos[i] += 1;
        for j in i + 1..r {
            pos[j] = pos[j - 1] + 1;
        }
    }
}

/// Checks every s-subset of `[n]`, returning the colex-first uncovered one if any.
pub fn verify_full<G: EdgeSet + ?Sized>(
    g: &G,
    s: u32,
    budget: u64,
) -> Result<VerifyResult, VerifyError> {
    let (n, r) = (g.n(), g.r());
    if s < r {
        return Err(VerifyError::SBelowR { s, r });
    }
    if n < s {
        return Ok(VerifyResult {
            status: VerifyStatus::Covered,
            counterexample: None,
            checked: 0,
            samples: None,
            failure_bound: None,
        });
    }
    let total = match binom_u64(n, s) {
        Some(t) if t <= budget => t,
        _ => {
            return Err(VerifyError::InstanceTooLarge {
                n,
                s,
                count: binom(n as u64, s as i64).to_string(),
                budget,
            })
        }
    };
    let blocks = total.div_ceil(BLOCK);
    let found = (0..blocks).into_par_iter().find_map_first(|b| {
        let start = b * BLOCK;
        let end = (start + BLOCK).min(total);
        let mut x = vec![0u32; s as usize];
        unrank_within(start, &mut x, n);
        for _ in start..end {
            if !is_covered(g, &x) {
                return Some(x);
            }
            next_colex(&mut x, n);
        }
        None
    });
    Ok(match found {
        Some(x) => {
            let checked = crate::combinat::rank_unchecked(&x) + 1;
            VerifyResult {
                status: VerifyStatus::Counterexample,
                counterexample: Some(Subset::new(x).expect("sorted by construction")),
                checked,
                samples: None,
                failure_bound: None,
            }
        }
        None => VerifyResult {
            status: VerifyStatus::Covered,
            counterexample: None,
            checked: total,
            samples: None,
            failure_bound: None,
        },
    })
}

/// Checks `samples` uniformly random s-subsets.
pub fn verify_sampled<G: EdgeSet + ?Sized>(
    g: &G,
    s: u32,
    samples: u64,
    rng: &mut impl Rng,
) -> Result<VerifyResult, VerifyError> {
    let (n, r) = (g.n(), g.r());
    if s < r {
        return Err(VerifyError::SBelowR { s, r });
    }
    if samples == 0 {
        return Err(VerifyError::NoSamples);
    }
    if n < s {
        return verify_full(g, s, 0);
    }
    let mut x = vec![0u32; s as usize];
    for i in 0..samples {
        for (slot, v) in x.iter_mut().zip(sample(rng, n as usize, s as usize)) {
            *slot = v as u32 + 1;
        }
        x.sort_unstable();
        if !is_covered(g, &x) {
            return Ok(VerifyResult {
                status: VerifyStatus::Counterexample,
                counterexample: Some(Subset::new(x).expect("sorted")),
                checked: i + 1,
                samples: Some(i + 1),
                failure_bound: None,
            });
        }
    }
    Ok(VerifyResult {
        status: VerifyStatus::SampledOk,
        counterexample: None,
        checked: samples,
        samples: Some(samples),
        failure_bound: Some(1.0 - 0.05f64.powf(1.0 / samples as f64)),
    })
}

/// Full verification within `budget`, sampling otherwise.
pub fn verify_auto<G: EdgeSet + ?Sized>(
    g: &G,
    s: u32,
    budget: u64,
    samples: u64,
    seed: u64,
) -> Result<VerifyResult, VerifyError> {
    match verify_full(g, s, budget) {
        Err(VerifyError::InstanceTooLarge { .. }) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            verify_sampled(g, s, samples, &mut rng)
        }
        other => other,
    }
}

// ---------------------------------------------------------------------------
// densities

fn ser_ratio<S: serde::Serializer>(q: &BigRational, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&format!("{}/{}", q.numer(), q.denom()))
}

fn ser_opt_ratio<S: serde::Serializer>(
    q: &Option<BigRational>,
    ser: S,
) -> Result<S::Ok, S::Error> {
    match q {
        Some(q) => ser_ratio(q, ser),
        None => ser.serialize_none(),
    }
}

/// Exact density figures of one system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub n: u32,
    pub s: u32,
    pub r: u32,
    pub size: u64,
    /// `size / C(n, r)`
    #[serde(serialize_with = "ser_ratio")]
    pub density: BigRational,
    /// `size C(s, s - r) / C(n, r)`; at least 1 for any covering system.
    #[serde(serialize_with = "ser_ratio")]
    pub normalized_trivial: BigRational,
    /// `size C(s - 1, s - r) / C(n, r)`
    #[serde(serialize_with = "ser_ratio")]
    pub decaen_ratio: BigRational,
    /// `size C(s, s - r) / C(n, r)` read as a multiple of `1 / C(r + R, R)`;
    /// the same quantity as `normalized_trivial`, named for the target check.
    #[serde(serialize_with = "ser_ratio")]
    pub mu_normalized: BigRational,
    #[serde(serialize_with = "ser_opt_ratio")]
    pub mu_target: Option<BigRational>,
    pub within_target: Option<bool>,
}

impl DensityReport {
    pub fn density_f64(&self) -> f64 {
        self.density.to_f64().unwrap_or(f64::NAN)
    }

    pub fn mu_normalized_f64(&self) -> f64 {
        self.mu_normalized.to_f64().unwrap_or(f64::NAN)
    }
}

/// Density figures for a system of `size` edges on `[n]` covering s-sets.
/// With `mu_target`, also checks `size C(s, s - r) / C(n, r) <= mu_target`.
pub fn density_report(
    n: u32,
    s: u32,
    r: u32,
    size: u64,
    mu_target: Option<&BigRational>,
) -> DensityReport {
    let all = binom(n as u64, r as i64);
    let size_q = BigRational::from_integer(BigInt::from(size));
    let density = if all.is_zero() {
        BigRational::zero()
    } else {
        ratio(size.into(), all.clone())
    };
    let scaled = |m: u64| {
        if all.is_zero() {
            BigRational::zero()
        } else {
            &size_q * ratio(binom(m, s as i64 - r as i64), all.clone())
        }
    };
    let normalized_trivial = scaled(s as u64);
    let decaen_ratio = scaled(s as u64 - 1);
    let mu_normalized = normalized_trivial.clone();
    let within_target = mu_target.map(|mu| mu_normalized <= *mu);
    DensityReport {
        n,
        s,
        r,
        size,
        density,
        normalized_trivial,
        decaen_ratio,
        mu_normalized,
        mu_target: mu_target.cloned(),
        within_target,
    }
}

/// [`density_report`] for an explicit system.
pub fn report_for<G: EdgeSet + ?Sized>(
    g: &G,
    s: u32,
    mu_target: Option<&BigRational>,
) -> DensityReport {
    density_report(g.n(), s, g.r(), g.size(), mu_target)
}

#[derive(Debug, Clone)]
pub struct TableOptions {
    pub budget: u64,
    pub samples: u64,
    pub seed: u64,
    pub mu_target: Option<BigRational>,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            budget: DEFAULT_BUDGET,
            samples: 100_000,
            seed: 0,
            mu_target: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TableCell {
    pub report: DensityReport,
    pub verification: VerifyResult,
    /// Exact size bound carried by the construction.
    #[serde(serialize_with = "ser_ratio")]
    pub ledger_bound: BigRational,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub n: u32,
    pub r: u32,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellOutcome {
    Ok(TableCell),
    Error(String),
}

/// Constructs, verifies and reports every `(n, r)` cell; a failing cell is
/// recorded and the sweep goes on. `n_range` gives the vertex counts for each `r`.
pub fn bound_table(
    cfg: &ConstructionConfig,
    r_range: RangeInclusive<u32>,
    n_range: impl Fn(u32) -> RangeInclusive<u32>,
    opts: &TableOptions,
) -> Result<Vec<TableRow>, crate::constructor::ConstructError> {
    let cons = Constructor::new(cfg.clone())?;
    let s_gap = cfg.big_r;
    let mut rows = Vec::new();
    for r in r_range {
        for n in n_range(r) {
            let outcome = match cons.build(n, r) {
                Err(e) => CellOutcome::Error(e.to_string()),
                Ok(sys) => {
                    let seed = crate::constructor::node_seed(opts.seed, n, r, u32::MAX);
                    match verify_auto(&*sys, r + s_gap, opts.budget, opts.samples, seed) {
                        Err(e) => CellOutcome::Error(e.to_string()),
                        Ok(v) => CellOutcome::Ok(TableCell {
                            report: report_for(&*sys, r + s_gap, opts.mu_target.as_ref()),
                            verification: v,
                            ledger_bound: cons.ledger_bound(n, r),
                        }),
                    }
                }
            };
            rows.push(TableRow { n, r, outcome });
        }
    }
    Ok(rows)
}
