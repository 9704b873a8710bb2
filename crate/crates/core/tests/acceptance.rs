//! End-to-end acceptance checks. Each test prints one `criterion N PASS|FAIL`
//! line straight to stderr (bypassing the test harness capture) and then
//! asserts the outcome.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use turan_core::bounds::{mu_size_bound, parse_decimal};
use turan_core::combinat::{binom, iterate_subsets};
use turan_core::constants::{
    check_feasibility_general, check_feasibility_main, corollary_bounds, mu_from_c,
    relative_residual, solve_c0,
};
use turan_core::constructor::{node_seed, ConstructionConfig, Constructor, Mode};
use turan_core::exact::{lower_bound_lp, solve_exact, DEFAULT_NODE_BUDGET};
use turan_core::verifier::{verify_full, verify_sampled, VerifyStatus, DEFAULT_BUDGET};

/// Bound check on the all-r grid is exact: no tolerance.
const GRID_MAX_N: u32 = 24;
const GRID_MAX_R: u32 = 12;
const GRID_FULL_LIMIT: u64 = 10_000_000;
const GRID_SAMPLES: u64 = 100_000;
const FEASIBILITY_MIN_MARGIN: f64 = 1e-5;
const MU_ONE_RANGE: (f64, f64) = (4.9105, 4.9110);
const ROOT_RESIDUAL_MAX: f64 = 1e-9;
const SOLVER_TOL: f64 = 1e-13;
const ADVERSARIAL_SEEDS: usize = 50;
const ESTIMATOR_SAMPLES: u32 = 200;
const TREND_SLACK: f64 = 0.05;

fn report(criterion: u32, passed: bool, detail: &str) {
    let line = format!(
        "criterion {criterion} {} {detail}\n",
        if passed { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(passed, "criterion {criterion}: {detail}");
}

fn q(x: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

#[test]
fn all_r_bound_grid() {
    let mu = parse_decimal("6.239").unwrap();
    let cons = Constructor::new(ConstructionConfig::preset_all_r()).unwrap();
    let mut cells = 0;
    let mut full = 0;
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for r in 0..=GRID_MAX_R {
        for n in r + 1..=GRID_MAX_N {
            cells += 1;
            let sys = cons.build(n, r).unwrap();
            let target = mu_size_bound(&mu, n, r, 1);
            if q(sys.size()) > target {
                failures.push(format!("({n},{r}) size {} over bound", sys.size()));
            }
            let ratio = (q(sys.size()) / &target).to_f64().unwrap();
            worst = worst.max(ratio);
            let small = binom(n as u64, r as i64 + 1) <= GRID_FULL_LIMIT.into();
            let v = if small {
                full += 1;
                verify_full(&*sys, r + 1, GRID_FULL_LIMIT).unwrap()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(node_seed(1, n, r, 0));
                verify_sampled(&*sys, r + 1, GRID_SAMPLES, &mut rng).unwrap()
            };
            if !v.is_ok() {
                failures.push(format!("({n},{r}) not covering: {:?}", v.counterexample));
            }
        }
    }
    report(
        1,
        failures.is_empty(),
        &format!(
            "{cells} cells, {full} fully verified, max size/bound {worst:.4}; {}",
            if failures.is_empty() { "no violations".to_string() } else { failures.join("; ") }
        ),
    );
}

#[test]
fn feasibility_margins() {
    let m = check_feasibility_main(0.784, 2.89, 6.239);
    let g = check_feasibility_general(0.715, 2.51, 4.911, 1);
    let ok = m.feasible
        && m.floor_margin >= 0.0
        && m.margin >= FEASIBILITY_MIN_MARGIN
        && g.feasible
        && g.strict_margin > 0.0
        && g.margin >= FEASIBILITY_MIN_MARGIN;
    report(
        2,
        ok,
        &format!(
            "s=r+1 lhs {:.8} (margin {:.3e}, floor margin {:.2}); general lhs {:.6} vs mu 4.911 (margin {:.3e}, strict margin {:.4})",
            m.lhs, m.margin, m.floor_margin, g.lhs, g.margin, g.strict_margin
        ),
    );
}

#[test]
fn optimal_constant_gap_one() {
    let c0 = solve_c0(1, SOLVER_TOL).unwrap();
    let mu = mu_from_c(c0, 1);
    let res = relative_residual(1, c0);
    let ok = mu > MU_ONE_RANGE.0 && mu < MU_ONE_RANGE.1 && res < ROOT_RESIDUAL_MAX;
    report(3, ok, &format!("c0 {c0:.12}, mu {mu:.10}, residual {res:.2e}"));
}

#[test]
fn large_gap_sandwich() {
    let mut lines = Vec::new();
    let mut ok = true;
    for big_r in [100u64, 1_000, 10_000, 100_000, 1_000_000] {
        let c0 = solve_c0(big_r, SOLVER_TOL).unwrap();
        let mu = mu_from_c(c0, big_r);
        let (lo, hi, cap) = corollary_bounds(big_r).unwrap();
        let good = lo < c0 && c0 < hi && mu < cap;
        ok &= good;
        lines.push(format!("R={big_r}: {lo:.1} < {c0:.1} < {hi:.1}, mu {mu:.1} < {cap:.1}"));
    }
    report(4, ok, &lines.join("; "));
}

#[test]
fn random_blockers_always_cover() {
    let mut master = ChaCha8Rng::seed_from_u64(0x5eed);
    let seeds: Vec<u64> = (0..ADVERSARIAL_SEEDS).map(|_| master.gen()).collect();
    let setups = [
        (14u32, 7u32, ConstructionConfig::preset_all_r()),
        (14, 6, ConstructionConfig::optimal(2).unwrap()),
    ];
    let mut checked = 0;
    let mut failures = Vec::new();
    for (n, r, base) in setups {
        let s = r + base.big_r;
        for &seed in &seeds {
            let cfg = base.clone().with_mode(Mode::Random).with_seed(seed);
            let outcome = Constructor::new(cfg)
                .and_then(|c| c.build(n, r))
                .map_err(|e| e.to_string())
                .and_then(|sys| {
                    verify_full(&*sys, s, DEFAULT_BUDGET)
                        .map_err(|e| e.to_string())
                        .map(|v| (sys, v))
                });
            match outcome {
                Ok((sys, v)) if v.status == VerifyStatus::Covered && sys.depth() >= 1 => checked += 1,
                Ok((_, v)) => failures.push(format!("({n},{s},{r}) seed {seed}: {:?}", v.status)),
                Err(e) => failures.push(format!("({n},{s},{r}) seed {seed}: {e}")),
            }
        }
    }
    report(
        5,
        failures.is_empty(),
        &format!("{checked} random-mode systems fully verified; {}", failures.join("; ")),
    );
}

/// Covering check written out directly, independent of the verifier.
fn covers(edges: &[Vec<u32>], n: u32, s: u32) -> bool {
    iterate_subsets(n, s).all(|x| {
        let x = x.into_vec();
        edges.iter().any(|e| e.iter().all(|v| x.contains(v)))
    })
}

#[test]
fn exact_oracle_values() {
    let mut failures = Vec::new();
    let mut check = |n: u32, s: u32, r: u32, want: u64| {
        let res = solve_exact(n, s, r, DEFAULT_NODE_BUDGET).unwrap();
        let lp = lower_bound_lp(n, s, r).ceil();
        if res.optimum != want || !res.proof_of_optimality {
            failures.push(format!("T({n},{s},{r}) = {} expected {want}", res.optimum));
        }
        if q(res.optimum) < lp {
            failures.push(format!("T({n},{s},{r}) below the counting bound"));
        }
        if !covers(&res.witness.edges(), n, s) {
            failures.push(format!("witness for ({n},{s},{r}) does not cover"));
        }
    };
    let mut count = 0;
    for n in 2..=12u32 {
        for s in 2..=n {
            check(n, s, 1, (n - s + 1) as u64);
            count += 1;
        }
    }
    check(4, 4, 3, 1);
    check(5, 4, 3, 3);
    check(6, 3, 2, 6);
    report(
        6,
        failures.is_empty(),
        &format!("{} instances; {}", count + 3, if failures.is_empty() { "all match".into() } else { failures.join("; ") }),
    );
}

#[test]
fn exact_density_monotone() {
    let density = |s: u32, r: u32, ns: std::ops::RangeInclusive<u32>| -> Vec<BigRational> {
        ns.map(|n| {
            let t = solve_exact(n, s, r, DEFAULT_NODE_BUDGET).unwrap().optimum;
            q(t) / BigRational::from_integer(BigInt::from(binom(n as u64, r as i64)))
        })
        .collect()
    };
    let a = density(3, 2, 3..=9);
    let b = density(4, 3, 4..=7);
    let mono = |v: &[BigRational]| v.windows(2).all(|w| w[0] <= w[1]);
    let show = |v: &[BigRational]| {
        v.iter().map(|d| format!("{d}")).collect::<Vec<_>>().join(" ")
    };
    report(
        7,
        mono(&a) && mono(&b),
        &format!("(3,2): {}; (4,3): {}", show(&a), show(&b)),
    );
}

#[test]
fn derandomized_blocker_quality() {
    let (n, r) = (12u32, 6u32);
    let cfg = ConstructionConfig::preset_all_r();
    let cons = Constructor::new(cfg.clone()).unwrap();
    let problem = cons.blocker_problem(n, r).unwrap();
    let chosen = problem.derandomize().unwrap();
    let mut total = 0.0;
    for i in 0..ESTIMATOR_SAMPLES {
        let mut rng = ChaCha8Rng::seed_from_u64(node_seed(cfg.seed, n, r, i));
        let s = problem.sample(&mut rng).unwrap();
        total += problem.objective(&s).unwrap();
    }
    let mean = total / ESTIMATOR_SAMPLES as f64;
    let k = problem.k as f64;
    let closed = (cfg.c / k + (-cfg.c).exp() * cfg.mu / (r as f64 - k + 1.0))
        * binom(n as u64, r as i64).to_f64().unwrap();
    let ok = chosen.objective <= mean && chosen.objective <= closed;
    report(
        8,
        ok,
        &format!(
            "k={}, derandomized {:.1}, random mean {:.1} over {ESTIMATOR_SAMPLES}, closed-form bound {:.1}",
            problem.k, chosen.objective, mean, closed
        ),
    );
}

#[test]
fn density_trend_at_three_r() {
    let cfg = ConstructionConfig::optimal(1).unwrap();
    let cons = Constructor::new(cfg).unwrap();
    let mut values = Vec::new();
    for r in [8u32, 10, 12, 14] {
        let n = 3 * r;
        let sys = cons.build(n, r).unwrap();
        let d = (q(sys.size()) * q(r as u64 + 1)
            / BigRational::from_integer(BigInt::from(binom(n as u64, r as i64))))
        .to_f64()
        .unwrap();
        values.push((r, sys.size(), d));
    }
    let ok = values
        .windows(2)
        .all(|w| w[1].2 <= w[0].2 * (1.0 + TREND_SLACK));
    let shown: Vec<String> = values
        .iter()
        .map(|(r, size, d)| format!("r={r}: size {size}, normalized {d:.4}"))
        .collect();
    report(9, ok, &format!("slack {TREND_SLACK}; {}", shown.join("; ")));
}

#[test]
fn sizes_fit_the_trivial_bound() {
    // sanity companion: every verified construction meets the counting bound
    let cons = Constructor::new(ConstructionConfig::preset_all_r()).unwrap();
    for r in 1..=8u32 {
        for n in r + 1..=16 {
            let sys = cons.build(n, r).unwrap();
            assert!(q(sys.size()) >= lower_bound_lp(n, r + 1, r), "({n},{r})");
            assert_eq!(sys.n(), n);
        }
    }
}
