//! Density constants for the recursive construction.
//!
//! For a gap `R = s - r` the optimal sampling constant `c0` is the largest
//! root of `e^c = (c + 1)^(R + 1)`, the split fraction is `beta0 = c0 / (1 + c0)`
//! and the achieved density constant is `mu = (c0 + 1)^(R + 1) / c0^R`.
//!
//! The root is found by bisection on `f(c) = c - (R + 1) ln(c + 1)`, which never
//! overflows. Near the root the two terms of `f` cancel almost completely
//! (for `R = 10^6` both are about `1.7e7`), so `f` is evaluated in
//! double-double arithmetic; plain `f64` evaluation is pure rounding noise there.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative slack on the `<=` comparisons of the feasibility checks.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstantsError {
    #[error("R must be at least {min}, got {got}")]
    InvalidR { got: u64, min: u64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no sign change of c - (R+1) ln(c+1) found for R = {0}")]
    NoRootFound(u64),
    #[error("(1 - beta)^R <= e^(-c) for beta = {beta}, c = {c}, R = {big_r}")]
    DenominatorNonpositive { beta: f64, c: f64, big_r: u64 },
    #[error("beta = {0} is outside (0, 1)")]
    BetaOutOfRange(f64),
}

mod dd {
    //! Minimal double-double arithmetic: just enough for an accurate `ln`.

    #[derive(Debug, Clone, Copy)]
    pub struct Dd {
        pub hi: f64,
        pub lo: f64,
    }

    #[inline]
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    #[inline]
    fn quick_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    #[inline]
    fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        Dd { hi: p, lo: a.mul_add(b, -p) }
    }

    impl Dd {
        pub fn from(x: f64) -> Dd {
            Dd { hi: x, lo: 0.0 }
        }

        pub fn add(self, o: Dd) -> Dd {
            let s = two_sum(self.hi, o.hi);
            let t = two_sum(self.lo, o.lo);
            let u = quick_two_sum(s.hi, s.lo + t.hi);
            quick_two_sum(u.hi, u.lo + t.lo)
        }

        pub fn neg(self) -> Dd {
            Dd { hi: -self.hi, lo: -self.lo }
        }

        pub fn sub(self, o: Dd) -> Dd {
            self.add(o.neg())
        }

        pub fn mul(self, o: Dd) -> Dd {
            let p = two_prod(self.hi, o.hi);
            quick_two_sum(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
        }

        pub fn mul_f64(self, b: f64) -> Dd {
            let p = two_prod(self.hi, b);
            quick_two_sum(p.hi, p.lo + self.lo * b)
        }

        pub fn div_f64(self, b: f64) -> Dd {
            let q1 = self.hi / b;
            let r = self.sub(two_prod(q1, b));
            let q2 = r.hi / b;
            quick_two_sum(q1, q2)
        }
    }

    const LN2: Dd = Dd {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };

    /// `e^y` to roughly 30 significant digits.
    pub fn exp(y: f64) -> Dd {
        let k = (y / LN2.hi).round();
        let red = Dd::from(y).sub(LN2.mul_f64(k));
        let mut term = Dd::from(1.0);
        let mut sum = Dd::from(1.0);
        for i in 1..=30 {
            term = term.mul(red).div_f64(i as f64);
            sum = sum.add(term);
            if term.hi.abs() < 1e-34 {
                break;
            }
        }
        let scale = 2f64.powi(k as i32);
        Dd {
            hi: sum.hi * scale,
            lo: sum.lo * scale,
        }
    }

    /// Natural log of a positive double-double.
    pub fn ln(x: Dd) -> Dd {
        let y = x.hi.ln();
        let e = exp(y);
        // ln(x) = y + ln(x / e^y), and x / e^y - 1 is O(1e-16).
        let u = x.sub(e).hi / e.hi;
        Dd::from(y).add(Dd::from(u - 0.5 * u * u))
    }

    pub fn from_sum(a: f64, b: f64) -> Dd {
        two_sum(a, b)
    }
}

/// `c - (R + 1) ln(c + 1)`, accurate to far below one ulp of `c`.
pub fn root_gap(big_r: u64, c: f64) -> f64 {
    let x = dd::from_sum(c, 1.0);
    let l = dd::ln(x);
    let scaled = l.mul_f64(big_r as f64 + 1.0);
    dd::Dd::from(c).sub(scaled).hi
}

/// Relative residual `|e^c - (c+1)^(R+1)| / e^c` of the root equation.
pub fn relative_residual(big_r: u64, c: f64) -> f64 {
    (-root_gap(big_r, c)).exp_m1().abs()
}

/// Initial bracket for the largest root. Uses the `R ln R` sandwich when it
/// actually brackets a sign change, otherwise `[1, 10R + 10]` grown geometrically.
fn bracket(big_r: u64) -> Result<(f64, f64), ConstantsError> {
    let rf = big_r as f64;
    if big_r >= 3 {
        let (lo, hi, _) = sandwich(rf);
        if root_gap(big_r, lo) < 0.0 && root_gap(big_r, hi) > 0.0 {
            return Ok((lo, hi));
        }
    }
    let lo = 1.0;
    if root_gap(big_r, lo) >= 0.0 {
        return Err(ConstantsError::NoRootFound(big_r));
    }
    let mut hi = 10.0 * rf + 10.0;
    for _ in 0..200 {
        if root_gap(big_r, hi) > 0.0 {
            return Ok((lo, hi));
        }
        hi *= 2.0;
    }
    Err(ConstantsError::NoRootFound(big_r))
}

fn sandwich(rf: f64) -> (f64, f64, f64) {
    let l = rf * rf.ln();
    let ll = rf * rf.ln().ln();
    (l + ll, l + 2.0 * ll, l + 3.0 * ll)
}

/// Largest real root of `e^c = (c + 1)^(R + 1)`.
///
/// Bisection continues until the bracket is narrower than `tol` or no double
/// lies strictly inside it; the endpoint with the smaller `|f|` is returned.
pub fn solve_c0(big_r: u64, tol: f64) -> Result<f64, ConstantsError> {
    if big_r < 1 {
        return Err(ConstantsError::InvalidR { got: big_r, min: 1 });
    }
    if !(tol > 0.0) {
        return Err(ConstantsError::InvalidTolerance(tol));
    }
    let (mut lo, mut hi) = bracket(big_r)?;
    while hi - lo > tol {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if root_gap(big_r, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if root_gap(big_r, lo).abs() <= root_gap(big_r, hi).abs() {
        lo
    } else {
        hi
    })
}

/// `(c + 1)^(R + 1) / c^R`.
pub fn mu_from_c(c: f64, big_r: u64) -> f64 {
    (c + 1.0) * (big_r as f64 * (1.0 / c).ln_1p()).exp()
}

/// `h(beta, c) = c / (beta^R - e^(-c) (beta / (1 - beta))^R)`, the smallest
/// `mu` for which `(beta, c, mu)` satisfies the general-gap inequality.
pub fn mu_of(beta: f64, c: f64, big_r: u64) -> Result<f64, ConstantsError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(ConstantsError::BetaOutOfRange(beta));
    }
    let rf = big_r as f64;
    // e^(-c) / (1 - beta)^R, computed in the log domain
    let log_t = -c - rf * (-beta).ln_1p();
    if log_t >= 0.0 {
        return Err(ConstantsError::DenominatorNonpositive { beta, c, big_r });
    }
    let denom = (rf * beta.ln()).exp() * -log_t.exp_m1();
    if !(denom > 0.0) {
        return Err(ConstantsError::DenominatorNonpositive { beta, c, big_r });
    }
    Ok(c / denom)
}

/// Diagnostics for the `s = r + 1` conditions: `floor(beta mu) >= c` and
/// `c / (beta mu - 1) + e^(-c) / (1 - beta) <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MainFeasibility {
    pub feasible: bool,
    /// `floor(beta mu) - c`; must be non-negative.
    pub floor_margin: f64,
    pub lhs: f64,
    /// `1 - lhs`; positive means slack.
    pub margin: f64,
}

pub fn check_feasibility_main(beta: f64, c: f64, mu: f64) -> MainFeasibility {
    let in_domain = beta > 0.0 && beta < 1.0 && c > 1.0 && mu > 1.0 && beta * mu > 1.0;
    let floor_margin = (beta * mu).floor() - c;
    let lhs = if beta * mu > 1.0 && beta < 1.0 {
        c / (beta * mu - 1.0) + (-c).exp() / (1.0 - beta)
    } else {
        f64::INFINITY
    };
    let feasible = in_domain && floor_margin >= 0.0 && lhs <= 1.0 + FEASIBILITY_SLACK;
    MainFeasibility {
        feasible,
        floor_margin,
        lhs,
        margin: 1.0 - lhs,
    }
}

/// Diagnostics for the general-gap conditions: `e^(-c) < (1 - beta)^R` and
/// `c / beta^R + e^(-c) mu / (1 - beta)^R <= mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralFeasibility {
    pub feasible: bool,
    /// `(1 - beta)^R - e^(-c)`; must be strictly positive.
    pub strict_margin: f64,
    pub lhs: f64,
    /// `mu - lhs`; positive means slack.
    pub margin: f64,
}

pub fn check_feasibility_general(beta: f64, c: f64, mu: f64, big_r: u64) -> GeneralFeasibility {
    let rf = big_r as f64;
    let in_domain = beta > 0.0 && beta < 1.0 && c > 0.0 && mu > 0.0 && big_r >= 1;
    let (strict_margin, lhs) = if beta > 0.0 && beta < 1.0 {
        let one_minus_pow = (rf * (-beta).ln_1p()).exp();
        let beta_pow = (rf * beta.ln()).exp();
        (
            one_minus_pow - (-c).exp(),
            c / beta_pow + (-c - rf * (-beta).ln_1p()).exp() * mu,
        )
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    let feasible =
        in_domain && strict_margin > 0.0 && lhs <= mu * (1.0 + FEASIBILITY_SLACK);
    GeneralFeasibility {
        feasible,
        strict_margin,
        lhs,
        margin: mu - lhs,
    }
}

/// `(R ln R + R ln ln R, R ln R + 2 R ln ln R, R ln R + 3 R ln ln R)`: the
/// bracket for `c0` and the cap on `mu` for large `R`.
pub fn corollary_bounds(big_r: u64) -> Result<(f64, f64, f64), ConstantsError> {
    if big_r < 3 {
        return Err(ConstantsError::InvalidR { got: big_r, min: 3 });
    }
    Ok(sandwich(big_r as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    #[serde(rename = "R")]
    pub big_r: u64,
    pub c0: f64,
    pub beta0: f64,
    pub mu: f64,
    /// Relative residual of `e^c0 = (c0 + 1)^(R + 1)`.
    pub residual: f64,
    pub feasible_general: bool,
    pub sandwich_lower: Option<f64>,
    pub sandwich_upper: Option<f64>,
    pub mu_cap: Option<f64>,
}

pub fn constants_report(big_r: u64, tol: f64) -> Result<ConstantsReport, ConstantsError> {
    let c0 = solve_c0(big_r, tol)?;
    let beta0 = c0 / (1.0 + c0);
    let mu = mu_from_c(c0, big_r);
    let feasible_general = check_feasibility_general(beta0, c0, mu, big_r).feasible;
    let bounds = corollary_bounds(big_r).ok();
    Ok(ConstantsReport {
        big_r,
        c0,
        beta0,
        mu,
        residual: relative_residual(big_r, c0),
        feasible_general,
        sandwich_lower: bounds.map(|b| b.0),
        sandwich_upper: bounds.map(|b| b.1),
        mu_cap: bounds.map(|b| b.2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain bisection on the f64 form of f, used only as a coarse oracle.
    fn coarse_root(big_r: u64, mut lo: f64, mut hi: f64) -> f64 {
        let f = |c: f64| c - (big_r as f64 + 1.0) * (c + 1.0).ln();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo
    }

    #[test]
    fn r1_root_brackets_between_2_and_3() {
        let f = |c: f64| c - 2.0 * (1.0 + c).ln();
        assert!(f(2.0) < 0.0 && f(3.0) > 0.0);
        let c0 = solve_c0(1, 1e-14).unwrap();
        assert!((c0 - coarse_root(1, 2.0, 3.0)).abs() < 1e-12);
        assert!((c0 - 2.5129).abs() < 1e-4);
        let mu = mu_from_c(c0, 1);
        assert!(mu < 4.911 && mu > 4.9108, "mu = {mu}");
    }

    #[test]
    fn ln_is_accurate() {
        // ln(2) and ln(10) to double-double precision
        let l2 = dd::ln(dd::Dd::from(2.0));
        assert_eq!(l2.hi, std::f64::consts::LN_2);
        assert!((l2.lo - 2.319_046_813_846_299_6e-17).abs() < 1e-30);
        let l10 = dd::ln(dd::Dd::from(10.0));
        assert_eq!(l10.hi, std::f64::consts::LN_10);
        assert!((l10.lo - (-2.170_756_223_382_249_4e-16)).abs() < 1e-30);
    }

    #[test]
    fn root_property_over_range() {
        let mut rs: Vec<u64> = (1..=50).collect();
        rs.extend([100, 1_000, 10_000, 1_000_000]);
        for big_r in rs {
            let c0 = solve_c0(big_r, 1e-12).unwrap();
            assert!(relative_residual(big_r, c0) < 1e-9, "R={big_r}");
            assert!(root_gap(big_r, c0 * (1.0 + 1e-6)) > 0.0);
            assert!(root_gap(big_r, c0 * (1.0 - 1e-6)) < 0.0);
        }
    }

    #[test]
    fn large_root_matches_high_precision_value() {
        // 50-digit reference values for the largest root
        let c = solve_c0(1_000_000, 1e-12).unwrap();
        assert!((c - 16_626_526.655_869_538).abs() <= 4e-9);
        let c = solve_c0(2, 1e-14).unwrap();
        assert!((c - 5.711_441_083_321_151).abs() < 1e-14);
    }

    #[test]
    fn mu_of_examples() {
        assert!(mu_of(0.715, 2.51, 1).unwrap() < 4.911);
        let c0 = solve_c0(1, 1e-14).unwrap();
        let b0 = c0 / (1.0 + c0);
        assert!((mu_of(b0, c0, 1).unwrap() - mu_from_c(c0, 1)).abs() < 1e-9);
        assert!(matches!(
            mu_of(0.99, 0.5, 1),
            Err(ConstantsError::DenominatorNonpositive { .. })
        ));
    }

    #[test]
    fn stationary_point() {
        let step = 1e-5;
        for big_r in 1..=10 {
            let c0 = solve_c0(big_r, 1e-14).unwrap();
            let b0 = c0 / (1.0 + c0);
            let h = |b: f64, c: f64| mu_of(b, c, big_r).unwrap();
            let central_b = |s: f64| (h(b0 + s, c0) - h(b0 - s, c0)) / (2.0 * s);
            // h is strongly curved in beta as beta0 -> 1, so the O(step^2)
            // term of the plain central difference is removed by Richardson.
            let db = (4.0 * central_b(step / 2.0) - central_b(step)) / 3.0;
            let dc = (h(b0, c0 + step) - h(b0, c0 - step)) / (2.0 * step);
            assert!(db.abs() < 1e-6, "R={big_r} db={db}");
            assert!(dc.abs() < 1e-6, "R={big_r} dc={dc}");
        }
    }

    #[test]
    fn feasibility_main_examples() {
        let f = check_feasibility_main(0.784, 2.89, 6.239);
        assert!(f.feasible && f.margin >= 1e-5, "{f:?}");
        assert!(check_feasibility_main(0.5, 2.0, 1000.0).feasible);
        let lhs = 2.0 / 499.0 + (-2.0f64).exp() / 0.5;
        assert!((check_feasibility_main(0.5, 2.0, 1000.0).lhs - lhs).abs() < 1e-15);
        let bad = check_feasibility_main(0.784, 2.89, 5.0);
        assert!(!bad.feasible);
        assert!((bad.lhs - 1.247).abs() < 1e-3);
    }

    #[test]
    fn feasibility_general_examples() {
        let f = check_feasibility_general(0.715, 2.51, 4.911, 1);
        assert!(f.feasible && f.margin >= 1e-5, "{f:?}");
        for big_r in 1..=20 {
            let c0 = solve_c0(big_r, 1e-14).unwrap();
            let mu = mu_from_c(c0, big_r);
            let b0 = c0 / (1.0 + c0);
            assert!(check_feasibility_general(b0, c0, mu * (1.0 + 1e-12), big_r).feasible);
            if big_r == 1 {
                assert!(check_feasibility_general(b0, c0, mu + 1e-6, 1).feasible);
            }
        }
        let bad = check_feasibility_general(0.5, 0.1, 10.0, 2);
        assert!(!bad.feasible && bad.strict_margin < 0.0);
    }

    #[test]
    fn corollary_examples() {
        let (lo, _, _) = corollary_bounds(3).unwrap();
        let direct = 3.0 * 3f64.ln() + 3.0 * 3f64.ln().ln();
        assert!((lo - direct).abs() < 1e-12 && (lo - 3.578).abs() < 1e-3);
        assert!(corollary_bounds(2).is_err());
        let big_r = 1_000_000;
        let (lo, hi, cap) = corollary_bounds(big_r).unwrap();
        let c0 = solve_c0(big_r, 1e-12).unwrap();
        assert!(lo < c0 && c0 < hi);
        assert!(mu_from_c(c0, big_r) < cap);
        // f changes sign across the sandwich endpoints
        assert!(root_gap(big_r, lo) < 0.0 && root_gap(big_r, hi) > 0.0);
    }

    #[test]
    fn mu_grows_with_gap() {
        let mut prev = 0.0;
        for big_r in 1..=50 {
            let mu = mu_from_c(solve_c0(big_r, 1e-12).unwrap(), big_r);
            assert!(mu > prev);
            prev = mu;
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(solve_c0(0, 1e-9), Err(ConstantsError::InvalidR { .. })));
        assert!(solve_c0(1, 0.0).is_err());
    }
}
