//! Closed-form bounds on Turán numbers and densities.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::combinat::binom;

pub(crate) fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `C(n, r) / C(s, s - r)`: averaging over a uniformly random s-set.
pub fn trivial_lower_bound(n: u32, s: u32, r: u32) -> BigRational {
    ratio(binom(n as u64, r as i64), binom(s as u64, s as i64 - r as i64))
}

/// Smallest integer at or above [`trivial_lower_bound`].
pub fn trivial_lower_bound_ceil(n: u32, s: u32, r: u32) -> BigUint {
    let b = trivial_lower_bound(n, s, r);
    let (q, rem) = b.numer().div_rem(b.denom());
    let q = q.to_biguint().unwrap_or_default();
    if rem.is_zero() {
        q
    } else {
        q + 1u32
    }
}

/// `1 / C(s, s - r)`.
pub fn trivial_density(s: u32, r: u32) -> BigRational {
    ratio(BigUint::from(1u32), binom(s as u64, s as i64 - r as i64))
}

/// de Caen's density bound `1 / C(s - 1, s - r)`.
pub fn decaen_density(s: u32, r: u32) -> BigRational {
    ratio(
        BigUint::from(1u32),
        binom(s as u64 - 1, s as i64 - r as i64),
    )
}

/// Leading term `R (R + 4) ln r / C(r + R, R)` of the Frankl–Rödl upper bound.
pub fn frankl_rodl_density(big_r: u32, r: u32) -> f64 {
    let c = binom(r as u64 + big_r as u64, big_r as i64)
        .to_f64()
        .unwrap_or(f64::INFINITY);
    big_r as f64 * (big_r as f64 + 4.0) * (r as f64).ln() / c
}

/// `mu * C(n, r) / C(r + R, R)`, exact in `mu`.
pub fn mu_size_bound(mu: &BigRational, n: u32, r: u32, big_r: u32) -> BigRational {
    mu * ratio(
        binom(n as u64, r as i64),
        binom(r as u64 + big_r as u64, big_r as i64),
    )
}

/// Parses a plain decimal such as `6.239` into an exact rational.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10u32), frac.len());
    let v = BigRational::new(num, den);
    Some(if neg { -v } else { v })
}
