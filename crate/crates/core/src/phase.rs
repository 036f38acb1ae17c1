//! Frequencies in 128-bit fixed point and exact phase reduction.
//!
//! A fraction `t ∈ [0, 1)` is stored as the integer `t·2^128` in a `u128`,
//! so reduction mod 1 is free: `frac(t·x)` is `t.wrapping_mul(x)`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, pow_mod};
use crate::error::{Error, Result};

/// A point of `R/Z` with 128 fractional bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fixed128(pub u128);

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

impl Fixed128 {
    pub const ZERO: Fixed128 = Fixed128(0);

    /// `⌊r·2^128/q⌋` for `0 ≤ r < q`.
    pub fn from_ratio(r: u64, q: u64) -> Self {
        assert!(q > 0 && r < q);
        let q = q as u128;
        let num = (r as u128) << 64;
        let hi = num / q;
        let rem = num % q;
        let lo = (rem << 64) / q;
        Fixed128((hi << 64) | lo)
    }

    /// Exact reduction mod 1 of a finite `f64`.
    ///
    /// Bits below `2^-128` are rounded to nearest.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "phase must be finite");
        if x == 0.0 {
            return Fixed128::ZERO;
        }
        let bits = x.abs().to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let (mant, e) = if exp == 0 {
            (bits & ((1u64 << 52) - 1), -1074)
        } else {
            ((bits & ((1u64 << 52) - 1)) | (1u64 << 52), exp - 1075)
        };
        // |x|·2^128 = mant·2^(e+128)
        let shift = e + 128;
        let magnitude: u128 = if shift >= 128 {
            0
        } else if shift >= 0 {
            (mant as u128).wrapping_shl(shift as u32)
        } else if shift > -64 {
            let s = (-shift) as u32;
            let m = mant as u128;
            (m >> s) + ((m >> (s - 1)) & 1)
        } else {
            0
        };
        if x < 0.0 {
            Fixed128(magnitude.wrapping_neg())
        } else {
            Fixed128(magnitude)
        }
    }

    /// Value in `[0, 1)` as `f64`.
    pub fn to_f64(self) -> f64 {
        let hi = (self.0 >> 64) as u64;
        let lo = self.0 as u64;
        (hi as f64 + lo as f64 / TWO_POW_64) / TWO_POW_64
    }

    /// Representative in `[-1/2, 1/2)` as `f64`.
    pub fn to_signed_f64(self) -> f64 {
        let v = self.0 as i128;
        let hi = (v >> 64) as i64;
        let lo = v as u64;
        (hi as f64 + lo as f64 / TWO_POW_64) / TWO_POW_64
    }

    #[inline]
    pub fn wrapping_add(self, other: Fixed128) -> Self {
        Fixed128(self.0.wrapping_add(other.0))
    }

    #[inline]
    pub fn wrapping_sub(self, other: Fixed128) -> Self {
        Fixed128(self.0.wrapping_sub(other.0))
    }

    /// `frac(t·m)` for an integer multiplier.
    #[inline]
    pub fn mul_int(self, m: u128) -> Self {
        Fixed128(self.0.wrapping_mul(m))
    }

    /// Distance to the nearest integer, `‖t‖`.
    pub fn dist_to_int(self) -> f64 {
        self.to_signed_f64().abs()
    }
}

impl fmt::Display for Fixed128 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.20}", self.to_f64())
    }
}

/// A frequency `α`, optionally built as `a/q + β`.
///
/// With the rational part present, phases `frac(α·x^k)` are computed from
/// `a·x^k mod q` exactly and only `β` goes through fixed point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhasePointJson")]
pub struct PhasePoint {
    pub alpha: Fixed128,
    pub rational: Option<(u64, u64)>,
    pub beta: f64,
    #[serde(skip)]
    beta_fixed: Fixed128,
}

#[derive(Deserialize)]
struct PhasePointJson {
    alpha: Fixed128,
    rational: Option<(u64, u64)>,
    beta: f64,
}

impl TryFrom<PhasePointJson> for PhasePoint {
    type Error = Error;

    fn try_from(raw: PhasePointJson) -> Result<Self> {
        match raw.rational {
            Some((a, q)) => PhasePoint::rational_plus(a, q, raw.beta),
            None => Ok(PhasePoint::from_fixed(raw.alpha)),
        }
    }
}

impl PhasePoint {
    /// `α` reduced mod 1 from a double.
    pub fn from_f64(alpha: f64) -> Self {
        let fixed = Fixed128::from_f64(alpha);
        PhasePoint {
            alpha: fixed,
            rational: None,
            beta: 0.0,
            beta_fixed: Fixed128::ZERO,
        }
    }

    pub fn from_fixed(alpha: Fixed128) -> Self {
        PhasePoint {
            alpha,
            rational: None,
            beta: 0.0,
            beta_fixed: Fixed128::ZERO,
        }
    }

    /// `α = a/q + β` with `gcd(a, q) = 1` and `0 ≤ a ≤ q`.
    pub fn rational_plus(a: u64, q: u64, beta: f64) -> Result<Self> {
        if q == 0 || a > q {
            return Err(Error::invalid(format!("need 0 <= a <= q, q >= 1; got a={a}, q={q}")));
        }
        if gcd(a, q) != 1 {
            return Err(Error::invalid(format!("a={a} and q={q} are not coprime")));
        }
        if !beta.is_finite() {
            return Err(Error::invalid("beta must be finite"));
        }
        let beta_fixed = Fixed128::from_f64(beta);
        let alpha = Fixed128::from_ratio(a % q, q).wrapping_add(beta_fixed);
        Ok(PhasePoint {
            alpha,
            rational: Some((a, q)),
            beta,
            beta_fixed,
        })
    }

    /// `frac(α·x^k)`.
    ///
    /// Without a rational part this is `k` successive multiply-by-`x`
    /// reductions of the fixed-point `α`; with one, `a·x^k mod q` is exact
    /// and `β·x^k` is reduced in fixed point.
    #[inline]
    pub fn phase(&self, x: u64, k: u32) -> Fixed128 {
        match self.rational {
            None => {
                let mut t = self.alpha;
                for _ in 0..k {
                    t = t.mul_int(x as u128);
                }
                t
            }
            Some((a, q)) => {
                let r = ((a as u128 * pow_mod(x, k as u64, q) as u128) % q as u128) as u64;
                let mut xk: u128 = 1;
                for _ in 0..k {
                    xk = xk.wrapping_mul(x as u128);
                }
                Fixed128::from_ratio(r, q).wrapping_add(self.beta_fixed.mul_int(xk))
            }
        }
    }

    /// Parses `"a/q"`, `"a/q+b"`, `"a/q-b"` or a decimal string.
    ///
    /// Decimal strings are converted to fixed point exactly (rounded at
    /// `2^-128`), not through `f64`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(slash) = s.find('/') {
            let a: u64 = s[..slash]
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad numerator in {s:?}")))?;
            let rest = &s[slash + 1..];
            let split = rest.get(1..).and_then(|r| r.find(['+', '-'])).map(|i| i + 1);
            let (q_str, beta) = match split {
                Some(i) => {
                    let beta: f64 = rest[i..]
                        .trim()
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad beta in {s:?}")))?;
                    (&rest[..i], beta)
                }
                None => (rest, 0.0),
            };
            let q: u64 = q_str
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad denominator in {s:?}")))?;
            let (a, q) = if q > 0 {
                let g = gcd(a, q);
                (a / g, q / g)
            } else {
                (a, q)
            };
            let a = if q > 0 && a > q { a % q } else { a };
            return PhasePoint::rational_plus(a, q, beta);
        }
        parse_decimal(s).map(PhasePoint::from_fixed)
    }
}

fn parse_decimal(s: &str) -> Result<Fixed128> {
    let bad = || Error::invalid(format!("cannot parse {s:?} as a frequency"));
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.contains(['e', 'E']) {
        let v: f64 = s.parse().map_err(|_| bad())?;
        return Ok(Fixed128::from_f64(v));
    }
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    // integer part vanishes mod 1
    if frac_part.is_empty() {
        return Ok(Fixed128::ZERO);
    }
    let digits = BigUint::parse_bytes(frac_part.as_bytes(), 10).ok_or_else(bad)?;
    let scale = BigUint::from(10u32).pow(frac_part.len() as u32);
    let shifted: BigUint = (digits << 128u32) + (&scale >> 1u32);
    let value = (shifted / &scale) & ((BigUint::from(1u32) << 128u32) - 1u32);
    let v = if value.is_zero() { 0 } else { value.to_u128().ok_or_else(bad)? };
    Ok(if neg { Fixed128(v.wrapping_neg()) } else { Fixed128(v) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use num_traits::One;

    fn exact_phase(a: u64, q: u64, x: u64, k: u32) -> BigUint {
        // ⌊frac(a·x^k/q)·2^128⌋ via big integers
        let num = BigUint::from(a) * BigUint::from(x).pow(k) % BigUint::from(q);
        (num << 128u32) / BigUint::from(q)
    }

    #[test]
    fn zero_alpha_gives_zero_phase() {
        let p = PhasePoint::from_f64(0.0);
        for x in 1..50 {
            assert_eq!(p.phase(x, 3), Fixed128::ZERO);
        }
    }

    #[test]
    fn small_rational_examples() {
        let half = PhasePoint::from_f64(0.5);
        assert_eq!(half.phase(3, 2).to_f64(), 0.5);
        let third = PhasePoint::rational_plus(1, 3, 0.0).unwrap();
        assert!((third.phase(2, 3).to_f64() - 2.0 / 3.0).abs() < 1e-16);
        let third_fixed = PhasePoint::parse("0.333333333333333333333333333333333333333333").unwrap();
        assert!((third_fixed.phase(2, 3).to_f64() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rational_phase_error_below_1e30() {
        // 2^-128 ≈ 2.9e-39, far below 1e-30
        let tol = (BigUint::one() << 128u32) / BigUint::from(10u32).pow(30);
        let cases = [(1u64, 999_983u64), (12_345, 1_000_000 - 1), (7, 1_000_000), (1, 2), (3, 7)];
        for &(a, q) in &cases {
            if gcd(a, q) != 1 {
                continue;
            }
            let p = PhasePoint::rational_plus(a, q, 0.0).unwrap();
            for &(x, k) in &[(1u64, 2u32), (17, 3), (4096, 2), (999, 4), (123_456, 3)] {
                let got = BigUint::from(p.phase(x, k).0);
                let want = exact_phase(a, q, x, k);
                let diff = if got > want { &got - &want } else { &want - &got };
                assert!(diff <= tol, "a={a} q={q} x={x} k={k}");
            }
        }
    }

    #[test]
    fn beta_part_is_exact_for_dyadic_beta() {
        // β = 2^-20: frac(β·x^k) is dyadic and must be reproduced exactly
        let beta = 2f64.powi(-20);
        let p = PhasePoint::rational_plus(1, 1, beta).unwrap();
        let x = 1000u64;
        let want = ((x as u128).pow(2) % (1 << 20)) << 108;
        assert_eq!(p.phase(x, 2).0, want);
    }

    #[test]
    fn from_f64_handles_signs_and_integers() {
        assert_eq!(Fixed128::from_f64(3.0), Fixed128::ZERO);
        assert_eq!(Fixed128::from_f64(-0.25).0, 3u128 << 126);
        assert_eq!(Fixed128::from_f64(1.75).0, 3u128 << 126);
        assert!((Fixed128::from_f64(-0.25).to_signed_f64() + 0.25).abs() < 1e-300);
    }

    #[test]
    fn parsing() {
        let p = PhasePoint::parse("1/3+0.001").unwrap();
        assert_eq!(p.rational, Some((1, 3)));
        assert_eq!(p.beta, 0.001);
        let p = PhasePoint::parse("2/6-1e-5").unwrap();
        assert_eq!(p.rational, Some((1, 3)));
        assert_eq!(p.beta, -1e-5);
        let p = PhasePoint::parse("0.5").unwrap();
        assert_eq!(p.alpha.0, 1u128 << 127);
        assert!(PhasePoint::parse("abc").is_err());
        assert!(PhasePoint::parse("1/0").is_err());
        assert!(PhasePoint::parse("2/4").unwrap().rational == Some((1, 2)));
    }

    #[test]
    fn ratio_to_fixed_is_floor() {
        assert_eq!(Fixed128::from_ratio(1, 2).0, 1u128 << 127);
        assert_eq!(Fixed128::from_ratio(0, 7).0, 0);
        let third = Fixed128::from_ratio(1, 3).0;
        assert_eq!(third, u128::MAX / 3);
    }
}
