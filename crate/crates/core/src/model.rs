//! Problem instances and the explicit constants of the box estimate.
//!
//! A [`BoxSpec`] is the equation `x_1^k + … + x_s^k = N` restricted to
//! `1 ≤ x_j ≤ P_j`. [`Thresholds`] carries every constant the estimate is
//! built from; all of them are exact rationals.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::arith::{compare_rational_powers, integer_root};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// One instance: exponent `k`, side lengths `P_1 ≤ … ≤ P_s`, target `N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BoxSpecJson", into = "BoxSpecJson")]
pub struct BoxSpec {
    k: u32,
    sides: Vec<u64>,
    n: u128,
}

#[derive(Serialize, Deserialize)]
struct BoxSpecJson {
    k: u32,
    s: usize,
    sides: Vec<u64>,
    #[serde(rename = "N")]
    n: u128,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    p: Option<String>,
    #[serde(rename = "X", default, skip_serializing_if = "Option::is_none")]
    x: Option<u64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    t: Option<String>,
}

impl From<BoxSpec> for BoxSpecJson {
    fn from(b: BoxSpec) -> Self {
        BoxSpecJson {
            k: b.k,
            s: b.s(),
            p: Some(b.p().to_string()),
            x: Some(b.x()),
            t: Some(b.t().to_string()),
            sides: b.sides,
            n: b.n,
        }
    }
}

impl TryFrom<BoxSpecJson> for BoxSpec {
    type Error = Error;

    fn try_from(raw: BoxSpecJson) -> Result<Self> {
        if raw.s != raw.sides.len() {
            return Err(Error::invalid(format!(
                "s = {} but {} sides given",
                raw.s,
                raw.sides.len()
            )));
        }
        let b = BoxSpec::new(raw.k, raw.sides, raw.n)?;
        if raw.p.is_some_and(|p| p != b.p().to_string())
            || raw.x.is_some_and(|x| x != b.x())
            || raw.t.is_some_and(|t| t != b.t().to_string())
        {
            return Err(Error::invalid("derived P, X, T inconsistent with sides"));
        }
        Ok(b)
    }
}

impl BoxSpec {
    /// Validates and sorts the sides ascending.
    pub fn new(k: u32, mut sides: Vec<u64>, n: u128) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid(format!("k must be at least 2, got {k}")));
        }
        if sides.is_empty() {
            return Err(Error::invalid("at least one side is required"));
        }
        if sides.contains(&0) {
            return Err(Error::invalid("side lengths must be positive"));
        }
        if n == 0 {
            return Err(Error::invalid("N must be positive"));
        }
        sides.sort_unstable();
        Ok(BoxSpec { k, sides, n })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn s(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[u64] {
        &self.sides
    }

    pub fn n(&self) -> u128 {
        self.n
    }

    /// `P = ∏ P_j`.
    pub fn p(&self) -> BigUint {
        self.sides
            .iter()
            .fold(BigUint::one(), |acc, &side| acc * BigUint::from(side))
    }

    /// `X = P_s`, the largest side.
    pub fn x(&self) -> u64 {
        *self.sides.last().expect("nonempty")
    }

    /// `T = P / P_1`.
    pub fn t(&self) -> BigUint {
        self.sides[1..]
            .iter()
            .fold(BigUint::one(), |acc, &side| acc * BigUint::from(side))
    }

    /// `Σ P_j^k`, the degree of the generating polynomial; `None` on overflow.
    pub fn power_sum(&self) -> Option<u128> {
        self.sides.iter().try_fold(0u128, |acc, &side| {
            (side as u128)
                .checked_pow(self.k)
                .and_then(|p| acc.checked_add(p))
        })
    }

    /// True when `X < (N/s)^{1/k}`, i.e. `s·X^k < N`: no solution can exist.
    pub fn below_range(&self) -> bool {
        let xk = BigUint::from(self.x()).pow(self.k);
        xk * BigUint::from(self.s()) < BigUint::from(self.n)
    }
}

/// Every explicit constant of the argument, for one `(k, s)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub k: u32,
    pub s: u32,
    #[serde(rename = "H_k")]
    pub h_k: u64,
    pub theta: u8,
    #[serde(rename = "K")]
    pub big_k: u64,
    pub lambda: Rational,
    pub tau: Rational,
    pub delta_a: Rational,
    pub delta_b: Rational,
    pub delta_c: Rational,
    pub delta_prime: Rational,
    pub delta_0: Rational,
    /// Undefined for `s = 1`.
    pub delta_1: Option<Rational>,
    pub delta: Option<Rational>,
    /// `2^k`, the classical Hua exponent.
    pub hua_branch: u64,
    /// `k² − k + 2⌊√(2k+2)⌋ − θ(k)`, evaluated for every `k`.
    pub quadratic_branch: u64,
    /// Whether `s ≥ H_k + 1`.
    pub hypothesis: bool,
}

/// `θ(k) ∈ {1, 2}`.
pub fn theta(k: u32) -> u8 {
    let m = 2 * k as u128 + 2;
    let r = integer_root(m, 2);
    if m <= r * r + r {
        1
    } else {
        2
    }
}

/// `k² − k + 2⌊√(2k+2)⌋ − θ(k)`.
pub fn quadratic_branch(k: u32) -> u64 {
    let k64 = k as u64;
    let r = integer_root(2 * k as u128 + 2, 2) as u64;
    k64 * k64 - k64 + 2 * r - theta(k) as u64
}

/// The Hua-type mean value threshold `H_k`.
pub fn hua_threshold(k: u32) -> u64 {
    if k <= 4 {
        1u64 << k
    } else {
        quadratic_branch(k)
    }
}

pub fn compute_thresholds(k: u32, s: u32) -> Result<Thresholds> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    if s < 1 {
        return Err(Error::invalid("s must be at least 1"));
    }
    if k > 62 {
        return Err(Error::invalid("k too large for 64-bit thresholds"));
    }
    let (ki, si) = (k as i64, s as i64);
    let big_k = 1u64 << (k - 1);
    let lambda = Rational::new(1, 12 * ki);
    let tau = Rational::new(1, 12 * ki * si * si);
    let sixth = Rational::new(1, 6);
    let delta_a = (sixth - lambda) / Rational::from_integer(si);
    let delta_b = Rational::new(si - ki, 12 * ki * si);
    let delta_c = Rational::new(si - 2 * ki, 6 * ki * si);
    let delta_prime = delta_a.min(delta_b).min(delta_c);
    let delta_0 = Rational::new(1, 24 * big_k as i64 * si * si).min(delta_prime);
    let delta_1 = (s > 1).then(|| Rational::new(1, 24 * si * si * (si - 1)));
    let delta = delta_1.map(|d1| delta_0.min(d1));
    let h_k = hua_threshold(k);
    Ok(Thresholds {
        k,
        s,
        h_k,
        theta: theta(k),
        big_k,
        lambda,
        tau,
        delta_a,
        delta_b,
        delta_c,
        delta_prime,
        delta_0,
        delta_1,
        delta,
        hua_branch: 1u64 << k,
        quadratic_branch: quadratic_branch(k),
        hypothesis: s as u64 > h_k,
    })
}

/// Replaces every side by `min(P_j, ⌊N^{1/k}⌋)`; the solution set is unchanged.
pub fn truncate_box(b: &BoxSpec) -> BoxSpec {
    let cap = integer_root(b.n, b.k);
    let cap = u64::try_from(cap).unwrap_or(u64::MAX);
    let sides = b.sides.iter().map(|&side| side.min(cap)).collect();
    BoxSpec::new(b.k, sides, b.n).expect("truncation keeps sides positive")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dichotomy {
    Balanced,
    Unbalanced,
}

/// `1/s − τ` as a reduced fraction of nonnegative integers.
fn unbalanced_exponent(t: &Thresholds) -> (u64, u64) {
    let e = Rational::new(1, t.s as i64) - t.tau;
    (e.num() as u64, e.den() as u64)
}

/// Unbalanced iff `P_1 ≤ P^{1/s−τ}`, decided in exact integer arithmetic.
///
/// In the balanced case the consequence `P_1 ≥ X^{1−λ}` is checked as well.
pub fn classify_box(b: &BoxSpec, t: &Thresholds) -> Dichotomy {
    if is_unbalanced(b, t) {
        Dichotomy::Unbalanced
    } else {
        assert!(
            min_side_dominates(b, t),
            "balanced box with P_1 < X^(1-lambda): {b:?}"
        );
        Dichotomy::Balanced
    }
}

/// `P_1 ≤ P^{1/s−τ}`, exactly.
pub fn is_unbalanced(b: &BoxSpec, t: &Thresholds) -> bool {
    assert_eq!(b.s(), t.s as usize, "thresholds computed for another s");
    let p1 = BigUint::from(b.sides[0]);
    compare_rational_powers(&p1, (1, 1), &b.p(), unbalanced_exponent(t)) != Ordering::Greater
}

/// `P_1 ≥ X^{1−λ}`, exactly.
pub fn min_side_dominates(b: &BoxSpec, t: &Thresholds) -> bool {
    let one_minus_lambda = Rational::from_integer(1) - t.lambda;
    compare_rational_powers(
        &BigUint::from(b.sides[0]),
        (1, 1),
        &BigUint::from(b.x()),
        (one_minus_lambda.num() as u64, one_minus_lambda.den() as u64),
    ) != Ordering::Less
}
