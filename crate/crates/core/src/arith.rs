//! Exact integer helpers: k-th roots, modular powers, totients and
//! comparisons between rational powers of integers.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

/// `⌊n^{1/k}⌋` by binary search on big integers.
pub fn integer_root_big(n: &BigUint, k: u32) -> BigUint {
    assert!(k >= 1, "root index must be positive");
    if n.is_zero() || k == 1 {
        return n.clone();
    }
    // 2^{⌈bits/k⌉} is a strict upper bound for the root.
    let bits = n.bits();
    let mut lo = BigUint::zero();
    let mut hi = BigUint::one() << bits.div_ceil(k as u64);
    // invariant: lo^k <= n < hi^k
    while &hi - &lo > BigUint::one() {
        let mid = (&lo + &hi) >> 1u32;
        if mid.pow(k) <= *n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `⌊n^{1/k}⌋` for machine integers, computed exactly.
pub fn integer_root(n: u128, k: u32) -> u128 {
    integer_root_big(&BigUint::from(n), k)
        .to_u128()
        .expect("root of a u128 fits in u128")
}

/// `x^k` if it fits in a `u128`.
pub fn checked_pow(x: u128, k: u32) -> Option<u128> {
    x.checked_pow(k)
}

/// `base^exp mod m` with 128-bit intermediates.
pub fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let m128 = m as u128;
    let mut acc: u128 = 1;
    let mut b = (base as u128) % m128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Euler's totient by trial division.
pub fn totient(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Compares `a^(p_num/p_den)` with `b^(q_num/q_den)` exactly, for
/// positive integers `a`, `b` and nonnegative rational exponents.
///
/// Both sides are raised to the power `p_den·q_den`, so the comparison is
/// `a^(p_num·q_den)` versus `b^(q_num·p_den)` in big integers.
pub fn compare_rational_powers(
    a: &BigUint,
    (p_num, p_den): (u64, u64),
    b: &BigUint,
    (q_num, q_den): (u64, u64),
) -> Ordering {
    assert!(p_den > 0 && q_den > 0);
    let lhs_exp = p_num.checked_mul(q_den).expect("exponent overflow");
    let rhs_exp = q_num.checked_mul(p_den).expect("exponent overflow");
    let lhs = big_pow(a, lhs_exp);
    let rhs = big_pow(b, rhs_exp);
    lhs.cmp(&rhs)
}

fn big_pow(base: &BigUint, exp: u64) -> BigUint {
    let exp = u32::try_from(exp).expect("exponent exceeds u32");
    base.pow(exp)
}

/// Natural log of a big integer, accurate to double precision.
pub fn ln_big(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().expect("finite");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Serializes a count as a JSON number when it fits in `u64`, otherwise
/// as a decimal string; both forms are accepted back.
pub mod big_count {
    use num_bigint::BigUint;
    use num_traits::ToPrimitive;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigUint, ser: S) -> Result<S::Ok, S::Error> {
        match n.to_u64() {
            Some(v) => ser.serialize_u64(v),
            None => ser.serialize_str(&n.to_string()),
        }
    }

    struct CountVisitor;

    impl de::Visitor<'_> for CountVisitor {
        type Value = BigUint;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a nonnegative integer or a decimal string")
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<BigUint, E> {
            Ok(BigUint::from(v))
        }

        fn visit_u128<E: de::Error>(self, v: u128) -> Result<BigUint, E> {
            Ok(BigUint::from(v))
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<BigUint, E> {
            v.parse().map_err(E::custom)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<BigUint, D::Error> {
        de.deserialize_any(CountVisitor)
    }
}

/// [`big_count`] for `u128` fields.
pub mod wide_count {
    use num_bigint::BigUint;
    use num_traits::ToPrimitive;
    use serde::{de::Error, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &u128, ser: S) -> Result<S::Ok, S::Error> {
        super::big_count::serialize(&BigUint::from(*n), ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<u128, D::Error> {
        super::big_count::deserialize(de)?
            .to_u128()
            .ok_or_else(|| D::Error::custom("count exceeds 128 bits"))
    }
}
