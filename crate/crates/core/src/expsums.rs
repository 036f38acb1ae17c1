//! Weyl sums `f_Y(α)`, complete sums `S(q, a)`, the oscillatory integral
//! `v_Y(β)` and the right-hand side of Weyl's inequality.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, pow_mod};
use crate::error::{Error, Result};
use crate::numeric::{unit, ComplexAccumulator};
use crate::phase::{Fixed128, PhasePoint};
use crate::quad::{self, integrate_partition, DEFAULT_MAX_DEPTH};

/// A finite complex number, serialized with its modulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
    pub abs: f64,
}

impl ComplexValue {
    pub fn new(re: f64, im: f64) -> Self {
        debug_assert!(re.is_finite() && im.is_finite(), "non-finite value {re} + {im}i");
        ComplexValue {
            re,
            im,
            abs: re.hypot(im),
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        ComplexValue::new(z.re, z.im)
    }
}

/// `frac(α·x^k)`.
pub fn phase_frac(alpha: &PhasePoint, x: u64, k: u32) -> Fixed128 {
    alpha.phase(x, k)
}

#[inline]
fn unit_fixed(t: Fixed128) -> Complex64 {
    unit(t.to_signed_f64())
}

/// `f_Y(α) = Σ_{x≤Y} e(α x^k)`.
pub fn eval_f(y: u64, alpha: &PhasePoint, k: u32) -> ComplexValue {
    let mut acc = ComplexAccumulator::new();
    for x in 1..=y {
        acc.add(unit_fixed(alpha.phase(x, k)));
    }
    acc.value().into()
}

/// `f_Y(α)` for every `Y` in `ys` (any order) from a single pass up to `max(ys)`.
pub fn eval_f_prefixes(ys: &[u64], alpha: &PhasePoint, k: u32) -> Vec<ComplexValue> {
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by_key(|&i| ys[i]);
    let mut out = vec![ComplexValue::new(0.0, 0.0); ys.len()];
    let mut acc = ComplexAccumulator::new();
    let mut x = 0u64;
    for i in order {
        while x < ys[i] {
            x += 1;
            acc.add(unit_fixed(alpha.phase(x, k)));
        }
        out[i] = acc.value().into();
    }
    out
}

/// Table of `e(j/q)` for `0 ≤ j < q`.
#[derive(Clone, Debug)]
pub struct UnitRoots {
    q: u64,
    table: Vec<Complex64>,
}

impl UnitRoots {
    pub fn new(q: u64) -> Self {
        assert!(q >= 1);
        let table = (0..q)
            .map(|j| {
                // reduce to [-1/2, 1/2) before scaling by 2π
                let t = if 2 * j < q { j as f64 / q as f64 } else { -((q - j) as f64) / q as f64 };
                unit(t)
            })
            .collect();
        UnitRoots { q, table }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn get(&self, j: u64) -> Complex64 {
        self.table[(j % self.q) as usize]
    }

    /// `Σ_{r=1}^{q} e(a r^k / q)` with exact residues.
    pub fn complete_sum(&self, a: u64, k: u32) -> Complex64 {
        let q = self.q;
        let mut acc = ComplexAccumulator::new();
        for r in 1..=q {
            let res = (a as u128 * pow_mod(r, k as u64, q) as u128 % q as u128) as u64;
            acc.add(self.table[res as usize]);
        }
        acc.value()
    }
}

/// `S(q, a) = Σ_{r=1}^{q} e(a r^k / q)`.
#[allow(non_snake_case)]
pub fn eval_S(q: u64, a: u64, k: u32) -> Result<ComplexValue> {
    if q == 0 || a == 0 || a > q {
        return Err(Error::invalid(format!("need 1 <= a <= q, got a={a}, q={q}")));
    }
    if gcd(a, q) != 1 {
        return Err(Error::invalid(format!("gcd(a={a}, q={q}) != 1")));
    }
    Ok(UnitRoots::new(q).complete_sum(a, k).into())
}

/// `∫_0^∞ e(σ u^k) du = Γ(1 + 1/k)(2π)^{-1/k} e(σ/(4k))`.
pub fn complete_fresnel(k: u32, sigma: f64) -> Complex64 {
    let kf = k as f64;
    let modulus = libm::tgamma(1.0 + 1.0 / kf) * std::f64::consts::TAU.powf(-1.0 / kf);
    unit(sigma / (4.0 * kf)) * modulus
}

/// `∫_A^∞ t^c e(σt) dt` for `A ≥ 1`, `c < 0`, times `e(−σA)`.
///
/// Large `A` uses the integration-by-parts series; smaller `A` rotates the
/// contour onto `t = A + iσr`, where the integrand decays like `e^{-2πr}`.
fn incomplete_oscillatory_tail(a: f64, c: f64, sigma: f64) -> Result<Complex64> {
    if a >= 30.0 {
        // −z Σ_n (−z)^n c(c−1)…(c−n+1) A^{c−n}, z = 1/(2πiσ)
        let z = Complex64::new(0.0, -sigma / std::f64::consts::TAU);
        let mut term = Complex64::new(a.powf(c), 0.0);
        let mut sum = term;
        for n in 0..60 {
            term = term * (-z) * ((c - n as f64) / a);
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        return Ok(-z * sum);
    }
    let f = |r: f64| Complex64::new(a, sigma * r).powf(c) * (-std::f64::consts::TAU * r).exp();
    let res = quad::integrate(&f, 0.0, 8.0, 8, 1e-15 * a.powf(c), DEFAULT_MAX_DEPTH)?;
    Ok(Complex64::new(0.0, sigma) * res.value)
}

/// `e(β Y^k)`, reduced exactly when `Y` is a moderate integer.
fn endpoint_phase(y: f64, beta: f64, k: u32) -> Complex64 {
    if y.fract() == 0.0 && y <= 1e15 {
        let yi = y as u128;
        if let Some(yk) = yi.checked_pow(k) {
            return unit_fixed(Fixed128::from_f64(beta).mul_int(yk));
        }
    }
    unit(beta * y.powi(k as i32))
}

/// `v_Y(β) = ∫_0^Y e(β γ^k) dγ`.
///
/// For `T = |β|^{1/k} Y ≤ 1` the integrand has at most one oscillation and
/// is integrated directly. Beyond that `v_Y(β) = |β|^{-1/k}(w(∞) − w_tail(T))`
/// with the complete integral in closed form and the tail from
/// [`incomplete_oscillatory_tail`].
pub fn eval_v(y: f64, beta: f64, k: u32) -> Result<ComplexValue> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::invalid(format!("Y must be positive and finite, got {y}")));
    }
    if !beta.is_finite() {
        return Err(Error::invalid("beta must be finite"));
    }
    if beta == 0.0 {
        return Ok(ComplexValue::new(y, 0.0));
    }
    let kf = k as f64;
    let b = beta.abs();
    let sigma = beta.signum();
    let t = b.powf(1.0 / kf) * y;
    if t <= 1.0 {
        let f = |g: f64| unit(beta * g.powi(k as i32));
        let res = quad::integrate(&f, 0.0, y, 2, 1e-15 * y, DEFAULT_MAX_DEPTH)?;
        return Ok(res.value.into());
    }
    let a = b * y.powi(k as i32);
    let c = 1.0 / kf - 1.0;
    let tail = endpoint_phase(y, beta, k) * incomplete_oscillatory_tail(a, c, sigma)? / kf;
    let w = complete_fresnel(k, sigma) - tail;
    Ok((w * b.powf(-1.0 / kf)).into())
}

/// `v_Y(β)` by adaptive Gauss–Kronrod over `[0, Y]`, with one panel per half
/// oscillation of `e(β γ^k)`.
///
/// On the panel starting at `γ_j` the phase is taken relative to `β γ_j^k`
/// through the binomial expansion of `(γ_j + u)^k − γ_j^k`, which keeps it
/// of order one however large `β Y^k` is.
pub fn eval_v_quadrature(y: f64, beta: f64, k: u32, abs_tol: f64) -> Result<ComplexValue> {
    const MAX_PANELS: f64 = 2e7;
    if !(y > 0.0) || !beta.is_finite() {
        return Err(Error::invalid("need Y > 0 and finite beta"));
    }
    let half_cycles = (2.0 * beta.abs() * y.powi(k as i32)).ceil();
    if half_cycles > MAX_PANELS {
        return Err(Error::Guard {
            what: "oscillatory panels",
            needed: half_cycles as u128,
            limit: MAX_PANELS as u128,
        });
    }
    let n = half_cycles.max(1.0) as usize;
    let start = |j: usize| {
        if beta == 0.0 {
            y * j as f64 / n as f64
        } else {
            (j as f64 / (2.0 * beta.abs())).powf(1.0 / k as f64).min(y)
        }
    };
    let binom: Vec<f64> = (0..=k).scan(1.0, |c, i| {
        let out = *c;
        *c = *c * (k - i) as f64 / (i + 1) as f64;
        Some(out)
    }).collect();
    let mut acc = ComplexAccumulator::new();
    for j in 0..n {
        let (g0, g1) = (start(j), if j + 1 == n { y } else { start(j + 1) });
        if g1 <= g0 {
            continue;
        }
        let base = if beta == 0.0 { Complex64::new(1.0, 0.0) } else { unit(0.5 * (j % 2) as f64) };
        let pows: Vec<f64> = (0..=k).map(|i| g0.powi(i as i32)).collect();
        let f = |u: f64| {
            let mut d = 0.0;
            let mut ui = 1.0;
            for i in 1..=k as usize {
                ui *= u;
                d += binom[i] * pows[k as usize - i] * ui;
            }
            unit(beta * d)
        };
        let res = integrate_partition(&f, &[0.0, g1 - g0], abs_tol * (g1 - g0) / y, DEFAULT_MAX_DEPTH)?;
        acc.add(base * res.value);
    }
    Ok(acc.value().into())
}

/// `X^{1+ε}(1/q + 1/X + q/X^k)^{1/K}` with `K = 2^{k−1}`.
pub fn weyl_rhs(x: u64, q: u64, k: u32, eps: f64) -> f64 {
    let xf = x as f64;
    let big_k = (1u64 << (k - 1)) as f64;
    let inner = 1.0 / q as f64 + 1.0 / xf + q as f64 / xf.powi(k as i32);
    xf.powf(1.0 + eps) * inner.powf(1.0 / big_k)
}

/// `ε = 1/(12K)`.
pub fn default_weyl_eps(k: u32) -> f64 {
    1.0 / (12.0 * (1u64 << (k - 1)) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn f_at_zero_is_y() {
        let z = PhasePoint::from_f64(0.0);
        for y in [1u64, 7, 100] {
            let v = eval_f(y, &z, 3);
            assert_eq!((v.re, v.im), (y as f64, 0.0));
        }
    }

    #[test]
    fn f_at_half_vanishes_for_even_y() {
        let half = PhasePoint::rational_plus(1, 2, 0.0).unwrap();
        for y in [2u64, 10, 64] {
            assert!(eval_f(y, &half, 2).abs < 1e-13);
        }
    }

    #[test]
    fn f_matches_rational_phase_sum() {
        let p = PhasePoint::rational_plus(1, 5, 0.0).unwrap();
        let got = eval_f(5, &p, 2).to_complex();
        let want: Complex64 = (1..=5u64).map(|x| unit(((x * x) % 5) as f64 / 5.0)).sum();
        assert!(close(got, want, 1e-12));
    }

    #[test]
    fn f_conjugate_symmetry() {
        let a = PhasePoint::parse("0.1234567891011").unwrap();
        let b = PhasePoint::from_fixed(Fixed128(a.alpha.0.wrapping_neg()));
        let fa = eval_f(300, &a, 3).to_complex();
        let fb = eval_f(300, &b, 3).to_complex();
        assert!(close(fa, fb.conj(), 1e-11));
        assert!(fa.norm() <= 300.0);
    }

    #[test]
    fn prefixes_agree_with_single_sums() {
        let p = PhasePoint::from_f64(0.318);
        let ys = [50u64, 3, 17, 50, 1];
        let many = eval_f_prefixes(&ys, &p, 2);
        for (y, v) in ys.iter().zip(&many) {
            assert_eq!(*v, eval_f(*y, &p, 2));
        }
    }

    #[test]
    fn complete_sums() {
        let one = eval_S(1, 1, 5).unwrap();
        assert!((one.re - 1.0).abs() < 1e-15 && one.im.abs() < 1e-15);
        assert!(eval_S(2, 1, 2).unwrap().abs < 1e-15);
        let s3 = eval_S(3, 1, 2).unwrap();
        assert!(s3.re.abs() < 1e-14);
        assert!((s3.im - 3f64.sqrt()).abs() < 1e-14);
        assert!(eval_S(4, 2, 2).is_err());
        assert!(eval_S(4, 0, 2).is_err());
        assert!(eval_S(4, 5, 2).is_err());
    }

    #[test]
    fn complete_sum_equals_full_period_weyl_sum() {
        for q in 1..=50u64 {
            let roots = UnitRoots::new(q);
            for a in 1..=q {
                if gcd(a, q) != 1 {
                    continue;
                }
                let p = PhasePoint::rational_plus(a, q, 0.0).unwrap();
                for k in 2..=4 {
                    let s = roots.complete_sum(a, k);
                    let f = eval_f(q, &p, k).to_complex();
                    assert!(close(s, f, 1e-12), "q={q} a={a} k={k}");
                    assert!(s.norm() <= q as f64 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn gauss_sum_modulus() {
        for q in [3u64, 5, 7, 11, 13, 101] {
            for a in [1u64, 2] {
                let s = eval_S(q, a, 2).unwrap();
                assert!((s.abs - (q as f64).sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn v_at_zero_beta() {
        let v = eval_v(12.5, 0.0, 3).unwrap();
        assert_eq!((v.re, v.im), (12.5, 0.0));
    }

    #[test]
    fn v_approaches_fresnel_limit() {
        // ∫_0^∞ e(u²) du = e(1/8)/(2√2); the tail beyond Y=1000 is O(1/(4πY)).
        let v = eval_v(1000.0, 1.0, 2).unwrap().to_complex();
        let limit = unit(0.125) / (2.0 * 2f64.sqrt());
        assert!((v.norm() - limit.norm()).abs() < 0.01 * limit.norm());
        assert!(close(v, limit, 1.0 / (4.0 * PI * 1000.0) + 1e-9));
    }

    #[test]
    fn v_small_beta_taylor() {
        // v ≈ Y + 2πiβ Y^{k+1}/(k+1) − 2π²β² Y^{2k+1}/(2k+1)
        let (y, beta, k) = (2.0f64, 1e-6, 3);
        let v = eval_v(y, beta, k).unwrap().to_complex();
        let tw = 2.0 * PI * beta;
        let taylor = Complex64::new(y - tw * tw * y.powi(7) / 14.0, tw * y.powi(4) / 4.0);
        assert!(close(v, taylor, 1e-12));
        assert!((v.re - 2.0).abs() < 1e-6);
    }

    #[test]
    fn v_fast_route_matches_direct_quadrature() {
        for &k in &[2u32, 3, 4] {
            for &beta in &[-3e-3, -1e-5, 2e-7, 1e-4, 0.05, 1.3] {
                for &y in &[0.7, 3.0, 10.0, 41.0, 150.0] {
                    let phase = (beta as f64).abs() * f64::powi(y, k as i32);
                    if phase > 2e4 {
                        continue;
                    }
                    let fast = eval_v(y, beta, k).unwrap().to_complex();
                    let slow = eval_v_quadrature(y, beta, k, 1e-11).unwrap().to_complex();
                    assert!(close(fast, slow, 1e-9), "k={k} beta={beta} y={y}: {fast} vs {slow}");
                    assert!(fast.norm() <= y * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn v_conjugate_in_beta() {
        let a = eval_v(20.0, 0.01, 3).unwrap().to_complex();
        let b = eval_v(20.0, -0.01, 3).unwrap().to_complex();
        assert!(close(a, b.conj(), 1e-13));
    }

    #[test]
    fn v_rejects_bad_y() {
        assert!(eval_v(0.0, 1.0, 2).is_err());
        assert!(eval_v(-1.0, 1.0, 2).is_err());
        assert!(eval_v(f64::NAN, 1.0, 2).is_err());
    }

    #[test]
    fn weyl_rhs_examples() {
        assert!((weyl_rhs(100, 10, 2, 0.0) - 100.0 * 0.111f64.sqrt()).abs() < 1e-12);
        for x in [10u64, 100, 1000] {
            assert!(weyl_rhs(x, 1, 3, 0.0) >= x as f64);
        }
        let x = 1u64 << 12;
        let want = 512.0 * (1.0 + 2f64.powi(-6) + 2f64.powi(-12)).sqrt();
        assert!((weyl_rhs(x, 64, 2, 0.0) - want).abs() < 1e-9);
        assert_eq!(default_weyl_eps(2), 1.0 / 24.0);
    }
}
