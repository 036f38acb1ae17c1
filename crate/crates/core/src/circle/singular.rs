//! The truncated singular series and two independent evaluations of the
//! singular integral.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, pow_mod};
use crate::error::{Error, Result};
use crate::expsums::{eval_v, ComplexValue, UnitRoots};
use crate::model::BoxSpec;
use crate::numeric::{unit, ComplexAccumulator, DoubleDouble};
use crate::phase::Fixed128;
use crate::quad::{integrate, DEFAULT_MAX_DEPTH};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularSeries {
    pub k: u32,
    pub s: u32,
    #[serde(rename = "N")]
    pub n: u128,
    #[serde(rename = "Q")]
    pub q: u64,
    pub value: f64,
    pub imag: f64,
    /// `s > 2k`; below that the full series need not converge.
    pub convergent: bool,
}

/// Contribution of one denominator `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub q: u64,
    /// `Σ_{(a,q)=1} (S(q,a)/q)^s e(−Na/q)`.
    pub value: ComplexValue,
    /// `Σ_{(a,q)=1} |S(q,a)/q|^s`.
    pub abs_mass: f64,
}

/// Terms of the singular series for `1 ≤ q ≤ Q`.
pub fn singular_series_terms(k: u32, s: u32, n: u128, q_max: u64) -> Result<Vec<SeriesTerm>> {
    if k < 2 || s < 1 || q_max < 1 {
        return Err(Error::invalid("need k >= 2, s >= 1, Q >= 1"));
    }
    let mut out = Vec::with_capacity(q_max as usize);
    for q in 1..=q_max {
        let roots = UnitRoots::new(q);
        // histogram of r^k mod q turns each S(q, a) into a sum over residues
        let mut hist = vec![0u64; q as usize];
        for r in 1..=q {
            hist[pow_mod(r, k as u64, q) as usize] += 1;
        }
        let residues: Vec<(u64, f64)> = hist
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(c, &m)| (c as u64, m as f64))
            .collect();
        let n_mod = (n % q as u128) as u64;
        let mut acc = ComplexAccumulator::new();
        let mut mass = DoubleDouble::new();
        for a in 1..=q {
            if gcd(a, q) != 1 {
                continue;
            }
            let mut sum = Complex64::new(0.0, 0.0);
            for &(c, m) in &residues {
                sum += roots.get((a as u128 * c as u128 % q as u128) as u64) * m;
            }
            let ratio = sum / q as f64;
            let twist = roots.get(q - (n_mod as u128 * a as u128 % q as u128) as u64);
            acc.add(ratio.powu(s) * twist);
            mass.add(ratio.norm().powi(s as i32));
        }
        out.push(SeriesTerm {
            q,
            value: acc.value().into(),
            abs_mass: mass.value(),
        });
    }
    Ok(out)
}

/// `Σ_{q≤Q} Σ_{(a,q)=1} (S(q,a)/q)^s e(−Na/q)`.
pub fn singular_series(k: u32, s: u32, n: u128, q_max: u64) -> Result<SingularSeries> {
    let terms = singular_series_terms(k, s, n, q_max)?;
    let mut re = DoubleDouble::new();
    let mut im = DoubleDouble::new();
    for t in &terms {
        re.add(t.value.re);
        im.add(t.value.im);
    }
    Ok(SingularSeries {
        k,
        s,
        n,
        q: q_max,
        value: re.value(),
        imag: im.value(),
        convergent: s > 2 * k,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularIntegralMethod {
    Beta,
    Convolution,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularIntegral {
    pub value: f64,
    pub method: SingularIntegralMethod,
    /// Truncation point `B` of the β-integral.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    /// Bound on `|∫_{|β|>B}|`; absent when it diverges (`s = k`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
    /// Grid cells per unit of `N` in the convolution method.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
}

/// `Γ(1+1/k)^s / Γ(s/k) · N^{s/k−1}`, the value when no side clips the hyperplane.
pub fn dirichlet_closed_form(k: u32, s: u32, n: f64) -> f64 {
    let (kf, sf) = (k as f64, s as f64);
    libm::tgamma(1.0 + 1.0 / kf).powf(sf) / libm::tgamma(sf / kf) * n.powf(sf / kf - 1.0)
}

/// `|v_Y(β)| ≤ C_k β^{−1/k}` once `β Y^k ≥ 1`, with `C_k = Γ(1+1/k)(2π)^{−1/k} + 1/(kπ)`.
fn v_decay_constant(k: u32) -> f64 {
    let kf = k as f64;
    libm::tgamma(1.0 + 1.0 / kf) * std::f64::consts::TAU.powf(-1.0 / kf) + 1.0 / (kf * std::f64::consts::PI)
}

/// `2∫_B^∞ ∏_j min-type bound on |v_{P_j}(β)| dβ`, integrating the piecewise
/// power law exactly. `None` when the bound diverges.
pub fn beta_tail_bound(sides: &[u64], k: u32, cutoff: f64) -> Option<f64> {
    let s = sides.len();
    if s <= k as usize {
        return None;
    }
    let kf = k as f64;
    let c = v_decay_constant(k);
    // For β ≥ P^{−k} a side contributes C_k β^{−1/k}, below that P.
    let mut breaks: Vec<f64> = sides.iter().map(|&p| (p as f64).powi(-(k as i32))).collect();
    breaks.retain(|&b| b > cutoff);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut edges = vec![cutoff];
    edges.extend(breaks);
    edges.push(f64::INFINITY);
    let mut total = 0.0;
    for seg in edges.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let mid = if hi.is_finite() { 0.5 * (lo + hi) } else { lo * 2.0 + 1.0 };
        let mut coef = 1.0;
        let mut decaying = 0usize;
        for &p in sides {
            if mid * (p as f64).powi(k as i32) >= 1.0 {
                coef *= c;
                decaying += 1;
            } else {
                coef *= p as f64;
            }
        }
        let e = 1.0 - decaying as f64 / kf;
        let piece = if e.abs() < 1e-15 {
            if hi.is_finite() { (hi / lo).ln() } else { return None }
        } else {
            let upper = if hi.is_finite() { hi.powf(e) } else if e < 0.0 { 0.0 } else { return None };
            (upper - lo.powf(e)) / e
        };
        total += coef * piece;
    }
    Some(2.0 * total)
}

fn check_integral_box(b: &BoxSpec) -> Result<()> {
    if b.s() < 2 {
        return Err(Error::invalid("the singular integral needs s >= 2"));
    }
    if b.s() < b.k() as usize {
        return Err(Error::invalid(format!(
            "s = {} < k = {}: the singular integral is not defined by an integrable β-integral",
            b.s(),
            b.k()
        )));
    }
    Ok(())
}

/// `∫_{−B}^{B} ∏_j v_{P_j}(β) e(−Nβ) dβ`, as `2 Re ∫_0^B` by conjugate symmetry.
///
/// `B` defaults to `X^{1/6−k}` with `X = P_s`.
pub fn singular_integral_beta(b: &BoxSpec, cutoff: Option<f64>, abs_tol: f64) -> Result<SingularIntegral> {
    check_integral_box(b)?;
    let k = b.k();
    let cutoff = cutoff.unwrap_or_else(|| super::dissection::arc_half_width(b.x(), k));
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::invalid(format!("cutoff must be positive, got {cutoff}")));
    }
    let n = b.n();
    let freq = b.sides().iter().map(|&p| (p as f64).powi(k as i32)).sum::<f64>() + n as f64;
    let f = |beta: f64| {
        let mut prod = unit(-Fixed128::from_f64(beta).mul_int(n).to_signed_f64());
        for &p in b.sides() {
            prod *= eval_v(p as f64, beta, k).expect("positive side").to_complex();
        }
        prod
    };
    let panels = (cutoff * freq).ceil().max(1.0) as usize + 1;
    let res = integrate(&f, 0.0, cutoff, panels, 0.5 * abs_tol, DEFAULT_MAX_DEPTH)?;
    Ok(SingularIntegral {
        value: 2.0 * res.value.re,
        method: SingularIntegralMethod::Beta,
        cutoff: Some(cutoff),
        tail_bound: beta_tail_bound(b.sides(), k, cutoff),
        grid_points: None,
    })
}

/// Mass of the density `(1/k) u^{1/k−1}` on `[ih, (i+1)h] ∩ [0, P^k]`.
fn cell_masses(cells: usize, h: f64, pk: f64, k: u32) -> Vec<f64> {
    let r = 1.0 / k as f64;
    (0..cells)
        .map(|i| {
            let lo = i as f64 * h;
            if lo >= pk {
                return 0.0;
            }
            let hi = (lo + h).min(pk);
            if i == 0 {
                hi.powf(r)
            } else {
                // lo^r ((hi/lo)^r − 1) without cancellation
                lo.powf(r) * (r * ((hi - lo) / lo).ln_1p()).exp_m1()
            }
        })
        .collect()
}

fn convolve_truncated(a: &[f64], b: &[f64], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let keep = a.len();
    let len = (a.len() + b.len()).next_power_of_two();
    let mut x: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    x.resize(len, Complex64::new(0.0, 0.0));
    let mut y: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    y.resize(len, Complex64::new(0.0, 0.0));
    let fwd = planner.plan_fft_forward(len);
    fwd.process(&mut x);
    fwd.process(&mut y);
    for (u, v) in x.iter_mut().zip(&y) {
        *u *= v;
    }
    planner.plan_fft_inverse(len).process(&mut x);
    x.truncate(keep);
    x.into_iter().map(|z| z.re / len as f64).collect()
}

fn conv_estimate(b: &BoxSpec, cells: usize) -> f64 {
    let k = b.k();
    let s = b.s();
    let n = b.n() as f64;
    // A sum of s cell indices t lies in [t h, (t+s) h); reading index `cells`
    // at N = (cells + s/2) h centres that offset.
    let h = n / (cells as f64 + s as f64 / 2.0);
    let mut planner = FftPlanner::new();
    let mut acc: Option<Vec<f64>> = None;
    for &p in b.sides() {
        let m = cell_masses(cells + 1, h, (p as f64).powi(k as i32), k);
        acc = Some(match acc {
            None => m,
            Some(prev) => convolve_truncated(&prev, &m, &mut planner),
        });
    }
    acc.expect("s >= 2")[cells] / h
}

/// The hyperplane integral `∫_{Σu_j=N} ∏_j (1/k) u_j^{1/k−1} 1[u_j ≤ P_j^k] dσ`
/// by successive FFT convolution of exact cell masses.
pub fn singular_integral_conv(b: &BoxSpec, cells: usize) -> Result<SingularIntegral> {
    check_integral_box(b)?;
    if cells < 64 {
        return Err(Error::invalid("at least 64 grid cells are required"));
    }
    let total = b.sides().iter().map(|&p| (p as f64).powi(b.k() as i32)).sum::<f64>();
    if b.n() as f64 > total {
        return Ok(SingularIntegral {
            value: 0.0,
            method: SingularIntegralMethod::Convolution,
            cutoff: None,
            tail_bound: None,
            grid_points: Some(cells),
        });
    }
    let fine = conv_estimate(b, cells);
    let coarse = conv_estimate(b, cells / 2);
    let rel = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if rel > 1e-3 {
        return Err(Error::GridResolution(format!(
            "{cells} and {} cells differ by {rel:.2e} relative",
            cells / 2
        )));
    }
    Ok(SingularIntegral {
        value: fine,
        method: SingularIntegralMethod::Convolution,
        cutoff: None,
        tail_bound: None,
        grid_points: Some(cells),
    })
}

pub const DEFAULT_CONV_CELLS: usize = 1 << 19;

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bx(k: u32, sides: &[u64], n: u128) -> BoxSpec {
        BoxSpec::new(k, sides.to_vec(), n).unwrap()
    }

    #[test]
    fn series_small_truncations() {
        for (k, s, n) in [(2u32, 5u32, 17u128), (3, 9, 100), (2, 3, 1)] {
            let one = singular_series(k, s, n, 1).unwrap();
            assert_eq!((one.value, one.imag), (1.0, 0.0));
        }
        for n in [1u128, 2, 3, 1000] {
            let two = singular_series(2, 5, n, 2).unwrap();
            assert_eq!(two.value, 1.0);
        }
        assert!(!singular_series(2, 4, 5, 3).unwrap().convergent);
        assert!(singular_series(2, 5, 5, 3).unwrap().convergent);
    }

    #[test]
    fn series_is_real() {
        for (k, s, n) in [(2u32, 5u32, 1234u128), (3, 7, 999), (2, 4, 7), (4, 9, 5)] {
            let ser = singular_series(k, s, n, 60).unwrap();
            assert!(ser.imag.abs() <= 1e-10, "{ser:?}");
        }
    }

    #[test]
    fn series_terms_against_direct_sums() {
        let terms = singular_series_terms(3, 4, 10, 12).unwrap();
        for t in &terms {
            let q = t.q;
            let mut want = Complex64::new(0.0, 0.0);
            for a in 1..=q {
                if gcd(a, q) != 1 {
                    continue;
                }
                let s: Complex64 = (1..=q).map(|r| unit((a * r.pow(3) % q) as f64 / q as f64)).sum();
                want += (s / q as f64).powu(4) * unit(-(((10 * a) % q) as f64) / q as f64);
            }
            assert!((t.value.to_complex() - want).norm() < 1e-12, "q={q}");
        }
    }

    #[test]
    fn closed_form_special_values() {
        assert!((dirichlet_closed_form(2, 2, 17.0) - PI / 4.0).abs() < 1e-15);
        // k = 1 would be the simplex volume N^{s−1}/(s−1)!
        assert!((dirichlet_closed_form(1, 3, 2.0) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn conv_pi_over_four() {
        let b = bx(2, &[10, 10], 64);
        let j = singular_integral_conv(&b, DEFAULT_CONV_CELLS).unwrap();
        assert!((j.value - PI / 4.0).abs() < 1e-4, "{}", j.value);
    }

    #[test]
    fn conv_matches_dirichlet() {
        for k in [2u32, 3] {
            for s in [3u32, 4, 5] {
                let n = 500u128;
                let side = (n as f64).powf(1.0 / k as f64).ceil() as u64 + 1;
                let b = bx(k, &vec![side; s as usize], n);
                let j = singular_integral_conv(&b, DEFAULT_CONV_CELLS).unwrap().value;
                let want = dirichlet_closed_form(k, s, n as f64);
                assert!((j - want).abs() <= 1e-4 * want, "k={k} s={s}: {j} vs {want}");
            }
        }
    }

    #[test]
    fn conv_zero_beyond_range() {
        let b = bx(2, &[3, 4], 26);
        assert_eq!(singular_integral_conv(&b, 1024).unwrap().value, 0.0);
    }

    #[test]
    fn beta_matches_dirichlet() {
        for (k, s, n) in [(2u32, 5u32, 300u128), (3, 4, 200), (2, 3, 150)] {
            let side = (n as f64).powf(1.0 / k as f64).ceil() as u64 + 1;
            let b = bx(k, &vec![side; s as usize], n);
            let cutoff = 4000.0 / n as f64;
            let j = singular_integral_beta(&b, Some(cutoff), 1e-9).unwrap();
            let want = dirichlet_closed_form(k, s, n as f64);
            let tail = j.tail_bound.unwrap();
            assert!((j.value - want).abs() <= 1e-3 * want, "k={k} s={s}: {} vs {want}, tail {tail}", j.value);
            assert!((j.value - want).abs() <= tail + 1e-6 * want);
        }
    }

    #[test]
    fn tail_bound_shapes() {
        assert_eq!(beta_tail_bound(&[5, 5, 5], 3, 0.1), None);
        let c = v_decay_constant(2);
        let b = 0.5;
        let got = beta_tail_bound(&[4, 4, 4, 4, 4], 2, b).unwrap();
        assert!((got - 2.0 * c.powi(5) * b.powf(-1.5) / 1.5).abs() < 1e-12 * got);
        assert!(beta_tail_bound(&[4, 4, 4, 4, 4], 2, 1e-3).unwrap() > got);
    }

    #[test]
    fn v_decay_constant_is_a_bound() {
        for k in 2..=4u32 {
            let c = v_decay_constant(k);
            for &y in &[1.0f64, 5.0, 40.0] {
                for &beta in &[1e-4f64, 1e-2, 0.3, 3.0] {
                    if beta * y.powi(k as i32) < 1.0 {
                        continue;
                    }
                    let v = eval_v(y, beta, k).unwrap().abs;
                    assert!(v <= c * beta.powf(-1.0 / k as f64), "k={k} y={y} beta={beta}");
                }
            }
        }
    }

    #[test]
    fn rejects_s_below_k() {
        assert!(singular_integral_beta(&bx(3, &[5, 5], 20), None, 1e-9).is_err());
        assert!(singular_integral_conv(&bx(3, &[5, 5], 20), 1024).is_err());
    }
}
