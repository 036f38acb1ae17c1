//! Integrals over the circle: the exact equispaced identity for `Root`, the
//! even-moment identity, and quadrature over major and minor arcs.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::arith::pow_mod;
use crate::error::{Error, Result};
use crate::expsums::{eval_S, eval_f, eval_v, ComplexValue};
use crate::guards::Guards;
use crate::model::BoxSpec;
use crate::numeric::{unit, ComplexAccumulator};
use crate::phase::{Fixed128, PhasePoint};
use crate::quad::{integrate, DEFAULT_MAX_DEPTH};

use super::dissection::Dissection;

/// `f_P(j/M)` for `0 ≤ j < M`, from one inverse DFT of the histogram of
/// `x^k mod M`.
pub fn weyl_sums_equispaced(p: u64, k: u32, m: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for x in 1..=p {
        buf[pow_mod(x, k as u64, m as u64) as usize].re += 1.0;
    }
    FftPlanner::<f64>::new().plan_fft_inverse(m).process(&mut buf);
    buf
}

fn sample_count(b: &BoxSpec) -> Result<usize> {
    let g = Guards::current()?;
    let m = b
        .power_sum()
        .and_then(|ps| ps.checked_add(b.n()))
        .and_then(|v| v.checked_add(1))
        .ok_or(Error::Overflow("sum of P_j^k + N + 1"))?;
    Guards::check("circle samples", m, g.samples)?;
    Ok(m as usize)
}

/// Mean of `∏_j f_{P_j}(α) e(−Nα)` over `M = Σ P_j^k + N + 1` equispaced
/// `α`. The integrand is a trigonometric polynomial of degree below `M`, so
/// the mean is `Root` up to rounding.
pub fn full_circle_integral(b: &BoxSpec) -> Result<ComplexValue> {
    let m = sample_count(b)?;
    let mut cache: BTreeMap<u64, Vec<Complex64>> = BTreeMap::new();
    for &p in b.sides() {
        cache.entry(p).or_insert_with(|| weyl_sums_equispaced(p, b.k(), m));
    }
    let mm = m as u128;
    let n_mod = b.n() % mm;
    let mut acc = ComplexAccumulator::new();
    for j in 0..m {
        let mut prod = Complex64::new(1.0, 0.0);
        for p in b.sides() {
            prod *= cache[p][j];
        }
        let r = (n_mod * j as u128) % mm;
        acc.add(prod * unit(-(r as f64) / m as f64));
    }
    Ok((acc.value() / m as f64).into())
}

/// Mean of `|f_X(α)|^{2m}` over `2mX^k + 1` equispaced points.
pub fn hua_moment_quadrature(k: u32, x: u64, m: u32) -> Result<f64> {
    let g = Guards::current()?;
    let pts = (x as u128)
        .checked_pow(k)
        .and_then(|v| v.checked_mul(2 * m as u128))
        .and_then(|v| v.checked_add(1))
        .ok_or(Error::Overflow("2m X^k + 1"))?;
    Guards::check("moment samples", pts, g.samples)?;
    let f = weyl_sums_equispaced(x, k, pts as usize);
    let mut acc = crate::numeric::DoubleDouble::new();
    for z in &f {
        acc.add(z.norm_sqr().powi(m as i32));
    }
    Ok(acc.value() / pts as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorArcIntegral {
    /// `∫_M ∏ f_j(α) e(−Nα) dα`.
    pub f_product: ComplexValue,
    /// `∫_M ∏ V_j(α) e(−Nα) dα`.
    pub v_product: ComplexValue,
    pub difference: ComplexValue,
    pub arcs: usize,
    pub measure: f64,
}

/// Initial panels for an integrand of frequency up to `freq` on an interval of length `len`.
fn panels_for(len: f64, freq: f64) -> usize {
    (len * freq).ceil().max(1.0) as usize + 1
}

fn frequency(b: &BoxSpec) -> Result<f64> {
    let ps = b.power_sum().ok_or(Error::Overflow("sum of P_j^k"))?;
    Ok(ps as f64 + b.n() as f64)
}

/// `e(−N(a/q + β))` with the rational part reduced exactly.
fn twist(n: u128, a: u64, q: u64, beta: f64) -> Complex64 {
    let r = ((n % q as u128) * a as u128 % q as u128) as u64;
    let t = Fixed128::from_ratio(r, q).wrapping_add(Fixed128::from_f64(beta).mul_int(n));
    unit(-t.to_signed_f64())
}

/// Both major-arc integrals, by adaptive quadrature in `β` over each arc.
pub fn major_arc_integral(b: &BoxSpec, d: &Dissection, abs_tol: f64) -> Result<MajorArcIntegral> {
    if !d.disjoint {
        return Err(Error::invalid("major arcs overlap; the dissection is not valid for this X"));
    }
    if d.k != b.k() {
        return Err(Error::invalid("dissection built for another k"));
    }
    let k = b.k();
    let w = d.half_width;
    let freq = frequency(b)?;
    let per_arc_tol = abs_tol / d.arcs.len() as f64;
    let mut f_acc = ComplexAccumulator::new();
    let mut v_acc = ComplexAccumulator::new();
    for arc in &d.arcs {
        let f_integrand = |beta: f64| {
            let p = PhasePoint::rational_plus(arc.a, arc.q, beta).expect("valid arc");
            let mut prod = twist(b.n(), arc.a, arc.q, beta);
            for &side in b.sides() {
                prod *= eval_f(side, &p, k).to_complex();
            }
            prod
        };
        let s_over_q = eval_S(arc.q, arc.a, k)?.to_complex() / arc.q as f64;
        let v_integrand = |beta: f64| {
            let mut prod = twist(b.n(), arc.a, arc.q, beta);
            for &side in b.sides() {
                let v = eval_v(side as f64, beta, k).expect("finite beta").to_complex();
                prod *= s_over_q * v;
            }
            prod
        };
        let panels = panels_for(2.0 * w, freq);
        f_acc.add(integrate(&f_integrand, -w, w, panels, per_arc_tol, DEFAULT_MAX_DEPTH)?.value);
        v_acc.add(integrate(&v_integrand, -w, w, panels, per_arc_tol, DEFAULT_MAX_DEPTH)?.value);
    }
    let f = f_acc.value();
    let v = v_acc.value();
    Ok(MajorArcIntegral {
        f_product: f.into(),
        v_product: v.into(),
        difference: (f - v).into(),
        arcs: d.arcs.len(),
        measure: d.total_measure,
    })
}

/// `∫_m ∏ f_j(α) e(−Nα) dα` by direct quadrature over the gaps between arcs.
pub fn minor_arc_integral(b: &BoxSpec, d: &Dissection, abs_tol: f64) -> Result<ComplexValue> {
    if !d.disjoint {
        return Err(Error::invalid("major arcs overlap; the dissection is not valid for this X"));
    }
    let k = b.k();
    let w = d.half_width;
    let freq = frequency(b)?;
    let integrand = |alpha: f64| {
        let p = PhasePoint::from_f64(alpha);
        let mut prod = unit(-Fixed128::from_f64(alpha).mul_int(b.n()).to_signed_f64());
        for &side in b.sides() {
            prod *= eval_f(side, &p, k).to_complex();
        }
        prod
    };
    let mut centres = vec![0.0];
    centres.extend(d.arcs.iter().map(|a| a.center.to_f64()));
    let gaps: Vec<(f64, f64)> = centres.windows(2).map(|c| (c[0] + w, c[1] - w)).collect();
    let total: f64 = gaps.iter().map(|g| g.1 - g.0).sum();
    let mut acc = ComplexAccumulator::new();
    for (lo, hi) in gaps {
        let tol = abs_tol * (hi - lo) / total;
        acc.add(integrate(&integrand, lo, hi, panels_for(hi - lo, freq), tol, DEFAULT_MAX_DEPTH)?.value);
    }
    Ok(acc.value().into())
}

/// The full-circle identity and its major/minor decomposition for one box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleCheck {
    pub boxspec: BoxSpec,
    #[serde(with = "crate::arith::big_count")]
    pub root: num_bigint::BigUint,
    pub full_circle: ComplexValue,
    pub full_circle_error: f64,
    pub major: Option<MajorArcIntegral>,
    pub minor: Option<ComplexValue>,
    /// `|major + minor − Root|`.
    pub decomposition_error: Option<f64>,
}

/// Runs the full-circle identity, and the arc decomposition with
/// `X = P_s` when `with_arcs` is set.
pub fn circle_check(b: &BoxSpec, with_arcs: bool, abs_tol: f64) -> Result<CircleCheck> {
    let root = crate::counting::root_count(b)?.count;
    let root_f: f64 = num_traits::ToPrimitive::to_f64(&root).unwrap_or(f64::INFINITY);
    let full = full_circle_integral(b)?;
    let (major, minor, decomposition_error) = if with_arcs {
        let d = super::dissection::dissect(b.x().max(2), b.k())?;
        let major = major_arc_integral(b, &d, abs_tol)?;
        let minor = minor_arc_integral(b, &d, abs_tol)?;
        let err = (major.f_product.to_complex() + minor.to_complex() - root_f).norm();
        (Some(major), Some(minor), Some(err))
    } else {
        (None, None, None)
    };
    Ok(CircleCheck {
        boxspec: b.clone(),
        full_circle_error: (full.to_complex() - root_f).norm(),
        root,
        full_circle: full,
        major,
        minor,
        decomposition_error,
    })
}
