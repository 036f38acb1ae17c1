//! Major arcs around rationals of small denominator and the classification
//! of frequencies into major and minor arcs.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, integer_root, totient};
use crate::error::{Error, Result};
use crate::expsums::{eval_S, eval_v, ComplexValue};
use crate::phase::{Fixed128, PhasePoint};
use crate::rational::Rational;

/// `{α : ‖α − a/q‖ ≤ X^{1/6−k}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub q: u64,
    pub a: u64,
    pub center: Rational,
    pub half_width: f64,
    #[serde(rename = "X")]
    pub x: u64,
    pub k: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dissection {
    #[serde(rename = "X")]
    pub x: u64,
    pub k: u32,
    /// `X^{1/6}`.
    #[serde(rename = "Q")]
    pub q_real: f64,
    /// `⌊X^{1/6}⌋`.
    pub q_max: u64,
    pub half_width: f64,
    pub arcs: Vec<Arc>,
    /// Lebesgue measure of the union of the arcs.
    pub total_measure: f64,
    /// Exact pairwise disjointness of the arcs on `R/Z`.
    pub disjoint: bool,
    /// `2X^{1/6−k} < X^{−1/3}`, the sufficient condition for disjointness.
    pub separation_condition: bool,
    /// Smallest gap between neighbouring centres, divided by `2·half_width`.
    pub min_gap_ratio: f64,
}

/// `X^{1/6 − k}`, exact when `X` is a sixth power.
pub fn arc_half_width(x: u64, k: u32) -> f64 {
    let root = integer_root(x as u128, 6);
    let sixth = if root.pow(6) == x as u128 {
        root as f64
    } else {
        (x as f64).powf(1.0 / 6.0)
    };
    sixth / (x as f64).powi(k as i32)
}

/// `n/(q q′) > 2 X^{1/6−k}`, i.e. `n^6 X^{6k−1} > 64 (q q′)^6`.
fn centres_separated(n: u64, qq: u128, x: u64, k: u32) -> bool {
    let lhs = BigUint::from(n).pow(6) * BigUint::from(x).pow(6 * k - 1);
    let rhs = BigUint::from(qq).pow(6) * 64u32;
    lhs > rhs
}

pub fn dissect(x: u64, k: u32) -> Result<Dissection> {
    if x < 2 {
        return Err(Error::invalid(format!("X must be at least 2, got {x}")));
    }
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    let q_max = integer_root(x as u128, 6) as u64;
    let w = arc_half_width(x, k);
    let mut fracs: Vec<(u64, u64)> = Vec::new();
    for q in 1..=q_max {
        for a in 1..=q {
            if gcd(a, q) == 1 {
                fracs.push((a, q));
            }
        }
    }
    fracs.sort_by(|&(a, q), &(b, r)| (a as u128 * r as u128).cmp(&(b as u128 * q as u128)));
    debug_assert_eq!(fracs.len() as u64, (1..=q_max).map(totient).sum::<u64>());

    // Neighbouring centres on the circle: 0/1 (= 1/1), the sorted interior
    // fractions, then 1/1.
    let mut ring = vec![(0u64, 1u64)];
    ring.extend(fracs.iter().copied());
    let mut disjoint = true;
    let mut min_gap = f64::INFINITY;
    let mut measure = 0.0;
    for pair in ring.windows(2) {
        let ((a, q), (b, r)) = (pair[0], pair[1]);
        let n = b * q - a * r;
        let qq = q as u128 * r as u128;
        disjoint &= centres_separated(n, qq, x, k);
        let gap = n as f64 / qq as f64;
        min_gap = min_gap.min(gap);
        measure += gap.min(2.0 * w);
    }
    let separation_condition = BigUint::from(x).pow(2 * k - 1) > BigUint::from(4u32);
    let arcs = fracs
        .into_iter()
        .map(|(a, q)| Arc {
            q,
            a,
            center: Rational::new(a as i64, q as i64),
            half_width: w,
            x,
            k,
        })
        .collect();
    Ok(Dissection {
        x,
        k,
        q_real: (x as f64).powf(1.0 / 6.0),
        q_max,
        half_width: w,
        arcs,
        total_measure: measure,
        disjoint,
        separation_condition,
        min_gap_ratio: min_gap / (2.0 * w),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Classification {
    Major { arc: Arc },
    Minor {
        #[serde(with = "crate::arith::wide_count")]
        q_best: u128,
    },
}

/// `⌊α q⌉` for `α = t/2^128`.
fn nearest_numerator(alpha: Fixed128, q: u64) -> u64 {
    let prod = BigUint::from(alpha.0) * BigUint::from(q);
    let half = BigUint::from(1u8) << 127u32;
    ((prod + half) >> 128u32).to_u64().expect("at most q")
}

/// Major if some arc contains `α`; otherwise the least `q` with
/// `‖qα‖ ≤ X^{1/6−k}`, which is a continued-fraction convergent denominator
/// of `α` and exceeds `⌊X^{1/6}⌋`.
pub fn classify_alpha(alpha: &PhasePoint, d: &Dissection) -> Classification {
    let w = d.half_width;
    let t = alpha.alpha;
    for q in 1..=d.q_max {
        let dist = t.mul_int(q as u128).dist_to_int();
        if dist > w * q as f64 {
            continue;
        }
        let a = nearest_numerator(t, q) % q;
        let a = if a == 0 { q } else { a };
        if gcd(a, q) != 1 {
            continue;
        }
        let idx = d.arcs.iter().position(|arc| arc.q == q && arc.a == a).expect("arc listed");
        return Classification::Major {
            arc: d.arcs[idx].clone(),
        };
    }
    let q_best = least_dirichlet_denominator(t, w);
    assert!(q_best > d.q_max as u128, "minor point with q_best={q_best} <= Q");
    Classification::Minor { q_best }
}

/// First convergent denominator `q` of `α` with `‖qα‖ ≤ w`.
pub fn least_dirichlet_denominator(t: Fixed128, w: f64) -> u128 {
    if t.0 == 0 {
        return 1;
    }
    let mut num = BigUint::from(t.0);
    let mut den = BigUint::from(1u8) << 128u32;
    // α = num/den < 1, so the first partial quotient is 0 and q_0 = 1.
    let (mut q_prev, mut q) = (BigUint::zero(), BigUint::from(1u8));
    loop {
        let qq = q.to_u128().unwrap_or(u128::MAX);
        if t.mul_int(qq).dist_to_int() <= w {
            return qq;
        }
        // next partial quotient of num/den after the current one
        let (a, rem) = (&den / &num, &den % &num);
        den = num;
        num = rem;
        let next = a * &q + &q_prev;
        q_prev = std::mem::replace(&mut q, next);
        if num.is_zero() {
            return q.to_u128().unwrap_or(u128::MAX);
        }
    }
}

/// `V(α) = q^{−1} S(q, a) v_Y(β)` on the arc.
#[allow(non_snake_case)]
pub fn major_approx_V(y: u64, arc: &Arc, beta: f64, k: u32) -> Result<ComplexValue> {
    if beta.abs() > arc.half_width {
        return Err(Error::invalid(format!(
            "|beta| = {} exceeds the arc half-width {}",
            beta.abs(),
            arc.half_width
        )));
    }
    let s = eval_S(arc.q, arc.a, k)?.to_complex();
    let v = eval_v(y as f64, beta, k)?.to_complex();
    Ok((s * v / arc.q as f64).into())
}
