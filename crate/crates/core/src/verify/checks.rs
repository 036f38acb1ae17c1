//! Measured constants of the arc estimates, the unbalanced bound and the
//! dichotomy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{classify_alpha, dissect, major_approx_V, Classification};
use crate::counting::{for_each_box_solution, root_count};
use crate::error::{Error, Result};
use crate::expsums::{eval_f, weyl_rhs};
use crate::model::{
    classify_box, compute_thresholds, is_unbalanced, min_side_dominates, truncate_box, BoxSpec, Dichotomy,
    Thresholds,
};
use crate::numeric::loglog_slope;
use crate::phase::{Fixed128, PhasePoint};

use super::config::SweepConfig;
use super::sweep::{big_to_f64, generate_instances};

/// Largest log-log slope accepted as a flat trend.
pub const SLOPE_TOL: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawPoint {
    #[serde(rename = "X")]
    pub x: u64,
    pub samples: usize,
    /// The raw maximum before normalisation.
    pub max_value: f64,
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawSummary {
    pub law: String,
    pub k: u32,
    pub points: Vec<LawPoint>,
    pub slope: Option<f64>,
    pub all_finite: bool,
    /// Finite constants and a slope of at most [`SLOPE_TOL`].
    pub trend_ok: bool,
}

impl LawSummary {
    fn new(law: &str, k: u32, points: Vec<LawPoint>) -> Self {
        let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.x as f64, p.constant)).collect();
        let all_finite = points.iter().all(|p| p.constant.is_finite());
        let slope = if all_finite && points.iter().all(|p| p.constant > 0.0) {
            loglog_slope(&pts)
        } else {
            None
        };
        LawSummary {
            law: law.into(),
            k,
            trend_ok: all_finite && slope.is_some_and(|s| s <= SLOPE_TOL),
            points,
            slope,
            all_finite,
        }
    }

    pub fn max_constant(&self) -> Option<f64> {
        self.points.iter().map(|p| p.constant).reduce(f64::max)
    }
}

/// Independent stream per `(seed, X, tag)`.
fn rng_for(seed: u64, x: u64, tag: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(x.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tag);
    r
}

fn check_arc_degree(k: u32) -> Result<()> {
    if !(2..=4).contains(&k) {
        return Err(Error::invalid(format!("arc checks need k in 2..=4, got {k}")));
    }
    Ok(())
}

/// `C_maj(X) = max |f_Y(a/q+β) − q^{−1}S(q,a)v_Y(β)| · X^{−1/3}` over sampled
/// arcs, `|β| ≤ X^{1/6−k}` and `Y ≤ X`.
///
/// Half of the samples take `Y = X`, the rest `Y` uniform in `[1, X]`.
pub fn check_major_approx(cfg: &SweepConfig) -> Result<LawSummary> {
    cfg.validate()?;
    check_arc_degree(cfg.k)?;
    let k = cfg.k;
    let mut points = Vec::with_capacity(cfg.x_grid.len());
    for &x in &cfg.x_grid {
        let d = dissect(x, k)?;
        let mut rng = rng_for(cfg.seed, x, 1);
        let draws: Vec<(usize, f64, u64)> = (0..cfg.samples)
            .map(|i| {
                let arc = rng.gen_range(0..d.arcs.len());
                let beta = d.half_width * rng.gen_range(-1.0..=1.0);
                let y = if i % 2 == 0 { x } else { rng.gen_range(1..=x) };
                (arc, beta, y)
            })
            .collect();
        let errs: Vec<f64> = draws
            .par_iter()
            .map(|&(i, beta, y)| -> Result<f64> {
                let arc = &d.arcs[i];
                let alpha = PhasePoint::rational_plus(arc.a, arc.q, beta)?;
                let f = eval_f(y, &alpha, k).to_complex();
                let v = major_approx_V(y, arc, beta, k)?.to_complex();
                Ok((f - v).norm())
            })
            .collect::<Result<_>>()?;
        let max_value = errs.iter().copied().fold(0.0, f64::max);
        points.push(LawPoint {
            x,
            samples: errs.len(),
            max_value,
            constant: max_value / (x as f64).cbrt(),
        });
    }
    Ok(LawSummary::new("major-approx", k, points))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorSupSummary {
    pub sup: LawSummary,
    /// `max |f_X| / weyl_rhs(X, q_best)` per `X`.
    pub weyl: LawSummary,
    /// Largest `|f_X(α)| / X` seen; below 1 on the minor arcs.
    pub max_over_x: f64,
    /// Uniform draws rejected for landing on a major arc.
    pub rejected: usize,
}

/// `C_min(X) = max |f_X(α)| · X^{−(1−1/(12K))}` over `samples` minor-arc `α`,
/// drawn uniformly on `[0, 1)` and rejected when major.
pub fn check_minor_sup(cfg: &SweepConfig) -> Result<MinorSupSummary> {
    cfg.validate()?;
    check_arc_degree(cfg.k)?;
    let k = cfg.k;
    let big_k = (1u64 << (k - 1)) as f64;
    let exponent = 1.0 - 1.0 / (12.0 * big_k);
    let (mut sup, mut weyl) = (Vec::new(), Vec::new());
    let mut max_over_x: f64 = 0.0;
    let mut rejected = 0;
    for &x in &cfg.x_grid {
        let d = dissect(x, k)?;
        let mut rng = rng_for(cfg.seed, x, 2);
        let mut draws = Vec::with_capacity(cfg.samples);
        while draws.len() < cfg.samples {
            let alpha = PhasePoint::from_fixed(Fixed128(rng.gen()));
            match classify_alpha(&alpha, &d) {
                Classification::Minor { q_best } => draws.push((alpha, q_best)),
                Classification::Major { .. } => rejected += 1,
            }
        }
        let vals: Vec<(f64, f64)> = draws
            .par_iter()
            .map(|(alpha, q_best)| {
                let f = eval_f(x, alpha, k).abs;
                let q = u64::try_from(*q_best).unwrap_or(u64::MAX);
                (f, f / weyl_rhs(x, q, k, 0.1))
            })
            .collect();
        let max_f = vals.iter().map(|v| v.0).fold(0.0, f64::max);
        let max_w = vals.iter().map(|v| v.1).fold(0.0, f64::max);
        max_over_x = max_over_x.max(max_f / x as f64);
        sup.push(LawPoint {
            x,
            samples: vals.len(),
            max_value: max_f,
            constant: max_f / (x as f64).powf(exponent),
        });
        weyl.push(LawPoint {
            x,
            samples: vals.len(),
            max_value: max_f,
            constant: max_w,
        });
    }
    Ok(MinorSupSummary {
        sup: LawSummary::new("minor-sup", k, sup),
        weyl: LawSummary::new("weyl-pointwise", k, weyl),
        max_over_x,
        rejected,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnbalancedBucket {
    /// `⌊log_2 P⌋`.
    pub bucket: u64,
    pub count: usize,
    /// `max Root / P^{1−k/s−δ_1}`.
    pub max_constant: f64,
    /// `max count_{x_1} / (T^{1−k/(s−1)} N^ε)` over the fixed-`x_1` slices.
    pub max_inner_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnbalancedSummary {
    pub k: u32,
    pub s: u32,
    pub eps: f64,
    pub instances: usize,
    pub unbalanced: usize,
    pub skipped: usize,
    pub buckets: Vec<UnbalancedBucket>,
    pub slope: Option<f64>,
    pub inner_slope: Option<f64>,
    pub max_constant: Option<f64>,
    pub max_inner_constant: Option<f64>,
    /// Solutions whose weight `(x_2⋯x_s)^{−1+k/(s−1)}` was compared with
    /// `T^{−1+k/(s−1)}`.
    pub weights_checked: u64,
    pub weight_violations: u64,
}

/// One unbalanced box: `(Root / P^{1−k/s−δ_1}, max inner constant, weights
/// checked, weight violations)`.
pub fn unbalanced_instance(
    b: &BoxSpec,
    t: &Thresholds,
    eps: f64,
    weight_check: bool,
) -> Result<(f64, f64, u64, u64)> {
    let b = truncate_box(b);
    let (k, s) = (b.k(), b.s());
    if s < 2 {
        return Err(Error::invalid("need at least two variables"));
    }
    let d1 = t
        .delta_1
        .ok_or_else(|| Error::invalid("delta_1 undefined for these thresholds"))?
        .to_f64();
    let p = big_to_f64(&b.p());
    let root = big_to_f64(&root_count(&b)?.count);
    let constant = root / p.powf(1.0 - k as f64 / s as f64 - d1);

    let inner_exp = 1.0 - k as f64 / (s - 1) as f64;
    let t_big = b.t();
    let t_f = big_to_f64(&t_big);
    let scale = t_f.powf(inner_exp) * (b.n() as f64).powf(eps);
    let rest = &b.sides()[1..];
    let mut inner: f64 = 0.0;
    for x1 in 1..=b.sides()[0] {
        let xk = (x1 as u128).pow(k);
        if xk >= b.n() {
            break;
        }
        let slice = BoxSpec::new(k, rest.to_vec(), b.n() - xk)?;
        inner = inner.max(big_to_f64(&root_count(&slice)?.count) / scale);
    }

    let (mut checked, mut violations) = (0u64, 0u64);
    if weight_check && s - 1 > k as usize {
        let floor = t_f.powf(-inner_exp);
        for_each_box_solution(&b, |x| {
            let prod: f64 = x[1..].iter().map(|&v| v as f64).product();
            checked += 1;
            if prod.powf(-inner_exp) < floor * (1.0 - 1e-12) {
                violations += 1;
            }
        })?;
    }
    Ok((constant, inner, checked, violations))
}

/// Bucketed constants of the unbalanced bound over the unbalanced members of
/// the configured instance stream.
///
/// Per-solution weights are checked on boxes with at most `weight_limit`
/// tuples.
pub fn check_unbalanced(cfg: &SweepConfig, t: &Thresholds, weight_limit: u128) -> Result<UnbalancedSummary> {
    if t.k != cfg.k || t.s != cfg.s {
        return Err(Error::invalid("thresholds computed for another (k, s)"));
    }
    let boxes: Vec<BoxSpec> = generate_instances(cfg)?
        .into_iter()
        .map(|b| truncate_box(&b))
        .filter(|b| is_unbalanced(b, t))
        .collect();
    let results: Vec<Option<(u64, (f64, f64, u64, u64))>> = boxes
        .par_iter()
        .map(|b| {
            let volume: u128 = b.sides().iter().map(|&p| p as u128).product();
            let bucket = b.p().bits().saturating_sub(1);
            unbalanced_instance(b, t, cfg.eps, volume <= weight_limit)
                .ok()
                .map(|r| (bucket, r))
        })
        .collect();
    let mut map: std::collections::BTreeMap<u64, UnbalancedBucket> = Default::default();
    let (mut skipped, mut checked, mut violations) = (0, 0, 0);
    for r in &results {
        let Some((bucket, (c, inner, ch, vi))) = *r else {
            skipped += 1;
            continue;
        };
        checked += ch;
        violations += vi;
        let e = map.entry(bucket).or_insert(UnbalancedBucket {
            bucket,
            count: 0,
            max_constant: 0.0,
            max_inner_constant: 0.0,
        });
        e.count += 1;
        e.max_constant = e.max_constant.max(c);
        e.max_inner_constant = e.max_inner_constant.max(inner);
    }
    let buckets: Vec<UnbalancedBucket> = map.into_values().collect();
    let slope_of = |f: fn(&UnbalancedBucket) -> f64| {
        let pts: Vec<(f64, f64)> = buckets
            .iter()
            .filter(|b| f(b) > 0.0)
            .map(|b| (2f64.powf(b.bucket as f64 + 0.5), f(b)))
            .collect();
        loglog_slope(&pts)
    };
    Ok(UnbalancedSummary {
        k: cfg.k,
        s: cfg.s,
        eps: cfg.eps,
        instances: cfg.instances,
        unbalanced: boxes.len(),
        skipped,
        slope: slope_of(|b| b.max_constant),
        inner_slope: slope_of(|b| b.max_inner_constant),
        max_constant: buckets.iter().map(|b| b.max_constant).reduce(f64::max),
        max_inner_constant: buckets.iter().map(|b| b.max_inner_constant).reduce(f64::max),
        buckets,
        weights_checked: checked,
        weight_violations: violations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomySummary {
    pub k: u32,
    pub s: u32,
    pub boxes: usize,
    pub balanced: usize,
    pub unbalanced: usize,
    /// Balanced boxes with `P_1 < X^{1−λ}`.
    pub exceptions: usize,
}

/// Boxes for the dichotomy check: half from the log-uniform stream, half
/// with nearly equal sides around a log-uniform base.
pub fn dichotomy_boxes(cfg: &SweepConfig, count: usize) -> Result<Vec<BoxSpec>> {
    let half = count / 2;
    let mut boxes = generate_instances(&SweepConfig {
        instances: count - half,
        ..cfg.clone()
    })?;
    let mut rng = rng_for(cfg.seed, 0, 3);
    let (lo, hi) = ((cfg.side_min as f64).ln(), ((cfg.side_max + 1) as f64).ln());
    for _ in 0..half {
        let u: f64 = rng.gen();
        let base = ((lo + u * (hi - lo)).exp().floor() as u64).clamp(cfg.side_min, cfg.side_max);
        let spread = (base / 8).max(1);
        let sides: Vec<u64> = (0..cfg.s)
            .map(|_| {
                let j = rng.gen_range(0..=2 * spread) as i64 - spread as i64;
                (base as i64 + j).clamp(cfg.side_min as i64, cfg.side_max as i64) as u64
            })
            .collect();
        let n = rng.gen_range(cfg.s as u128..=cfg.n_max.max(cfg.s as u64) as u128);
        boxes.push(BoxSpec::new(cfg.k, sides, n)?);
    }
    Ok(boxes)
}

/// Classifies every box in exact arithmetic and counts balanced boxes that
/// violate `P_1 ≥ X^{1−λ}`.
pub fn check_dichotomy(cfg: &SweepConfig, count: usize) -> Result<DichotomySummary> {
    let t = compute_thresholds(cfg.k, cfg.s)?;
    let boxes = dichotomy_boxes(cfg, count)?;
    let flags: Vec<(bool, bool)> = boxes
        .par_iter()
        .map(|b| {
            let b = truncate_box(b);
            let unb = is_unbalanced(&b, &t);
            let exception = !unb && !min_side_dominates(&b, &t);
            if !exception {
                let want = if unb { Dichotomy::Unbalanced } else { Dichotomy::Balanced };
                assert_eq!(classify_box(&b, &t), want);
            }
            (unb, exception)
        })
        .collect();
    let unbalanced = flags.iter().filter(|f| f.0).count();
    Ok(DichotomySummary {
        k: cfg.k,
        s: cfg.s,
        boxes: boxes.len(),
        balanced: boxes.len() - unbalanced,
        unbalanced,
        exceptions: flags.iter().filter(|f| f.1).count(),
    })
}
