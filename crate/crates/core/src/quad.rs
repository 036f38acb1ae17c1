#![allow(clippy::excessive_precision)]

//! Adaptive Gauss–Kronrod (7/15) quadrature for complex-valued integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::ComplexAccumulator;

// Kronrod abscissae on [-1, 1], positive half, descending; index 7 is the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub const DEFAULT_MAX_DEPTH: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: u64,
}

/// One G7/K15 panel: (Kronrod estimate, |Kronrod − Gauss|).
pub fn gk15<F>(f: &F, a: f64, b: f64) -> (Complex64, f64)
where
    F: Fn(f64) -> Complex64,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += pair * WGK[i];
        if i % 2 == 1 {
            gauss += pair * WG[i / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    (kronrod, (kronrod - gauss).norm())
}

/// Adaptive bisection on `[a, b]`, starting from `panels` equal panels.
///
/// A panel is accepted once its error estimate is below its share of
/// `abs_tol` (proportional to its length). Bisection stops with an error
/// when a panel would be split beyond `max_depth` levels.
pub fn integrate<F>(f: &F, a: f64, b: f64, panels: usize, abs_tol: f64, max_depth: u32) -> Result<QuadResult>
where
    F: Fn(f64) -> Complex64,
{
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let breaks: Vec<f64> = (0..=panels)
        .map(|i| if i == panels { b } else { a + width * i as f64 })
        .collect();
    integrate_partition(f, &breaks, abs_tol, max_depth)
}

/// Adaptive bisection over the panels `breaks[i]..breaks[i+1]`.
pub fn integrate_partition<F>(f: &F, breaks: &[f64], abs_tol: f64, max_depth: u32) -> Result<QuadResult>
where
    F: Fn(f64) -> Complex64,
{
    let mut out = QuadResult {
        value: Complex64::new(0.0, 0.0),
        error: 0.0,
        evaluations: 0,
    };
    if breaks.len() < 2 || breaks[0] == breaks[breaks.len() - 1] {
        return Ok(out);
    }
    let total_len = (breaks[breaks.len() - 1] - breaks[0]).abs();
    let mut acc = ComplexAccumulator::new();
    let mut stack: Vec<(f64, f64, u32)> = Vec::new();
    for w in breaks.windows(2).rev() {
        stack.push((w[0], w[1], 0));
    }
    while let Some((lo, hi, depth)) = stack.pop() {
        let (est, err) = gk15(f, lo, hi);
        out.evaluations += 15;
        let budget = abs_tol * (hi - lo).abs() / total_len;
        let unresolvable = (hi - lo).abs() <= 1e-12 * lo.abs().max(hi.abs());
        if err <= budget || err <= 1e-15 * est.norm() || unresolvable {
            acc.add(est);
            out.error += err;
            continue;
        }
        if depth >= max_depth {
            return Err(Error::Quadrature(format!(
                "panel [{lo:e}, {hi:e}] still has error {err:e} > {budget:e} at depth {depth}"
            )));
        }
        let mid = 0.5 * (lo + hi);
        stack.push((mid, hi, depth + 1));
        stack.push((lo, mid, depth + 1));
    }
    out.value = acc.value();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::unit;

    #[test]
    fn kronrod_exact_for_degree_22() {
        for deg in 0..=22 {
            let f = |x: f64| Complex64::new(x.powi(deg), 0.0);
            let (k, _) = gk15(&f, 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((k.re - exact).abs() < 1e-14, "degree {deg}: {} vs {exact}", k.re);
        }
    }

    #[test]
    fn gauss_part_exact_for_degree_13() {
        for deg in 0..=13 {
            let f = |x: f64| Complex64::new(x.powi(deg), 0.0);
            let (_, err) = gk15(&f, -1.0, 1.0);
            assert!(err < 1e-14, "degree {deg}: err {err}");
        }
    }

    #[test]
    fn oscillatory_integral() {
        // ∫_0^1 e(20.5 x) dx = (e(20.5) − 1)/(2πi·20.5) = −2/(2πi·20.5)
        let f = |x: f64| unit(20.5 * x);
        let r = integrate(&f, 0.0, 1.0, 4, 1e-13, DEFAULT_MAX_DEPTH).unwrap();
        let exact = Complex64::new(0.0, 2.0 / (std::f64::consts::TAU * 20.5));
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn peaked_integrand_refines() {
        // ∫_{-1}^{1} 1/(1 + 10⁴x²) dx = 2·atan(100)/100
        let f = |x: f64| Complex64::new(1.0 / (1.0 + 1e4 * x * x), 0.0);
        let r = integrate(&f, -1.0, 1.0, 1, 1e-12, DEFAULT_MAX_DEPTH).unwrap();
        assert!((r.value.re - 0.02 * 100f64.atan()).abs() < 1e-11);
    }

    #[test]
    fn depth_limit_reports_failure() {
        let f = |x: f64| Complex64::new(if x < 0.3 { 0.0 } else { 1.0 }, 0.0);
        assert!(integrate(&f, 0.0, 1.0, 1, 1e-30, 5).is_err());
    }
}
