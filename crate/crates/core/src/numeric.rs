//! Floating-point support: a double-double accumulator and least-squares slopes.

use num_complex::Complex64;

/// Running sum kept as an unevaluated pair `hi + lo` (about 106 bits).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

impl DoubleDouble {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        let lo = self.lo + e;
        let (hi, lo) = two_sum(s, lo);
        self.hi = hi;
        self.lo = lo;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }

    pub fn parts(&self) -> (f64, f64) {
        (self.hi, self.lo)
    }
}

/// Complex accumulator with double-double real and imaginary parts.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexAccumulator {
    re: DoubleDouble,
    im: DoubleDouble,
}

impl ComplexAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// `e(t) = exp(2πit)`.
#[inline]
pub fn unit(t: f64) -> Complex64 {
    let (s, c) = (std::f64::consts::TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// Ordinary least-squares slope of `ys` against `xs`.
///
/// Returns `None` for fewer than two points or a degenerate abscissa.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    ls_slope(&xs, &ys)
}
