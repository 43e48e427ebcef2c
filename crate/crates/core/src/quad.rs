//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult { value: 0.0, error: 0.0, converged: true }
    }

    pub fn merge(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            error: self.error + other.error,
            converged: self.converged && other.converged,
        }
    }

    pub fn scale(self, c: f64) -> QuadResult {
        QuadResult { value: c * self.value, error: c.abs() * self.error, converged: self.converged }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-12, rel: 1e-12, max_intervals: 2000 }
    }
}

impl Tolerance {
    pub fn abs(abs: f64) -> Self {
        Tolerance { abs, rel: 0.0, ..Default::default() }
    }
}

/// One 15-point Kronrod evaluation; returns (kronrod, |kronrod − gauss|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive bisection: the segment with the largest error estimate is split
/// until the summed estimate falls below `max(tol.abs, tol.rel·|value|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    if a == b {
        return QuadResult::zero();
    }
    if b < a {
        return integrate(f, b, a, tol).scale(-1.0);
    }
    let (value, error) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut count = 1;
    loop {
        let target = tol.abs.max(tol.rel * total.abs());
        if total_err <= target {
            return QuadResult { value: total, error: total_err, converged: true };
        }
        if count >= tol.max_intervals {
            break;
        }
        let seg = heap.pop().expect("heap never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval cannot be split further in floating point.
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
        count += 1;
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    let target = tol.abs.max(tol.rel * value.abs());
    QuadResult { value, error, converged: error <= target }
}

/// Integral over [a, ∞) through the map x ↦ a + x/(1−x).
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> QuadResult {
    integrate(
        |x| {
            let one_minus = 1.0 - x;
            let w = a + x / one_minus;
            f(w) / (one_minus * one_minus)
        },
        0.0,
        1.0,
        tol,
    )
}
