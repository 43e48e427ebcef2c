//! Translation-invariant kernels `B` and the inner products `∫∫ f(s) g(t) B(s−t) ds dt`
//! they induce on step functions.
//!
//! The Tsirelson kernel follows `1/(|t| lnᵅ(1/|t|))` on `|t| ≤ eps` and continues as
//! `B(eps)·e^{−κ(|t|−eps)}` with `κ = −B′(eps)/B(eps)`, so value and slope match and the
//! whole profile is even, decreasing and convex on `(0,∞)`.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen_sorted, toeplitz};
use crate::quad::{integrate, integrate_to_infinity, QuadResult, Tolerance};
use crate::table::fmt_f64;

pub const CELL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum Kernel {
    /// Plain `L²`: `⟨f, g⟩ = ∫ f g`. There is no pointwise kernel.
    StandardL2,
    Tsirelson { alpha: f64, eps: f64, decay_rate: f64 },
}

impl Kernel {
    /// Tsirelson kernel with the default `eps = e^{−(α+1)}`.
    pub fn tsirelson(alpha: f64) -> Result<Kernel> {
        Kernel::tsirelson_with_eps(alpha, (-(alpha + 1.0)).exp())
    }

    pub fn tsirelson_with_eps(alpha: f64, eps: f64) -> Result<Kernel> {
        if !(alpha > 1.0 && alpha <= 4.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} outside (1, 4]; alpha <= 1 makes B non-integrable at 0"
            )));
        }
        if !(eps > 0.0 && eps < (-alpha).exp()) {
            return Err(Error::InvalidParameter(format!(
                "eps = {eps} outside (0, e^-alpha); B must be decreasing on (0, eps]"
            )));
        }
        let decay_rate = (1.0 - alpha / (1.0 / eps).ln()) / eps;
        Ok(Kernel::Tsirelson { alpha, eps, decay_rate })
    }

    pub fn describe(&self) -> String {
        match self {
            Kernel::StandardL2 => "kernel=StandardL2".to_string(),
            Kernel::Tsirelson { alpha, eps, decay_rate } => {
                format!("kernel=Tsirelson alpha={alpha} eps={} decay_rate={}", fmt_f64(*eps), fmt_f64(*decay_rate))
            }
        }
    }

    fn params(&self) -> Result<(f64, f64, f64)> {
        match *self {
            Kernel::Tsirelson { alpha, eps, decay_rate } => Ok((alpha, eps, decay_rate)),
            Kernel::StandardL2 => {
                Err(Error::InvalidParameter("the standard L2 product has no pointwise kernel".into()))
            }
        }
    }
}

/// `∫₀ᵗ 1/(u lnᵅ(1/u)) du = (ln 1/t)^{1−α}/(α−1)` for `0 < t < 1`.
pub fn singular_antiderivative(alpha: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (1.0 / t).ln().powf(1.0 - alpha) / (alpha - 1.0)
}

pub fn kernel_eval(k: &Kernel, t: f64) -> Result<f64> {
    let (alpha, eps, kappa) = k.params()?;
    if t == 0.0 {
        return Err(Error::InvalidParameter("B is singular at t = 0".into()));
    }
    Ok(eval_unchecked(alpha, eps, kappa, t.abs()))
}

fn singular(alpha: f64, t: f64) -> f64 {
    1.0 / (t * (1.0 / t).ln().powf(alpha))
}

fn eval_unchecked(alpha: f64, eps: f64, kappa: f64, t: f64) -> f64 {
    if t <= eps {
        singular(alpha, t)
    } else {
        singular(alpha, eps) * (-kappa * (t - eps)).exp()
    }
}

/// `F(t) = ∫₀ᵗ B` for `t ≥ 0`.
pub fn kernel_antiderivative(k: &Kernel, t: f64) -> Result<f64> {
    let (alpha, eps, kappa) = k.params()?;
    Ok(antiderivative(alpha, eps, kappa, t))
}

fn antiderivative(alpha: f64, eps: f64, kappa: f64, t: f64) -> f64 {
    if t <= eps {
        singular_antiderivative(alpha, t)
    } else {
        singular_antiderivative(alpha, eps) + singular(alpha, eps) * (1.0 - (-kappa * (t - eps)).exp()) / kappa
    }
}

/// `‖B‖₁ = 2(F(eps) + B(eps)/κ)`.
pub fn kernel_l1_norm(k: &Kernel) -> Result<f64> {
    let (alpha, eps, kappa) = k.params()?;
    Ok(2.0 * (singular_antiderivative(alpha, eps) + singular(alpha, eps) / kappa))
}

/// `∫ₐᵇ u B(u) du` for `0 ≤ a ≤ b`. Near the origin `uB(u) = ln^{−α}(1/u)` and the
/// substitution `u = e^{−w}` gives the smooth `∫ e^{−w} w^{−α} dw`.
fn first_moment(alpha: f64, eps: f64, kappa: f64, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    let mut out = QuadResult::zero();
    if a < eps {
        let hi = b.min(eps);
        let f = |w: f64| (-w).exp() * w.powf(-alpha);
        let w_lo = (1.0 / hi).ln();
        let q = if a == 0.0 { integrate_to_infinity(f, w_lo, tol) } else { integrate(f, w_lo, (1.0 / a).ln(), tol) };
        out = out.merge(q);
    }
    if b > eps {
        let lo = a.max(eps);
        let h = |u: f64| -(-kappa * (u - eps)).exp() * (u / kappa + 1.0 / (kappa * kappa));
        out.value += singular(alpha, eps) * (h(b) - h(lo));
    }
    out
}

/// `∫ₐᵇ (c₀ + c₁u) B(u) du` for `0 ≤ a ≤ b`.
#[allow(clippy::too_many_arguments)]
fn linear_moment(alpha: f64, eps: f64, kappa: f64, c0: f64, c1: f64, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    let zeroth = antiderivative(alpha, eps, kappa, b) - antiderivative(alpha, eps, kappa, a);
    let mut out = if c1 != 0.0 { first_moment(alpha, eps, kappa, a, b, tol).scale(c1) } else { QuadResult::zero() };
    out.value += c0 * zeroth;
    out
}

/// `∫_{l₁}^{r₁} ∫_{l₂}^{r₂} B(s − t) dt ds`.
///
/// Written as `∫ w(u) B(u) du` with the trapezoidal overlap weight
/// `w(u) = |[l₁,r₁] ∩ [l₂+u, r₂+u]|`, which is linear between its breakpoints, so every
/// piece reduces to the closed-form antiderivatives of `B` and `uB`.
pub fn kernel_cell_integral(k: &Kernel, cell_i: (f64, f64), cell_j: (f64, f64)) -> Result<QuadResult> {
    cell_integral_with_tol(k, cell_i, cell_j, Tolerance::abs(CELL_TOLERANCE))
}

pub fn cell_integral_with_tol(k: &Kernel, cell_i: (f64, f64), cell_j: (f64, f64), tol: Tolerance) -> Result<QuadResult> {
    let ((l1, r1), (l2, r2)) = (cell_i, cell_j);
    if !(l1 <= r1 && l2 <= r2 && l1.is_finite() && r1.is_finite() && l2.is_finite() && r2.is_finite()) {
        return Err(Error::InvalidParameter("cells must be finite intervals".into()));
    }
    let (alpha, eps, kappa) = match *k {
        Kernel::StandardL2 => {
            let overlap = (r1.min(r2) - l1.max(l2)).max(0.0);
            return Ok(QuadResult { value: overlap, error: 0.0, converged: true });
        }
        Kernel::Tsirelson { alpha, eps, decay_rate } => (alpha, eps, decay_rate),
    };
    let weight = |u: f64| (r1.min(r2 + u) - l1.max(l2 + u)).max(0.0);
    let (lo, hi) = (l1 - r2, r1 - l2);
    let mut points = vec![lo, hi, r1 - r2, l1 - l2];
    for p in [0.0, eps, -eps] {
        if p > lo && p < hi {
            points.push(p);
        }
    }
    points.sort_by(|a, b| a.total_cmp(b));
    points.dedup();
    let mut total = QuadResult::zero();
    for pair in points.windows(2) {
        let (p, q) = (pair[0], pair[1]);
        if q <= p {
            continue;
        }
        let (wp, wq) = (weight(p), weight(q));
        if wp == 0.0 && wq == 0.0 {
            continue;
        }
        // Reflect negative pieces using evenness of B.
        let (a, b, wa, wb) = if p >= 0.0 { (p, q, wp, wq) } else { (-q, -p, wq, wp) };
        let slope = (wb - wa) / (b - a);
        let c0 = wa - slope * a;
        total = total.merge(linear_moment(alpha, eps, kappa, c0, slope, a, b, tol));
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct KernelGram {
    pub kernel: Kernel,
    pub interval: (f64, f64),
    pub h: f64,
    /// Entry for cell offset `k`, so `matrix[(i, j)] = offsets[|i − j|]`.
    pub offsets: Vec<f64>,
    pub matrix: DMatrix<f64>,
    /// Accumulated quadrature error bound over the distinct entries.
    pub quad_error: f64,
}

impl KernelGram {
    pub fn cells(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = sym_eigen_sorted(&self.matrix);
        vals[vals.len() - 1]
    }

    /// Row-major CSV with the kernel parameters echoed as `#` comment lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", self.kernel.describe())?;
        writeln!(
            out,
            "# interval=({},{}) h={} cells={}",
            fmt_f64(self.interval.0),
            fmt_f64(self.interval.1),
            fmt_f64(self.h),
            self.cells()
        )?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for i in 0..self.cells() {
            w.write_record(self.matrix.row(i).iter().map(|&v| fmt_f64(v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Number of cells of width `h` in `interval`, if it tiles exactly.
pub fn cell_count(interval: (f64, f64), h: f64) -> Result<usize> {
    let span = interval.1 - interval.0;
    if !(h > 0.0 && span > 0.0) {
        return Err(Error::InvalidParameter(format!("bad grid: interval {interval:?}, h = {h}")));
    }
    let n = (span / h).round();
    if (n * h - span).abs() > 1e-9 * span.max(1.0) {
        return Err(Error::Misaligned(format!("interval length {span} is not a multiple of h = {h}")));
    }
    Ok(n as usize)
}

pub fn gram_matrix(k: &Kernel, interval: (f64, f64), h: f64) -> Result<KernelGram> {
    gram_matrix_with_tol(k, interval, h, CELL_TOLERANCE)
}

/// Toeplitz Gram of the cell indicators; each offset is integrated once.
pub fn gram_matrix_with_tol(k: &Kernel, interval: (f64, f64), h: f64, abs_tol: f64) -> Result<KernelGram> {
    let n = cell_count(interval, h)?;
    let entries: Vec<QuadResult> = (0..n)
        .into_par_iter()
        .map(|off| cell_integral_with_tol(k, (0.0, h), (off as f64 * h, (off + 1) as f64 * h), Tolerance::abs(abs_tol)))
        .collect::<Result<_>>()?;
    if let Some(bad) = entries.iter().find(|q| !q.converged) {
        return Err(Error::Quadrature { value: bad.value, error: bad.error });
    }
    let offsets: Vec<f64> = entries.iter().map(|q| q.value).collect();
    let quad_error = entries.iter().map(|q| q.error).sum();
    let matrix = toeplitz(&offsets, n);
    Ok(KernelGram { kernel: *k, interval, h, offsets, matrix, quad_error })
}

/// `B̂(n) = ∫_ℝ B(t) cos(nt) dt`.
///
/// On `[0, eps]` integration by parts gives `F(eps)cos(n·eps) + n∫₀^{eps} F(t) sin(nt) dt`,
/// integrated half-period by half-period; the tail is closed form.
pub fn fourier_coeff(k: &Kernel, n: i64) -> Result<QuadResult> {
    let (alpha, eps, kappa) = k.params()?;
    if n == 0 {
        return Ok(QuadResult { value: kernel_l1_norm(k)?, error: 0.0, converged: true });
    }
    let nf = n.unsigned_abs() as f64;
    let tol = Tolerance { abs: 1e-15, rel: 1e-12, max_intervals: 2000 };
    let f_eps = singular_antiderivative(alpha, eps);
    let half = std::f64::consts::PI / nf;
    let first_end = half.min(eps);
    let head = integrate_to_infinity(
        |w: f64| w.powf(1.0 - alpha) / (alpha - 1.0) * (nf * (-w).exp()).sin() * (-w).exp(),
        (1.0 / first_end).ln(),
        tol,
    );
    let mut by_parts = head;
    let mut a = first_end;
    while a < eps {
        let b = (a + half).min(eps);
        by_parts = by_parts.merge(integrate(|t| singular_antiderivative(alpha, t) * (nf * t).sin(), a, b, tol));
        a = b;
    }
    let near = by_parts.scale(nf);
    let tail = singular(alpha, eps) * (kappa * (nf * eps).cos() - nf * (nf * eps).sin()) / (kappa * kappa + nf * nf);
    let mut out = QuadResult { value: f_eps * (nf * eps).cos() + near.value + tail, ..near };
    out = out.scale(2.0);
    if !out.converged {
        return Err(Error::Quadrature { value: out.value, error: out.error });
    }
    Ok(out)
}

/// Samples `B` on a log grid over `(0, T]` and checks positivity, strict decrease and
/// convexity by second divided differences.
pub fn polya_guard(k: &Kernel, samples: usize) -> Result<bool> {
    let (alpha, eps, kappa) = k.params()?;
    let (lo, hi) = ((eps * 1e-12).ln(), (eps + 40.0 / kappa).ln());
    let ts: Vec<f64> = (0..samples).map(|i| (lo + (hi - lo) * i as f64 / (samples - 1) as f64).exp()).collect();
    let bs: Vec<f64> = ts.iter().map(|&t| eval_unchecked(alpha, eps, kappa, t)).collect();
    let positive = bs.iter().all(|&b| b > 0.0);
    let decreasing = bs.windows(2).all(|w| w[1] < w[0]);
    let convex = (1..samples - 1).all(|i| {
        let s1 = (bs[i] - bs[i - 1]) / (ts[i] - ts[i - 1]);
        let s2 = (bs[i + 1] - bs[i]) / (ts[i + 1] - ts[i]);
        s2 >= s1 - 1e-9 * s1.abs()
    });
    Ok(positive && decreasing && convex)
}
