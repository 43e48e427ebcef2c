//! Real and imaginary additive units of a sum system, the elementary-set vectors `y′_E`
//! and the Fourier ℓ² diagnostic for the existence of units over the Tsirelson kernel.
//!
//! Imaginary units are normalized by `⟨x₁, y₁⟩ = 1`: `y_t` solves `K y = m_t` where
//! `m_t` holds the Lebesgue measure of each cell inside `(0, t)`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::GramSpace;
use crate::invariants::ElementarySet;
use crate::kernels::{fourier_coeff, Kernel};
use crate::sumsys::SumSystem;
use crate::table::{fmt_f64, Table};

/// Gram condition number above which a finite-resolution solve is rejected.
pub const MAX_CONDITION: f64 = 1e14;
/// Relative residual `‖Ky − m‖/‖m‖` above which a solve is rejected.
pub const MAX_RESIDUAL: f64 = 1e-10;

/// Coordinates of a solved unit together with the quality of the solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Solved {
    pub coords: DVector<f64>,
    pub condition: f64,
    pub residual: f64,
}

/// `x_t = 1_{(0,t)}` in `G_{(0,t)}`; empty for `t = 0`.
pub fn real_unit(sys: &SumSystem, t: f64) -> Result<DVector<f64>> {
    Ok(DVector::from_element(sys.index(t)?, 1.0))
}

fn solve_checked(space: &GramSpace, m: &DVector<f64>) -> Result<Solved> {
    let condition = space.condition();
    let y = space.solve(m)?;
    let scale = m.norm();
    let residual = if scale > 0.0 { (space.gram() * &y - m).norm() / scale } else { 0.0 };
    if condition > MAX_CONDITION || residual > MAX_RESIDUAL {
        return Err(Error::IllConditioned { condition, residual });
    }
    Ok(Solved { coords: y, condition, residual })
}

/// `y_t ∈ G_{(0,t)}` with `⟨f, y_t⟩ = ∫₀ᵗ f` for every grid step function `f`.
pub fn imaginary_unit(sys: &SumSystem, t: f64) -> Result<Solved> {
    let n = sys.index(t)?;
    if n == 0 {
        return Ok(Solved { coords: DVector::zeros(0), condition: 1.0, residual: 0.0 });
    }
    let space = sys.space(0.0, t)?;
    solve_checked(&space.space, &DVector::from_element(n, sys.h()))
}

/// `‖(A*_{s,t})⁻¹(y_s ⊕ S_s y_t) − y_{s+t}‖` in `G_{(0,s+t)}`.
pub fn imaginary_additivity_residual(sys: &SumSystem, s: f64, t: f64) -> Result<f64> {
    let (ys, yt, yst) = (imaginary_unit(sys, s)?, imaginary_unit(sys, t)?, imaginary_unit(sys, s + t)?);
    let inv = sys.one_param_map(s, t)?.adjoint().inverse()?;
    let joined = DVector::from_iterator(ys.coords.len() + yt.coords.len(), ys.coords.iter().chain(yt.coords.iter()).copied());
    let lhs = inv.apply(&joined)?;
    inv.target().norm(&(lhs - yst.coords))
}

/// `x_s + S_s x_t − x_{s+t}` has no rounding at all: the residual is the max entry.
pub fn real_additivity_residual(sys: &SumSystem, s: f64, t: f64) -> Result<f64> {
    let (xs, xt, xst) = (real_unit(sys, s)?, real_unit(sys, t)?, real_unit(sys, s + t)?);
    let joined = DVector::from_iterator(xs.len() + xt.len(), xs.iter().chain(xt.iter()).copied());
    Ok((joined - xst).amax())
}

/// `y′_E ∈ G_{(0,1)}`, orthogonal to `G_{E^c}` and pairing with real units as `ℓ(· ∩ E)`.
pub fn y_prime(sys: &SumSystem, e: &ElementarySet) -> Result<Solved> {
    let n = sys.index(1.0)?;
    e.cell_mask(n)?;
    let space = sys.space(0.0, 1.0)?;
    solve_checked(&space.space, &e.cell_measures(n))
}

/// `⟨x_{(s₁,s₂)}, v⟩` in `G_{(0,1)}`, with `x_{(s₁,s₂)}` the indicator of the cells inside.
pub fn pair_with_indicator(sys: &SumSystem, s1: f64, s2: f64, v: &DVector<f64>) -> Result<f64> {
    let (i, j) = (sys.index(s1)?, sys.index(s2)?);
    let n = sys.index(1.0)?;
    let x = DVector::from_fn(n, |k, _| if (i..j).contains(&k) { 1.0 } else { 0.0 });
    sys.space(0.0, 1.0)?.space.inner(&x, v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingRow {
    pub t: f64,
    pub pairing: f64,
    pub residual: f64,
    pub condition: f64,
}

/// `⟨x_t, y_t⟩` at each `t`, with `|⟨x_t, y_t⟩ − t|` as the residual.
pub fn pairing_table(sys: &SumSystem, ts: &[f64]) -> Result<Vec<PairingRow>> {
    ts.par_iter()
        .map(|&t| {
            let x = real_unit(sys, t)?;
            let y = imaginary_unit(sys, t)?;
            let pairing = if x.is_empty() { 0.0 } else { sys.space(0.0, t)?.space.inner(&x, &y.coords)? };
            Ok(PairingRow { t, pairing, residual: (pairing - t).abs(), condition: y.condition })
        })
        .collect()
}

pub fn pairing_csv(rows: &[PairingRow]) -> Table {
    let mut table = Table::new(["t", "pairing", "residual"]);
    for r in rows {
        table.push(vec![fmt_f64(r.t), fmt_f64(r.pairing), fmt_f64(r.residual)]);
    }
    table
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub n: u64,
    pub partial_sum: f64,
    /// Sum over `N/2 < |n| ≤ N`; for `N = 1` the `n = 0` limit term is included.
    pub block: f64,
    /// Tail blocks are those starting at or beyond `√n_max`.
    pub tail: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceSeries {
    pub rows: Vec<SeriesRow>,
    pub zero_term: f64,
    /// Tail blocks strictly decrease.
    pub converging: bool,
    pub quad_error: f64,
}

impl ExistenceSeries {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["N", "partial_sum", "block", "flag"])
            .comment(format!("n = 0 term taken as its limit 1/B̂(0)^2 = {}", fmt_f64(self.zero_term)));
        for r in &self.rows {
            let flag = if r.tail { "tail" } else { "head" };
            t.push(vec![r.n.to_string(), fmt_f64(r.partial_sum), fmt_f64(r.block), flag.into()]);
        }
        t
    }

    pub fn tail_blocks(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.tail).map(|r| r.block).collect()
    }
}

/// Partial sums of `Σ_n |e^{in} − 1|² / (n² B̂(n)²)` at dyadic checkpoints `N ≤ n_max`.
///
/// Terms for `±n` agree, so each `n > 0` counts twice; the `n = 0` term is its limit.
pub fn existence_series(k: &Kernel, n_max: u64) -> Result<ExistenceSeries> {
    if !matches!(k, Kernel::Tsirelson { .. }) {
        return Err(Error::InvalidParameter("the existence series needs a Tsirelson kernel".into()));
    }
    if n_max == 0 || !n_max.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("n_max = {n_max} must be a positive power of two")));
    }
    let b0 = fourier_coeff(k, 0)?.value;
    let zero_term = 1.0 / (b0 * b0);
    let terms: Vec<(f64, f64)> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let b = fourier_coeff(k, n as i64)?;
            let nf = n as f64;
            Ok((2.0 * 2.0 * (1.0 - nf.cos()) / (nf * nf * b.value * b.value), b.error))
        })
        .collect::<Result<_>>()?;
    let quad_error = terms.iter().map(|t| t.1).sum();
    let tail_start = (n_max as f64).sqrt();
    let mut rows = Vec::new();
    let mut partial = zero_term;
    let mut lo = 0u64;
    let mut hi = 1u64;
    while hi <= n_max {
        let mut block: f64 = terms[lo as usize..hi as usize].iter().map(|t| t.0).sum();
        if hi == 1 {
            block += zero_term;
            partial = 0.0;
        }
        partial += block;
        rows.push(SeriesRow { n: hi, partial_sum: partial, block, tail: lo as f64 >= tail_start });
        lo = hi;
        hi *= 2;
    }
    let tail: Vec<f64> = rows.iter().filter(|r| r.tail).map(|r| r.block).collect();
    let converging = tail.len() >= 2 && tail.windows(2).all(|w| w[1] < w[0]);
    Ok(ExistenceSeries { rows, zero_term, converging, quad_error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessProbe {
    pub norms: Vec<f64>,
    pub max: f64,
}

impl BoundednessProbe {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["set_id", "norm"]).comment(format!("max = {}", fmt_f64(self.max)));
        for (i, n) in self.norms.iter().enumerate() {
            t.push(vec![i.to_string(), fmt_f64(*n)]);
        }
        t
    }
}

/// `‖y′_B‖` for each set.
pub fn yprime_boundedness_probe(sys: &SumSystem, sets: &[ElementarySet]) -> Result<BoundednessProbe> {
    let space = sys.space(0.0, 1.0)?;
    let norms: Vec<f64> = sets
        .par_iter()
        .map(|e| space.space.norm(&y_prime(sys, e)?.coords))
        .collect::<Result<_>>()?;
    let max = norms.iter().copied().fold(0.0, f64::max);
    Ok(BoundednessProbe { norms, max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l2(h: f64) -> SumSystem {
        SumSystem::new(Kernel::StandardL2, h, 1.0).unwrap()
    }

    fn ts(h: f64) -> SumSystem {
        SumSystem::new(Kernel::tsirelson(2.0).unwrap(), h, 1.0).unwrap()
    }

    #[test]
    fn real_unit_examples() {
        let l = l2(1.0 / 16.0);
        assert_eq!(real_additivity_residual(&l, 0.25, 0.75).unwrap(), 0.0);
        let x = real_unit(&l, 0.375).unwrap();
        let sp = l.space(0.0, 0.375).unwrap();
        assert!((sp.space.norm(&x).unwrap().powi(2) - 0.375).abs() < 1e-15);
        assert_eq!(real_unit(&l, 0.0).unwrap().len(), 0);
        assert!(matches!(real_unit(&l, 0.3), Err(Error::Misaligned(_))));
    }

    #[test]
    fn standard_l2_units_coincide() {
        let l = l2(1.0 / 32.0);
        for t in [0.25, 0.5, 1.0] {
            assert_eq!(imaginary_unit(&l, t).unwrap().coords, real_unit(&l, t).unwrap());
        }
    }

    #[test]
    fn pairing_is_linear_in_t() {
        let sys = ts(1.0 / 64.0);
        let rows = pairing_table(&sys, &[0.25, 0.5, 0.75, 1.0]).unwrap();
        for r in &rows {
            assert!(r.residual < 1e-9, "{r:?}");
        }
        let all: Vec<f64> = (1..=64).map(|i| i as f64 / 64.0).collect();
        for r in pairing_table(&sys, &all).unwrap() {
            assert!(r.residual < 1e-9);
        }
    }

    #[test]
    fn imaginary_additivity_holds() {
        for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let sys = ts(h);
            assert!(imaginary_additivity_residual(&sys, 0.25, 0.5).unwrap() < 1e-9);
        }
    }

    #[test]
    fn y_prime_examples() {
        let sys = ts(1.0 / 32.0);
        let full = y_prime(&sys, &ElementarySet::full()).unwrap();
        let y1 = imaginary_unit(&sys, 1.0).unwrap();
        assert!((full.coords - y1.coords).amax() < 1e-12);

        let e = ElementarySet::new([(0.125, 0.375), (0.5, 0.75)]).unwrap();
        let y = y_prime(&sys, &e).unwrap();
        let space = sys.space(0.0, 1.0).unwrap().space;
        let mask = e.complement().cell_mask(32).unwrap();
        for i in (0..32).filter(|&i| mask[i]) {
            let mut g = DVector::zeros(32);
            g[i] = 1.0;
            assert!(space.inner(&g, &y.coords).unwrap().abs() < 1e-10);
        }
        let e1 = ElementarySet::new([(0.125, 0.375)]).unwrap();
        let e2 = ElementarySet::new([(0.5, 0.75)]).unwrap();
        let sum = y_prime(&sys, &e1).unwrap().coords + y_prime(&sys, &e2).unwrap().coords;
        assert!((sum - y.coords).amax() < 1e-9);
    }

    #[test]
    fn boundedness_examples() {
        let l = l2(1.0 / 16.0);
        let sets = vec![
            ElementarySet::empty(),
            ElementarySet::new([(0.25, 0.5)]).unwrap(),
            ElementarySet::new([(0.25, 0.5), (0.75, 0.875)]).unwrap(),
            ElementarySet::full(),
        ];
        let probe = yprime_boundedness_probe(&l, &sets).unwrap();
        assert_eq!(probe.norms[0], 0.0);
        for (e, n) in sets.iter().zip(&probe.norms) {
            assert!((n - e.measure().sqrt()).abs() < 1e-15);
        }
        assert!(probe.norms.windows(2).all(|w| w[0] <= w[1]));
        assert!(probe.max <= 1.0);
    }

    #[test]
    fn existence_series_small() {
        let k = Kernel::tsirelson(2.0).unwrap();
        let s = existence_series(&k, 256).unwrap();
        assert_eq!(s.rows.len(), 9);
        assert!(s.rows.iter().all(|r| r.block >= 0.0));
        let b0 = crate::kernels::kernel_l1_norm(&k).unwrap();
        assert!((s.rows[0].block - 1.0 / (b0 * b0) - 4.0 * (1.0 - 1f64.cos()) / fourier_coeff(&k, 1).unwrap().value.powi(2)).abs() < 1e-12);
        assert!(s.rows.windows(2).all(|w| w[1].partial_sum >= w[0].partial_sum));
        assert!(existence_series(&Kernel::StandardL2, 256).is_err());
        assert!(existence_series(&k, 100).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn pairing_is_bilinear(a in 0usize..32, b in 0usize..32, c in 0usize..32, d in 0usize..32) {
            let sys = ts(1.0 / 32.0);
            let (s1, s2) = (a.min(b) as f64 / 32.0, a.max(b) as f64 / 32.0);
            let (t1, t2) = (c.min(d) as f64 / 32.0, c.max(d) as f64 / 32.0);
            let e = ElementarySet::new([(t1, t2)]).unwrap();
            let y = y_prime(&sys, &e).unwrap();
            let got = pair_with_indicator(&sys, s1, s2, &y.coords).unwrap();
            let want = (s2.min(t2) - s1.max(t1)).max(0.0);
            prop_assert!((got - want).abs() < 1e-9);
        }
    }
}
