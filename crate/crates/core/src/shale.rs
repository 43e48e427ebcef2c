//! The Shale map `Γ(A)` for invertible maps with Hilbert–Schmidt defect.
//!
//! In mode coordinates `Ã = W Σ Vᵀ`, and `Γ(A) = Exp(W) · ⊗ᵢ M(σᵢ) · Exp(Vᵀ)`, where
//! `M(λ)` is the single-mode dilation `f ↦ λ^{-1/2} f(·/λ)` written in the Hermite
//! function basis. Only the dilation blocks carry truncation error: with a total
//! particle cutoff `N`, the assembled matrix is exactly the compression `P_N Γ(A) P_N`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{second_quantize_blocks, weyl, FockOperator, FockSpace, FockVector};
use crate::hilbert::{s_class_check, symplectic_extend, ComplexVector, GramMap, INV_FLOOR};
use crate::linalg::{op_norm, svd_sorted, to_complex};
use crate::quad::{integrate, Tolerance};

/// `φₙ(t) = (2π)^{-1/4} e^{-t²/4} Heₙ(t) / √(n!)`.
pub fn mode_function(n: usize, t: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = (2.0 * std::f64::consts::PI).powf(-0.25) * (-0.25 * t * t).exp();
    for k in 0..n {
        let next = (t * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationBlock {
    pub lambda: f64,
    pub cutoff: usize,
    pub matrix: DMatrix<f64>,
}

impl DilationBlock {
    pub fn vacuum_overlap(&self) -> f64 {
        self.matrix[(0, 0)]
    }
}

/// `((λ + λ⁻¹)/2)^{-1/2}`.
pub fn vacuum_overlap_formula(lambda: f64) -> f64 {
    (0.5 * (lambda + lambda.recip())).powf(-0.5)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("dilation factor must be positive, got {lambda}")));
    }
    Ok(())
}

/// Nodes `xₖ` of `K`-point Gauss–Hermite quadrature (weight `e^{-x²}`) together with
/// the scaled Christoffel weights `wₖ e^{xₖ²} = 1 / Σ_{j<K} ψⱼ(xₖ)²`, where `ψⱼ` are the
/// orthonormal Hermite functions.
pub fn gauss_hermite(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::zeros(k, k);
    for j in 1..k {
        let off = (j as f64 / 2.0).sqrt();
        jacobi[(j, j - 1)] = off;
        jacobi[(j - 1, j)] = off;
    }
    let mut nodes: Vec<f64> = jacobi.symmetric_eigen().eigenvalues.iter().cloned().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));
    let psi = |x: f64| -> Vec<f64> {
        let mut out = Vec::with_capacity(k + 1);
        out.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp());
        let mut prev = 0.0;
        for j in 0..k {
            let next = (2f64.sqrt() * x * out[j] - (j as f64).sqrt() * prev) / ((j + 1) as f64).sqrt();
            prev = out[j];
            out.push(next);
        }
        out
    };
    let mut weights = Vec::with_capacity(k);
    for x in nodes.iter_mut() {
        for _ in 0..2 {
            let p = psi(*x);
            let deriv = (2.0 * k as f64).sqrt() * p[k - 1] - *x * p[k];
            if deriv != 0.0 {
                *x -= p[k] / deriv;
            }
        }
        let p = psi(*x);
        weights.push(1.0 / p[..k].iter().map(|v| v * v).sum::<f64>());
    }
    (nodes, weights)
}

fn mode_functions(n: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push((2.0 * std::f64::consts::PI).powf(-0.25) * (-0.25 * t * t).exp());
    let mut prev = 0.0;
    for k in 0..n {
        let next = (t * out[k] - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = out[k];
        out.push(next);
    }
    out
}

/// `M(λ)_{mn} = ∫ φₘ(t) λ^{-1/2} φₙ(t/λ) dt` for `m, n ≤ N`.
///
/// The integrand is a polynomial of degree `m + n` times `e^{-(1+λ⁻²)t²/4}`, so
/// `N + 1` Gauss–Hermite nodes integrate every entry exactly.
pub fn dilation_block(lambda: f64, cutoff: usize) -> Result<DilationBlock> {
    check_lambda(lambda)?;
    let c = 0.25 * (1.0 + lambda.powi(-2));
    let (nodes, weights) = gauss_hermite(cutoff + 1);
    let scale = lambda.powf(-0.5) / c.sqrt();
    let mut left = DMatrix::zeros(cutoff + 1, nodes.len());
    let mut right = DMatrix::zeros(nodes.len(), cutoff + 1);
    for (k, (&x, &w)) in nodes.iter().zip(&weights).enumerate() {
        let t = x / c.sqrt();
        for (m, v) in mode_functions(cutoff, t).into_iter().enumerate() {
            left[(m, k)] = v * w * scale;
        }
        for (n, v) in mode_functions(cutoff, t / lambda).into_iter().enumerate() {
            right[(k, n)] = v;
        }
    }
    let mut matrix = left * right;
    for m in 0..=cutoff {
        for n in 0..=cutoff {
            if (m + n) % 2 == 1 {
                matrix[(m, n)] = 0.0;
            }
        }
    }
    Ok(DilationBlock { lambda, cutoff, matrix })
}

/// Quadrature evaluation of the same block, on `|t| ≤ 2√(2N+1)·max(λ, 1/λ)`.
pub fn dilation_block_quadrature(lambda: f64, cutoff: usize) -> Result<DilationBlock> {
    check_lambda(lambda)?;
    let half_width = 2.0 * ((2 * cutoff + 1) as f64).sqrt() * lambda.max(lambda.recip());
    let scale = lambda.powf(-0.5);
    // Panels no wider than the narrower of the two oscillation scales.
    let panels = (2.0 * half_width / (0.5 * lambda.min(1.0))).ceil() as usize;
    let width = 2.0 * half_width / panels as f64;
    let mut matrix = DMatrix::zeros(cutoff + 1, cutoff + 1);
    for m in 0..=cutoff {
        for n in 0..=cutoff {
            if (m + n) % 2 == 1 {
                continue;
            }
            let tol = Tolerance::abs(1e-12 / panels as f64);
            let mut total = crate::quad::QuadResult::zero();
            for p in 0..panels {
                let a = -half_width + p as f64 * width;
                let q = integrate(|t| mode_function(m, t) * scale * mode_function(n, t / lambda), a, a + width, tol);
                total = total.merge(q);
            }
            if !total.converged {
                return Err(Error::Quadrature { value: total.value, error: total.error });
            }
            matrix[(m, n)] = total.value;
        }
    }
    Ok(DilationBlock { lambda, cutoff, matrix })
}

/// Gram-orthonormal singular frames of `A`: `A eᵢ = λᵢ fᵢ`.
#[derive(Debug, Clone)]
pub struct ModeFrame {
    /// Columns `eᵢ` in source coordinates.
    pub eigenbasis_src: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    /// Columns `fᵢ` in target coordinates.
    pub eigenbasis_tgt: DMatrix<f64>,
    /// `V` with `Ã = W Σ Vᵀ` in mode coordinates.
    pub modes_src: DMatrix<f64>,
    /// `W` with `Ã = W Σ Vᵀ` in mode coordinates.
    pub modes_tgt: DMatrix<f64>,
}

impl ModeFrame {
    pub fn new(a: &GramMap) -> Result<Self> {
        let report = s_class_check(a, INV_FLOOR);
        if !report.verdict {
            return Err(Error::NotInvertible {
                smallest: report.smallest_singular,
                largest: report.largest_singular,
            });
        }
        let svd = svd_sorted(&a.mode_matrix());
        let v = svd.vt.transpose();
        Ok(ModeFrame {
            eigenbasis_src: a.source().inv_sqrt_gram() * &v,
            eigenvalues: svd.singular.clone(),
            eigenbasis_tgt: a.target().inv_sqrt_gram() * &svd.u,
            modes_src: v,
            modes_tgt: svd.u,
        })
    }

    pub fn hs_defect(&self) -> f64 {
        self.eigenvalues.iter().map(|l| (l - 1.0).powi(2)).sum()
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 2 {
        return Err(Error::InvalidParameter(format!("cutoff must be at least 2, got {cutoff}")));
    }
    Ok(())
}

/// `⊗ᵢ M(λᵢ)` on the total-particle-truncated basis.
pub fn diagonal_gamma(lambdas: &[f64], space: &Arc<FockSpace>) -> Result<FockOperator> {
    if lambdas.len() != space.modes() {
        return Err(Error::DimensionMismatch { expected: space.modes(), found: lambdas.len() });
    }
    let blocks: Vec<DilationBlock> = lambdas
        .par_iter()
        .map(|&l| dilation_block(l, space.cutoff()))
        .collect::<Result<_>>()?;
    let n = space.dim();
    let columns: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|c| {
            let nc = space.occupation(c);
            (0..n)
                .map(|r| {
                    let mr = space.occupation(r);
                    let v = blocks
                        .iter()
                        .enumerate()
                        .fold(1.0, |acc, (i, b)| acc * b.matrix[(mr[i] as usize, nc[i] as usize)]);
                    Complex64::new(v, 0.0)
                })
                .collect()
        })
        .collect();
    let matrix = DMatrix::from_iterator(n, n, columns.into_iter().flatten());
    FockOperator::new(space.clone(), space.clone(), matrix, space.cutoff() / 2)
}

/// The truncated Shale operator between the Fock spaces over source and target.
pub fn gamma(a: &GramMap, cutoff: usize) -> Result<FockOperator> {
    check_cutoff(cutoff)?;
    let frame = ModeFrame::new(a)?;
    let source = Arc::new(FockSpace::over(a.source().clone(), cutoff)?);
    let target = Arc::new(FockSpace::over(a.target().clone(), cutoff)?);
    let lambdas: Vec<f64> = frame.eigenvalues.iter().cloned().collect();
    let diag = diagonal_gamma(&lambdas, &source)?;
    let left = second_quantize_blocks(&to_complex(&frame.modes_tgt), &source);
    let right = second_quantize_blocks(&to_complex(&frame.modes_src.transpose()), &source);
    let matrix = right.right_mul(&left.left_mul(&diag.matrix));
    FockOperator::new(source, target, matrix, cutoff / 2)
}

fn check_sector(sector: usize, cutoff: usize) -> Result<()> {
    if sector > cutoff / 2 {
        return Err(Error::InvalidParameter(format!("sector {sector} exceeds half the cutoff {cutoff}")));
    }
    Ok(())
}

/// `(Γ·X·Γ*)·P_{≤sector}` without forming `Γ*` on all columns.
fn conjugate_restricted(g: &FockOperator, x: &DMatrix<Complex64>, sector: usize) -> DMatrix<Complex64> {
    let k = g.target.dim_upto(sector);
    let g_star_p = g.matrix.rows(0, k).adjoint();
    &g.matrix * (x * g_star_p)
}

/// `‖(Γ(A)W(u)Γ(A)* − W(S_A u))·P_{≤sector}‖`, with `u` in source coordinates.
pub fn verify_intertwining(a: &GramMap, u: &ComplexVector, cutoff: usize, sector: usize) -> Result<f64> {
    let su = symplectic_extend(a, u)?.to_modes(a.target());
    intertwining_residual(a, u, &su, cutoff, sector)
}

/// `‖(Γ(A)W(u)Γ(A)* − W(v))·P_{≤sector}‖` for an arbitrary target `v` in target mode
/// coordinates.
pub fn intertwining_residual(
    a: &GramMap,
    u: &ComplexVector,
    v: &DVector<Complex64>,
    cutoff: usize,
    sector: usize,
) -> Result<f64> {
    check_sector(sector, cutoff)?;
    if u.len() != a.source().dim() {
        return Err(Error::DimensionMismatch { expected: a.source().dim(), found: u.len() });
    }
    let g = gamma(a, cutoff)?;
    let wu = weyl(&u.to_modes(a.source()), &g.source)?;
    let wv = weyl(v, &g.target)?;
    let lhs = conjugate_restricted(&g, &wu.matrix, sector);
    Ok(op_norm(&(lhs - wv.restricted(sector))))
}

/// `‖(Γ(BA) − Γ(B)Γ(A))·P_{≤sector}‖`.
pub fn verify_functorial(a: &GramMap, b: &GramMap, cutoff: usize, sector: usize) -> Result<f64> {
    check_sector(sector, cutoff)?;
    let ba = b.compose(a)?;
    let g_ba = gamma(&ba, cutoff)?;
    let g_a = gamma(a, cutoff)?;
    let g_b = gamma(b, cutoff)?;
    let product = &g_b.matrix * g_a.restricted(sector);
    Ok(op_norm(&(g_ba.restricted(sector) - product)))
}

/// `‖(Γ(A⁻¹) − Γ(A)*)·P_{≤sector}‖`.
pub fn verify_adjoint(a: &GramMap, cutoff: usize, sector: usize) -> Result<f64> {
    check_sector(sector, cutoff)?;
    let g = gamma(a, cutoff)?;
    let g_inv = gamma(&a.inverse()?, cutoff)?;
    Ok(op_norm(&(g_inv.restricted(sector) - g.adjoint().restricted(sector))))
}

/// `‖(Γ(A)*Γ(A) − I)·P_{≤sector}‖`.
pub fn unitarity_residual(a: &GramMap, cutoff: usize, sector: usize) -> Result<f64> {
    check_sector(sector, cutoff)?;
    let g = gamma(a, cutoff)?;
    let k = g.source.dim_upto(sector);
    let mut m = g.matrix.adjoint() * g.restricted(sector);
    for i in 0..k {
        m[(i, i)] -= Complex64::new(1.0, 0.0);
    }
    Ok(op_norm(&m))
}

#[derive(Debug, Clone)]
pub struct WeakContinuityTable {
    /// `elements[n][p] = ⟨Γ(Tₙ)ξₚ, ηₚ⟩`.
    pub elements: Vec<Vec<Complex64>>,
    pub limit: Vec<Complex64>,
    /// Largest deviation from the limit over probes, per sequence index.
    pub deviations: Vec<f64>,
    /// Deviations over the final quarter never increase.
    pub converging: bool,
}

/// Matrix elements of `Γ(Tₙ)` against those of `Γ(T)` for the given probe pairs.
pub fn verify_weak_continuity(
    seq: &[GramMap],
    limit: &GramMap,
    probes: &[(FockVector, FockVector)],
    cutoff: usize,
) -> Result<WeakContinuityTable> {
    let elements_of = |m: &GramMap| -> Result<Vec<Complex64>> {
        let g = gamma(m, cutoff)?;
        probes.iter().map(|(xi, eta)| g.matrix_element(xi, eta)).collect()
    };
    let limit_elems = elements_of(limit)?;
    let elements: Vec<Vec<Complex64>> = seq.par_iter().map(elements_of).collect::<Result<_>>()?;
    let deviations: Vec<f64> = elements
        .iter()
        .map(|row| row.iter().zip(&limit_elems).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        .collect();
    let tail_start = deviations.len() - deviations.len().div_ceil(4);
    let converging = deviations[tail_start..].windows(2).all(|w| w[1] <= w[0]);
    Ok(WeakContinuityTable { elements, limit: limit_elems, deviations, converging })
}
