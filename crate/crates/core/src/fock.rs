//! Truncated symmetric Fock spaces over the complexification of a `GramSpace`.
//!
//! States are indexed by occupation multi-indices `(n₁,…,n_d)` with total particle
//! number at most the cutoff `N`, ordered by ascending total and then
//! lexicographically with the highest first-mode occupation first. Because of the
//! grading, the sector projection `P_{≤s}` is always a leading block of columns.
//!
//! Inner products are linear in the first argument: `⟨x, y⟩ = Σ xᵢ ȳᵢ`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::GramSpace;
use crate::linalg::{op_norm, unitary_with_first_column};

pub type Occupation = Vec<u32>;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const C1: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Graded-lex ordered occupation multi-indices with total at most `cutoff`.
pub fn occupation_basis(modes: usize, cutoff: usize) -> Vec<Occupation> {
    fn compositions(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Occupation>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            compositions(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for n in 0..=cutoff as u32 {
        compositions(n, modes, &mut Vec::with_capacity(modes), &mut out);
    }
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[derive(Debug)]
pub struct FockSpace {
    modes: usize,
    cutoff: usize,
    base: Option<Arc<GramSpace>>,
    basis: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
    sector_start: Vec<usize>,
    raise: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl PartialEq for FockSpace {
    fn eq(&self, other: &Self) -> bool {
        self.modes == other.modes && self.cutoff == other.cutoff
    }
}

impl FockSpace {
    pub fn new(modes: usize, cutoff: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidParameter("a Fock space needs at least one mode".into()));
        }
        let basis = occupation_basis(modes, cutoff);
        let index: HashMap<Occupation, usize> =
            basis.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut sector_start = vec![0; cutoff + 2];
        for n in &basis {
            let total: u32 = n.iter().sum();
            sector_start[total as usize + 1] += 1;
        }
        for s in 1..sector_start.len() {
            sector_start[s] += sector_start[s - 1];
        }
        let mut raise = vec![NONE; basis.len() * modes];
        let mut scratch = Vec::with_capacity(modes);
        for (i, n) in basis.iter().enumerate() {
            for j in 0..modes {
                scratch.clear();
                scratch.extend_from_slice(n);
                scratch[j] += 1;
                if let Some(&k) = index.get(&scratch) {
                    raise[i * modes + j] = k;
                }
            }
        }
        Ok(FockSpace { modes, cutoff, base: None, basis, index, sector_start, raise })
    }

    /// Fock space over the complexification of `base`, one mode per dimension.
    pub fn over(base: Arc<GramSpace>, cutoff: usize) -> Result<Self> {
        let mut space = FockSpace::new(base.dim(), cutoff)?;
        space.base = Some(base);
        Ok(space)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn base(&self) -> Option<&Arc<GramSpace>> {
        self.base.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Occupation] {
        &self.basis
    }

    pub fn occupation(&self, i: usize) -> &[u32] {
        &self.basis[i]
    }

    pub fn index_of(&self, n: &[u32]) -> Option<usize> {
        self.index.get(n).copied()
    }

    /// Number of states with total particle number at most `sector`.
    pub fn dim_upto(&self, sector: usize) -> usize {
        self.sector_start[sector.min(self.cutoff) + 1]
    }

    pub fn sector_range(&self, sector: usize) -> std::ops::Range<usize> {
        self.sector_start[sector]..self.sector_start[sector + 1]
    }

    /// Index of `n + e_mode`, if it lies within the cutoff.
    pub fn raised(&self, i: usize, mode: usize) -> Option<usize> {
        let k = self.raise[i * self.modes + mode];
        (k != NONE).then_some(k)
    }
}

#[derive(Debug, Clone)]
pub struct FockVector {
    pub space: Arc<FockSpace>,
    pub coeffs: DVector<Complex64>,
}

impl FockVector {
    pub fn new(space: Arc<FockSpace>, coeffs: DVector<Complex64>) -> Result<Self> {
        if coeffs.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: coeffs.len() });
        }
        Ok(FockVector { space, coeffs })
    }

    pub fn vacuum(space: Arc<FockSpace>) -> Self {
        let mut coeffs = DVector::zeros(space.dim());
        coeffs[0] = C1;
        FockVector { space, coeffs }
    }

    pub fn basis_state(space: Arc<FockSpace>, n: &[u32]) -> Result<Self> {
        let i = space
            .index_of(n)
            .ok_or_else(|| Error::InvalidParameter(format!("occupation {n:?} outside the space")))?;
        let mut coeffs = DVector::zeros(space.dim());
        coeffs[i] = C1;
        Ok(FockVector { space, coeffs })
    }

    /// `Σ aₖ b̄ₖ`.
    pub fn inner(&self, other: &FockVector) -> Complex64 {
        other.coeffs.dotc(&self.coeffs)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }
}

/// Truncated exponential vector `e(x)`: coefficient `Π xᵢ^{nᵢ} / √(Π nᵢ!)`.
pub fn exponential_vector(x: &DVector<Complex64>, space: &Arc<FockSpace>) -> Result<FockVector> {
    if x.len() != space.modes() {
        return Err(Error::DimensionMismatch { expected: space.modes(), found: x.len() });
    }
    let coeffs = DVector::from_iterator(
        space.dim(),
        space.basis().iter().map(|n| {
            n.iter().zip(x.iter()).fold(C1, |acc, (&k, &xi)| {
                let fact: f64 = (1..=k).map(f64::from).product();
                acc * xi.powu(k) / fact.sqrt()
            })
        }),
    );
    Ok(FockVector { space: space.clone(), coeffs })
}

/// `Σ_{n≤N} ⟨x,y⟩ⁿ/n!`, the inner product of truncated exponential vectors.
pub fn exp_inner(x: &DVector<Complex64>, y: &DVector<Complex64>, cutoff: usize) -> Complex64 {
    let z = y.dotc(x);
    let mut term = C1;
    let mut sum = C1;
    for n in 1..=cutoff {
        term = term * z / n as f64;
        sum += term;
    }
    sum
}

#[derive(Debug, Clone)]
pub struct FockOperator {
    pub source: Arc<FockSpace>,
    pub target: Arc<FockSpace>,
    pub matrix: DMatrix<Complex64>,
    /// Sector up to which identities involving this operator are asserted.
    pub exact_up_to: usize,
}

impl FockOperator {
    pub fn new(
        source: Arc<FockSpace>,
        target: Arc<FockSpace>,
        matrix: DMatrix<Complex64>,
        exact_up_to: usize,
    ) -> Result<Self> {
        if matrix.nrows() != target.dim() {
            return Err(Error::DimensionMismatch { expected: target.dim(), found: matrix.nrows() });
        }
        if matrix.ncols() != source.dim() {
            return Err(Error::DimensionMismatch { expected: source.dim(), found: matrix.ncols() });
        }
        Ok(FockOperator { source, target, matrix, exact_up_to })
    }

    pub fn identity(space: Arc<FockSpace>) -> Self {
        let n = space.dim();
        let cutoff = space.cutoff();
        FockOperator { source: space.clone(), target: space, matrix: DMatrix::identity(n, n), exact_up_to: cutoff }
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        if v.coeffs.len() != self.source.dim() {
            return Err(Error::DimensionMismatch { expected: self.source.dim(), found: v.coeffs.len() });
        }
        Ok(FockVector { space: self.target.clone(), coeffs: &self.matrix * &v.coeffs })
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator {
            source: self.target.clone(),
            target: self.source.clone(),
            matrix: self.matrix.adjoint(),
            exact_up_to: self.exact_up_to,
        }
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &FockOperator) -> Result<FockOperator> {
        if *first.target != *self.source {
            return Err(Error::IncompatibleSpaces("Fock operator composition".into()));
        }
        Ok(FockOperator {
            source: first.source.clone(),
            target: self.target.clone(),
            matrix: &self.matrix * &first.matrix,
            exact_up_to: self.exact_up_to.min(first.exact_up_to),
        })
    }

    /// `self · P_{≤sector}`, as a dense `target.dim() × dim_upto(sector)` block.
    pub fn restricted(&self, sector: usize) -> DMatrix<Complex64> {
        let k = self.source.dim_upto(sector);
        self.matrix.columns(0, k).into_owned()
    }

    /// `⟨self·ξ, η⟩`.
    pub fn matrix_element(&self, xi: &FockVector, eta: &FockVector) -> Result<Complex64> {
        Ok(self.apply(xi)?.inner(eta))
    }
}

/// Spectral norm of `(a − b)·P_{≤sector}`.
pub fn sector_residual(a: &FockOperator, b: &FockOperator, sector: usize) -> f64 {
    op_norm(&(a.restricted(sector) - b.restricted(sector)))
}

#[derive(Debug, Clone)]
pub struct Ladder {
    pub creation: Vec<FockOperator>,
    pub annihilation: Vec<FockOperator>,
}

/// Per-mode creation and annihilation matrices; raising past the cutoff is dropped.
pub fn ladder_matrices(space: &Arc<FockSpace>) -> Ladder {
    let n = space.dim();
    let mut creation = Vec::with_capacity(space.modes());
    let mut annihilation = Vec::with_capacity(space.modes());
    for mode in 0..space.modes() {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            if let Some(k) = space.raised(i, mode) {
                m[(k, i)] = Complex64::new(f64::from(space.occupation(i)[mode] + 1).sqrt(), 0.0);
            }
        }
        let up = FockOperator::new(space.clone(), space.clone(), m, space.cutoff()).expect("square");
        annihilation.push(up.adjoint());
        creation.push(up);
    }
    Ladder { creation, annihilation }
}

/// Block-diagonal operator over particle-number sectors.
#[derive(Debug, Clone)]
pub(crate) struct SectorBlocks {
    blocks: Vec<DMatrix<Complex64>>,
    starts: Vec<usize>,
}

impl SectorBlocks {
    pub(crate) fn to_dense(&self) -> DMatrix<Complex64> {
        let n = *self.starts.last().unwrap();
        let mut m = DMatrix::zeros(n, n);
        for (s, b) in self.blocks.iter().enumerate() {
            m.view_mut((self.starts[s], self.starts[s]), b.shape()).copy_from(b);
        }
        m
    }

    pub(crate) fn adjoint(&self) -> SectorBlocks {
        SectorBlocks { blocks: self.blocks.iter().map(|b| b.adjoint()).collect(), starts: self.starts.clone() }
    }

    /// `self · m`.
    pub(crate) fn left_mul(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for (s, b) in self.blocks.iter().enumerate() {
            let (start, len) = (self.starts[s], b.nrows());
            let rows = b * m.rows(start, len);
            out.rows_mut(start, len).copy_from(&rows);
        }
        out
    }

    /// `m · self`.
    pub(crate) fn right_mul(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for (s, b) in self.blocks.iter().enumerate() {
            let (start, len) = (self.starts[s], b.nrows());
            let cols = m.columns(start, len) * b;
            out.columns_mut(start, len).copy_from(&cols);
        }
        out
    }
}

fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let n = u.nrows();
    let g = u.adjoint() * u;
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { C1 } else { C0 };
            worst = worst.max((g[(i, j)] - want).norm());
        }
    }
    worst
}

/// Sector blocks of `Exp(U)`, built column by column from
/// `Exp(U)|n⟩ = nᵢ^{-1/2} (Σⱼ U_{ji} aⱼ†) Exp(U)|n − eᵢ⟩`.
pub(crate) fn second_quantize_blocks(u: &DMatrix<Complex64>, space: &FockSpace) -> SectorBlocks {
    let d = space.modes();
    let mut blocks = Vec::with_capacity(space.cutoff() + 1);
    blocks.push(DMatrix::from_element(1, 1, C1));
    let mut lowered = Vec::with_capacity(d);
    for s in 1..=space.cutoff() {
        let range = space.sector_range(s);
        let prev = space.sector_range(s - 1);
        let mut block = DMatrix::zeros(range.len(), range.len());
        for (col, idx) in range.clone().enumerate() {
            let n = space.occupation(idx);
            let i = n.iter().position(|&k| k > 0).expect("sector > 0");
            lowered.clear();
            lowered.extend_from_slice(n);
            lowered[i] -= 1;
            let m = space.index_of(&lowered).expect("lowered state exists");
            let prev_block: &DMatrix<Complex64> = &blocks[s - 1];
            let scale = 1.0 / f64::from(n[i]).sqrt();
            for (row_prev, k) in prev.clone().enumerate() {
                let c = prev_block[(row_prev, m - prev.start)];
                if c == C0 {
                    continue;
                }
                let occ = space.occupation(k);
                for j in 0..d {
                    let uj = u[(j, i)];
                    if uj == C0 {
                        continue;
                    }
                    let target = space.raised(k, j).expect("sector below cutoff") - range.start;
                    block[(target, col)] += c * uj * (f64::from(occ[j] + 1).sqrt() * scale);
                }
            }
        }
        blocks.push(block);
    }
    let starts = (0..=space.cutoff() + 1).map(|s| space.sector_start[s]).collect();
    SectorBlocks { blocks, starts }
}

/// `Exp(U)` for a unitary `U` given in mode coordinates; exactly unitary at every cutoff.
pub fn second_quantize(u: &DMatrix<Complex64>, space: &Arc<FockSpace>) -> Result<FockOperator> {
    if u.nrows() != space.modes() || u.ncols() != space.modes() {
        return Err(Error::DimensionMismatch { expected: space.modes(), found: u.nrows() });
    }
    let defect = unitarity_defect(u);
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    let blocks = second_quantize_blocks(u, space);
    FockOperator::new(space.clone(), space.clone(), blocks.to_dense(), space.cutoff())
}

/// Truncated single-mode `exp(r (a† − a))` on occupations `0..=m`.
fn single_mode_displacement(r: f64, m: usize) -> DMatrix<f64> {
    let mut gen = DMatrix::zeros(m + 1, m + 1);
    for j in 0..m {
        let c = r * ((j + 1) as f64).sqrt();
        gen[(j + 1, j)] = c;
        gen[(j, j + 1)] = -c;
    }
    gen.exp()
}

/// Weyl operator `W(x)`: the exponential of the truncated generator
/// `Σᵢ (xᵢ aᵢ† − x̄ᵢ aᵢ)`. The generator is rotated onto the first mode by an exact
/// `Exp(R)`, where it splits into independent single-mode blocks.
pub fn weyl(x: &DVector<Complex64>, space: &Arc<FockSpace>) -> Result<FockOperator> {
    let d = space.modes();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    let r = x.norm();
    if r == 0.0 {
        return Ok(FockOperator::identity(space.clone()));
    }
    let cutoff = space.cutoff();
    let singles: Vec<DMatrix<f64>> = (0..=cutoff).map(|m| single_mode_displacement(r, m)).collect();
    let n = space.dim();
    let mut rotated = DMatrix::<Complex64>::zeros(n, n);
    let mut probe: Occupation = vec![0; d];
    for idx in 0..n {
        let occ = space.occupation(idx);
        let rest: u32 = occ[1..].iter().sum();
        let m = cutoff - rest as usize;
        let j = occ[0] as usize;
        probe.copy_from_slice(occ);
        for jp in 0..=m {
            probe[0] = jp as u32;
            let row = space.index_of(&probe).expect("same rest, within cutoff");
            rotated[(row, idx)] = Complex64::new(singles[m][(jp, j)], 0.0);
        }
    }
    let rot = unitary_with_first_column(x);
    let blocks = second_quantize_blocks(&rot, space);
    let matrix = blocks.adjoint().right_mul(&blocks.left_mul(&rotated));
    FockOperator::new(space.clone(), space.clone(), matrix, cutoff)
}

/// Candidate projective phases for `W(x)W(y) = c·W(x+y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeylPhase {
    /// `c = e^{−i Im⟨x,y⟩}`.
    MinusImXY,
    /// `c = e^{−i Im⟨y,x⟩} = e^{+i Im⟨x,y⟩}`.
    MinusImYX,
}

impl WeylPhase {
    pub fn factor(self, x: &DVector<Complex64>, y: &DVector<Complex64>) -> Complex64 {
        let xy = y.dotc(x);
        let im = match self {
            WeylPhase::MinusImXY => xy.im,
            WeylPhase::MinusImYX => -xy.im,
        };
        Complex64::new(0.0, -im).exp()
    }
}

/// `‖(W(x)W(y) − c·W(x+y))·P_{≤sector}‖` for the chosen phase convention.
pub fn ccr_residual(
    x: &DVector<Complex64>,
    y: &DVector<Complex64>,
    space: &Arc<FockSpace>,
    sector: usize,
    phase: WeylPhase,
) -> Result<f64> {
    let wx = weyl(x, space)?;
    let wy = weyl(y, space)?;
    let wxy = weyl(&(x + y), space)?;
    let lhs = &wx.matrix * wy.restricted(sector);
    let rhs = wxy.restricted(sector) * phase.factor(x, y);
    Ok(op_norm(&(lhs - rhs)))
}

/// `‖P_{≤sector}(W(x)e_N(y) − e^{−½‖x‖²−⟨y,x⟩} e_N(y+x))‖`.
pub fn weyl_action_residual(
    x: &DVector<Complex64>,
    y: &DVector<Complex64>,
    space: &Arc<FockSpace>,
    sector: usize,
) -> Result<f64> {
    let w = weyl(x, space)?;
    let ey = exponential_vector(y, space)?;
    let exy = exponential_vector(&(x + y), space)?;
    let factor = (Complex64::new(-0.5 * x.norm_squared(), 0.0) - x.dotc(y)).exp();
    let lhs = w.apply(&ey)?.coeffs;
    let k = space.dim_upto(sector);
    let diff = lhs.rows(0, k) - exy.coeffs.rows(0, k) * factor;
    Ok(diff.norm())
}
