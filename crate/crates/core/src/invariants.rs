//! Elementary sets, the subspaces `G_E` they select under a kernel metric, and
//! liminf/limsup diagnostics along sequences of elementary sets.
//!
//! The algebra-level condition is replaced by the equivalent subspace condition:
//! `liminf G_{Eₙ} = G_{(0,1)}` together with `limsup G_{Eₙ^c} = {0}`. On a finite grid
//! neither limit is decidable, so the output is a set of plateau and decay
//! diagnostics plus a configurable verdict.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{gram_projector, GramMap};
use crate::kernels::Kernel;
use crate::linalg::sym_eigen_sorted;
use crate::sumsys::SumSystem;
use crate::table::{fmt_f64, Table};
use crate::units::y_prime;

/// Finite union of closed subintervals of `[0, 1]`, kept sorted and disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementarySet {
    intervals: Vec<(f64, f64)>,
}

impl ElementarySet {
    pub fn new(intervals: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut iv: Vec<(f64, f64)> = intervals.into_iter().collect();
        for &(a, b) in &iv {
            if !(0.0 <= a && a <= b && b <= 1.0) {
                return Err(Error::InvalidParameter(format!("[{a}, {b}] is not a subinterval of [0, 1]")));
            }
        }
        iv.retain(|&(a, b)| b > a);
        iv.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
        for (a, b) in iv {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(ElementarySet { intervals: merged })
    }

    pub fn empty() -> Self {
        ElementarySet { intervals: Vec::new() }
    }

    pub fn full() -> Self {
        ElementarySet { intervals: vec![(0.0, 1.0)] }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Closure of `[0,1] ∖ E`; agrees with the complement up to finitely many points.
    pub fn complement(&self) -> ElementarySet {
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        let mut cursor = 0.0;
        for &(a, b) in &self.intervals {
            if a > cursor {
                out.push((cursor, a));
            }
            cursor = b;
        }
        if cursor < 1.0 {
            out.push((cursor, 1.0));
        }
        ElementarySet { intervals: out }
    }

    /// `ℓ(E ∩ (a, b))`.
    pub fn overlap(&self, a: f64, b: f64) -> f64 {
        self.intervals.iter().map(|&(l, r)| (r.min(b) - l.max(a)).max(0.0)).sum()
    }

    pub fn contains_set(&self, other: &ElementarySet) -> bool {
        other.intervals.iter().all(|&(a, b)| self.intervals.iter().any(|&(l, r)| l <= a && b <= r))
    }

    /// `ℓ(E ∩ cell_i)` for the `n` cells of width `1/n`.
    pub fn cell_measures(&self, n: usize) -> DVector<f64> {
        let h = 1.0 / n as f64;
        DVector::from_fn(n, |i, _| self.overlap(i as f64 * h, (i + 1) as f64 * h))
    }

    /// Cells of width `1/n` lying inside `E`; fails unless every endpoint is on the grid.
    pub fn cell_mask(&self, n: usize) -> Result<Vec<bool>> {
        let mut mask = vec![false; n];
        for &(a, b) in &self.intervals {
            let (i, j) = (grid_index(a, n)?, grid_index(b, n)?);
            mask[i..j].iter_mut().for_each(|m| *m = true);
        }
        Ok(mask)
    }
}

fn grid_index(x: f64, n: usize) -> Result<usize> {
    let r = x * n as f64;
    if (r - r.round()).abs() > 1e-9 * r.abs().max(1.0) {
        return Err(Error::Misaligned(format!("{x} is not on the grid of width 1/{n}")));
    }
    Ok(r.round() as usize)
}

fn from_cells(mask: &[bool]) -> ElementarySet {
    let n = mask.len() as f64;
    let mut out = Vec::new();
    let mut start = None;
    for (i, &m) in mask.iter().chain(std::iter::once(&false)).enumerate() {
        match (m, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s as f64 / n, i as f64 / n));
                start = None;
            }
            _ => {}
        }
    }
    ElementarySet { intervals: out }
}

/// `E₀ ⊂ E₁ ⊂ … ⊂ E_depth` on the grid of width `h`.
///
/// `E₀` is the centered closed interval of length `keep`; step `n` fills a centered part
/// of every gap of `E_{n−1}` so that `ℓ(Eₙ^c) = (1−keep)^{n+1}`. Gap sizes are rounded to
/// whole cells with the rounding error carried from gap to gap, which keeps the total
/// exact whenever `(1−keep)^{n+1}/h` is an integer.
pub fn cantor_sequence(depth: usize, keep_fraction: f64, h: f64) -> Result<Vec<ElementarySet>> {
    if !(keep_fraction > 0.0 && keep_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("keep fraction {keep_fraction} outside (0, 1)")));
    }
    let n = (1.0 / h).round() as usize;
    if n == 0 || ((n as f64) * h - 1.0).abs() > 1e-9 {
        return Err(Error::Misaligned(format!("h = {h} does not tile [0, 1]")));
    }
    let shrink = 1.0 - keep_fraction;
    let mut mask = vec![false; n];
    let mut out = Vec::with_capacity(depth + 1);
    for step in 0..=depth {
        let ideal = n as f64 * shrink.powi(step as i32 + 1);
        if ideal < 1.0 {
            return Err(Error::GridExhausted(format!(
                "step {step} needs a complement of {ideal:.3} cells at h = {h}"
            )));
        }
        let gaps = runs(&mask, false);
        let mut carried = 0.0;
        let mut assigned = 0usize;
        for (g, &(start, len)) in gaps.iter().enumerate() {
            carried += len as f64 * shrink;
            let remain = ((carried.round() as usize).saturating_sub(assigned)).min(len);
            assigned += remain;
            let fill = len - remain;
            let left = if remain % 2 == 1 && g % 2 == 1 { remain / 2 + 1 } else { remain / 2 };
            mask[start + left..start + left + fill].iter_mut().for_each(|m| *m = true);
        }
        out.push(from_cells(&mask));
    }
    Ok(out)
}

/// Maximal runs `(start, len)` of cells equal to `value`.
fn runs(mask: &[bool], value: bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < mask.len() {
        if mask[i] == value {
            let s = i;
            while i < mask.len() && mask[i] == value {
                i += 1;
            }
            out.push((s, i - s));
        } else {
            i += 1;
        }
    }
    out
}

fn unit_interval_cells(sys: &SumSystem) -> Result<usize> {
    sys.index(1.0)
}

/// Gram-orthogonal projector of `G_{(0,1)}` onto the span of the cells inside `E`.
pub fn subspace_projector(sys: &SumSystem, e: &ElementarySet) -> Result<GramMap> {
    let whole = sys.space(0.0, 1.0)?;
    let n = unit_interval_cells(sys)?;
    let mask = e.cell_mask(n)?;
    if whole.space.is_diagonal() {
        let diag = DVector::from_fn(n, |i, _| if mask[i] { 1.0 } else { 0.0 });
        return GramMap::new(whole.space.clone(), whole.space, DMatrix::from_diagonal(&diag));
    }
    let cols: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    let basis = DMatrix::from_fn(n, cols.len(), |i, j| if cols[j] == i { 1.0 } else { 0.0 });
    let p = gram_projector(&whole.space, &basis)?;
    GramMap::new(whole.space.clone(), whole.space, p)
}

/// `1_{(0,1)}` followed by eight spectral probes: the leading Gram eigenvectors, or
/// the first cosine modes when the Gram is a multiple of the identity.
pub fn default_probes(sys: &SumSystem) -> Result<Vec<DVector<f64>>> {
    let n = unit_interval_cells(sys)?;
    let gram = sys.gram(0.0, 1.0)?;
    let mut probes = vec![DVector::from_element(n, 1.0)];
    let count = 8.min(n);
    let (vals, vecs) = sym_eigen_sorted(&gram);
    let degenerate = (vals[0] - vals[n - 1]).abs() <= 1e-12 * vals[0].abs();
    for k in 0..count {
        if degenerate {
            let c = DVector::from_fn(n, |i, _| (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / n as f64).cos());
            probes.push(c);
        } else {
            probes.push(vecs.column(k).into_owned());
        }
    }
    Ok(probes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceDiag {
    pub measures: Vec<f64>,
    /// `residuals[p][n] = ‖(I − P_{G_{Eₙ}}) x_p‖`.
    pub residuals: Vec<Vec<f64>>,
    /// `complement_norms[p][n] = ‖P_{G_{Eₙ^c}} x_p‖`.
    pub complement_norms: Vec<Vec<f64>>,
    /// `‖y′_{Eₙ^c}‖` per step.
    pub yprime_norms: Vec<f64>,
    pub probe_norms: Vec<f64>,
}

fn probe_norms(sys: &SumSystem, probes: &[DVector<f64>]) -> Result<Vec<f64>> {
    let whole = sys.space(0.0, 1.0)?;
    probes.iter().map(|x| whole.space.norm(x)).collect()
}

/// `‖(I − P_{G_{Eₙ}}) x‖` per probe and step.
pub fn liminf_residuals(sys: &SumSystem, seq: &[ElementarySet], probes: &[DVector<f64>]) -> Result<Vec<Vec<f64>>> {
    let whole = sys.space(0.0, 1.0)?;
    let projectors: Vec<GramMap> = seq.par_iter().map(|e| subspace_projector(sys, e)).collect::<Result<_>>()?;
    probes
        .iter()
        .map(|x| projectors.iter().map(|p| whole.space.norm(&(x - p.apply(x)?))).collect())
        .collect()
}

/// `‖P_{G_{Eₙ^c}} x‖` per probe and step, and `‖y′_{Eₙ^c}‖` per step.
pub fn limsup_diagnostic(
    sys: &SumSystem,
    seq: &[ElementarySet],
    probes: &[DVector<f64>],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let whole = sys.space(0.0, 1.0)?;
    let complements: Vec<ElementarySet> = seq.iter().map(|e| e.complement()).collect();
    let projectors: Vec<GramMap> =
        complements.par_iter().map(|e| subspace_projector(sys, e)).collect::<Result<_>>()?;
    let norms = probes
        .iter()
        .map(|x| projectors.iter().map(|p| whole.space.norm(&p.apply(x)?)).collect())
        .collect::<Result<_>>()?;
    let yprime = complements
        .par_iter()
        .map(|e| {
            let y = y_prime(sys, e)?;
            whole.space.norm(&y.coords)
        })
        .collect::<Result<_>>()?;
    Ok((norms, yprime))
}

pub fn subspace_diagnostics(sys: &SumSystem, seq: &[ElementarySet], probes: &[DVector<f64>]) -> Result<SubspaceDiag> {
    let residuals = liminf_residuals(sys, seq, probes)?;
    let (complement_norms, yprime_norms) = limsup_diagnostic(sys, seq, probes)?;
    Ok(SubspaceDiag {
        measures: seq.iter().map(|e| e.complement().measure()).collect(),
        residuals,
        complement_norms,
        yprime_norms,
        probe_norms: probe_norms(sys, probes)?,
    })
}

impl SubspaceDiag {
    /// Largest relative liminf residual per step.
    pub fn max_residual(&self) -> Vec<f64> {
        relative_max(&self.residuals, &self.probe_norms)
    }

    /// Largest relative complement norm per step.
    pub fn max_complement(&self) -> Vec<f64> {
        relative_max(&self.complement_norms, &self.probe_norms)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(["step", "complement_measure", "max_residual", "max_complement_norm", "yprime_norm"]);
        let (r, c) = (self.max_residual(), self.max_complement());
        for n in 0..self.measures.len() {
            t.push(vec![n.to_string(), fmt_f64(self.measures[n]), fmt_f64(r[n]), fmt_f64(c[n]), fmt_f64(self.yprime_norms[n])]);
        }
        t
    }
}

fn relative_max(rows: &[Vec<f64>], norms: &[f64]) -> Vec<f64> {
    let steps = rows.first().map_or(0, Vec::len);
    (0..steps)
        .map(|n| {
            rows.iter()
                .zip(norms)
                .filter(|(_, &nx)| nx > 0.0)
                .map(|(row, &nx)| row[n] / nx)
                .fold(0.0, f64::max)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Relative liminf residual at the final step counted as "full".
    pub liminf_tol: f64,
    /// Final/first complement diagnostic ratio counted as "decaying".
    pub decay_ratio: f64,
    /// Relative complement mass that must persist over the final quarter.
    pub plateau_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { liminf_tol: 0.2, decay_ratio: 0.25, plateau_tol: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWithTypeI,
    TypeIiiSignature,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub complement_measure: f64,
    pub max_residual: f64,
    pub max_complement_norm: f64,
    pub yprime_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub sequence: Vec<ElementarySet>,
    pub kernel: Kernel,
    pub per_step: Vec<StepRecord>,
    pub liminf_full: bool,
    pub complement_decay: f64,
    pub verdict: Verdict,
    pub thresholds: Thresholds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Combines the liminf and complement diagnostics into a verdict.
///
/// Full liminf with decaying complements reads as type I; full liminf with a
/// final-quarter plateau of complement mass reads as a type III signature.
pub fn classify(
    sys: &SumSystem,
    seq: &[ElementarySet],
    probes: &[DVector<f64>],
    thresholds: Thresholds,
) -> Result<VerdictRecord> {
    if seq.is_empty() {
        return Ok(VerdictRecord {
            sequence: Vec::new(),
            kernel: *sys.kernel(),
            per_step: Vec::new(),
            liminf_full: false,
            complement_decay: f64::NAN,
            verdict: Verdict::Inconclusive,
            thresholds,
            note: Some("empty sequence: no diagnostics to combine".into()),
        });
    }
    let diag = subspace_diagnostics(sys, seq, probes)?;
    Ok(verdict_from(sys, seq, &diag, thresholds))
}

pub fn verdict_from(sys: &SumSystem, seq: &[ElementarySet], diag: &SubspaceDiag, thresholds: Thresholds) -> VerdictRecord {
    let residual = diag.max_residual();
    let complement = diag.max_complement();
    let last = seq.len() - 1;
    let liminf_full = residual[last] <= thresholds.liminf_tol;
    let complement_decay = if complement[0] > 0.0 { complement[last] / complement[0] } else { 0.0 };
    let decaying = complement_decay <= thresholds.decay_ratio;
    let tail = &complement[last - (seq.len() / 4)..];
    let plateau = tail.iter().all(|&c| c >= thresholds.plateau_tol);
    let verdict = match (liminf_full, decaying, plateau) {
        (true, true, _) => Verdict::ConsistentWithTypeI,
        (true, false, true) => Verdict::TypeIiiSignature,
        _ => Verdict::Inconclusive,
    };
    let per_step = (0..seq.len())
        .map(|n| StepRecord {
            step: n,
            complement_measure: diag.measures[n],
            max_residual: residual[n],
            max_complement_norm: complement[n],
            yprime_norm: diag.yprime_norms[n],
        })
        .collect();
    VerdictRecord {
        sequence: seq.to_vec(),
        kernel: *sys.kernel(),
        per_step,
        liminf_full,
        complement_decay,
        verdict,
        thresholds,
        note: None,
    }
}
