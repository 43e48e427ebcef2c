//! Finite-dimensional real Hilbert spaces presented by Gram matrices, maps between
//! them with Gram-metric adjoints, and the class of invertible maps whose
//! positive polar part is a Hilbert–Schmidt perturbation of the identity.
//!
//! Every space carries a canonical orthonormal frame, the columns of `K^{-1/2}`.
//! Coordinates with respect to that frame are called *mode coordinates*; they are
//! what the Fock-space layer works in.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{svd_sorted, sym_eigen_sorted};

/// Relative floor on the smallest Gram eigenvalue.
pub const PD_FLOOR: f64 = 1e-12;
/// Relative floor on the smallest singular value for invertibility.
pub const INV_FLOOR: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone)]
pub struct GramSpace {
    gram: DMatrix<f64>,
    label: String,
    chol: Cholesky<f64, Dyn>,
    sqrt: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
    min_eig: f64,
    max_eig: f64,
    diagonal: bool,
}

impl fmt::Debug for GramSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GramSpace")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .field("min_eig", &self.min_eig)
            .field("max_eig", &self.max_eig)
            .finish()
    }
}

impl PartialEq for GramSpace {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.gram == other.gram
    }
}

impl GramSpace {
    pub fn new(gram: DMatrix<f64>, label: impl Into<String>) -> Result<Self> {
        let n = gram.nrows();
        if n == 0 {
            return Err(Error::InvalidParameter("a gram space needs positive dimension".into()));
        }
        if gram.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: gram.ncols() });
        }
        let scale = gram.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let asym = (&gram - gram.transpose()).iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(asym / scale));
        }
        let gram = (&gram + gram.transpose()) * 0.5;
        let (values, vectors) = sym_eigen_sorted(&gram);
        let max_eig = values[0];
        let min_eig = values[n - 1];
        let floor = PD_FLOOR * max_eig.abs();
        if min_eig.is_nan() || min_eig <= floor {
            return Err(Error::NotPositiveDefinite { min: min_eig, floor });
        }
        let chol = Cholesky::new(gram.clone())
            .ok_or(Error::NotPositiveDefinite { min: min_eig, floor })?;
        let weighted = |f: &dyn Fn(f64) -> f64| {
            let scaled = DMatrix::from_fn(n, n, |i, j| vectors[(i, j)] * f(values[j]));
            &scaled * vectors.transpose()
        };
        let sqrt = weighted(&|x: f64| x.sqrt());
        let inv_sqrt = weighted(&|x: f64| 1.0 / x.sqrt());
        let diagonal = (0..n).all(|j| (0..n).all(|i| i == j || gram[(i, j)] == 0.0));
        Ok(GramSpace { gram, label: label.into(), chol, sqrt, inv_sqrt, min_eig, max_eig, diagonal })
    }

    pub fn euclidean(dim: usize, label: impl Into<String>) -> Result<Self> {
        GramSpace::new(DMatrix::identity(dim, dim), label)
    }

    /// Block-diagonal Gram of the abstract direct sum.
    pub fn direct_sum(a: &GramSpace, b: &GramSpace) -> Result<Self> {
        let (m, n) = (a.dim(), b.dim());
        let mut gram = DMatrix::zeros(m + n, m + n);
        gram.view_mut((0, 0), (m, m)).copy_from(&a.gram);
        gram.view_mut((m, m), (n, n)).copy_from(&b.gram);
        GramSpace::new(gram, format!("{} ⊕ {}", a.label, b.label))
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn condition(&self) -> f64 {
        self.max_eig / self.min_eig
    }

    /// Diagonal Grams are solved by division, which keeps Lebesgue identities exact.
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig
    }

    fn check_len(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(())
    }

    /// `xᵀ K y`.
    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        self.check_len(x)?;
        self.check_len(y)?;
        Ok((x.transpose() * &self.gram * y)[(0, 0)])
    }

    pub fn norm(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.inner(x, x)?.max(0.0).sqrt())
    }

    /// Solves `K y = b`.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(b)?;
        if self.diagonal {
            return Ok(b.component_div(&self.gram.diagonal()));
        }
        Ok(self.chol.solve(b))
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn sqrt_gram(&self) -> &DMatrix<f64> {
        &self.sqrt
    }

    pub fn inv_sqrt_gram(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }

    pub fn to_modes(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.sqrt * x
    }

    pub fn from_modes(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.inv_sqrt * y
    }
}

/// A vector `re + i·im` of the complexification.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    pub re: DVector<f64>,
    pub im: DVector<f64>,
}

impl ComplexVector {
    pub fn new(re: DVector<f64>, im: DVector<f64>) -> Self {
        assert_eq!(re.len(), im.len(), "real and imaginary parts differ in length");
        ComplexVector { re, im }
    }

    pub fn real(re: DVector<f64>) -> Self {
        let n = re.len();
        ComplexVector { re, im: DVector::zeros(n) }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    /// Inner product of the complexification, linear in the first argument.
    pub fn inner(&self, other: &ComplexVector, space: &GramSpace) -> Result<Complex64> {
        let rr = space.inner(&self.re, &other.re)?;
        let ii = space.inner(&self.im, &other.im)?;
        let ir = space.inner(&self.im, &other.re)?;
        let ri = space.inner(&self.re, &other.im)?;
        Ok(Complex64::new(rr + ii, ir - ri))
    }

    pub fn norm_sq(&self, space: &GramSpace) -> Result<f64> {
        Ok(space.inner(&self.re, &self.re)? + space.inner(&self.im, &self.im)?)
    }

    pub fn to_modes(&self, space: &GramSpace) -> DVector<Complex64> {
        let re = space.to_modes(&self.re);
        let im = space.to_modes(&self.im);
        DVector::from_fn(re.len(), |i, _| Complex64::new(re[i], im[i]))
    }

    pub fn from_modes(modes: &DVector<Complex64>, space: &GramSpace) -> Self {
        let re = DVector::from_fn(modes.len(), |i, _| modes[i].re);
        let im = DVector::from_fn(modes.len(), |i, _| modes[i].im);
        ComplexVector { re: space.from_modes(&re), im: space.from_modes(&im) }
    }
}

#[derive(Debug, Clone)]
pub struct GramMap {
    source: Arc<GramSpace>,
    target: Arc<GramSpace>,
    matrix: DMatrix<f64>,
}

fn same_space(a: &Arc<GramSpace>, b: &Arc<GramSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl GramMap {
    pub fn new(source: Arc<GramSpace>, target: Arc<GramSpace>, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != target.dim() {
            return Err(Error::DimensionMismatch { expected: target.dim(), found: matrix.nrows() });
        }
        if matrix.ncols() != source.dim() {
            return Err(Error::DimensionMismatch { expected: source.dim(), found: matrix.ncols() });
        }
        Ok(GramMap { source, target, matrix })
    }

    pub fn identity(space: Arc<GramSpace>) -> Self {
        let n = space.dim();
        GramMap { source: space.clone(), target: space, matrix: DMatrix::identity(n, n) }
    }

    pub fn source(&self) -> &Arc<GramSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<GramSpace> {
        &self.target
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.source.check_len(x)?;
        Ok(&self.matrix * x)
    }

    /// Adjoint with respect to the two Gram metrics: `K_src⁻¹ Mᵀ K_tgt`.
    pub fn adjoint(&self) -> GramMap {
        let rhs = self.matrix.transpose() * self.target.gram();
        GramMap {
            source: self.target.clone(),
            target: self.source.clone(),
            matrix: self.source.solve_matrix(&rhs),
        }
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &GramMap) -> Result<GramMap> {
        if !same_space(&first.target, &self.source) {
            return Err(Error::IncompatibleSpaces(format!(
                "cannot compose: target '{}' is not source '{}'",
                first.target.label(),
                self.source.label()
            )));
        }
        Ok(GramMap {
            source: first.source.clone(),
            target: self.target.clone(),
            matrix: &self.matrix * &first.matrix,
        })
    }

    pub fn direct_sum(a: &GramMap, b: &GramMap) -> Result<GramMap> {
        let source = Arc::new(GramSpace::direct_sum(&a.source, &b.source)?);
        let target = Arc::new(GramSpace::direct_sum(&a.target, &b.target)?);
        let mut matrix = DMatrix::zeros(target.dim(), source.dim());
        matrix.view_mut((0, 0), a.matrix.shape()).copy_from(&a.matrix);
        matrix.view_mut(a.matrix.shape(), b.matrix.shape()).copy_from(&b.matrix);
        Ok(GramMap { source, target, matrix })
    }

    pub fn inverse(&self) -> Result<GramMap> {
        let report = s_class_check(self, INV_FLOOR);
        if !report.invertible {
            return Err(Error::NotInvertible {
                smallest: report.smallest_singular,
                largest: report.largest_singular,
            });
        }
        let inv = self.matrix.clone().try_inverse().ok_or(Error::NotInvertible {
            smallest: report.smallest_singular,
            largest: report.largest_singular,
        })?;
        Ok(GramMap { source: self.target.clone(), target: self.source.clone(), matrix: inv })
    }

    /// The map in mode coordinates: `K_tgt^{1/2} M K_src^{-1/2}`.
    pub fn mode_matrix(&self) -> DMatrix<f64> {
        self.target.sqrt_gram() * &self.matrix * self.source.inv_sqrt_gram()
    }

    /// Builds a map from its mode-coordinate matrix.
    pub fn from_mode_matrix(
        source: Arc<GramSpace>,
        target: Arc<GramSpace>,
        modes: &DMatrix<f64>,
    ) -> Result<GramMap> {
        let matrix = target.inv_sqrt_gram() * modes * source.sqrt_gram();
        GramMap::new(source, target, matrix)
    }

    /// Operator norm in the Gram metrics.
    pub fn norm(&self) -> f64 {
        crate::linalg::op_norm_real(&self.mode_matrix())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SClassReport {
    pub smallest_singular: f64,
    pub largest_singular: f64,
    /// `Σ(σᵢ − 1)²` over the singular values of the positive polar part.
    pub hs_defect: f64,
    pub invertible: bool,
    pub verdict: bool,
    pub singular_values: Vec<f64>,
}

pub fn s_class_check(m: &GramMap, inv_floor: f64) -> SClassReport {
    let svd = svd_sorted(&m.mode_matrix());
    let singular_values: Vec<f64> = svd.singular.iter().cloned().collect();
    let largest = singular_values.first().cloned().unwrap_or(0.0);
    let smallest = singular_values.last().cloned().unwrap_or(0.0);
    let square = m.source.dim() == m.target.dim();
    let invertible = square && smallest > inv_floor * largest;
    let hs_defect: f64 = singular_values.iter().map(|s| (s - 1.0).powi(2)).sum();
    SClassReport {
        smallest_singular: smallest,
        largest_singular: largest,
        hs_defect,
        invertible,
        verdict: invertible && hs_defect.is_finite(),
        singular_values,
    }
}

/// `A = U·A₀` with `U` a Gram isometry and `A₀ = (A*A)^{1/2}`.
pub fn polar_parts(m: &GramMap) -> Result<(GramMap, GramMap)> {
    let report = s_class_check(m, INV_FLOOR);
    if !report.invertible {
        return Err(Error::NotInvertible {
            smallest: report.smallest_singular,
            largest: report.largest_singular,
        });
    }
    let svd = svd_sorted(&m.mode_matrix());
    let v = svd.vt.transpose();
    let unitary = &svd.u * &svd.vt;
    let positive = &v * DMatrix::from_diagonal(&svd.singular) * &svd.vt;
    let u = GramMap::from_mode_matrix(m.source.clone(), m.target.clone(), &unitary)?;
    let a0 = GramMap::from_mode_matrix(m.source.clone(), m.source.clone(), &positive)?;
    Ok((u, a0))
}

/// Gram-orthogonal projector `B (BᵀKB)⁻¹ BᵀK` onto the column span of `basis`.
pub fn gram_projector(space: &GramSpace, basis: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = space.dim();
    if basis.nrows() != d {
        return Err(Error::DimensionMismatch { expected: d, found: basis.nrows() });
    }
    if basis.ncols() == 0 {
        return Ok(DMatrix::zeros(d, d));
    }
    let kb = space.gram() * basis;
    let small = basis.transpose() * &kb;
    let (vals, _) = sym_eigen_sorted(&small);
    let (max, min) = (vals[0], vals[vals.len() - 1]);
    let chol = Cholesky::new(small).filter(|_| min > PD_FLOOR * max).ok_or(Error::IllConditioned {
        condition: max / min.max(f64::MIN_POSITIVE),
        residual: f64::NAN,
    })?;
    Ok(basis * chol.solve(&kb.transpose()))
}

/// `u + iv ↦ A u + i (A⁻¹)* v`.
pub fn symplectic_extend(a: &GramMap, z: &ComplexVector) -> Result<ComplexVector> {
    let inv_adj = a.inverse()?.adjoint();
    Ok(ComplexVector { re: a.apply(&z.re)?, im: inv_adj.apply(&z.im)? })
}

/// Defect of the addition map `⊕xᵢ ↦ Σxᵢ` from the direct sum of the parts (each
/// given by a basis in ambient coordinates, with the induced Gram) onto the ambient
/// space. Zero exactly when the parts are mutually orthogonal.
pub fn quasi_orthogonality_defect(ambient: &Arc<GramSpace>, parts: &[DMatrix<f64>]) -> Result<f64> {
    let d = ambient.dim();
    let mut spaces = Vec::with_capacity(parts.len());
    for (i, basis) in parts.iter().enumerate() {
        if basis.nrows() != d {
            return Err(Error::DimensionMismatch { expected: d, found: basis.nrows() });
        }
        let gram = basis.transpose() * ambient.gram() * basis;
        spaces.push(GramSpace::new(gram, format!("part {i}"))?);
    }
    let total: usize = parts.iter().map(|b| b.ncols()).sum();
    if total != d {
        return Err(Error::NotInvertible { smallest: 0.0, largest: 0.0 });
    }
    let mut source = spaces[0].clone();
    for s in &spaces[1..] {
        source = GramSpace::direct_sum(&source, s)?;
    }
    let mut matrix = DMatrix::zeros(d, d);
    let mut col = 0;
    for basis in parts {
        matrix.view_mut((0, col), basis.shape()).copy_from(basis);
        col += basis.ncols();
    }
    let map = GramMap::new(Arc::new(source), ambient.clone(), matrix)?;
    let report = s_class_check(&map, INV_FLOOR);
    if !report.invertible {
        return Err(Error::NotInvertible {
            smallest: report.smallest_singular,
            largest: report.largest_singular,
        });
    }
    Ok(report.hs_defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn euclid(n: usize) -> Arc<GramSpace> {
        Arc::new(GramSpace::euclidean(n, format!("R^{n}")).unwrap())
    }

    fn e(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn inner_examples() {
        let g = euclid(2);
        assert_eq!(g.inner(&e(2, 0), &e(2, 0)).unwrap(), 1.0);
        assert_eq!(g.inner(&e(2, 0), &e(2, 1)).unwrap(), 0.0);
        let k = GramSpace::new(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]), "k").unwrap();
        assert_eq!(k.inner(&e(2, 0), &e(2, 1)).unwrap(), 1.0);
        assert!(matches!(
            k.inner(&e(3, 0), &e(2, 1)),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn rejects_bad_grams() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(GramSpace::new(asym, "a"), Err(Error::NotSymmetric(_))));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(GramSpace::new(indefinite, "b"), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn adjoint_examples() {
        let g2 = euclid(2);
        let (c, s) = (0.3_f64.cos(), 0.3_f64.sin());
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let m = GramMap::new(g2.clone(), g2.clone(), q.clone()).unwrap();
        assert!(crate::linalg::max_abs_diff(m.adjoint().matrix(), &q.transpose()) < 1e-14);

        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        let m = GramMap::new(g2.clone(), g2, d.clone()).unwrap();
        assert!(crate::linalg::max_abs_diff(m.adjoint().matrix(), &d) < 1e-14);

        // gram_src = 2I on R², gram_tgt = I on R¹, M = [1 0].
        let src = Arc::new(GramSpace::new(DMatrix::identity(2, 2) * 2.0, "2I").unwrap());
        let m = GramMap::new(src, euclid(1), DMatrix::from_row_slice(1, 2, &[1.0, 0.0])).unwrap();
        let adj = m.adjoint();
        assert_eq!(adj.matrix().shape(), (2, 1));
        assert!((adj.matrix()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!(adj.matrix()[(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn s_class_examples() {
        let g = euclid(3);
        let r = s_class_check(&GramMap::identity(g), INV_FLOOR);
        assert_eq!(r.hs_defect, 0.0);
        assert!(r.verdict);

        let g1 = euclid(1);
        let m = GramMap::new(g1.clone(), g1, DMatrix::from_element(1, 1, 2.0)).unwrap();
        let r = s_class_check(&m, INV_FLOOR);
        assert!((r.hs_defect - 1.0).abs() < 1e-14);
        assert!(r.verdict);
    }

    #[test]
    fn basel_partial_sums() {
        // Σ 1/i² brute force versus the defect of diag(1 + 1/i).
        for n in [1usize, 5, 50, 400] {
            let g = euclid(n);
            let d = DVector::from_fn(n, |i, _| 1.0 + 1.0 / (i as f64 + 1.0));
            let m = GramMap::new(g.clone(), g, DMatrix::from_diagonal(&d)).unwrap();
            let oracle: f64 = (1..=n).map(|i| 1.0 / (i * i) as f64).sum();
            let r = s_class_check(&m, INV_FLOOR);
            assert!((r.hs_defect - oracle).abs() < 1e-12);
        }
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        let tail_bound = 1.0 / 400.0;
        let g = euclid(400);
        let d = DVector::from_fn(400, |i, _| 1.0 + 1.0 / (i as f64 + 1.0));
        let m = GramMap::new(g.clone(), g, DMatrix::from_diagonal(&d)).unwrap();
        assert!(pi2_6 - s_class_check(&m, INV_FLOOR).hs_defect <= tail_bound);
    }

    #[test]
    fn singular_map_not_invertible() {
        let g = euclid(2);
        let m = GramMap::new(g.clone(), g, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        let r = s_class_check(&m, INV_FLOOR);
        assert!(!r.invertible && !r.verdict);
        assert!(polar_parts(&m).is_err());
        assert!(symplectic_extend(&m, &ComplexVector::real(e(2, 0))).is_err());
    }

    #[test]
    fn polar_examples() {
        let g = euclid(2);
        let (c, s) = (1.1_f64.cos(), 1.1_f64.sin());
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let (u, a0) = polar_parts(&GramMap::new(g.clone(), g.clone(), q.clone()).unwrap()).unwrap();
        assert!(crate::linalg::max_abs_diff(u.matrix(), &q) < 1e-12);
        assert!(crate::linalg::max_abs_diff(a0.matrix(), &DMatrix::identity(2, 2)) < 1e-12);

        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
        let (u, a0) = polar_parts(&GramMap::new(g.clone(), g, d.clone()).unwrap()).unwrap();
        assert!(crate::linalg::max_abs_diff(u.matrix(), &DMatrix::identity(2, 2)) < 1e-12);
        assert!(crate::linalg::max_abs_diff(a0.matrix(), &d) < 1e-12);
    }

    #[test]
    fn symplectic_examples() {
        let g = euclid(2);
        let z = ComplexVector::new(DVector::from_vec(vec![0.3, -1.0]), DVector::from_vec(vec![2.0, 0.1]));
        let out = symplectic_extend(&GramMap::identity(g.clone()), &z).unwrap();
        assert!((out.re.clone() - &z.re).norm() < 1e-14 && (out.im.clone() - &z.im).norm() < 1e-14);

        let (c, s) = (0.4_f64.cos(), 0.4_f64.sin());
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let out = symplectic_extend(&GramMap::new(g.clone(), g, q.clone()).unwrap(), &z).unwrap();
        assert!((out.re - &q * &z.re).norm() < 1e-12);
        assert!((out.im - &q * &z.im).norm() < 1e-12);

        let g1 = euclid(1);
        let a = GramMap::new(g1.clone(), g1, DMatrix::from_element(1, 1, 2.0)).unwrap();
        let z = ComplexVector::new(DVector::from_element(1, 1.0), DVector::from_element(1, 1.0));
        let out = symplectic_extend(&a, &z).unwrap();
        assert!((out.re[0] - 2.0).abs() < 1e-15 && (out.im[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quasi_orthogonality_examples() {
        let g = euclid(2);
        let parts = [DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), DMatrix::from_column_slice(2, 1, &[0.0, 1.0])];
        assert!(quasi_orthogonality_defect(&g, &parts).unwrap().abs() < 1e-14);
        assert!(quasi_orthogonality_defect(&g, &[DMatrix::identity(2, 2)]).unwrap().abs() < 1e-14);

        // θ = π/3: the addition map is [[1, cos θ], [0, sin θ]] with unit part Grams;
        // its Gram MᵀM = [[1, c], [c, 1]] has eigenvalues 1 ± c.
        let theta = std::f64::consts::FRAC_PI_3;
        let c = theta.cos();
        let oracle = ((1.0 + c).sqrt() - 1.0).powi(2) + ((1.0 - c).sqrt() - 1.0).powi(2);
        let parts = [
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DMatrix::from_column_slice(2, 1, &[theta.cos(), theta.sin()]),
        ];
        let defect = quasi_orthogonality_defect(&g, &parts).unwrap();
        assert!((defect - oracle).abs() < 1e-12, "{defect} vs {oracle}");
        assert!((defect - 0.136_296).abs() < 1e-6);

        let swapped = [parts[1].clone(), parts[0].clone()];
        assert!((quasi_orthogonality_defect(&g, &swapped).unwrap() - defect).abs() < 1e-12);

        let degenerate = [parts[0].clone(), parts[0].clone()];
        assert!(quasi_orthogonality_defect(&g, &degenerate).is_err());
    }

    fn spd(n: usize, seed: &[f64]) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()]);
        b.transpose() * &b + DMatrix::identity(n, n) * 0.5
    }

    fn matrix_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0f64..1.0, n * n)
    }

    proptest! {
        #[test]
        fn adjoint_is_involutive_and_defect_symmetric(
            a in matrix_strategy(3), gs in matrix_strategy(3), gt in matrix_strategy(3)
        ) {
            let src = Arc::new(GramSpace::new(spd(3, &gs), "s").unwrap());
            let tgt = Arc::new(GramSpace::new(spd(3, &gt), "t").unwrap());
            let m = DMatrix::from_row_slice(3, 3, &a) + DMatrix::identity(3, 3) * 2.0;
            let map = GramMap::new(src.clone(), tgt.clone(), m.clone()).unwrap();
            let adj = map.adjoint();
            prop_assert!(crate::linalg::max_abs_diff(adj.adjoint().matrix(), &m) < 1e-10);
            let x = DVector::from_vec(a[0..3].to_vec());
            let y = DVector::from_vec(a[3..6].to_vec());
            let lhs = tgt.inner(&map.apply(&x).unwrap(), &y).unwrap();
            let rhs = src.inner(&x, &adj.apply(&y).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
            let d1 = s_class_check(&map, INV_FLOOR).hs_defect;
            let d2 = s_class_check(&adj, INV_FLOOR).hs_defect;
            prop_assert!((d1 - d2).abs() < 1e-8 * (1.0 + d1));
        }

        #[test]
        fn symplectic_preserves_imaginary_part(
            a in matrix_strategy(3), g in matrix_strategy(3), v in proptest::collection::vec(-1.0f64..1.0, 12)
        ) {
            let space = Arc::new(GramSpace::new(spd(3, &g), "g").unwrap());
            let m = DMatrix::from_row_slice(3, 3, &a) + DMatrix::identity(3, 3) * 2.0;
            let map = GramMap::new(space.clone(), space.clone(), m).unwrap();
            let z1 = ComplexVector::new(DVector::from_vec(v[0..3].to_vec()), DVector::from_vec(v[3..6].to_vec()));
            let z2 = ComplexVector::new(DVector::from_vec(v[6..9].to_vec()), DVector::from_vec(v[9..12].to_vec()));
            let before = z1.inner(&z2, &space).unwrap().im;
            let s1 = symplectic_extend(&map, &z1).unwrap();
            let s2 = symplectic_extend(&map, &z2).unwrap();
            let after = s1.inner(&s2, &space).unwrap().im;
            prop_assert!((before - after).abs() < 1e-9);
        }

        #[test]
        fn polar_reconstructs(a in matrix_strategy(3), g in matrix_strategy(3)) {
            let space = Arc::new(GramSpace::new(spd(3, &g), "g").unwrap());
            let m = DMatrix::from_row_slice(3, 3, &a) + DMatrix::identity(3, 3) * 2.0;
            let map = GramMap::new(space.clone(), space.clone(), m.clone()).unwrap();
            let (u, a0) = polar_parts(&map).unwrap();
            let rec = u.compose(&a0).unwrap();
            prop_assert!(crate::linalg::max_abs_diff(rec.matrix(), &m) <= 1e-8 * m.norm());
            let utu = u.adjoint().compose(&u).unwrap();
            prop_assert!(crate::linalg::max_abs_diff(utu.matrix(), &DMatrix::identity(3, 3)) < 1e-8);
            let a0_adj = a0.adjoint();
            prop_assert!(crate::linalg::max_abs_diff(a0_adj.matrix(), a0.matrix()) < 1e-8);
            let (vals, _) = sym_eigen_sorted(&a0.mode_matrix());
            prop_assert!(vals.iter().all(|&x| x > 0.0));
        }
    }
}
