//! Small dense linear-algebra helpers on top of nalgebra with deterministic ordering.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Symmetric eigendecomposition, eigenvalues sorted descending; ties keep input order.
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Singular value decomposition `m = u · diag(s) · vt`, sorted descending.
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular: DVector<f64>,
    pub vt: DMatrix<f64>,
}

pub fn svd_sorted(m: &DMatrix<f64>) -> SortedSvd {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested u");
    let vt = svd.v_t.expect("requested v_t");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut su = DMatrix::zeros(u.nrows(), k);
    let mut svt = DMatrix::zeros(k, vt.ncols());
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        svt.set_row(dst, &vt.row(src));
    }
    let singular = DVector::from_iterator(k, order.iter().map(|&i| svd.singular_values[i]));
    SortedSvd { u: su, singular, vt: svt }
}

/// `f(m)` for symmetric `m`, applied through the eigendecomposition.
pub fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen_sorted(m);
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| vectors[(i, j)] * f(values[j]));
    &scaled * vectors.transpose()
}

/// Largest singular value (spectral norm) of a complex matrix.
pub fn op_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() >= m.ncols() { m.adjoint() * m } else { m * m.adjoint() };
    let eig = gram.symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max).max(0.0).sqrt()
}

pub fn op_norm_real(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Toeplitz symmetric matrix from its first row.
pub fn toeplitz(first_row: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| first_row[i.abs_diff(j)])
}

/// Complex unitary whose first column is `v/‖v‖` (exactly, including phase).
pub fn unitary_with_first_column(v: &DVector<Complex64>) -> DMatrix<Complex64> {
    let d = v.len();
    let norm = v.norm();
    assert!(norm > 0.0, "zero vector has no direction");
    let unit = v / Complex64::new(norm, 0.0);
    // Seed with the direction followed by the coordinate axes least aligned with it.
    let pivot = (0..d)
        .max_by(|&i, &j| unit[i].norm().total_cmp(&unit[j].norm()))
        .unwrap_or(0);
    let mut seed = DMatrix::<Complex64>::zeros(d, d);
    seed.set_column(0, &unit);
    let mut col = 1;
    for axis in 0..d {
        if axis == pivot {
            continue;
        }
        seed[(axis, col)] = Complex64::new(1.0, 0.0);
        col += 1;
    }
    let mut q = seed.qr().q();
    let phase = (q.column(0).adjoint() * &unit)[(0, 0)];
    let phase = phase / phase.norm();
    let fixed = q.column(0) * phase;
    q.set_column(0, &fixed);
    q
}
