//! Gram-metric spaces, the 𝒮-class test, polar parts and the symplectic extension.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use sumsys_core::hilbert::{polar_parts, s_class_check, symplectic_extend, ComplexVector, GramMap, GramSpace, INV_FLOOR};

fn main() -> sumsys_core::Result<()> {
    let src = Arc::new(GramSpace::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]), "K")?);
    let tgt = Arc::new(GramSpace::euclidean(2, "R2")?);
    let a = GramMap::new(src.clone(), tgt, DMatrix::from_row_slice(2, 2, &[1.2, 0.3, -0.1, 0.9]))?;

    let report = s_class_check(&a, INV_FLOOR);
    println!("singular values {:?}", report.singular_values);
    println!("hs defect {:.6}, in the class: {}", report.hs_defect, report.verdict);

    let (u, a0) = polar_parts(&a)?;
    let back = u.compose(&a0)?;
    println!("polar reconstruction error {:.2e}", (back.matrix() - a.matrix()).amax());

    let z1 = ComplexVector::new(DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, 1.0]));
    let z2 = ComplexVector::new(DVector::from_vec(vec![0.3, -0.2]), DVector::from_vec(vec![0.5, 0.4]));
    let before = z1.inner(&z2, &src)?.im;
    let after = symplectic_extend(&a, &z1)?.inner(&symplectic_extend(&a, &z2)?, a.target())?.im;
    println!("Im<z1,z2> = {before:.12}, Im<S z1, S z2> = {after:.12}");
    Ok(())
}
