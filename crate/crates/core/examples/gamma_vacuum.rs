//! The Shale map: vacuum overlaps, functoriality and the adjoint relation.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use sumsys_core::hilbert::{GramMap, GramSpace};
use sumsys_core::shale::{dilation_block, gamma, vacuum_overlap_formula, verify_adjoint, verify_functorial};

fn diag(entries: &[f64]) -> sumsys_core::Result<GramMap> {
    let s = Arc::new(GramSpace::euclidean(entries.len(), "R")?);
    GramMap::new(s.clone(), s, DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
}

fn main() -> sumsys_core::Result<()> {
    for lambda in [0.5, 2.0, 4.0] {
        let block = dilation_block(lambda, 60)?;
        println!("lambda {lambda}: <M Φ, Φ> = {:.10}, formula {:.10}", block.vacuum_overlap(), vacuum_overlap_formula(lambda));
    }
    let g = gamma(&diag(&[2.0, 0.5])?, 40)?;
    println!("two modes diag(2, 0.5): overlap {:.10}", g.matrix[(0, 0)].re);

    let theta: f64 = 0.7;
    let s = Arc::new(GramSpace::euclidean(2, "R")?);
    let rot = DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
    let a = GramMap::new(s.clone(), s.clone(), rot * DMatrix::from_diagonal(&DVector::from_vec(vec![1.2, 0.9])))?;
    let b = diag(&[1.1, 0.8])?;
    println!("cutoff  functoriality(sector 2)  adjoint(sector 2)");
    for n in [8, 12, 16] {
        println!("{n:>6}  {:.3e}  {:.3e}", verify_functorial(&a, &b, n, 2)?, verify_adjoint(&a, n, 2)?);
    }
    Ok(())
}
