//! Exponential vectors and Weyl operators on a truncated symmetric Fock space.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use sumsys_core::fock::{ccr_residual, weyl_action_residual, FockSpace, WeylPhase};

fn main() -> sumsys_core::Result<()> {
    let x = DVector::from_vec(vec![Complex64::new(0.4, 0.2), Complex64::new(-0.1, 0.3)]);
    let y = DVector::from_vec(vec![Complex64::new(0.1, -0.5), Complex64::new(0.3, 0.1)]);
    println!("cutoff  W(x)e(y)  CCR e^(+i Im<x,y>)  CCR e^(-i Im<x,y>)");
    for n in [8, 12, 16, 20] {
        let space = Arc::new(FockSpace::new(2, n)?);
        let action = weyl_action_residual(&x, &y, &space, n / 2)?;
        let plus = ccr_residual(&x, &y, &space, n / 2, WeylPhase::MinusImYX)?;
        let minus = ccr_residual(&x, &y, &space, n / 2, WeylPhase::MinusImXY)?;
        println!("{n:>6}  {action:.3e}  {plus:.3e}  {minus:.3e}");
    }
    Ok(())
}
