//! Real and imaginary additive units, the pairing law and the existence series.

use sumsys_core::invariants::ElementarySet;
use sumsys_core::kernels::Kernel;
use sumsys_core::sumsys::SumSystem;
use sumsys_core::units::{existence_series, imaginary_additivity_residual, pairing_table, pair_with_indicator, y_prime};

fn main() -> sumsys_core::Result<()> {
    let k = Kernel::tsirelson(2.0)?;
    let sys = SumSystem::new(k, 1.0 / 128.0, 1.0)?;
    for row in pairing_table(&sys, &[0.25, 0.5, 0.75, 1.0])? {
        println!("<x_t, y_t> at t = {:<4}: {:.15}  (condition {:.2})", row.t, row.pairing, row.condition);
    }
    println!("imaginary additivity at (1/4, 1/2): {:.2e}", imaginary_additivity_residual(&sys, 0.25, 0.5)?);

    let e = ElementarySet::new([(0.125, 0.375), (0.625, 0.75)])?;
    let y = y_prime(&sys, &e)?;
    let pairing = pair_with_indicator(&sys, 0.25, 0.6875, &y.coords)?;
    println!("<x_(1/4, 11/16), y'_E> = {pairing:.12}, overlap measure {}", 0.125 + 0.0625);

    for alpha in [1.5, 2.0, 3.0] {
        let s = existence_series(&Kernel::tsirelson(alpha)?, 1 << 12)?;
        println!("alpha {alpha}: tail blocks {:?}, converging {}", s.tail_blocks(), s.converging);
    }
    Ok(())
}
