//! Sum systems over a kernel: addition maps, their Hilbert–Schmidt defect and time reversal.

use sumsys_core::kernels::Kernel;
use sumsys_core::sumsys::{defect_scan, SumSystem};

fn main() -> sumsys_core::Result<()> {
    let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
    for k in [Kernel::StandardL2, Kernel::tsirelson(2.0)?] {
        let scan = defect_scan(&k, &hs, 0.25, 0.5)?;
        println!("{}", k.describe());
        print!("{}", scan.table().to_csv_string()?);
    }
    let sys = SumSystem::new(Kernel::tsirelson(2.0)?, 1.0 / 32.0, 1.0)?;
    let r = sys.time_reversal(0.5)?;
    let rr = r.compose(&r)?;
    println!("time reversal: |R R - I| = {:.1e}, unitary defect {:.1e}", (rr.matrix() - nalgebra::DMatrix::identity(16, 16)).amax(), (r.adjoint().compose(&r)?.matrix() - nalgebra::DMatrix::identity(16, 16)).amax());
    Ok(())
}
