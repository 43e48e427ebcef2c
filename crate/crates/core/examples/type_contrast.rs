//! Liminf/limsup diagnostics on a Cantor-type sequence under two kernels.

use sumsys_core::invariants::{cantor_sequence, classify, Thresholds};
use sumsys_core::kernels::Kernel;
use sumsys_core::suite::invariant_probes;
use sumsys_core::sumsys::SumSystem;

fn main() -> sumsys_core::Result<()> {
    let h = 1.0 / 256.0;
    let seq = cantor_sequence(6, 0.5, h)?;
    let mut finals = Vec::new();
    for k in [Kernel::StandardL2, Kernel::tsirelson(2.0)?] {
        let sys = SumSystem::new(k, h, 1.0)?;
        let probes = invariant_probes(&sys, &seq)?;
        let rec = classify(&sys, &seq, &probes, Thresholds::default())?;
        println!("{}", k.describe());
        println!("step  l(E^c)      residual  complement  |y'|");
        for s in &rec.per_step {
            println!("{:>4}  {:<10}  {:.4}    {:.4}      {:.4}", s.step, s.complement_measure, s.max_residual, s.max_complement_norm, s.yprime_norm);
        }
        println!("verdict {:?}\n", rec.verdict);
        finals.push(rec.per_step.last().map(|s| s.yprime_norm).unwrap_or(0.0));
    }
    println!("final |y'| contrast Tsirelson / L2 = {:.4}", finals[1] / finals[0]);
    Ok(())
}
