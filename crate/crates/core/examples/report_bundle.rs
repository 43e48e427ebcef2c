//! Running a suite from code and writing its report bundle.

use sumsys_core::config::{parse, KernelConfig};
use sumsys_core::suite::run_kernel_suite;

fn main() -> sumsys_core::Result<()> {
    let cfg: KernelConfig = parse("alpha = 2.5\ngram_h = 0.03125\nn_max = 1024\n")?;
    let bundle = run_kernel_suite(&cfg)?;
    let dir = std::env::temp_dir().join("sumsys-kernel-report");
    bundle.write(&dir)?;
    println!("wrote {} tables to {}", bundle.tables.len(), dir.display());
    println!("drift {}", bundle.verdicts["drift"]);
    print!("{}", bundle.table("fourier").expect("fourier table").to_csv_string()?);
    Ok(())
}
