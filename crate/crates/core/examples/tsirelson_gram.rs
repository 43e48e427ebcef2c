//! The Tsirelson kernel: Gram matrices of cell indicators and the Fourier trend.

use sumsys_core::kernels::{fourier_coeff, gram_matrix, kernel_l1_norm, Kernel};

fn main() -> sumsys_core::Result<()> {
    let k = Kernel::tsirelson(2.0)?;
    println!("{}", k.describe());
    println!("||B||_1 = {:.12}", kernel_l1_norm(&k)?);
    for h in [1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0] {
        let g = gram_matrix(&k, (0.0, 1.0), h)?;
        println!("h = {h:<10} cells {:>4}  min eigenvalue {:.4e}  quad error {:.1e}", g.cells(), g.min_eigenvalue(), g.quad_error);
    }
    println!("n       bhat(n)       bhat(n) ln n");
    for p in [4, 6, 8, 10, 12] {
        let n = 1i64 << p;
        let b = fourier_coeff(&k, n)?.value;
        println!("{n:<7} {b:.6e}  {:.6}", b * (n as f64).ln());
    }
    Ok(())
}
