//! Finite-difference reference for the variable-diffusion problem and its
//! self-convergence.
//!
//! Run with `cargo run --release --example fd_reference`.

use kercol::experiments::{fd_reference_pde4, relative_l2};
use kercol::geometry::tensor_grid;

fn main() -> kercol::Result<()> {
    let lattice = tensor_grid(86, 2)?;
    let mut previous: Option<Vec<f64>> = None;
    for n in [65, 129, 257, 513] {
        let sol = fd_reference_pde4(n)?;
        let values: Vec<f64> = lattice.iter().map(|p| sol.interpolate(p)).collect();
        let change = match &previous {
            Some(prev) => format!("{:.3e}", relative_l2(prev, &values)?),
            None => "-".into(),
        };
        println!(
            "n {n:>3}: {:>3} CG iterations, residual {:.1e}, u(0,0) {:.6}, change from previous {change}",
            sol.iterations,
            sol.relative_residual,
            sol.at(n / 2, n / 2)
        );
        previous = Some(values);
    }
    Ok(())
}
