//! Compares the weighted discrete least-squares norm with its continuous
//! counterpart on the trial space, and estimates the stability constant.
//!
//! Run with `cargo run --release --example norm_equivalence`.

use kercol::assembly::{build_weights, theta_default, WeightScheme};
use kercol::geometry::{boundary_subset, fill_distance, tensor_grid, TransformKind, DEFAULT_PROBE_N};
use kercol::kernels::MaternSpec;
use kercol::pde::EllipticOperator;
use kercol::stability::{norm_equiv_constants, stability_rayleigh, FineQuadrature};

fn main() -> kercol::Result<()> {
    let spec = MaternSpec::new(4, 2, 5.0)?;
    let op = EllipticOperator::modified_helmholtz(2);
    let fine = FineQuadrature::trapezoid(129, 2)?;
    let x = tensor_grid(9, 2)?;
    let h = fill_distance(&x, DEFAULT_PROBE_N)?;
    let theta = theta_default(h)?;

    for per_axis in [17, 33, 65] {
        let (y, z) = boundary_subset(&tensor_grid(per_axis, 2)?);
        let w: Vec<f64> = build_weights(WeightScheme::Trapezoid, &y, &z, &TransformKind::Identity)?.iter().copied().collect();
        let r = norm_equiv_constants(&spec, &op, &x, &y, &z, &w, theta, &fine)?;
        println!(
            "N_Y/N_X {:>5.1}: c_low {:.4}, c_high {:.4}, spread {:.4}",
            r.density_ratio, r.c_low, r.c_high, r.spread
        );
    }

    for n in [5, 7, 9] {
        let x = tensor_grid(n, 2)?;
        let h = fill_distance(&x, DEFAULT_PROBE_N)?;
        let lambda = stability_rayleigh(&spec, &op, &x, theta_default(h)?, &fine, 0)?;
        println!("N_X {:>3}, h_X {h:.4}: smallest Rayleigh quotient {lambda:.4}", x.len());
    }
    Ok(())
}
