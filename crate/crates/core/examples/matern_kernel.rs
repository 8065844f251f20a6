//! Evaluates the Matérn kernel and its derivatives for a few smoothness orders.
//!
//! Run with `cargo run --example matern_kernel`.

use kercol::geometry::Point;
use kercol::kernels::MaternSpec;
use kercol::pde::EllipticOperator;

fn main() -> kercol::Result<()> {
    let y = Point::new2(0.0, 0.0);
    println!("{:>4} {:>6} {:>12} {:>12} {:>12}", "tau", "nu", "r", "Phi", "Laplacian");
    for tau in [3, 4, 5, 6] {
        let spec = MaternSpec::new(tau, 2, 5.0)?;
        for r in [0.0, 0.1, 0.4] {
            let x = Point::new2(r, 0.0);
            let jet = spec.jet(&x, &y)?;
            println!("{tau:>4} {:>6.1} {r:>12.3} {:>12.6} {:>12.4}", spec.nu(), jet.value, jet.laplacian());
        }
    }

    // Applying Delta - I to a translate at its own centre.
    let spec = MaternSpec::new(4, 2, 5.0)?;
    let op = EllipticOperator::modified_helmholtz(2);
    let centre = Point::new2(0.25, -0.5);
    let lphi = kercol::kernels::apply_elliptic(&spec, &op, &centre, &centre)?;
    println!("(Delta - 1) Phi(x, x) = {lphi:.6}");
    Ok(())
}
