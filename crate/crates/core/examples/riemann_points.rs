//! Constructs lower-Riemann point selections for a smooth function in the box
//! and on its boundary, and compares the discrete sums with the integrals.
//!
//! Run with `cargo run --release --example riemann_points`.

use kercol::geometry::Point;
use kercol::stability::{boundary_riemann_points, check_bound, lower_riemann_points, FineQuadrature};

fn main() -> kercol::Result<()> {
    let v = |p: &Point| (2.0 * p[0]).cos() * (1.0 + 0.5 * p[1]) + 0.3 * p[0] * p[1];
    let fine = FineQuadrature::trapezoid(801, 2)?;
    let box_integral: f64 = fine.interior.iter().zip(&fine.interior_weights).map(|(p, w)| w * v(p).powi(2)).sum();
    let edge_integral: f64 = fine.boundary.iter().zip(&fine.boundary_weights).map(|(p, w)| w * v(p).powi(2)).sum();

    for h in [0.2, 0.1, 0.05] {
        let sel = lower_riemann_points(v, 2, 1.0, h, 16)?;
        let chk = check_bound(&sel, box_integral);
        println!(
            "box      h {h:<5} points {:>5}  h_P {:.4}  delta {:.4}  h_P sum {:.4}  cell sum {:.4}  integral {:.4}  {}",
            sel.points.len(),
            sel.fill_h_p,
            sel.cell_edge_delta,
            sel.discrete_sum,
            sel.cell_sum,
            box_integral,
            verdict(chk.holds, chk.flagged)
        );
        let sel = boundary_riemann_points(v, 2, 1.0, h, 16)?;
        let chk = check_bound(&sel, edge_integral);
        println!(
            "boundary h {h:<5} points {:>5}  h_P {:.4}  delta {:.4}  h_P sum {:.4}  cell sum {:.4}  integral {:.4}  {}",
            sel.points.len(),
            sel.fill_h_p,
            sel.cell_edge_delta,
            sel.discrete_sum,
            sel.cell_sum,
            edge_integral,
            verdict(chk.holds, chk.flagged)
        );
    }
    Ok(())
}

fn verdict(holds: bool, flagged: bool) -> &'static str {
    match (holds, flagged) {
        (true, _) => "holds",
        (false, true) => "flagged",
        _ => "fails",
    }
}
