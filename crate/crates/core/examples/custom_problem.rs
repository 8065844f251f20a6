//! Assembles and solves a problem that is not one of the built-in benchmarks,
//! step by step: nodes, system, weights, least squares, evaluation.
//!
//! Run with `cargo run --release --example custom_problem`.

use std::f64::consts::PI;
use std::sync::Arc;

use kercol::assembly::{assemble_system, build_weights, evaluate_expansion, theta_default, weight_and_scale, WeightScheme};
use kercol::experiments::relative_l2;
use kercol::geometry::{boundary_subset, fill_distance, tensor_grid, TransformKind, DEFAULT_PROBE_N};
use kercol::kernels::MaternSpec;
use kercol::pde::{EllipticOperator, EllipticProblem};
use kercol::solver::solve_lstsq;

fn main() -> kercol::Result<()> {
    // Delta u = f with u = sin(pi x) sinh(y) + x y^2.
    let u = |x: f64, y: f64| (PI * x).sin() * y.sinh() + x * y * y;
    let mut laplace = [[0.0; 3]; 3];
    laplace[0][0] = 1.0;
    laplace[1][1] = 1.0;
    let prob = EllipticProblem {
        name: "harmonic-ish".into(),
        op: EllipticOperator::constant(2, laplace, [0.0; 3], 0.0),
        f: Arc::new(move |p| (1.0 - PI * PI) * (PI * p[0]).sin() * p[1].sinh() + 2.0 * p[0]),
        g: Arc::new(move |p| u(p[0], p[1])),
        exact: None,
    };

    let spec = MaternSpec::new(4, 2, 3.0)?;
    let x = tensor_grid(15, 2)?;
    let (y, z) = boundary_subset(&tensor_grid(27, 2)?);
    let theta = theta_default(fill_distance(&x, DEFAULT_PROBE_N)?)?;
    let sys = assemble_system(&prob, &spec, &x, &y, &z, theta)?;
    let w = build_weights(WeightScheme::Trapezoid, &y, &z, &TransformKind::Identity)?;
    let sys = weight_and_scale(sys, &w)?;
    let sol = solve_lstsq(&sys.design, &sys.rhs)?;
    println!("{} x {} system, rank {}, residual {:.3e}", sys.rows(), x.len(), sol.rank_estimate, sol.residual_norm);

    let grid = tensor_grid(60, 2)?;
    let approx = evaluate_expansion(&spec, &x, &sol.coeffs, &grid);
    let exact: Vec<f64> = grid.iter().map(|p| u(p[0], p[1])).collect();
    println!("relative l2 error {:.3e}", relative_l2(&approx, &exact)?);
    Ok(())
}
