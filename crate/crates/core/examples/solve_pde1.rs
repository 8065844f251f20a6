//! One weighted least-squares solve of the first benchmark problem, compared
//! across the three weightings.
//!
//! Run with `cargo run --release --example solve_pde1`.

use kercol::experiments::{relative_l2, solve_case, CaseParams, Evaluation, Method, RunConfig};
use kercol::pde::{make_problem, ProblemKind};

fn main() -> kercol::Result<()> {
    let pde = ProblemKind::Pde1;
    let prob = make_problem(pde)?;
    let eval = Evaluation::for_problem(&prob, pde, 86, 0)?;
    let cfg = RunConfig::default();
    for method in Method::ALL {
        let sol = solve_case(&prob, pde, &CaseParams::from_config(&cfg, method, 4, 3.0, 17))?;
        let err = relative_l2(&sol.evaluate(&eval.grid), &eval.reference)?;
        println!(
            "{method}: N_X {} N_Y {} N_Z {}  kappa_W {:.2}  rel l2 {err:.3e}",
            sol.nodes.x.len(),
            sol.nodes.y.len(),
            sol.nodes.z.len(),
            sol.kappa_w
        );
    }
    Ok(())
}
