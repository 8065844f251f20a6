//! A small convergence sweep with rate fits, written as CSV and SVG.
//!
//! Run with `cargo run --release --example convergence_sweep [out_dir]`.

use std::path::PathBuf;

use kercol::experiments::{emit_outputs, fit_groups, run_convergence, Method, RunConfig};

fn main() -> kercol::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("kercol-sweep"));
    let cfg = RunConfig {
        methods: vec![Method::VlsTp, Method::WlsId],
        tau_list: vec![4],
        gamma_list: vec![3.0],
        nx_axis_list: vec![9, 13, 17, 21],
        record_timing: false,
        output_dir: out.clone(),
        ..RunConfig::default()
    };
    let records = run_convergence(&cfg)?;
    for r in &records {
        println!("{} NX {:>4} hX {:.4} rel l2 {:.3e}", r.method, r.n_x, r.h_x, r.rel_l2);
    }
    let fits = fit_groups(&records);
    for (key, fit) in &fits {
        if let Ok(f) = fit {
            println!("{} tau {}: slope {:.2} over {} points", key.method, key.tau, f.slope, f.points_used);
        }
    }
    for p in emit_outputs(&records, &fits, &out, true)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
