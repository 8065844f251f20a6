//! Builds the node sets used by the solver and measures them.
//!
//! Run with `cargo run --example point_sets`.

use kercol::geometry::{
    apply_transform, boundary_subset, mesh_metrics, oversample_per_axis, scattered_cloud_near_line, tensor_grid,
    TransformKind, DEFAULT_PROBE_N,
};

fn main() -> kercol::Result<()> {
    let x = tensor_grid(13, 2)?;
    let per_axis = oversample_per_axis(3.0, x.len())?;
    let (y, z) = boundary_subset(&tensor_grid(per_axis, 2)?);
    println!("N_X = {}, oversampled grid {per_axis} per axis: N_Y = {}, N_Z = {}", x.len(), y.len(), z.len());

    for t in [TransformKind::Identity, TransformKind::Sine, TransformKind::SignedSquare] {
        let mapped = apply_transform(&t, &y)?;
        let m = mesh_metrics(&mapped, DEFAULT_PROBE_N)?;
        println!(
            "{:>14}: fill {:.4}, separation {:.4}, mesh ratio {:.2}",
            t.name(),
            m.fill_h,
            m.separation_q,
            m.mesh_ratio_rho
        );
    }

    let cloud = scattered_cloud_near_line(2000, &[1.0, -1.0], 0.2, 7)?;
    let near = cloud.iter().filter(|p| (p[0] - p[1]).abs() / 2f64.sqrt() <= 0.1).count();
    println!("cloud: {} points, {near} inside the strip around x = y", cloud.len());
    Ok(())
}
