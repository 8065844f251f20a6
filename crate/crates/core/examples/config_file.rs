//! Reads a `key = value` run configuration and layers overrides on top, the
//! way the command-line driver does with its flags.
//!
//! Run with `cargo run --example config_file`.

use kercol::experiments::{parse_config_text, RunConfig};

const FILE: &str = "\
# problem 3 with a shifted bump
pde = 3@0.5,0.75
method = all
tau = 4,5
gamma = 1:0.5:4
nx = 9,13,17
";

fn main() -> kercol::Result<()> {
    let mut map = parse_config_text(FILE)?;
    // A flag such as `--gamma 3` lands here after the file.
    map.insert("gamma".into(), "3".into());
    let cfg = RunConfig::from_map(&map)?;
    println!("problem  {}", cfg.pde);
    println!("methods  {:?}", cfg.methods.iter().map(|m| m.name()).collect::<Vec<_>>());
    println!("tau      {:?}", cfg.tau_list);
    println!("gamma    {:?}", cfg.gamma_list);
    println!("nx       {:?}", cfg.nx_axis_list);
    println!("eps      {} (default)", cfg.eps);
    let cells = cfg.methods.len() * cfg.tau_list.len() * cfg.gamma_list.len() * cfg.nx_axis_list.len();
    println!("{cells} sweep cells");
    Ok(())
}
