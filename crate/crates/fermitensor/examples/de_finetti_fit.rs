//! Recover the mixing measure of a symmetric state: a hidden 0.3/0.7
//! mixture of product states is decomposed over a grid of even states and
//! the weights land back on the true nodes.
//!
//! Also writes the mixture to `target/definetti_state.json` so the same
//! decomposition can be reproduced through the CLI:
//!
//! ```bash
//! cargo run --example de_finetti_fit
//! fermitensor decompose --state target/definetti_state.json --sites 3 --grid 101
//! ```

use fermitensor::analysis::{definetti_fit, even_state_grid, grid_mixture, MeanConfig};
use fermitensor::power::{FermiPower, PowerState};
use fermitensor::GradedAlgebra;

fn main() {
    let a = GradedAlgebra::preset("car(1)").unwrap();
    let p = FermiPower::new(&a, 3).unwrap();

    // Even states of one mode form an interval; sample it at 101 nodes.
    let grid = even_state_grid(&a, 101);
    println!("grid: {} even states diag(t, 1-t), t in [0, 1]", grid.len());

    // The hidden mixture.
    let omega = grid_mixture(&p, &[grid[20].clone(), grid[90].clone()], &[0.3, 0.7]).unwrap();
    println!("hidden state: 0.3 x (t = 0.20)^(F3)  +  0.7 x (t = 0.90)^(F3)");

    let fit = definetti_fit(&omega, &grid, MeanConfig::default()).unwrap();
    println!("\nfit residual: {:.3e}", fit.residual);
    println!("recovered weights above 1e-9:");
    for (k, &w) in fit.weights.iter().enumerate() {
        if w > 1e-9 {
            println!("  t = {:.2}: {:.9}", fit.grid_params[k], w);
        }
    }

    // A product state is an extreme point: a single node carries everything.
    let pure = PowerState::product_power(&p, &grid[40]).unwrap();
    let fit = definetti_fit(&pure, &grid, MeanConfig::default()).unwrap();
    let top = fit
        .weights
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .unwrap();
    println!("\nproduct state fit: weight {:.6} at t = {:.2}", top.1, fit.grid_params[top.0]);

    // Dump the mixture as a dense state file for the CLI.
    let dense = omega.densify().unwrap();
    let json = dense.to_json("car(1)");
    std::fs::create_dir_all("target").ok();
    std::fs::write(
        "target/definetti_state.json",
        serde_json::to_string_pretty(&json).unwrap() + "\n",
    )
    .unwrap();
    println!("\nwrote target/definetti_state.json (decompose it with the CLI)");
}
