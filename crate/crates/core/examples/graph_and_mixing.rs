//! Random connected topology, Metropolis and Laplacian weights, and the
//! checks a mixing pair has to pass before EXTRA can use it.
//!
//! cargo run --example graph_and_mixing

use bundle_extra::graph::{random_connected_graph, Graph};
use bundle_extra::mixing::{laplacian_weights, make_pair, metropolis_weights, validate_assumption4, DEFAULT_TOL};

fn main() -> bundle_extra::Result<()> {
    let g = random_connected_graph(20, 32, 7)?;
    let degrees: Vec<usize> = (0..g.n()).map(|i| g.degree(i)).collect();
    println!("20 nodes, {} edges, connected: {}", g.num_edges(), g.is_connected());
    println!("degrees: {degrees:?}");

    let metropolis = make_pair(metropolis_weights(&g), &g)?;
    println!("\nMetropolis weights, λ_min(W̃) = {:.4}", metropolis.lambda_min_wt());
    println!("{}", validate_assumption4(&metropolis, &g, DEFAULT_TOL));

    let laplacian = make_pair(laplacian_weights(&g, 0.1)?, &g)?;
    println!("Laplacian weights (τ = 0.1), λ_min(W̃) = {:.4}", laplacian.lambda_min_wt());

    // A weight matrix that ignores the topology fails the locality check.
    let dense = make_pair(metropolis_weights(&Graph::complete(20)?), &Graph::complete(20)?)?;
    let report = validate_assumption4(&dense, &g, DEFAULT_TOL);
    println!("complete-graph weights on the sparse topology:");
    for failure in report.failures() {
        println!("  fails {} (value {:.3e})", failure.name, failure.value);
    }

    let text = g.to_edge_list();
    let back = Graph::from_edge_list(&text)?;
    println!("\nedge list round-trips: {}", back == g);
    println!("{}", text.lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
