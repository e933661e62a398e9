//! Step-size robustness on a reduced workload: every arm runs over the
//! `0.003·2^t` grid and the sweep table is written as CSV.
//!
//! cargo run --release --example step_size_sweep [output-dir]

use bundle_extra::experiment::{cmd_sweep, ExperimentSpec, SWEEP_FILE};

fn main() -> bundle_extra::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "sweep-out".into());
    let spec = ExperimentSpec::parse(&format!(
        "\
n = 10
d = 20
eta = 4
edges = 15
seed = 5
arms = extra, bundle:cutting_plane:1, bundle:cutting_plane:10, bundle:two_cut
sweep_alphas = grid:0.003:2:9
max_iters = 4000
tol = 1e-6
output = {out}
"
    ))?;
    let rows = cmd_sweep(&spec)?;

    print!("{:<26}", "arm \\ t");
    for t in 0..spec.sweep_alphas.len() {
        print!("{t:>9}");
    }
    println!();
    for chunk in rows.chunks(spec.sweep_alphas.len()) {
        print!("{:<26}", chunk[0].algorithm.label());
        for r in chunk {
            let cell = match (r.iters_to_tol, r.diverged) {
                (Some(k), _) => k.to_string(),
                (None, true) => "div".into(),
                (None, false) => "-".into(),
            };
            print!("{cell:>9}");
        }
        println!();
    }
    println!("\niterations to rel_error ≤ 1e-6; table in {}/{SWEEP_FILE}", spec.output.display());
    Ok(())
}
