//! Runs EXTRA and bundle EXTRA at `α = λ_min(W̃)/L` and compares the running
//! sum of weighted KKT residuals against its a-priori bound, along with the
//! `k · min residual` rate statistics.
//!
//! cargo run --release --example summability_bound

use bundle_extra::algorithms::{run, Algorithm, RunConfig};
use bundle_extra::bundle::ModelKind;
use bundle_extra::experiment::ExperimentSpec;
use bundle_extra::metrics::rate_statistics;

fn main() -> bundle_extra::Result<()> {
    let spec = ExperimentSpec::default();
    let (problem, network) = spec.build()?;
    let alpha = network.mixing().lambda_min_wt() / problem.smoothness();
    println!("α = {alpha:.4e}");

    for arm in [Algorithm::Extra, Algorithm::BundleExtra(ModelKind::CuttingPlane { window: 10 })] {
        let out = run(&problem, &network, &RunConfig::new(arm, alpha, 2000))?;
        println!("\n{} (bound {:.4e})", arm.label(), out.bound);
        println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "k", "sum", "k·min cons", "k·min grad", "rel_error");
        let rates = rate_statistics(&out.trajectory);
        for k in [1, 10, 100, 500, 1000, 2000] {
            let m = &out.trajectory[k];
            println!(
                "{k:>6} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
                m.cumulative_kkt_sum, rates[k].k_min_consensus, rates[k].k_min_grad, m.rel_error
            );
        }
    }
    Ok(())
}
