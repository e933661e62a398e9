//! EXTRA against bundle EXTRA with cutting-plane models of growing window on
//! the 20-agent least-squares workload. Each arm runs at a few step sizes
//! from the 0.003·2^t grid and reports the relative error it reaches.
//!
//! cargo run --release --example least_squares_extra [seed] [iterations]

use std::time::Instant;

use bundle_extra::algorithms::{run, Algorithm, RunConfig};
use bundle_extra::bundle::ModelKind;
use bundle_extra::experiment::ExperimentSpec;

fn main() -> bundle_extra::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let iterations = args.next().and_then(|s| s.parse().ok()).unwrap_or(3000);
    let spec = ExperimentSpec {
        seed,
        ..ExperimentSpec::default()
    };
    let (problem, network) = spec.build()?;
    println!(
        "n={} d={} edges={} L={:.2} λ_min(W̃)={:.4} → α bound {:.3e}",
        problem.n(),
        problem.dim(),
        network.graph().num_edges(),
        problem.smoothness(),
        network.mixing().lambda_min_wt(),
        network.mixing().lambda_min_wt() / problem.smoothness()
    );

    let arms = [
        Algorithm::Extra,
        Algorithm::BundleExtra(ModelKind::CuttingPlane { window: 1 }),
        Algorithm::BundleExtra(ModelKind::CuttingPlane { window: 5 }),
        Algorithm::BundleExtra(ModelKind::CuttingPlane { window: 10 }),
    ];
    let alphas = [0.006, 0.024, 0.096, 0.384];
    print!("{:<26}", format!("rel_error after {iterations}"));
    for a in alphas {
        print!("{:>12}", format!("α={a}"));
    }
    println!();
    for arm in arms {
        let started = Instant::now();
        print!("{:<26}", arm.label());
        for alpha in alphas {
            let out = run(&problem, &network, &RunConfig::new(arm, alpha, iterations))?;
            let cell = if out.diverged {
                "diverged".to_string()
            } else {
                format!("{:.2e}", out.final_metrics().rel_error)
            };
            print!("{cell:>12}");
        }
        println!("   ({:.1?})", started.elapsed());
    }
    Ok(())
}
