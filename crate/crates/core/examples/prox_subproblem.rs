//! The inner problem `min_x max_j (a_jᵀx + b_j) + ‖x - c‖²/(2α)` solved
//! through its dual on the simplex, at the scale of a large-dimensional agent
//! (d = 100 000, 15 pieces).
//!
//! cargo run --release --example prox_subproblem

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use bundle_extra::subsolver::{project_simplex, solve, ProxPwlInstance, SolverOptions};

fn main() -> bundle_extra::Result<()> {
    println!("projection of (0.9, 0.6, -0.2, 0.4): {:?}", project_simplex(&[0.9, 0.6, -0.2, 0.4]));

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (m, d) = (15, 100_000);
    let opts = SolverOptions {
        tol: 1e-7,
        polish: false,
        ..SolverOptions::default()
    };
    for trial in 0..5 {
        let inst = ProxPwlInstance::new(
            DMatrix::from_fn(m, d, |_, _| rng.sample(StandardNormal)),
            DVector::from_fn(m, |_, _| rng.sample(StandardNormal)),
            DVector::from_fn(d, |_, _| rng.sample(StandardNormal)),
            1.0,
        )?;
        let started = Instant::now();
        let sol = solve(&inst, &opts)?;
        let active = sol.lambda.iter().filter(|&&l| l > 0.0).count();
        println!(
            "trial {trial}: {} iterations, gap {:.1e}, {active}/{m} pieces active, primal {:.6}, {:.1?}",
            sol.inner_iters,
            sol.gap,
            inst.primal_value(&sol.x),
            started.elapsed()
        );
    }
    Ok(())
}
