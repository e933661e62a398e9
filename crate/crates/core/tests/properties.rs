use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use bundle_extra::bundle::{check_model, CutSet, ModelKind};
use bundle_extra::graph::random_connected_graph;
use bundle_extra::mixing::{make_pair, metropolis_weights, validate_assumption4, DEFAULT_TOL};
use bundle_extra::problem::{ObjectiveOracle, Quadratic};
use bundle_extra::subsolver::{dual_value, project_simplex, solve, ProxPwlInstance, SolverOptions};

/// Sort-based projection onto the probability simplex.
fn reference_projection(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let (mut cumulative, mut theta) = (0.0, 0.0);
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj > t {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn graph_params() -> impl Strategy<Value = (usize, usize, u64)> {
    (2usize..25).prop_flat_map(|n| (Just(n), (n - 1)..=(n * (n - 1) / 2), any::<u64>()))
}

fn instance() -> impl Strategy<Value = ProxPwlInstance> {
    (1usize..8, 1usize..6).prop_flat_map(|(m, d)| {
        (
            prop::collection::vec(-3.0f64..3.0, m * d),
            prop::collection::vec(-3.0f64..3.0, m),
            prop::collection::vec(-3.0f64..3.0, d),
            0.01f64..5.0,
        )
            .prop_map(move |(a, b, c, alpha)| {
                ProxPwlInstance::new(
                    DMatrix::from_row_slice(m, d, &a),
                    DVector::from_vec(b),
                    DVector::from_vec(c),
                    alpha,
                )
                .unwrap()
            })
    })
}

proptest! {
    #[test]
    fn projection_matches_sorting(v in prop::collection::vec(-1e3f64..1e3, 1..60)) {
        let p = project_simplex(&v);
        let r = reference_projection(&v);
        let scale = v.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        for (a, b) in p.iter().zip(&r) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12 * scale);
    }

    #[test]
    fn projection_is_idempotent(v in prop::collection::vec(-10.0f64..10.0, 1..30)) {
        let p = project_simplex(&v);
        let pp = project_simplex(&p);
        for (a, b) in p.iter().zip(&pp) {
            prop_assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn generated_graphs_are_connected_and_exact((n, m, seed) in graph_params()) {
        let g = random_connected_graph(n, m, seed).unwrap();
        prop_assert!(g.is_connected());
        prop_assert_eq!(g.num_edges(), m);
        prop_assert!(g.edges().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(g.edges().iter().all(|&(i, j)| i < j && j < n));
        prop_assert_eq!(random_connected_graph(n, m, seed).unwrap(), g);
    }

    #[test]
    fn metropolis_pairs_satisfy_the_mixing_conditions((n, m, seed) in graph_params()) {
        let g = random_connected_graph(n, m, seed).unwrap();
        let pair = make_pair(metropolis_weights(&g), &g).unwrap();
        let report = validate_assumption4(&pair, &g, DEFAULT_TOL);
        prop_assert!(report.all_passed(), "{}", report);
    }

    #[test]
    fn solution_beats_perturbations(inst in instance(), seed in any::<u64>()) {
        let sol = solve(&inst, &SolverOptions::default()).unwrap();
        let best = inst.primal_value(&sol.x);
        prop_assert!(best >= dual_value(&inst, &sol.lambda) - 1e-9 * (1.0 + best.abs()));
        let mut state = seed;
        for _ in 0..20 {
            let dir = DVector::from_fn(inst.dim(), |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            });
            for step in [1e-3, 1e-1] {
                prop_assert!(inst.primal_value(&(&sol.x + &dir * step)) >= best - 1e-9 * (1.0 + best.abs()));
            }
        }
    }

    #[test]
    fn cutting_plane_models_stay_legal(
        points in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 1..15),
        window in 0usize..6,
    ) {
        let f = Quadratic::new(
            DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 0.5]),
            DVector::from_vec(vec![1.0, -1.0, 0.5]),
            0.0,
        ).unwrap();
        let x0 = DVector::from_vec(points[0].clone());
        let (v0, g0) = f.value_and_gradient(&x0);
        let mut cs = CutSet::new(ModelKind::CuttingPlane { window }, None, &x0, v0, &g0).unwrap();
        for (k, p) in points.iter().enumerate().skip(1) {
            let x = DVector::from_vec(p.clone());
            let (v, g) = f.value_and_gradient(&x);
            cs.update_model(&x, v, &g).unwrap();
            prop_assert!(cs.num_pieces() <= window + 1);
            prop_assert!(check_model(&cs, &f, &x, 20, 3.0, k as u64).passed());
        }
    }
}
