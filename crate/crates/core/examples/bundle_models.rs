//! The five bundle models on a one-dimensional quadratic: how many pieces
//! each keeps and how closely it tracks `f` after a few updates.
//!
//! cargo run --example bundle_models

use nalgebra::DVector;

use bundle_extra::bundle::{check_model, CutSet, ModelKind};
use bundle_extra::problem::{ObjectiveOracle, Quadratic};

fn main() -> bundle_extra::Result<()> {
    // f(x) = x²/2, minimum value 0.
    let f = Quadratic::isotropic(DVector::from_vec(vec![0.0]), 1.0)?;
    let path = [2.0, -1.5, 1.0, -0.5, 0.25];
    let probes: Vec<f64> = (-4..=4).map(|i| i as f64 * 0.5).collect();

    let kinds = [
        ModelKind::SingleCut,
        ModelKind::Polyak,
        ModelKind::CuttingPlane { window: 3 },
        ModelKind::PolyakCuttingPlane { window: 3 },
        ModelKind::TwoCut,
    ];
    print!("{:<26}{:>7}", "model", "pieces");
    for x in &probes {
        print!("{x:>7.1}");
    }
    println!();
    print!("{:<33}", "f");
    for &x in &probes {
        print!("{:>7.3}", f.value(&DVector::from_vec(vec![x])));
    }
    println!();

    for kind in kinds {
        let x0 = DVector::from_vec(vec![path[0]]);
        let (v, g) = f.value_and_gradient(&x0);
        let mut model = CutSet::new(kind, f.lower_bound(), &x0, v, &g)?;
        for &p in &path[1..] {
            let x = DVector::from_vec(vec![p]);
            let (v, g) = f.value_and_gradient(&x);
            model.update_model(&x, v, &g)?;
        }
        print!("{:<26}{:>7}", kind.label(), model.num_pieces());
        for &x in &probes {
            print!("{:>7.3}", model.evaluate(&DVector::from_vec(vec![x])));
        }
        let last = DVector::from_vec(vec![path[path.len() - 1]]);
        let legal = check_model(&model, &f, &last, 200, 4.0, 1).passed();
        println!("   legal: {legal}");
    }
    Ok(())
}
