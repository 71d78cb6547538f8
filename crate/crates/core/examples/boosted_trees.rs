//! Leaf-capped boosted trees and permutation importance on a toy problem
//! where only the first feature matters.
//!
//! cargo run --release --example boosted_trees

use cdev::surrogate::{fit_boosted, permutation_importance, BoostParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cdev::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<Vec<f64>> = (0..2000).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y: Vec<f64> = x.iter().map(|r| 3.0 * r[0] + 0.1 * rng.random_range(-1.0..1.0)).collect();
    let train: Vec<usize> = (0..1600).collect();
    let valid: Vec<usize> = (1600..2000).collect();

    for max_leaves in [2, 5, 13, 34] {
        let p = BoostParams {
            max_leaves,
            n_trees_max: 300,
            learning_rate: 0.1,
            patience: 20,
            min_samples_leaf: 20,
        };
        let model = fit_boosted(&x, &y, &train, &valid, &p)?;
        let imp = permutation_importance(&model, &x, &y, &valid, 5, 0);
        let shown: Vec<String> = imp.iter().map(|v| format!("{v:.3}")).collect();
        println!(
            "cap {max_leaves:>2}: {:>3} trees, validation MSE {:.4}, importances [{}]",
            model.trees.len(),
            model.val_mse(),
            shown.join(", ")
        );
    }
    Ok(())
}
