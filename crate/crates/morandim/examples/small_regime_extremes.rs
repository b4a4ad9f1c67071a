//! Small-regime running extremes: exact convergence for a finite-support
//! mixture, divergence for uniform-simplex probabilities.
//!
//! ```bash
//! cargo run --release -p morandim --example small_regime_extremes
//! ```

use morandim::estimators::{small_alpha_hat, small_beta_hat};
use morandim::randomness::{
    extremes, sample_environment, ChildClass, DistributionSpec, LevelDraw, ProbDist, RatioDist,
    WeightedDraw,
};

fn main() {
    // two-atom mixture at ratio 0.1: extremes hit the atoms exactly
    let mixture = DistributionSpec::discrete_mixture(
        vec![
            WeightedDraw {
                weight: 0.5,
                draw: LevelDraw::new(2, 0.1, vec![0.2, 0.8]).unwrap(),
            },
            WeightedDraw {
                weight: 0.5,
                draw: LevelDraw::new(2, 0.1, vec![0.5, 0.5]).unwrap(),
            },
        ],
        0.25,
    )
    .unwrap();
    let (alpha, beta) = extremes(&mixture).unwrap();
    println!("mixture support extremes: alpha = {alpha}, beta = {beta}");
    let env = sample_environment(&mixture, 5, 10_000).unwrap();
    for n in [1usize, 3, 10, 100, 10_000] {
        println!(
            "  n = {n:>6}: alpha_hat {:.6} beta_hat {:.6}",
            small_alpha_hat(&env, n).unwrap(),
            small_beta_hat(&env, n).unwrap()
        );
    }

    // uniform simplex probabilities: alpha = infinity, and the running
    // maximum crosses any finite threshold quickly
    let simplex = DistributionSpec::product_form(
        vec![ChildClass {
            t: 2,
            weight: 1.0,
            ratio: RatioDist::PointMass(1.0 / 3.0),
            probs: ProbDist::UniformSimplex,
        }],
        1.0 / 3.0,
    )
    .unwrap();
    let (alpha, beta) = extremes(&simplex).unwrap();
    println!("simplex support extremes: alpha = {alpha}, beta = {beta}");
    let env = sample_environment(&simplex, 5, 100_000).unwrap();
    let mut threshold = 1.0;
    let mut running = f64::NEG_INFINITY;
    for (i, d) in env.draws().iter().enumerate() {
        running = running.max(d.y_val() / d.z_val());
        while running > threshold {
            println!("  alpha_hat passed {threshold:.1} at level {}", i + 1);
            threshold += 0.5;
        }
        if threshold > 3.0 {
            break;
        }
    }
}
