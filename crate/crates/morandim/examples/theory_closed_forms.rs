//! Closed-form dimension targets for the standard fixtures.
//!
//! ```bash
//! cargo run --release -p morandim --example theory_closed_forms
//! ```

use morandim::randomness::{
    moments, ChildClass, DistributionSpec, LevelDraw, ProbDist, RatioDist, WeightedDraw,
};

fn show(name: &str, spec: &DistributionSpec) {
    let th = moments(spec).expect("valid spec");
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "unavailable".into());
    println!("{name}");
    println!("  E(X) = {}  E(Y) = {}  E(Z) = {}", fmt(th.ex), fmt(th.ey), fmt(th.ez));
    println!(
        "  large regime: lower = {}  upper = {}",
        fmt(th.d_lower),
        fmt(th.d_upper)
    );
    println!("  small regime: beta = {}  alpha = {}", th.beta, th.alpha);
    println!("  mgf flags: X={:?} Y={:?} Z={:?}", th.mgf_x, th.mgf_y, th.mgf_z);
    println!();
}

fn main() {
    // middle-third Cantor measure with equal weights: everything is log2/log3
    show(
        "middle-third uniform",
        &DistributionSpec::point_mass(
            LevelDraw::new(2, 1.0 / 3.0, vec![0.5, 0.5]).unwrap(),
            1.0 / 3.0,
        )
        .unwrap(),
    );

    // same geometry, probabilities uniform on the simplex:
    // upper (1+log2)/log3, lower (1-log2)/log3, small-regime extremes (0, inf)
    show(
        "uniform-simplex Cantor",
        &DistributionSpec::product_form(
            vec![ChildClass {
                t: 2,
                weight: 1.0,
                ratio: RatioDist::PointMass(1.0 / 3.0),
                probs: ProbDist::UniformSimplex,
            }],
            1.0 / 3.0,
        )
        .unwrap(),
    );

    // three children with ratio 1/5: (3/2 + log 3)/log 5 and
    // (3/2 - 3 log 2 + log 3)/log 5
    show(
        "three-child simplex",
        &DistributionSpec::product_form(
            vec![ChildClass {
                t: 3,
                weight: 1.0,
                ratio: RatioDist::PointMass(0.2),
                probs: ProbDist::UniformSimplex,
            }],
            0.25,
        )
        .unwrap(),
    );

    // 1-variable model over two equally likely IFS families:
    // large value log6/log20 for both bounds, small pair (1/2, log3/log5)
    show(
        "two-IFS one-variable",
        &DistributionSpec::discrete_mixture(
            vec![
                WeightedDraw {
                    weight: 0.5,
                    draw: LevelDraw::new(2, 0.25, vec![0.5, 0.5]).unwrap(),
                },
                WeightedDraw {
                    weight: 0.5,
                    draw: LevelDraw::new(3, 0.2, vec![1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0])
                        .unwrap(),
                },
            ],
            0.25,
        )
        .unwrap(),
    );

    // heavy-tailed mixture: ratios uniform over (0, r] are not involved,
    // but the child count is unbounded before truncation
    show(
        "inverse-square mixture (t <= 64)",
        &DistributionSpec::inverse_square_mixture(64, 0.25).unwrap(),
    );

    // ratios drawn uniformly from (0, 1/2] with fixed equal probabilities:
    // E(Z) = 1 + log 2
    show(
        "uniform-ratio pair",
        &DistributionSpec::product_form(
            vec![ChildClass {
                t: 2,
                weight: 1.0,
                ratio: RatioDist::UniformInterval { upper: Some(0.5) },
                probs: ProbDist::PointMass(vec![0.5, 0.5]),
            }],
            0.25,
        )
        .unwrap(),
    );
}
