//! Large-regime ratio-of-sums estimators on the uniform-simplex Cantor
//! fixture, converging to (1 +/- log 2)/log 3.
//!
//! ```bash
//! cargo run --release -p morandim --example large_regime_estimate
//! ```

use morandim::dimfn::DimensionFunction;
use morandim::estimators::{estimate_large, sanity_chain, estimate_small, Window};
use morandim::randomness::{
    moments, sample_environment, ChildClass, DistributionSpec, ProbDist, RatioDist,
};

fn main() {
    let spec = DistributionSpec::product_form(
        vec![ChildClass {
            t: 2,
            weight: 1.0,
            ratio: RatioDist::PointMass(1.0 / 3.0),
            probs: ProbDist::UniformSimplex,
        }],
        1.0 / 3.0,
    )
    .unwrap();
    let th = moments(&spec).unwrap();
    println!(
        "targets: lower {:.6} upper {:.6}",
        th.d_lower.unwrap(),
        th.d_upper.unwrap()
    );

    let phi = DimensionFunction::constant(12.0).unwrap();
    let k_cap = 5000;
    for (label, window, env_len) in [
        ("window [50, 100]", Window::new(50, 100), 6_000),
        ("window [200, 400]", Window::new(200, 400), 10_000),
    ] {
        let env = sample_environment(&spec, 1, env_len).unwrap();
        let report = estimate_large(&env, &phi, window, k_cap).unwrap();
        println!(
            "{label}: lower {:.6} (dev {:+.4}) upper {:.6} (dev {:+.4})",
            report.lower,
            report.lower - th.d_lower.unwrap(),
            report.upper,
            report.upper - th.d_upper.unwrap()
        );
        let small = estimate_small(&env, env_len).unwrap();
        match sanity_chain(&small, &report) {
            Ok(()) => println!("  ordering chain holds: {:.4} <= {:.4} <= {:.4} <= {:.4}",
                small.lower, report.lower, report.upper, small.upper),
            Err(v) => println!("  chain violated: {v:?}"),
        }
    }
}
