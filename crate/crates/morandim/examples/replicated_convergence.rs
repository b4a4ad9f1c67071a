//! Replicated Monte Carlo runs with summary tables against the closed-form
//! targets.
//!
//! ```bash
//! cargo run --release -p morandim --example replicated_convergence
//! ```

use morandim::dimfn::DimensionFunction;
use morandim::estimators::Window;
use morandim::experiments::{run_replicated, EstimatorParams, ExperimentConfig};
use morandim::randomness::{ChildClass, DistributionSpec, ProbDist, RatioDist};

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

    println!("uniform-simplex Cantor, 32 replicates per window size\n");
    println!("{:<22} {:>10} {:>10} {:>10} {:>10}", "window", "median", "q05", "q95", "delta");
    for (name, window, env_len) in [
        ("[50, 100]", Window::new(50, 100), 6_000),
        ("[100, 200]", Window::new(100, 200), 8_000),
        ("[200, 400]", Window::new(200, 400), 10_000),
    ] {
        let config = ExperimentConfig {
            label: format!("simplex-cantor {name}"),
            spec: spec.clone(),
            params: EstimatorParams::Large {
                phi: DimensionFunction::constant(12.0).unwrap(),
                window,
                k_cap: 5000,
                env_length: env_len,
            },
            replicates: 32,
            base_seed: 20240801,
        };
        let table = run_replicated(&config).unwrap();
        for (bound, col) in [("upper", &table.upper), ("lower", &table.lower)] {
            println!(
                "{:<22} {:>10.4} {:>10.4} {:>10.4} {:>+10.4}",
                format!("{name} {bound}"),
                col.median,
                col.q05,
                col.q95,
                col.delta.unwrap()
            );
        }
    }

    // the per-replicate column reproduces in isolation
    let config = ExperimentConfig {
        label: "isolation".into(),
        spec,
        params: EstimatorParams::Large {
            phi: DimensionFunction::constant(12.0).unwrap(),
            window: Window::new(50, 100),
            k_cap: 5000,
            env_length: 6_000,
        },
        replicates: 8,
        base_seed: 1,
    };
    let table = run_replicated(&config).unwrap();
    let solo = morandim::experiments::run_single_replicate(&config, 5).unwrap();
    assert_eq!(solo.upper.to_bits(), table.rows[5].upper.to_bits());
    println!("\nreplicate 5 rerun in isolation is bit-identical");
}
