//! The depth function phi(n) and the zeta/chi threshold diagnostic.
//!
//! phi(n) counts the extra levels needed to shrink the level-n scale to its
//! (1 + Phi)-th power. For functions proportional to log|log x|/|log x| the
//! depth grows like the thresholds themselves, which is what the diagnostic
//! table makes visible.
//!
//! ```bash
//! cargo run --release -p morandim --example depth_thresholds
//! ```

use morandim::dimfn::{chi_threshold, depth, zeta_threshold, DimensionFunction, Regime};
use morandim::experiments::depth_threshold_study;
use morandim::randomness::{
    sample_environment, ChildClass, DistributionSpec, LevelDraw, ProbDist, RatioDist,
};

fn main() {
    // deterministic check: constant ratios make phi(n) = ceil(n * delta)
    let spec = DistributionSpec::point_mass(
        LevelDraw::new(2, 1.0 / 3.0, vec![0.5, 0.5]).unwrap(),
        1.0 / 3.0,
    )
    .unwrap();
    let env = sample_environment(&spec, 1, 4000).unwrap();
    let f = DimensionFunction::constant(0.5).unwrap();
    for n in [10usize, 100, 1000] {
        println!("constant ratios: phi({n}) = {}", depth(&env, &f, n).unwrap());
    }

    let ez = 3f64.ln();
    println!(
        "thresholds at N = 100: zeta {:.4} chi {:.4}",
        zeta_threshold(1.0, 100, ez),
        chi_threshold(1.0, 100, ez)
    );

    // boundary-family dimension function against uniform ratios
    let uniform = DistributionSpec::product_form(
        vec![ChildClass {
            t: 2,
            weight: 1.0,
            ratio: RatioDist::UniformInterval { upper: Some(0.5) },
            probs: ProbDist::PointMass(vec![0.5, 0.5]),
        }],
        0.25,
    )
    .unwrap();
    let phi = DimensionFunction::log_log_multiple(2.0).unwrap().with_regime(Regime::Unclassified);
    let rows =
        depth_threshold_study(&uniform, &phi, 2.0, 1.0, &[50, 100, 200, 400], 500, 9, 100_000)
            .unwrap();
    println!("\nN     zeta      chi       P(phi<zeta)  P(phi>chi)  truncated");
    for r in rows {
        println!(
            "{:<5} {:<9.3} {:<9.3} {:<12.3} {:<11.3} {}",
            r.n, r.zeta, r.chi, r.freq_phi_lt_zeta, r.freq_phi_gt_chi, r.truncated
        );
    }
}
