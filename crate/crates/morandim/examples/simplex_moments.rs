//! Uniform-simplex order statistics: closed forms against the Monte Carlo
//! oracle, the min/max CDFs, and the exact identities behind the formulas.
//!
//! ```bash
//! cargo run --release -p morandim --example simplex_moments
//! ```

use morandim::experiments::{cdf_dkw_check, mc_moment_oracle};
use morandim::randomness::{
    closed_form_ex, closed_form_ey, max_cdf, melzak_identity_check, min_cdf,
};

fn main() {
    println!("T   E(X) closed   E(X) mc      E(Y) closed   E(Y) mc");
    for t in 2..=6 {
        let mc = mc_moment_oracle(t, 200_000, 11);
        println!(
            "{t}   {:<12.6}  {:<10.6}   {:<12.6}  {:<10.6}",
            closed_form_ex(t).unwrap(),
            mc.ex_hat,
            closed_form_ey(t).unwrap(),
            mc.ey_hat
        );
    }

    println!("\nCDF spot values:");
    println!("  P(min <= 0.1) for T=3: {:.4}", min_cdf(3, 0.1));
    println!("  P(max <= 0.75) for T=2: {:.4}", max_cdf(2, 0.75));
    println!("  P(max <= 0.5) for T=3: {:.4}", max_cdf(3, 0.5));

    for t in [2usize, 4] {
        let check = cdf_dkw_check(t, 100_000, 3, 0.99);
        println!(
            "  T={t}: sup deviations ({:.2e}, {:.2e}) within 99% DKW band {:.2e}: {}",
            check.max_dev_min,
            check.max_dev_max,
            check.band,
            check.passes()
        );
    }

    println!("\nidentity residuals (rational arithmetic unless noted):");
    for n in [5usize, 12, 20] {
        let report = melzak_identity_check(n, 0.5).unwrap();
        println!(
            "  n={n:<3} reciprocal {} reciprocal^2 {} lambda-form {:.1e} (float) euler {}",
            report.reciprocal, report.reciprocal_sq, report.lambda_form, report.euler_max
        );
    }
}
