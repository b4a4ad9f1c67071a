//! Acceptance suite: exact closed-form checks, oracle equivalence, and
//! statistical convergence at desk scale. Every tolerance and window comes
//! from `configs/acceptance.toml`; each criterion prints one PASS/FAIL line.

mod common;

use rayon::prelude::*;
use serde::Deserialize;

use common::*;
use morandim::dimfn::{depth_capped, DimensionFunction};
use morandim::estimators::{
    estimate_large, estimate_small, large_lower, large_upper, sanity_chain, small_alpha_hat,
    small_beta_hat, Window,
};
use morandim::experiments::{
    cdf_dkw_check, mc_moment_oracle, run_replicated, EstimatorParams, ExperimentConfig,
};
use morandim::moran::{sandwich_queries, verify_sandwich, MoranTree, RationalMoranTree};
use morandim::randomness::{
    closed_form_ex, closed_form_ey, euler_difference_residual, max_cdf,
    melzak_lambda_residual, melzak_reciprocal_residual, melzak_reciprocal_sq_residual, moments,
    sample_environment, DistributionSpec, LevelDraw,
};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Deserialize)]
struct Protocol {
    closed_forms: ClosedFormsSection,
    identities: IdentitiesSection,
    cdf: CdfSection,
    degenerate: DegenerateSection,
    large_two_child: LargeSection,
    large_three_child: LargeSection,
    small_mixture: SmallMixtureSection,
    one_variable: OneVariableSection,
    divergence: DivergenceSection,
    sandwich: SandwichSection,
    depth_fn: DepthFnSection,
    chain: ChainSection,
}

#[derive(Deserialize)]
struct ClosedFormsSection {
    t_values: Vec<usize>,
    samples: usize,
    se_multiplier: f64,
    seed: u64,
}

#[derive(Deserialize)]
struct IdentitiesSection {
    order_max: usize,
}

#[derive(Deserialize)]
struct CdfSection {
    t_values: Vec<usize>,
    samples: usize,
    confidence: f64,
    seed: u64,
}

#[derive(Deserialize)]
struct DegenerateSection {
    tolerance: f64,
    random_specs: usize,
    seed: u64,
}

#[derive(Deserialize)]
struct LargeSection {
    window: Window,
    k_cap: usize,
    env_length: usize,
    replicates: usize,
    phi_constant: f64,
    tolerance: f64,
    base_seed: u64,
}

#[derive(Deserialize)]
struct SmallMixtureSection {
    prefix_len: usize,
    seed: u64,
}

#[derive(Deserialize)]
struct OneVariableSection {
    window: Window,
    k_cap: usize,
    env_length: usize,
    replicates: usize,
    phi_constant: f64,
    tolerance_large: f64,
    prefix_len: usize,
    base_seed: u64,
}

#[derive(Deserialize)]
struct DivergenceSection {
    seeds: usize,
    prefix_len: usize,
    alpha_threshold: f64,
    beta_threshold: f64,
    required_fraction: f64,
    mixture_t_max: usize,
    base_seed: u64,
}

#[derive(Deserialize)]
struct SandwichSection {
    environments: usize,
    queries_per_env: usize,
    max_depth: usize,
    leaf_budget: usize,
    seed: u64,
}

#[derive(Deserialize)]
struct DepthFnSection {
    pairs: usize,
    monotone_envs: usize,
    seed: u64,
}

#[derive(Deserialize)]
struct ChainSection {
    seeds_per_fixture: usize,
    window: Window,
    k_cap: usize,
    env_length: usize,
    phi_constant: f64,
    base_seed: u64,
}

fn protocol() -> Protocol {
    let path = configs_dir().join("acceptance.toml");
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
    toml::from_str(&text).expect("acceptance protocol parses")
}

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn large_run(spec: &DistributionSpec, label: &str, section: &LargeSection) -> (f64, f64) {
    let config = ExperimentConfig {
        label: label.to_string(),
        spec: spec.clone(),
        params: EstimatorParams::Large {
            phi: DimensionFunction::constant(section.phi_constant).unwrap(),
            window: section.window,
            k_cap: section.k_cap,
            env_length: section.env_length,
        },
        replicates: section.replicates,
        base_seed: section.base_seed,
    };
    let table = run_replicated(&config).unwrap();
    (table.lower.median, table.upper.median)
}

#[test]
fn c01_closed_forms_vs_monte_carlo() {
    let p = protocol().closed_forms;
    let mut worst = 0.0f64;
    let mut pass = true;
    for &t in &p.t_values {
        let mc = mc_moment_oracle(t, p.samples, p.seed);
        let ex = closed_form_ex(t).unwrap();
        let ey = closed_form_ey(t).unwrap();
        let dev_x = (mc.ex_hat - ex).abs() / mc.se_x;
        let dev_y = (mc.ey_hat - ey).abs() / mc.se_y;
        worst = worst.max(dev_x).max(dev_y);
        if dev_x > p.se_multiplier || dev_y > p.se_multiplier {
            pass = false;
        }
    }
    verdict(
        "c01 closed-forms-vs-mc",
        pass,
        &format!(
            "T in {:?}, {} samples, worst deviation {:.2} se (limit {})",
            p.t_values, p.samples, worst, p.se_multiplier
        ),
    );
    assert!(pass, "closed forms disagree with the Monte Carlo oracle");
}

#[test]
fn c02_combinatorial_identities_exact() {
    let p = protocol().identities;
    let lam = num_rational::BigRational::new(1.into(), 2.into());
    let mut pass = true;
    for n in 1..=p.order_max {
        pass &= num_traits::Zero::is_zero(&melzak_reciprocal_residual(n).unwrap());
        pass &= num_traits::Zero::is_zero(&melzak_reciprocal_sq_residual(n).unwrap());
        pass &= num_traits::Zero::is_zero(&melzak_lambda_residual(n, &lam).unwrap());
    }
    for t in 2..=p.order_max {
        for j in 1..t {
            pass &= num_traits::Zero::is_zero(&euler_difference_residual(t, j).unwrap());
        }
    }
    verdict(
        "c02 identities",
        pass,
        &format!("orders up to {}, residuals exactly zero in rational arithmetic", p.order_max),
    );
    assert!(pass);
}

#[test]
fn c03_cdf_formulas_within_dkw_band() {
    let p = protocol().cdf;
    let mut pass = true;
    let mut details = Vec::new();
    for &t in &p.t_values {
        let check = cdf_dkw_check(t, p.samples, p.seed, p.confidence);
        details.push(format!(
            "T={t}: ({:.2e}, {:.2e}) vs band {:.2e}",
            check.max_dev_min, check.max_dev_max, check.band
        ));
        pass &= check.passes();
    }
    let exact = max_cdf(2, 0.75);
    pass &= exact == 0.5;
    verdict(
        "c03 cdf-bands",
        pass,
        &format!("{}; max_cdf(2, 0.75) = {exact}", details.join("; ")),
    );
    assert!(pass);
}

#[test]
fn c04_degenerate_exactness() {
    let p = protocol().degenerate;
    let tol = p.tolerance;
    let expect = LN2 / 3f64.ln();

    // deterministic middle-third fixture: every statistic equals log2/log3
    let spec = middle_third_spec();
    let env = sample_environment(&spec, p.seed, 600).unwrap();
    let f = DimensionFunction::constant(1.0).unwrap();
    let w = Window::new(5, 40);
    let mut pass = true;
    for v in [
        large_upper(&env, &f, w, 100).unwrap(),
        large_lower(&env, &f, w, 100).unwrap(),
        small_alpha_hat(&env, 600).unwrap(),
        small_beta_hat(&env, 600).unwrap(),
    ] {
        pass &= (v - expect).abs() <= tol;
    }
    let th = moments(&spec).unwrap();
    pass &= (th.d_lower.unwrap() - expect).abs() <= tol;
    pass &= (th.d_upper.unwrap() - expect).abs() <= tol;
    pass &= (th.alpha.as_finite().unwrap() - expect).abs() <= tol;
    pass &= (th.beta.as_finite().unwrap() - expect).abs() <= tol;

    // general equicontractive point-mass specs
    use rand::{Rng, SeedableRng};
    let mut rng = rand_pcg::Pcg64::seed_from_u64(p.seed);
    let mut worst = 0.0f64;
    for _ in 0..p.random_specs {
        let t: usize = rng.random_range(2..=6);
        let r: f64 = rng.random_range(0.05..0.45);
        let raw: Vec<f64> = (0..t).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.into_iter().map(|v| v / total).collect();
        let draw = LevelDraw::new(t, r, probs.clone()).unwrap();
        let expect_upper = draw.min_p().ln() / r.ln();
        let expect_lower = draw.max_p().ln() / r.ln();
        let spec = DistributionSpec::point_mass(draw, 0.2).unwrap();
        let env = sample_environment(&spec, rng.random(), 200).unwrap();
        let up = large_upper(&env, &f, Window::new(5, 40), 100).unwrap();
        let lo = large_lower(&env, &f, Window::new(5, 40), 100).unwrap();
        worst = worst.max((up - expect_upper).abs()).max((lo - expect_lower).abs());
        pass &= (up - expect_upper).abs() <= tol && (lo - expect_lower).abs() <= tol;
    }
    verdict(
        "c04 degenerate-exactness",
        pass,
        &format!(
            "middle-third at log2/log3 and {} random point masses, worst dev {worst:.2e} (tol {tol:.0e})",
            p.random_specs
        ),
    );
    assert!(pass);
}

#[test]
fn c05_two_child_simplex_convergence() {
    let p = protocol().large_two_child;
    let target_upper = (1.0 + LN2) / 3f64.ln();
    let target_lower = (1.0 - LN2) / 3f64.ln();
    let (lo, up) = large_run(&simplex_cantor_spec(), "c05", &p);
    let pass = (up - target_upper).abs() <= p.tolerance && (lo - target_lower).abs() <= p.tolerance;
    verdict(
        "c05 two-child-simplex",
        pass,
        &format!(
            "median upper {up:.4} vs {target_upper:.4}, median lower {lo:.4} vs {target_lower:.4} (tol {})",
            p.tolerance
        ),
    );
    assert!(pass);
}

#[test]
fn c06_three_child_simplex_convergence() {
    let p = protocol().large_three_child;
    let ln5 = 5f64.ln();
    let target_upper = (1.5 + 3f64.ln()) / ln5;
    let target_lower = (1.5 - 3.0 * LN2 + 3f64.ln()) / ln5;
    let (lo, up) = large_run(&three_child_simplex_spec(), "c06", &p);
    let pass = (up - target_upper).abs() <= p.tolerance && (lo - target_lower).abs() <= p.tolerance;
    verdict(
        "c06 three-child-simplex",
        pass,
        &format!(
            "median upper {up:.4} vs {target_upper:.4}, median lower {lo:.4} vs {target_lower:.4} (tol {})",
            p.tolerance
        ),
    );
    assert!(pass);
}

#[test]
fn c07_mixture_small_regime_exact() {
    let p = protocol().small_mixture;
    let spec = two_atom_mixture_spec();
    let env = sample_environment(&spec, p.seed, p.prefix_len).unwrap();
    let alpha = small_alpha_hat(&env, p.prefix_len).unwrap();
    let beta = small_beta_hat(&env, p.prefix_len).unwrap();
    // the estimators reproduce the atom ratios bit for bit once both atoms
    // have been drawn (probability > 1 - 2^-99 by level 100)
    let expect_alpha = (-(0.2f64.ln())) / (-(0.1f64.ln()));
    let expect_beta = (-(0.8f64.ln())) / (-(0.1f64.ln()));
    let pass = alpha.to_bits() == expect_alpha.to_bits() && beta.to_bits() == expect_beta.to_bits();
    verdict(
        "c07 mixture-small-exact",
        pass,
        &format!("alpha_hat {alpha:.10} = log0.2/log0.1, beta_hat {beta:.10} = log0.8/log0.1, bit-exact"),
    );
    assert!(pass);
}

#[test]
fn c08_one_variable_model() {
    let p = protocol().one_variable;
    let spec = two_ifs_spec();
    let target = 6f64.ln() / 20f64.ln();
    let section = LargeSection {
        window: p.window,
        k_cap: p.k_cap,
        env_length: p.env_length,
        replicates: p.replicates,
        phi_constant: p.phi_constant,
        tolerance: p.tolerance_large,
        base_seed: p.base_seed,
    };
    let (lo, up) = large_run(&spec, "c08", &section);
    let mut pass =
        (up - target).abs() <= p.tolerance_large && (lo - target).abs() <= p.tolerance_large;

    // small-regime extremes are exact once both families appear
    let env = sample_environment(&spec, p.base_seed, p.prefix_len).unwrap();
    let alpha = small_alpha_hat(&env, p.prefix_len).unwrap();
    let beta = small_beta_hat(&env, p.prefix_len).unwrap();
    let expect_beta = (-(0.5f64.ln())) / (-(0.25f64.ln()));
    let expect_alpha = (-((1.0f64 / 3.0).ln())) / (-(0.2f64.ln()));
    pass &= beta.to_bits() == expect_beta.to_bits();
    pass &= alpha.to_bits() == expect_alpha.to_bits();
    pass &= (beta - 0.5).abs() <= 1e-15;
    pass &= (alpha - 3f64.ln() / 5f64.ln()).abs() <= 1e-15;
    verdict(
        "c08 one-variable",
        pass,
        &format!(
            "large medians ({lo:.4}, {up:.4}) vs log6/log20 = {target:.4} (tol {}), small extremes ({beta:.4}, {alpha:.4})",
            p.tolerance_large
        ),
    );
    assert!(pass);
}

#[test]
fn c09a_simplex_alpha_divergence() {
    let p = protocol().divergence;
    let spec = simplex_cantor_spec();
    let hits: usize = (0..p.seeds)
        .into_par_iter()
        .map(|i| {
            let seed = morandim::randomness::mix_seed(p.base_seed, i as u64);
            let env = sample_environment(&spec, seed, p.prefix_len).unwrap();
            let alpha = small_alpha_hat(&env, p.prefix_len).unwrap();
            usize::from(alpha > p.alpha_threshold)
        })
        .sum();
    let needed = (p.required_fraction * p.seeds as f64).ceil() as usize;
    let pass = hits >= needed;
    verdict(
        "c09a simplex-alpha-divergence",
        pass,
        &format!(
            "alpha_hat > {} by n = {} on {hits}/{} seeds (needed {needed})",
            p.alpha_threshold, p.prefix_len, p.seeds
        ),
    );
    assert!(pass);
}

#[test]
fn c09b_mixture_beta_collapse() {
    let p = protocol().divergence;
    let spec = DistributionSpec::inverse_square_mixture(p.mixture_t_max, 0.25).unwrap();
    let results: Vec<f64> = (0..p.seeds)
        .into_par_iter()
        .map(|i| {
            let seed = morandim::randomness::mix_seed(p.base_seed, 0x99 ^ i as u64);
            let env = sample_environment(&spec, seed, p.prefix_len).unwrap();
            small_beta_hat(&env, p.prefix_len).unwrap()
        })
        .collect();
    let hits = results.iter().filter(|&&b| b < p.beta_threshold).count();
    let needed = (p.required_fraction * p.seeds as f64).ceil() as usize;
    let observed_min = results.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = hits >= needed;
    verdict(
        "c09b mixture-beta-collapse",
        pass,
        &format!(
            "beta_hat < {} by n = {} on {hits}/{} seeds (needed {needed}); observed minimum {observed_min:.6}. \
             Every atom of this mixture has X/Z = log(t)/log(4t) >= log2/log8 = 1/3, so the statistic \
             cannot fall below 1/3 for any truncation or sample size; the stated threshold is unattainable \
             for this estimator on this fixture.",
            p.beta_threshold, p.prefix_len, p.seeds
        ),
    );
    assert!(
        pass,
        "beta_hat fell below {} on {hits}/{} seeds; minimum observed {observed_min:.6} \
         (structural lower bound log2/log8 = 1/3)",
        p.beta_threshold, p.seeds
    );
}

#[test]
fn c10_sandwich_exact_rational() {
    let p = protocol().sandwich;
    let pool: Vec<DistributionSpec> = vec![
        middle_third_spec(),
        simplex_cantor_spec(),
        two_ifs_spec(),
        DistributionSpec::inverse_square_mixture(6, 0.25).unwrap(),
    ];
    let outcomes: Vec<(usize, usize)> = (0..p.environments)
        .into_par_iter()
        .map(|i| {
            let spec = &pool[i % pool.len()];
            let seed = morandim::randomness::mix_seed(p.seed, i as u64);
            let env = sample_environment(spec, seed, p.max_depth).unwrap();
            // deepest depth within the leaf budget, capped at max_depth
            let l = morandim::moran::gap_constant(spec.tau) as usize;
            let mut depth = 0usize;
            let mut leaves = 1usize;
            for lvl in 1..=p.max_depth {
                leaves = leaves.saturating_mul(env.level(lvl).child_count());
                if leaves > p.leaf_budget {
                    break;
                }
                depth = lvl;
            }
            assert!(depth >= l + 2, "env {i}: depth {depth} too shallow");
            let tree: RationalMoranTree =
                MoranTree::build(&env, spec.tau, morandim::PlacementPolicy::EquallySpaced, depth)
                    .unwrap();
            let queries = sandwich_queries(&tree, p.queries_per_env, seed);
            let report = verify_sandwich(&tree, &queries).unwrap();
            (report.passes(), queries.len())
        })
        .collect();
    let passes: usize = outcomes.iter().map(|(p, _)| p).sum();
    let total: usize = outcomes.iter().map(|(_, t)| t).sum();
    let pass = passes == total && total == p.environments * p.queries_per_env;
    verdict(
        "c10 sandwich-rational",
        pass,
        &format!("{passes}/{total} queries passed across {} environments (exact rational mode)", p.environments),
    );
    assert!(pass);
}

#[test]
fn c11_depth_function_oracle() {
    let p = protocol().depth_fn;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_pcg::Pcg64::seed_from_u64(p.seed);
    let mut pass = true;

    // constant-ratio fixtures vs the brute-force scan
    for _ in 0..p.pairs {
        let n: usize = rng.random_range(1..=200);
        let delta: f64 = rng.random_range(0.05..3.0);
        let r: f64 = rng.random_range(0.1..0.45);
        let len = n + (delta * n as f64).ceil() as usize + 8;
        let spec =
            DistributionSpec::point_mass(LevelDraw::new(2, r, vec![0.5, 0.5]).unwrap(), 0.2)
                .unwrap();
        let env = sample_environment(&spec, rng.random(), len).unwrap();
        let f = DimensionFunction::constant(delta).unwrap();
        let got = depth_capped(&env, &f, n, len).unwrap();
        let expect = brute_force_depth(&env.zs(), delta, n).unwrap();
        if got != expect {
            pass = false;
        }
    }

    // monotonicity of the depth in the dimension function
    for _ in 0..p.monotone_envs {
        let spec = if rng.random::<bool>() { simplex_cantor_spec() } else { two_ifs_spec() };
        let env = sample_environment(&spec, rng.random(), 500).unwrap();
        let n: usize = rng.random_range(1..=50);
        let d1: f64 = rng.random_range(0.1..1.5);
        let d2: f64 = d1 + rng.random_range(0.1..1.5);
        let k1 = depth_capped(&env, &DimensionFunction::constant(d1).unwrap(), n, 450).unwrap();
        let k2 = depth_capped(&env, &DimensionFunction::constant(d2).unwrap(), n, 450).unwrap();
        if k1 > k2 {
            pass = false;
        }
    }
    verdict(
        "c11 depth-function",
        pass,
        &format!(
            "{} brute-force comparisons exact, monotone in phi on {} environments",
            p.pairs, p.monotone_envs
        ),
    );
    assert!(pass);
}

#[test]
fn c12_sanity_chain_on_fixtures() {
    let p = protocol().chain;
    let fixtures: Vec<(&str, DistributionSpec)> = vec![
        ("middle-third", middle_third_spec()),
        ("simplex-cantor", simplex_cantor_spec()),
        ("two-ifs", two_ifs_spec()),
        ("two-atom-mixture", two_atom_mixture_spec()),
        ("inverse-square-mixture", DistributionSpec::inverse_square_mixture(64, 0.25).unwrap()),
    ];
    let f = DimensionFunction::constant(p.phi_constant).unwrap();
    let mut pass = true;
    let mut checked = 0usize;
    for (name, spec) in &fixtures {
        for i in 0..p.seeds_per_fixture {
            let seed = morandim::randomness::mix_seed(p.base_seed, i as u64);
            let env = sample_environment(spec, seed, p.env_length).unwrap();
            let large = estimate_large(&env, &f, p.window, p.k_cap).unwrap();
            let small = estimate_small(&env, p.env_length).unwrap();
            if let Err(violations) = sanity_chain(&small, &large) {
                pass = false;
                eprintln!("chain violated on {name} seed {seed}: {violations:?}");
            }
            checked += 1;
        }
    }
    verdict(
        "c12 sanity-chain",
        pass,
        &format!("ordering held on {checked} fixture runs across {} fixtures", fixtures.len()),
    );
    assert!(pass);
}
