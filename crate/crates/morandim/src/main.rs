//! Thin command-line front end over the library: theory computation,
//! sampling, tree building, estimation, verification, and report assembly,
//! all driven by one TOML config per experiment.
//!
//! Exit codes: 0 success, 1 verification failure, 2 config parse error,
//! 3 invalid spec, 4 missing inputs. Data goes to stdout and the output
//! directory; diagnostics go to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use morandim::config::{self, ConfigError, RunConfig, TheoryFile};
use morandim::experiments::{self, ExperimentConfig};
use morandim::moran::{sandwich_queries, verify_sandwich, MoranTree, RationalMoranTree};
use morandim::randomness::{self, SpecError};

#[derive(Parser)]
#[command(name = "morandim", version, about = "Random Moran measure toolkit")]
struct Cli {
    /// Worker threads for replicated runs (0 = library default)
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Extra diagnostics on stderr
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print and store the closed-form dimension targets
    Theory {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sample an environment and write it as CSV
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Replaces the seed from the [sample] section
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Build an embedded Moran tree and export its node records
    Build {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Run the configured estimator across replicates
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Replaces the base seed from the [experiment] section
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Sandwich, separation, identity and CDF checks over the config fixture
    VerifyLemmas {
        #[arg(long)]
        config: PathBuf,
    },
    /// Monte Carlo cross-check of the simplex moment closed forms
    McCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Assemble the theory-vs-estimate comparison from prior outputs
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SPEC: u8 = 3;
const EXIT_MISSING: u8 = 4;

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn config_exit(err: &ConfigError) -> u8 {
    match err {
        ConfigError::Spec(_) => EXIT_SPEC,
        ConfigError::MissingSection(_) => EXIT_CONFIG,
        _ => EXIT_CONFIG,
    }
}

fn load(path: &Path, verbose: u8) -> Result<RunConfig, (u8, String)> {
    let config = RunConfig::load(path).map_err(|e| (config_exit(&e), e.to_string()))?;
    config.spec.validate().map_err(|e: SpecError| (EXIT_SPEC, e.to_string()))?;
    if verbose > 0 {
        eprintln!(
            "loaded {} (label {}, spec {})",
            path.display(),
            config.label,
            config.spec.fingerprint()
        );
    }
    Ok(config)
}

fn cmd_theory(config_path: &Path, out: &Path, verbose: u8) -> Result<(), (u8, String)> {
    let config = load(config_path, verbose)?;
    let report =
        randomness::moments(&config.spec).map_err(|e| (EXIT_SPEC, e.to_string()))?;
    let file = TheoryFile::from_report(&config.label, &report);
    let path =
        config::write_theory(out, &file).map_err(|e| (config_exit(&e), e.to_string()))?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "unavailable".into());
    println!("fixture: {}", config.label);
    println!("E(X) = {}", fmt(report.ex));
    println!("E(Y) = {}", fmt(report.ey));
    println!("E(Z) = {}", fmt(report.ez));
    println!("d_lower = {}", fmt(report.d_lower));
    println!("d_upper = {}", fmt(report.d_upper));
    println!("alpha = {}", report.alpha.token());
    println!("beta = {}", report.beta.token());
    println!(
        "mgf flags: X={} Y={} Z={}",
        file.mgf_x, file.mgf_y, file.mgf_z
    );
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_sample(
    config_path: &Path,
    out: &Path,
    seed_override: Option<u64>,
    verbose: u8,
) -> Result<(), (u8, String)> {
    let config = load(config_path, verbose)?;
    let section = config
        .sample
        .as_ref()
        .ok_or((EXIT_CONFIG, "config is missing the [sample] section".to_string()))?;
    let seed = seed_override.unwrap_or(section.seed);
    let env = randomness::sample_environment(&config.spec, seed, section.depth)
        .map_err(|e| (EXIT_SPEC, e.to_string()))?;
    let path = config::write_environment(out, &config.label, &env)
        .map_err(|e| (config_exit(&e), e.to_string()))?;
    println!("sampled {} levels (seed {seed}) -> {}", env.len(), path.display());
    Ok(())
}

fn cmd_build(
    config_path: &Path,
    out: &Path,
    seed_override: Option<u64>,
    verbose: u8,
) -> Result<(), (u8, String)> {
    let config = load(config_path, verbose)?;
    let section = config
        .build
        .as_ref()
        .ok_or((EXIT_CONFIG, "config is missing the [build] section".to_string()))?;
    config.spec.check_embeddable().map_err(|e| (EXIT_SPEC, e.to_string()))?;
    let seed = seed_override.unwrap_or(section.seed);
    let env = randomness::sample_environment(&config.spec, seed, section.depth)
        .map_err(|e| (EXIT_SPEC, e.to_string()))?;
    let tree: morandim::FloatMoranTree =
        MoranTree::build(&env, config.spec.tau, section.policy, section.depth)
            .map_err(|e| (EXIT_SPEC, e.to_string()))?;
    let path = config::write_tree(out, &config.label, &tree)
        .map_err(|e| (config_exit(&e), e.to_string()))?;
    println!(
        "built depth-{} tree with {} nodes (policy {:?}) -> {}",
        tree.depth(),
        tree.node_count(),
        section.policy,
        path.display()
    );
    Ok(())
}

fn cmd_estimate(
    config_path: &Path,
    out: &Path,
    seed_override: Option<u64>,
    verbose: u8,
) -> Result<(), (u8, String)> {
    let config = load(config_path, verbose)?;
    let mut experiment: ExperimentConfig =
        config.experiment_config().map_err(|e| (config_exit(&e), e.to_string()))?;
    if let Some(seed) = seed_override {
        experiment.base_seed = seed;
    }
    let table = experiments::run_replicated(&experiment)
        .map_err(|e| (EXIT_SPEC, e.to_string()))?;
    let path =
        config::write_summary(out, &table).map_err(|e| (config_exit(&e), e.to_string()))?;
    println!("fixture: {} ({:?} regime, {} replicates)", table.label, table.regime, table.replicates);
    for (name, col) in [("lower", &table.lower), ("upper", &table.upper)] {
        let theory = col
            .theory
            .map(|v| v.to_string())
            .unwrap_or_else(|| col.theory_flag.clone());
        let delta =
            col.delta.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into());
        println!(
            "{name}: median {:.6} mean {:.6} sd {:.3e} theory {theory} delta {delta}",
            col.median, col.mean, col.sd
        );
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_verify(config_path: &Path, verbose: u8) -> Result<(), (u8, String)> {
    let config = load(config_path, verbose)?;
    let section = config
        .verify
        .as_ref()
        .ok_or((EXIT_CONFIG, "config is missing the [verify] section".to_string()))?;
    let mut all_ok = true;
    let mut first_failure: Option<String> = None;
    let mut record = |name: &str, ok: bool, detail: String| {
        println!("{}: {} ({detail})", name, if ok { "PASS" } else { "FAIL" });
        if !ok {
            all_ok = false;
            if first_failure.is_none() {
                first_failure = Some(name.to_string());
            }
        }
    };

    // combinatorial identities, exactly zero in rational arithmetic; the
    // float path is only a small-order spot check (its conditioning error
    // grows with the central binomial coefficient)
    let order = section.identity_order_max;
    let mut identities_ok = true;
    let half = num_rational::BigRational::new(1.into(), 2.into());
    for n in 1..=order {
        let exact_zero = |r: num_rational::BigRational| num_traits::Zero::is_zero(&r);
        identities_ok &= randomness::melzak_reciprocal_residual(n)
            .map(exact_zero)
            .map_err(|e| (EXIT_SPEC, e.to_string()))?;
        identities_ok &= randomness::melzak_reciprocal_sq_residual(n)
            .map(exact_zero)
            .map_err(|e| (EXIT_SPEC, e.to_string()))?;
        identities_ok &= randomness::melzak_lambda_residual(n, &half)
            .map(exact_zero)
            .map_err(|e| (EXIT_SPEC, e.to_string()))?;
        if n >= 2 {
            for j in 1..n {
                identities_ok &= randomness::euler_difference_residual(n, j)
                    .map(|r| num_traits::Zero::is_zero(&r))
                    .map_err(|e| (EXIT_SPEC, e.to_string()))?;
            }
        }
        if n <= 8 {
            let float_resid = randomness::melzak_lambda_residual_f64(n, 0.5)
                .map_err(|e| (EXIT_SPEC, e.to_string()))?;
            identities_ok &= float_resid <= 1e-12;
        }
    }
    record(
        "identities",
        identities_ok,
        format!("orders 1..={order} exactly zero in rational arithmetic"),
    );

    // geometric sandwich on the config fixture (rational mode)
    config.spec.check_embeddable().map_err(|e| (EXIT_SPEC, e.to_string()))?;
    let policy = config.build.as_ref().map(|b| b.policy).unwrap_or(
        morandim::PlacementPolicy::EquallySpaced,
    );
    let mut sandwich_ok = true;
    let mut total_queries = 0usize;
    let mut passes = 0usize;
    for e in 0..section.sandwich_envs {
        let seed = randomness::mix_seed(section.seed, e as u64);
        let env = randomness::sample_environment(&config.spec, seed, section.sandwich_depth)
            .map_err(|err| (EXIT_SPEC, err.to_string()))?;
        let tree: RationalMoranTree =
            MoranTree::build(&env, config.spec.tau, policy, section.sandwich_depth)
                .map_err(|err| (EXIT_SPEC, err.to_string()))?;
        let queries = sandwich_queries(&tree, section.sandwich_queries_per_env, seed);
        let report =
            verify_sandwich(&tree, &queries).map_err(|err| (EXIT_SPEC, err.to_string()))?;
        total_queries += queries.len();
        passes += report.passes();
        if !report.all_pass() {
            sandwich_ok = false;
        }
    }
    record(
        "sandwich",
        sandwich_ok,
        format!("{passes}/{total_queries} queries across {} environments", section.sandwich_envs),
    );

    // separation gaps at tau * inflation (inflation > 1 is the negative control)
    let check_tau = config.spec.tau * section.check_tau_inflation;
    let env = randomness::sample_environment(
        &config.spec,
        randomness::mix_seed(section.seed, 0x6a9),
        section.sandwich_depth,
    )
    .map_err(|err| (EXIT_SPEC, err.to_string()))?;
    let tree: RationalMoranTree =
        MoranTree::build(&env, config.spec.tau, policy, section.sandwich_depth)
            .map_err(|err| (EXIT_SPEC, err.to_string()))?;
    match tree.verify_separation(check_tau) {
        Ok(()) => record("separation", true, format!("gaps vs tau' = {check_tau:.6}")),
        Err(v) => record("separation", false, v.to_string()),
    }

    // CDF oracle bands
    let mut cdf_ok = true;
    let mut cdf_detail = Vec::new();
    for &t in &section.cdf_t_values {
        let check = experiments::cdf_dkw_check(t, section.cdf_samples, section.seed, 0.99);
        cdf_detail.push(format!(
            "T={t}: dev ({:.2e}, {:.2e}) band {:.2e}",
            check.max_dev_min, check.max_dev_max, check.band
        ));
        if !check.passes() {
            cdf_ok = false;
        }
    }
    record("cdf-bands", cdf_ok, cdf_detail.join("; "));

    if all_ok {
        Ok(())
    } else {
        Err((EXIT_CHECK_FAILED, format!("first failing check: {}", first_failure.unwrap())))
    }
}

fn cmd_mc_check(config_path: &Path, verbose: u8) -> Result<(), (u8, String)> {
    let config = load(config_path, verbose)?;
    let section = config
        .mc_check
        .as_ref()
        .ok_or((EXIT_CONFIG, "config is missing the [mc_check] section".to_string()))?;
    let mut all_ok = true;
    for &t in &section.t_values {
        let ex = randomness::closed_form_ex(t).map_err(|e| (EXIT_SPEC, e.to_string()))?;
        let ey = randomness::closed_form_ey(t).map_err(|e| (EXIT_SPEC, e.to_string()))?;
        let mc = experiments::mc_moment_oracle(t, section.samples, section.seed);
        let dev_x = (mc.ex_hat - ex).abs() / mc.se_x;
        let dev_y = (mc.ey_hat - ey).abs() / mc.se_y;
        let ok = dev_x <= section.se_multiplier && dev_y <= section.se_multiplier;
        if !ok {
            all_ok = false;
        }
        println!(
            "T={t}: E(X) {:.6} vs {:.6} ({dev_x:.2} se), E(Y) {:.6} vs {:.6} ({dev_y:.2} se): {}",
            mc.ex_hat,
            ex,
            mc.ey_hat,
            ey,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if all_ok {
        Ok(())
    } else {
        Err((EXIT_CHECK_FAILED, "Monte Carlo moment check failed".to_string()))
    }
}

fn cmd_report(out: &Path) -> Result<(), (u8, String)> {
    let (rows, missing) = config::assemble_report(out).map_err(|e| match &e {
        ConfigError::Io { .. } => (EXIT_MISSING, e.to_string()),
        _ => (config_exit(&e), e.to_string()),
    })?;
    if rows.is_empty() || !missing.is_empty() {
        let mut message = String::from("missing inputs:");
        if rows.is_empty() {
            message.push_str(" no theory/estimate pairs found;");
        }
        for path in &missing {
            message.push_str(&format!(" {}", path.display()));
        }
        return Err((EXIT_MISSING, message));
    }
    println!("{:<28} {:<14} {:>12} {:>12} {:>12}", "fixture", "regime", "theory", "estimate", "delta");
    for r in &rows {
        println!(
            "{:<28} {:<14} {:>12} {:>12.6} {:>12}",
            r.fixture, r.regime, r.theory, r.estimate, r.delta
        );
    }
    let path =
        config::write_report_csv(out, &rows).map_err(|e| (config_exit(&e), e.to_string()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global()
        {
            eprintln!("warning: could not set worker count: {e}");
        }
    }
    let outcome = match &cli.command {
        Command::Theory { config, out } => cmd_theory(config, out, cli.verbose),
        Command::Sample { config, out, seed_override } => {
            cmd_sample(config, out, *seed_override, cli.verbose)
        }
        Command::Build { config, out, seed_override } => {
            cmd_build(config, out, *seed_override, cli.verbose)
        }
        Command::Estimate { config, out, seed_override } => {
            cmd_estimate(config, out, *seed_override, cli.verbose)
        }
        Command::VerifyLemmas { config } => cmd_verify(config, cli.verbose),
        Command::McCheck { config } => cmd_mc_check(config, cli.verbose),
        Command::Report { out } => cmd_report(out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => fail(code, message),
    }
}
