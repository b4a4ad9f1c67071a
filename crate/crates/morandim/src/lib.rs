//! Random Moran sets and measures on [0,1]: construction, closed-form
//! dimension targets, and empirical estimators.
//!
//! A random Moran measure arises from iid level draws (t, r, p): each step-n
//! set spawns t children scaled by r, separated by gaps of at least
//! tau * r * diam(parent), with measure split by the probability vector p.
//! For dimension functions Φ large relative to log|log x|/|log x| the upper
//! and lower Φ-dimensions of the measure are almost surely E(Y)/E(Z) and
//! E(X)/E(Z), where X = -log(max p), Y = -log(min p), Z = -log r; for small
//! Φ they are governed by the essential extremes of the per-level ratios.
//! This crate computes those targets in closed form, samples environments
//! reproducibly, realizes truncated trees geometrically (with an exact
//! rational oracle mode), and estimates the dimensions empirically.
//!
//! ## Modules
//!
//! - [`dimfn`] — dimension functions Φ, regime declarations, the depth
//!   function φ, and the ζ/χ depth thresholds.
//! - [`randomness`] — level distributions, counter-based sampling, exact
//!   moments and simplex order-statistic laws, combinatorial identities.
//! - [`moran`] — embedded Moran trees, placement policies, ball-measure
//!   bounds, and the ball/Moran-set sandwich verification.
//! - [`estimators`] — large-regime ratio-of-sums and small-regime extreme
//!   estimators with the ordering sanity chain.
//! - [`experiments`] — replicated runs, summary tables, Monte Carlo
//!   oracles, and the depth-threshold diagnostic.
//! - [`config`] — TOML experiment configs and the on-disk artifact formats.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --release -p morandim --example theory_closed_forms
//! cargo run --release -p morandim --example sample_environments
//! cargo run --release -p morandim --example cantor_tree
//! cargo run --release -p morandim --example large_regime_estimate
//! cargo run --release -p morandim --example small_regime_extremes
//! cargo run --release -p morandim --example depth_thresholds
//! cargo run --release -p morandim --example simplex_moments
//! cargo run --release -p morandim --example sandwich_verification
//! cargo run --release -p morandim --example replicated_convergence
//! ```
//!
//! The `morandim` binary exposes the same machinery over config files; see
//! the repository README.

mod dd;

pub mod config;
pub mod dimfn;
pub mod estimators;
pub mod experiments;
pub mod moran;
pub mod randomness;

pub use dimfn::{DimFnKind, DimensionFunction, Regime};
pub use estimators::{EstimateReport, EstimatorRegime, Window};
pub use experiments::{EstimatorParams, ExperimentConfig, SummaryTable};
pub use moran::{FloatMoranTree, MoranTree, PlacementPolicy, RationalMoranTree};
pub use randomness::{
    sample_environment, DistributionSpec, Environment, LevelDraw, TheoryReport,
};
