//! Empirical dimension estimators over environment sequences.
//!
//! The large-regime statistics are ratio-of-sums over windows whose depth is
//! gated by the depth function; the small-regime statistics are running
//! extremes of single-level ratios. Both mirror the quantities that drive
//! the almost-sure dimension values: the former converge a.s. to E(Y)/E(Z)
//! and E(X)/E(Z), the latter to the essential extremes of the level ratios.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dimfn::{depth_query, DepthError, DimensionFunction, Regime};
use crate::randomness::Environment;

const CHAIN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub n_min: usize,
    pub n_max: usize,
}

impl Window {
    pub fn new(n_min: usize, n_max: usize) -> Self {
        Window { n_min, n_max }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorRegime {
    Large,
    Small,
}

/// One estimator run: the pair of empirical bounds plus the window metadata
/// needed to reproduce it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateReport {
    pub regime: EstimatorRegime,
    pub lower: f64,
    pub upper: f64,
    pub window: Option<Window>,
    pub k_cap: Option<usize>,
    pub prefix_len: Option<usize>,
    pub env_length: usize,
    pub phi_id: Option<String>,
}

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("window [{n_min}, {n_max}] with k_cap {k_cap} needs {needed} levels, environment has {len}")]
    WindowInfeasible { n_min: usize, n_max: usize, k_cap: usize, needed: usize, len: usize },
    #[error("window bounds must satisfy 1 <= n_min <= n_max")]
    BadWindow,
    #[error("k_cap must be >= 1")]
    BadKCap,
    #[error("prefix length {n} exceeds environment length {len}")]
    BadPrefix { n: usize, len: usize },
    #[error("large-regime estimator needs a dimension function declared Large, got {0:?}")]
    NotLarge(Regime),
    #[error(transparent)]
    Depth(#[from] DepthError),
}

fn check_large_inputs(
    env: &Environment,
    f: &DimensionFunction,
    window: Window,
    k_cap: usize,
) -> Result<(), EstimatorError> {
    if f.declared_regime != Regime::Large {
        return Err(EstimatorError::NotLarge(f.declared_regime));
    }
    if window.n_min < 1 || window.n_min > window.n_max {
        return Err(EstimatorError::BadWindow);
    }
    if k_cap < 1 {
        return Err(EstimatorError::BadKCap);
    }
    let needed = window.n_max + k_cap;
    if env.len() < needed {
        return Err(EstimatorError::WindowInfeasible {
            n_min: window.n_min,
            n_max: window.n_max,
            k_cap,
            needed,
            len: env.len(),
        });
    }
    Ok(())
}

fn scan_large<Fsel>(
    env: &Environment,
    f: &DimensionFunction,
    window: Window,
    k_cap: usize,
    numerator: Fsel,
    take_max: bool,
) -> Result<f64, EstimatorError>
where
    Fsel: Fn(&crate::randomness::PrefixSums) -> &[f64],
{
    check_large_inputs(env, f, window, k_cap)?;
    let sums = env.prefix_sums();
    let num = numerator(&sums);
    let den = &sums.z;
    let mut best = if take_max { f64::NEG_INFINITY } else { f64::INFINITY };
    for n in window.n_min..=window.n_max {
        let phi = depth_query(env, f, n, k_cap)?.phi_value;
        for k in phi..=k_cap {
            let ratio = (num[n + k] - num[n]) / (den[n + k] - den[n]);
            if take_max {
                best = best.max(ratio);
            } else {
                best = best.min(ratio);
            }
        }
    }
    Ok(best)
}

/// max over N in the window and k in [phi(N), k_cap] of
/// (sum of Y over (N, N+k]) / (sum of Z over (N, N+k]).
pub fn large_upper(
    env: &Environment,
    f: &DimensionFunction,
    window: Window,
    k_cap: usize,
) -> Result<f64, EstimatorError> {
    scan_large(env, f, window, k_cap, |s| &s.y, true)
}

/// min over the same index family of (sum of X) / (sum of Z).
pub fn large_lower(
    env: &Environment,
    f: &DimensionFunction,
    window: Window,
    k_cap: usize,
) -> Result<f64, EstimatorError> {
    scan_large(env, f, window, k_cap, |s| &s.x, false)
}

/// Running maximum of Y_i / Z_i over the first n levels; non-decreasing in n
/// and converges a.s. to the essential supremum when the per-level ratio
/// has support reaching it.
pub fn small_alpha_hat(env: &Environment, n: usize) -> Result<f64, EstimatorError> {
    if n < 1 || n > env.len() {
        return Err(EstimatorError::BadPrefix { n, len: env.len() });
    }
    Ok(env.draws()[..n]
        .iter()
        .map(|d| d.y_val() / d.z_val())
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Running minimum of X_i / Z_i over the first n levels; non-increasing in n.
pub fn small_beta_hat(env: &Environment, n: usize) -> Result<f64, EstimatorError> {
    if n < 1 || n > env.len() {
        return Err(EstimatorError::BadPrefix { n, len: env.len() });
    }
    Ok(env.draws()[..n]
        .iter()
        .map(|d| d.x_val() / d.z_val())
        .fold(f64::INFINITY, f64::min))
}

pub fn estimate_large(
    env: &Environment,
    f: &DimensionFunction,
    window: Window,
    k_cap: usize,
) -> Result<EstimateReport, EstimatorError> {
    Ok(EstimateReport {
        regime: EstimatorRegime::Large,
        lower: large_lower(env, f, window, k_cap)?,
        upper: large_upper(env, f, window, k_cap)?,
        window: Some(window),
        k_cap: Some(k_cap),
        prefix_len: None,
        env_length: env.len(),
        phi_id: Some(f.descriptor()),
    })
}

pub fn estimate_small(env: &Environment, n: usize) -> Result<EstimateReport, EstimatorError> {
    Ok(EstimateReport {
        regime: EstimatorRegime::Small,
        lower: small_beta_hat(env, n)?,
        upper: small_alpha_hat(env, n)?,
        window: None,
        k_cap: None,
        prefix_len: Some(n),
        env_length: env.len(),
        phi_id: None,
    })
}

#[derive(Clone, Debug)]
pub struct ChainViolation {
    pub description: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl std::fmt::Display for ChainViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {} > {} (margin {:.3e})", self.description, self.lhs, self.rhs, self.margin)
    }
}

/// The ordering the dimension chain implies at the level of the implemented
/// statistics: small lower <= large lower <= large upper <= small upper.
/// When the small-regime prefix covers every index the large windows touch,
/// the first and last links are deterministic mediant inequalities.
pub fn sanity_chain(
    small: &EstimateReport,
    large: &EstimateReport,
) -> Result<(), Vec<ChainViolation>> {
    let mut violations = Vec::new();
    let mut check = |description: &str, lhs: f64, rhs: f64| {
        if lhs > rhs + CHAIN_TOL * rhs.abs().max(1.0) {
            violations.push(ChainViolation {
                description: description.into(),
                lhs,
                rhs,
                margin: lhs - rhs,
            });
        }
    };
    check("small lower vs large lower", small.lower, large.lower);
    check("large lower vs large upper", large.lower, large.upper);
    check("large upper vs small upper", large.upper, small.upper);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
