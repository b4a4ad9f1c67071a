//! Dimension functions and the level-depth machinery built on them.
//!
//! A dimension function is a map `Φ : (0,1) -> R+` such that `x^(1+Φ(x))`
//! decreases to 0 as x decreases to 0. It parametrizes the admissible scale
//! gap `r <= R^(1+Φ(R))` in Assouad-type dimensions. The depth function
//! `φ(n)` counts how many extra construction levels are needed to pass from
//! the scale of level n to that power of it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::randomness::Environment;

/// Default cap on the depth scan; a pathological tabulated function could
/// otherwise make the scan unbounded.
pub const DEFAULT_K_MAX: usize = 1_000_000;

/// Relative tolerance for the threshold comparison in [`depth_capped`] and
/// for the monotonicity check in [`validate`].
const DEPTH_TOL: f64 = 1e-12;

/// Declared asymptotic size of a dimension function relative to
/// `log|log x| / |log x|`.
///
/// The comparison cannot be decided from finitely many evaluations, so the
/// regime is a declared attribute; [`regime_warning`] flags declarations
/// that contradict the observable trend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Large,
    Small,
    Boundary,
    Unclassified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DimFnKind {
    /// Φ(x) = δ with δ >= 0. δ = 0 is the Assouad case.
    Constant(f64),
    /// Φ(x) = 1/θ - 1 for θ in (0,1); the θ-spectrum family.
    ThetaSpectrum(f64),
    /// Φ(x) = c · log|log x| / |log x| with c > 0, the boundary family.
    LogLogMultiple(f64),
    /// Piecewise interpolation through (x, Φ(x)) pairs; linear in (log x, Φ).
    Tabulated(Vec<(f64, f64)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionFunction {
    pub kind: DimFnKind,
    pub declared_regime: Regime,
}

#[derive(Debug, Error, PartialEq)]
pub enum DimfnError {
    #[error("evaluation point {0} outside (0,1)")]
    Domain(f64),
    #[error("tabulated function queried at x={x} outside grid hull [{lo}, {hi}]")]
    Extrapolation { x: f64, lo: f64, hi: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("grid is empty")]
    EmptyGrid,
    #[error("grid must be strictly decreasing inside (0,1)")]
    BadGrid,
}

impl DimensionFunction {
    pub fn constant(delta: f64) -> Result<Self, DimfnError> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(DimfnError::Parameter(format!(
                "constant dimension function needs delta >= 0, got {delta}"
            )));
        }
        let regime = if delta > 0.0 { Regime::Large } else { Regime::Small };
        Ok(DimensionFunction { kind: DimFnKind::Constant(delta), declared_regime: regime })
    }

    pub fn theta_spectrum(theta: f64) -> Result<Self, DimfnError> {
        if !theta.is_finite() || theta <= 0.0 || theta >= 1.0 {
            return Err(DimfnError::Parameter(format!(
                "theta spectrum needs theta in (0,1), got {theta}"
            )));
        }
        Ok(DimensionFunction {
            kind: DimFnKind::ThetaSpectrum(theta),
            declared_regime: Regime::Large,
        })
    }

    pub fn log_log_multiple(c: f64) -> Result<Self, DimfnError> {
        if !c.is_finite() || c <= 0.0 {
            return Err(DimfnError::Parameter(format!(
                "log-log multiple needs c > 0, got {c}"
            )));
        }
        Ok(DimensionFunction {
            kind: DimFnKind::LogLogMultiple(c),
            declared_regime: Regime::Boundary,
        })
    }

    /// Grid of (x, Φ(x)) pairs, any order; stored sorted by x ascending.
    pub fn tabulated(mut points: Vec<(f64, f64)>) -> Result<Self, DimfnError> {
        if points.len() < 2 {
            return Err(DimfnError::Parameter(
                "tabulated function needs at least two grid points".into(),
            ));
        }
        for &(x, phi) in &points {
            if !x.is_finite() || x <= 0.0 || x >= 1.0 {
                return Err(DimfnError::Parameter(format!("grid x={x} outside (0,1)")));
            }
            if !phi.is_finite() || phi <= 0.0 {
                return Err(DimfnError::Parameter(format!(
                    "tabulated Φ must be positive, got {phi} at x={x}"
                )));
            }
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(DimfnError::Parameter("duplicate grid abscissa".into()));
        }
        Ok(DimensionFunction { kind: DimFnKind::Tabulated(points), declared_regime: Regime::Unclassified })
    }

    pub fn with_regime(mut self, regime: Regime) -> Self {
        self.declared_regime = regime;
        self
    }

    /// Φ(x) for x strictly inside (0,1).
    pub fn eval(&self, x: f64) -> Result<f64, DimfnError> {
        if !x.is_finite() || x <= 0.0 || x >= 1.0 {
            return Err(DimfnError::Domain(x));
        }
        self.eval_neg_log(-x.ln())
    }

    /// Φ(e^{-s}) for s > 0. Avoids underflow of e^{-s} at deep levels.
    pub fn eval_neg_log(&self, s: f64) -> Result<f64, DimfnError> {
        if !s.is_finite() || s <= 0.0 {
            return Err(DimfnError::Domain((-s).exp()));
        }
        match &self.kind {
            DimFnKind::Constant(delta) => Ok(*delta),
            DimFnKind::ThetaSpectrum(theta) => Ok(1.0 / theta - 1.0),
            DimFnKind::LogLogMultiple(c) => Ok(c * s.ln() / s),
            DimFnKind::Tabulated(points) => {
                // linear in (log x, Φ); log x = -s
                let lx = -s;
                let lo = points.first().unwrap();
                let hi = points.last().unwrap();
                let (llo, lhi) = (lo.0.ln(), hi.0.ln());
                if lx < llo || lx > lhi {
                    return Err(DimfnError::Extrapolation { x: (-s).exp(), lo: lo.0, hi: hi.0 });
                }
                let idx = points.partition_point(|&(x, _)| x.ln() <= lx);
                if idx == 0 {
                    return Ok(lo.1);
                }
                if idx == points.len() {
                    return Ok(hi.1);
                }
                let (x0, p0) = points[idx - 1];
                let (x1, p1) = points[idx];
                let (l0, l1) = (x0.ln(), x1.ln());
                let w = (lx - l0) / (l1 - l0);
                Ok(p0 + w * (p1 - p0))
            }
        }
    }

    /// Short stable descriptor for reports.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            DimFnKind::Constant(d) => format!("constant({d})"),
            DimFnKind::ThetaSpectrum(t) => format!("theta-spectrum({t})"),
            DimFnKind::LogLogMultiple(c) => format!("loglog-multiple({c})"),
            DimFnKind::Tabulated(p) => format!("tabulated({} points)", p.len()),
        }
    }
}

/// One offending pair from [`validate`]: the map x^(1+Φ(x)) increased as x
/// decreased from `x_hi` to `x_lo`.
#[derive(Clone, Debug)]
pub struct MonotoneViolation {
    pub x_hi: f64,
    pub x_lo: f64,
    pub value_hi: f64,
    pub value_lo: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ViolationReport {
    pub violations: Vec<MonotoneViolation>,
}

impl std::fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} monotonicity violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(
                f,
                "  x={:.6e} -> {:.6e}: x^(1+phi) went {:.6e} -> {:.6e}",
                v.x_hi, v.x_lo, v.value_hi, v.value_lo
            )?;
        }
        Ok(())
    }
}

/// Checks that x^(1+Φ(x)) is non-increasing as x decreases across the grid
/// (relative tolerance 1e-12). The grid must be strictly decreasing in (0,1).
pub fn validate(f: &DimensionFunction, grid: &[f64]) -> Result<Result<(), ViolationReport>, DimfnError> {
    if grid.is_empty() {
        return Err(DimfnError::EmptyGrid);
    }
    if grid.iter().any(|&x| !x.is_finite() || x <= 0.0 || x >= 1.0) {
        return Err(DimfnError::BadGrid);
    }
    if grid.windows(2).any(|w| w[0] <= w[1]) {
        return Err(DimfnError::BadGrid);
    }
    let mut report = ViolationReport::default();
    let mut prev: Option<(f64, f64)> = None; // (x, log of x^(1+phi))
    for &x in grid {
        let phi = f.eval(x)?;
        let log_val = (1.0 + phi) * x.ln();
        if let Some((px, plog)) = prev {
            // non-increasing in value as x decreases: log_val <= plog + tol
            if log_val > plog + DEPTH_TOL {
                report.violations.push(MonotoneViolation {
                    x_hi: px,
                    x_lo: x,
                    value_hi: plog.exp(),
                    value_lo: log_val.exp(),
                });
            }
        }
        prev = Some((x, log_val));
    }
    Ok(if report.violations.is_empty() { Ok(()) } else { Err(report) })
}

/// A declared regime that contradicts the observable trend of
/// Φ(x)·|log x|/log|log x| on the probe grid.
#[derive(Clone, Debug)]
pub struct RegimeWarning {
    pub declared: Regime,
    pub ratio_at_coarse: f64,
    pub ratio_at_fine: f64,
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "declared {:?} but phi(x)|log x|/log|log x| moves {:.4e} -> {:.4e} as x falls 1e-2 -> 1e-12",
            self.declared, self.ratio_at_coarse, self.ratio_at_fine
        )
    }
}

/// Probes Φ(x)·|log x|/log|log x| on a log-spaced grid in [1e-12, 1e-2] and
/// warns when the declared regime contradicts the trend. The declaration
/// always wins; this is advisory only.
pub fn regime_warning(f: &DimensionFunction) -> Option<RegimeWarning> {
    let coarse: f64 = 1e-2;
    let fine: f64 = 1e-12;
    let ratio = |x: f64| -> Option<f64> {
        let phi = f.eval(x).ok()?;
        Some(phi * x.ln().abs() / x.ln().abs().ln())
    };
    let rc = ratio(coarse)?;
    let rf = ratio(fine)?;
    let contradicts = match f.declared_regime {
        // a large function should dominate: the ratio must grow
        Regime::Large => rf <= rc * (1.0 + 1e-9),
        // a small function is dominated: the ratio must shrink
        Regime::Small => rf >= rc * (1.0 - 1e-9) && rf > 0.0,
        Regime::Boundary | Regime::Unclassified => false,
    };
    if contradicts {
        Some(RegimeWarning { declared: f.declared_regime, ratio_at_coarse: rc, ratio_at_fine: rf })
    } else {
        None
    }
}

#[derive(Debug, Error)]
pub enum DepthError {
    #[error(
        "depth scan truncated at level {n}+{scanned}: reached {achieved:.6} of required {required:.6} nats"
    )]
    Truncated { n: usize, scanned: usize, achieved: f64, required: f64 },
    #[error("level index must be >= 1")]
    BadLevel,
    #[error(transparent)]
    Eval(#[from] DimfnError),
}

/// A resolved depth query: `phi_value` is the minimal k >= 1 with
/// `sum_{j=n+1..n+k} Z_j >= Φ(e^{-S_n})·S_n`, `partial_sum` is S_n in nats.
#[derive(Clone, Copy, Debug)]
pub struct DepthQuery {
    pub n: usize,
    pub phi_value: usize,
    pub partial_sum: f64,
}

/// Depth function with the default scan cap.
pub fn depth(env: &Environment, f: &DimensionFunction, n: usize) -> Result<usize, DepthError> {
    depth_capped(env, f, n, DEFAULT_K_MAX)
}

pub fn depth_capped(
    env: &Environment,
    f: &DimensionFunction,
    n: usize,
    k_max: usize,
) -> Result<usize, DepthError> {
    depth_query(env, f, n, k_max).map(|q| q.phi_value)
}

pub fn depth_query(
    env: &Environment,
    f: &DimensionFunction,
    n: usize,
    k_max: usize,
) -> Result<DepthQuery, DepthError> {
    if n < 1 {
        return Err(DepthError::BadLevel);
    }
    let zs = env.zs();
    assert!(n <= zs.len(), "environment has {} levels, need n={}", zs.len(), n);
    let s_n: f64 = zs[..n].iter().sum();
    let phi = f.eval_neg_log(s_n)?;
    let target = phi * s_n;
    let tol = DEPTH_TOL * target.abs().max(1.0);
    let mut tail = 0.0;
    let scan_cap = k_max.min(zs.len().saturating_sub(n));
    for k in 1..=scan_cap {
        tail += zs[n + k - 1];
        if tail >= target - tol {
            return Ok(DepthQuery { n, phi_value: k, partial_sum: s_n });
        }
    }
    Err(DepthError::Truncated { n, scanned: scan_cap, achieved: tail, required: target })
}

/// Threshold ζ_N = G(2^{-N})·log(N·log 2) / (2·E(Z₁)).
///
/// Needs N >= 2 so the inner logarithm is positive.
pub fn zeta_threshold(g_value: f64, n: usize, ez: f64) -> f64 {
    assert!(n >= 2, "zeta threshold needs N >= 2");
    assert!(ez > 0.0 && g_value > 0.0);
    g_value * (n as f64 * std::f64::consts::LN_2).ln() / (2.0 * ez)
}

/// Threshold χ_N = H(2^{-N})·log(2·N·E(Z₁)) / log 2.
pub fn chi_threshold(h_value: f64, n: usize, ez: f64) -> f64 {
    assert!(n >= 1, "chi threshold needs N >= 1");
    assert!(ez > 0.0 && h_value > 0.0);
    h_value * (2.0 * n as f64 * ez).ln() / std::f64::consts::LN_2
}
