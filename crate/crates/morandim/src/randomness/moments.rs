//! Exact moments, order-statistic laws, and support extremes of the level
//! distribution.

use serde::{Deserialize, Serialize};

use super::{DistributionSpec, ProbDist, RatioDist, SpecError, SpecVariant};
use crate::dd::{ln_int, Dd};

/// An essential extreme: finite, provably infinite, or not derivable from
/// the implemented support rules. Never a guessed number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExtremeValue {
    Finite(f64),
    Infinite,
    Undetermined,
}

impl ExtremeValue {
    pub fn as_finite(&self) -> Option<f64> {
        match self {
            ExtremeValue::Finite(v) => Some(*v),
            _ => None,
        }
    }

    /// Data-file token: finite values print their number, infinity prints
    /// the literal token "inf", undetermined prints "undetermined".
    pub fn token(&self) -> String {
        match self {
            ExtremeValue::Finite(v) => format!("{v}"),
            ExtremeValue::Infinite => "inf".into(),
            ExtremeValue::Undetermined => "undetermined".into(),
        }
    }
}

impl std::fmt::Display for ExtremeValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.token())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriState {
    Yes,
    No,
    Unknown,
}

/// Closed-form targets for one specification: the mean level statistics,
/// the derived dimension values, the support extremes, and the moment
/// generating function conditions the almost-sure dimension values require.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoryReport {
    pub ex: Option<f64>,
    pub ey: Option<f64>,
    pub ez: Option<f64>,
    pub d_lower: Option<f64>,
    pub d_upper: Option<f64>,
    pub alpha: ExtremeValue,
    pub beta: ExtremeValue,
    pub mgf_x: TriState,
    pub mgf_y: TriState,
    pub mgf_z: TriState,
}

/// Exact binomial coefficients C(t, 0..=t); t <= 60 keeps them inside u128.
fn binomials(t: usize) -> Vec<u128> {
    let mut c = Vec::with_capacity(t + 1);
    let mut cur = 1u128;
    c.push(cur);
    for j in 1..=t {
        cur = cur * (t - j + 1) as u128 / j as u128;
        c.push(cur);
    }
    c
}

/// Harmonic number H_m in double-double precision.
fn harmonic_dd(m: usize) -> Dd {
    let mut acc = Dd::ZERO;
    for j in 1..=m {
        acc = acc.add(Dd::recip_f64(j as f64));
    }
    acc
}

/// E(-log max p) for p uniform on the t-simplex:
/// `sum_{j=1..T} (-1)^{j+1} C(T,j) log j + H_{T-1}`.
///
/// The alternating sum cancels catastrophically, so binomials are exact and
/// the accumulation is double-double; T > 60 is rejected.
pub fn closed_form_ex(t: usize) -> Result<f64, SpecError> {
    if t < 2 {
        return Err(SpecError::ClosedFormDomain(format!("closed_form_ex needs T >= 2, got {t}")));
    }
    if t > 60 {
        return Err(SpecError::ClosedFormDomain(format!(
            "closed_form_ex supports T <= 60 (exact binomials), got {t}"
        )));
    }
    let c = binomials(t);
    let mut acc = Dd::ZERO;
    for (j, &cj) in c.iter().enumerate().skip(2) {
        let term = Dd::from_u128(cj).mul(ln_int(j as u32));
        if j % 2 == 1 {
            acc = acc.add(term);
        } else {
            acc = acc.sub(term);
        }
    }
    acc = acc.add(harmonic_dd(t - 1));
    Ok(acc.value())
}

/// E(-log min p) for p uniform on the t-simplex: `log T + H_{T-1}`.
pub fn closed_form_ey(t: usize) -> Result<f64, SpecError> {
    if t < 2 {
        return Err(SpecError::ClosedFormDomain(format!("closed_form_ey needs T >= 2, got {t}")));
    }
    let h: f64 = (1..t).map(|j| 1.0 / j as f64).sum();
    Ok((t as f64).ln() + h)
}

/// P(min p <= z) for p uniform on the t-simplex: `1 - (1 - Tz)^(T-1)` on
/// [0, 1/T], clamped outside.
pub fn min_cdf(t: usize, z: f64) -> f64 {
    assert!(t >= 2, "min_cdf needs T >= 2");
    if z < 0.0 {
        return 0.0;
    }
    if z >= 1.0 / t as f64 {
        return 1.0;
    }
    1.0 - (1.0 - t as f64 * z).powi(t as i32 - 1)
}

/// P(max p <= z) for p uniform on the t-simplex (Holst's alternating sum):
/// `1 + sum_{k=1..T} (-1)^k C(T,k) (1 - kz)_+^(T-1)`, clamped to [0,1].
pub fn max_cdf(t: usize, z: f64) -> f64 {
    assert!(t >= 2, "max_cdf needs T >= 2");
    if z < 1.0 / t as f64 {
        return 0.0;
    }
    if z >= 1.0 {
        return 1.0;
    }
    let mut acc = 1.0f64;
    let mut c = 1.0f64; // C(t, k) via recurrence; t small in practice
    for k in 1..=t {
        c = c * (t - k + 1) as f64 / k as f64;
        let base = 1.0 - k as f64 * z;
        if base <= 0.0 {
            break;
        }
        let term = c * base.powi(t as i32 - 1);
        if k % 2 == 1 {
            acc -= term;
        } else {
            acc += term;
        }
    }
    acc.clamp(0.0, 1.0)
}

fn ratio_log(m: f64, r: f64) -> f64 {
    m.ln() / r.ln()
}

/// Per-class support extremes for alpha (esssup log m / log r).
fn class_alpha(class_t: usize, ratio: &RatioDist, probs: &ProbDist) -> ExtremeValue {
    let _ = class_t;
    match (ratio, probs) {
        // finite support on both coordinates: maximize over atoms
        (RatioDist::PointMass(r), ProbDist::PointMass(v)) => {
            ExtremeValue::Finite(ratio_log(min_of(v), *r))
        }
        (RatioDist::PointMass(r), ProbDist::DiscreteSet { atoms, .. }) => ExtremeValue::Finite(
            atoms.iter().map(|v| ratio_log(min_of(v), *r)).fold(f64::NEG_INFINITY, f64::max),
        ),
        // essinf m = 0 with r and p independent: alpha = infinity
        (_, ProbDist::UniformSimplex) => ExtremeValue::Infinite,
        // essinf r = 0 with probabilities bounded away from 0: no implemented
        // rule determines the essential supremum
        (RatioDist::UniformInterval { .. }, _) => ExtremeValue::Undetermined,
    }
}

/// Per-class support extremes for beta (essinf log M / log r).
fn class_beta(class_t: usize, ratio: &RatioDist, probs: &ProbDist) -> ExtremeValue {
    let _ = class_t;
    match (ratio, probs) {
        (RatioDist::PointMass(r), ProbDist::PointMass(v)) => {
            ExtremeValue::Finite(ratio_log(max_of(v), *r))
        }
        (RatioDist::PointMass(r), ProbDist::DiscreteSet { atoms, .. }) => ExtremeValue::Finite(
            atoms.iter().map(|v| ratio_log(max_of(v), *r)).fold(f64::INFINITY, f64::min),
        ),
        // esssup M = 1 on the open simplex: beta = 0
        (_, ProbDist::UniformSimplex) => ExtremeValue::Finite(0.0),
        // essinf r = 0 while essinf M > 0: beta = 0
        (RatioDist::UniformInterval { .. }, _) => ExtremeValue::Finite(0.0),
    }
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn combine_alpha(parts: impl Iterator<Item = ExtremeValue>) -> ExtremeValue {
    let mut best = f64::NEG_INFINITY;
    let mut undetermined = false;
    for p in parts {
        match p {
            ExtremeValue::Infinite => return ExtremeValue::Infinite,
            ExtremeValue::Undetermined => undetermined = true,
            ExtremeValue::Finite(v) => best = best.max(v),
        }
    }
    if undetermined {
        ExtremeValue::Undetermined
    } else {
        ExtremeValue::Finite(best)
    }
}

fn combine_beta(parts: impl Iterator<Item = ExtremeValue>) -> ExtremeValue {
    let mut best = f64::INFINITY;
    let mut undetermined = false;
    for p in parts {
        match p {
            ExtremeValue::Infinite => {}
            ExtremeValue::Undetermined => undetermined = true,
            ExtremeValue::Finite(v) => best = best.min(v),
        }
    }
    if best == 0.0 {
        // a zero essential infimum in any positive-weight class floors the mixture
        return ExtremeValue::Finite(0.0);
    }
    if undetermined {
        ExtremeValue::Undetermined
    } else {
        ExtremeValue::Finite(best)
    }
}

/// Support extremes (alpha, beta). Exact values where the implemented rules
/// reach and `Undetermined` otherwise; never a silent guess.
pub fn extremes(spec: &DistributionSpec) -> Result<(ExtremeValue, ExtremeValue), SpecError> {
    spec.validate()?;
    let (alpha, beta) = match &spec.variant {
        SpecVariant::PointMass(d) => (
            ExtremeValue::Finite(ratio_log(d.min_p(), d.ratio())),
            ExtremeValue::Finite(ratio_log(d.max_p(), d.ratio())),
        ),
        SpecVariant::DiscreteMixture { atoms } => (
            ExtremeValue::Finite(
                atoms
                    .iter()
                    .map(|a| ratio_log(a.draw.min_p(), a.draw.ratio()))
                    .fold(f64::NEG_INFINITY, f64::max),
            ),
            ExtremeValue::Finite(
                atoms
                    .iter()
                    .map(|a| ratio_log(a.draw.max_p(), a.draw.ratio()))
                    .fold(f64::INFINITY, f64::min),
            ),
        ),
        SpecVariant::ProductForm { children } => (
            combine_alpha(children.iter().map(|c| class_alpha(c.t, &c.ratio, &c.probs))),
            combine_beta(children.iter().map(|c| class_beta(c.t, &c.ratio, &c.probs))),
        ),
    };
    Ok((alpha, beta))
}

/// Moment-generating-function flags for (X, Y, Z). `Yes` only under the
/// documented sufficient conditions; `Unknown` rather than a guess.
pub fn mgf_flags(spec: &DistributionSpec) -> Result<(TriState, TriState, TriState), SpecError> {
    spec.validate()?;
    let flags = match &spec.variant {
        // bounded random variables
        SpecVariant::PointMass(_) => (TriState::Yes, TriState::Yes, TriState::Yes),
        // finite mixtures of bounded atoms
        SpecVariant::DiscreteMixture { .. } => (TriState::Yes, TriState::Yes, TriState::Yes),
        SpecVariant::ProductForm { children } => {
            // X: child count bounded by the finite class list, so M >= 1/t_max
            let x = TriState::Yes;
            let y = if children.iter().all(|c| match &c.probs {
                ProbDist::PointMass(_) | ProbDist::DiscreteSet { .. } => true,
                // finite for |lambda| < 1 under the uniform simplex
                ProbDist::UniformSimplex => true,
            }) {
                TriState::Yes
            } else {
                TriState::Unknown
            };
            let z = if children.iter().all(|c| match &c.ratio {
                RatioDist::PointMass(_) => true,
                // uniformly distributed ratios have E(r^-A) < infinity
                RatioDist::UniformInterval { .. } => true,
            }) {
                TriState::Yes
            } else {
                TriState::Unknown
            };
            (x, y, z)
        }
    };
    Ok(flags)
}

fn class_mots(c: &super::ChildClass) -> Result<(f64, f64, f64), SpecError> {
    let (ex, ey) = match &c.probs {
        ProbDist::PointMass(v) => (-max_of(v).ln(), -min_of(v).ln()),
        ProbDist::UniformSimplex => (closed_form_ex(c.t)?, closed_form_ey(c.t)?),
        ProbDist::DiscreteSet { atoms, weights } => {
            let ex = atoms.iter().zip(weights).map(|(v, w)| -w * max_of(v).ln()).sum();
            let ey = atoms.iter().zip(weights).map(|(v, w)| -w * min_of(v).ln()).sum();
            (ex, ey)
        }
    };
    let ez = match &c.ratio {
        RatioDist::PointMass(r) => -r.ln(),
        // E(-log r) for r uniform on (0, c]: 1 - log c
        RatioDist::UniformInterval { upper } => {
            let cu = c.ratio.support_upper(c.t, f64::NAN);
            // support_upper needs tau only for the default bound; that case
            // is resolved by the caller before we get here
            let cu = if upper.is_some() { cu } else { f64::NAN };
            debug_assert!(!cu.is_nan(), "caller must resolve the default upper bound");
            1.0 - cu.ln()
        }
    };
    Ok((ex, ey, ez))
}

/// Closed-form moment report: E(X), E(Y), E(Z), the dimension targets
/// E(X)/E(Z) and E(Y)/E(Z), the support extremes, and the MGF flags.
pub fn moments(spec: &DistributionSpec) -> Result<TheoryReport, SpecError> {
    spec.validate()?;
    let (ex, ey, ez) = match &spec.variant {
        SpecVariant::PointMass(d) => (Some(d.x_val()), Some(d.y_val()), Some(d.z_val())),
        SpecVariant::DiscreteMixture { atoms } => {
            let ex = atoms.iter().map(|a| a.weight * a.draw.x_val()).sum();
            let ey = atoms.iter().map(|a| a.weight * a.draw.y_val()).sum();
            let ez = atoms.iter().map(|a| a.weight * a.draw.z_val()).sum();
            (Some(ex), Some(ey), Some(ez))
        }
        SpecVariant::ProductForm { children } => {
            let mut ex = 0.0;
            let mut ey = 0.0;
            let mut ez = 0.0;
            for c in children {
                // resolve the default interval bound against the session tau
                let resolved = match &c.ratio {
                    RatioDist::UniformInterval { upper: None } => super::ChildClass {
                        ratio: RatioDist::UniformInterval {
                            upper: Some(c.ratio.support_upper(c.t, spec.tau)),
                        },
                        ..c.clone()
                    },
                    _ => c.clone(),
                };
                let (cx, cy, cz) = class_mots(&resolved)?;
                ex += c.weight * cx;
                ey += c.weight * cy;
                ez += c.weight * cz;
            }
            (Some(ex), Some(ey), Some(ez))
        }
    };
    let d_lower = match (ex, ez) {
        (Some(x), Some(z)) if z > 0.0 => Some(x / z),
        _ => None,
    };
    let d_upper = match (ey, ez) {
        (Some(y), Some(z)) if z > 0.0 => Some(y / z),
        _ => None,
    };
    let (alpha, beta) = extremes(spec)?;
    let (mgf_x, mgf_y, mgf_z) = mgf_flags(spec)?;
    Ok(TheoryReport { ex, ey, ez, d_lower, d_upper, alpha, beta, mgf_x, mgf_y, mgf_z })
}
