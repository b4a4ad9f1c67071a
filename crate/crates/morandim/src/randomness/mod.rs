//! The level distribution π on Ω₀ and reproducible sampling from it.
//!
//! A level draw is a triple (t, r, p): child count, contraction ratio, and a
//! probability vector of length t. An environment is a finite iid prefix of
//! such draws. Sampling is counter-based: level i is generated from its own
//! generator seeded by `mix_seed(seed, i)`, so extending an environment
//! preserves the existing prefix bit for bit and replicates can be drawn in
//! any order or in parallel.

mod moments;
mod identities;

pub use identities::{
    euler_difference_residual, melzak_identity_check, melzak_lambda_residual,
    melzak_lambda_residual_f64, melzak_reciprocal_residual, melzak_reciprocal_sq_residual,
    IdentityError, MelzakReport,
};
pub use moments::{
    closed_form_ex, closed_form_ey, extremes, max_cdf, mgf_flags, min_cdf, moments, ExtremeValue,
    TheoryReport, TriState,
};

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moran::feasible_ratio_bound;

const WEIGHT_TOL: f64 = 1e-12;
const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("child count must be at least 2, got {0}")]
    ChildCount(usize),
    #[error("probability vector has length {got}, expected {expected}")]
    ProbLength { got: usize, expected: usize },
    #[error("probability entries must be strictly positive")]
    NonPositiveProbability,
    #[error("probability vector sums to {0}, must be 1 within 1e-12")]
    ProbabilitySum(f64),
    #[error("contraction ratio {0} outside (0, 1/2]")]
    RatioOutOfRange(f64),
    #[error("separation constant tau {0} outside (0, 1)")]
    TauRange(f64),
    #[error("weights must be strictly positive and sum to 1 within 1e-12, got sum {0}")]
    WeightSum(f64),
    #[error("distribution has empty support")]
    EmptySupport,
    #[error("uniform ratio interval upper bound {0} outside (0, 1/2]")]
    BadRatioUpper(f64),
    #[error(
        "ratio support reaches {ratio} above the feasible bound {bound} for t={t}, tau={tau}; \
         the draw cannot be embedded in [0,1]"
    )]
    NotEmbeddable { t: usize, ratio: f64, bound: f64, tau: f64 },
    #[error("closed form undefined: {0}")]
    ClosedFormDomain(String),
    #[error("environment too short: has {len} levels, need {needed}")]
    EnvTooShort { len: usize, needed: usize },
}

/// One iid draw (t, r, p) from Ω₀.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLevelDraw", into = "RawLevelDraw")]
pub struct LevelDraw {
    t: usize,
    r: f64,
    p: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawLevelDraw {
    t: usize,
    r: f64,
    p: Vec<f64>,
}

impl TryFrom<RawLevelDraw> for LevelDraw {
    type Error = SpecError;
    fn try_from(raw: RawLevelDraw) -> Result<Self, SpecError> {
        LevelDraw::new(raw.t, raw.r, raw.p)
    }
}

impl From<LevelDraw> for RawLevelDraw {
    fn from(d: LevelDraw) -> RawLevelDraw {
        RawLevelDraw { t: d.t, r: d.r, p: d.p }
    }
}

impl LevelDraw {
    pub fn new(t: usize, r: f64, p: Vec<f64>) -> Result<Self, SpecError> {
        if t < 2 {
            return Err(SpecError::ChildCount(t));
        }
        if p.len() != t {
            return Err(SpecError::ProbLength { got: p.len(), expected: t });
        }
        if p.iter().any(|&x| !x.is_finite() || x <= 0.0) {
            return Err(SpecError::NonPositiveProbability);
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(SpecError::ProbabilitySum(sum));
        }
        if !r.is_finite() || r <= 0.0 || r > 0.5 {
            return Err(SpecError::RatioOutOfRange(r));
        }
        Ok(LevelDraw { t, r, p })
    }

    pub fn child_count(&self) -> usize {
        self.t
    }

    pub fn ratio(&self) -> f64 {
        self.r
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn min_p(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_p(&self) -> f64 {
        self.p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest index attaining the minimum probability.
    pub fn min_index(&self) -> usize {
        let m = self.min_p();
        self.p.iter().position(|&x| x == m).unwrap()
    }

    /// Lowest index attaining the maximum probability.
    pub fn max_index(&self) -> usize {
        let m = self.max_p();
        self.p.iter().position(|&x| x == m).unwrap()
    }

    /// X = -log(max p)
    pub fn x_val(&self) -> f64 {
        -self.max_p().ln()
    }

    /// Y = -log(min p)
    pub fn y_val(&self) -> f64 {
        -self.min_p().ln()
    }

    /// Z = -log r
    pub fn z_val(&self) -> f64 {
        -self.r.ln()
    }
}

/// A finite iid prefix of level draws together with its provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Environment {
    spec_id: String,
    seed: u64,
    draws: Vec<LevelDraw>,
}

/// Compensated (Neumaier) prefix sums of the level statistics, index 0 = 0.
/// `x[n]` is Σ_{j<=n} X_j, so a window sum over (N, N+k] is `x[N+k] - x[N]`.
#[derive(Clone, Debug)]
pub struct PrefixSums {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

fn neumaier_prefix(values: impl Iterator<Item = f64>, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len + 1);
    out.push(0.0);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

impl Environment {
    pub fn from_draws(spec_id: String, seed: u64, draws: Vec<LevelDraw>) -> Self {
        Environment { spec_id, seed, draws }
    }

    pub fn spec_id(&self) -> &str {
        &self.spec_id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draws(&self) -> &[LevelDraw] {
        &self.draws
    }

    /// Draw at 1-based level index.
    pub fn level(&self, i: usize) -> &LevelDraw {
        &self.draws[i - 1]
    }

    pub fn xs(&self) -> Vec<f64> {
        self.draws.iter().map(LevelDraw::x_val).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.draws.iter().map(LevelDraw::y_val).collect()
    }

    pub fn zs(&self) -> Vec<f64> {
        self.draws.iter().map(LevelDraw::z_val).collect()
    }

    pub fn prefix_sums(&self) -> PrefixSums {
        let n = self.len();
        PrefixSums {
            x: neumaier_prefix(self.draws.iter().map(LevelDraw::x_val), n),
            y: neumaier_prefix(self.draws.iter().map(LevelDraw::y_val), n),
            z: neumaier_prefix(self.draws.iter().map(LevelDraw::z_val), n),
        }
    }
}

/// Ratio distribution of one product-form child class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RatioDist {
    PointMass(f64),
    /// Uniform on (0, upper]. `upper = None` uses the feasible ratio bound
    /// for (t, tau), the largest upper bound under which every draw embeds
    /// in [0,1] with the required separation.
    UniformInterval { upper: Option<f64> },
}

impl RatioDist {
    /// Largest ratio in the support.
    pub fn support_upper(&self, t: usize, tau: f64) -> f64 {
        match self {
            RatioDist::PointMass(r) => *r,
            RatioDist::UniformInterval { upper } => {
                upper.unwrap_or_else(|| feasible_ratio_bound(t, tau))
            }
        }
    }
}

/// Probability-vector distribution of one product-form child class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProbDist {
    PointMass(Vec<f64>),
    UniformSimplex,
    DiscreteSet { atoms: Vec<Vec<f64>>, weights: Vec<f64> },
}

/// One child-count class of a product-form specification: `t` is drawn with
/// probability `weight`, then r and p independently from the class laws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChildClass {
    pub t: usize,
    pub weight: f64,
    pub ratio: RatioDist,
    pub probs: ProbDist,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedDraw {
    pub weight: f64,
    pub draw: LevelDraw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpecVariant {
    PointMass(LevelDraw),
    ProductForm { children: Vec<ChildClass> },
    DiscreteMixture { atoms: Vec<WeightedDraw> },
}

/// Description of the measure π on Ω₀ plus the session separation constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub tau: f64,
    pub variant: SpecVariant,
}

impl DistributionSpec {
    pub fn point_mass(draw: LevelDraw, tau: f64) -> Result<Self, SpecError> {
        let spec = DistributionSpec { tau, variant: SpecVariant::PointMass(draw) };
        spec.validate()?;
        Ok(spec)
    }

    pub fn product_form(children: Vec<ChildClass>, tau: f64) -> Result<Self, SpecError> {
        let spec = DistributionSpec { tau, variant: SpecVariant::ProductForm { children } };
        spec.validate()?;
        Ok(spec)
    }

    pub fn discrete_mixture(atoms: Vec<WeightedDraw>, tau: f64) -> Result<Self, SpecError> {
        let spec = DistributionSpec { tau, variant: SpecVariant::DiscreteMixture { atoms } };
        spec.validate()?;
        Ok(spec)
    }

    /// The heavy-tailed mixture with weights proportional to t^-2 over the
    /// atoms (t, r = 1/(4t), p = (1/t, ..., 1/t)), truncated at `t_max` and
    /// renormalized.
    pub fn inverse_square_mixture(t_max: usize, tau: f64) -> Result<Self, SpecError> {
        if t_max < 2 {
            return Err(SpecError::EmptySupport);
        }
        let total: f64 = (2..=t_max).map(|t| 1.0 / (t * t) as f64).sum();
        let atoms = (2..=t_max)
            .map(|t| {
                let p = vec![1.0 / t as f64; t];
                Ok(WeightedDraw {
                    weight: 1.0 / (t * t) as f64 / total,
                    draw: LevelDraw::new(t, 1.0 / (4 * t) as f64, p)?,
                })
            })
            .collect::<Result<Vec<_>, SpecError>>()?;
        Self::discrete_mixture(atoms, tau)
    }

    /// Measure-level validity: weights, probability vectors, ratio ranges.
    /// Embeddability in [0,1] under tau is a separate, stricter check
    /// ([`DistributionSpec::check_embeddable`]) enforced by the geometric
    /// surfaces; moments and estimators do not require it.
    pub fn validate(&self) -> Result<(), SpecError> {
        if !self.tau.is_finite() || self.tau <= 0.0 || self.tau >= 1.0 {
            return Err(SpecError::TauRange(self.tau));
        }
        match &self.variant {
            SpecVariant::PointMass(_) => Ok(()),
            SpecVariant::ProductForm { children } => {
                if children.is_empty() {
                    return Err(SpecError::EmptySupport);
                }
                let wsum: f64 = children.iter().map(|c| c.weight).sum();
                if children.iter().any(|c| c.weight <= 0.0 || c.weight.is_nan()) || (wsum - 1.0).abs() > WEIGHT_TOL {
                    return Err(SpecError::WeightSum(wsum));
                }
                for c in children {
                    if c.t < 2 {
                        return Err(SpecError::ChildCount(c.t));
                    }
                    match &c.ratio {
                        RatioDist::PointMass(r) => {
                            if !r.is_finite() || *r <= 0.0 || *r > 0.5 {
                                return Err(SpecError::RatioOutOfRange(*r));
                            }
                        }
                        RatioDist::UniformInterval { upper } => {
                            if let Some(u) = upper {
                                if !u.is_finite() || *u <= 0.0 || *u > 0.5 {
                                    return Err(SpecError::BadRatioUpper(*u));
                                }
                            }
                        }
                    }
                    match &c.probs {
                        ProbDist::PointMass(v) => {
                            LevelDraw::new(c.t, 0.25, v.clone())?;
                        }
                        ProbDist::UniformSimplex => {}
                        ProbDist::DiscreteSet { atoms, weights } => {
                            if atoms.is_empty() || atoms.len() != weights.len() {
                                return Err(SpecError::EmptySupport);
                            }
                            let s: f64 = weights.iter().sum();
                            if weights.iter().any(|&w| w <= 0.0 || w.is_nan()) || (s - 1.0).abs() > WEIGHT_TOL
                            {
                                return Err(SpecError::WeightSum(s));
                            }
                            for v in atoms {
                                LevelDraw::new(c.t, 0.25, v.clone())?;
                            }
                        }
                    }
                }
                Ok(())
            }
            SpecVariant::DiscreteMixture { atoms } => {
                if atoms.is_empty() {
                    return Err(SpecError::EmptySupport);
                }
                let wsum: f64 = atoms.iter().map(|a| a.weight).sum();
                if atoms.iter().any(|a| a.weight <= 0.0 || a.weight.is_nan()) || (wsum - 1.0).abs() > WEIGHT_TOL {
                    return Err(SpecError::WeightSum(wsum));
                }
                Ok(())
            }
        }
    }

    /// Checks that every ratio in the support stays at or below the feasible
    /// bound 1/(t + tau(t-1)), so trees built from sampled environments can
    /// realize the separation in [0,1].
    pub fn check_embeddable(&self) -> Result<(), SpecError> {
        let check = |t: usize, ratio: f64| -> Result<(), SpecError> {
            let bound = feasible_ratio_bound(t, self.tau);
            if ratio > bound + 1e-15 {
                Err(SpecError::NotEmbeddable { t, ratio, bound, tau: self.tau })
            } else {
                Ok(())
            }
        };
        match &self.variant {
            SpecVariant::PointMass(d) => check(d.t, d.r),
            SpecVariant::ProductForm { children } => {
                for c in children {
                    check(c.t, c.ratio.support_upper(c.t, self.tau))?;
                }
                Ok(())
            }
            SpecVariant::DiscreteMixture { atoms } => {
                for a in atoms {
                    check(a.draw.t, a.draw.r)?;
                }
                Ok(())
            }
        }
    }

    /// Stable identifier derived from the spec content (FNV-1a over the
    /// canonical serialization).
    pub fn fingerprint(&self) -> String {
        let encoded = format!("tau={};{:?}", self.tau, self.variant);
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in encoded.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The documented seed-mixing function: stream k under a base seed is
/// generated from `splitmix64(base ^ (k+1)·0xA24BAED4963EE407)`. Used both
/// for per-level generators and for per-replicate seed derivation.
pub fn mix_seed(base: u64, k: u64) -> u64 {
    splitmix64(base ^ k.wrapping_add(1).wrapping_mul(0xA24B_AED4_963E_E407))
}

fn level_rng(seed: u64, level: usize) -> Pcg64 {
    Pcg64::seed_from_u64(mix_seed(seed, level as u64))
}

fn pick_weighted(u: f64, weights: impl Iterator<Item = f64> + Clone) -> usize {
    let total: f64 = weights.clone().sum();
    let mut acc = 0.0;
    let mut last = 0usize;
    for (i, w) in weights.enumerate() {
        acc += w;
        last = i;
        if u * total < acc {
            return i;
        }
    }
    last
}

fn draw_simplex(rng: &mut Pcg64, t: usize) -> Vec<f64> {
    // normalized independent standard exponentials = Dirichlet(1, ..., 1)
    let mut e: Vec<f64> = (0..t)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            -u.ln()
        })
        .collect();
    let sum: f64 = e.iter().sum();
    for v in &mut e {
        *v /= sum;
    }
    e
}

fn draw_level(spec: &DistributionSpec, rng: &mut Pcg64) -> Result<LevelDraw, SpecError> {
    match &spec.variant {
        SpecVariant::PointMass(d) => Ok(d.clone()),
        SpecVariant::DiscreteMixture { atoms } => {
            let u: f64 = rng.random();
            let i = pick_weighted(u, atoms.iter().map(|a| a.weight));
            Ok(atoms[i].draw.clone())
        }
        SpecVariant::ProductForm { children } => {
            let u: f64 = rng.random();
            let class = &children[pick_weighted(u, children.iter().map(|c| c.weight))];
            let r = match &class.ratio {
                RatioDist::PointMass(r) => *r,
                RatioDist::UniformInterval { upper } => {
                    let c = upper.unwrap_or_else(|| feasible_ratio_bound(class.t, spec.tau));
                    let v: f64 = rng.random();
                    c * (1.0 - v) // in (0, c]
                }
            };
            let p = match &class.probs {
                ProbDist::PointMass(v) => v.clone(),
                ProbDist::UniformSimplex => draw_simplex(rng, class.t),
                ProbDist::DiscreteSet { atoms, weights } => {
                    let w: f64 = rng.random();
                    atoms[pick_weighted(w, weights.iter().copied())].clone()
                }
            };
            LevelDraw::new(class.t, r, p)
        }
    }
}

/// Samples `depth` iid level draws. Deterministic in (spec, seed, depth);
/// prefixes are stable under extension.
pub fn sample_environment(
    spec: &DistributionSpec,
    seed: u64,
    depth: usize,
) -> Result<Environment, SpecError> {
    spec.validate()?;
    if depth < 1 {
        return Err(SpecError::EnvTooShort { len: 0, needed: 1 });
    }
    let mut draws = Vec::with_capacity(depth);
    for level in 1..=depth {
        let mut rng = level_rng(seed, level);
        draws.push(draw_level(spec, &mut rng)?);
    }
    Ok(Environment { spec_id: spec.fingerprint(), seed, draws })
}
