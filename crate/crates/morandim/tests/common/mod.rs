//! Shared fixtures and independent oracles for the integration suites.
//!
//! The oracles here deliberately avoid the library's closed-form paths:
//! quadrature for the moment integrals, fresh-summation scans for the depth
//! function, and direct interval arithmetic where geometry is involved.

#![allow(dead_code)]

use std::path::PathBuf;

use morandim::randomness::{
    ChildClass, DistributionSpec, LevelDraw, ProbDist, RatioDist, WeightedDraw,
};

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn middle_third_spec() -> DistributionSpec {
    DistributionSpec::point_mass(
        LevelDraw::new(2, 1.0 / 3.0, vec![0.5, 0.5]).unwrap(),
        1.0 / 3.0,
    )
    .unwrap()
}

pub fn simplex_cantor_spec() -> DistributionSpec {
    DistributionSpec::product_form(
        vec![ChildClass {
            t: 2,
            weight: 1.0,
            ratio: RatioDist::PointMass(1.0 / 3.0),
            probs: ProbDist::UniformSimplex,
        }],
        1.0 / 3.0,
    )
    .unwrap()
}

pub fn three_child_simplex_spec() -> DistributionSpec {
    DistributionSpec::product_form(
        vec![ChildClass {
            t: 3,
            weight: 1.0,
            ratio: RatioDist::PointMass(0.2),
            probs: ProbDist::UniformSimplex,
        }],
        0.25,
    )
    .unwrap()
}

pub fn two_ifs_spec() -> DistributionSpec {
    DistributionSpec::discrete_mixture(
        vec![
            WeightedDraw {
                weight: 0.5,
                draw: LevelDraw::new(2, 0.25, vec![0.5, 0.5]).unwrap(),
            },
            WeightedDraw {
                weight: 0.5,
                draw: LevelDraw::new(3, 0.2, vec![1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0])
                    .unwrap(),
            },
        ],
        0.25,
    )
    .unwrap()
}

pub fn two_atom_mixture_spec() -> DistributionSpec {
    DistributionSpec::discrete_mixture(
        vec![
            WeightedDraw {
                weight: 0.5,
                draw: LevelDraw::new(2, 0.1, vec![0.2, 0.8]).unwrap(),
            },
            WeightedDraw {
                weight: 0.5,
                draw: LevelDraw::new(2, 0.1, vec![0.5, 0.5]).unwrap(),
            },
        ],
        0.25,
    )
    .unwrap()
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    struct Span {
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    }
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(f: &dyn Fn(f64) -> f64, s: Span) -> f64 {
        let (left, lm, flm) = simpson(f, s.a, s.fa, s.m, s.fm);
        let (right, rm, frm) = simpson(f, s.m, s.fm, s.b, s.fb);
        let delta = left + right - s.whole;
        if s.depth == 0 || delta.abs() <= 15.0 * s.tol {
            left + right + delta / 15.0
        } else {
            let l = Span {
                a: s.a,
                fa: s.fa,
                b: s.m,
                fb: s.fm,
                whole: left,
                m: lm,
                fm: flm,
                tol: s.tol / 2.0,
                depth: s.depth - 1,
            };
            let r = Span {
                a: s.m,
                fa: s.fm,
                b: s.b,
                fb: s.fb,
                whole: right,
                m: rm,
                fm: frm,
                tol: s.tol / 2.0,
                depth: s.depth - 1,
            };
            recurse(f, l) + recurse(f, r)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, Span { a, fa, b, fb, whole, m, fm, tol, depth: 48 })
}

/// E(-log min p) by quadrature: integrate -log z against the min-density
/// T(T-1)(1-Tz)^(T-2) on [0, 1/T]. The substitution z = e^{-s}/T... the
/// log-singularity at 0 is handled by the variable change z = (1/T) u^2,
/// which flattens it enough for the adaptive rule.
pub fn ey_quadrature(t: usize) -> f64 {
    let tf = t as f64;
    // z = u^2 / T, dz = 2u/T du, u in [0, 1]
    let integrand = move |u: f64| -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let z = u * u / tf;
        let density = tf * (tf - 1.0) * (1.0 - tf * z).max(0.0).powi(t as i32 - 2);
        density * (-z.ln()) * (2.0 * u / tf)
    };
    adaptive_simpson(&integrand, 0.0, 1.0, 1e-12)
}

/// E(-log max p) by quadrature of F(x)/x over [1/T, 1], where F is the
/// max-CDF. Integration by parts turns E(-log M) into that integral; the
/// integrand is piecewise smooth between the breakpoints 1/k.
pub fn ex_quadrature(t: usize) -> f64 {
    let integrand = move |x: f64| -> f64 { morandim::randomness::max_cdf(t, x) / x };
    let mut breaks: Vec<f64> = (1..=t).map(|k| 1.0 / k as f64).collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += adaptive_simpson(&integrand, w[0], w[1], 1e-12);
    }
    total
}

/// Independent depth oracle: fresh summation scan for the minimal k with
/// sum of Z over (n, n+k] at least phi * S_n.
pub fn brute_force_depth(zs: &[f64], phi: f64, n: usize) -> Option<usize> {
    let s_n: f64 = zs[..n].iter().sum();
    let target = phi * s_n;
    for k in 1..=(zs.len() - n) {
        let tail: f64 = zs[n..n + k].iter().sum();
        if tail >= target - 1e-12 * target.abs().max(1.0) {
            return Some(k);
        }
    }
    None
}
