//! Exact combinatorial identities behind the simplex order-statistic
//! moments, checked in rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IdentityError {
    #[error("lambda = {0} is a pole of the identity (excluded integers 1..=n+1)")]
    Pole(String),
    #[error("n must be >= 1")]
    BadOrder,
}

fn big_binomials(n: usize) -> Vec<BigInt> {
    let mut c: Vec<BigInt> = Vec::with_capacity(n + 1);
    let mut cur = BigInt::one();
    c.push(cur.clone());
    for j in 1..=n {
        cur = cur * BigInt::from(n - j + 1) / BigInt::from(j);
        c.push(cur.clone());
    }
    c
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// |sum_{k=0..n} (-1)^k C(n,k)/(k+1)  -  1/(n+1)|, exactly.
pub fn melzak_reciprocal_residual(n: usize) -> Result<BigRational, IdentityError> {
    if n < 1 {
        return Err(IdentityError::BadOrder);
    }
    let c = big_binomials(n);
    let mut lhs = BigRational::zero();
    for (k, ck) in c.iter().enumerate() {
        let term = BigRational::new(ck.clone(), BigInt::from(k as i64 + 1));
        if k % 2 == 0 {
            lhs += term;
        } else {
            lhs -= term;
        }
    }
    Ok((lhs - rat(1, n as i64 + 1)).abs())
}

/// |sum_{k=0..n} (-1)^k C(n,k)/(k+1)^2  -  (1/(n+1)) sum_{k=0..n} 1/(k+1)|.
pub fn melzak_reciprocal_sq_residual(n: usize) -> Result<BigRational, IdentityError> {
    if n < 1 {
        return Err(IdentityError::BadOrder);
    }
    let c = big_binomials(n);
    let mut lhs = BigRational::zero();
    for (k, ck) in c.iter().enumerate() {
        let kk = BigInt::from((k as i64 + 1) * (k as i64 + 1));
        let term = BigRational::new(ck.clone(), kk);
        if k % 2 == 0 {
            lhs += term;
        } else {
            lhs -= term;
        }
    }
    let mut rhs = BigRational::zero();
    for k in 0..=n {
        rhs += rat(1, k as i64 + 1);
    }
    rhs /= BigRational::from(BigInt::from(n as i64 + 1));
    Ok((lhs - rhs).abs())
}

/// |sum_{k=0..n} (-1)^k C(n,k)/(k+1-λ)  -  n! / Π_{i=1..n+1} (i-λ)| for
/// rational λ not in {1, ..., n+1}. Exact.
pub fn melzak_lambda_residual(
    n: usize,
    lambda: &BigRational,
) -> Result<BigRational, IdentityError> {
    if n < 1 {
        return Err(IdentityError::BadOrder);
    }
    if lambda.is_integer() {
        let v = lambda.to_integer();
        if v >= BigInt::one() && v <= BigInt::from(n as i64 + 1) {
            return Err(IdentityError::Pole(lambda.to_string()));
        }
    }
    let c = big_binomials(n);
    let mut lhs = BigRational::zero();
    for (k, ck) in c.iter().enumerate() {
        let denom = BigRational::from(BigInt::from(k as i64 + 1)) - lambda;
        let term = BigRational::from(ck.clone()) / denom;
        if k % 2 == 0 {
            lhs += term;
        } else {
            lhs -= term;
        }
    }
    let mut fact = BigInt::one();
    for i in 2..=n {
        fact *= BigInt::from(i);
    }
    let mut denom = BigRational::one();
    for i in 1..=(n + 1) {
        denom *= BigRational::from(BigInt::from(i as i64)) - lambda;
    }
    let rhs = BigRational::from(fact) / denom;
    Ok((lhs - rhs).abs())
}

/// Float-path version of the λ-form residual for irrational λ.
pub fn melzak_lambda_residual_f64(n: usize, lambda: f64) -> Result<f64, IdentityError> {
    if n < 1 {
        return Err(IdentityError::BadOrder);
    }
    let nearest = lambda.round();
    if (lambda - nearest).abs() < 1e-9 && nearest >= 1.0 && nearest <= (n + 1) as f64 {
        return Err(IdentityError::Pole(format!("{lambda}")));
    }
    let mut c = 1.0f64;
    let mut lhs = 1.0 / (1.0 - lambda);
    for k in 1..=n {
        c = c * (n - k + 1) as f64 / k as f64;
        let term = c / (k as f64 + 1.0 - lambda);
        if k % 2 == 0 {
            lhs += term;
        } else {
            lhs -= term;
        }
    }
    let mut rhs = 1.0f64;
    for i in 2..=n {
        rhs *= i as f64;
    }
    for i in 1..=(n + 1) {
        rhs /= i as f64 - lambda;
    }
    Ok((lhs - rhs).abs())
}

/// |sum_{k=1..t} (-1)^k C(t,k) k^j| for 1 <= j <= t-1; zero by Euler's
/// finite difference formula. Exact integers.
pub fn euler_difference_residual(t: usize, j: usize) -> Result<BigInt, IdentityError> {
    if t < 2 || j < 1 || j > t - 1 {
        return Err(IdentityError::BadOrder);
    }
    let c = big_binomials(t);
    let mut acc = BigInt::zero();
    for (k, ck) in c.iter().enumerate().skip(1) {
        let term = ck * BigInt::from(k).pow(j as u32);
        if k % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc.abs())
}

/// Combined report over the identity family at one order.
#[derive(Debug)]
pub struct MelzakReport {
    pub reciprocal: BigRational,
    pub reciprocal_sq: BigRational,
    pub lambda_form: f64,
    pub euler_max: BigInt,
}

impl MelzakReport {
    /// Largest residual across all checked identities, as f64.
    pub fn max_residual(&self) -> f64 {
        let a = rational_to_f64(&self.reciprocal);
        let b = rational_to_f64(&self.reciprocal_sq);
        let c = self.lambda_form;
        let d = euler_to_f64(&self.euler_max);
        a.max(b).max(c).max(d)
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    let n = r.numer().to_string().parse::<f64>().unwrap_or(f64::INFINITY);
    let d = r.denom().to_string().parse::<f64>().unwrap_or(f64::INFINITY);
    if d == 0.0 {
        f64::INFINITY
    } else {
        n / d
    }
}

fn euler_to_f64(v: &BigInt) -> f64 {
    v.to_string().parse::<f64>().unwrap_or(f64::INFINITY)
}

/// Residuals of the three reciprocal identities at order n plus Euler's
/// identity at T = n (all exponents 1..=n-1 when n >= 2). λ follows the
/// float path unless it is an exact half-integer--style rational; poles are
/// rejected.
pub fn melzak_identity_check(n: usize, lambda: f64) -> Result<MelzakReport, IdentityError> {
    let reciprocal = melzak_reciprocal_residual(n)?;
    let reciprocal_sq = melzak_reciprocal_sq_residual(n)?;
    let lambda_form = melzak_lambda_residual_f64(n, lambda)?;
    let euler_max = if n >= 2 {
        let mut worst = BigInt::zero();
        for j in 1..=(n - 1) {
            let r = euler_difference_residual(n, j)?;
            if r > worst {
                worst = r;
            }
        }
        worst
    } else {
        BigInt::zero()
    };
    Ok(MelzakReport { reciprocal, reciprocal_sq, lambda_form, euler_max })
}
