//! Double-double (~106-bit) accumulation for alternating binomial sums.
//!
//! The closed-form expectation of `-log(max p)` under a uniform simplex
//! distribution is an alternating sum whose terms grow like `C(T, T/2)`
//! while the result stays O(log T). Plain f64 summation loses all digits
//! past T ~ 40, so the sum is carried in unevaluated (hi, lo) pairs.

/// Unevaluated sum of two f64s with |lo| <= ulp(hi)/2.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: err }
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> Dd {
    // requires |a| >= |b|
    let s = a + b;
    let err = b - (s - a);
    Dd { hi: s, lo: err }
}

#[inline]
fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    let err = a.mul_add(b, -p);
    Dd { hi: p, lo: err }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub const fn new(hi: f64, lo: f64) -> Dd {
        Dd { hi, lo }
    }

    /// Exact conversion of a u128 that fits in ~107 bits of significand.
    pub fn from_u128(v: u128) -> Dd {
        let hi = v as f64;
        // hi rounds to nearest; the remainder fits an i128 for v < 2^120.
        let rem = v as i128 - hi as i128;
        quick_two_sum(hi, rem as f64)
    }

    pub fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let lo = s.lo + self.lo + o.lo;
        quick_two_sum(s.hi, lo)
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.hi, o.hi);
        let lo = p.lo + self.hi * o.lo + self.lo * o.hi;
        quick_two_sum(p.hi, lo)
    }

    /// Reciprocal of a positive f64, refined with one Newton step.
    pub fn recip_f64(x: f64) -> Dd {
        let q = 1.0 / x;
        // residual of 1 - q*x computed exactly with fma
        let r = (-q).mul_add(x, 1.0);
        quick_two_sum(q, r / x)
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// ln(p) for the primes up to 59, accurate to ~2^-106.
/// Values frozen from a 60-digit evaluation.
const LN_PRIMES: [(u32, f64, f64); 17] = [
    (2, std::f64::consts::LN_2, 2.3190468138462996e-17),
    (3, 1.0986122886681098, -9.07129723500153e-17),
    (5, 1.6094379124341003, 9.280081691085902e-17),
    (7, 1.9459101490553132, 7.323586207904907e-17),
    (11, 2.3978952727983707, -1.253584211423161e-16),
    (13, 2.5649493574615367, -2.5580975097208856e-18),
    (17, 2.833213344056216, -8.500696635386325e-17),
    (19, 2.9444389791664403, 1.9776172119535626e-16),
    (23, 3.1354942159291497, 1.5758359867283186e-17),
    (29, 3.367295829986474, -1.1553104240685565e-16),
    (31, 3.4339872044851463, -2.5863763694297672e-17),
    (37, 3.6109179126442243, 9.643918385970854e-17),
    (41, 3.713572066704308, -1.4628004942704776e-16),
    (43, 3.7612001156935624, 3.879508085699725e-17),
    (47, 3.8501476017100584, 1.5534199491592608e-16),
    (53, 3.970291913552122, -1.3098078310631424e-16),
    (59, 4.07753744390572, -2.5451232614395796e-16),
];

/// ln(j) in double-double precision via prime factorization, j <= 60.
pub(crate) fn ln_int(j: u32) -> Dd {
    assert!((1..=60).contains(&j), "ln_int domain is 1..=60");
    let mut acc = Dd::ZERO;
    let mut rest = j;
    for &(p, hi, lo) in LN_PRIMES.iter() {
        while rest.is_multiple_of(p) {
            acc = acc.add(Dd::new(hi, lo));
            rest /= p;
        }
    }
    debug_assert_eq!(rest, 1);
    acc
}
