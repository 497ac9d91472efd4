//! Exact rationals, p-adic valuations and absolute values, and the ring
//! `S = Z[1/(p1...pk)]` of rationals whose denominators only involve the
//! configured primes.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Shorthand for `n/d`. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"a/b"` or `"a"` into a rational.
pub fn parse_rational(input: &str) -> Result<Rational> {
    let err = |reason: &str| Error::Parse {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    let s = input.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| err("bad numerator"))?;
    let d: BigInt = d.parse().map_err(|_| err("bad denominator"))?;
    if d.is_zero() {
        return Err(err("zero denominator"));
    }
    Ok(Rational::new(n, d))
}

/// Renders a rational as `"numerator/denominator"`, including for integers.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// `p^e` for any integer exponent.
pub fn pow_p(p: u64, e: i64) -> Rational {
    let base = BigInt::from(p);
    let mag = num_traits::pow(base, e.unsigned_abs() as usize);
    if e >= 0 {
        Rational::from_integer(mag)
    } else {
        Rational::new(BigInt::one(), mag)
    }
}

fn pow_int(p: u64, e: u64) -> BigInt {
    num_traits::pow(BigInt::from(p), e as usize)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// The finite set of distinct primes defining the space, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrimeConfig {
    primes: Vec<u64>,
}

impl PrimeConfig {
    pub fn new(primes: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut primes: Vec<u64> = primes.into_iter().collect();
        if primes.is_empty() {
            return Err(Error::Config("at least one prime is required".into()));
        }
        if let Some(&bad) = primes.iter().find(|&&p| !is_prime(p)) {
            return Err(Error::Config(format!("{bad} is not prime")));
        }
        primes.sort_unstable();
        if primes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("primes must be distinct".into()));
        }
        Ok(PrimeConfig { primes })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Number of primes, i.e. the number of p-adic factors.
    pub fn k(&self) -> usize {
        self.primes.len()
    }

    /// `M = max p_i`.
    pub fn max_prime(&self) -> u64 {
        *self.primes.last().expect("non-empty by construction")
    }

    /// `p1 * ... * pk`.
    pub fn product(&self) -> BigInt {
        self.primes.iter().map(|&p| BigInt::from(p)).product()
    }

    pub fn contains(&self, p: u64) -> bool {
        self.primes.binary_search(&p).is_ok()
    }
}

impl fmt::Display for PrimeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.primes.iter().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// A p-adic valuation; zero has infinite valuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(i64),
    PositiveInfinity,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::PositiveInfinity => None,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        use Valuation::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), PositiveInfinity) => Ordering::Less,
            (PositiveInfinity, Finite(_)) => Ordering::Greater,
            (PositiveInfinity, PositiveInfinity) => Ordering::Equal,
        }
    }
}

fn int_valuation(n: &BigInt, p: &BigInt) -> i64 {
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(p);
        if !r.is_zero() {
            return v;
        }
        m = q;
        v += 1;
    }
}

/// Valuation without the primality check; `None` for zero.
pub(crate) fn val(q: &Rational, p: u64) -> Option<i64> {
    if q.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    Some(int_valuation(q.numer(), &pb) - int_valuation(q.denom(), &pb))
}

fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{p} is not prime")))
    }
}

/// `v` with `q = p^v * (a/b)`, `p` dividing neither `a` nor `b`.
pub fn padic_valuation(q: &Rational, p: u64) -> Result<Valuation> {
    check_prime(p)?;
    Ok(match val(q, p) {
        Some(v) => Valuation::Finite(v),
        None => Valuation::PositiveInfinity,
    })
}

pub(crate) fn abs_p(q: &Rational, p: u64) -> Rational {
    match val(q, p) {
        Some(v) => pow_p(p, -v),
        None => Rational::zero(),
    }
}

/// `|q|_p = p^(-v_p(q))`, and `0` for `q = 0`.
pub fn padic_abs(q: &Rational, p: u64) -> Result<Rational> {
    check_prime(p)?;
    Ok(abs_p(q, p))
}

pub fn arch_abs(q: &Rational) -> Rational {
    q.abs()
}

/// Sup-norm of the diagonal embedding of any rational.
pub(crate) fn norm_of(q: &Rational, cfg: &PrimeConfig) -> Rational {
    let mut best = q.abs();
    for &p in cfg.primes() {
        let a = abs_p(q, p);
        if a > best {
            best = a;
        }
    }
    best
}

/// An element of `Z[1/(p1...pk)]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SElement(Rational);

impl SElement {
    pub fn new(q: Rational, cfg: &PrimeConfig) -> Result<Self> {
        if is_s_element(&q, cfg) {
            Ok(SElement(q))
        } else {
            Err(Error::NotSElement(format_rational(&q)))
        }
    }

    pub(crate) fn new_unchecked(q: Rational) -> Self {
        SElement(q)
    }

    pub fn zero() -> Self {
        SElement(Rational::zero())
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_inner(self) -> Rational {
        self.0
    }
}

impl fmt::Display for SElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_rational(&self.0))
    }
}

/// `max(|g|_inf, |g|_p1, ..., |g|_pk)`: the sup-norm of the diagonal
/// embedding of `g`.
pub fn diag_norm(gamma: &SElement, cfg: &PrimeConfig) -> Rational {
    norm_of(gamma.value(), cfg)
}

/// True iff every prime factor of the denominator of `q` is configured.
pub fn is_s_element(q: &Rational, cfg: &PrimeConfig) -> bool {
    let mut d = q.denom().clone();
    for &p in cfg.primes() {
        let pb = BigInt::from(p);
        loop {
            let (quo, r) = d.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            d = quo;
        }
    }
    d.is_one()
}

/// Largest `e >= 0` with `p^e <= bound` (bound >= 1).
pub(crate) fn max_exponent_le(p: u64, bound: &Rational) -> u64 {
    let mut e = 0u64;
    let mut pw = Rational::from_integer(BigInt::from(p));
    while &pw <= bound {
        e += 1;
        pw *= Rational::from_integer(BigInt::from(p));
    }
    e
}

/// Least integer `m` with `p^(-m) <= r`, for `r > 0`.
pub(crate) fn least_exp_le(p: u64, r: &Rational) -> i64 {
    debug_assert!(r.is_positive());
    let mut m = 0i64;
    let mut pw = Rational::one(); // p^(-m)
    let pr = Rational::from_integer(BigInt::from(p));
    if &pw <= r {
        // decrease m while p^(-(m-1)) still fits
        loop {
            let next = &pw * &pr;
            if &next <= r {
                pw = next;
                m -= 1;
            } else {
                return m;
            }
        }
    } else {
        while &pw > r {
            pw /= &pr;
            m += 1;
        }
        m
    }
}

/// Least integer `m` with `p^(-m) < r`, for `r > 0`.
pub(crate) fn least_exp_lt(p: u64, r: &Rational) -> i64 {
    let m = least_exp_le(p, r);
    if &pow_p(p, -m) == r {
        m + 1
    } else {
        m
    }
}

/// Common denominator `D = prod p_i^{E_i}` with `E_i` maximal subject to
/// `p_i^{E_i} <= bound`; every S-element of norm at most `bound` lies in
/// `(1/D) Z`.
pub(crate) fn s_denominator(cfg: &PrimeConfig, bound: &Rational) -> (BigInt, Vec<u64>) {
    let exps: Vec<u64> = cfg.primes().iter().map(|&p| max_exponent_le(p, bound)).collect();
    let d = cfg
        .primes()
        .iter()
        .zip(&exps)
        .map(|(&p, &e)| pow_int(p, e))
        .product();
    (d, exps)
}

/// All nonzero `g` in `Z[1/(p1...pk)]` with `diag_norm(g) <= bound`, sorted by
/// `(diag_norm, numerator, value)`.
pub fn enumerate_s_elements(cfg: &PrimeConfig, bound: &Rational) -> Vec<SElement> {
    if bound < &Rational::one() {
        return Vec::new();
    }
    let (d, _) = s_denominator(cfg, bound);
    let d_rat = Rational::from_integer(d.clone());
    let amax = (bound * &d_rat).floor().to_integer();
    let mut out: Vec<(Rational, SElement)> = Vec::new();
    let mut a = BigInt::one();
    while a <= amax {
        for sign in [1i32, -1] {
            let g = Rational::new(&a * BigInt::from(sign), d.clone());
            let n = norm_of(&g, cfg);
            if &n <= bound {
                out.push((n, SElement(g)));
            }
        }
        a += 1;
    }
    out.sort_by(|(na, ga), (nb, gb)| {
        na.cmp(nb)
            .then_with(|| ga.value().numer().cmp(gb.value().numer()))
            .then_with(|| ga.cmp(gb))
    });
    out.into_iter().map(|(_, g)| g).collect()
}

/// Solution of a system of p-adic congruences: every `b` in `base + modulus * Z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongruenceSolution {
    pub base: SElement,
    pub modulus: Rational,
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let eg = a.mod_floor(m).extended_gcd(m);
    debug_assert!(eg.gcd.is_one());
    eg.x.mod_floor(m)
}

/// Finds `b0` in `S` with `v_{p_i}(b0 - y_i) >= m_i` for every configured
/// prime; the solution set is `b0 + g Z` with `g = prod p_i^{m_i}`.
///
/// `targets[i]` belongs to the i-th prime of `cfg` (sorted order). The
/// returned base is the representative in `[0, g)`.
pub fn congruence_solve(targets: &[(Rational, i64)], cfg: &PrimeConfig) -> Result<CongruenceSolution> {
    if targets.len() != cfg.k() {
        return Err(Error::Dimension {
            expected: cfg.k(),
            got: targets.len(),
        });
    }
    // Scale by lambda so every scaled target is p_i-integral and every
    // required precision is non-negative.
    let lambdas: Vec<i64> = targets
        .iter()
        .zip(cfg.primes())
        .map(|((y, m), &p)| {
            let neg_v = val(y, p).map(|v| -v).unwrap_or(0);
            0.max(-m).max(neg_v)
        })
        .collect();
    let lambda: BigInt = cfg
        .primes()
        .iter()
        .zip(&lambdas)
        .map(|(&p, &l)| pow_int(p, l as u64))
        .product();
    let lambda_r = Rational::from_integer(lambda.clone());

    let mut residue = BigInt::zero();
    let mut modulus = BigInt::one();
    for (((y, m), &p), &l) in targets.iter().zip(cfg.primes()).zip(&lambdas) {
        let n = m + l;
        if n <= 0 {
            continue;
        }
        let pm = pow_int(p, n as u64);
        let scaled = y * &lambda_r;
        let r = (scaled.numer() * mod_inverse(scaled.denom(), &pm)).mod_floor(&pm);
        // combine x = residue (mod modulus) with x = r (mod pm)
        let diff = (&r - &residue).mod_floor(&pm);
        let k = (diff * mod_inverse(&modulus, &pm)).mod_floor(&pm);
        residue += &modulus * k;
        modulus *= pm;
    }

    let g: Rational = cfg
        .primes()
        .iter()
        .zip(targets)
        .map(|(&p, (_, m))| pow_p(p, *m))
        .product();
    let b0 = Rational::new(residue, lambda);
    let b0 = &b0 - &g * (&b0 / &g).floor();
    Ok(CongruenceSolution {
        base: SElement(b0),
        modulus: g,
    })
}
