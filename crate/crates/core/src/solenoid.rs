//! Geometry of `Q_P`: points with rational components, the sup-norm, closed
//! balls, the partial order on (center, radius) pairs, reduction to the
//! fundamental domain, distance to the diagonal lattice, and the disjoint
//! sub-ball packings behind the dimension bound.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{
    abs_p, congruence_solve, format_rational, is_s_element, least_exp_le, max_exponent_le, parse_rational, pow_p,
    PrimeConfig, Rational, SElement,
};
use crate::error::{Error, Result};

/// A point `(x_inf, x_p1, ..., x_pk)` with one rational per component.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SolenoidPoint {
    pub arch: Rational,
    pub padic: Vec<Rational>,
}

impl SolenoidPoint {
    pub fn new(arch: Rational, padic: Vec<Rational>) -> Self {
        SolenoidPoint { arch, padic }
    }

    /// The diagonal embedding `(q, q, ..., q)`.
    pub fn diagonal(q: &Rational, cfg: &PrimeConfig) -> Self {
        SolenoidPoint {
            arch: q.clone(),
            padic: vec![q.clone(); cfg.k()],
        }
    }

    pub fn zero(cfg: &PrimeConfig) -> Self {
        Self::diagonal(&Rational::zero(), cfg)
    }

    /// Components in the order `(arch, p1, ..., pk)`.
    pub fn components(&self) -> impl Iterator<Item = &Rational> {
        std::iter::once(&self.arch).chain(self.padic.iter())
    }

    pub fn from_components(mut comps: Vec<Rational>) -> Result<Self> {
        if comps.len() < 2 {
            return Err(Error::Dimension {
                expected: 2,
                got: comps.len(),
            });
        }
        let arch = comps.remove(0);
        Ok(SolenoidPoint { arch, padic: comps })
    }

    pub fn check(&self, cfg: &PrimeConfig) -> Result<()> {
        if self.padic.len() == cfg.k() {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: cfg.k(),
                got: self.padic.len(),
            })
        }
    }

    /// Componentwise product with a scalar, i.e. `g * x` for `g` in `Q`.
    pub fn scale(&self, g: &Rational) -> Self {
        SolenoidPoint {
            arch: &self.arch * g,
            padic: self.padic.iter().map(|c| c * g).collect(),
        }
    }

    pub fn sub(&self, other: &SolenoidPoint) -> Self {
        SolenoidPoint {
            arch: &self.arch - &other.arch,
            padic: self.padic.iter().zip(&other.padic).map(|(a, b)| a - b).collect(),
        }
    }

    /// Parses comma separated rationals `arch,p1,...,pk`.
    pub fn parse(s: &str, cfg: &PrimeConfig) -> Result<Self> {
        let comps = s.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?;
        let pt = Self::from_components(comps)?;
        pt.check(cfg)?;
        Ok(pt)
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.components().map(format_rational).collect()
    }
}

/// Sup-norm `|x| = max(|x_inf|, |x_p1|_p1, ..., |x_pk|_pk)`.
pub fn sup_norm(x: &SolenoidPoint, cfg: &PrimeConfig) -> Rational {
    let mut best = x.arch.abs();
    for (c, &p) in x.padic.iter().zip(cfg.primes()) {
        let a = abs_p(c, p);
        if a > best {
            best = a;
        }
    }
    best
}

pub fn sup_dist(x: &SolenoidPoint, y: &SolenoidPoint, cfg: &PrimeConfig) -> Result<Rational> {
    x.check(cfg)?;
    y.check(cfg)?;
    Ok(sup_norm(&x.sub(y), cfg))
}

/// A closed sup-norm ball with positive radius.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ball {
    pub center: SolenoidPoint,
    pub radius: Rational,
}

impl Ball {
    pub fn new(center: SolenoidPoint, radius: Rational) -> Result<Self> {
        if !radius.is_positive() {
            return Err(Error::parameter("radius", "must be positive"));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains_point(&self, x: &SolenoidPoint, cfg: &PrimeConfig) -> bool {
        sup_norm(&x.sub(&self.center), cfg) <= self.radius
    }
}

/// `(x1, r1) < (x2, r2)` iff `r1 + d(x1, x2) <= r2`.
pub fn precedes(
    x1: &SolenoidPoint,
    r1: &Rational,
    x2: &SolenoidPoint,
    r2: &Rational,
    cfg: &PrimeConfig,
) -> bool {
    r1 + sup_norm(&x1.sub(x2), cfg) <= *r2
}

/// `(p^(-m), m)` with `m` least such that `p^(-m) <= rho`. The p-adic ball of
/// radius `rho` coincides with the ball of this radius.
pub fn effective_padic_radius(rho: &Rational, p: u64) -> Result<(Rational, i64)> {
    if !rho.is_positive() {
        return Err(Error::parameter("rho", "must be positive"));
    }
    let m = least_exp_le(p, rho);
    Ok((pow_p(p, -m), m))
}

/// True iff `inner` is a subset of `outer`, checked per component.
pub fn ball_contains(outer: &Ball, inner: &Ball, cfg: &PrimeConfig) -> Result<bool> {
    outer.center.check(cfg)?;
    inner.center.check(cfg)?;
    if (&outer.center.arch - &inner.center.arch).abs() + &inner.radius > outer.radius {
        return Ok(false);
    }
    for ((co, ci), &p) in outer.center.padic.iter().zip(&inner.center.padic).zip(cfg.primes()) {
        let (ro, _) = effective_padic_radius(&outer.radius, p)?;
        let (ri, _) = effective_padic_radius(&inner.radius, p)?;
        if ri > ro || abs_p(&(co - ci), p) > ro {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff the two closed balls share a point.
pub fn balls_intersect(a: &Ball, b: &Ball, cfg: &PrimeConfig) -> Result<bool> {
    a.center.check(cfg)?;
    b.center.check(cfg)?;
    if (&a.center.arch - &b.center.arch).abs() > &a.radius + &b.radius {
        return Ok(false);
    }
    for ((ca, cb), &p) in a.center.padic.iter().zip(&b.center.padic).zip(cfg.primes()) {
        let (ra, _) = effective_padic_radius(&a.radius, p)?;
        let (rb, _) = effective_padic_radius(&b.radius, p)?;
        if abs_p(&(ca - cb), p) > ra.max(rb) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff the two balls have disjoint interiors: the Archimedean intervals
/// overlap in at most an endpoint, or some p-adic component is disjoint.
pub fn interiors_disjoint(a: &Ball, b: &Ball, cfg: &PrimeConfig) -> Result<bool> {
    a.center.check(cfg)?;
    b.center.check(cfg)?;
    if (&a.center.arch - &b.center.arch).abs() >= &a.radius + &b.radius {
        return Ok(true);
    }
    for ((ca, cb), &p) in a.center.padic.iter().zip(&b.center.padic).zip(cfg.primes()) {
        let (ra, _) = effective_padic_radius(&a.radius, p)?;
        let (rb, _) = effective_padic_radius(&b.radius, p)?;
        if abs_p(&(ca - cb), p) > ra.max(rb) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// The `p` representatives `c + j p^m`, `j = 0..p`, where `p^(-m)` is the
/// effective radius of `rho`. Their balls of radius `p^(-(m+1))` partition
/// the ball of radius `p^(-m)` around `c`.
pub fn padic_subball_representatives(c: &Rational, rho: &Rational, p: u64) -> Result<Vec<Rational>> {
    let (_, m) = effective_padic_radius(rho, p)?;
    let step = pow_p(p, m);
    Ok((0..p)
        .map(|j| c + &step * Rational::from_integer(BigInt::from(j)))
        .collect())
}

/// Reduces `y` into `F = [0,1) x Z_p1 x ... x Z_pk`: returns `(y', g)` with
/// `y' = y - diag(g)`.
pub fn reduce_mod_lattice(y: &SolenoidPoint, cfg: &PrimeConfig) -> Result<(SolenoidPoint, SElement)> {
    y.check(cfg)?;
    let targets: Vec<(Rational, i64)> = y.padic.iter().map(|c| (c.clone(), 0)).collect();
    let sol = congruence_solve(&targets, cfg)?;
    let b0 = sol.base.into_inner();
    // solutions are b0 + Z; pick the one putting the arch part in [0, 1)
    let shift = (&y.arch - &b0).floor();
    let g = b0 + shift;
    let reduced = y.sub(&SolenoidPoint::diagonal(&g, cfg));
    Ok((reduced, SElement::new_unchecked(g)))
}

pub fn in_fundamental_domain(y: &SolenoidPoint, cfg: &PrimeConfig) -> bool {
    !y.arch.is_negative()
        && y.arch < Rational::one()
        && y.padic.iter().zip(cfg.primes()).all(|(c, &p)| abs_p(c, p) <= Rational::one())
}

/// Smallest element of `base + g Z` inside `[lo, hi]` by absolute value,
/// positive on ties; `None` if the window misses the progression.
fn smallest_in_window(base: &Rational, g: &Rational, lo: &Rational, hi: &Rational) -> Option<Rational> {
    let n_lo = ((lo - base) / g).ceil();
    let n_hi = ((hi - base) / g).floor();
    if n_lo > n_hi {
        return None;
    }
    let pivot = -(base / g);
    let mut cands = vec![n_lo.clone(), n_hi.clone(), pivot.floor(), pivot.ceil()];
    for n in &mut cands {
        if *n < n_lo {
            *n = n_lo.clone();
        }
        if *n > n_hi {
            *n = n_hi.clone();
        }
    }
    cands
        .into_iter()
        .map(|n| base + g * n)
        .min_by(|a, b| a.abs().cmp(&b.abs()).then_with(|| b.cmp(a)))
}

/// Distance from `x` to the nearest point of `base + g Z`.
pub(crate) fn dist_to_progression(x: &Rational, base: &Rational, g: &Rational) -> Rational {
    let t = (x - base) / g;
    let f = &t - t.floor();
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let frac = if f > half { Rational::one() - f } else { f };
    frac * g.abs()
}

/// Thresholds `m_i` such that `|z|_{p_i} <= d` iff `v_{p_i}(z) >= m_i`.
fn padic_levels(d: &Rational, cfg: &PrimeConfig) -> Vec<i64> {
    cfg.primes().iter().map(|&p| least_exp_le(p, d)).collect()
}

/// `min over b in S of |y - diag(b)|` together with a minimizer (smallest
/// absolute value, positive on ties).
pub fn min_diagonal_distance(y: &SolenoidPoint, cfg: &PrimeConfig) -> Result<(Rational, SElement)> {
    y.check(cfg)?;
    if y.padic.iter().all(|c| c == &y.arch) && is_s_element(&y.arch, cfg) {
        return Ok((Rational::zero(), SElement::new_unchecked(y.arch.clone())));
    }
    // Descend through the p-power levels L <= 1. For d in [L, next level up)
    // the admissible b form one coset; the arch distance A to that coset is
    // nondecreasing as L shrinks, so the scan stops once A >= L.
    let one = Rational::one();
    let mut level = one.clone();
    let mut best: Option<Rational> = None;
    loop {
        let ms = padic_levels(&level, cfg);
        let targets: Vec<(Rational, i64)> = y.padic.iter().cloned().zip(ms.iter().copied()).collect();
        let sol = congruence_solve(&targets, cfg)?;
        let a = dist_to_progression(&y.arch, sol.base.value(), &sol.modulus);
        let cand = if a > level { a.clone() } else { level.clone() };
        if best.as_ref().map_or(true, |b| &cand < b) {
            best = Some(cand);
        }
        if a >= level {
            break;
        }
        level = cfg
            .primes()
            .iter()
            .zip(&ms)
            .map(|(&p, &m)| {
                let pw = pow_p(p, -m);
                if pw < level {
                    pw
                } else {
                    pow_p(p, -m - 1)
                }
            })
            .max()
            .expect("at least one prime");
    }
    let d = best.expect("loop runs at least once");
    let ms = padic_levels(&d, cfg);
    let targets: Vec<(Rational, i64)> = y.padic.iter().cloned().zip(ms).collect();
    let sol = congruence_solve(&targets, cfg)?;
    let b = smallest_in_window(sol.base.value(), &sol.modulus, &(&y.arch - &d), &(&y.arch + &d))
        .ok_or_else(|| Error::Invariant("minimizer window is empty".into()))?;
    Ok((d, SElement::new_unchecked(b)))
}

/// The exact count `floor(1/beta) * prod_j p_j^(max(f_j - 1, 0))`, with
/// `f_j = floor(log_{p_j}(1/beta))`, realised by [`packing_construct`].
pub fn packing_count(beta: &Rational, cfg: &PrimeConfig) -> BigInt {
    let inv = beta.recip();
    let arch = inv.floor().to_integer();
    cfg.primes().iter().fold(arch, |acc, &p| {
        let f = max_exponent_le(p, &inv);
        acc * BigInt::from(p).pow(f.saturating_sub(1) as u32)
    })
}

/// `1 / (2 (p1...pk)^2 beta^(k+1))`.
pub fn packing_lower_bound(beta: &Rational, cfg: &PrimeConfig) -> Rational {
    let prod = Rational::from_integer(cfg.product());
    let denom = Rational::from_integer(BigInt::from(2)) * &prod * &prod * num_traits::pow(beta.clone(), cfg.k() + 1);
    denom.recip()
}

/// Balls of radius `beta * b.radius` inside `b`, pairwise with disjoint
/// interiors and each preceding `(b.center, b.radius)`.
pub fn packing_construct(b: &Ball, beta: &Rational, cfg: &PrimeConfig) -> Result<Vec<Ball>> {
    b.center.check(cfg)?;
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    if !beta.is_positive() || beta >= &half {
        return Err(Error::parameter("beta", "must satisfy 0 < beta < 1/2"));
    }
    let rho = &b.radius;
    let small = beta * rho;
    let slack = (Rational::one() - beta) * rho;

    // Archimedean: floor(1/beta) touching intervals, centred in the parent.
    let count = beta.recip().floor().to_integer();
    let count_r = Rational::from_integer(count.clone());
    let two = Rational::from_integer(BigInt::from(2));
    let start = &b.center.arch - rho + &small + rho * (Rational::one() - beta * &count_r);
    let mut arch_centers = Vec::new();
    let mut j = BigInt::zero();
    while j < count {
        arch_centers.push(&start + &two * &small * Rational::from_integer(j.clone()));
        j += 1;
    }

    // p-adic: p^(f-1) classes c + j p^m, m the effective level of the slack.
    let inv = beta.recip();
    let mut per_prime: Vec<Vec<Rational>> = Vec::new();
    for (c, &p) in b.center.padic.iter().zip(cfg.primes()) {
        let f = max_exponent_le(p, &inv);
        let n = p.pow(f.saturating_sub(1) as u32);
        let (_, m) = effective_padic_radius(&slack, p)?;
        let step = pow_p(p, m);
        per_prime.push((0..n).map(|j| c + &step * Rational::from_integer(BigInt::from(j))).collect());
    }

    let mut combos: Vec<Vec<Rational>> = vec![Vec::new()];
    for choices in &per_prime {
        let mut next = Vec::with_capacity(combos.len() * choices.len());
        for prefix in &combos {
            for c in choices {
                let mut v = prefix.clone();
                v.push(c.clone());
                next.push(v);
            }
        }
        combos = next;
    }
    let mut out = Vec::with_capacity(arch_centers.len() * combos.len());
    for a in &arch_centers {
        for padic in &combos {
            out.push(Ball {
                center: SolenoidPoint::new(a.clone(), padic.clone()),
                radius: small.clone(),
            });
        }
    }
    Ok(out)
}

/// Serialized form of a point: component strings `"num/den"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallRecord {
    pub center: Vec<String>,
    pub radius: String,
}

impl BallRecord {
    pub fn from_ball(b: &Ball) -> Self {
        BallRecord {
            center: b.center.to_strings(),
            radius: format_rational(&b.radius),
        }
    }

    pub fn to_ball(&self, cfg: &PrimeConfig) -> Result<Ball> {
        let comps = self.center.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
        let center = SolenoidPoint::from_components(comps)?;
        center.check(cfg)?;
        Ball::new(center, parse_rational(&self.radius)?)
    }
}
