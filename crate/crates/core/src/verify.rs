//! Exact verifiers: Dirichlet approximations, bad-approximability
//! certificates on balls and points, approximation spectra, and the
//! Hausdorff dimension lower bound.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::arith::{enumerate_s_elements, format_rational, int, norm_of, PrimeConfig, Rational, SElement};
use crate::error::{Error, Result};
use crate::scan::sieve;
use crate::solenoid::{min_diagonal_distance, Ball, SolenoidPoint};

/// Most failures a certificate keeps; the rest are only counted.
pub const WITNESS_CAP: usize = 32;

/// The multipliers `gamma` a certificate quantifies over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GammaRange {
    /// `0 < diag_norm(gamma) <= bound`.
    NormAtMost(Rational),
    /// `diag_norm(gamma)^2 < bound`.
    NormSquaredBelow(Rational),
}

impl GammaRange {
    pub fn contains(&self, norm: &Rational) -> bool {
        match self {
            GammaRange::NormAtMost(b) => norm <= b,
            GammaRange::NormSquaredBelow(b) => &(norm * norm) < b,
        }
    }

    /// A rational at least as large as every norm in the range.
    pub fn upper(&self) -> Rational {
        match self {
            GammaRange::NormAtMost(b) => b.clone(),
            GammaRange::NormSquaredBelow(b) => {
                if !b.is_positive() {
                    return Rational::zero();
                }
                let nd = b.numer() * b.denom();
                Rational::new(nd.sqrt() + 1, b.denom().clone())
            }
        }
    }

    fn to_json(&self) -> Value {
        match self {
            GammaRange::NormAtMost(b) => json!({"norm_at_most": format_rational(b)}),
            GammaRange::NormSquaredBelow(b) => json!({"norm_squared_below": format_rational(b)}),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Subject {
    Ball(Ball),
    Point(SolenoidPoint),
}

impl Subject {
    fn center(&self) -> &SolenoidPoint {
        match self {
            Subject::Ball(b) => &b.center,
            Subject::Point(x) => x,
        }
    }

    fn radius(&self) -> Rational {
        match self {
            Subject::Ball(b) => b.radius.clone(),
            Subject::Point(_) => Rational::zero(),
        }
    }
}

/// A `gamma` at which the inequality fails: `distance < required`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub gamma: Rational,
    pub beta: Rational,
    pub norm: Rational,
    pub distance: Rational,
    pub required: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub subject: Subject,
    pub delta: Rational,
    pub range: GammaRange,
    pub verdict: bool,
    /// The first failures by `(norm, gamma)`, at most [`WITNESS_CAP`].
    pub witnesses: Vec<Witness>,
    pub failures: u64,
    /// Positive multipliers examined, before filtering by the range.
    pub scanned: u64,
}

impl Certificate {
    pub fn to_json(&self) -> Value {
        let subject = match &self.subject {
            Subject::Ball(b) => json!({
                "kind": "ball",
                "center": b.center.to_strings(),
                "radius": format_rational(&b.radius),
            }),
            Subject::Point(x) => json!({"kind": "point", "center": x.to_strings()}),
        };
        let witnesses: Vec<Value> = self
            .witnesses
            .iter()
            .map(|w| {
                json!({
                    "gamma": format_rational(&w.gamma),
                    "beta": format_rational(&w.beta),
                    "norm": format_rational(&w.norm),
                    "distance": format_rational(&w.distance),
                    "required": format_rational(&w.required),
                })
            })
            .collect();
        json!({
            "subject": subject,
            "delta": format_rational(&self.delta),
            "gamma_range": self.range.to_json(),
            "gamma_bound": format_rational(&self.range.upper()),
            "verdict": self.verdict,
            "failures": self.failures,
            "scanned": self.scanned,
            "witnesses": witnesses,
        })
    }
}

/// Checks one multiplier; `None` when the inequality holds.
fn test_gamma(center: &SolenoidPoint, radius: &Rational, delta: &Rational, g: &Rational, cfg: &PrimeConfig) -> Result<Option<Witness>> {
    let norm = norm_of(g, cfg);
    let (distance, beta) = min_diagonal_distance(&center.scale(g), cfg)?;
    let required = delta / &norm + &norm * radius;
    Ok((distance < required).then(|| Witness {
        gamma: g.clone(),
        beta: beta.into_inner(),
        norm,
        distance,
        required,
    }))
}

fn finish(subject: Subject, delta: &Rational, range: GammaRange, mut fails: Vec<Witness>, scanned: u64) -> Certificate {
    fails.sort_by(|a, b| (&a.norm, &a.gamma).cmp(&(&b.norm, &b.gamma)));
    let failures = fails.len() as u64;
    fails.truncate(WITNESS_CAP);
    Certificate {
        subject,
        delta: delta.clone(),
        range,
        verdict: failures == 0,
        witnesses: fails,
        failures,
        scanned,
    }
}

fn check_inputs(subject: &Subject, delta: &Rational, cfg: &PrimeConfig) -> Result<()> {
    subject.center().check(cfg)?;
    if !delta.is_positive() {
        return Err(Error::parameter("delta", "must be positive"));
    }
    Ok(())
}

/// Certifies `|g x - diag(b)| >= delta / |g|` for every `x` in the subject
/// and every `g` in the range, through the sufficient condition
/// `min_diagonal_distance(g c) >= delta/N + N rho` at the centre `c`.
///
/// Only positive `g` are examined: `-g` has the same norm and distance.
pub fn certify(subject: Subject, delta: &Rational, range: GammaRange, cfg: &PrimeConfig) -> Result<Certificate> {
    check_inputs(&subject, delta, cfg)?;
    let hi = range.upper();
    let radius = subject.radius();
    if hi < Rational::one() {
        return Ok(finish(subject, delta, range, Vec::new(), 0));
    }
    let t_max = delta + &hi * &radius;
    let sv = sieve(subject.center(), &hi, &t_max, cfg)?;
    let mut fails = Vec::new();
    for g in &sv.candidates {
        if !range.contains(&norm_of(g, cfg)) {
            continue;
        }
        if let Some(w) = test_gamma(subject.center(), &radius, delta, g, cfg)? {
            fails.push(w);
        }
    }
    Ok(finish(subject, delta, range, fails, sv.scanned))
}

/// [`certify`] by testing every multiplier in the range, with no sieve.
pub fn certify_exhaustive(subject: Subject, delta: &Rational, range: GammaRange, cfg: &PrimeConfig) -> Result<Certificate> {
    check_inputs(&subject, delta, cfg)?;
    let radius = subject.radius();
    let mut fails = Vec::new();
    let mut scanned = 0u64;
    for g in enumerate_s_elements(cfg, &range.upper()) {
        let g = g.into_inner();
        if !g.is_positive() {
            continue;
        }
        scanned += 1;
        if !range.contains(&norm_of(&g, cfg)) {
            continue;
        }
        if let Some(w) = test_gamma(subject.center(), &radius, delta, &g, cfg)? {
            fails.push(w);
        }
    }
    Ok(finish(subject, delta, range, fails, scanned))
}

pub fn certify_bad_on_ball(b: &Ball, delta: &Rational, gamma_bound: &Rational, cfg: &PrimeConfig) -> Result<Certificate> {
    certify(Subject::Ball(b.clone()), delta, GammaRange::NormAtMost(gamma_bound.clone()), cfg)
}

pub fn certify_bad_at_point(x: &SolenoidPoint, delta: &Rational, gamma_bound: &Rational, cfg: &PrimeConfig) -> Result<Certificate> {
    certify(Subject::Point(x.clone()), delta, GammaRange::NormAtMost(gamma_bound.clone()), cfg)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirichletHit {
    pub beta: SElement,
    pub gamma: SElement,
    pub distance: Rational,
    /// `M / N` with `M` the largest prime.
    pub bound: Rational,
}

/// First `gamma` by increasing norm, `0 < |gamma| <= n`, with
/// `|gamma x - diag(beta)| <= M/n` for some `beta` in `S`.
///
/// Ties in norm are broken by numerator, then value. Only positive
/// `gamma` are returned.
pub fn dirichlet_search(x: &SolenoidPoint, n: u64, cfg: &PrimeConfig) -> Result<DirichletHit> {
    x.check(cfg)?;
    if n == 0 {
        return Err(Error::parameter("N", "must be a positive integer"));
    }
    let nq = int(n as i64);
    let bound = int(cfg.max_prime() as i64) / &nq;
    // Grow the search bound so that small solutions stay cheap.
    let mut lo = Rational::zero();
    let mut hi = Rational::one().min(nq.clone());
    loop {
        let sv = sieve(x, &hi, &(&bound * int(2)), cfg)?;
        let mut cands: Vec<(Rational, Rational)> = sv
            .candidates
            .into_iter()
            .map(|g| (norm_of(&g, cfg), g))
            .filter(|(norm, _)| norm > &lo)
            .collect();
        cands.sort_by(|(na, a), (nb, b)| (na, a.numer(), a).cmp(&(nb, b.numer(), b)));
        for (_, g) in cands {
            let (distance, beta) = min_diagonal_distance(&x.scale(&g), cfg)?;
            if distance <= bound {
                return Ok(DirichletHit {
                    beta,
                    gamma: SElement::new_unchecked(g),
                    distance,
                    bound,
                });
            }
        }
        if hi >= nq {
            break;
        }
        lo = hi.clone();
        hi = (hi * int(2)).min(nq.clone());
    }
    Err(Error::TheoremViolation(format!(
        "no gamma with norm <= {n} approximates {} within {}",
        x.to_strings().join(","),
        format_rational(&bound)
    )))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumRow {
    pub gamma: Rational,
    pub beta: Rational,
    pub norm: Rational,
    pub distance: Rational,
    /// `distance * norm`.
    pub normalized: Rational,
}

/// One row per nonzero `gamma` with `diag_norm(gamma) <= bound`, in
/// enumeration order.
pub fn approximation_spectrum(x: &SolenoidPoint, bound: &Rational, cfg: &PrimeConfig) -> Result<Vec<SpectrumRow>> {
    x.check(cfg)?;
    enumerate_s_elements(cfg, bound)
        .into_iter()
        .map(|g| {
            let g = g.into_inner();
            let norm = norm_of(&g, cfg);
            let (distance, beta) = min_diagonal_distance(&x.scale(&g), cfg)?;
            Ok(SpectrumRow {
                normalized: &distance * &norm,
                gamma: g,
                beta: beta.into_inner(),
                norm,
                distance,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimBound {
    /// `1 / (2 (p_1...p_k)^2 beta^(k+1))`, a lower bound on the packing count.
    pub n_bound: Rational,
    /// `log(n_bound) / |log(alpha beta)|`.
    pub value: f64,
}

fn ln_int(n: &BigInt) -> f64 {
    let bits = n.bits();
    let shift = bits.saturating_sub(64);
    let top = (n >> shift).to_f64().expect("fits in 64 bits");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of a positive rational.
pub fn ln_rational(q: &Rational) -> f64 {
    assert!(q.is_positive());
    ln_int(q.numer()) - ln_int(q.denom())
}

pub fn dim_lower_bound(alpha: &Rational, beta: &Rational, cfg: &PrimeConfig) -> Result<DimBound> {
    if !alpha.is_positive() || alpha >= &Rational::one() {
        return Err(Error::parameter("alpha", "must lie in (0, 1)"));
    }
    if !beta.is_positive() || beta >= &Rational::new(1.into(), 2.into()) {
        return Err(Error::parameter("beta", "must lie in (0, 1/2)"));
    }
    let prod = Rational::from_integer(cfg.product());
    let n_bound = (int(2) * &prod * &prod * num_traits::pow(beta.clone(), cfg.k() + 1)).recip();
    let value = ln_rational(&n_bound) / ln_rational(&(alpha * beta)).abs();
    Ok(DimBound { n_bound, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    fn p23() -> PrimeConfig {
        PrimeConfig::new([2, 3]).unwrap()
    }

    #[test]
    fn diagonal_centre_is_hit() {
        let c = p23();
        let b = Ball::new(SolenoidPoint::diagonal(&rat(1, 3), &c), rat(1, 100)).unwrap();
        let cert = certify_bad_on_ball(&b, &rat(1, 1000), &int(3), &c).unwrap();
        assert!(!cert.verdict);
        let w = cert.witnesses.iter().find(|w| w.gamma == int(3)).unwrap();
        assert_eq!((w.beta.clone(), w.distance.clone()), (int(1), int(0)));
        let vac = certify_bad_on_ball(&b, &rat(1, 1000), &rat(1, 2), &c).unwrap();
        assert!(vac.verdict && vac.scanned == 0);
    }

    #[test]
    fn sieve_and_exhaustive_agree() {
        let c = p23();
        let pts = [
            SolenoidPoint::new(rat(1, 7), vec![rat(1, 5), rat(2, 7)]),
            SolenoidPoint::new(rat(355, 113), vec![int(17), rat(1, 11)]),
            SolenoidPoint::diagonal(&rat(2, 9), &c),
        ];
        for x in pts {
            for (r, d) in [(rat(1, 1000), rat(1, 50)), (rat(1, 100_000), rat(1, 36000)), (rat(1, 20), rat(1, 5))] {
                let b = Subject::Ball(Ball::new(x.clone(), r).unwrap());
                for range in [GammaRange::NormAtMost(int(9)), GammaRange::NormSquaredBelow(int(18))] {
                    let fast = certify(b.clone(), &d, range.clone(), &c).unwrap();
                    let slow = certify_exhaustive(b.clone(), &d, range, &c).unwrap();
                    assert_eq!((fast.verdict, fast.failures, &fast.witnesses), (slow.verdict, slow.failures, &slow.witnesses));
                }
            }
        }
    }

    #[test]
    fn dirichlet_examples() {
        let c = p23();
        let hit = dirichlet_search(&SolenoidPoint::diagonal(&rat(1, 7), &c), 7, &c).unwrap();
        assert!(hit.distance <= rat(3, 7));
        let x = SolenoidPoint::new(rat(3, 7), vec![rat(1, 7), rat(1, 7)]);
        let hit = dirichlet_search(&x, 10, &c).unwrap();
        assert_eq!(hit.bound, rat(3, 10));
        assert!(hit.distance <= rat(3, 10));
        let (d, _) = min_diagonal_distance(&x.scale(hit.gamma.value()), &c).unwrap();
        assert_eq!(d, hit.distance);
        // no smaller norm works
        for g in enumerate_s_elements(&c, &int(10)) {
            let n = norm_of(g.value(), &c);
            if n < norm_of(hit.gamma.value(), &c) {
                assert!(min_diagonal_distance(&x.scale(g.value()), &c).unwrap().0 > rat(3, 10));
            }
        }
    }

    #[test]
    fn dirichlet_matches_enumeration_order() {
        let c = p23();
        let pts = [
            SolenoidPoint::new(rat(3, 7), vec![rat(1, 7), rat(1, 7)]),
            SolenoidPoint::new(rat(5, 13), vec![rat(2, 11), rat(-7, 5)]),
            SolenoidPoint::new(rat(99, 101), vec![int(17), rat(1, 25)]),
        ];
        for x in pts {
            for n in [1u64, 3, 7, 12, 20] {
                let bound = rat(3, n as i64);
                let first = enumerate_s_elements(&c, &int(n as i64))
                    .into_iter()
                    .map(|g| g.into_inner())
                    .filter(|g| g.is_positive())
                    .find(|g| min_diagonal_distance(&x.scale(g), &c).unwrap().0 <= bound)
                    .unwrap();
                assert_eq!(dirichlet_search(&x, n, &c).unwrap().gamma.value(), &first);
            }
        }
    }

    #[test]
    fn spectrum_rows() {
        let c = p23();
        let rows = approximation_spectrum(&SolenoidPoint::zero(&c), &int(6), &c).unwrap();
        assert_eq!(rows.len(), enumerate_s_elements(&c, &int(6)).len());
        assert!(rows.iter().all(|r| r.normalized.is_zero()));
    }

    #[test]
    fn dimension_bound_values() {
        let c = p23();
        let d = dim_lower_bound(&rat(1, 9), &rat(1, 10), &c).unwrap();
        assert_eq!(d.n_bound, rat(1000, 72));
        assert!((d.value - 0.5847).abs() < 5e-5, "{}", d.value);
        let tiny = Rational::new(1.into(), BigInt::from(10u8).pow(20));
        let d = dim_lower_bound(&rat(1, 9), &tiny, &c).unwrap();
        assert!((d.value - 2.7748).abs() < 5e-4 && 3.0 - d.value < 0.35, "{}", d.value);
        assert!(dim_lower_bound(&rat(1, 9), &rat(1, 2), &c).is_err());
        assert!((ln_rational(&Rational::from_integer(BigInt::from(10u8).pow(40))) - 40.0 * 10f64.ln()).abs() < 1e-12);
    }
}
