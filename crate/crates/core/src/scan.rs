//! Fast exact sieve over the multipliers `g` of a bounded norm.
//!
//! Both the dangerous-pair search and ball certification ask, for every
//! `g` in `S` with `diag_norm(g) <= hi`, whether some `b` in `S` brings
//! `g * c` within `T` of `diag(b)` in every component. The number of such
//! `g` grows like `hi^(k+1)`, so testing them one at a time with rational
//! arithmetic is too slow. The sieve uses a necessary condition that
//! reduces to one modular addition per `g`:
//!
//! Write `g = a / D` with `D = prod p_i^{E_i}` and pick `xi` in `S` agreeing
//! with `c_{p_i}` to precision `m_i + E_i`, where `p_i^(-m_i) < T_max`.
//! If `|g c_v - b|_v < T_max` for all `v`, then `b` lies in `g xi + G Z`
//! with `G = prod p_i^{m_i}`, so `a (c_inf - xi) / D` is within `T_max` of
//! `G Z`. Multipliers that fail this are certainly safe; the survivors are
//! handed back for an exact check.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{congruence_solve, least_exp_lt, pow_p, s_denominator, PrimeConfig, Rational};
use crate::error::{Error, Result};
use crate::solenoid::SolenoidPoint;

/// Outcome of a sieve pass.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sieve {
    /// Positive multipliers that may approach closer than `T_max`.
    pub candidates: Vec<Rational>,
    /// Number of positive multipliers examined.
    pub scanned: u64,
}

/// Runs the sieve over positive `g = a/D` with `diag_norm(g) <= hi`.
///
/// Every positive `g` with `diag_norm(g) <= hi` for which some `b` in `S`
/// satisfies `|g c_v - b|_v < t_max` for all components `v` is returned.
/// Negative multipliers behave identically to their negation.
pub fn sieve(center: &SolenoidPoint, hi: &Rational, t_max: &Rational, cfg: &PrimeConfig) -> Result<Sieve> {
    center.check(cfg)?;
    if !t_max.is_positive() {
        return Err(Error::parameter("t_max", "must be positive"));
    }
    if hi < &Rational::one() {
        return Ok(Sieve::default());
    }
    let (d, exps) = s_denominator(cfg, hi);
    let amax = (hi * Rational::from_integer(d.clone())).floor().to_integer();
    let scanned = amax.to_u64().unwrap_or(u64::MAX);
    let all = |amax: &BigInt| -> Vec<Rational> {
        let mut v = Vec::new();
        let mut a = BigInt::one();
        while &a <= amax {
            v.push(Rational::new(a.clone(), d.clone()));
            a += 1;
        }
        v
    };

    let levels: Vec<i64> = cfg.primes().iter().map(|&p| least_exp_lt(p, t_max)).collect();
    if levels.iter().any(|&m| m < 0) {
        return Ok(Sieve {
            candidates: all(&amax),
            scanned,
        });
    }
    let targets: Vec<(Rational, i64)> = center
        .padic
        .iter()
        .zip(levels.iter().zip(&exps))
        .map(|(c, (&m, &e))| (c.clone(), m + e as i64))
        .collect();
    let xi = congruence_solve(&targets, cfg)?.base.into_inner();
    let theta = (&center.arch - xi) / Rational::from_integer(d.clone());
    let g: BigInt = cfg
        .primes()
        .iter()
        .zip(&levels)
        .map(|(&p, &m)| pow_p(p, m).to_integer())
        .product();
    let modulus = &g * theta.denom();
    let step = theta.numer().mod_floor(&modulus);
    let window: BigInt = (t_max * Rational::from_integer(theta.denom().clone())).ceil().to_integer() - 1;
    if &window * 2 + 1 >= modulus {
        return Ok(Sieve {
            candidates: all(&amax),
            scanned,
        });
    }

    let mut hits: Vec<BigInt> = Vec::new();
    let fast = (
        modulus.to_u128().filter(|&m| m < (1u128 << 126)),
        amax.to_u64(),
        step.to_u128(),
        window.to_u128(),
    );
    if let (Some(m), Some(amax), Some(step), Some(window)) = fast {
        let upper = m - window;
        let mut r: u128 = 0;
        for a in 1..=amax {
            r += step;
            if r >= m {
                r -= m;
            }
            if r <= window || r >= upper {
                hits.push(BigInt::from(a));
            }
        }
    } else {
        let upper = &modulus - &window;
        let mut r = BigInt::zero();
        let mut a = BigInt::one();
        while a <= amax {
            r += &step;
            if r >= modulus {
                r -= &modulus;
            }
            if r <= window || r >= upper {
                hits.push(a.clone());
            }
            a += 1;
        }
    }
    Ok(Sieve {
        candidates: hits.into_iter().map(|a| Rational::new(a, d.clone())).collect(),
        scanned,
    })
}
