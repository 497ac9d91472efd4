//! Alice's winning strategy for the badly approximable set.
//!
//! The game is cut into blocks of `t` Alice moves. Block `n` opens on a Bob
//! ball; Alice looks for the (at most one) fraction `b/g` with
//! `R^(n-1) <= |g| < R^n` whose neighbourhood `|g x - b| < delta/|g|` meets
//! that ball and steers her balls out of it: through the Archimedean
//! component when `|g| = |g|_inf`, otherwise through the p-adic component
//! attaining the norm.
//!
//! Block `n` opens on `B_{s + (n-1)t}`, where `s` is the number of preamble
//! plies needed before Bob's radius drops to `alpha*beta*c/8`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::{abs_p, format_rational, least_exp_le, least_exp_lt, norm_of, PrimeConfig, Rational, SElement};
use crate::arith::{congruence_solve, int};
use crate::error::{Error, Result};
use crate::game::{continue_game, Annotation, GameAbort, GameParams, Play, Strategy, Transcript};
use crate::scan::sieve;
use crate::solenoid::{padic_subball_representatives, Ball, SolenoidPoint};
use crate::verify::{certify, Certificate, GammaRange, Subject};

/// The constants the strategy is built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyParams {
    pub alpha: Rational,
    pub beta: Rational,
    pub c: Rational,
    pub delta: Rational,
    pub t: u64,
    /// `R^2 = (alpha beta)^(-t)`.
    pub rsq: Rational,
    pub rho0: Rational,
    /// Bob balls played concentrically before block 1 opens.
    pub preamble: u64,
}

impl StrategyParams {
    pub fn compute(beta: &Rational, rho0: &Rational, cfg: &PrimeConfig) -> Result<Self> {
        if !beta.is_positive() || beta >= &Rational::one() {
            return Err(Error::parameter("beta", "must lie in (0, 1)"));
        }
        if !rho0.is_positive() {
            return Err(Error::parameter("rho0", "must be positive"));
        }
        let p = int(cfg.max_prime() as i64);
        let alpha = (&p * &p).recip();
        let ab = &alpha * beta;
        let two = int(2);
        let c = Rational::one() + &ab - &two * &alpha;
        if !c.is_positive() || c >= Rational::one() {
            return Err(Error::Invariant(format!("c = {} outside (0, 1)", format_rational(&c))));
        }
        let half_c = &c / &two;
        let mut t = 1u64;
        let mut pw = ab.clone();
        while pw >= half_c {
            pw *= &ab;
            t += 1;
        }
        if pw < &ab * &half_c {
            return Err(Error::Invariant("no admissible block length".into()));
        }
        let rsq = pw.recip();
        let tail = &alpha * &alpha * beta * beta * &c / int(8);
        let delta = alpha.clone().min(half_c.clone()) * rho0.clone().min(tail.clone());
        if delta > &half_c * rho0.clone().min(tail) {
            return Err(Error::Invariant("delta exceeds (c/2) min(rho0, a^2 b^2 c / 8)".into()));
        }
        let threshold = &ab * &c / int(8);
        let mut preamble = 0u64;
        let mut r = rho0.clone();
        while r > threshold {
            r *= &ab;
            preamble += 1;
        }
        Ok(StrategyParams {
            alpha,
            beta: beta.clone(),
            c,
            delta,
            t,
            rsq,
            rho0: rho0.clone(),
            preamble,
        })
    }

    pub fn alpha_beta(&self) -> Rational {
        &self.alpha * &self.beta
    }

    /// `alpha beta c / 8`; play is concentric while Bob's radius exceeds it.
    pub fn preamble_threshold(&self) -> Rational {
        self.alpha_beta() * &self.c / int(8)
    }

    /// Radius of Bob's ball `B_j`.
    pub fn bob_radius(&self, j: u64) -> Rational {
        &self.rho0 * num_traits::pow(self.alpha_beta(), j as usize)
    }

    /// Index of the Bob ball that opens block `n >= 1`.
    pub fn block_opening_index(&self, n: u64) -> u64 {
        self.preamble + (n - 1) * self.t
    }

    /// Index of the Bob ball certified after block `n`.
    pub fn certificate_index(&self, n: u64) -> u64 {
        self.preamble + n * self.t + 1
    }

    pub fn rsq_pow(&self, n: u64) -> Rational {
        num_traits::pow(self.rsq.clone(), n as usize)
    }

    /// Transcript length that reaches the certified ball of block `blocks`.
    pub fn plies_for_blocks(&self, blocks: u64) -> usize {
        2 * self.certificate_index(blocks) as usize + 1
    }

    pub fn game_params(&self, cfg: &PrimeConfig) -> Result<GameParams> {
        GameParams::new(self.alpha.clone(), self.beta.clone(), cfg.clone())
    }
}

/// `delta / R^(2(n-1)) <= alpha * rho` for the ball opening block `n`.
pub fn block_invariant_radius_check(params: &StrategyParams, n: u64) -> bool {
    block_radius_check_at(params, n, 0)
}

/// The same inequality against `B_{open(n) + offset}`.
pub fn block_radius_check_at(params: &StrategyParams, n: u64, offset: u64) -> bool {
    assert!(n >= 1, "blocks are numbered from 1");
    let lhs = &params.delta / params.rsq_pow(n - 1);
    let rhs = &params.alpha * params.bob_radius(params.block_opening_index(n) + offset);
    lhs <= rhs
}

/// A dangerous fraction `beta/gamma` in canonical form: `gamma` is the
/// least positive integer coprime to the primes with `beta` in `S`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DangerPair {
    pub beta_num: SElement,
    pub gamma: SElement,
}

impl DangerPair {
    pub fn from_ratio(r: &Rational, cfg: &PrimeConfig) -> Self {
        let mut free = r.denom().clone();
        for &p in cfg.primes() {
            let pb = BigInt::from(p);
            while (&free % &pb).is_zero() {
                free /= &pb;
            }
        }
        let g = Rational::from_integer(free);
        DangerPair {
            beta_num: SElement::new_unchecked(r * &g),
            gamma: SElement::new_unchecked(g),
        }
    }

    pub fn ratio(&self) -> Rational {
        self.beta_num.value() / self.gamma.value()
    }
}

/// Which component the norm of `gamma` is attained in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DangerCase {
    Archimedean,
    /// Index into the configured primes.
    Padic(usize),
}

/// One `(beta, gamma)` whose region meets the block-opening ball.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DangerWitness {
    pub beta_num: Rational,
    pub gamma: Rational,
    pub norm: Rational,
    pub case: DangerCase,
}

impl DangerWitness {
    /// Radius of the region `|x_v - beta/gamma|_v < delta / (|gamma|_v |gamma|)`
    /// in component `v` (`None` for the Archimedean one).
    fn region_radius(&self, delta: &Rational, component: Option<(usize, u64)>) -> Rational {
        let gv = match component {
            None => self.gamma.abs(),
            Some((_, p)) => abs_p(&self.gamma, p),
        };
        delta / (gv * &self.norm)
    }

    fn ratio(&self) -> Rational {
        &self.beta_num / &self.gamma
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DangerScan {
    pub pair: Option<DangerPair>,
    pub witnesses: Vec<DangerWitness>,
    pub scanned: u64,
    pub candidates: usize,
}

fn sqrt_bounds(q: &Rational) -> (Rational, Rational) {
    let nd = q.numer() * q.denom();
    let r = nd.sqrt();
    let d = q.denom().clone();
    let lo = Rational::new(r.clone(), d.clone());
    let hi = if &r * &r == nd { lo.clone() } else { Rational::new(r + 1, d) };
    (lo, hi)
}

/// Every `beta` in `S` with `|g x - beta| < delta/N` for some `x` in
/// `ball`, where `N = diag_norm(g)`.
fn region_hits(g: &Rational, norm: &Rational, ball: &Ball, delta: &Rational, cfg: &PrimeConfig) -> Result<Vec<Rational>> {
    let y = ball.center.scale(g);
    let s = delta / norm;
    let targets: Vec<(Rational, i64)> = y
        .padic
        .iter()
        .zip(cfg.primes())
        .map(|(yi, &p)| {
            // |g x_p - b|_p over the ball: reachable iff the centre gap is at
            // most |g|_p rho, or already below s.
            let by_ball = least_exp_le(p, &(abs_p(g, p) * &ball.radius));
            let by_region = least_exp_lt(p, &s);
            (yi.clone(), by_ball.min(by_region))
        })
        .collect();
    let sol = congruence_solve(&targets, cfg)?;
    let w = g.abs() * &ball.radius + &s;
    let base = sol.base.value();
    let m = &sol.modulus;
    let n_lo = ((&y.arch - &w - base) / m).floor() + Rational::one();
    let n_hi = ((&y.arch + &w - base) / m).ceil() - Rational::one();
    let mut out = Vec::new();
    let mut n = n_lo;
    while n <= n_hi {
        out.push(base + m * &n);
        if out.len() > 64 {
            return Err(Error::Invariant("region meets too many lattice fractions".into()));
        }
        n += Rational::one();
    }
    Ok(out)
}

fn classify(g: &Rational, norm: &Rational, cfg: &PrimeConfig) -> DangerCase {
    if &g.abs() == norm {
        return DangerCase::Archimedean;
    }
    let i = cfg
        .primes()
        .iter()
        .position(|&p| &abs_p(g, p) == norm)
        .expect("the norm is attained in some component");
    DangerCase::Padic(i)
}

/// All dangerous pairs for block `n` on `ball`, with the uniqueness check.
pub fn danger_scan(ball: &Ball, n: u64, params: &StrategyParams, cfg: &PrimeConfig) -> Result<DangerScan> {
    if n == 0 {
        return Err(Error::parameter("n", "blocks are numbered from 1"));
    }
    ball.center.check(cfg)?;
    let lo_sq = params.rsq_pow(n - 1);
    let hi_sq = params.rsq_pow(n);
    let (lo, _) = sqrt_bounds(&lo_sq);
    let (_, hi) = sqrt_bounds(&hi_sq);
    let lo = lo.max(Rational::one());
    let t_max = &params.delta / &lo + &hi * &ball.radius;
    let sv = sieve(&ball.center, &hi, &t_max, cfg)?;

    let mut witnesses = Vec::new();
    for g in &sv.candidates {
        let norm = norm_of(g, cfg);
        let nsq = &norm * &norm;
        if nsq < lo_sq || nsq >= hi_sq {
            continue;
        }
        for b in region_hits(g, &norm, ball, &params.delta, cfg)? {
            witnesses.push(DangerWitness {
                beta_num: b,
                gamma: g.clone(),
                norm: norm.clone(),
                case: classify(g, &norm, cfg),
            });
        }
    }
    let pair = match witnesses.first() {
        None => None,
        Some(w0) => {
            let r = w0.ratio();
            if let Some(other) = witnesses.iter().find(|w| w.ratio() != r) {
                return Err(Error::Invariant(format!(
                    "two dangerous fractions in block {n}: {} and {}",
                    format_rational(&r),
                    format_rational(&other.ratio())
                )));
            }
            Some(DangerPair::from_ratio(&r, cfg))
        }
    };
    Ok(DangerScan {
        pair,
        witnesses,
        scanned: sv.scanned,
        candidates: sv.candidates.len(),
    })
}

pub fn find_danger_pair(ball: &Ball, n: u64, params: &StrategyParams, cfg: &PrimeConfig) -> Result<Option<DangerPair>> {
    Ok(danger_scan(ball, n, params, cfg)?.pair)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// What happened in one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockLog {
    pub block: u64,
    pub opening_index: u64,
    pub scan: DangerScan,
    pub side: Option<Side>,
    pub padic_escapes: Vec<u64>,
}

/// Per-game state of the strategy.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AliceState {
    pub block: u64,
    pub ell: u64,
    pub pair: Option<DangerPair>,
    pub side: Option<Side>,
    pub in_preamble: bool,
    witnesses: Vec<DangerWitness>,
}

/// Alice's strategy; see the module docs.
#[derive(Clone, Debug)]
pub struct WinningStrategy {
    params: StrategyParams,
    cfg: PrimeConfig,
    state: AliceState,
    log: Vec<BlockLog>,
    horizon: Option<u64>,
}

impl WinningStrategy {
    pub fn new(params: StrategyParams, cfg: PrimeConfig) -> Self {
        WinningStrategy {
            params,
            cfg,
            state: AliceState::default(),
            log: Vec::new(),
            horizon: None,
        }
    }

    /// Plays concentrically once block `blocks` is over. Moves past the
    /// last block that will be certified need no scan.
    pub fn with_horizon(mut self, blocks: u64) -> Self {
        self.horizon = Some(blocks);
        self
    }

    pub fn params(&self) -> &StrategyParams {
        &self.params
    }

    pub fn state(&self) -> &AliceState {
        &self.state
    }

    pub fn blocks(&self) -> &[BlockLog] {
        &self.log
    }

    fn fault(&self, reason: impl Into<String>) -> Error {
        Error::Invariant(reason.into())
    }

    /// True iff Alice's ball `B(a, radius)` misses the region of `w`.
    fn avoids(&self, a: &SolenoidPoint, radius: &Rational, w: &DangerWitness) -> bool {
        let r = w.ratio();
        let delta = &self.params.delta;
        let s = w.region_radius(delta, None);
        if (&a.arch - &r).abs() >= s + radius {
            return true;
        }
        self.cfg.primes().iter().enumerate().any(|(i, &p)| {
            let s = w.region_radius(delta, Some((i, p)));
            let gap = abs_p(&(&a.padic[i] - &r), p);
            &gap > radius && gap >= s
        })
    }

    fn open_block(&mut self, bob: &Ball, radius: &Rational, n: u64, index: u64) -> Result<Play> {
        if !block_invariant_radius_check(&self.params, n) {
            return Err(self.fault(format!("radius chain fails at block {n}")));
        }
        let scan = danger_scan(bob, n, &self.params, &self.cfg)?;
        let rho = &bob.radius;
        let mut center = bob.center.clone();
        let mut side = None;
        let mut escapes = Vec::new();
        let mut labels = Vec::new();

        if let Some(pair) = &scan.pair {
            let r = pair.ratio();
            if scan.witnesses.iter().any(|w| w.case == DangerCase::Archimedean) {
                let s = if r <= bob.center.arch { Side::Right } else { Side::Left };
                let push = (Rational::one() - &self.params.alpha) * rho;
                center.arch = match s {
                    Side::Right => &bob.center.arch + push,
                    Side::Left => &bob.center.arch - push,
                };
                side = Some(s);
                labels.push(format!("archimedean:{s}"));
            }
            for (i, &p) in self.cfg.primes().iter().enumerate() {
                let ws: Vec<&DangerWitness> =
                    scan.witnesses.iter().filter(|w| w.case == DangerCase::Padic(i)).collect();
                if ws.is_empty() {
                    continue;
                }
                let pr = int(p as i64);
                let reps = padic_subball_representatives(&bob.center.padic[i], &(rho / &pr), p)?;
                let chosen = reps.into_iter().find(|a| {
                    let gap = abs_p(&(a - &r), p);
                    ws.iter()
                        .all(|w| &gap > radius && gap >= w.region_radius(&self.params.delta, Some((i, p))))
                });
                let a = chosen.ok_or_else(|| self.fault(format!("no {p}-adic sub-ball avoids the region")))?;
                if radius + abs_p(&(&a - &bob.center.padic[i]), p) > *rho {
                    return Err(self.fault("p-adic escape breaks the move rule"));
                }
                center.padic[i] = a;
                escapes.push(p);
                labels.push(format!("padic:{p}"));
            }
            if let Some(w) = scan.witnesses.iter().find(|w| !self.avoids(&center, radius, w)) {
                return Err(self.fault(format!(
                    "region of {}/{} not avoided at A_{index}",
                    format_rational(&w.beta_num),
                    format_rational(&w.gamma)
                )));
            }
        }
        let case = if labels.is_empty() { "none".to_string() } else { labels.join("+") };
        let annotation = Annotation {
            ply: 0,
            block: Some(n),
            case,
            pair: scan
                .pair
                .as_ref()
                .map(|p| (format_rational(p.beta_num.value()), format_rational(p.gamma.value()))),
        };
        self.state.pair = scan.pair.clone();
        self.state.side = side;
        self.state.witnesses = scan.witnesses.clone();
        self.log.push(BlockLog {
            block: n,
            opening_index: index,
            scan,
            side,
            padic_escapes: escapes,
        });
        Ok(Play {
            center,
            annotation: Some(annotation),
        })
    }

    fn continue_block(&mut self, bob: &Ball, radius: &Rational, n: u64) -> Result<Play> {
        // The regions avoided at the block start must stay clear of Bob's ball.
        if let Some(w) = self.state.witnesses.iter().find(|w| !self.avoids(&bob.center, &bob.radius, w)) {
            if w.case != DangerCase::Archimedean {
                return Err(self.fault("p-adic escape did not persist through the block"));
            }
        }
        let mut center = bob.center.clone();
        let case = match self.state.side {
            Some(s) => {
                let push = &bob.radius - radius;
                center.arch = match s {
                    Side::Right => &bob.center.arch + push,
                    Side::Left => &bob.center.arch - push,
                };
                format!("archimedean:{s}")
            }
            None => "free".to_string(),
        };
        Ok(Play {
            center,
            annotation: Some(Annotation {
                ply: 0,
                block: Some(n),
                case,
                pair: None,
            }),
        })
    }
}

impl Strategy for WinningStrategy {
    fn name(&self) -> String {
        "winning".into()
    }

    fn play(&mut self, t: &Transcript, radius: &Rational) -> Result<Play> {
        let bob = t.last().clone();
        let j = bob.index;
        if j < self.params.preamble {
            self.state.in_preamble = true;
            return Ok(Play {
                center: bob.ball.center.clone(),
                annotation: Some(Annotation {
                    ply: 0,
                    block: None,
                    case: "preamble".into(),
                    pair: None,
                }),
            });
        }
        self.state.in_preamble = false;
        let rel = j - self.params.preamble;
        let n = rel / self.params.t + 1;
        let ell = rel % self.params.t + 1;
        self.state.block = n;
        self.state.ell = ell;
        if self.horizon.is_some_and(|h| n > h) {
            return Ok(Play {
                center: bob.ball.center.clone(),
                annotation: Some(Annotation {
                    ply: 0,
                    block: Some(n),
                    case: "beyond-horizon".into(),
                    pair: None,
                }),
            });
        }
        if ell == 1 {
            self.open_block(&bob.ball, radius, n, j)
        } else {
            self.continue_block(&bob.ball, radius, n)
        }
    }
}

/// Outcome of a strategy-vs-Bob game.
#[derive(Debug)]
pub struct Simulation {
    pub params: StrategyParams,
    pub transcript: Transcript,
    pub blocks: Vec<BlockLog>,
}

/// Plays `blocks` blocks of the winning strategy against `bob`, starting
/// from the ball of radius `rho0` around `center`.
pub fn simulate(
    cfg: &PrimeConfig,
    beta: &Rational,
    rho0: &Rational,
    center: SolenoidPoint,
    bob: &mut dyn Strategy,
    blocks: u64,
) -> std::result::Result<Simulation, GameAbort> {
    let params = StrategyParams::compute(beta, rho0, cfg).map_err(GameAbort::Setup)?;
    let game = params.game_params(cfg).map_err(GameAbort::Setup)?;
    let b0 = Ball::new(center, rho0.clone()).map_err(GameAbort::Setup)?;
    let mut alice = WinningStrategy::new(params.clone(), cfg.clone()).with_horizon(blocks);
    let mut t = Transcript::new(game, b0).map_err(GameAbort::Setup)?;
    continue_game(&mut t, &mut alice, bob, params.plies_for_blocks(blocks))?;
    Ok(Simulation {
        params,
        transcript: t,
        blocks: alice.log,
    })
}

/// Certificate for the ball closing each block: `delta` against every
/// `gamma` with `|gamma|^2 < R^(2n)`.
pub fn certify_blocks(sim: &Simulation, blocks: u64) -> Result<Vec<Certificate>> {
    let cfg = &sim.transcript.params.config;
    (1..=blocks)
        .map(|n| {
            let j = sim.params.certificate_index(n);
            let ball = sim
                .transcript
                .bob_ball(j)
                .ok_or_else(|| Error::Invariant(format!("transcript stops before B_{j}")))?;
            certify(
                Subject::Ball(ball.clone()),
                &sim.params.delta,
                GammaRange::NormSquaredBelow(sim.params.rsq_pow(n)),
                cfg,
            )
        })
        .collect()
}
