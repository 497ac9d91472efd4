//! Referee and runner for Schmidt's (alpha, beta)-game on `Q_P`.
//!
//! Bob opens with any ball `B_0 = B(b_0, rho_0)`. Afterwards the radii are
//! forced: Alice's `A_n` has radius `alpha * rho_n` and Bob's `B_{n+1}` has
//! radius `beta * alpha * rho_n`. Each new ball must precede the previous one.

use std::fmt;

use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{abs_p, format_rational, pow_p, PrimeConfig, Rational};
use crate::error::{Error, Result};
use crate::solenoid::{effective_padic_radius, precedes, sup_dist, Ball, BallRecord, SolenoidPoint};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameParams {
    pub alpha: Rational,
    pub beta: Rational,
    pub config: PrimeConfig,
}

impl GameParams {
    pub fn new(alpha: Rational, beta: Rational, config: PrimeConfig) -> Result<Self> {
        let unit = |q: &Rational| q.is_positive() && q < &Rational::one();
        if !unit(&alpha) {
            return Err(Error::parameter("alpha", "must lie in (0, 1)"));
        }
        if !unit(&beta) {
            return Err(Error::parameter("beta", "must lie in (0, 1)"));
        }
        Ok(GameParams { alpha, beta, config })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Bob,
    Alice,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Bob => f.write_str("bob"),
            Role::Alice => f.write_str("alice"),
        }
    }
}

/// One ball of the game: `B_index` for Bob, `A_index` for Alice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Move {
    pub role: Role,
    pub index: u64,
    pub ball: Ball,
}

/// Diagnostics a strategy attaches to one of its moves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub ply: usize,
    pub block: Option<u64>,
    pub case: String,
    /// `(beta, gamma)` of the dangerous pair, when one was found.
    pub pair: Option<(String, String)>,
}

/// Full record of a game, starting with Bob's opening ball.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub params: GameParams,
    pub rho0: Rational,
    pub moves: Vec<Move>,
    pub annotations: Vec<Annotation>,
}

/// Which clause of the move rules was broken.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Clause (i): wrong player or index.
    OutOfTurn { expected: (Role, u64), got: (Role, u64) },
    /// Clause (ii): radius differs from the forced schedule.
    Radius { expected: Rational, got: Rational },
    /// Clause (iii): the new ball does not precede the previous one.
    NotPreceding { slack: Rational, distance: Rational },
    /// Component count differs from the configuration.
    Shape { expected: usize, got: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfTurn { expected, got } => write!(
                f,
                "clause (i): expected {} move {}, got {} move {}",
                expected.0, expected.1, got.0, got.1
            ),
            Violation::Radius { expected, got } => write!(
                f,
                "clause (ii): radius {} differs from scheduled {}",
                format_rational(got),
                format_rational(expected)
            ),
            Violation::NotPreceding { slack, distance } => write!(
                f,
                "clause (iii): center distance {} exceeds allowed {}",
                format_rational(distance),
                format_rational(slack)
            ),
            Violation::Shape { expected, got } => {
                write!(f, "point has {got} p-adic components, expected {expected}")
            }
        }
    }
}

impl Transcript {
    /// A transcript holding only Bob's opening ball.
    pub fn new(params: GameParams, b0: Ball) -> Result<Self> {
        b0.center.check(&params.config)?;
        Ok(Transcript {
            rho0: b0.radius.clone(),
            params,
            moves: vec![Move {
                role: Role::Bob,
                index: 0,
                ball: b0,
            }],
            annotations: Vec::new(),
        })
    }

    pub fn last(&self) -> &Move {
        self.moves.last().expect("transcript always holds B_0")
    }

    /// Role and index of the next move.
    pub fn next_turn(&self) -> (Role, u64) {
        let last = self.last();
        match last.role {
            Role::Bob => (Role::Alice, last.index),
            Role::Alice => (Role::Bob, last.index + 1),
        }
    }

    /// Radius the next move must have.
    pub fn next_radius(&self) -> Rational {
        let last = self.last();
        match last.role {
            Role::Bob => &self.params.alpha * &last.ball.radius,
            Role::Alice => &self.params.beta * &last.ball.radius,
        }
    }

    /// Bob's ball `B_n`, if played.
    pub fn bob_ball(&self, n: u64) -> Option<&Ball> {
        self.moves.get(2 * n as usize).map(|m| &m.ball)
    }

    pub fn alice_ball(&self, n: u64) -> Option<&Ball> {
        self.moves.get(2 * n as usize + 1).map(|m| &m.ball)
    }

    fn push_unchecked(&mut self, mv: Move) {
        self.moves.push(mv);
    }
}

/// Checks a proposed next move against the three rules.
pub fn legal_move(t: &Transcript, proposed: &Move) -> std::result::Result<(), Violation> {
    let expected = t.next_turn();
    if (proposed.role, proposed.index) != expected {
        return Err(Violation::OutOfTurn {
            expected,
            got: (proposed.role, proposed.index),
        });
    }
    let k = t.params.config.k();
    if proposed.ball.center.padic.len() != k {
        return Err(Violation::Shape {
            expected: k,
            got: proposed.ball.center.padic.len(),
        });
    }
    let radius = t.next_radius();
    if proposed.ball.radius != radius {
        return Err(Violation::Radius {
            expected: radius,
            got: proposed.ball.radius.clone(),
        });
    }
    let prev = &t.last().ball;
    if !precedes(
        &proposed.ball.center,
        &proposed.ball.radius,
        &prev.center,
        &prev.radius,
        &t.params.config,
    ) {
        let distance = sup_dist(&proposed.ball.center, &prev.center, &t.params.config)
            .expect("shapes checked above");
        return Err(Violation::NotPreceding {
            slack: &prev.radius - &proposed.ball.radius,
            distance,
        });
    }
    Ok(())
}

/// A strategy's answer for one move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Play {
    pub center: SolenoidPoint,
    pub annotation: Option<Annotation>,
}

impl Play {
    pub fn plain(center: SolenoidPoint) -> Self {
        Play {
            center,
            annotation: None,
        }
    }
}

/// A player: given the transcript and the radius its ball must have,
/// proposes a center. The referee validates every proposal.
pub trait Strategy {
    fn name(&self) -> String;
    fn play(&mut self, transcript: &Transcript, radius: &Rational) -> Result<Play>;
}

/// Why a game stopped early.
#[derive(Debug)]
pub enum GameAbort {
    /// The opening ball did not match the configuration.
    Setup(Error),
    Illegal {
        transcript: Box<Transcript>,
        proposed: Move,
        violation: Violation,
    },
    Strategy {
        transcript: Box<Transcript>,
        error: Error,
    },
}

impl fmt::Display for GameAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameAbort::Illegal { proposed, violation, .. } => {
                write!(f, "illegal {} move {}: {violation}", proposed.role, proposed.index)
            }
            GameAbort::Strategy { error, .. } | GameAbort::Setup(error) => write!(f, "{error}"),
        }
    }
}

impl std::error::Error for GameAbort {}

/// Plays until the transcript holds `plies` balls (Bob's `B_0` included).
pub fn run_game(
    alice: &mut dyn Strategy,
    bob: &mut dyn Strategy,
    plies: usize,
    b0: Ball,
    params: GameParams,
) -> std::result::Result<Transcript, GameAbort> {
    let mut t = Transcript::new(params, b0).map_err(GameAbort::Setup)?;
    continue_game(&mut t, alice, bob, plies)?;
    Ok(t)
}

/// Extends an existing transcript until it holds `plies` balls.
pub fn continue_game(
    t: &mut Transcript,
    alice: &mut dyn Strategy,
    bob: &mut dyn Strategy,
    plies: usize,
) -> std::result::Result<(), GameAbort> {
    while t.moves.len() < plies {
        let (role, index) = t.next_turn();
        let radius = t.next_radius();
        let player: &mut dyn Strategy = match role {
            Role::Alice => &mut *alice,
            Role::Bob => &mut *bob,
        };
        let play = match player.play(t, &radius) {
            Ok(p) => p,
            Err(error) => {
                return Err(GameAbort::Strategy {
                    transcript: Box::new(t.clone()),
                    error,
                })
            }
        };
        let mv = Move {
            role,
            index,
            ball: Ball {
                center: play.center,
                radius,
            },
        };
        if let Err(violation) = legal_move(t, &mv) {
            return Err(GameAbort::Illegal {
                transcript: Box::new(t.clone()),
                proposed: mv,
                violation,
            });
        }
        if let Some(mut a) = play.annotation {
            a.ply = t.moves.len();
            t.annotations.push(a);
        }
        t.push_unchecked(mv);
    }
    Ok(())
}

/// Re-validates a transcript from scratch; returns the first bad ply.
pub fn revalidate(t: &Transcript) -> std::result::Result<(), (usize, Violation)> {
    let first = t.moves.first().ok_or((
        0,
        Violation::Shape {
            expected: t.params.config.k(),
            got: 0,
        },
    ))?;
    if first.role != Role::Bob || first.index != 0 || first.ball.radius != t.rho0 {
        return Err((
            0,
            Violation::OutOfTurn {
                expected: (Role::Bob, 0),
                got: (first.role, first.index),
            },
        ));
    }
    let mut replay = Transcript {
        params: t.params.clone(),
        rho0: t.rho0.clone(),
        moves: vec![first.clone()],
        annotations: Vec::new(),
    };
    for (i, mv) in t.moves.iter().enumerate().skip(1) {
        legal_move(&replay, mv).map_err(|v| (i, v))?;
        replay.push_unchecked(mv.clone());
    }
    Ok(())
}

/// The center and radius of the last ball. The limit point lies within that
/// radius of the returned center.
pub fn intersection_estimate(t: &Transcript) -> (SolenoidPoint, Rational) {
    let b = &t.last().ball;
    (b.center.clone(), b.radius.clone())
}

/// Largest allowed center displacement for the next move.
fn move_slack(t: &Transcript, radius: &Rational) -> Rational {
    &t.last().ball.radius - radius
}

/// Plays the previous center.
#[derive(Clone, Debug, Default)]
pub struct Concentric;

impl Strategy for Concentric {
    fn name(&self) -> String {
        "concentric".into()
    }

    fn play(&mut self, t: &Transcript, _radius: &Rational) -> Result<Play> {
        Ok(Play::plain(t.last().ball.center.clone()))
    }
}

/// Picks a uniformly random legal center on a fine grid in every component.
#[derive(Clone, Debug)]
pub struct RandomBob {
    seed: u64,
    rng: ChaCha8Rng,
}

/// Grid resolution of random Archimedean offsets.
const ARCH_STEPS: i64 = 64;

impl RandomBob {
    pub fn new(seed: u64) -> Self {
        RandomBob {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Strategy for RandomBob {
    fn name(&self) -> String {
        format!("random:{}", self.seed)
    }

    fn play(&mut self, t: &Transcript, radius: &Rational) -> Result<Play> {
        let prev = &t.last().ball.center;
        let slack = move_slack(t, radius);
        let u = self.rng.gen_range(-ARCH_STEPS..=ARCH_STEPS);
        let arch = &prev.arch + &slack * Rational::new(u.into(), ARCH_STEPS.into());
        let mut padic = Vec::with_capacity(prev.padic.len());
        for (c, &p) in prev.padic.iter().zip(t.params.config.primes()) {
            let (_, m) = effective_padic_radius(&slack, p)?;
            let step = pow_p(p, m);
            let j = self.rng.gen_range(0..p * p * p);
            padic.push(c + step * Rational::from_integer(j.into()));
        }
        Ok(Play::plain(SolenoidPoint::new(arch, padic)))
    }
}

/// Greedily steers toward `diag(target)`: each component moves as close to
/// the target as the slack allows.
#[derive(Clone, Debug)]
pub struct TargetingBob {
    target: Rational,
}

impl TargetingBob {
    pub fn new(target: Rational) -> Self {
        TargetingBob { target }
    }
}

impl Strategy for TargetingBob {
    fn name(&self) -> String {
        format!("targeting:{}", format_rational(&self.target))
    }

    fn play(&mut self, t: &Transcript, radius: &Rational) -> Result<Play> {
        let prev = &t.last().ball.center;
        let slack = move_slack(t, radius);
        let gap = &self.target - &prev.arch;
        let arch = if gap.abs() <= slack {
            self.target.clone()
        } else if gap.is_positive() {
            &prev.arch + &slack
        } else {
            &prev.arch - &slack
        };
        // In an ultrametric factor every point of the allowed ball is at the
        // same distance from an outside target, so staying put is optimal.
        let padic = prev
            .padic
            .iter()
            .zip(t.params.config.primes())
            .map(|(c, &p)| {
                if abs_p(&(&self.target - c), p) <= slack {
                    self.target.clone()
                } else {
                    c.clone()
                }
            })
            .collect();
        Ok(Play::plain(SolenoidPoint::new(arch, padic)))
    }
}

/// Plays a fixed list of centers, one per Bob move after `B_0`.
#[derive(Clone, Debug)]
pub struct ReplayBob {
    script: Vec<SolenoidPoint>,
    next: usize,
}

impl ReplayBob {
    pub fn new(script: Vec<SolenoidPoint>) -> Self {
        ReplayBob { script, next: 0 }
    }
}

impl Strategy for ReplayBob {
    fn name(&self) -> String {
        "replay".into()
    }

    fn play(&mut self, _t: &Transcript, _radius: &Rational) -> Result<Play> {
        let c = self.script.get(self.next).cloned().ok_or_else(|| Error::Strategy {
            name: self.name(),
            reason: format!("script exhausted after {} moves", self.next),
        })?;
        self.next += 1;
        Ok(Play::plain(c))
    }
}

/// Named Bob strategies, parsed from `random`, `random:<seed>`,
/// `targeting:<q>`, `concentric`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BobSpec {
    Random(Option<u64>),
    Targeting(Rational),
    Concentric,
    Replay(Vec<SolenoidPoint>),
}

impl BobSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let err = || Error::Parse {
            input: s.to_string(),
            reason: "expected random[:seed], targeting:<q> or concentric".into(),
        };
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match (name, arg) {
            ("random", None) => Ok(BobSpec::Random(None)),
            ("random", Some(a)) => a.parse().map(|v| BobSpec::Random(Some(v))).map_err(|_| err()),
            ("targeting", Some(a)) => Ok(BobSpec::Targeting(crate::arith::parse_rational(a)?)),
            ("concentric", None) => Ok(BobSpec::Concentric),
            _ => Err(err()),
        }
    }

    /// Builds the strategy; `seed` is used when no explicit seed was given.
    pub fn build(&self, seed: u64) -> Box<dyn Strategy + Send> {
        match self {
            BobSpec::Random(s) => Box::new(RandomBob::new(s.unwrap_or(seed))),
            BobSpec::Targeting(q) => Box::new(TargetingBob::new(q.clone())),
            BobSpec::Concentric => Box::new(Concentric),
            BobSpec::Replay(script) => Box::new(ReplayBob::new(script.clone())),
        }
    }
}

/// The built-in adversaries used to exercise strategies.
pub fn builtin_bobs(seed: u64, target: Rational, script: Vec<SolenoidPoint>) -> Vec<Box<dyn Strategy + Send>> {
    vec![
        Box::new(RandomBob::new(seed)),
        Box::new(TargetingBob::new(target)),
        Box::new(ReplayBob::new(script)),
    ]
}

/// Flat serializable record of one move.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub role: Role,
    pub index: u64,
    #[serde(flatten)]
    pub ball: BallRecord,
}

/// Serializable transcript; all rationals are `"num/den"` strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub primes: Vec<u64>,
    pub alpha: String,
    pub beta: String,
    pub rho0: String,
    pub moves: Vec<MoveRecord>,
    pub annotations: Vec<Annotation>,
}

impl TranscriptRecord {
    pub fn from_transcript(t: &Transcript) -> Self {
        TranscriptRecord {
            primes: t.params.config.primes().to_vec(),
            alpha: format_rational(&t.params.alpha),
            beta: format_rational(&t.params.beta),
            rho0: format_rational(&t.rho0),
            moves: t
                .moves
                .iter()
                .map(|m| MoveRecord {
                    role: m.role,
                    index: m.index,
                    ball: BallRecord::from_ball(&m.ball),
                })
                .collect(),
            annotations: t.annotations.clone(),
        }
    }

    pub fn to_transcript(&self) -> Result<Transcript> {
        use crate::arith::parse_rational;
        let config = PrimeConfig::new(self.primes.iter().copied())?;
        let params = GameParams::new(parse_rational(&self.alpha)?, parse_rational(&self.beta)?, config)?;
        let moves = self
            .moves
            .iter()
            .map(|m| {
                Ok(Move {
                    role: m.role,
                    index: m.index,
                    ball: m.ball.to_ball(&params.config)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Transcript {
            rho0: parse_rational(&self.rho0)?,
            params,
            moves,
            annotations: self.annotations.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};
    use crate::solenoid::ball_contains;

    fn params() -> GameParams {
        GameParams::new(rat(1, 9), rat(1, 2), PrimeConfig::new([2, 3]).unwrap()).unwrap()
    }

    fn b0(p: &GameParams) -> Ball {
        Ball::new(SolenoidPoint::zero(&p.config), rat(1, 4000)).unwrap()
    }

    #[test]
    fn legality_clauses() {
        let p = params();
        let t = Transcript::new(p.clone(), b0(&p)).unwrap();
        let rho = rat(1, 4000);
        let alice = |center: SolenoidPoint, radius: Rational| Move {
            role: Role::Alice,
            index: 0,
            ball: Ball { center, radius },
        };
        assert!(legal_move(&t, &alice(SolenoidPoint::zero(&p.config), &p.alpha * &rho)).is_ok());
        let far = SolenoidPoint::new((Rational::one() - &p.alpha) * &rho + int(1), vec![int(0), int(0)]);
        assert!(matches!(
            legal_move(&t, &alice(far, &p.alpha * &rho)),
            Err(Violation::NotPreceding { .. })
        ));
        let bob_early = Move {
            role: Role::Bob,
            index: 1,
            ball: Ball::new(SolenoidPoint::zero(&p.config), rat(1, 1000)).unwrap(),
        };
        assert!(matches!(legal_move(&t, &bob_early), Err(Violation::OutOfTurn { .. })));

        let mut t2 = t.clone();
        t2.moves.push(alice(SolenoidPoint::zero(&p.config), &p.alpha * &rho));
        let half_radius = &p.beta * &p.alpha * &rho / int(2);
        let bob = Move {
            role: Role::Bob,
            index: 1,
            ball: Ball::new(SolenoidPoint::zero(&p.config), half_radius).unwrap(),
        };
        assert!(matches!(legal_move(&t2, &bob), Err(Violation::Radius { .. })));
    }

    #[test]
    fn concentric_schedule() {
        let p = params();
        let t = run_game(&mut Concentric, &mut Concentric, 5, b0(&p), p.clone()).unwrap();
        let radii: Vec<Rational> = t.moves.iter().map(|m| m.ball.radius.clone()).collect();
        let r0 = rat(1, 4000);
        let (a, b) = (&p.alpha, &p.beta);
        assert_eq!(
            radii,
            vec![r0.clone(), a * &r0, a * b * &r0, a * a * b * &r0, a * a * b * b * &r0]
        );
        let (c, r) = intersection_estimate(&t);
        assert_eq!(c, SolenoidPoint::zero(&p.config));
        assert_eq!(r, radii[4]);
    }

    #[test]
    fn random_bob_games_are_legal_nested_and_reproducible() {
        let p = params();
        for seed in 0..5 {
            let t = run_game(&mut Concentric, &mut RandomBob::new(seed), 11, b0(&p), p.clone()).unwrap();
            assert!(revalidate(&t).is_ok());
            for w in t.moves.windows(2) {
                assert!(ball_contains(&w[0].ball, &w[1].ball, &p.config).unwrap());
            }
            for n in 0..=5u64 {
                let ab = &p.alpha * &p.beta;
                assert_eq!(t.bob_ball(n).unwrap().radius, rat(1, 4000) * num_traits::pow(ab, n as usize));
            }
            let again = run_game(&mut Concentric, &mut RandomBob::new(seed), 11, b0(&p), p.clone()).unwrap();
            assert_eq!(t, again);
        }
    }

    #[test]
    fn targeting_bob_converges() {
        let p = params();
        let target = rat(1, 100_000);
        let t = run_game(&mut Concentric, &mut TargetingBob::new(target.clone()), 9, b0(&p), p.clone()).unwrap();
        let goal = SolenoidPoint::diagonal(&target, &p.config);
        let dists: Vec<Rational> = (0..=4)
            .map(|n| sup_dist(&t.bob_ball(n).unwrap().center, &goal, &p.config).unwrap())
            .collect();
        for w in dists.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn replay_bob_reproduces_script_and_aborts_on_bad_moves() {
        let p = params();
        let t = run_game(&mut Concentric, &mut RandomBob::new(3), 7, b0(&p), p.clone()).unwrap();
        let script: Vec<SolenoidPoint> = (1..=3).map(|n| t.bob_ball(n).unwrap().center.clone()).collect();
        let replayed = run_game(&mut Concentric, &mut ReplayBob::new(script), 7, b0(&p), p.clone()).unwrap();
        assert_eq!(replayed.moves, t.moves);

        let bad = vec![SolenoidPoint::diagonal(&int(1), &p.config)];
        let err = run_game(&mut Concentric, &mut ReplayBob::new(bad), 3, b0(&p), p.clone()).unwrap_err();
        assert!(matches!(err, GameAbort::Illegal { violation: Violation::NotPreceding { .. }, .. }));
        let err = run_game(&mut Concentric, &mut ReplayBob::new(vec![]), 3, b0(&p), p).unwrap_err();
        assert!(matches!(err, GameAbort::Strategy { .. }));
    }

    #[test]
    fn transcript_record_round_trip() {
        let p = params();
        let t = run_game(&mut Concentric, &mut RandomBob::new(9), 6, b0(&p), p).unwrap();
        let rec = TranscriptRecord::from_transcript(&t);
        let json = serde_json::to_string(&rec).unwrap();
        let back: TranscriptRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_transcript().unwrap(), t);
    }

    #[test]
    fn bob_spec_parsing() {
        assert_eq!(BobSpec::parse("random").unwrap(), BobSpec::Random(None));
        assert_eq!(BobSpec::parse("random:4").unwrap(), BobSpec::Random(Some(4)));
        assert_eq!(BobSpec::parse("targeting:1/3").unwrap(), BobSpec::Targeting(rat(1, 3)));
        assert!(BobSpec::parse("sneaky").is_err());
    }
}
