//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solenoid::arith::{format_rational, int, rat, PrimeConfig, Rational};
use solenoid::game::{revalidate, BobSpec, RandomBob, TargetingBob, TranscriptRecord};
use solenoid::solenoid::{
    ball_contains, effective_padic_radius, interiors_disjoint, min_diagonal_distance, packing_construct,
    packing_lower_bound, precedes, sup_dist, Ball, SolenoidPoint,
};
use solenoid::strategy::{certify_blocks, simulate, Simulation};
use solenoid::verify::{dim_lower_bound, dirichlet_search, Certificate};
use solenoid::Strategy;

type Outcome = Result<String, String>;

fn cfg(ps: &[u64]) -> PrimeConfig {
    PrimeConfig::new(ps.iter().copied()).unwrap()
}

struct Run {
    label: String,
    sim: Simulation,
    certs: Vec<Certificate>,
}

fn play(ps: &[u64], beta: &Rational, blocks: u64, label: String, bob: &mut dyn Strategy) -> Result<Run, String> {
    let c = cfg(ps);
    let sim = simulate(&c, beta, &rat(1, 4000), SolenoidPoint::zero(&c), bob, blocks)
        .map_err(|e| format!("{label}: game aborted: {e}"))?;
    let certs = certify_blocks(&sim, blocks).map_err(|e| format!("{label}: {e}"))?;
    Ok(Run { label, sim, certs })
}

fn reference_bobs() -> Vec<(String, Box<dyn Strategy + Send>)> {
    let mut v: Vec<(String, Box<dyn Strategy + Send>)> = Vec::new();
    for q in [int(0), rat(1, 3), rat(1, 2)] {
        v.push((format!("targeting:{}", format_rational(&q)), Box::new(TargetingBob::new(q))));
    }
    for s in 1..=10 {
        v.push((format!("random:{s}"), Box::new(RandomBob::new(s))));
    }
    v
}

fn reference_runs() -> Result<Vec<Run>, String> {
    reference_bobs()
        .into_iter()
        .map(|(label, mut bob)| play(&[2, 3], &rat(1, 2), 3, label, bob.as_mut()))
        .collect()
}

fn check_certified(runs: &[Run], delta: Option<Rational>) -> Result<usize, String> {
    let mut n = 0;
    for r in runs {
        if let Err((i, v)) = revalidate(&r.sim.transcript) {
            return Err(format!("{}: move {i} illegal: {v}", r.label));
        }
        if let Some(d) = &delta {
            if &r.sim.params.delta != d {
                return Err(format!("{}: delta {}", r.label, format_rational(&r.sim.params.delta)));
            }
        }
        for (i, c) in r.certs.iter().enumerate() {
            if !c.verdict {
                let w = &c.witnesses[0];
                return Err(format!(
                    "{} block {}: gamma {} at distance {} < {}",
                    r.label,
                    i + 1,
                    format_rational(&w.gamma),
                    format_rational(&w.distance),
                    format_rational(&w.required)
                ));
            }
            n += 1;
        }
    }
    Ok(n)
}

fn ac1(runs: &[Run]) -> Outcome {
    let certs = check_certified(runs, Some(rat(1, 36000)))?;
    let sp = &runs[0].sim.params;
    if (sp.t, &sp.rsq) != (1, &int(18)) {
        return Err("unexpected t or R^2".into());
    }
    Ok(format!("{} games, {certs} certificates on B_(n+1), |gamma|^2 < 18^n, delta = 1/36000", runs.len()))
}

fn ac2_runs() -> Result<Vec<Run>, String> {
    let mut runs = Vec::new();
    for ps in [&[2u64][..], &[3], &[2, 3, 5]] {
        for beta in [rat(1, 2), rat(1, 3), rat(1, 5)] {
            for seed in 1..=5 {
                let label = format!("P={ps:?} beta={} random:{seed}", format_rational(&beta));
                runs.push(play(ps, &beta, 2, label, &mut RandomBob::new(seed))?);
            }
        }
    }
    Ok(runs)
}

fn ac2(runs: &[Run]) -> Outcome {
    let certs = check_certified(runs, None)?;
    Ok(format!("{} games, {certs} certificates, no aborts", runs.len()))
}

fn ac4(groups: &[&[Run]]) -> Outcome {
    let mut blocks = 0;
    let mut with_pair = 0;
    for runs in groups {
        for r in runs.iter() {
            for b in &r.sim.blocks {
                blocks += 1;
                let ratios: Vec<Rational> = b.scan.witnesses.iter().map(|w| &w.beta_num / &w.gamma).collect();
                if ratios.windows(2).any(|w| w[0] != w[1]) {
                    return Err(format!("{} block {}: several ratios", r.label, b.block));
                }
                if let (Some(p), Some(first)) = (&b.scan.pair, ratios.first()) {
                    with_pair += 1;
                    if &p.ratio() != first {
                        return Err(format!("{} block {}: pair does not match witnesses", r.label, b.block));
                    }
                }
            }
        }
    }
    Ok(format!("{blocks} blocks scanned, {with_pair} with a dangerous ratio, all unique"))
}

fn random_f_point(rng: &mut ChaCha8Rng, c: &PrimeConfig) -> SolenoidPoint {
    let b: i64 = rng.gen_range(1..=10_000);
    let arch = rat(rng.gen_range(0..b), b);
    let padic = c
        .primes()
        .iter()
        .map(|&p| {
            let mut d: i64 = rng.gen_range(1..=10_000);
            while d % p as i64 == 0 {
                d /= p as i64;
            }
            for &q in c.primes() {
                while d % q as i64 == 0 && q != p {
                    d /= q as i64;
                }
            }
            rat(rng.gen_range(-10_000..=10_000), d)
        })
        .collect();
    SolenoidPoint::new(arch, padic)
}

fn ac3() -> Outcome {
    let c = cfg(&[2, 3]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut searches = 0;
    for _ in 0..100 {
        let x = random_f_point(&mut rng, &c);
        for n in 1..=40u64 {
            let hit = dirichlet_search(&x, n, &c).map_err(|e| e.to_string())?;
            let bound = rat(3, n as i64);
            let (d, _) = min_diagonal_distance(&x.scale(hit.gamma.value()), &c).map_err(|e| e.to_string())?;
            let gx = x.scale(hit.gamma.value());
            let direct = sup_dist(&gx, &SolenoidPoint::diagonal(hit.beta.value(), &c), &c).map_err(|e| e.to_string())?;
            let norm = solenoid::arith::diag_norm(&hit.gamma, &c);
            if d != hit.distance || direct != d || d > bound || norm > int(n as i64) || !norm.is_positive() {
                return Err(format!("x = {:?}, N = {n}", x.to_strings()));
            }
            searches += 1;
        }
    }
    Ok(format!("{searches} searches, every |gamma x - beta| <= 3/N"))
}

fn ac5() -> Outcome {
    let mut checked = 0;
    for ps in [&[2u64][..], &[2, 3]] {
        let c = cfg(ps);
        for parent in [
            Ball::new(SolenoidPoint::zero(&c), int(1)).unwrap(),
            Ball::new(SolenoidPoint::new(rat(2, 7), vec![rat(1, 5); ps.len()]), rat(3, 100)).unwrap(),
        ] {
            for beta in [rat(1, 4), rat(1, 8), rat(1, 10)] {
                let balls = packing_construct(&parent, &beta, &c).map_err(|e| e.to_string())?;
                let bound = packing_lower_bound(&beta, &c);
                if Rational::from_integer(balls.len().into()) < bound {
                    return Err(format!("P={ps:?} beta={beta}: {} < {bound}", balls.len()));
                }
                for (i, a) in balls.iter().enumerate() {
                    if a.radius != &beta * &parent.radius
                        || !precedes(&a.center, &a.radius, &parent.center, &parent.radius, &c)
                    {
                        return Err(format!("P={ps:?} beta={beta}: ball {i} does not precede the parent"));
                    }
                    for b in &balls[i + 1..] {
                        if !interiors_disjoint(a, b, &c).unwrap() {
                            return Err(format!("P={ps:?} beta={beta}: overlapping balls"));
                        }
                    }
                }
                checked += balls.len();
            }
        }
    }
    Ok(format!("{checked} balls in 12 packings, all disjoint, preceding, above the bound"))
}

fn random_ball_pair(rng: &mut ChaCha8Rng, c: &PrimeConfig) -> (Ball, Ball) {
    let q = |rng: &mut ChaCha8Rng| rat(rng.gen_range(-50..=50), rng.gen_range(1..=12));
    let x2 = SolenoidPoint::new(q(rng), c.primes().iter().map(|_| q(rng)).collect());
    let r2 = rat(rng.gen_range(1..=40), rng.gen_range(1..=40));
    let r1 = &r2 * rat(rng.gen_range(1..=20), 20);
    let slack = &r2 - &r1;
    let scale = if slack.is_zero() { r2.clone() } else { slack.clone() };
    let arch = &x2.arch + &scale * rat(rng.gen_range(-12..=12), 10);
    let padic = x2
        .padic
        .iter()
        .zip(c.primes())
        .map(|(x, &p)| {
            let (_, m) = effective_padic_radius(&scale, p).unwrap();
            let m = m + rng.gen_range(-1..=1);
            x + solenoid::arith::pow_p(p, m) * int(rng.gen_range(0..(p as i64).pow(2)))
        })
        .collect();
    (Ball::new(SolenoidPoint::new(arch, padic), r1).unwrap(), Ball::new(x2, r2).unwrap())
}

fn ac6() -> Outcome {
    let mut preceding = 0;
    for ps in [&[2u64][..], &[2, 3]] {
        let c = cfg(ps);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10_000 {
            let (inner, outer) = random_ball_pair(&mut rng, &c);
            if precedes(&inner.center, &inner.radius, &outer.center, &outer.radius, &c) {
                preceding += 1;
                if !ball_contains(&outer, &inner, &c).unwrap() {
                    return Err(format!("precedes without containment: {inner:?} {outer:?}"));
                }
            }
        }
    }
    if preceding < 2_000 {
        return Err(format!("only {preceding} preceding pairs generated"));
    }
    let c = cfg(&[2]);
    let outer = Ball::new(SolenoidPoint::new(int(0), vec![int(0)]), int(1)).unwrap();
    let inner = Ball::new(SolenoidPoint::new(int(0), vec![int(1)]), int(1)).unwrap();
    if !ball_contains(&outer, &inner, &c).unwrap() || precedes(&inner.center, &inner.radius, &outer.center, &outer.radius, &c) {
        return Err("regression witness: containment without precedence no longer reproduced".into());
    }
    Ok(format!("20000 pairs, {preceding} preceding, all contained; converse counterexample holds"))
}

/// Brute force over `beta = a / L`, `L = (p1...pk)^6`, `|beta - y_inf| <= 1`.
/// The minimum distance never exceeds 1 (reduce into the fundamental
/// domain), so the window holds every minimizer once the p-adic
/// components of `y` have valuation at least -6.
fn oracle(y: &SolenoidPoint, c: &PrimeConfig) -> (Rational, Rational) {
    let l: BigInt = c.product().pow(6);
    let lq = Rational::from_integer(l.clone());
    let lo = ((&y.arch - int(1)) * &lq).ceil().to_integer();
    let hi = ((&y.arch + int(1)) * &lq).floor().to_integer();
    let mut best: Option<(Rational, Rational)> = None;
    let mut a = lo;
    while a <= hi {
        let beta = Rational::new(a.clone(), l.clone());
        let d = sup_dist(y, &SolenoidPoint::diagonal(&beta, c), c).unwrap();
        let better = match &best {
            None => true,
            Some((bd, bb)) => d < *bd || (d == *bd && (beta.abs() < bb.abs() || (beta.abs() == bb.abs() && beta > *bb))),
        };
        if better {
            best = Some((d, beta));
        }
        a += 1;
    }
    best.unwrap()
}

fn ac7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let configs = [cfg(&[2, 3]), cfg(&[2]), cfg(&[3])];
    for i in 0..100 {
        let c = &configs[i % configs.len()];
        let den = |rng: &mut ChaCha8Rng| -> i64 {
            c.primes().iter().map(|&p| (p as i64).pow(rng.gen_range(0..=3))).product::<i64>()
        };
        let arch = rat(rng.gen_range(-400..=400), den(&mut rng) * rng.gen_range(1..=7));
        let padic: Vec<Rational> = c
            .primes()
            .iter()
            .map(|_| {
                let d = den(&mut rng);
                rat(rng.gen_range(-500..=500), d * [1, 7, 11][rng.gen_range(0..3)])
            })
            .collect();
        let y = SolenoidPoint::new(arch, padic);
        // the a priori window: every p-adic valuation is at least -6
        for (x, &p) in y.padic.iter().zip(c.primes()) {
            let pv = Rational::from_integer(BigInt::from(p).pow(6));
            let scaled = x * pv;
            if scaled.denom().is_multiple_of(&BigInt::from(p)) {
                return Err("generated input outside the oracle window".into());
            }
        }
        let (d, b) = min_diagonal_distance(&y, c).map_err(|e| e.to_string())?;
        let (od, ob) = oracle(&y, c);
        if d != od || b.value() != &ob {
            return Err(format!("{:?}: got ({d}, {}), oracle ({od}, {ob})", y.to_strings(), b.value()));
        }
    }
    Ok("100 inputs, distance and minimizer equal the brute-force oracle".into())
}

fn ac8() -> Outcome {
    let c = cfg(&[2, 3]);
    let alpha = rat(1, 9);
    let mut prev = f64::NEG_INFINITY;
    let mut last = 0.0;
    for j in 1..=20u32 {
        let beta = Rational::new(BigInt::one(), BigInt::from(10u8).pow(j));
        let d = dim_lower_bound(&alpha, &beta, &c).map_err(|e| e.to_string())?;
        // closed form: n_bound = 10^(3j) / 72, |log(alpha beta)| = log 9 + j log 10
        let l10 = 10f64.ln();
        let num = 3.0 * j as f64 * l10 - 72f64.ln();
        let den = 9f64.ln() + j as f64 * l10;
        if ((d.value - num / den) / (num / den)).abs() > 1e-9 {
            return Err(format!("beta = 1e-{j}: {} vs closed form {}", d.value, num / den));
        }
        if d.value <= prev {
            return Err(format!("not increasing at beta = 1e-{j}"));
        }
        prev = d.value;
        last = d.value;
    }
    if last < 2.7 {
        return Err(format!("bound {last} < 2.7 at beta = 1e-20"));
    }
    Ok(format!("strictly increasing, {last:.6} at beta = 1e-20"))
}

fn fingerprint(runs: &[Run]) -> Vec<String> {
    runs.iter()
        .map(|r| {
            let t = serde_json::to_string(&TranscriptRecord::from_transcript(&r.sim.transcript)).unwrap();
            let c: Vec<String> = r.certs.iter().map(|c| c.to_json().to_string()).collect();
            format!("{t}{}", c.join(""))
        })
        .collect()
}

fn ac9(first: &[Run]) -> Outcome {
    let again = reference_runs()?;
    let (a, b) = (fingerprint(first), fingerprint(&again));
    if a != b {
        let i = a.iter().zip(&b).position(|(x, y)| x != y).unwrap_or(0);
        return Err(format!("{} differs on rerun", first[i].label));
    }
    // the CLI's Bob parser builds the same adversaries
    let mut bob = BobSpec::parse("random:4").unwrap().build(0);
    let cli = play(&[2, 3], &rat(1, 2), 3, "random:4".into(), bob.as_mut())?;
    if fingerprint(&[cli]) != fingerprint(&first[6..7]) {
        return Err("random:4 via BobSpec differs from RandomBob::new(4)".into());
    }
    Ok(format!("{} games byte-identical on rerun", a.len()))
}

fn report(name: &str, start: Instant, outcome: Outcome, failed: &mut bool) {
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(msg) => println!("{name} PASS ({secs:.1}s): {msg}"),
        Err(msg) => {
            *failed = true;
            println!("{name} FAIL ({secs:.1}s): {msg}");
        }
    }
}

fn main() -> ExitCode {
    let mut failed = false;

    let t = Instant::now();
    let reference = reference_runs();
    let ac1_out = reference.as_ref().map_err(Clone::clone).and_then(|r| ac1(r));
    report("AC-1", t, ac1_out, &mut failed);

    let t = Instant::now();
    let robust = ac2_runs();
    let ac2_out = robust.as_ref().map_err(Clone::clone).and_then(|r| ac2(r));
    report("AC-2", t, ac2_out, &mut failed);

    let t = Instant::now();
    report("AC-3", t, ac3(), &mut failed);

    let t = Instant::now();
    let ac4_out = match (&reference, &robust) {
        (Ok(a), Ok(b)) => ac4(&[a, b]),
        (Err(e), _) | (_, Err(e)) => Err(format!("runs unavailable: {e}")),
    };
    report("AC-4", t, ac4_out, &mut failed);

    let t = Instant::now();
    report("AC-5", t, ac5(), &mut failed);

    let t = Instant::now();
    report("AC-6", t, ac6(), &mut failed);

    let t = Instant::now();
    report("AC-7", t, ac7(), &mut failed);

    let t = Instant::now();
    report("AC-8", t, ac8(), &mut failed);

    let t = Instant::now();
    let ac9_out = reference.as_ref().map_err(Clone::clone).and_then(|r| ac9(r));
    report("AC-9", t, ac9_out, &mut failed);

    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
