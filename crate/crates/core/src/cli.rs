//! The `solenoid` command line.
//!
//! Every command prints one JSON envelope
//! `{command, config, result, diagnostics, version}` in which rationals are
//! `"num/den"` strings. Exit status is 0 on success, 1 when a verdict is
//! false or a run aborts, and 2 on usage or parameter errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::arith::{format_rational, parse_rational, PrimeConfig, Rational};
use crate::error::Error;
use crate::game::{revalidate, BobSpec, GameAbort, TranscriptRecord};
use crate::solenoid::{
    interiors_disjoint, packing_construct, packing_count, packing_lower_bound, precedes, Ball, BallRecord, SolenoidPoint,
};
use crate::strategy::{certify_blocks, danger_scan, simulate, DangerCase, StrategyParams};
use crate::verify::{
    approximation_spectrum, certify, certify_exhaustive, dim_lower_bound, dirichlet_search, GammaRange, Subject,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_VAR: &str = "SOLENOID_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "solenoid", version, about = "Schmidt games and badly approximable points on p-adic solenoids")]
struct Cli {
    /// Also write the envelope to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Primes {
    /// Comma-separated distinct primes, e.g. 2,3.
    #[arg(long, value_delimiter = ',', required = true)]
    primes: Vec<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Play the winning strategy against a Bob and certify each block.
    Simulate {
        #[command(flatten)]
        primes: Primes,
        #[arg(long)]
        beta: String,
        #[arg(long)]
        rho0: String,
        #[arg(long, default_value_t = 3)]
        blocks: u64,
        /// random[:seed], targeting:<q> or concentric.
        #[arg(long, default_value = "random")]
        bob: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Centre of B_0 as arch,p1,...,pk (default: the origin).
        #[arg(long)]
        center: Option<String>,
        /// Seeds to run concurrently, as a list (1,2,5) or a range (1..10).
        #[arg(long)]
        batch: Option<String>,
    },
    /// Certify a ball or point against every gamma up to a norm bound.
    Certify {
        #[command(flatten)]
        primes: Primes,
        #[arg(long, conflicts_with = "center")]
        point: Option<String>,
        #[arg(long, requires = "radius")]
        center: Option<String>,
        #[arg(long)]
        radius: Option<String>,
        #[arg(long)]
        delta: String,
        #[arg(long)]
        gamma_bound: String,
        /// Test every gamma instead of sieving.
        #[arg(long, hide = true)]
        exhaustive: bool,
    },
    /// Find a Dirichlet approximation with |gamma| <= N.
    Dirichlet {
        #[command(flatten)]
        primes: Primes,
        #[arg(long)]
        point: String,
        #[arg(long = "N")]
        n: u64,
    },
    /// Dangerous pairs for a block-opening ball.
    Danger {
        #[command(flatten)]
        primes: Primes,
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: String,
        #[arg(long)]
        block: u64,
        #[arg(long)]
        beta: String,
        #[arg(long)]
        rho0: String,
    },
    /// Pack preceding sub-balls of radius beta*rho into a ball.
    Packing {
        #[command(flatten)]
        primes: Primes,
        #[arg(long)]
        center: String,
        #[arg(long)]
        radius: String,
        #[arg(long)]
        beta: String,
    },
    /// Hausdorff dimension lower bound over a sweep of betas.
    Dimbound {
        #[command(flatten)]
        primes: Primes,
        #[arg(long)]
        alpha: String,
        #[arg(long, value_delimiter = ',', required = true)]
        beta: Vec<String>,
    },
    /// Normalized approximation errors of a point.
    Spectrum {
        #[command(flatten)]
        primes: Primes,
        #[arg(long)]
        point: String,
        #[arg(long)]
        bound: String,
    },
    /// Replay a transcript through the referee.
    #[command(hide = true)]
    Revalidate {
        /// Transcript or simulate envelope; `-` reads stdin.
        #[arg(long)]
        input: PathBuf,
    },
}

/// Outcome of a command before it is wrapped in the envelope.
struct Outcome {
    config: Value,
    result: Value,
    diagnostics: Vec<String>,
    success: bool,
}

fn field(name: &str, e: Error) -> Error {
    match e {
        Error::Parameter { .. } => e,
        other => Error::parameter(name, other.to_string()),
    }
}

fn rational(name: &str, s: &str) -> Result<Rational, Error> {
    parse_rational(s).map_err(|e| field(name, e))
}

fn config(p: &Primes) -> Result<PrimeConfig, Error> {
    PrimeConfig::new(p.primes.iter().copied()).map_err(|e| field("primes", e))
}

fn point(name: &str, s: &str, cfg: &PrimeConfig) -> Result<SolenoidPoint, Error> {
    SolenoidPoint::parse(s, cfg).map_err(|e| field(name, e))
}

fn ball(center: &str, radius: &str, cfg: &PrimeConfig) -> Result<Ball, Error> {
    Ball::new(point("center", center, cfg)?, rational("radius", radius)?).map_err(|e| field("radius", e))
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, Error> {
    let bad = || Error::parameter("batch", format!("`{s}` is not a seed list or range"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn params_json(p: &StrategyParams) -> Value {
    json!({
        "alpha": format_rational(&p.alpha),
        "beta": format_rational(&p.beta),
        "c": format_rational(&p.c),
        "delta": format_rational(&p.delta),
        "t": p.t,
        "rsq": format_rational(&p.rsq),
        "rho0": format_rational(&p.rho0),
        "preamble": p.preamble,
    })
}

/// One simulate run; `(result, verdict)`.
fn simulate_one(
    cfg: &PrimeConfig,
    beta: &Rational,
    rho0: &Rational,
    center: &SolenoidPoint,
    bob: &BobSpec,
    seed: u64,
    blocks: u64,
) -> Result<(Value, bool), Error> {
    let mut b = bob.build(seed);
    match simulate(cfg, beta, rho0, center.clone(), b.as_mut(), blocks) {
        Ok(sim) => {
            let certs = certify_blocks(&sim, blocks)?;
            let verdict = certs.iter().all(|c| c.verdict);
            let block_logs: Vec<Value> = sim
                .blocks
                .iter()
                .map(|l| {
                    json!({
                        "block": l.block,
                        "opening_index": l.opening_index,
                        "pair": l.scan.pair.as_ref().map(|p| json!({
                            "beta": format_rational(p.beta_num.value()),
                            "gamma": format_rational(p.gamma.value()),
                        })),
                        "witnesses": l.scan.witnesses.len(),
                        "archimedean": l.scan.witnesses.iter().any(|w| w.case == DangerCase::Archimedean),
                        "side": l.side.map(|s| s.to_string()),
                        "padic_escapes": l.padic_escapes,
                        "candidates": l.scan.candidates,
                        "scanned": l.scan.scanned,
                    })
                })
                .collect();
            let result = json!({
                "seed": seed,
                "bob": b.name(),
                "params": params_json(&sim.params),
                "transcript": TranscriptRecord::from_transcript(&sim.transcript),
                "blocks": block_logs,
                "certificates": certs.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
                "verdict": verdict,
            });
            Ok((result, verdict))
        }
        Err(GameAbort::Setup(e)) => Err(e),
        Err(abort) => {
            let partial = match &abort {
                GameAbort::Illegal { transcript, .. } | GameAbort::Strategy { transcript, .. } => {
                    Some(TranscriptRecord::from_transcript(transcript))
                }
                GameAbort::Setup(_) => None,
            };
            Ok((
                json!({
                    "seed": seed,
                    "bob": b.name(),
                    "aborted": abort.to_string(),
                    "transcript": partial,
                    "verdict": false,
                }),
                false,
            ))
        }
    }
}

fn execute(cmd: &Command) -> Result<Outcome, Error> {
    match cmd {
        Command::Simulate {
            primes,
            beta,
            rho0,
            blocks,
            bob,
            seed,
            center,
            batch,
        } => {
            let cfg = config(primes)?;
            let beta_q = rational("beta", beta)?;
            let rho0_q = rational("rho0", rho0)?;
            if *blocks == 0 {
                return Err(Error::parameter("blocks", "must be at least 1"));
            }
            let c = match center {
                Some(s) => point("center", s, &cfg)?,
                None => SolenoidPoint::zero(&cfg),
            };
            let spec = BobSpec::parse(bob).map_err(|e| field("bob", e))?;
            StrategyParams::compute(&beta_q, &rho0_q, &cfg)?;
            let mut config = json!({
                "primes": cfg.primes(),
                "beta": format_rational(&beta_q),
                "rho0": format_rational(&rho0_q),
                "blocks": blocks,
                "bob": bob,
                "seed": seed,
                "center": c.to_strings(),
            });
            let (result, success, diagnostics) = match batch {
                None => {
                    let (r, ok) = simulate_one(&cfg, &beta_q, &rho0_q, &c, &spec, *seed, *blocks)?;
                    let diag = r["aborted"].as_str().map(|s| vec![s.to_string()]).unwrap_or_default();
                    (r, ok, diag)
                }
                Some(list) => {
                    let seeds = parse_seeds(list)?;
                    config["batch"] = json!(seeds);
                    let runs: Vec<Result<(Value, bool), Error>> = std::thread::scope(|s| {
                        let handles: Vec<_> = seeds
                            .iter()
                            .map(|&sd| {
                                let (cfg, beta_q, rho0_q, c, spec) = (&cfg, &beta_q, &rho0_q, &c, &spec);
                                s.spawn(move || simulate_one(cfg, beta_q, rho0_q, c, spec, sd, *blocks))
                            })
                            .collect();
                        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
                    });
                    let mut values = Vec::new();
                    let mut ok = true;
                    let mut diag = Vec::new();
                    for r in runs {
                        let (v, good) = r?;
                        if let Some(a) = v["aborted"].as_str() {
                            diag.push(format!("seed {}: {a}", v["seed"]));
                        }
                        ok &= good;
                        values.push(v);
                    }
                    (json!({"runs": values, "verdict": ok}), ok, diag)
                }
            };
            Ok(Outcome {
                config,
                result,
                diagnostics,
                success,
            })
        }
        Command::Certify {
            primes,
            point: pt,
            center,
            radius,
            delta,
            gamma_bound,
            exhaustive,
        } => {
            let cfg = config(primes)?;
            let subject = match (pt, center, radius) {
                (Some(p), None, None) => Subject::Point(point("point", p, &cfg)?),
                (None, Some(c), Some(r)) => Subject::Ball(ball(c, r, &cfg)?),
                _ => return Err(Error::parameter("point", "give --point, or --center with --radius")),
            };
            let delta_q = rational("delta", delta)?;
            let bound = rational("gamma-bound", gamma_bound)?;
            let range = GammaRange::NormAtMost(bound);
            let cert = if *exhaustive {
                certify_exhaustive(subject, &delta_q, range, &cfg)
            } else {
                certify(subject, &delta_q, range, &cfg)
            }
            .map_err(|e| field("delta", e))?;
            let diagnostics = if cert.verdict {
                Vec::new()
            } else {
                vec![format!("{} gamma values violate the inequality", cert.failures)]
            };
            Ok(Outcome {
                config: json!({
                    "primes": cfg.primes(),
                    "delta": delta,
                    "gamma_bound": gamma_bound,
                    "exhaustive": exhaustive,
                }),
                success: cert.verdict,
                result: cert.to_json(),
                diagnostics,
            })
        }
        Command::Dirichlet { primes, point: pt, n } => {
            let cfg = config(primes)?;
            let x = point("point", pt, &cfg)?;
            if *n == 0 {
                return Err(Error::parameter("N", "must be a positive integer"));
            }
            let hit = dirichlet_search(&x, *n, &cfg)?;
            Ok(Outcome {
                config: json!({"primes": cfg.primes(), "point": x.to_strings(), "N": n}),
                result: json!({
                    "beta": format_rational(hit.beta.value()),
                    "gamma": format_rational(hit.gamma.value()),
                    "distance": format_rational(&hit.distance),
                    "bound": format_rational(&hit.bound),
                }),
                diagnostics: Vec::new(),
                success: true,
            })
        }
        Command::Danger {
            primes,
            center,
            radius,
            block,
            beta,
            rho0,
        } => {
            let cfg = config(primes)?;
            let b = ball(center, radius, &cfg)?;
            if *block == 0 {
                return Err(Error::parameter("block", "blocks are numbered from 1"));
            }
            let params = StrategyParams::compute(&rational("beta", beta)?, &rational("rho0", rho0)?, &cfg)?;
            let scan = danger_scan(&b, *block, &params, &cfg)?;
            let witnesses: Vec<Value> = scan
                .witnesses
                .iter()
                .map(|w| {
                    json!({
                        "beta": format_rational(&w.beta_num),
                        "gamma": format_rational(&w.gamma),
                        "norm": format_rational(&w.norm),
                        "case": match w.case {
                            DangerCase::Archimedean => "archimedean".to_string(),
                            DangerCase::Padic(i) => format!("padic:{}", cfg.primes()[i]),
                        },
                    })
                })
                .collect();
            Ok(Outcome {
                config: json!({
                    "primes": cfg.primes(),
                    "center": b.center.to_strings(),
                    "radius": format_rational(&b.radius),
                    "block": block,
                }),
                result: json!({
                    "params": params_json(&params),
                    "pair": scan.pair.as_ref().map(|p| json!({
                        "beta": format_rational(p.beta_num.value()),
                        "gamma": format_rational(p.gamma.value()),
                    })),
                    "witnesses": witnesses,
                    "candidates": scan.candidates,
                    "scanned": scan.scanned,
                }),
                diagnostics: Vec::new(),
                success: true,
            })
        }
        Command::Packing {
            primes,
            center,
            radius,
            beta,
        } => {
            let cfg = config(primes)?;
            let b = ball(center, radius, &cfg)?;
            let beta_q = rational("beta", beta)?;
            let balls = packing_construct(&b, &beta_q, &cfg)?;
            let mut disjoint = true;
            for (i, x) in balls.iter().enumerate() {
                for y in &balls[i + 1..] {
                    disjoint &= interiors_disjoint(x, y, &cfg)?;
                }
            }
            let mut preceding = true;
            for x in &balls {
                preceding &= precedes(&x.center, &x.radius, &b.center, &b.radius, &cfg);
            }
            let bound = packing_lower_bound(&beta_q, &cfg);
            let ok = disjoint && preceding && Rational::from_integer(balls.len().into()) >= bound;
            Ok(Outcome {
                config: json!({
                    "primes": cfg.primes(),
                    "center": b.center.to_strings(),
                    "radius": format_rational(&b.radius),
                    "beta": format_rational(&beta_q),
                }),
                result: json!({
                    "count": balls.len(),
                    "formula_count": packing_count(&beta_q, &cfg).to_string(),
                    "lower_bound": format_rational(&bound),
                    "disjoint": disjoint,
                    "preceding": preceding,
                    "balls": balls.iter().map(BallRecord::from_ball).collect::<Vec<_>>(),
                }),
                diagnostics: Vec::new(),
                success: ok,
            })
        }
        Command::Dimbound { primes, alpha, beta } => {
            let cfg = config(primes)?;
            let alpha_q = rational("alpha", alpha)?;
            let mut rows = Vec::new();
            let mut prev: Option<f64> = None;
            let mut increasing = true;
            for b in beta {
                let bq = rational("beta", b)?;
                let d = dim_lower_bound(&alpha_q, &bq, &cfg)?;
                if let Some(p) = prev {
                    increasing &= d.value > p;
                }
                prev = Some(d.value);
                rows.push(json!({
                    "beta": format_rational(&bq),
                    "n_bound": format_rational(&d.n_bound),
                    "value": d.value,
                }));
            }
            Ok(Outcome {
                config: json!({"primes": cfg.primes(), "alpha": format_rational(&alpha_q)}),
                result: json!({"rows": rows, "strictly_increasing": increasing, "limit": cfg.k() + 1}),
                diagnostics: Vec::new(),
                success: true,
            })
        }
        Command::Spectrum { primes, point: pt, bound } => {
            let cfg = config(primes)?;
            let x = point("point", pt, &cfg)?;
            let bq = rational("bound", bound)?;
            let rows = approximation_spectrum(&x, &bq, &cfg)?;
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "gamma": format_rational(&r.gamma),
                        "beta": format_rational(&r.beta),
                        "norm": format_rational(&r.norm),
                        "distance": format_rational(&r.distance),
                        "normalized": format_rational(&r.normalized),
                    })
                })
                .collect();
            Ok(Outcome {
                config: json!({"primes": cfg.primes(), "point": x.to_strings(), "bound": format_rational(&bq)}),
                result: json!({"rows": rows}),
                diagnostics: Vec::new(),
                success: true,
            })
        }
        Command::Revalidate { input } => {
            let text = if input.as_os_str() == "-" {
                std::io::read_to_string(std::io::stdin())
            } else {
                std::fs::read_to_string(input)
            }
            .map_err(|e| Error::parameter("input", e.to_string()))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| Error::parameter("input", e.to_string()))?;
            let records: Vec<Value> = if let Some(runs) = v["result"]["runs"].as_array() {
                runs.iter().map(|r| r["transcript"].clone()).collect()
            } else if v["result"]["transcript"].is_object() {
                vec![v["result"]["transcript"].clone()]
            } else {
                vec![v]
            };
            let mut checked = Vec::new();
            let mut ok = true;
            let mut diagnostics = Vec::new();
            for r in records {
                let rec: TranscriptRecord =
                    serde_json::from_value(r).map_err(|e| Error::parameter("input", e.to_string()))?;
                let t = rec.to_transcript().map_err(|e| field("input", e))?;
                match revalidate(&t) {
                    Ok(()) => checked.push(json!({"moves": t.moves.len(), "legal": true})),
                    Err((i, v)) => {
                        ok = false;
                        diagnostics.push(format!("move {i}: {v}"));
                        checked.push(json!({"moves": t.moves.len(), "legal": false, "first_illegal": i}));
                    }
                }
            }
            Ok(Outcome {
                config: json!({"input": input.display().to_string()}),
                result: json!({"transcripts": checked, "legal": ok}),
                diagnostics,
                success: ok,
            })
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Simulate { .. } => "simulate",
        Command::Certify { .. } => "certify",
        Command::Dirichlet { .. } => "dirichlet",
        Command::Danger { .. } => "danger",
        Command::Packing { .. } => "packing",
        Command::Dimbound { .. } => "dimbound",
        Command::Spectrum { .. } => "spectrum",
        Command::Revalidate { .. } => "revalidate",
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let name = command_name(&cli.command);
    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            let envelope = json!({
                "command": name,
                "config": Value::Null,
                "result": Value::Null,
                "diagnostics": [e.to_string()],
                "version": env!("CARGO_PKG_VERSION"),
            });
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&envelope).expect("serializable"));
            return if e.is_usage() { 2 } else { 1 };
        }
    };
    let envelope = json!({
        "command": name,
        "config": outcome.config,
        "result": outcome.result,
        "diagnostics": outcome.diagnostics,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let text = serde_json::to_string_pretty(&envelope).expect("serializable");
    let _ = writeln!(out, "{text}");
    let path = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_VAR).map(|d| PathBuf::from(d).join(format!("{name}.json"))));
    if let Some(p) = path {
        if let Err(e) = std::fs::write(&p, format!("{text}\n")) {
            let _ = writeln!(err, "error: cannot write {}: {e}", p.display());
            return 2;
        }
    }
    for d in &outcome.diagnostics {
        let _ = writeln!(err, "{d}");
    }
    if outcome.success {
        0
    } else {
        1
    }
}
