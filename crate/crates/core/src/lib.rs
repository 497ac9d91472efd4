//! Exact arithmetic on the p-adic solenoid `Q_P = R x Q_p1 x ... x Q_pk`,
//! a referee for Schmidt's (alpha, beta)-game played on it, a winning
//! strategy for the set of badly approximable points, and verifiers that
//! certify the output of that strategy exactly.
//!
//! Every quantity is an exact rational. The only floating point value the
//! crate produces is the decimal evaluation in [`verify::dim_lower_bound`].

pub mod arith;
pub mod cli;
pub mod error;
pub mod game;
pub mod scan;
pub mod solenoid;
pub mod strategy;
pub mod verify;

pub use arith::{PrimeConfig, Rational, SElement, Valuation};
pub use error::{Error, Result};
pub use game::{GameParams, Move, Role, Strategy, Transcript};
pub use solenoid::{Ball, SolenoidPoint};
pub use strategy::{StrategyParams, WinningStrategy};
pub use verify::Certificate;


