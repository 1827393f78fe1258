//! The level-by-level solving loop.

use std::time::{Duration, Instant};

use crate::chc::Program;
use crate::kdim::{kdim, KdimError};
use crate::linsolve::{solve_linear, LinearConfig, LinearVerdict, LinsolveError, NotSolvedReason};
use crate::model::{inductive, linearize, Model, ModelError, DEFAULT_SPLIT_BUDGET};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub max_k: u32,
    pub widen_delay: usize,
    pub narrow: bool,
    pub split_budget: usize,
    pub trace: bool,
    pub timeout: Option<Duration>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            max_k: 8,
            widen_delay: LinearConfig::default().widen_delay,
            narrow: false,
            split_budget: DEFAULT_SPLIT_BUDGET,
            trace: false,
            timeout: None,
        }
    }
}

impl Config {
    pub fn linear(&self) -> LinearConfig {
        LinearConfig {
            widen_delay: self.widen_delay,
            narrow: self.narrow,
            split_budget: self.split_budget,
            ..LinearConfig::default()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error(transparent)]
    Kdim(#[from] KdimError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linsolve(#[from] LinsolveError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveStatus {
    Solved(Model),
    Unknown(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationStats {
    pub k: u32,
    /// Clauses of the at-most-k program.
    pub kdim_clauses: usize,
    /// Clauses handed to the linear solver.
    pub linear_clauses: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub k_reached: u32,
    pub iterations: Vec<IterationStats>,
}

impl SolveOutcome {
    pub fn is_solved(&self) -> bool {
        matches!(self.status, SolveStatus::Solved(_))
    }
}

fn reason(r: &NotSolvedReason) -> String {
    match r {
        NotSolvedReason::FalseDerived(q) => format!("not-solved {} derivable", q),
        NotSolvedReason::RoundLimit => "not-solved round-limit".to_string(),
        NotSolvedReason::Unsound(id) => format!("not-solved fixpoint fails clause {}", id + 1),
    }
}

pub fn solve(p: &Program, cfg: &Config) -> Result<SolveOutcome, DriverError> {
    let start = Instant::now();
    let lin_cfg = cfg.linear();
    let mut k = 0;
    let mut kp = kdim(p, 0)?;
    let mut current = kp.clone();
    let mut acc = Model::new();
    let mut iterations = Vec::new();
    loop {
        let t0 = Instant::now();
        let verdict = solve_linear(&current, &lin_cfg)?;
        let stats = IterationStats {
            k,
            kdim_clauses: kp.clauses().len(),
            linear_clauses: current.clauses().len(),
            elapsed: t0.elapsed(),
        };
        if cfg.trace {
            eprintln!(
                "k={} kdim-clauses={} linear-clauses={} time={:?}",
                k, stats.kdim_clauses, stats.linear_clauses, stats.elapsed
            );
        }
        iterations.push(stats);
        let m = match verdict {
            LinearVerdict::Solved(m) => m,
            LinearVerdict::NotSolved(r) => {
                return Ok(SolveOutcome {
                    status: SolveStatus::Unknown(reason(&r)),
                    k_reached: k,
                    iterations,
                });
            }
        };
        acc.absorb(&m);
        if cfg.trace {
            eprint!("{}", acc);
        }
        if inductive(&acc, p, cfg.split_budget) {
            return Ok(SolveOutcome {
                status: SolveStatus::Solved(acc.erase_indices().pruned()),
                k_reached: k,
                iterations,
            });
        }
        if k + 1 > cfg.max_k {
            return Ok(SolveOutcome {
                status: SolveStatus::Unknown("max-k".into()),
                k_reached: k,
                iterations,
            });
        }
        if cfg.timeout.is_some_and(|t| start.elapsed() > t) {
            return Ok(SolveOutcome {
                status: SolveStatus::Unknown("timeout".into()),
                k_reached: k,
                iterations,
            });
        }
        k += 1;
        kp = kdim(p, k)?;
        current = linearize(&kp, &acc)?;
    }
}
