//! Differential harness: the reference interpreter versus the converted
//! form on the frame machine, compared event for event.
//!
//! A schedule is the sequence of `co_enter(ord, 0)` resumes applied after
//! `main` returns. The harness first runs the empty schedule to learn how
//! many coroutines the program creates, then either enumerates every
//! schedule up to the depth limit or, when that space is too large, compares
//! a seeded random sample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ast::Program;
use crate::cps::{translate, CpsError};
use crate::typeck::{typecheck, TypedProgram};

use super::{direct, machine, Fault, Outcome, DEFAULT_FUEL};

/// Cap on recorded mismatches; one is already a bug, a flood is noise.
const MAX_MISMATCHES: usize = 5;

#[derive(Debug, Clone)]
pub struct DiffConfig {
    /// Longest schedule to try.
    pub max_depth: usize,
    /// Enumerate exhaustively while the schedule count stays at or below
    /// this; sample otherwise.
    pub exhaustive_budget: usize,
    /// Sample size when the space exceeds the budget.
    pub samples: usize,
    pub seed: u64,
    pub fuel: u64,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig {
            max_depth: 6,
            exhaustive_budget: 2000,
            samples: 100,
            seed: 0xD1FF,
            fuel: DEFAULT_FUEL,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub schedule: Vec<u64>,
    pub direct: Outcome,
    pub converted: Outcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiffReport {
    pub schedules_run: usize,
    /// Whether every schedule up to the depth limit was tried.
    pub exhaustive: bool,
    /// Runs not compared because either engine ran out of fuel.
    pub skipped_fuel: usize,
    pub mismatches: Vec<Mismatch>,
}

impl DiffReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Translates `program` and compares both engines over schedules. Programs
/// the translation gate refuses are reported as [`CpsError`]s, not
/// mismatches.
pub fn run(program: &Program, cfg: &DiffConfig) -> Result<DiffReport, CpsError> {
    let mut original = program.clone();
    original.assign_ids();
    let source = typecheck(original)?;
    let converted = typecheck(translate(program)?)?;

    let mut report = DiffReport {
        schedules_run: 0,
        exhaustive: true,
        skipped_fuel: 0,
        mismatches: Vec::new(),
    };
    let alphabet = compare(&source, &converted, &[], cfg.fuel, &mut report);
    if !report.is_clean() || alphabet == 0 {
        return Ok(report);
    }

    let total = schedule_space(alphabet, cfg.max_depth);
    if total <= cfg.exhaustive_budget as u128 {
        'depths: for depth in 1..=cfg.max_depth {
            let mut sched = vec![0u64; depth];
            'odometer: loop {
                compare(&source, &converted, &sched, cfg.fuel, &mut report);
                if report.mismatches.len() >= MAX_MISMATCHES {
                    break 'depths;
                }
                let mut i = depth;
                while i > 0 {
                    i -= 1;
                    sched[i] += 1;
                    if sched[i] < alphabet {
                        continue 'odometer;
                    }
                    sched[i] = 0;
                }
                break;
            }
        }
    } else {
        report.exhaustive = false;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.samples {
            let depth = rng.random_range(1..=cfg.max_depth);
            let sched: Vec<u64> =
                (0..depth).map(|_| rng.random_range(0..alphabet)).collect();
            compare(&source, &converted, &sched, cfg.fuel, &mut report);
            if report.mismatches.len() >= MAX_MISMATCHES {
                break;
            }
        }
    }
    Ok(report)
}

/// Runs one schedule on both engines and records any disagreement. Returns
/// the coroutine count, which the empty run uses as the schedule alphabet.
fn compare(
    source: &TypedProgram,
    converted: &TypedProgram,
    schedule: &[u64],
    fuel: u64,
    report: &mut DiffReport,
) -> u64 {
    let d = direct::run(source, schedule, fuel);
    let c = machine::run(converted, schedule, fuel);
    report.schedules_run += 1;
    if matches!(d.fault, Some(Fault::FuelExhausted))
        || matches!(c.fault, Some(Fault::FuelExhausted))
    {
        report.skipped_fuel += 1;
        return d.coroutines_created.min(c.coroutines_created);
    }
    let created = d.coroutines_created;
    if d != c {
        report.mismatches.push(Mismatch {
            schedule: schedule.to_vec(),
            direct: d,
            converted: c,
        });
    }
    created
}

/// Number of non-empty schedules up to `max_depth` over `n` coroutines.
fn schedule_space(n: u64, max_depth: usize) -> u128 {
    let mut total: u128 = 0;
    let mut pow: u128 = 1;
    for _ in 0..max_depth {
        pow = pow.saturating_mul(n as u128);
        total = total.saturating_add(pow);
    }
    total
}
