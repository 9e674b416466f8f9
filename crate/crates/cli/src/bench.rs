//! Microbenchmarks over the runtime primitives.
//!
//! Three scenarios: `lifecycle` creates and enters an empty coroutine per
//! operation; `nesting` runs a chain of a thousand nested coroutines per
//! operation, each incrementing a shared counter and then creating and
//! entering the next; `yield` enters one coroutine over and over, which
//! decrements a counter and yields each time. Every run does three discarded
//! warmup rounds, then one measured round reported as a per-operation mean.

use coroc_runtime::{
    coroutine_create, coroutine_enter, coroutine_yield, Continuation, Executor, Frame, FuncId,
    RuntimeError, RuntimeStats, Scheduler, SchedulerConfig, Value, DEFAULT_POOL_MAX,
};
use serde::Serialize;
use std::time::{Duration, Instant};

pub const WARMUP_ROUNDS: usize = 3;

/// Coroutines per chain in the nesting scenario.
pub const NESTING_DEPTH: i64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchKind {
    Lifecycle,
    Nesting,
    Yield,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchResult {
    pub benchmark: BenchKind,
    pub pool: bool,
    pub iterations: u64,
    pub ns_per_op: f64,
    pub reallocations: u64,
    pub pool_hits: u64,
}

pub fn run(kind: BenchKind, pool: bool, iterations: u64) -> BenchResult {
    for _ in 0..WARMUP_ROUNDS {
        round(kind, pool, iterations);
    }
    let (elapsed, stats) = round(kind, pool, iterations);
    BenchResult {
        benchmark: kind,
        pool,
        iterations,
        ns_per_op: elapsed.as_nanos() as f64 / iterations.max(1) as f64,
        reallocations: stats.reallocations,
        pool_hits: stats.pool_hits,
    }
}

const YIELD_MARKER: FuncId = 0;
const EMPTY: FuncId = 1;
const CHAIN: FuncId = 2;
const PUMP: FuncId = 3;

/// The three synthetic bodies; `counter` is the shared counter the nesting
/// and yield scenarios touch.
struct Bodies {
    counter: i64,
}

impl Executor for Bodies {
    type Error = RuntimeError;

    fn execute(
        &mut self,
        sched: &mut Scheduler,
        func: FuncId,
        args: Vec<Value>,
        mut k: Continuation,
    ) -> Result<Continuation, RuntimeError> {
        match func {
            EMPTY => Ok(k),
            CHAIN => {
                self.counter += 1;
                let depth = args[0].as_int().unwrap_or(1);
                if depth > 1 {
                    let id = coroutine_create(sched, CHAIN);
                    coroutine_enter(sched, self, id, Value::Int(depth - 1))?;
                }
                Ok(k)
            }
            PUMP => {
                if self.counter > 0 {
                    self.counter -= 1;
                    k.push(Frame::new(PUMP, vec![Value::Unit]), &mut sched.stats)?;
                    coroutine_yield(sched, &mut k)?;
                }
                Ok(k)
            }
            other => Err(RuntimeError::UnknownFunctionId(other)),
        }
    }
}

fn scheduler(pool: bool) -> Scheduler {
    let mut config = SchedulerConfig::new(YIELD_MARKER);
    config.pool_max = if pool { DEFAULT_POOL_MAX } else { 0 };
    Scheduler::new(config)
}

fn round(kind: BenchKind, pool: bool, iterations: u64) -> (Duration, RuntimeStats) {
    let mut sched = scheduler(pool);
    let mut bodies = Bodies { counter: 0 };
    let elapsed = match kind {
        BenchKind::Lifecycle => {
            let start = Instant::now();
            for _ in 0..iterations {
                let id = coroutine_create(&mut sched, EMPTY);
                coroutine_enter(&mut sched, &mut bodies, id, Value::Int(0))
                    .expect("empty coroutine");
            }
            start.elapsed()
        }
        BenchKind::Nesting => {
            let start = Instant::now();
            for _ in 0..iterations {
                let id = coroutine_create(&mut sched, CHAIN);
                coroutine_enter(&mut sched, &mut bodies, id, Value::Int(NESTING_DEPTH))
                    .expect("nesting chain");
            }
            let elapsed = start.elapsed();
            debug_assert_eq!(bodies.counter, NESTING_DEPTH * iterations as i64);
            elapsed
        }
        BenchKind::Yield => {
            bodies.counter = iterations as i64;
            let id = coroutine_create(&mut sched, PUMP);
            let start = Instant::now();
            for _ in 0..iterations {
                coroutine_enter(&mut sched, &mut bodies, id, Value::Int(0))
                    .expect("pump coroutine");
            }
            let elapsed = start.elapsed();
            debug_assert_eq!(bodies.counter, 0);
            elapsed
        }
    };
    (elapsed, sched.stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use coroc_runtime::EnterResult;

    #[test]
    fn chain_counts_once_per_nested_coroutine() {
        let mut sched = scheduler(true);
        let mut bodies = Bodies { counter: 0 };
        for _ in 0..3 {
            let id = coroutine_create(&mut sched, CHAIN);
            coroutine_enter(&mut sched, &mut bodies, id, Value::Int(50)).unwrap();
        }
        assert_eq!(bodies.counter, 150);
        assert_eq!(sched.stats.pool_hits + sched.stats.pool_misses, 150);
    }

    #[test]
    fn pump_counter_reaches_zero_after_n_enters() {
        let mut sched = scheduler(false);
        let mut bodies = Bodies { counter: 40 };
        let id = coroutine_create(&mut sched, PUMP);
        for _ in 0..40 {
            let step = coroutine_enter(&mut sched, &mut bodies, id, Value::Int(0)).unwrap();
            assert_eq!(step, EnterResult::Yielded);
        }
        assert_eq!(bodies.counter, 0);
        let done = coroutine_enter(&mut sched, &mut bodies, id, Value::Int(0)).unwrap();
        assert_eq!(done, EnterResult::Terminated);
    }

    #[test]
    fn lifecycle_hits_the_pool_on_every_create_but_the_first() {
        let pooled = run(BenchKind::Lifecycle, true, 50);
        assert_eq!(pooled.pool_hits, 49);
        assert!(pooled.ns_per_op > 0.0);
        let bare = run(BenchKind::Lifecycle, false, 50);
        assert_eq!(bare.pool_hits, 0);
    }

    #[test]
    fn result_serializes_with_scenario_names() {
        let result = run(BenchKind::Yield, true, 10);
        let json = serde_json::to_string(&result).unwrap();
        assert!(json.contains("\"benchmark\":\"yield\""), "{json}");
        assert!(json.contains("\"pool\":true"), "{json}");
    }
}
