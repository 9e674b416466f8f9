//! Behavioral tests for the trampoline loop and the coroutine lifecycle,
//! using synthetic function tables (no surface language involved).

use coroc_runtime::{
    coroutine_create, coroutine_enter, coroutine_self, coroutine_yield, in_coroutine, trampoline,
    Continuation, EnterResult, Executor, Frame, FuncId, RuntimeError, Scheduler, SchedulerConfig,
    Stop, Value, INITIAL_FRAME_CAPACITY,
};

const YIELD: FuncId = 0;

struct FnExec<F>(F);

impl<F> Executor for FnExec<F>
where
    F: FnMut(&mut Scheduler, FuncId, Vec<Value>, Continuation) -> Result<Continuation, RuntimeError>,
{
    type Error = RuntimeError;

    fn execute(
        &mut self,
        sched: &mut Scheduler,
        func: FuncId,
        args: Vec<Value>,
        k: Continuation,
    ) -> Result<Continuation, RuntimeError> {
        (self.0)(sched, func, args, k)
    }
}

fn scheduler() -> Scheduler {
    Scheduler::new(SchedulerConfig::new(YIELD))
}

#[test]
fn empty_continuation_returns_immediately() {
    let mut sched = scheduler();
    let mut exec = FnExec(|_: &mut Scheduler, _, _, _| panic!("nothing to execute"));
    let k = Continuation::new(0, None);
    let (k, stop) = trampoline(&mut sched, &mut exec, k).unwrap();
    assert!(k.is_empty());
    assert_eq!(stop, Stop::Completed);
    assert_eq!(sched.stats.frames_popped, 0);
}

#[test]
fn yield_frame_is_intercepted_without_execution() {
    let mut sched = scheduler();
    let mut ran = false;
    let mut exec = FnExec(|_: &mut Scheduler, _, _, k| {
        ran = true;
        Ok(k)
    });
    let mut k = Continuation::new(0, None);
    k.push(Frame::new(7, vec![]), &mut sched.stats).unwrap();
    coroutine_yield(&mut sched, &mut k).unwrap();
    let (k, stop) = trampoline(&mut sched, &mut exec, k).unwrap();
    // The marker frame is gone; the function beneath it never ran.
    assert_eq!(stop, Stop::Yielded);
    assert_eq!(k.len(), 1);
    assert_eq!(k.top_func(), Some(7));
    assert!(!ran);
}

#[test]
fn frames_run_in_lifo_order() {
    let mut sched = scheduler();
    let mut order = Vec::new();
    let mut exec = FnExec(|_: &mut Scheduler, f, _, k| {
        order.push(f);
        Ok(k)
    });
    let mut k = Continuation::new(0, None);
    for f in [3, 2, 1] {
        k.push(Frame::new(f, vec![]), &mut sched.stats).unwrap();
    }
    trampoline(&mut sched, &mut exec, k).unwrap();
    assert_eq!(order, vec![1, 2, 3]);
}

#[test]
fn pending_return_value_fills_the_marked_slot() {
    const CONSUMER: FuncId = 5;
    let mut sched = scheduler();
    let mut seen = None;
    let mut exec = FnExec(|_: &mut Scheduler, f, args: Vec<Value>, k| {
        assert_eq!(f, CONSUMER);
        seen = Some(args);
        Ok(k)
    });
    let mut k = Continuation::new(0, None);
    k.push(
        Frame::with_return_slot(CONSUMER, vec![Value::Int(11), Value::Int(0)], 1),
        &mut sched.stats,
    )
    .unwrap();
    k.set_pending(Value::Int(42));
    trampoline(&mut sched, &mut exec, k).unwrap();
    assert_eq!(seen, Some(vec![Value::Int(11), Value::Int(42)]));
}

#[test]
fn missing_return_value_is_an_error() {
    let mut sched = scheduler();
    let mut exec = FnExec(|_: &mut Scheduler, _, _, k| Ok(k));
    let mut k = Continuation::new(0, None);
    k.push(Frame::with_return_slot(5, vec![Value::Int(0)], 0), &mut sched.stats).unwrap();
    assert_eq!(
        trampoline(&mut sched, &mut exec, k).unwrap_err(),
        RuntimeError::MissingReturnValue
    );
}

/// Entry that yields once, then finishes on resume.
///
/// ids: 1 = entry, 2 = resume point.
fn yield_once_exec() -> FnExec<
    impl FnMut(&mut Scheduler, FuncId, Vec<Value>, Continuation) -> Result<Continuation, RuntimeError>,
> {
    FnExec(|sched: &mut Scheduler, f, _args, mut k: Continuation| {
        match f {
            1 => {
                k.push(Frame::new(2, vec![]), &mut sched.stats)?;
                coroutine_yield(sched, &mut k)?;
            }
            2 => {}
            _ => return Err(RuntimeError::UnknownFunctionId(f)),
        }
        Ok(k)
    })
}

#[test]
fn lifecycle_created_yielded_terminated() {
    let mut sched = scheduler();
    let mut exec = yield_once_exec();
    let c = coroutine_create(&mut sched, 1);
    assert_eq!(coroutine_enter(&mut sched, &mut exec, c, Value::Int(0)), Ok(EnterResult::Yielded));
    assert_eq!(coroutine_enter(&mut sched, &mut exec, c, Value::Int(9)), Ok(EnterResult::Terminated));
    assert_eq!(
        coroutine_enter(&mut sched, &mut exec, c, Value::Int(0)),
        Err(RuntimeError::EnterTerminated(c))
    );
}

#[test]
fn yield_as_final_act_still_reports_yielded() {
    // Entry whose only action is to yield: the first enter suspends (with an
    // empty continuation), and only the second enter terminates.
    let mut sched = scheduler();
    let mut exec = FnExec(|sched: &mut Scheduler, _, _, mut k: Continuation| {
        coroutine_yield(sched, &mut k)?;
        Ok(k)
    });
    let c = coroutine_create(&mut sched, 1);
    assert_eq!(coroutine_enter(&mut sched, &mut exec, c, Value::Int(0)), Ok(EnterResult::Yielded));
    let mut idle = FnExec(|_: &mut Scheduler, _, _, k| Ok(k));
    assert_eq!(
        coroutine_enter(&mut sched, &mut idle, c, Value::Int(0)),
        Ok(EnterResult::Terminated)
    );
}

#[test]
fn unknown_handle_is_rejected() {
    let mut sched = scheduler();
    let mut exec = FnExec(|_: &mut Scheduler, _, _, k| Ok(k));
    assert_eq!(
        coroutine_enter(&mut sched, &mut exec, 99, Value::Int(0)),
        Err(RuntimeError::UnknownCoroutine(99))
    );
}

#[test]
fn entering_a_running_coroutine_fails() {
    // The entry function tries to re-enter its own coroutine.
    let mut sched = scheduler();
    let mut observed = None;
    let mut exec = FnExec(|sched: &mut Scheduler, f, _args, k: Continuation| {
        if f == 1 {
            let me = coroutine_self(Some(&k))?;
            let mut probe = FnExec(|_: &mut Scheduler, _, _, k| Ok(k));
            observed = Some(coroutine_enter(sched, &mut probe, me, Value::Int(0)));
        }
        Ok(k)
    });
    let c = coroutine_create(&mut sched, 1);
    coroutine_enter(&mut sched, &mut exec, c, Value::Int(0)).unwrap();
    assert_eq!(observed, Some(Err(RuntimeError::EnterRunning(c))));
}

#[test]
fn termination_recycles_into_the_pool() {
    let mut sched = scheduler();
    let mut exec = FnExec(|_: &mut Scheduler, _, _, k| Ok(k));
    let c = coroutine_create(&mut sched, 1);
    assert_eq!(sched.stats.pool_misses, 1);
    coroutine_enter(&mut sched, &mut exec, c, Value::Int(0)).unwrap();
    assert_eq!(sched.pool_len(), 1);
    // The next create reuses the recycled coroutine but gets a fresh ordinal.
    let c2 = coroutine_create(&mut sched, 1);
    assert_eq!(sched.stats.pool_hits, 1);
    assert_ne!(c, c2);
}

#[test]
fn pool_of_zero_disables_recycling() {
    let mut config = SchedulerConfig::new(YIELD);
    config.pool_max = 0;
    let mut sched = Scheduler::new(config);
    let mut exec = FnExec(|_: &mut Scheduler, _, _, k| Ok(k));
    let c = coroutine_create(&mut sched, 1);
    coroutine_enter(&mut sched, &mut exec, c, Value::Int(0)).unwrap();
    assert_eq!(sched.pool_len(), 0);
    coroutine_create(&mut sched, 1);
    assert_eq!(sched.stats.pool_hits, 0);
    assert_eq!(sched.stats.pool_misses, 2);
}

#[test]
fn nested_enter_runs_inner_to_yield_then_outer_continues() {
    // ids: 1 = outer entry, 2 = inner entry (yields), 3 = outer tail.
    let mut sched = scheduler();
    let mut log = Vec::new();
    let mut inner_handle = None;

    struct Nested<'a> {
        log: &'a mut Vec<String>,
        inner_handle: &'a mut Option<u64>,
    }
    impl Executor for Nested<'_> {
        type Error = RuntimeError;
        fn execute(
            &mut self,
            sched: &mut Scheduler,
            func: FuncId,
            _args: Vec<Value>,
            mut k: Continuation,
        ) -> Result<Continuation, RuntimeError> {
            match func {
                1 => {
                    self.log.push("outer:start".into());
                    let inner = coroutine_create(sched, 2);
                    *self.inner_handle = Some(inner);
                    let r = coroutine_enter(sched, self, inner, Value::Int(0))?;
                    self.log.push(format!("outer:inner-{r:?}"));
                    k.push(Frame::new(3, vec![]), &mut sched.stats)?;
                }
                2 => {
                    self.log.push("inner:yield".into());
                    coroutine_yield(sched, &mut k)?;
                }
                3 => self.log.push("outer:tail".into()),
                other => return Err(RuntimeError::UnknownFunctionId(other)),
            }
            Ok(k)
        }
    }

    let mut exec = Nested { log: &mut log, inner_handle: &mut inner_handle };
    let outer = coroutine_create(&mut sched, 1);
    assert_eq!(
        coroutine_enter(&mut sched, &mut exec, outer, Value::Int(0)),
        Ok(EnterResult::Terminated)
    );
    // Inner yield suspended only the inner coroutine; the outer kept going.
    assert_eq!(
        log,
        vec!["outer:start", "inner:yield", "outer:inner-Yielded", "outer:tail"]
    );
    let inner = inner_handle.unwrap();
    let mut finish = FnExec(|_: &mut Scheduler, _, _, k| Ok(k));
    assert_eq!(
        coroutine_enter(&mut sched, &mut finish, inner, Value::Int(0)),
        Ok(EnterResult::Terminated)
    );
}

#[test]
fn self_and_in_coroutine_come_from_the_continuation() {
    let mut sched = scheduler();
    let mut seen_self = None;
    let mut exec = FnExec(|_: &mut Scheduler, _, _, k: Continuation| {
        assert!(in_coroutine(Some(&k)));
        seen_self = Some(coroutine_self(Some(&k)).unwrap());
        Ok(k)
    });
    let c = coroutine_create(&mut sched, 1);
    coroutine_enter(&mut sched, &mut exec, c, Value::Int(0)).unwrap();
    assert_eq!(seen_self, Some(c));
    assert!(!in_coroutine(None));
    assert_eq!(coroutine_self(None), Err(RuntimeError::SelfOutsideCoroutine));
}

mod realloc_bound {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        /// Geometric growth keeps reallocations logarithmic in the push count.
        #[test]
        fn reallocations_stay_logarithmic(n in 1usize..5000) {
            let mut sched = scheduler();
            let mut k = Continuation::new(0, None);
            for i in 0..n {
                k.push(Frame::new(i as FuncId, vec![]), &mut sched.stats).unwrap();
            }
            let bound = ((n as f64) / (INITIAL_FRAME_CAPACITY as f64)).log2() + 1.0;
            prop_assert!((sched.stats.reallocations as f64) <= bound.max(0.0));
        }
    }
}
