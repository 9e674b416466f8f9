//! Coroutine lifecycle, pool, and the trampoline loop.

use std::collections::{BTreeMap, BTreeSet};

use crate::continuation::{Continuation, Frame, FuncId, Value};
use crate::stats::RuntimeStats;
use crate::RuntimeError;

/// Creation ordinal; doubles as the public coroutine handle.
pub type CoroutineId = u64;

/// Coroutines kept for reuse when no pool size is configured explicitly.
pub const DEFAULT_POOL_MAX: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoroutineState {
    Created,
    Running,
    Yielded,
    Terminated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnterResult {
    Yielded,
    Terminated,
}

/// Why the trampoline stopped: it drained the continuation, or it intercepted
/// the yield marker. The two must stay distinct — a coroutine whose final act
/// is a yield suspends with an empty continuation and terminates only on the
/// next enter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Completed,
    Yielded,
}

#[derive(Debug)]
struct Coroutine {
    state: CoroutineState,
    entry: FuncId,
    /// Present while Created or Yielded; moved into the trampoline while
    /// Running; gone after termination.
    cont: Option<Continuation>,
}

/// Runs one frame's worth of code. Implementations resolve [`FuncId`]s against
/// their own program table; the runtime never inspects function bodies.
///
/// `execute` receives the continuation below the popped frame and must return
/// the continuation the trampoline should continue with. Calling is pushing:
/// run a function by pushing its frame; yield by calling
/// [`coroutine_yield`]; return a value by [`Continuation::set_pending`].
pub trait Executor {
    type Error: From<RuntimeError>;

    fn execute(
        &mut self,
        sched: &mut Scheduler,
        func: FuncId,
        args: Vec<Value>,
        k: Continuation,
    ) -> Result<Continuation, Self::Error>;
}

#[derive(Debug, Clone, Copy)]
pub struct SchedulerConfig {
    /// Function id the trampoline intercepts as the yield marker.
    pub yield_fn: FuncId,
    /// Maximum recycled coroutines kept; 0 disables pooling.
    pub pool_max: usize,
    /// Optional hard cap on continuation frames.
    pub frame_limit: Option<usize>,
}

impl SchedulerConfig {
    pub fn new(yield_fn: FuncId) -> Self {
        SchedulerConfig { yield_fn, pool_max: DEFAULT_POOL_MAX, frame_limit: None }
    }
}

/// One single-threaded scheduling context: the coroutine table, the pool of
/// recycled coroutines, and the shared counters.
#[derive(Debug)]
pub struct Scheduler {
    config: SchedulerConfig,
    live: BTreeMap<CoroutineId, Coroutine>,
    terminated: BTreeSet<CoroutineId>,
    free: Vec<Coroutine>,
    next_ordinal: CoroutineId,
    pub stats: RuntimeStats,
}

impl Scheduler {
    pub fn new(config: SchedulerConfig) -> Self {
        Scheduler {
            config,
            live: BTreeMap::new(),
            terminated: BTreeSet::new(),
            free: Vec::new(),
            next_ordinal: 0,
            stats: RuntimeStats::default(),
        }
    }

    pub fn yield_fn(&self) -> FuncId {
        self.config.yield_fn
    }

    pub fn pool_len(&self) -> usize {
        self.free.len()
    }

    pub fn state(&self, id: CoroutineId) -> Option<CoroutineState> {
        if self.terminated.contains(&id) {
            return Some(CoroutineState::Terminated);
        }
        self.live.get(&id).map(|c| c.state)
    }

    /// Ordinals created so far (next create returns this value).
    pub fn created_count(&self) -> u64 {
        self.next_ordinal
    }

    /// Ids that exist and have not terminated, in creation order.
    pub fn live_ids(&self) -> Vec<CoroutineId> {
        self.live.keys().copied().collect()
    }
}

/// Creates a coroutine for `entry`, reusing a pooled one when available.
/// The new handle is the next creation ordinal either way, so pooling is
/// invisible to everything except the hit/miss counters.
pub fn coroutine_create(sched: &mut Scheduler, entry: FuncId) -> CoroutineId {
    let id = sched.next_ordinal;
    sched.next_ordinal += 1;
    let limit = sched.config.frame_limit;
    let co = match sched.free.pop() {
        Some(mut co) => {
            sched.stats.pool_hits += 1;
            co.state = CoroutineState::Created;
            co.entry = entry;
            co.cont
                .as_mut()
                .expect("pooled coroutine keeps its continuation")
                .reset(id, limit);
            co
        }
        None => {
            sched.stats.pool_misses += 1;
            Coroutine {
                state: CoroutineState::Created,
                entry,
                cont: Some(Continuation::new(id, limit)),
            }
        }
    };
    sched.live.insert(id, co);
    id
}

/// Runs `id` until it yields or terminates. The argument is delivered to the
/// entry function on the first enter and ignored on resumes.
pub fn coroutine_enter<E: Executor>(
    sched: &mut Scheduler,
    exec: &mut E,
    id: CoroutineId,
    arg: Value,
) -> Result<EnterResult, E::Error> {
    let first = {
        let co = match sched.live.get_mut(&id) {
            Some(co) => co,
            None if sched.terminated.contains(&id) => {
                return Err(RuntimeError::EnterTerminated(id).into())
            }
            None => return Err(RuntimeError::UnknownCoroutine(id).into()),
        };
        match co.state {
            CoroutineState::Running => return Err(RuntimeError::EnterRunning(id).into()),
            CoroutineState::Terminated => return Err(RuntimeError::EnterTerminated(id).into()),
            CoroutineState::Created => {
                co.state = CoroutineState::Running;
                true
            }
            CoroutineState::Yielded => {
                co.state = CoroutineState::Running;
                false
            }
        }
    };
    let mut k = {
        let co = sched.live.get_mut(&id).expect("checked above");
        co.cont.take().expect("non-running coroutine owns its continuation")
    };
    if first {
        let entry = sched.live.get(&id).expect("checked above").entry;
        if let Err(e) = k.push(Frame::new(entry, vec![arg]), &mut sched.stats) {
            sched.live.get_mut(&id).expect("checked above").cont = Some(k);
            return Err(e.into());
        }
    }
    let (k, stop) = trampoline(sched, exec, k)?;
    match stop {
        Stop::Completed => {
            // Entry returned: the coroutine is done; recycle it through the pool.
            let mut co = sched.live.remove(&id).expect("terminating coroutine is live");
            sched.terminated.insert(id);
            if sched.free.len() < sched.config.pool_max {
                co.state = CoroutineState::Terminated;
                let cont = co.cont.insert(k);
                cont.reset(id, sched.config.frame_limit);
                sched.free.push(co);
            }
            Ok(EnterResult::Terminated)
        }
        Stop::Yielded => {
            let co = sched.live.get_mut(&id).expect("yielding coroutine is live");
            co.state = CoroutineState::Yielded;
            co.cont = Some(k);
            Ok(EnterResult::Yielded)
        }
    }
}

/// The scheduling loop: pop a frame, intercept the yield marker by comparing
/// function ids (the marker frame is already removed when control returns to
/// the enterer), otherwise deliver any pending return value and run the frame.
pub fn trampoline<E: Executor>(
    sched: &mut Scheduler,
    exec: &mut E,
    mut k: Continuation,
) -> Result<(Continuation, Stop), E::Error> {
    loop {
        if k.is_empty() {
            return Ok((k, Stop::Completed));
        }
        let frame = k.pop(&mut sched.stats).expect("non-empty continuation");
        if frame.func == sched.config.yield_fn {
            return Ok((k, Stop::Yielded));
        }
        let mut args = frame.args;
        let pending = k.take_pending();
        if let Some(slot) = frame.ret_at {
            match pending {
                Some(v) => args[slot] = v,
                None => return Err(RuntimeError::MissingReturnValue.into()),
            }
        }
        k = exec.execute(sched, frame.func, args, k)?;
    }
}

/// Suspends by pushing the yield marker frame for the trampoline to intercept.
pub fn coroutine_yield(sched: &mut Scheduler, k: &mut Continuation) -> Result<(), RuntimeError> {
    let marker = Frame::new(sched.config.yield_fn, vec![]);
    k.push(marker, &mut sched.stats)
}

/// Recovers the owning coroutine from the live continuation; there is no
/// current-coroutine variable to consult.
pub fn coroutine_self(k: Option<&Continuation>) -> Result<CoroutineId, RuntimeError> {
    k.map(|k| k.owner()).ok_or(RuntimeError::SelfOutsideCoroutine)
}

/// True exactly when a live continuation was passed, i.e. in coroutine context.
pub fn in_coroutine(k: Option<&Continuation>) -> bool {
    k.is_some()
}
