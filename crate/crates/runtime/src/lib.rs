//! Continuation-based coroutine runtime.
//!
//! Coroutines here carry no machine stack. A suspended coroutine is a
//! [`Continuation`]: a growable sequence of frames, each naming a function by
//! id together with its saved arguments. Running a coroutine means handing its
//! continuation to the [`trampoline`], which pops one frame at a time and asks
//! an [`Executor`] to run it. A function "calls" another by pushing a frame and
//! returning the continuation; it yields by pushing the distinguished yield
//! frame, which the trampoline intercepts by comparing function ids and hands
//! control back to whoever entered the coroutine.
//!
//! The runtime knows nothing about the surface language: function bodies live
//! behind the [`Executor`] trait, and frames reference them by [`FuncId`] only.
//! There is deliberately no global or thread-local "current coroutine"
//! variable; the owner of a continuation is recorded in the continuation
//! itself, which is all [`coroutine_self`] needs.

mod continuation;
mod scheduler;
mod stats;

pub use continuation::{Continuation, Frame, FuncId, Value, GROWTH_FACTOR, INITIAL_FRAME_CAPACITY};
pub use scheduler::{
    coroutine_create, coroutine_enter, coroutine_self, coroutine_yield, in_coroutine, trampoline,
    CoroutineId, CoroutineState, EnterResult, Executor, Scheduler, SchedulerConfig, Stop,
    DEFAULT_POOL_MAX,
};
pub use stats::RuntimeStats;

use thiserror::Error;

/// Faults raised by the runtime proper. Executors layer their own error type
/// on top via [`Executor::Error`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    /// Entered a coroutine that is already running (directly or via nesting).
    #[error("coroutine {0} entered while already running")]
    EnterRunning(CoroutineId),
    /// Entered a coroutine that has already terminated.
    #[error("coroutine {0} entered after termination")]
    EnterTerminated(CoroutineId),
    /// Entered a handle that was never created.
    #[error("coroutine {0} does not exist")]
    UnknownCoroutine(CoroutineId),
    /// `coroutine_self` asked for the owner without a live continuation.
    #[error("coroutine_self called outside coroutine context")]
    SelfOutsideCoroutine,
    /// A frame named a function the executor cannot resolve.
    #[error("unknown function id {0}")]
    UnknownFunctionId(u32),
    /// A push would exceed the configured hard capacity limit.
    #[error("continuation capacity limit of {0} frames exceeded")]
    CapacityOverflow(usize),
    /// A popped frame expected a saved return value but none was pending.
    #[error("frame expected a return value but none was pending")]
    MissingReturnValue,
}
