//! Continuations and their frames.

use crate::stats::RuntimeStats;
use crate::RuntimeError;

/// Function identity, resolved against a program table by the executor.
pub type FuncId = u32;

/// Frames a continuation starts with before any growth.
pub const INITIAL_FRAME_CAPACITY: usize = 8;

/// Capacity multiplier applied on each growth.
pub const GROWTH_FACTOR: usize = 2;

/// Values saved in frames and passed between functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    /// A function used as a value (taken address, indirect call target).
    Func(FuncId),
    /// A pointer into the executor's heap; opaque to the runtime.
    Ptr(usize),
    Unit,
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }
}

/// One suspended call: which function to run next and the arguments it was
/// saved with. `ret_at`, when set, marks the argument slot to be overwritten
/// with the pending return value at the moment the frame is popped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub func: FuncId,
    pub args: Vec<Value>,
    pub ret_at: Option<usize>,
}

impl Frame {
    pub fn new(func: FuncId, args: Vec<Value>) -> Self {
        Frame { func, args, ret_at: None }
    }

    pub fn with_return_slot(func: FuncId, args: Vec<Value>, ret_at: usize) -> Self {
        Frame { func, args, ret_at: Some(ret_at) }
    }
}

/// A growable stack of frames owned by one coroutine.
///
/// Empty means completed. Capacity starts at [`INITIAL_FRAME_CAPACITY`] frames
/// and doubles on demand; it never shrinks during a run, and recycling through
/// the pool truncates the frames without giving the buffer back.
#[derive(Debug)]
pub struct Continuation {
    frames: Vec<Frame>,
    owner: u64,
    /// Return value stored by `invoke(k, v)` for the next popped frame.
    pending: Option<Value>,
    /// Optional hard cap on frame count.
    limit: Option<usize>,
}

impl Continuation {
    pub fn new(owner: u64, limit: Option<usize>) -> Self {
        Continuation {
            frames: Vec::with_capacity(INITIAL_FRAME_CAPACITY),
            owner,
            pending: None,
            limit,
        }
    }

    /// Ordinal of the coroutine this continuation belongs to.
    pub fn owner(&self) -> u64 {
        self.owner
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.frames.capacity()
    }

    /// Pushes a frame, growing geometrically when full.
    pub fn push(&mut self, frame: Frame, stats: &mut RuntimeStats) -> Result<(), RuntimeError> {
        if let Some(limit) = self.limit {
            if self.frames.len() == limit {
                return Err(RuntimeError::CapacityOverflow(limit));
            }
        }
        if self.frames.len() == self.frames.capacity() {
            let grown = self.frames.capacity() * GROWTH_FACTOR;
            self.frames.reserve_exact(grown - self.frames.len());
            stats.reallocations += 1;
        }
        self.frames.push(frame);
        stats.frames_pushed += 1;
        Ok(())
    }

    pub fn pop(&mut self, stats: &mut RuntimeStats) -> Option<Frame> {
        let frame = self.frames.pop();
        if frame.is_some() {
            stats.frames_popped += 1;
        }
        frame
    }

    /// Function id of the frame that would be popped next.
    pub fn top_func(&self) -> Option<FuncId> {
        self.frames.last().map(|f| f.func)
    }

    /// Stores a return value for the next executed frame to consume.
    pub fn set_pending(&mut self, value: Value) {
        self.pending = Some(value);
    }

    pub fn take_pending(&mut self) -> Option<Value> {
        self.pending.take()
    }

    /// Drops all frames and any pending value, keeping the buffer. Used when
    /// recycling through the pool and when re-arming a pooled coroutine.
    pub(crate) fn reset(&mut self, owner: u64, limit: Option<usize>) {
        self.frames.clear();
        self.pending = None;
        self.owner = owner;
        self.limit = limit;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_doubles_and_counts() {
        let mut stats = RuntimeStats::default();
        let mut k = Continuation::new(0, None);
        assert_eq!(k.capacity(), INITIAL_FRAME_CAPACITY);
        for i in 0..1000 {
            k.push(Frame::new(i as FuncId, vec![]), &mut stats).unwrap();
        }
        // 8 -> 16 -> ... -> 1024: seven growth events for a thousand pushes.
        assert_eq!(stats.reallocations, 7);
        assert_eq!(k.capacity(), 1024);
        assert_eq!(stats.frames_pushed, 1000);
    }

    #[test]
    fn hard_cap_overflows() {
        let mut stats = RuntimeStats::default();
        let mut k = Continuation::new(0, Some(4));
        for i in 0..4 {
            k.push(Frame::new(i, vec![]), &mut stats).unwrap();
        }
        assert_eq!(
            k.push(Frame::new(9, vec![]), &mut stats),
            Err(RuntimeError::CapacityOverflow(4))
        );
    }

    #[test]
    fn reset_keeps_buffer() {
        let mut stats = RuntimeStats::default();
        let mut k = Continuation::new(0, None);
        for i in 0..100 {
            k.push(Frame::new(i, vec![]), &mut stats).unwrap();
        }
        let cap = k.capacity();
        k.reset(7, None);
        assert!(k.is_empty());
        assert_eq!(k.capacity(), cap);
        assert_eq!(k.owner(), 7);
    }
}
