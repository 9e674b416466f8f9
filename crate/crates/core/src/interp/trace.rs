//! The observable event trace of a run.

use serde::Serialize;

/// One observable event. Coroutines are identified by creation ordinal, so
/// traces compare across engines and across runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    /// `print(value)` ran.
    Print { value: i64 },
    /// Control entered the coroutine, either starting or resuming it.
    Enter { coroutine: u64 },
    /// The entered coroutine suspended back to its enterer.
    Yield { coroutine: u64 },
    /// The entered coroutine ran to completion.
    Term { coroutine: u64 },
}

impl std::fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceEvent::Print { value } => write!(f, "PRINT {value}"),
            TraceEvent::Enter { coroutine } => write!(f, "ENTER {coroutine}"),
            TraceEvent::Yield { coroutine } => write!(f, "YIELD {coroutine}"),
            TraceEvent::Term { coroutine } => write!(f, "TERM {coroutine}"),
        }
    }
}
