//! Runtime counters, exportable as JSON for the CLI and benchmarks.

use serde::Serialize;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RuntimeStats {
    pub frames_pushed: u64,
    pub frames_popped: u64,
    pub reallocations: u64,
    pub pool_hits: u64,
    pub pool_misses: u64,
}

impl RuntimeStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stats serialize")
    }
}
