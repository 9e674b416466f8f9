//! Support library for the `coroc` binary: the benchmark scenarios, exposed
//! separately so tests can call them without spawning the binary.

pub mod bench;
