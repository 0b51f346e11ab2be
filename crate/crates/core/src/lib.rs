//! A rule-based conversation-flow engine: a scenario DSL, a turn-based
//! session runtime with time-budgeted question selection, symbolic affect,
//! recommendation rationale, and a simulation and analysis harness.

pub mod affect;
pub mod engine;
pub mod places;
pub mod recommend;
pub mod rng;
pub mod scenario;
pub mod simulate;
