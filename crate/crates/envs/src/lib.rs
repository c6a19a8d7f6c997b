//! Benchmark environments: sensor placement, wildfire containment and small
//! enumerable models for planner sanity checks.

pub mod sensor;
pub mod wildfire;
pub mod toy;
