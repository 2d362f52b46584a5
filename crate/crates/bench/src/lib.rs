//! Fixtures shared by the benchmarks.

use gridstack_core::sim::{presets, sample_scenario, SamplingRanges};
use gridstack_core::Scenario;

/// Single-slot scenario with `n_units` sampled units.
pub fn slot_fixture(n_units: usize) -> Scenario {
    sample_scenario(7, n_units, &SamplingRanges::default(), &presets::cost_vs_units())
}

/// Hourly day with five sampled units and random demand.
pub fn day_fixture() -> Scenario {
    sample_scenario(7, 5, &SamplingRanges::day(), &presets::day())
}
