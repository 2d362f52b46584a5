use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Scenario;
use crate::domain::{GridTariff, ResidentialUnit, SfcDemand, StorageConfig, SweepConfig, TouSchedule};

/// Ranges for randomized scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingRanges {
    /// Preference weight drawn uniformly from this closed range (cents).
    pub k_pref: (f64, f64),
    /// Generation per unit and slot (kWh).
    pub e_gen: f64,
    /// Per-slot equipment demand drawn uniformly from this range (kWh).
    /// `None` keeps the base scenario's demand.
    pub demand: Option<(f64, f64)>,
}

impl Default for SamplingRanges {
    fn default() -> Self {
        Self {
            k_pref: (90.0, 150.0),
            e_gen: 10.0,
            demand: None,
        }
    }
}

impl SamplingRanges {
    pub fn day() -> Self {
        Self {
            demand: Some((300.0, 700.0)),
            ..Self::default()
        }
    }
}

const UNIT_STREAM: u64 = 0;
const DEMAND_STREAM: u64 = 1;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n_units` units (and optionally a demand profile) on top of `base`.
///
/// Units and demand use separate random streams, so the first `m` units of
/// a draw do not depend on `n_units` and demand does not depend on either.
pub fn sample_scenario(seed: u64, n_units: usize, ranges: &SamplingRanges, base: &Scenario) -> Scenario {
    let mut units_rng = rng(seed, UNIT_STREAM);
    let k_dist = Uniform::new_inclusive(ranges.k_pref.0, ranges.k_pref.1);
    let units = (0..n_units)
        .map(|i| ResidentialUnit {
            id: i as u32 + 1,
            k_pref: k_dist.sample(&mut units_rng),
            e_gen: ranges.e_gen,
            e_min: 0.0,
        })
        .collect();

    let demand = match ranges.demand {
        Some((lo, hi)) => {
            let mut demand_rng = rng(seed, DEMAND_STREAM);
            let dist = Uniform::new_inclusive(lo, hi);
            SfcDemand::day((0..base.slots()).map(|_| dist.sample(&mut demand_rng)).collect())
        }
        None => base.demand.clone(),
    };

    Scenario {
        units,
        generation: None,
        demand,
        seed,
        ..base.clone()
    }
}

/// Ready-made base scenarios for the single-slot studies and the storage day.
pub mod presets {
    use super::*;

    /// Illustrative hourly sale prices (cents/kWh): cheap overnight, a
    /// morning and an evening peak, a shoulder band between them.
    pub const DAY_TOU: [f64; 24] = [
        32.0, 30.0, 28.0, 27.0, 27.0, 29.0, 33.0, 37.0, // overnight
        48.0, 55.0, 58.0, 52.0, // morning peak
        44.0, 43.0, 42.0, 43.0, 44.0, // shoulder
        52.0, 62.0, 68.0, 60.0, 50.0, // evening peak
        44.0, 41.0,
    ];

    pub const P_BUY: f64 = 8.45;

    fn base(p_sell: f64, e_req: f64) -> Scenario {
        Scenario {
            units: Vec::new(),
            generation: None,
            tariff: GridTariff { p_buy: P_BUY, p_sell },
            tou: None,
            demand: SfcDemand::single(e_req),
            storage: None,
            sweep: SweepConfig::default(),
            seed: 0,
            excess_to_grid: false,
        }
    }

    /// 50 kWh requirement at a 60 c/kWh grid price.
    pub fn single_slot() -> Scenario {
        base(60.0, 50.0)
    }

    /// 150 kWh requirement at 70 c/kWh, used for the number-of-units study.
    pub fn cost_vs_units() -> Scenario {
        base(70.0, 150.0)
    }

    /// 70 c/kWh grid price, used for the requirement study.
    pub fn cost_vs_requirement() -> Scenario {
        base(70.0, 60.0)
    }

    pub fn day_storage() -> StorageConfig {
        StorageConfig {
            capacity: 100.0,
            efficiency: 0.9,
            max_rate: 24.0,
            q_ini: 0.0,
            q_tar_ch: 100.0,
            q_tar_dis: 0.0,
            p_min_threshold: 40.0,
            p_max_threshold: 45.0,
        }
    }

    /// Hourly day with a 100 kWh storage device. Demand is filled in by
    /// [`sample_scenario`] with [`SamplingRanges::day`].
    pub fn day() -> Scenario {
        Scenario {
            tou: Some(TouSchedule::new(DAY_TOU.to_vec()).expect("preset prices are positive")),
            demand: SfcDemand::day(vec![0.0; DAY_TOU.len()]),
            storage: Some(day_storage()),
            ..base(60.0, 0.0)
        }
    }
}
