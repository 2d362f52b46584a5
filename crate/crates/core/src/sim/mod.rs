//! Day simulation: storage plan plus one leader-follower game per slot.
//!
//! Three cases are evaluated for every slot:
//! 1. no storage and no game (all energy from the grid),
//! 2. storage but no game,
//! 3. storage and the game.

mod sampling;
pub mod study;

pub use sampling::{presets, sample_scenario, SamplingRanges};

use crate::domain::{
    validate_scenario, DroppedUnit, GridTariff, ResidentialUnit, SfcDemand, StorageConfig, SweepConfig, TouSchedule,
};
use crate::error::{Error, Result};
use crate::game::{solve_equilibrium, EquilibriumResult};
use crate::storage::{plan_day, SlotPlan};

/// Everything needed to run a single-slot game or a whole day.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub units: Vec<ResidentialUnit>,
    /// Per-unit generation for each slot, overriding `e_gen` in day runs.
    pub generation: Option<Vec<Vec<f64>>>,
    pub tariff: GridTariff,
    pub tou: Option<TouSchedule>,
    pub demand: SfcDemand,
    pub storage: Option<StorageConfig>,
    pub sweep: SweepConfig,
    pub seed: u64,
    /// Sell offers the facility does not need to the grid at the buy-back
    /// price instead of curtailing them. Affects unit settlement only.
    pub excess_to_grid: bool,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.tariff.validate()?;
        self.demand.validate()?;
        self.sweep.validate()?;
        for u in &self.units {
            u.validate()?;
        }
        if let Some(cfg) = &self.storage {
            cfg.validate()?;
            if self.tou.is_none() {
                return Err(Error::InvalidScenario("storage requires a ToU schedule".into()));
            }
        }
        let slots = self.slots();
        if let Some(tou) = &self.tou {
            if let Some((t, p)) = tou.prices().iter().enumerate().find(|(_, p)| **p <= self.tariff.p_buy) {
                return Err(Error::InvalidScenario(format!(
                    "ToU price {p} at slot {t} is not above the buy-back price {}",
                    self.tariff.p_buy
                )));
            }
        }
        if !self.demand.eqp_load.is_empty() && self.demand.eqp_load.len() != slots {
            return Err(Error::InvalidScenario(format!(
                "equipment load has {} slots, expected {slots}",
                self.demand.eqp_load.len()
            )));
        }
        if let Some(gen) = &self.generation {
            if gen.len() != self.units.len() {
                return Err(Error::InvalidScenario(format!(
                    "generation profile covers {} units, scenario has {}",
                    gen.len(),
                    self.units.len()
                )));
            }
            for (u, row) in self.units.iter().zip(gen) {
                if row.len() != slots {
                    return Err(Error::InvalidScenario(format!(
                        "unit {} generation profile has {} slots, expected {slots}",
                        u.id,
                        row.len()
                    )));
                }
                if row.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                    return Err(Error::InvalidScenario(format!(
                        "unit {} generation profile has a negative or non-finite entry",
                        u.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of slots: the ToU length, or one for single-slot scenarios.
    pub fn slots(&self) -> usize {
        self.tou.as_ref().map_or(1, TouSchedule::len)
    }

    /// Grid sale price in slot `t`.
    pub fn slot_price(&self, t: usize) -> f64 {
        self.tou.as_ref().map_or(self.tariff.p_sell, |tou| tou.prices()[t])
    }

    pub fn slot_tariff(&self, t: usize) -> Result<GridTariff> {
        self.tariff.with_sell_price(self.slot_price(t))
    }

    /// Units with their slot-`t` generation applied.
    pub fn slot_units(&self, t: usize) -> Vec<ResidentialUnit> {
        match &self.generation {
            None => self.units.clone(),
            Some(gen) => self
                .units
                .iter()
                .zip(gen)
                .map(|(u, row)| u.at_generation(row[t]))
                .collect(),
        }
    }

    /// Equipment demand in slot `t`; single-slot scenarios use `e_req`.
    pub fn slot_equipment(&self, t: usize) -> f64 {
        if self.demand.eqp_load.is_empty() {
            self.demand.e_req
        } else {
            self.demand.eqp_load[t]
        }
    }

    pub fn equipment_profile(&self) -> Vec<f64> {
        (0..self.slots()).map(|t| self.slot_equipment(t)).collect()
    }
}

/// Fixed sale price of `e_req` bought entirely from the grid.
pub fn baseline_cost(e_req: f64, p_sell: f64) -> f64 {
    p_sell * e_req
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotMode {
    NoGame,
    Game,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub requirement: f64,
    pub grid_price: f64,
    /// Facility cost in cents.
    pub cost: f64,
    pub equilibrium: Option<EquilibriumResult>,
    /// Units that played (game mode only).
    pub players: Vec<ResidentialUnit>,
    pub dropped: Vec<DroppedUnit>,
}

/// Requirements this far below zero are a planning bug rather than rounding.
const NEGATIVE_REQUIREMENT_TOLERANCE: f64 = 1e-9;

/// Evaluates slot `t` with storage energy `e_sd` (positive charges).
pub fn run_slot(scenario: &Scenario, t: usize, e_sd: f64, mode: SlotMode) -> Result<SlotOutcome> {
    if t >= scenario.slots() {
        return Err(Error::Domain(format!(
            "slot {t} out of range for {} slots",
            scenario.slots()
        )));
    }
    let raw = scenario.slot_equipment(t) + e_sd;
    if raw < -NEGATIVE_REQUIREMENT_TOLERANCE {
        return Err(Error::Invariant(format!(
            "slot {t} requirement is negative ({raw} kWh)"
        )));
    }
    let requirement = raw.max(0.0);
    let grid_price = scenario.slot_price(t);

    match mode {
        SlotMode::NoGame => Ok(SlotOutcome {
            requirement,
            grid_price,
            cost: baseline_cost(requirement, grid_price),
            equilibrium: None,
            players: Vec::new(),
            dropped: Vec::new(),
        }),
        SlotMode::Game => {
            let tariff = scenario.slot_tariff(t)?;
            let screened = validate_scenario(&scenario.slot_units(t), &tariff, &SfcDemand::single(requirement))?;
            let eq = solve_equilibrium(&screened.eligible, requirement, &tariff, &scenario.sweep);
            Ok(SlotOutcome {
                requirement,
                grid_price,
                cost: eq.sfc_cost_star,
                equilibrium: Some(eq),
                players: screened.eligible,
                dropped: screened.dropped,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaySlot {
    pub slot: usize,
    pub grid_price: f64,
    pub eqp_load: f64,
    pub e_sd: f64,
    pub soc_after: f64,
    /// Requirement with storage activity included.
    pub requirement: f64,
    pub equilibrium_price: f64,
    /// Costs in cents for the three cases.
    pub cost: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayReport {
    pub seed: u64,
    pub slots: Vec<DaySlot>,
    /// Daily totals in cents for the three cases.
    pub totals: [f64; 3],
    pub plan: SlotPlan,
}

impl DayReport {
    /// Relative reduction of case `b` against case `a`.
    pub fn reduction(&self, a: usize, b: usize) -> f64 {
        1.0 - self.totals[b] / self.totals[a]
    }
}

/// Plans storage once, then evaluates every slot under the three cases.
pub fn run_day(scenario: &Scenario) -> Result<DayReport> {
    scenario.validate()?;
    let slots = scenario.slots();
    let plan = match (&scenario.storage, &scenario.tou) {
        (Some(cfg), Some(tou)) => plan_day(tou, cfg, &scenario.equipment_profile())?,
        _ => SlotPlan::idle(slots, scenario.storage.map_or(0.0, |s| s.q_ini)),
    };

    let mut rows = Vec::with_capacity(slots);
    let mut totals = [0.0; 3];
    for t in 0..slots {
        let e_sd = plan.e_sd[t];
        let plain = run_slot(scenario, t, 0.0, SlotMode::NoGame)?;
        let stored = run_slot(scenario, t, e_sd, SlotMode::NoGame)?;
        let played = run_slot(scenario, t, e_sd, SlotMode::Game)?;
        let cost = [plain.cost, stored.cost, played.cost];
        for (acc, c) in totals.iter_mut().zip(cost) {
            *acc += c;
        }
        rows.push(DaySlot {
            slot: t,
            grid_price: played.grid_price,
            eqp_load: scenario.slot_equipment(t),
            e_sd,
            soc_after: plan.soc_after[t],
            requirement: played.requirement,
            equilibrium_price: played.equilibrium.as_ref().map_or(f64::NAN, |e| e.price_star),
            cost,
        });
    }
    Ok(DayReport {
        seed: scenario.seed,
        slots: rows,
        totals,
        plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(id: u32, k: f64) -> ResidentialUnit {
        ResidentialUnit::with_generation(id, k, 10.0).unwrap()
    }

    fn day_scenario(prices: Vec<f64>, load: Vec<f64>, storage: Option<StorageConfig>) -> Scenario {
        Scenario {
            units: vec![unit(1, 100.0), unit(2, 120.0), unit(3, 140.0)],
            generation: None,
            tariff: GridTariff::new(8.45, 60.0).unwrap(),
            tou: Some(TouSchedule::new(prices).unwrap()),
            demand: SfcDemand::day(load),
            storage,
            sweep: SweepConfig::default(),
            seed: 1,
            excess_to_grid: false,
        }
    }

    fn storage() -> StorageConfig {
        StorageConfig {
            capacity: 100.0,
            efficiency: 0.9,
            max_rate: 24.0,
            q_ini: 0.0,
            q_tar_ch: 30.0,
            q_tar_dis: 0.0,
            p_min_threshold: 40.0,
            p_max_threshold: 45.0,
        }
    }

    #[test]
    fn baseline_examples() {
        assert_eq!(baseline_cost(150.0, 70.0), 10500.0);
        assert_eq!(baseline_cost(60.0, 70.0), 4200.0);
        assert_eq!(baseline_cost(0.0, 70.0), 0.0);
    }

    #[test]
    fn slot_examples() {
        let s = day_scenario(vec![50.0], vec![20.0], None);
        let out = run_slot(&s, 0, -9.0, SlotMode::NoGame).unwrap();
        assert_eq!(out.requirement, 11.0);
        assert_eq!(out.cost, 550.0);

        for mode in [SlotMode::NoGame, SlotMode::Game] {
            let out = run_slot(&s, 0, -20.0, mode).unwrap();
            assert_eq!(out.requirement, 0.0);
            assert_eq!(out.cost, 0.0);
        }

        assert!(matches!(
            run_slot(&s, 0, -25.0, SlotMode::NoGame),
            Err(Error::Invariant(_))
        ));
        assert!(run_slot(&s, 3, 0.0, SlotMode::NoGame).is_err());
    }

    #[test]
    fn game_never_costs_more_than_grid() {
        let s = day_scenario(vec![30.0, 45.0, 60.0, 75.0], vec![5.0, 20.0, 40.0, 400.0], None);
        for t in 0..4 {
            let grid = run_slot(&s, t, 0.0, SlotMode::NoGame).unwrap().cost;
            let game = run_slot(&s, t, 0.0, SlotMode::Game).unwrap().cost;
            assert!(game <= grid, "slot {t}: {game} > {grid}");
        }
    }

    #[test]
    fn idle_prices_leave_cases_equal() {
        let s = day_scenario(
            vec![41.0, 42.0, 44.0],
            vec![100.0; 3],
            Some(StorageConfig {
                q_tar_ch: 0.0,
                ..storage()
            }),
        );
        let r = run_day(&s).unwrap();
        for row in &r.slots {
            assert_eq!(row.cost[0], row.cost[1]);
            assert_eq!(row.e_sd, 0.0);
        }
    }

    #[test]
    fn day_totals_are_slot_sums() {
        let s = day_scenario(vec![30.0, 35.0, 42.0, 50.0, 55.0], vec![100.0; 5], Some(storage()));
        let r = run_day(&s).unwrap();
        for case in 0..3 {
            let sum: f64 = r.slots.iter().map(|row| row.cost[case]).sum();
            assert!((sum - r.totals[case]).abs() < 1e-9);
        }
        assert!(r.totals[2] < r.totals[1]);
        assert!(r.totals[1] < r.totals[0]);
        assert_eq!(run_day(&s).unwrap(), r);
    }

    #[test]
    fn scenario_validation() {
        let mut s = day_scenario(vec![30.0, 35.0], vec![1.0], None);
        assert!(s.validate().is_err());
        s.demand = SfcDemand::day(vec![1.0, 1.0]);
        assert!(s.validate().is_ok());
        s.generation = Some(vec![vec![1.0, 2.0]; 2]);
        assert!(s.validate().is_err());
        s.generation = Some(vec![vec![1.0, 2.0]; 3]);
        assert!(s.validate().is_ok());
        assert_eq!(s.slot_units(1)[0].e_gen, 2.0);
        s.tou = Some(TouSchedule::new(vec![5.0, 35.0]).unwrap());
        assert!(s.validate().is_err());
    }
}
