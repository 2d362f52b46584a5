//! Seed-batched parameter studies. Means are plain sample means taken in
//! seed order, so results are reproducible bit for bit.

use super::{baseline_cost, run_day, run_slot, sample_scenario, SamplingRanges, Scenario, SlotMode};
use crate::centralized::{centralized_optimum, distributed_social_cost};
use crate::error::{Error, Result};

/// `count` consecutive seeds starting at `first`.
pub fn seed_range(first: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| first.wrapping_add(i)).collect()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// One column of a cost table: the swept value, the grid-only cost and the
/// equilibrium cost per seed (cents).
#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub x: f64,
    pub baseline: f64,
    pub proposed: Vec<f64>,
}

impl CostRow {
    pub fn proposed_mean(&self) -> f64 {
        mean(&self.proposed)
    }

    pub fn reduction_pct(&self) -> f64 {
        100.0 * (1.0 - self.proposed_mean() / self.baseline)
    }
}

fn equilibrium_cost(scenario: &Scenario) -> Result<f64> {
    Ok(run_slot(scenario, 0, 0.0, SlotMode::Game)?.cost)
}

/// Equilibrium cost as the number of units grows, at the base requirement.
pub fn cost_vs_units(
    base: &Scenario,
    ranges: &SamplingRanges,
    n_values: &[usize],
    seeds: &[u64],
) -> Result<Vec<CostRow>> {
    n_values
        .iter()
        .map(|&n| {
            let proposed = seeds
                .iter()
                .map(|&seed| equilibrium_cost(&sample_scenario(seed, n, ranges, base)))
                .collect::<Result<Vec<_>>>()?;
            Ok(CostRow {
                x: n as f64,
                baseline: baseline_cost(base.demand.e_req, base.tariff.p_sell),
                proposed,
            })
        })
        .collect()
}

/// Equilibrium cost as the requirement grows, with `n_units` units.
pub fn cost_vs_requirement(
    base: &Scenario,
    ranges: &SamplingRanges,
    n_units: usize,
    requirements: &[f64],
    seeds: &[u64],
) -> Result<Vec<CostRow>> {
    requirements
        .iter()
        .map(|&e_req| {
            let proposed = seeds
                .iter()
                .map(|&seed| {
                    let mut s = sample_scenario(seed, n_units, ranges, base);
                    s.demand.e_req = e_req;
                    equilibrium_cost(&s)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CostRow {
                x: e_req,
                baseline: baseline_cost(e_req, base.tariff.p_sell),
                proposed,
            })
        })
        .collect()
}

/// Daily totals for one storage capacity, per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityRow {
    pub capacity: f64,
    /// `totals[seed_index][case]` in cents.
    pub totals: Vec<[f64; 3]>,
}

impl CapacityRow {
    pub fn mean_totals(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (case, slot) in out.iter_mut().enumerate() {
            let xs: Vec<f64> = self.totals.iter().map(|t| t[case]).collect();
            *slot = mean(&xs);
        }
        out
    }

    /// Savings of the full scheme against no storage and no game, per seed.
    pub fn savings(&self) -> Vec<f64> {
        self.totals.iter().map(|t| t[0] - t[2]).collect()
    }
}

/// Runs the day at each capacity, scaling every state-of-charge level with
/// the capacity.
pub fn capacity_sweep(
    base: &Scenario,
    ranges: &SamplingRanges,
    n_units: usize,
    capacities: &[f64],
    seeds: &[u64],
) -> Result<Vec<CapacityRow>> {
    let storage = base
        .storage
        .ok_or_else(|| Error::InvalidScenario("capacity sweep needs a storage device".into()))?;
    if !(storage.capacity.is_finite() && storage.capacity > 0.0) {
        return Err(Error::InvalidScenario("base storage capacity must be positive".into()));
    }
    let draws: Vec<Scenario> = seeds
        .iter()
        .map(|&seed| sample_scenario(seed, n_units, ranges, base))
        .collect();
    capacities
        .iter()
        .map(|&capacity| {
            let scaled = storage.scaled(capacity / storage.capacity);
            let totals = draws
                .iter()
                .map(|s| {
                    let s = Scenario {
                        storage: Some(scaled),
                        ..s.clone()
                    };
                    Ok(run_day(&s)?.totals)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CapacityRow { capacity, totals })
        })
        .collect()
}

/// Mean social costs of the equilibrium and of the full-information
/// optimum for one grid price and number of units.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub p_sell: f64,
    pub n_units: usize,
    pub distributed: Vec<f64>,
    pub centralized: Vec<f64>,
}

impl GapRow {
    pub fn distributed_mean(&self) -> f64 {
        mean(&self.distributed)
    }

    pub fn centralized_mean(&self) -> f64 {
        mean(&self.centralized)
    }

    pub fn gap_pct(&self) -> f64 {
        relative_gap_pct(self.distributed_mean(), self.centralized_mean())
    }
}

fn relative_gap_pct(distributed: f64, centralized: f64) -> f64 {
    100.0 * (distributed - centralized) / centralized.abs()
}

/// Gap between the average distributed and average centralized social cost
/// over all rows at `p_sell`.
pub fn mean_gap_pct(rows: &[GapRow], p_sell: f64) -> f64 {
    let at: Vec<&GapRow> = rows.iter().filter(|r| r.p_sell == p_sell).collect();
    let d: Vec<f64> = at.iter().map(|r| r.distributed_mean()).collect();
    let c: Vec<f64> = at.iter().map(|r| r.centralized_mean()).collect();
    relative_gap_pct(mean(&d), mean(&c))
}

pub fn centralized_gap(
    base: &Scenario,
    ranges: &SamplingRanges,
    n_values: &[usize],
    p_sell_values: &[f64],
    seeds: &[u64],
) -> Result<Vec<GapRow>> {
    let mut rows = Vec::new();
    for &p_sell in p_sell_values {
        let mut priced = base.clone();
        priced.tariff = base.tariff.with_sell_price(p_sell)?;
        for &n in n_values {
            let mut distributed = Vec::with_capacity(seeds.len());
            let mut centralized = Vec::with_capacity(seeds.len());
            for &seed in seeds {
                let s = sample_scenario(seed, n, ranges, &priced);
                let e_req = s.demand.e_req;
                let out = run_slot(&s, 0, 0.0, SlotMode::Game)?;
                let eq = out.equilibrium.expect("game mode yields an equilibrium");
                distributed.push(distributed_social_cost(&eq, &out.players, e_req, p_sell)?);
                centralized.push(centralized_optimum(&out.players, e_req, p_sell).social_cost);
            }
            rows.push(GapRow {
                p_sell,
                n_units: n,
                distributed,
                centralized,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::presets;

    #[test]
    fn seeds_are_consecutive() {
        assert_eq!(seed_range(5, 3), vec![5, 6, 7]);
        assert!(seed_range(0, 0).is_empty());
    }

    #[test]
    fn baselines_match_tables() {
        let seeds = seed_range(0, 2);
        let rows = cost_vs_units(&presets::cost_vs_units(), &SamplingRanges::default(), &[5, 10], &seeds).unwrap();
        assert!(rows.iter().all(|r| r.baseline == 10500.0));
        let rows = cost_vs_requirement(
            &presets::cost_vs_requirement(),
            &SamplingRanges::default(),
            10,
            &[60.0, 100.0],
            &seeds,
        )
        .unwrap();
        assert_eq!(rows[0].baseline, 4200.0);
        assert_eq!(rows[1].baseline, 7000.0);
        assert!(rows[0].proposed_mean() < rows[1].proposed_mean());
    }

    #[test]
    fn capacity_sweep_needs_storage() {
        let r = capacity_sweep(&presets::single_slot(), &SamplingRanges::default(), 5, &[10.0], &[0]);
        assert!(r.is_err());
    }

    #[test]
    fn gap_rows_are_ordered() {
        let rows = centralized_gap(
            &presets::single_slot(),
            &SamplingRanges::default(),
            &[5, 10],
            &[60.0],
            &seed_range(0, 3),
        )
        .unwrap();
        for r in &rows {
            for (d, c) in r.distributed.iter().zip(&r.centralized) {
                assert!(c <= d);
            }
        }
        assert!(mean_gap_pct(&rows, 60.0) >= 0.0);
    }
}
