//! Full-information benchmark: the consumption a planner with access to
//! every unit's private parameters would choose to minimize social cost.
//!
//! Social cost is the leader's cost minus the followers' total utility. When
//! the leader's purchase cap is slack the payments between them cancel and
//! the quantity no longer depends on the price:
//!
//! ```text
//! p_sell * (E_req - sum(E_gen - e)) - sum(k ln(1 + e))
//! ```

use crate::domain::ResidentialUnit;
use crate::error::{Error, Result};
use crate::game::{sfc_cost, utility_unchecked, EquilibriumResult};

#[derive(Debug, Clone, PartialEq)]
pub struct SocialCostResult {
    pub consumption: Vec<f64>,
    pub social_cost: f64,
}

fn check_bounds(consumption: &[f64], units: &[ResidentialUnit]) -> Result<()> {
    if consumption.len() != units.len() {
        return Err(Error::Domain(format!(
            "{} consumptions for {} units",
            consumption.len(),
            units.len()
        )));
    }
    for (u, &e) in units.iter().zip(consumption) {
        if !(e >= u.e_min && e <= u.e_gen) {
            return Err(Error::Domain(format!(
                "consumption {e} outside [{}, {}] for unit {}",
                u.e_min, u.e_gen, u.id
            )));
        }
    }
    Ok(())
}

/// Leader cost (with its purchase cap) minus the followers' utilities, all
/// evaluated at `price`.
pub fn social_cost(consumption: &[f64], units: &[ResidentialUnit], e_req: f64, p_sell: f64, price: f64) -> Result<f64> {
    check_bounds(consumption, units)?;
    if !(price.is_finite() && price > 0.0) {
        return Err(Error::Domain(format!("price must be positive, got {price}")));
    }
    let offers: Vec<f64> = units.iter().zip(consumption).map(|(u, e)| u.e_gen - e).collect();
    let utilities: f64 = units
        .iter()
        .zip(consumption)
        .map(|(u, &e)| utility_unchecked(u, e, price))
        .sum();
    Ok(sfc_cost(&offers, price, e_req, p_sell) - utilities)
}

/// Price-free social cost: grid purchases for the uncovered requirement
/// minus consumption benefit. Surplus beyond the requirement earns nothing.
///
/// Equal to [`social_cost`] at any price whenever the purchase cap is slack.
pub fn planner_cost(consumption: &[f64], units: &[ResidentialUnit], e_req: f64, p_sell: f64) -> Result<f64> {
    check_bounds(consumption, units)?;
    Ok(planner_cost_unchecked(consumption, units, e_req, p_sell))
}

fn planner_cost_unchecked(consumption: &[f64], units: &[ResidentialUnit], e_req: f64, p_sell: f64) -> f64 {
    let supplied: f64 = units.iter().zip(consumption).map(|(u, e)| u.e_gen - e).sum();
    let benefit: f64 = units.iter().zip(consumption).map(|(u, &e)| u.k_pref * e.ln_1p()).sum();
    p_sell * (e_req - supplied.min(e_req)) - benefit
}

/// Social cost realized by an equilibrium outcome.
pub fn distributed_social_cost(
    result: &EquilibriumResult,
    units: &[ResidentialUnit],
    e_req: f64,
    p_sell: f64,
) -> Result<f64> {
    planner_cost(&result.consumption_star, units, e_req, p_sell)
}

fn response_at(units: &[ResidentialUnit], marginal: f64) -> Vec<f64> {
    units
        .iter()
        .map(|u| (u.k_pref / marginal - 1.0).min(u.e_gen).max(u.e_min))
        .collect()
}

fn shortfall(units: &[ResidentialUnit], consumption: &[f64], e_req: f64) -> f64 {
    let supplied: f64 = units.iter().zip(consumption).map(|(u, e)| u.e_gen - e).sum();
    e_req - supplied
}

/// Minimizes [`planner_cost`] over the box of feasible consumptions.
///
/// Every unit consumes until its marginal benefit `k / (1 + e)` falls to a
/// common marginal value of energy. That value is `p_sell` while the
/// requirement still draws on the grid; when the units could oversupply at
/// `p_sell`, it drops to the level at which supply exactly meets the
/// requirement, found by bisection.
pub fn centralized_optimum(units: &[ResidentialUnit], e_req: f64, p_sell: f64) -> SocialCostResult {
    let at_sell = response_at(units, p_sell);
    let consumption = if shortfall(units, &at_sell, e_req) >= 0.0 {
        at_sell
    } else {
        // At `lo` every unit consumes its whole generation, leaving the full
        // requirement uncovered; at `hi` supply exceeds it.
        let lo_bound = units
            .iter()
            .map(|u| u.k_pref / (1.0 + u.e_gen))
            .fold(f64::INFINITY, f64::min);
        let (mut lo, mut hi) = (0.5 * lo_bound, p_sell);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if shortfall(units, &response_at(units, mid), e_req) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        response_at(units, hi)
    };
    let social_cost = planner_cost_unchecked(&consumption, units, e_req, p_sell);
    SocialCostResult {
        consumption,
        social_cost,
    }
}
