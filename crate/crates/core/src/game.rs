//! Single-slot leader-follower game.
//!
//! The facility controller (leader) posts a per-kWh price; each residential
//! unit (follower) answers with the consumption that maximizes
//!
//! ```text
//! U_n(e) = k_n ln(1 + e) + p (E_gen_n - e),    e in [e_min_n, E_gen_n]
//! ```
//!
//! and offers the rest of its generation. The leader pays `p` for what it
//! buys from the units (capped at its requirement) and the grid sale price
//! for the remainder. The equilibrium is found by sweeping the price from the
//! grid buy-back price up to the grid sale price and keeping the cheapest
//! point, where ties go to the highest price.

use crate::domain::{GridTariff, ResidentialUnit, SweepConfig, DEFAULT_PRICE_STEP};
use crate::error::{Error, Result};

/// Follower payoff: consumption benefit plus revenue from the surplus.
pub fn utility(unit: &ResidentialUnit, e: f64, price: f64) -> Result<f64> {
    if !(price.is_finite() && price > 0.0) {
        return Err(Error::Domain(format!("price must be positive, got {price}")));
    }
    if !(e >= unit.e_min && e <= unit.e_gen) {
        return Err(Error::Domain(format!(
            "consumption {e} outside [{}, {}] for unit {}",
            unit.e_min, unit.e_gen, unit.id
        )));
    }
    Ok(utility_unchecked(unit, e, price))
}

#[inline]
pub(crate) fn utility_unchecked(unit: &ResidentialUnit, e: f64, price: f64) -> f64 {
    unit.k_pref * e.ln_1p() + price * (unit.e_gen - e)
}

/// Utility-maximizing consumption at `price`.
///
/// The stationary point `k/p - 1` projected onto `[e_min, e_gen]` is the
/// exact maximizer because the utility is strictly concave in `e`.
pub fn best_response(unit: &ResidentialUnit, price: f64) -> Result<f64> {
    if !(price.is_finite() && price > 0.0) {
        return Err(Error::Domain(format!("price must be positive, got {price}")));
    }
    if unit.e_min > unit.e_gen {
        return Err(Error::Domain(format!(
            "unit {} has e_min {} above e_gen {}",
            unit.id, unit.e_min, unit.e_gen
        )));
    }
    Ok(respond(unit, price))
}

#[inline]
pub(crate) fn respond(unit: &ResidentialUnit, price: f64) -> f64 {
    (unit.k_pref / price - 1.0).min(unit.e_gen).max(unit.e_min)
}

/// Leader cost for the given offers.
///
/// Purchases from the units are capped at `e_req`; the shortfall is bought
/// from the grid at `p_sell`.
pub fn sfc_cost(offers: &[f64], price: f64, e_req: f64, p_sell: f64) -> f64 {
    let supplied: f64 = offers.iter().sum();
    cost_for_supply(supplied, price, e_req, p_sell)
}

#[inline]
fn cost_for_supply(supplied: f64, price: f64, e_req: f64, p_sell: f64) -> f64 {
    let bought = supplied.min(e_req);
    price * bought + p_sell * (e_req - bought)
}

/// Leader cost when every unit plays its best response to `price`.
pub fn cost_at_price(units: &[ResidentialUnit], price: f64, e_req: f64, p_sell: f64) -> f64 {
    let supplied: f64 = units.iter().map(|u| u.e_gen - respond(u, price)).sum();
    cost_for_supply(supplied, price, e_req, p_sell)
}

/// Price that zeroes the derivative of the leader cost with unclamped best
/// responses substituted, floored at `p_buy + alpha`.
pub fn closed_form_price(units: &[ResidentialUnit], tariff: &GridTariff, alpha: f64) -> Result<f64> {
    if units.is_empty() {
        return Err(Error::Domain("closed-form price needs at least one unit".into()));
    }
    let k_sum: f64 = units.iter().map(|u| u.k_pref).sum();
    let gen_sum: f64 = units.iter().map(|u| u.e_gen).sum();
    let p = (tariff.p_sell * k_sum / (units.len() as f64 + gen_sum)).sqrt();
    Ok(if p > tariff.p_buy { p } else { tariff.p_buy + alpha })
}

/// Prices visited by the sweep: `p_buy + i * step` up to `p_sell`, with
/// `p_sell` itself appended when the step does not land on it.
pub fn price_grid(tariff: &GridTariff, step: f64) -> Vec<f64> {
    let span = tariff.p_sell - tariff.p_buy;
    let n = (span / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| tariff.p_buy + i as f64 * step).collect();
    let last = *grid.last().expect("grid has at least p_buy");
    if last > tariff.p_sell {
        *grid.last_mut().unwrap() = tariff.p_sell;
    } else if tariff.p_sell - last > 1e-9 * step {
        grid.push(tariff.p_sell);
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub price: f64,
    pub cost: f64,
    /// Whether this point replaced the best-so-far.
    pub recorded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub price_star: f64,
    /// Consumption per unit, aligned with the input unit order.
    pub consumption_star: Vec<f64>,
    pub offers_star: Vec<f64>,
    /// Minimized leader cost in cents.
    pub sfc_cost_star: f64,
    pub trace: Vec<TracePoint>,
}

impl EquilibriumResult {
    pub fn total_offer(&self) -> f64 {
        self.offers_star.iter().sum()
    }

    /// Best-so-far sequence of the sweep.
    pub fn improvements(&self) -> impl Iterator<Item = &TracePoint> {
        self.trace.iter().filter(|p| p.recorded)
    }
}

/// Runs the price sweep and returns the equilibrium.
///
/// The best-so-far starts at the grid-only cost `p_sell * e_req` and is
/// replaced whenever a price gives a cost that is less than or equal to it,
/// so the highest of several tying prices wins.
pub fn solve_equilibrium(
    units: &[ResidentialUnit],
    e_req: f64,
    tariff: &GridTariff,
    sweep: &SweepConfig,
) -> EquilibriumResult {
    let mut best_cost = tariff.p_sell * e_req;
    let mut best_price = tariff.p_buy;
    let grid = price_grid(tariff, sweep.price_step);
    let mut trace = Vec::with_capacity(grid.len());

    for price in grid {
        let cost = cost_at_price(units, price, e_req, tariff.p_sell);
        let recorded = cost <= best_cost;
        if recorded {
            best_cost = cost;
            best_price = price;
        }
        trace.push(TracePoint { price, cost, recorded });
    }

    let consumption_star: Vec<f64> = units.iter().map(|u| respond(u, best_price)).collect();
    let offers_star = units.iter().zip(&consumption_star).map(|(u, e)| u.e_gen - e).collect();

    EquilibriumResult {
        price_star: best_price,
        consumption_star,
        offers_star,
        sfc_cost_star: best_cost,
        trace,
    }
}

/// How each unit's offer is actually disposed of once the leader's purchase
/// cap is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSettlement {
    pub id: u32,
    pub sold_to_sfc: f64,
    pub sold_to_grid: f64,
    pub curtailed: f64,
    /// Cash received in cents.
    pub revenue: f64,
}

/// Allocates the leader's purchases pro rata across offers.
///
/// Energy beyond the leader's requirement is sold to the grid at the
/// buy-back price when `excess_to_grid` is set, and curtailed otherwise.
pub fn settle(
    result: &EquilibriumResult,
    units: &[ResidentialUnit],
    e_req: f64,
    tariff: &GridTariff,
    excess_to_grid: bool,
) -> Vec<UnitSettlement> {
    let supplied = result.total_offer();
    let share = if supplied > e_req { e_req / supplied } else { 1.0 };
    units
        .iter()
        .zip(&result.offers_star)
        .map(|(u, &offer)| {
            let sold_to_sfc = offer * share;
            let excess = offer - sold_to_sfc;
            let (sold_to_grid, curtailed) = if excess_to_grid { (excess, 0.0) } else { (0.0, excess) };
            UnitSettlement {
                id: u.id,
                sold_to_sfc,
                sold_to_grid,
                curtailed,
                revenue: result.price_star * sold_to_sfc + tariff.p_buy * sold_to_grid,
            }
        })
        .collect()
}

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Grids used to probe unilateral deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationGrid {
    /// Points across each unit's `[e_min, e_gen]`.
    pub energy_points: usize,
    /// Spacing of leader prices over `[p_buy, p_sell]`.
    pub price_step: f64,
}

impl Default for DeviationGrid {
    fn default() -> Self {
        Self {
            energy_points: 1000,
            price_step: DEFAULT_PRICE_STEP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOutcome {
    pub passed: bool,
    /// Largest gain found by deviating; non-positive when nothing beats the
    /// equilibrium.
    pub worst_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationReport {
    pub followers: CheckOutcome,
    pub leader: CheckOutcome,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.followers.passed && self.leader.passed
    }
}

/// Checks that no follower gains by changing consumption at the equilibrium
/// price and that no swept price lowers the leader cost.
pub fn verify_equilibrium(
    result: &EquilibriumResult,
    units: &[ResidentialUnit],
    e_req: f64,
    tariff: &GridTariff,
    grid: &DeviationGrid,
    tol: f64,
) -> VerificationReport {
    let mut follower_worst = f64::NEG_INFINITY;
    let points = grid.energy_points.max(2);
    for (unit, &e_star) in units.iter().zip(&result.consumption_star) {
        let at_star = utility_unchecked(unit, e_star, result.price_star);
        let span = unit.e_gen - unit.e_min;
        for i in 0..points {
            let e = unit.e_min + span * i as f64 / (points - 1) as f64;
            let gain = utility_unchecked(unit, e, result.price_star) - at_star;
            follower_worst = follower_worst.max(gain);
        }
    }
    if units.is_empty() {
        follower_worst = 0.0;
    }

    let mut leader_worst = f64::NEG_INFINITY;
    for price in price_grid(tariff, grid.price_step) {
        let cost = cost_at_price(units, price, e_req, tariff.p_sell);
        leader_worst = leader_worst.max(result.sfc_cost_star - cost);
    }

    VerificationReport {
        followers: CheckOutcome {
            passed: follower_worst <= tol,
            worst_violation: follower_worst,
        },
        leader: CheckOutcome {
            passed: leader_worst <= tol,
            worst_violation: leader_worst,
        },
    }
}

/// True iff every reported consumption equals the best response to the
/// equilibrium price, so no unit can claim a different amount consistent
/// with that price.
pub fn strategy_proof_check(result: &EquilibriumResult, units: &[ResidentialUnit]) -> bool {
    units.len() == result.consumption_star.len()
        && units
            .iter()
            .zip(&result.consumption_star)
            .all(|(u, &e)| best_response(u, result.price_star).is_ok_and(|br| br == e))
}
