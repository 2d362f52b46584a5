//! Value types shared by every layer, and scenario eligibility screening.
//!
//! Canonical units: energy in kWh, prices in cents/kWh, costs in cents.
//! Conversion to dollars happens only when reports are emitted.

use crate::error::{Error, Result};

/// Cents per dollar, used only at report emission.
pub const CENTS_PER_DOLLAR: f64 = 100.0;

pub fn cents_to_dollars(cents: f64) -> f64 {
    cents / CENTS_PER_DOLLAR
}

/// A residential unit with local generation that plays as a follower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidentialUnit {
    pub id: u32,
    /// Preference weight on consumption, in cents.
    pub k_pref: f64,
    /// Energy generated during the slot (kWh).
    pub e_gen: f64,
    /// Essential load the unit must consume (kWh).
    pub e_min: f64,
}

impl ResidentialUnit {
    pub fn new(id: u32, k_pref: f64, e_gen: f64, e_min: f64) -> Result<Self> {
        let unit = Self {
            id,
            k_pref,
            e_gen,
            e_min,
        };
        unit.validate()?;
        Ok(unit)
    }

    /// Unit with no essential load.
    pub fn with_generation(id: u32, k_pref: f64, e_gen: f64) -> Result<Self> {
        Self::new(id, k_pref, e_gen, 0.0)
    }

    /// Checks field ranges. `e_gen <= e_min` is allowed here; such units
    /// are screened out by [`validate_scenario`].
    pub fn validate(&self) -> Result<()> {
        if !(self.k_pref.is_finite() && self.k_pref > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "unit {}: k_pref must be positive, got {}",
                self.id, self.k_pref
            )));
        }
        if !(self.e_gen.is_finite() && self.e_gen >= 0.0) {
            return Err(Error::InvalidScenario(format!(
                "unit {}: e_gen must be non-negative, got {}",
                self.id, self.e_gen
            )));
        }
        if !(self.e_min.is_finite() && self.e_min >= 0.0) {
            return Err(Error::InvalidScenario(format!(
                "unit {}: e_min must be non-negative, got {}",
                self.id, self.e_min
            )));
        }
        Ok(())
    }

    /// Returns a copy generating `e_gen` in the current slot.
    pub fn at_generation(&self, e_gen: f64) -> Self {
        Self { e_gen, ..*self }
    }
}

/// Grid buy-back and sale prices (cents/kWh).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridTariff {
    pub p_buy: f64,
    pub p_sell: f64,
}

impl GridTariff {
    pub fn new(p_buy: f64, p_sell: f64) -> Result<Self> {
        let tariff = Self { p_buy, p_sell };
        tariff.validate()?;
        Ok(tariff)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.p_buy.is_finite() && self.p_sell.is_finite() && self.p_buy > 0.0 && self.p_buy < self.p_sell;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!(
                "tariff requires 0 < p_buy < p_sell, got p_buy={} p_sell={}",
                self.p_buy, self.p_sell
            )))
        }
    }

    /// Same buy-back price, different sale price (one ToU slot).
    pub fn with_sell_price(&self, p_sell: f64) -> Result<Self> {
        Self::new(self.p_buy, p_sell)
    }
}

/// Hourly grid sale prices announced ahead of the day.
#[derive(Debug, Clone, PartialEq)]
pub struct TouSchedule {
    prices: Vec<f64>,
}

impl TouSchedule {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if prices.is_empty() {
            return Err(Error::InvalidScenario("ToU schedule has no slots".into()));
        }
        if let Some((t, p)) = prices.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidScenario(format!(
                "ToU price at slot {t} must be positive, got {p}"
            )));
        }
        Ok(Self { prices })
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Energy the shared facility needs: a single-slot requirement and/or a
/// per-slot equipment load for day runs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SfcDemand {
    pub e_req: f64,
    pub eqp_load: Vec<f64>,
}

impl SfcDemand {
    pub fn single(e_req: f64) -> Self {
        Self {
            e_req,
            eqp_load: Vec::new(),
        }
    }

    pub fn day(eqp_load: Vec<f64>) -> Self {
        Self { e_req: 0.0, eqp_load }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |x: f64| !(x.is_finite() && x >= 0.0);
        if bad(self.e_req) {
            return Err(Error::InvalidScenario(format!(
                "required energy must be non-negative, got {}",
                self.e_req
            )));
        }
        if let Some((t, x)) = self.eqp_load.iter().enumerate().find(|(_, x)| bad(**x)) {
            return Err(Error::InvalidScenario(format!(
                "equipment load at slot {t} must be non-negative, got {x}"
            )));
        }
        Ok(())
    }
}

/// The facility's storage device and its ToU thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageConfig {
    pub capacity: f64,
    /// Efficiency in (0, 1].
    pub efficiency: f64,
    /// Maximum charge or discharge per slot (kWh).
    pub max_rate: f64,
    pub q_ini: f64,
    pub q_tar_ch: f64,
    pub q_tar_dis: f64,
    /// Charge while the slot price is strictly below this.
    pub p_min_threshold: f64,
    /// Discharge while the slot price is strictly above this.
    pub p_max_threshold: f64,
}

impl StorageConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidScenario(msg));
        let all_finite = [
            self.capacity,
            self.efficiency,
            self.max_rate,
            self.q_ini,
            self.q_tar_ch,
            self.q_tar_dis,
            self.p_min_threshold,
            self.p_max_threshold,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !all_finite {
            return fail("storage parameters must be finite".into());
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return fail(format!("efficiency must lie in (0, 1], got {}", self.efficiency));
        }
        if !(0.0 <= self.q_tar_dis
            && self.q_tar_dis <= self.q_ini
            && self.q_ini <= self.q_tar_ch
            && self.q_tar_ch <= self.capacity)
        {
            return fail(format!(
                "storage levels must satisfy 0 <= q_tar_dis ({}) <= q_ini ({}) <= q_tar_ch ({}) <= capacity ({})",
                self.q_tar_dis, self.q_ini, self.q_tar_ch, self.capacity
            ));
        }
        if self.max_rate <= 0.0 {
            return fail(format!("max_rate must be positive, got {}", self.max_rate));
        }
        if !(0.0 < self.p_min_threshold && self.p_min_threshold <= self.p_max_threshold) {
            return fail(format!(
                "thresholds must satisfy 0 < p_min ({}) <= p_max ({})",
                self.p_min_threshold, self.p_max_threshold
            ));
        }
        Ok(())
    }

    /// Scales capacity and all state-of-charge levels by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            capacity: self.capacity * factor,
            q_ini: self.q_ini * factor,
            q_tar_ch: self.q_tar_ch * factor,
            q_tar_dis: self.q_tar_dis * factor,
            ..*self
        }
    }
}

pub const DEFAULT_PRICE_STEP: f64 = 0.01;
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Price sweep granularity and the floor offset above the buy-back price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub price_step: f64,
    pub alpha: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            price_step: DEFAULT_PRICE_STEP,
            alpha: DEFAULT_ALPHA,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.price_step.is_finite() && self.price_step > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "price_step must be positive, got {}",
                self.price_step
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DropReason {
    /// Generation does not exceed the essential load.
    NoSurplus,
    /// `k_pref` below `p_sell * (1 + e_min)`.
    PreferenceTooLow { required: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroppedUnit {
    pub id: u32,
    pub reason: DropReason,
}

/// Units admitted to play plus the ones screened out.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Eligibility {
    pub eligible: Vec<ResidentialUnit>,
    pub dropped: Vec<DroppedUnit>,
}

/// Screens units before play.
///
/// A unit is eligible when it has surplus generation (`e_gen > e_min`) and
/// its preference is large enough that the unclamped best response never
/// falls below the essential load anywhere in `[p_buy, p_sell]`, i.e.
/// `k_pref >= p_sell * (1 + e_min)`.
pub fn validate_scenario(units: &[ResidentialUnit], tariff: &GridTariff, demand: &SfcDemand) -> Result<Eligibility> {
    tariff.validate()?;
    demand.validate()?;

    let mut out = Eligibility::default();
    for unit in units {
        unit.validate()?;
        let required = tariff.p_sell * (1.0 + unit.e_min);
        let reason = if unit.e_gen <= unit.e_min {
            Some(DropReason::NoSurplus)
        } else if unit.k_pref < required {
            Some(DropReason::PreferenceTooLow { required })
        } else {
            None
        };
        match reason {
            None => out.eligible.push(*unit),
            Some(reason) => out.dropped.push(DroppedUnit { id: unit.id, reason }),
        }
    }
    Ok(out)
}
