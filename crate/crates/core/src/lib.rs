//! Leader-follower energy management for a shared facility controller and
//! residential units with local generation.
//!
//! The controller posts a price for surplus energy, units respond by
//! choosing their own consumption, and the controller covers whatever is
//! left from the grid. On top of the single-slot game, a storage device is
//! charged and discharged against a time-of-use tariff over a day.

pub mod centralized;
pub mod domain;
pub mod error;
pub mod game;
pub mod sim;
pub mod storage;

pub use domain::{
    cents_to_dollars, validate_scenario, DropReason, DroppedUnit, Eligibility, GridTariff, ResidentialUnit, SfcDemand,
    StorageConfig, SweepConfig, TouSchedule,
};
pub use error::{Error, Result};
pub use game::{EquilibriumResult, TracePoint};
pub use sim::{DayReport, Scenario};
pub use storage::{SlotClass, SlotPlan};
