//! Open-loop storage schedule driven by the announced ToU prices.
//!
//! Slots priced below the lower threshold charge, slots above the upper
//! threshold discharge. Each active slot takes a share of the target energy
//! proportional to how far its price sits past the threshold, capped by the
//! device rate (and, when discharging, by the equipment load of that slot).

use crate::domain::{StorageConfig, TouSchedule};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotClass {
    Charge,
    Discharge,
    Idle,
}

pub fn classify_slots(tou: &TouSchedule, cfg: &StorageConfig) -> Vec<SlotClass> {
    tou.prices()
        .iter()
        .map(|&p| {
            if p < cfg.p_min_threshold {
                SlotClass::Charge
            } else if p > cfg.p_max_threshold {
                SlotClass::Discharge
            } else {
                SlotClass::Idle
            }
        })
        .collect()
}

/// Per-slot charge amounts (kWh, non-negative); zero outside charge slots.
pub fn charge_schedule(tou: &TouSchedule, cfg: &StorageConfig, classes: &[SlotClass]) -> Result<Vec<f64>> {
    let prices = tou.prices();
    let target = cfg.q_tar_ch - cfg.q_ini;
    let spread: f64 = active(prices, classes, SlotClass::Charge)
        .map(|(_, p)| cfg.p_min_threshold - p)
        .sum();
    if target > 0.0 && spread <= 0.0 {
        return Err(Error::InfeasiblePlan(format!(
            "{target} kWh to charge but no slot is priced below {}",
            cfg.p_min_threshold
        )));
    }
    let mut out = vec![0.0; prices.len()];
    if target > 0.0 {
        for (t, p) in active(prices, classes, SlotClass::Charge) {
            let share = (cfg.p_min_threshold - p) * target * cfg.efficiency / spread;
            out[t] = share.min(cfg.max_rate);
        }
    }
    Ok(out)
}

/// Per-slot discharge amounts (kWh, non-positive); zero outside discharge
/// slots.
pub fn discharge_schedule(
    tou: &TouSchedule,
    cfg: &StorageConfig,
    classes: &[SlotClass],
    eqp_load: &[f64],
) -> Result<Vec<f64>> {
    let prices = tou.prices();
    if eqp_load.len() != prices.len() {
        return Err(Error::InvalidScenario(format!(
            "equipment load has {} slots, ToU schedule has {}",
            eqp_load.len(),
            prices.len()
        )));
    }
    let target = cfg.q_tar_ch - cfg.q_tar_dis;
    let spread: f64 = active(prices, classes, SlotClass::Discharge)
        .map(|(_, p)| p - cfg.p_max_threshold)
        .sum();
    let mut out = vec![0.0; prices.len()];
    if target > 0.0 && spread > 0.0 {
        for (t, p) in active(prices, classes, SlotClass::Discharge) {
            let share = (p - cfg.p_max_threshold) * target * cfg.efficiency / spread;
            out[t] = -share.min(cfg.max_rate).min(eqp_load[t]);
        }
    }
    Ok(out)
}

fn active<'a>(
    prices: &'a [f64],
    classes: &'a [SlotClass],
    which: SlotClass,
) -> impl Iterator<Item = (usize, f64)> + 'a {
    prices
        .iter()
        .zip(classes)
        .enumerate()
        .filter(move |(_, (_, c))| **c == which)
        .map(|(t, (p, _))| (t, *p))
}

/// Energy dropped from a slot because the state of charge would have left
/// `[0, capacity]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocClamp {
    pub slot: usize,
    pub requested: f64,
    pub applied: f64,
}

/// Clamps smaller than this are rounding noise and are not reported.
const CLAMP_REPORT_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SlotPlan {
    pub classes: Vec<SlotClass>,
    /// Signed storage energy per slot; positive charges.
    pub e_sd: Vec<f64>,
    pub soc_after: Vec<f64>,
    pub clamps: Vec<SocClamp>,
}

impl SlotPlan {
    /// A plan with no storage activity.
    pub fn idle(slots: usize, q_ini: f64) -> Self {
        Self {
            classes: vec![SlotClass::Idle; slots],
            e_sd: vec![0.0; slots],
            soc_after: vec![q_ini; slots],
            clamps: Vec::new(),
        }
    }
}

/// Integrates the state of charge from `q_ini`, trimming any slot that
/// would overfill or overdrain the device.
pub fn apply_soc(classes: Vec<SlotClass>, amounts: &[f64], cfg: &StorageConfig) -> SlotPlan {
    let mut soc = cfg.q_ini;
    let mut e_sd = Vec::with_capacity(amounts.len());
    let mut soc_after = Vec::with_capacity(amounts.len());
    let mut clamps = Vec::new();
    for (slot, &requested) in amounts.iter().enumerate() {
        let next = (soc + requested).clamp(0.0, cfg.capacity);
        let applied = next - soc;
        if (applied - requested).abs() > CLAMP_REPORT_THRESHOLD {
            clamps.push(SocClamp {
                slot,
                requested,
                applied,
            });
        }
        soc = next;
        e_sd.push(applied);
        soc_after.push(soc);
    }
    SlotPlan {
        classes,
        e_sd,
        soc_after,
        clamps,
    }
}

/// Classifies the day, computes both schedules and integrates the state of
/// charge.
pub fn plan_day(tou: &TouSchedule, cfg: &StorageConfig, eqp_load: &[f64]) -> Result<SlotPlan> {
    cfg.validate()?;
    let classes = classify_slots(tou, cfg);
    let charge = charge_schedule(tou, cfg, &classes)?;
    let discharge = discharge_schedule(tou, cfg, &classes, eqp_load)?;
    let amounts: Vec<f64> = charge.iter().zip(&discharge).map(|(c, d)| c + d).collect();
    Ok(apply_soc(classes, &amounts, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use SlotClass::*;

    fn cfg() -> StorageConfig {
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

    fn tou(p: &[f64]) -> TouSchedule {
        TouSchedule::new(p.to_vec()).unwrap()
    }

    #[test]
    fn classification_rule() {
        let c = classify_slots(&tou(&[30.0, 35.0, 42.0, 50.0, 55.0]), &cfg());
        assert_eq!(c, vec![Charge, Charge, Idle, Discharge, Discharge]);

        let single = StorageConfig {
            p_min_threshold: 42.0,
            p_max_threshold: 42.0,
            ..cfg()
        };
        let c = classify_slots(&tou(&[41.0, 42.0, 43.0]), &single);
        assert_eq!(c, vec![Charge, Idle, Discharge]);

        let c = classify_slots(&tou(&[41.0, 44.9, 40.0, 45.0]), &cfg());
        assert!(c.iter().all(|x| *x == Idle));
    }

    #[test]
    fn charge_examples() {
        // (10/15) * 30 * 0.9 = 18, (5/15) * 27 = 9
        let t = tou(&[30.0, 35.0]);
        let c = classify_slots(&t, &cfg());
        let amounts = charge_schedule(&t, &cfg(), &c).unwrap();
        assert!((amounts[0] - 18.0).abs() < 1e-9);
        assert!((amounts[1] - 9.0).abs() < 1e-9);

        let capped = StorageConfig {
            max_rate: 15.0,
            ..cfg()
        };
        let amounts = charge_schedule(&t, &capped, &c).unwrap();
        assert!((amounts[0] - 15.0).abs() < 1e-9);
        assert!((amounts[1] - 9.0).abs() < 1e-9);

        let flat = StorageConfig { q_tar_ch: 0.0, ..cfg() };
        assert_eq!(charge_schedule(&t, &flat, &c).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn charge_without_cheap_slots_is_infeasible() {
        let t = tou(&[50.0, 55.0]);
        let c = classify_slots(&t, &cfg());
        assert!(matches!(charge_schedule(&t, &cfg(), &c), Err(Error::InfeasiblePlan(_))));
    }

    #[test]
    fn discharge_examples() {
        let t = tou(&[50.0, 55.0]);
        let c = classify_slots(&t, &cfg());
        let d = discharge_schedule(&t, &cfg(), &c, &[20.0, 20.0]).unwrap();
        assert!((d[0] + 9.0).abs() < 1e-9);
        assert!((d[1] + 18.0).abs() < 1e-9);

        let d = discharge_schedule(&t, &cfg(), &c, &[5.0, 20.0]).unwrap();
        assert!((d[0] + 5.0).abs() < 1e-9);
        assert!((d[1] + 18.0).abs() < 1e-9);

        let flat = StorageConfig {
            q_tar_dis: 30.0,
            q_ini: 30.0,
            ..cfg()
        };
        assert_eq!(
            discharge_schedule(&t, &flat, &c, &[20.0, 20.0]).unwrap(),
            vec![0.0, 0.0]
        );

        assert!(discharge_schedule(&t, &cfg(), &c, &[20.0]).is_err());
    }

    #[test]
    fn soc_integration() {
        let plan = apply_soc(vec![Charge, Charge], &[18.0, 9.0], &cfg());
        assert_eq!(plan.soc_after, vec![18.0, 27.0]);
        assert!(plan.clamps.is_empty());

        let near_full = StorageConfig {
            q_ini: 90.0,
            q_tar_ch: 100.0,
            ..cfg()
        };
        let plan = apply_soc(vec![Charge], &[24.0], &near_full);
        assert_eq!(plan.e_sd, vec![10.0]);
        assert_eq!(plan.soc_after, vec![100.0]);
        assert_eq!(
            plan.clamps,
            vec![SocClamp {
                slot: 0,
                requested: 24.0,
                applied: 10.0
            }]
        );

        let empty = apply_soc(vec![Discharge], &[-5.0], &cfg());
        assert_eq!(empty.e_sd, vec![0.0]);
        assert_eq!(empty.clamps.len(), 1);

        let idle_cfg = StorageConfig {
            q_ini: 12.0,
            q_tar_ch: 30.0,
            ..cfg()
        };
        let plan = apply_soc(vec![Idle; 3], &[0.0; 3], &idle_cfg);
        assert_eq!(plan.soc_after, vec![12.0; 3]);
    }

    #[test]
    fn full_day_plan() {
        let t = tou(&[30.0, 35.0, 42.0, 50.0, 55.0]);
        let plan = plan_day(&t, &cfg(), &[100.0; 5]).unwrap();
        assert_eq!(plan.classes, vec![Charge, Charge, Idle, Discharge, Discharge]);
        assert!((plan.e_sd[0] - 18.0).abs() < 1e-9);
        assert!((plan.e_sd[4] + 18.0).abs() < 1e-9);
        assert!(plan.soc_after[4].abs() < 1e-9);
    }

    fn arb_day() -> impl Strategy<Value = (Vec<f64>, StorageConfig)> {
        (
            prop::collection::vec(20.0f64..70.0, 1..30),
            10.0f64..200.0,
            0.5f64..1.0,
            1.0f64..60.0,
            (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
            30.0f64..50.0,
            0.0f64..10.0,
        )
            .prop_map(|(prices, capacity, efficiency, max_rate, (a, b, c), p_min, gap)| {
                let mut levels = [a * capacity, b * capacity, c * capacity];
                levels.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let cfg = StorageConfig {
                    capacity,
                    efficiency,
                    max_rate,
                    q_ini: levels[1],
                    q_tar_ch: levels[2],
                    q_tar_dis: levels[0],
                    p_min_threshold: p_min,
                    p_max_threshold: p_min + gap,
                };
                (prices, cfg)
            })
    }

    proptest! {
        #[test]
        fn plan_invariants((prices, cfg) in arb_day(), load in 0.0f64..50.0) {
            let t = tou(&prices);
            let eqp = vec![load; prices.len()];
            let Ok(plan) = plan_day(&t, &cfg, &eqp) else {
                // Only legal failure: something to charge and no cheap slot.
                prop_assert!(cfg.q_tar_ch > cfg.q_ini);
                prop_assert!(prices.iter().all(|p| *p >= cfg.p_min_threshold));
                return Ok(());
            };
            for (t, ((class, e), soc)) in plan.classes.iter().zip(&plan.e_sd).zip(&plan.soc_after).enumerate() {
                prop_assert!(e.abs() <= cfg.max_rate + 1e-12);
                prop_assert!(*soc >= 0.0 && *soc <= cfg.capacity);
                match class {
                    Charge => prop_assert!(*e >= 0.0),
                    Discharge => {
                        prop_assert!(*e <= 0.0);
                        prop_assert!(-e <= eqp[t] + 1e-12);
                    }
                    Idle => prop_assert_eq!(*e, 0.0),
                }
            }
        }

        #[test]
        fn proportional_sums_telescope(
            cheap in prop::collection::vec(20.0f64..39.0, 1..8),
            dear in prop::collection::vec(46.0f64..70.0, 1..8),
            delta in 0.0f64..20.0,
        ) {
            // Rates large enough that no cap binds.
            let cfg = StorageConfig {
                capacity: 1000.0, max_rate: 1e6, q_ini: 100.0, q_tar_ch: 100.0 + delta,
                q_tar_dis: 50.0, ..cfg()
            };
            let prices: Vec<f64> = cheap.iter().chain(&dear).copied().collect();
            let t = tou(&prices);
            let classes = classify_slots(&t, &cfg);
            let ch = charge_schedule(&t, &cfg, &classes).unwrap();
            let dis = discharge_schedule(&t, &cfg, &classes, &vec![1e6; prices.len()]).unwrap();
            let ch_sum: f64 = ch.iter().sum();
            let dis_sum: f64 = dis.iter().map(|x| -x).sum();
            prop_assert!((ch_sum - cfg.efficiency * delta).abs() < 1e-9);
            prop_assert!((dis_sum - cfg.efficiency * (cfg.q_tar_ch - cfg.q_tar_dis)).abs() < 1e-9);

            // Cheaper slots charge more; dearer slots discharge more.
            for i in 0..prices.len() {
                for j in 0..prices.len() {
                    if classes[i] == Charge && classes[j] == Charge && prices[i] < prices[j] {
                        prop_assert!(ch[i] >= ch[j]);
                    }
                    if classes[i] == Discharge && classes[j] == Discharge && prices[i] > prices[j] {
                        prop_assert!(-dis[i] >= -dis[j]);
                    }
                }
            }
        }
    }
}
