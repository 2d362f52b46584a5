//! Scenario files: TOML documents with mandatory unit suffixes on every
//! dimensioned key. See `docs/scenario-format.md` for the grammar.

use std::path::Path;

use gridstack_core::sim::SamplingRanges;
use gridstack_core::{
    validate_scenario, Eligibility, GridTariff, ResidentialUnit, Scenario, SfcDemand, StorageConfig, SweepConfig,
    TouSchedule,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{line}:{column}: unit mismatch for `{key}`, expected `{expected}`")]
    UnitMismatch {
        line: usize,
        column: usize,
        key: String,
        expected: String,
    },

    #[error(transparent)]
    Invalid(#[from] gridstack_core::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excess_to_grid: Option<bool>,
    pub tariff: TariffSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<DemandSection>,
    #[serde(default, rename = "unit", skip_serializing_if = "Vec::is_empty")]
    pub units: Vec<UnitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tou: Option<TouSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<StorageSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct TariffSection {
    pub p_buy_c_per_kWh: f64,
    pub p_sell_c_per_kWh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct DemandSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_req_kWh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eqp_load_kWh: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct UnitSection {
    pub id: u32,
    pub k_pref_c: f64,
    pub e_gen_kWh: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_min_kWh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation_kWh: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct TouSection {
    pub prices_c_per_kWh: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct StorageSection {
    pub capacity_kWh: f64,
    pub efficiency: f64,
    pub max_rate_kWh: f64,
    pub q_ini_kWh: f64,
    pub q_tar_ch_kWh: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_tar_dis_kWh: Option<f64>,
    pub p_min_threshold_c_per_kWh: f64,
    pub p_max_threshold_c_per_kWh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_step_c_per_kWh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_c_per_kWh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct SamplingSection {
    pub n_units: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_pref_c: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_gen_kWh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_kWh: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct StudySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_req_values_kWh: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_values_kWh: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_sell_values_c_per_kWh: Option<Vec<f64>>,
}

/// Random-draw settings for sampled runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub n_units: usize,
    pub ranges: SamplingRanges,
}

/// Value lists for the sweep commands.
#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub n_values: Vec<usize>,
    pub e_req_values: Vec<f64>,
    pub capacity_values: Vec<f64>,
    pub p_sell_values: Vec<f64>,
}

impl Default for Study {
    fn default() -> Self {
        Self {
            n_values: vec![5, 10, 15, 20, 25],
            e_req_values: vec![60.0, 70.0, 80.0, 90.0, 100.0],
            capacity_values: vec![25.0, 50.0, 75.0, 100.0],
            p_sell_values: vec![60.0, 85.0],
        }
    }
}

/// A parsed and validated scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub scenario: Scenario,
    pub sampling: Option<Sampling>,
    pub study: Study,
    /// Eligibility of the explicit units against the file's tariff.
    pub eligibility: Eligibility,
}

const SUFFIXES: [&str; 3] = ["_c_per_kWh", "_kWh", "_c"];

const KNOWN_KEYS: [&str; 28] = [
    "p_buy_c_per_kWh",
    "p_sell_c_per_kWh",
    "e_req_kWh",
    "eqp_load_kWh",
    "k_pref_c",
    "e_gen_kWh",
    "e_min_kWh",
    "generation_kWh",
    "prices_c_per_kWh",
    "capacity_kWh",
    "max_rate_kWh",
    "q_ini_kWh",
    "q_tar_ch_kWh",
    "q_tar_dis_kWh",
    "p_min_threshold_c_per_kWh",
    "p_max_threshold_c_per_kWh",
    "price_step_c_per_kWh",
    "alpha_c_per_kWh",
    "demand_kWh",
    "e_req_values_kWh",
    "capacity_values_kWh",
    "p_sell_values_c_per_kWh",
    "efficiency",
    "n_units",
    "n_values",
    "seed",
    "excess_to_grid",
    "id",
];

fn strip_suffix(key: &str) -> Option<&str> {
    SUFFIXES.iter().find_map(|s| key.strip_suffix(s))
}

/// Flags keys whose stem is known but whose unit suffix is wrong or absent.
fn check_units(text: &str) -> Result<(), ScenarioError> {
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if trimmed.starts_with('#') || trimmed.starts_with('[') {
            continue;
        }
        let Some((key, _)) = trimmed.split_once('=') else {
            continue;
        };
        let key = key.trim();
        if key.is_empty() || KNOWN_KEYS.contains(&key) {
            continue;
        }
        // Longest matching stem wins, so `e_req_values_MWh` maps to
        // `e_req_values_kWh` rather than `e_req_kWh`.
        let expected = KNOWN_KEYS
            .iter()
            .filter_map(|known| strip_suffix(known).map(|stem| (known, stem)))
            .filter(|(_, stem)| key == *stem || key.strip_prefix(stem).is_some_and(|rest| rest.starts_with('_')))
            .max_by_key(|(_, stem)| stem.len())
            .map(|(known, _)| known);
        if let Some(expected) = expected {
            return Err(ScenarioError::UnitMismatch {
                line: idx + 1,
                column: line.len() - trimmed.len() + 1,
                key: key.to_string(),
                expected: expected.to_string(),
            });
        }
    }
    Ok(())
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
    (line, column)
}

pub fn parse_file(text: &str) -> Result<ScenarioFile, ScenarioError> {
    check_units(text)?;
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ScenarioError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

pub fn emit(file: &ScenarioFile) -> String {
    toml::to_string(file).expect("scenario files contain only serializable values")
}

impl ScenarioFile {
    /// Builds and validates the core scenario.
    pub fn load(self) -> Result<LoadedScenario, ScenarioError> {
        let tariff = GridTariff {
            p_buy: self.tariff.p_buy_c_per_kWh,
            p_sell: self.tariff.p_sell_c_per_kWh,
        };
        let tou = self
            .tou
            .as_ref()
            .map(|t| TouSchedule::new(t.prices_c_per_kWh.clone()))
            .transpose()?;

        let demand = match &self.demand {
            Some(d) => SfcDemand {
                e_req: d.e_req_kWh.unwrap_or(0.0),
                eqp_load: d.eqp_load_kWh.clone().unwrap_or_default(),
            },
            None => SfcDemand::default(),
        };

        let units = self
            .units
            .iter()
            .map(|u| ResidentialUnit {
                id: u.id,
                k_pref: u.k_pref_c,
                e_gen: u.e_gen_kWh,
                e_min: u.e_min_kWh.unwrap_or(0.0),
            })
            .collect::<Vec<_>>();
        let generation = if self.units.iter().any(|u| u.generation_kWh.is_some()) {
            let slots = tou.as_ref().map_or(1, TouSchedule::len);
            Some(
                self.units
                    .iter()
                    .map(|u| u.generation_kWh.clone().unwrap_or_else(|| vec![u.e_gen_kWh; slots]))
                    .collect(),
            )
        } else {
            None
        };

        let storage = self.storage.as_ref().map(|s| StorageConfig {
            capacity: s.capacity_kWh,
            efficiency: s.efficiency,
            max_rate: s.max_rate_kWh,
            q_ini: s.q_ini_kWh,
            q_tar_ch: s.q_tar_ch_kWh,
            q_tar_dis: s.q_tar_dis_kWh.unwrap_or(s.q_ini_kWh),
            p_min_threshold: s.p_min_threshold_c_per_kWh,
            p_max_threshold: s.p_max_threshold_c_per_kWh,
        });

        let defaults = SweepConfig::default();
        let sweep = SweepConfig {
            price_step: self
                .sweep
                .as_ref()
                .and_then(|s| s.price_step_c_per_kWh)
                .unwrap_or(defaults.price_step),
            alpha: self
                .sweep
                .as_ref()
                .and_then(|s| s.alpha_c_per_kWh)
                .unwrap_or(defaults.alpha),
        };

        let scenario = Scenario {
            units,
            generation,
            tariff,
            tou,
            demand,
            storage,
            sweep,
            seed: self.seed.unwrap_or(0),
            excess_to_grid: self.excess_to_grid.unwrap_or(false),
        };
        scenario.validate()?;
        let eligibility = validate_scenario(&scenario.units, &scenario.tariff, &scenario.demand)?;

        let sampling = self.sampling.as_ref().map(|s| {
            let base = SamplingRanges::default();
            Sampling {
                n_units: s.n_units,
                ranges: SamplingRanges {
                    k_pref: s.k_pref_c.map_or(base.k_pref, |[a, b]| (a, b)),
                    e_gen: s.e_gen_kWh.unwrap_or(base.e_gen),
                    demand: s.demand_kWh.map(|[a, b]| (a, b)),
                },
            }
        });
        if let Some(s) = &sampling {
            let (lo, hi) = s.ranges.k_pref;
            let ordered = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo <= hi;
            if !(ordered(lo, hi) && lo > 0.0) {
                return Err(gridstack_core::Error::InvalidScenario(format!(
                    "sampling k range [{lo}, {hi}] must be positive and ordered"
                ))
                .into());
            }
            if let Some((a, b)) = s.ranges.demand {
                if !(ordered(a, b) && a >= 0.0) {
                    return Err(gridstack_core::Error::InvalidScenario(format!(
                        "sampling demand range [{a}, {b}] must be non-negative and ordered"
                    ))
                    .into());
                }
            }
            if !(s.ranges.e_gen.is_finite() && s.ranges.e_gen >= 0.0) {
                return Err(
                    gridstack_core::Error::InvalidScenario("sampling e_gen must be non-negative".into()).into(),
                );
            }
        }

        let mut study = Study::default();
        if let Some(s) = &self.study {
            if let Some(v) = &s.n_values {
                study.n_values = v.clone();
            }
            if let Some(v) = &s.e_req_values_kWh {
                study.e_req_values = v.clone();
            }
            if let Some(v) = &s.capacity_values_kWh {
                study.capacity_values = v.clone();
            }
            if let Some(v) = &s.p_sell_values_c_per_kWh {
                study.p_sell_values = v.clone();
            }
        }

        Ok(LoadedScenario {
            file: self,
            scenario,
            sampling,
            study,
            eligibility,
        })
    }
}

pub fn parse_str(text: &str) -> Result<LoadedScenario, ScenarioError> {
    parse_file(text)?.load()
}

pub fn parse_scenario(path: &Path) -> Result<LoadedScenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text)
}
