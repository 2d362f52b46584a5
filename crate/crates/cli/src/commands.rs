//! Command dispatch. Each command writes one or more CSV files into the
//! output directory and reports whether its checks passed.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gridstack_core::game::{
    best_response, closed_form_price, settle, strategy_proof_check, utility, verify_equilibrium, DeviationGrid,
    DEFAULT_TOLERANCE,
};
use gridstack_core::sim::study::{
    capacity_sweep, centralized_gap, cost_vs_requirement, cost_vs_units, mean_gap_pct, seed_range,
};
use gridstack_core::sim::{baseline_cost, run_day, run_slot, sample_scenario, SamplingRanges, SlotMode};
use gridstack_core::Scenario;

use crate::report::{dollars, num, CsvReport};
use crate::scenario_file::{parse_scenario, LoadedScenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Solve the single-slot game and write the sweep trace.
    Equilibrium,
    /// Solve, then check follower and leader deviations.
    Verify,
    /// Run the three-case daily study.
    Day,
    /// Cost against the number of units.
    SweepN,
    /// Cost against the facility requirement.
    SweepReq,
    /// Daily savings against storage capacity.
    SweepCapacity,
    /// Distributed against centralized social cost.
    CentralizedGap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunFlags {
    /// First seed; the file's seed when absent.
    pub seed: Option<u64>,
    /// Price sweep step override (cents/kWh).
    pub step: Option<f64>,
    /// Number of consecutive seeds to run.
    pub seeds: usize,
    pub excess_to_grid: bool,
}

impl Default for RunFlags {
    fn default() -> Self {
        Self {
            seed: None,
            step: None,
            seeds: 1,
            excess_to_grid: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// False when a check failed; the process should exit non-zero.
    pub passed: bool,
}

/// Units drawn per seed when the file has neither units nor a sampling
/// section and the command needs a population.
const DEFAULT_SAMPLED_UNITS: usize = 5;
/// Population used for the requirement study unless the file says otherwise.
const DEFAULT_REQUIREMENT_UNITS: usize = 10;

struct Prepared {
    loaded: LoadedScenario,
    base: Scenario,
    seeds: Vec<u64>,
}

impl Prepared {
    fn new(path: &Path, flags: &RunFlags) -> Result<Self> {
        let loaded = parse_scenario(path).with_context(|| format!("loading {}", path.display()))?;
        let mut base = loaded.scenario.clone();
        if let Some(step) = flags.step {
            base.sweep.price_step = step;
        }
        if flags.excess_to_grid {
            base.excess_to_grid = true;
        }
        if flags.seeds == 0 {
            bail!("--seeds must be at least 1");
        }
        base.seed = flags.seed.unwrap_or(base.seed);
        base.validate()?;
        let seeds = seed_range(base.seed, flags.seeds);
        Ok(Self { loaded, base, seeds })
    }

    fn first_seed(&self) -> u64 {
        self.seeds[0]
    }

    fn ranges(&self) -> SamplingRanges {
        self.loaded.sampling.map_or_else(SamplingRanges::default, |s| s.ranges)
    }

    /// Ranges for single-slot studies, which never draw a demand profile.
    fn slot_ranges(&self) -> SamplingRanges {
        SamplingRanges {
            demand: None,
            ..self.ranges()
        }
    }

    fn sampled_units(&self, fallback: usize) -> usize {
        self.loaded.sampling.map_or(fallback, |s| s.n_units)
    }

    /// Explicit units win; otherwise units come from the sampling section.
    fn scenario_for(&self, seed: u64) -> Result<Scenario> {
        let s = match self.loaded.sampling {
            Some(sampling) if self.base.units.is_empty() => {
                sample_scenario(seed, sampling.n_units, &sampling.ranges, &self.base)
            }
            _ => Scenario {
                seed,
                ..self.base.clone()
            },
        };
        s.validate()?;
        Ok(s)
    }

    fn report(&self, columns: &[&'static str]) -> CsvReport {
        CsvReport::new(self.first_seed(), columns).with_seeds(&self.seeds)
    }
}

pub fn run(command: Command, scenario_path: &Path, out_dir: &Path, flags: &RunFlags) -> Result<Outcome> {
    let ctx = Prepared::new(scenario_path, flags)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let reports = match command {
        Command::Equilibrium => equilibrium(&ctx)?,
        Command::Verify => verify(&ctx)?,
        Command::Day => day(&ctx)?,
        Command::SweepN => sweep_n(&ctx)?,
        Command::SweepReq => sweep_req(&ctx)?,
        Command::SweepCapacity => sweep_capacity(&ctx)?,
        Command::CentralizedGap => gap(&ctx)?,
    };
    let mut files = Vec::with_capacity(reports.files.len());
    for (name, report) in reports.files {
        let path = out_dir.join(name);
        report
            .write(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        files.push(path);
    }
    Ok(Outcome {
        files,
        passed: reports.passed,
    })
}

struct Reports {
    files: Vec<(&'static str, CsvReport)>,
    passed: bool,
}

impl Reports {
    fn ok(files: Vec<(&'static str, CsvReport)>) -> Self {
        Self { files, passed: true }
    }
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

fn equilibrium(ctx: &Prepared) -> Result<Reports> {
    let mut trace = ctx.report(&["price_c_per_kWh", "sfc_cost_usd", "recorded"]);
    let mut units = ctx.report(&[
        "unit_id",
        "k_pref_c",
        "e_gen_kWh",
        "consumption_kWh",
        "offer_kWh",
        "sold_to_sfc_kWh",
        "sold_to_grid_kWh",
        "curtailed_kWh",
        "utility_usd",
        "revenue_usd",
    ]);
    let mut summary = ctx.report(&[
        "seed",
        "players",
        "dropped",
        "e_req_kWh",
        "grid_price_c_per_kWh",
        "price_star_c_per_kWh",
        "closed_form_c_per_kWh",
        "total_offer_kWh",
        "sfc_cost_usd",
        "baseline_usd",
        "reduction_pct",
    ]);

    for (i, &seed) in ctx.seeds.iter().enumerate() {
        let s = ctx.scenario_for(seed)?;
        let out = run_slot(&s, 0, 0.0, SlotMode::Game)?;
        let eq = out.equilibrium.as_ref().expect("game mode yields an equilibrium");
        let tariff = s.slot_tariff(0)?;
        if i == 0 {
            for p in &eq.trace {
                trace.row(vec![num(p.price), dollars(p.cost), flag(p.recorded)]);
            }
            let settled = settle(eq, &out.players, out.requirement, &tariff, s.excess_to_grid);
            for ((u, st), (&e, &o)) in out
                .players
                .iter()
                .zip(&settled)
                .zip(eq.consumption_star.iter().zip(&eq.offers_star))
            {
                units.row(vec![
                    u.id.to_string(),
                    num(u.k_pref),
                    num(u.e_gen),
                    num(e),
                    num(o),
                    num(st.sold_to_sfc),
                    num(st.sold_to_grid),
                    num(st.curtailed),
                    dollars(utility(u, e, eq.price_star)?),
                    dollars(st.revenue),
                ]);
            }
        }
        let baseline = baseline_cost(out.requirement, out.grid_price);
        let closed = closed_form_price(&out.players, &tariff, s.sweep.alpha).unwrap_or(f64::NAN);
        summary.row(vec![
            seed.to_string(),
            out.players.len().to_string(),
            out.dropped.len().to_string(),
            num(out.requirement),
            num(out.grid_price),
            num(eq.price_star),
            num(closed),
            num(eq.total_offer()),
            dollars(eq.sfc_cost_star),
            dollars(baseline),
            num(reduction_pct(baseline, eq.sfc_cost_star)),
        ]);
    }
    Ok(Reports::ok(vec![
        ("trace.csv", trace),
        ("equilibrium.csv", units),
        ("summary.csv", summary),
    ]))
}

fn reduction_pct(baseline: f64, cost: f64) -> f64 {
    if baseline > 0.0 {
        100.0 * (1.0 - cost / baseline)
    } else {
        0.0
    }
}

fn verify(ctx: &Prepared) -> Result<Reports> {
    let mut report = ctx.report(&["seed", "check", "passed", "worst_violation", "unit"]);
    let mut all = true;
    for &seed in &ctx.seeds {
        let s = ctx.scenario_for(seed)?;
        let out = run_slot(&s, 0, 0.0, SlotMode::Game)?;
        let eq = out.equilibrium.as_ref().expect("game mode yields an equilibrium");
        let tariff = s.slot_tariff(0)?;
        let grid = DeviationGrid {
            price_step: s.sweep.price_step,
            ..DeviationGrid::default()
        };
        let v = verify_equilibrium(eq, &out.players, out.requirement, &tariff, &grid, DEFAULT_TOLERANCE);
        let strategy = strategy_proof_check(eq, &out.players);
        let mut drift = 0.0_f64;
        for (u, &e) in out.players.iter().zip(&eq.consumption_star) {
            drift = drift.max((best_response(u, eq.price_star)? - e).abs());
        }
        for (name, passed, worst, unit) in [
            ("followers", v.followers.passed, v.followers.worst_violation, "c"),
            ("leader", v.leader.passed, v.leader.worst_violation, "c"),
            ("strategy_proof", strategy, drift, "kWh"),
        ] {
            all &= passed;
            report.row(vec![
                seed.to_string(),
                name.to_string(),
                flag(passed),
                num(worst),
                unit.to_string(),
            ]);
        }
    }
    Ok(Reports {
        files: vec![("verify.csv", report)],
        passed: all,
    })
}

fn day(ctx: &Prepared) -> Result<Reports> {
    if ctx.base.tou.is_none() {
        bail!("the day command needs a [tou] section");
    }
    let mut slots = ctx.report(&[
        "slot",
        "grid_price_c_per_kWh",
        "eqp_load_kWh",
        "e_sd_kWh",
        "soc_kWh",
        "requirement_kWh",
        "equilibrium_price_c_per_kWh",
        "case1_usd",
        "case2_usd",
        "case3_usd",
    ]);
    let mut totals = ctx.report(&[
        "seed",
        "case1_usd",
        "case2_usd",
        "case3_usd",
        "case3_vs_case1_pct",
        "case3_vs_case2_pct",
    ]);
    let mut sums = [0.0; 3];
    for (i, &seed) in ctx.seeds.iter().enumerate() {
        let day = run_day(&ctx.scenario_for(seed)?)?;
        if i == 0 {
            for r in &day.slots {
                slots.row(vec![
                    r.slot.to_string(),
                    num(r.grid_price),
                    num(r.eqp_load),
                    num(r.e_sd),
                    num(r.soc_after),
                    num(r.requirement),
                    num(r.equilibrium_price),
                    dollars(r.cost[0]),
                    dollars(r.cost[1]),
                    dollars(r.cost[2]),
                ]);
            }
        }
        for (acc, t) in sums.iter_mut().zip(day.totals) {
            *acc += t;
        }
        totals.row(totals_row(seed.to_string(), day.totals));
    }
    if ctx.seeds.len() > 1 {
        let n = ctx.seeds.len() as f64;
        totals.row(totals_row("mean".to_string(), sums.map(|s| s / n)));
    }
    Ok(Reports::ok(vec![("day.csv", slots), ("day_totals.csv", totals)]))
}

fn totals_row(label: String, t: [f64; 3]) -> Vec<String> {
    vec![
        label,
        dollars(t[0]),
        dollars(t[1]),
        dollars(t[2]),
        num(reduction_pct(t[0], t[2])),
        num(reduction_pct(t[1], t[2])),
    ]
}

fn sweep_n(ctx: &Prepared) -> Result<Reports> {
    let rows = cost_vs_units(&ctx.base, &ctx.slot_ranges(), &ctx.loaded.study.n_values, &ctx.seeds)?;
    let mut report = ctx.report(&["n_units", "baseline_usd", "proposed_usd", "reduction_pct"]);
    for r in rows {
        report.row(vec![
            (r.x as usize).to_string(),
            dollars(r.baseline),
            dollars(r.proposed_mean()),
            num(r.reduction_pct()),
        ]);
    }
    Ok(Reports::ok(vec![("sweep_n.csv", report)]))
}

fn sweep_req(ctx: &Prepared) -> Result<Reports> {
    let rows = cost_vs_requirement(
        &ctx.base,
        &ctx.slot_ranges(),
        ctx.sampled_units(DEFAULT_REQUIREMENT_UNITS),
        &ctx.loaded.study.e_req_values,
        &ctx.seeds,
    )?;
    let mut report = ctx.report(&["e_req_kWh", "baseline_usd", "proposed_usd", "reduction_pct"]);
    for r in rows {
        report.row(vec![
            num(r.x),
            dollars(r.baseline),
            dollars(r.proposed_mean()),
            num(r.reduction_pct()),
        ]);
    }
    Ok(Reports::ok(vec![("sweep_req.csv", report)]))
}

fn sweep_capacity(ctx: &Prepared) -> Result<Reports> {
    let rows = capacity_sweep(
        &ctx.base,
        &ctx.ranges(),
        ctx.sampled_units(DEFAULT_SAMPLED_UNITS),
        &ctx.loaded.study.capacity_values,
        &ctx.seeds,
    )?;
    let mut report = ctx.report(&[
        "capacity_kWh",
        "case1_usd",
        "case2_usd",
        "case3_usd",
        "savings_usd",
        "savings_pct",
    ]);
    for r in rows {
        let t = r.mean_totals();
        report.row(vec![
            num(r.capacity),
            dollars(t[0]),
            dollars(t[1]),
            dollars(t[2]),
            dollars(t[0] - t[2]),
            num(reduction_pct(t[0], t[2])),
        ]);
    }
    Ok(Reports::ok(vec![("sweep_capacity.csv", report)]))
}

fn gap(ctx: &Prepared) -> Result<Reports> {
    let study = &ctx.loaded.study;
    let rows = centralized_gap(
        &ctx.base,
        &ctx.slot_ranges(),
        &study.n_values,
        &study.p_sell_values,
        &ctx.seeds,
    )?;
    let mut detail = ctx.report(&[
        "p_sell_c_per_kWh",
        "n_units",
        "distributed_usd",
        "centralized_usd",
        "gap_pct",
    ]);
    for r in &rows {
        detail.row(vec![
            num(r.p_sell),
            r.n_units.to_string(),
            dollars(r.distributed_mean()),
            dollars(r.centralized_mean()),
            num(r.gap_pct()),
        ]);
    }
    let mut summary = ctx.report(&["p_sell_c_per_kWh", "mean_gap_pct"]);
    for &p in &study.p_sell_values {
        summary.row(vec![num(p), num(mean_gap_pct(&rows, p))]);
    }
    let ordered = rows
        .iter()
        .all(|r| r.distributed.iter().zip(&r.centralized).all(|(d, c)| c <= d));
    Ok(Reports {
        files: vec![
            ("centralized_gap.csv", detail),
            ("centralized_gap_summary.csv", summary),
        ],
        passed: ordered,
    })
}
