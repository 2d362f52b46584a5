use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gridstack_cli::parse_scenario;
use gridstack_core::sim::{presets, sample_scenario};

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn gridstack(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridstack"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn single_slot_file_matches_preset() {
    let loaded = parse_scenario(&scenarios().join("single_slot.toml")).unwrap();
    let sampling = loaded.sampling.unwrap();
    assert_eq!(sampling.n_units, 5);
    assert_eq!(sampling.ranges.e_gen, 10.0);
    assert_eq!(loaded.scenario.demand.e_req, 50.0);
    assert_eq!(loaded.scenario.tariff.p_sell, 60.0);
    assert_eq!(loaded.scenario.tariff.p_buy, 8.45);

    let from_file = sample_scenario(1, 5, &sampling.ranges, &loaded.scenario);
    let from_preset = sample_scenario(1, 5, &sampling.ranges, &presets::single_slot());
    assert_eq!(from_file, from_preset);
}

#[test]
fn every_bundled_scenario_parses() {
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            parse_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}

#[test]
fn equilibrium_trace_is_ascending() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("single_slot.toml");
    let out = gridstack(&["equilibrium", scenario.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let trace = data_rows(&dir.path().join("trace.csv"));
    let prices = column(&trace, 0);
    assert!(prices.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(prices[0], 8.45);
    assert_eq!(*prices.last().unwrap(), 60.0);

    let summary = data_rows(&dir.path().join("summary.csv"));
    let star: f64 = summary[0][5].parse().unwrap();
    let recorded: Vec<f64> = trace
        .iter()
        .filter(|r| r[2] == "1")
        .map(|r| r[0].parse().unwrap())
        .collect();
    assert_eq!(*recorded.last().unwrap(), star);
}

#[test]
fn verify_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    for file in ["single_slot.toml", "explicit_units.toml"] {
        let scenario = scenarios().join(file);
        let out = gridstack(&["verify", scenario.to_str().unwrap(), "--seeds", "5"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let rows = data_rows(&dir.path().join("verify.csv"));
        assert_eq!(rows.len(), 15);
        assert!(rows.iter().all(|r| r[2] == "1"));
    }
}

#[test]
fn header_and_number_format() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("day.toml");
    let out = gridstack(&["day", scenario.to_str().unwrap(), "--seed", "42"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(dir.path().join("day.csv")).unwrap();
    assert!(!text.contains('\r'));
    let first = text.lines().next().unwrap();
    assert_eq!(first, format!("# seed=42 version={}", env!("CARGO_PKG_VERSION")));

    let rows = data_rows(&dir.path().join("day.csv"));
    assert_eq!(rows.len(), 24);
    for cell in rows.iter().flatten() {
        if let Some((_, frac)) = cell.split_once('.') {
            assert_eq!(frac.len(), 6, "{cell}");
        }
    }
}

#[test]
fn step_flag_changes_sweep_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("single_slot.toml");
    let out = gridstack(&["equilibrium", scenario.to_str().unwrap(), "--step", "1"], dir.path());
    assert!(out.status.success());
    // 8.45, 9.45, ..., 59.45, then 60.
    assert_eq!(data_rows(&dir.path().join("trace.csv")).len(), 53);
}

#[test]
fn excess_flag_routes_surplus_to_grid() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("explicit_units.toml"))
        .unwrap()
        .replace("excess_to_grid = true\n", "")
        .replace("e_req_kWh = 20.0", "e_req_kWh = 5.0");
    let path = dir.path().join("small.toml");
    std::fs::write(&path, text).unwrap();

    let curtailed = dir.path().join("curtailed");
    assert!(gridstack(&["equilibrium", path.to_str().unwrap()], &curtailed)
        .status
        .success());
    let rows = data_rows(&curtailed.join("equilibrium.csv"));
    assert!(column(&rows, 6).iter().all(|&g| g == 0.0));
    assert!(column(&rows, 7).iter().sum::<f64>() > 0.0);

    let exported = dir.path().join("exported");
    let out = gridstack(&["equilibrium", path.to_str().unwrap(), "--excess-to-grid"], &exported);
    assert!(out.status.success());
    let rows = data_rows(&exported.join("equilibrium.csv"));
    assert!(column(&rows, 6).iter().sum::<f64>() > 0.0);
    assert!(column(&rows, 7).iter().all(|&c| c == 0.0));
    let sold: f64 = column(&rows, 5).iter().sum();
    assert!((sold - 5.0).abs() < 1e-5);
}

#[test]
fn invalid_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[tariff]\np_buy_c_per_kWh = 70.0\np_sell_c_per_kWh = 60.0\n").unwrap();
    let out = gridstack(&["equilibrium", bad.to_str().unwrap()], dir.path());
    assert!(!out.status.success());

    let typo = dir.path().join("typo.toml");
    std::fs::write(&typo, "[tariff]\np_buy_c_per_kWh = 8.45\np_sell_c_per_MWh = 60.0\n").unwrap();
    let out = gridstack(&["equilibrium", typo.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("3:1") && err.contains("p_sell_c_per_kWh"), "{err}");

    let missing = dir.path().join("missing.toml");
    assert!(!gridstack(&["verify", missing.to_str().unwrap()], dir.path())
        .status
        .success());

    let single = scenarios().join("single_slot.toml");
    assert!(!gridstack(&["day", single.to_str().unwrap()], dir.path())
        .status
        .success());
    assert!(!gridstack(&["sweep-capacity", single.to_str().unwrap()], dir.path())
        .status
        .success());
    assert!(
        !gridstack(&["equilibrium", single.to_str().unwrap(), "--seeds", "0"], dir.path())
            .status
            .success()
    );
}

#[test]
fn batch_seeds_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("cost_vs_requirement.toml");
    let out = gridstack(
        &["sweep-req", scenario.to_str().unwrap(), "--seeds", "3", "--seed", "10"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("sweep_req.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# seed=10 "));
    assert_eq!(lines.next().unwrap(), "# seeds=10,11,12");
    let rows = data_rows(&dir.path().join("sweep_req.csv"));
    assert_eq!(column(&rows, 1), vec![42.0, 49.0, 56.0, 63.0, 70.0]);
}
