use std::sync::OnceLock;

use intorder_core::dgp::{generate, DgpConfig};
use intorder_core::lrcov::QRule;
use intorder_core::vtests::{simulate_limit, v_statistic, LimitKind, Limits, VOptions};
use intorder_mc::output::{write_json, write_long_csv, write_wide_csv};
use intorder_mc::{
    experiments, run_demeaned_table, run_local_alternatives, run_sequential_table, run_size_power, ExperimentSpec,
};

const T02: QRule = QRule::TPow(0.2);

fn limits() -> &'static Limits {
    static L: OnceLock<Limits> = OnceLock::new();
    L.get_or_init(|| {
        Limits::new()
            .with(simulate_limit(LimitKind::BrownianMotionL2, 100_000, 2000, 1).unwrap())
            .with(simulate_limit(LimitKind::BrownianBridgeL2, 100_000, 2000, 1).unwrap())
    })
}

fn preset(name: &str) -> ExperimentSpec {
    experiments().get(name).unwrap().spec()
}

#[test]
fn intercept_leaves_demeaned_statistic_unchanged() {
    for seed in 0..20 {
        let base = DgpConfig { t: 150, g: 31, seed, ..DgpConfig::for_d1(0.15) };
        let plain = generate(&base).unwrap();
        let shifted = generate(&DgpConfig { with_intercept: true, ..base }).unwrap();
        assert!(shifted.intercept.is_some());
        let opts = VOptions { demeaned: true, ..Default::default() };
        let a = v_statistic(&plain.panel, 0, &opts).unwrap().statistic;
        let b = v_statistic(&shifted.panel, 0, &opts).unwrap().statistic;
        assert!((a - b).abs() <= 1e-9 * a.abs(), "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn power_grows_with_distance_from_the_null() {
    let spec = preset("t1a").with_grid(&[0.15], &[1000], T02).with_columns(&[0.15, 0.3, 0.45]).with_reps(300);
    let table = run_size_power(&spec, limits()).unwrap();
    let r: Vec<f64> = [0.15, 0.3, 0.45].iter().map(|&x| table.find(1000, 0.15, x).unwrap().rate).collect();
    assert!(r[2] > r[1] && r[1] > r[0], "{r:?}");
}

#[test]
fn every_cell_reports_a_binomial_standard_error() {
    let spec = preset("t3-desk").with_grid(&[0.6], &[125], T02).with_columns(&[-0.3, 0.0, 0.3]).with_reps(120);
    let table = run_demeaned_table(&spec, limits()).unwrap();
    assert_eq!(table.cells.len(), 3);
    for c in &table.cells {
        assert_eq!(c.n + c.failures, c.n_reps);
        let se = (c.rate * (1.0 - c.rate) / c.n as f64).sqrt();
        assert!((c.se - se).abs() < 1e-15);
        assert!(!c.invalid);
        let split = c.lower_rate.unwrap() + c.upper_rate.unwrap();
        // Correct-tail rates are part of all rejections; at the null they are all of them.
        assert!(c.rate <= split + 1e-12);
        if c.x == Some(0.0) {
            assert!((c.rate - split).abs() < 1e-12);
        }
    }
}

#[test]
fn designs_are_checked_by_the_typed_entry_points() {
    let l = limits();
    let small = |name: &str| preset(name).with_grid(&[0.15], &[125], T02).with_reps(100);
    assert!(run_size_power(&small("t2a"), l).is_err());
    assert!(run_sequential_table(&small("t1a"), l).is_err());
    assert!(run_local_alternatives(&small("t3"), l).is_err());
    assert!(run_demeaned_table(&small("t1a"), l).is_err());
    assert!(preset("t1a").with_reps(10).validate().is_err());
}

#[test]
fn sequential_table_has_three_columns_per_row() {
    let spec = preset("t2b").with_grid(&[0.15], &[125], T02).with_reps(150);
    let table = run_sequential_table(&spec, limits()).unwrap();
    assert_eq!(table.cells.len(), 3);
    let labels: Vec<&str> = table.cells.iter().map(|c| c.column.as_str()).collect();
    assert_eq!(labels, ["d1<0", "d1 in (0,1)", "d1>1"]);
    // Each replication lands in exactly one column.
    assert_eq!(table.cells.iter().map(|c| c.n + c.failures).sum::<usize>(), 150);
    for c in &table.cells {
        assert!((0.0..=1.0).contains(&c.rate), "{c:?}");
    }
}

#[test]
fn local_alternative_at_zero_has_null_size() {
    // At c = 0 the local design is the d1 = 0 null, with its own seeds.
    let spec = preset("s8").with_grid(&[0.15], &[250], T02).with_columns(&[0.0]).with_reps(400);
    let r = run_local_alternatives(&spec, limits()).unwrap().cells[0].rate;
    assert!(r < 0.09, "{r}");
}

#[test]
fn writers_produce_matching_shapes() {
    let spec =
        preset("s7-desk").with_grid(&[0.15], &[125, 250], QRule::LogT(0.4)).with_columns(&[-0.3, 0.3]).with_reps(100);
    let table = run_local_alternatives(&spec, limits()).unwrap();
    let mut wide = Vec::new();
    write_wide_csv(&table, &mut wide).unwrap();
    let wide = String::from_utf8(wide).unwrap();
    assert_eq!(wide.lines().next().unwrap(), "b,q_rule,T,c=-0.3,c=0.3");
    assert_eq!(wide.lines().count(), 3);
    let mut long = Vec::new();
    write_long_csv(&table, &mut long).unwrap();
    assert_eq!(String::from_utf8(long).unwrap().lines().count(), 1 + 4);
    let mut json = Vec::new();
    write_json(&table, &mut json).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["cells"].as_array().unwrap().len(), 4);
    assert_eq!(v["spec"]["table_id"], "s7-desk");
}
