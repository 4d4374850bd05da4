//! Executes experiment specs. Replications run in parallel; every one
//! draws from its own derived seed and results are assembled in index
//! order, so tables do not depend on the thread count.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use intorder_core::dgp::{generate, DgpConfig, Regime};
use intorder_core::rng::{derive_seed, stream_rng};
use intorder_core::vtests::{sequential, v_statistic, Decision, Interval, LimitKind, Limits, SeqConfig, VOptions};

use crate::error::{McError, Result};
use crate::spec::{q_rule_code, Design, ExperimentSpec, Row, SeqCase, FRACTIONAL_RANGES};

/// Share of failed replications above which a cell is flagged.
pub const MAX_FAILURE_SHARE: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub row: Row,
    pub q_rule: String,
    pub column: String,
    /// Column value (`d1` or `c`) when the column is numeric.
    pub x: Option<f64>,
    pub rate: f64,
    /// Binomial standard error `sqrt(r(1-r)/n)`.
    pub se: f64,
    /// Replications the rate is computed from.
    pub n: usize,
    /// Share of lower- and upper-tail rejections, for single-test cells.
    pub lower_rate: Option<f64>,
    pub upper_rate: Option<f64>,
    pub n_reps: usize,
    pub failures: usize,
    pub invalid: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultTable {
    pub spec: ExperimentSpec,
    pub cells: Vec<CellResult>,
    pub limit_reps: usize,
    pub limit_steps: usize,
    pub limit_seed: u64,
}

impl ResultTable {
    pub fn cell(&self, row: &Row, column: &str) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.row == *row && c.column == column)
    }

    /// First cell matching `t`, `b` and a numeric column value.
    pub fn find(&self, t: usize, b: f64, x: f64) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.row.t == t && c.row.b == b && c.x == Some(x))
    }

    pub fn find_labeled(&self, t: usize, b: f64, label: &str) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.row.t == t && c.row.b == b && c.column == label)
    }
}

/// Replication counts behind one cell.
struct Tally {
    hits: usize,
    n: usize,
    n_reps: usize,
    failures: usize,
}

fn finish(row: Row, column: String, x: Option<f64>, tally: Tally, secs: f64) -> CellResult {
    let Tally { hits, n, n_reps, failures } = tally;
    let rate = if n > 0 { hits as f64 / n as f64 } else { f64::NAN };
    let se = if n > 0 { (rate * (1.0 - rate) / n as f64).sqrt() } else { f64::NAN };
    CellResult {
        row,
        q_rule: row.q_rule.label(),
        column,
        x,
        rate,
        se,
        n,
        lower_rate: None,
        upper_rate: None,
        n_reps,
        failures,
        invalid: failures as f64 > MAX_FAILURE_SHARE * n_reps as f64,
        wall_time_s: secs,
    }
}

fn cell_seed(spec: &ExperimentSpec, row: &Row, x: f64, rep: usize) -> u64 {
    let [qk, qv] = q_rule_code(row.q_rule);
    let label = spec.table_id.trim_end_matches("-desk");
    derive_seed(spec.base_seed, label, &[row.t as f64, row.b, qk, qv, x], rep as u64)
}

fn is_correct(decision: Decision, d1: f64, null: f64) -> bool {
    if d1 == null {
        decision.is_reject()
    } else if d1 < null {
        decision == Decision::RejectLower
    } else {
        decision == Decision::RejectUpper
    }
}

fn one_statistic(
    cfg: &DgpConfig,
    order: usize,
    demeaned: bool,
    alpha: f64,
    limits: &Limits,
) -> intorder_core::Result<Decision> {
    let real = generate(cfg)?;
    let opts = VOptions { demeaned, q: cfg.q_rule, ..VOptions::default() };
    let v = v_statistic(&real.panel, order, &opts)?;
    limits.get(LimitKind::for_test(order, demeaned))?.decide(v.statistic, alpha)
}

fn run_fixed_cell(spec: &ExperimentSpec, row: Row, x: f64, limits: &Limits) -> CellResult {
    let start = Instant::now();
    let outcomes: Vec<Option<Decision>> = (0..spec.n_reps)
        .into_par_iter()
        .map(|rep| {
            let seed = cell_seed(spec, &row, x, rep);
            let base = DgpConfig {
                t: row.t,
                g: spec.grid_size,
                b: row.b,
                q_rule: row.q_rule,
                presample: spec.presample,
                seed,
                ..DgpConfig::default()
            };
            let outcome = match spec.design {
                Design::SizePower { order, demeaned, with_intercept } => {
                    let regime = DgpConfig::for_d1(x).regime;
                    let cfg = DgpConfig { d1: x, regime, with_intercept, ..base };
                    one_statistic(&cfg, order, demeaned, spec.alpha, limits)
                }
                Design::LocalAlternatives => {
                    let cfg = DgpConfig { regime: Regime::LocalToZero { c: x }, ..base };
                    one_statistic(&cfg, 0, false, spec.alpha, limits)
                }
                Design::Sequential { .. } => unreachable!("sequential cells are run separately"),
            };
            outcome.ok()
        })
        .collect();
    let score = |d: Decision| match spec.design {
        Design::SizePower { order, .. } => is_correct(d, x, order as f64),
        _ => d.is_reject(),
    };
    let done: Vec<Decision> = outcomes.iter().flatten().copied().collect();
    let failures = spec.n_reps - done.len();
    let hits = done.iter().filter(|d| score(**d)).count();
    let mut cell = finish(
        row,
        format!("{x}"),
        Some(x),
        Tally { hits, n: done.len(), n_reps: spec.n_reps, failures },
        start.elapsed().as_secs_f64(),
    );
    if !done.is_empty() {
        let n = done.len() as f64;
        cell.lower_rate = Some(done.iter().filter(|d| **d == Decision::RejectLower).count() as f64 / n);
        cell.upper_rate = Some(done.iter().filter(|d| **d == Decision::RejectUpper).count() as f64 / n);
    }
    cell
}

/// True `d1` and its scoring category for one sequential replication.
fn draw_sequential_d1(case: SeqCase, seed: u64) -> (f64, usize) {
    let mut rng = stream_rng(seed, 1);
    match case {
        SeqCase::Integer => {
            let one = rng.random_bool(0.5);
            (if one { 1.0 } else { 0.0 }, usize::from(one))
        }
        SeqCase::Fractional => {
            let k = rng.random_range(0..FRACTIONAL_RANGES.len());
            let (lo, hi) = FRACTIONAL_RANGES[k];
            let category = match k {
                0 => 0,
                1 | 2 => 1,
                _ => 2,
            };
            (rng.random_range(lo..hi), category)
        }
    }
}

fn run_sequential_cell(
    spec: &ExperimentSpec,
    row: Row,
    case: SeqCase,
    max_order: usize,
    limits: &Limits,
) -> Vec<CellResult> {
    let start = Instant::now();
    let case_code = match case {
        SeqCase::Integer => 0.0,
        SeqCase::Fractional => 1.0,
    };
    let outcomes: Vec<Option<(usize, bool)>> = (0..spec.n_reps)
        .into_par_iter()
        .map(|rep| {
            let seed = cell_seed(spec, &row, case_code, rep);
            let (d1, category) = draw_sequential_d1(case, seed);
            let cfg = DgpConfig {
                t: row.t,
                g: spec.grid_size,
                b: row.b,
                q_rule: row.q_rule,
                presample: spec.presample,
                seed,
                ..DgpConfig::for_d1(d1)
            };
            let seq_cfg = SeqConfig { alpha: spec.alpha, q: row.q_rule, max_order, ..SeqConfig::default() };
            let report = generate(&cfg).and_then(|r| sequential(&r.panel, &seq_cfg, limits)).ok()?;
            let truth = Interval::containing(d1).expect("drawn d1 lies in a known interval");
            Some((category, report.classified_interval == truth))
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let failures = outcomes.iter().filter(|o| o.is_none()).count();
    let ok: Vec<(usize, bool)> = outcomes.into_iter().flatten().collect();
    let labels = spec.column_labels();
    let tally = |keep: &dyn Fn(usize) -> bool| {
        let sel: Vec<bool> = ok.iter().filter(|(c, _)| keep(*c)).map(|(_, hit)| *hit).collect();
        (sel.iter().filter(|h| **h).count(), sel.len())
    };
    let groups: Vec<(usize, usize)> = match case {
        SeqCase::Integer => vec![tally(&|_| true), tally(&|c| c == 0), tally(&|c| c == 1)],
        SeqCase::Fractional => vec![tally(&|c| c == 0), tally(&|c| c == 1), tally(&|c| c == 2)],
    };
    labels
        .into_iter()
        .zip(groups)
        .map(|(label, (hits, n))| finish(row, label, None, Tally { hits, n, n_reps: spec.n_reps, failures }, secs))
        .collect()
}

/// Runs every cell of `spec` on the current rayon pool.
pub fn run_experiment(spec: &ExperimentSpec, limits: &Limits) -> Result<ResultTable> {
    spec.validate()?;
    let kind = match spec.design {
        Design::SizePower { order, demeaned, .. } => LimitKind::for_test(order, demeaned),
        _ => LimitKind::BrownianMotionL2,
    };
    let dist = limits.get(kind)?;
    let mut cells = Vec::new();
    for &row in &spec.rows {
        match spec.design {
            Design::Sequential { case, max_order } => {
                cells.extend(run_sequential_cell(spec, row, case, max_order, limits))
            }
            _ => {
                for &x in &spec.columns {
                    cells.push(run_fixed_cell(spec, row, x, limits));
                }
            }
        }
    }
    Ok(ResultTable {
        spec: spec.clone(),
        cells,
        limit_reps: dist.n_reps(),
        limit_steps: dist.n_steps(),
        limit_seed: dist.seed(),
    })
}

/// As [`run_experiment`] on a dedicated pool of `threads` workers.
pub fn run_with_threads(spec: &ExperimentSpec, limits: &Limits, threads: usize) -> Result<ResultTable> {
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| McError::Pool(e.to_string()))?;
    pool.install(|| run_experiment(spec, limits))
}

fn expect_design(spec: &ExperimentSpec, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(McError::Spec(format!("{} is not a {what} experiment", spec.table_id)))
    }
}

/// Size and correct-rejection rates of a raw `V_k` statistic.
pub fn run_size_power(spec: &ExperimentSpec, limits: &Limits) -> Result<ResultTable> {
    expect_design(spec, matches!(spec.design, Design::SizePower { demeaned: false, .. }), "size/power")?;
    run_experiment(spec, limits)
}

/// Size and correct-rejection rates of the demeaned statistic on panels
/// with an intercept.
pub fn run_demeaned_table(spec: &ExperimentSpec, limits: &Limits) -> Result<ResultTable> {
    expect_design(spec, matches!(spec.design, Design::SizePower { demeaned: true, .. }), "demeaned")?;
    run_experiment(spec, limits)
}

pub fn run_sequential_table(spec: &ExperimentSpec, limits: &Limits) -> Result<ResultTable> {
    expect_design(spec, matches!(spec.design, Design::Sequential { .. }), "sequential")?;
    run_experiment(spec, limits)
}

pub fn run_local_alternatives(spec: &ExperimentSpec, limits: &Limits) -> Result<ResultTable> {
    expect_design(spec, matches!(spec.design, Design::LocalAlternatives), "local-alternative")?;
    run_experiment(spec, limits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scoring_rules() {
        assert!(is_correct(Decision::RejectLower, 0.0, 0.0));
        assert!(is_correct(Decision::RejectUpper, 0.0, 0.0));
        assert!(!is_correct(Decision::Accept, 0.0, 0.0));
        assert!(is_correct(Decision::RejectLower, -0.3, 0.0));
        assert!(!is_correct(Decision::RejectUpper, -0.3, 0.0));
        assert!(is_correct(Decision::RejectUpper, 1.15, 1.0));
        assert!(!is_correct(Decision::RejectLower, 1.15, 1.0));
    }

    #[test]
    fn sequential_draws_cover_categories() {
        let mut seen = [0usize; 3];
        for s in 0..400 {
            let (d1, c) = draw_sequential_d1(SeqCase::Fractional, s);
            seen[c] += 1;
            let want = match c {
                0 => d1 < 0.0,
                1 => d1 > 0.0 && d1 < 1.0,
                _ => d1 > 1.0,
            };
            assert!(want, "d1 {d1} category {c}");
        }
        // Middle category carries two of the four ranges.
        assert!(seen[1] > seen[0] && seen[1] > seen[2]);
        let ints: Vec<f64> = (0..50).map(|s| draw_sequential_d1(SeqCase::Integer, s).0).collect();
        assert!(ints.contains(&0.0) && ints.contains(&1.0));
    }

    #[test]
    fn standard_error_attached() {
        let row = Row { b: 0.15, q_rule: Default::default(), t: 250 };
        let c = finish(row, "0".into(), Some(0.0), Tally { hits: 25, n: 100, n_reps: 100, failures: 0 }, 0.0);
        assert!((c.rate - 0.25).abs() < 1e-15);
        assert!((c.se - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert!(!c.invalid);
        let bad = finish(row, "0".into(), Some(0.0), Tally { hits: 25, n: 98, n_reps: 100, failures: 2 }, 0.0);
        assert!(bad.invalid);
    }
}
