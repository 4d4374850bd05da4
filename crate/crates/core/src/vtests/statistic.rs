//! The V_k and demeaned Ṽ_k variance-ratio statistics.

use serde::{Deserialize, Serialize};

use super::limit::{CriticalValues, Decision, LimitKind, Limits};
use crate::error::{Error, Result};
use crate::fracdiff::difference_k;
use crate::funcspace::{dominant_eigenpair_with, AutoSolver, EigenPair, EigenSolver, FunctionalPanel, GridFunction};
use crate::lrcov::{demean, ksum, ksum_demeaned, long_run_variance, partial_sum_energy, QRule};

pub const MAX_ORDER: usize = 2;

/// Below this the long-run quadratic form is treated as zero.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-300;

/// Which panel the projection direction ĥ is estimated from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HatSource {
    /// Dominant eigenvector of the level panel's partial-sum operator,
    /// shared by every order.
    #[default]
    Levels,
    /// Re-estimated from the differenced panel of each order.
    PerOrder,
}

/// Projection direction plus the spectral diagnostics behind it.
#[derive(Debug, Clone, Serialize)]
pub struct Direction {
    pub h: GridFunction,
    pub eigenvalue: f64,
    pub eigen_gap: f64,
    pub degenerate: bool,
    pub demeaned: bool,
}

impl From<(EigenPair, bool)> for Direction {
    fn from((p, demeaned): (EigenPair, bool)) -> Self {
        Self { h: p.vector, eigenvalue: p.value, eigen_gap: p.relative_gap, degenerate: p.degenerate, demeaned }
    }
}

/// Dominant eigenfunction of `ksum` (or `ksum_demeaned`) of `panel`.
pub fn estimate_direction(panel: &FunctionalPanel, demeaned: bool, solver: &dyn EigenSolver) -> Result<Direction> {
    let k = if demeaned { ksum_demeaned(panel)? } else { ksum(panel)? };
    Ok((dominant_eigenpair_with(&k, solver)?, demeaned).into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VOptions {
    pub demeaned: bool,
    pub q: QRule,
    pub hat: HatSource,
}

impl Default for VOptions {
    fn default() -> Self {
        Self { demeaned: false, q: QRule::default(), hat: HatSource::Levels }
    }
}

/// Value of one statistic and what went into it.
#[derive(Debug, Clone, Serialize)]
pub struct VStatistic {
    pub order: usize,
    pub demeaned: bool,
    pub statistic: f64,
    /// Number of valid rows of the differenced panel.
    pub n_obs: usize,
    pub q: usize,
    pub numerator: f64,
    pub denominator: f64,
    pub direction: Direction,
}

fn check_order(panel: &FunctionalPanel, k: usize) -> Result<()> {
    if k > MAX_ORDER {
        return Err(Error::Config(format!("order {k} not supported (max {MAX_ORDER})")));
    }
    if panel.n_valid() < k + 2 {
        return Err(Error::EmptyPanel(format!(
            "order {k} needs at least {} valid rows, panel has {}",
            k + 2,
            panel.n_valid()
        )));
    }
    Ok(())
}

/// Bandwidth used for a level panel with `n` valid rows.
pub fn bandwidth_for(rule: QRule, n: usize) -> usize {
    rule.bandwidth(n)
}

/// `n⁻² · Σ P_t² / LRV(y)` for the projected, `k`-times differenced series.
/// Only the order-zero demeaned statistic demeans the projected series.
pub fn v_statistic_with(
    panel: &FunctionalPanel,
    k: usize,
    demeaned: bool,
    q: usize,
    dir: &Direction,
) -> Result<VStatistic> {
    check_order(panel, k)?;
    let yk = difference_k(panel, k)?;
    let mut y = yk.project(&dir.h)?;
    if demeaned && k == 0 {
        y = demean(&y);
    }
    let n = y.len();
    let numerator = partial_sum_energy(&y);
    let denominator = long_run_variance(&y, q)?;
    if denominator.is_nan() || denominator < DEGENERATE_DENOMINATOR {
        return Err(Error::DegenerateVariance(denominator));
    }
    let statistic = numerator / (denominator * (n as f64).powi(2));
    Ok(VStatistic { order: k, demeaned, statistic, n_obs: n, q, numerator, denominator, direction: dir.clone() })
}

pub fn v_statistic_using(
    panel: &FunctionalPanel,
    k: usize,
    opts: &VOptions,
    solver: &dyn EigenSolver,
) -> Result<VStatistic> {
    check_order(panel, k)?;
    let q = bandwidth_for(opts.q, panel.n_valid());
    let dir = match opts.hat {
        HatSource::Levels => estimate_direction(panel, opts.demeaned, solver)?,
        HatSource::PerOrder => estimate_direction(&difference_k(panel, k)?, opts.demeaned, solver)?,
    };
    v_statistic_with(panel, k, opts.demeaned, q, &dir)
}

/// `V_k` (or `Ṽ_k`) of a level panel with the default eigen-solver.
pub fn v_statistic(panel: &FunctionalPanel, k: usize, opts: &VOptions) -> Result<VStatistic> {
    v_statistic_using(panel, k, opts, &AutoSolver::default())
}

/// Everything reported for one test.
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub order_tested: usize,
    pub demeaned: bool,
    pub statistic: f64,
    pub p_value: f64,
    pub decision: Decision,
    pub alpha: f64,
    pub critical_values: CriticalValues,
    pub limit: LimitKind,
    pub q_used: usize,
    pub n_obs: usize,
    pub eigen_gap: f64,
    pub degenerate_direction: bool,
    pub hat_source: HatSource,
    pub notes: Vec<String>,
}

impl TestReport {
    pub fn from_statistic(v: &VStatistic, alpha: f64, hat: HatSource, limits: &Limits) -> Result<Self> {
        let kind = LimitKind::for_test(v.order, v.demeaned);
        let dist = limits.get(kind)?;
        let cv = dist.critical_values(alpha)?;
        let mut notes = Vec::new();
        if v.direction.degenerate {
            notes.push("top two eigenvalues of the partial-sum operator are numerically tied".into());
        }
        if v.order == 2 && hat == HatSource::Levels {
            notes.push("order-2 direction taken from the level panel, as for order 1".into());
        }
        if v.order >= 1 && v.demeaned {
            notes.push("demeaned direction; differenced series itself not demeaned".into());
        }
        Ok(Self {
            order_tested: v.order,
            demeaned: v.demeaned,
            statistic: v.statistic,
            p_value: dist.p_value(v.statistic),
            decision: cv.decide(v.statistic),
            alpha,
            critical_values: cv,
            limit: kind,
            q_used: v.q,
            n_obs: v.n_obs,
            eigen_gap: v.direction.eigen_gap,
            degenerate_direction: v.direction.degenerate,
            hat_source: hat,
            notes,
        })
    }
}

/// Computes `V_k` and compares it with the matching limit law.
pub fn run_test(panel: &FunctionalPanel, k: usize, opts: &VOptions, alpha: f64, limits: &Limits) -> Result<TestReport> {
    let v = v_statistic(panel, k, opts)?;
    TestReport::from_statistic(&v, alpha, opts.hat, limits)
}
