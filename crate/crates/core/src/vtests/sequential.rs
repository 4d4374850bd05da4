//! Sequential classification of the integration order.
//!
//! Forward mode tests `V0`, then `V1` (then `V2`) while the previous stage
//! rejects in the upper tail. Reversed mode starts at the highest order and
//! steps down while the current stage rejects in the lower tail.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::limit::{Decision, Limits, DEFAULT_ALPHA};
use super::statistic::{bandwidth_for, estimate_direction, v_statistic_with, Direction, HatSource, TestReport};
use crate::error::{Error, Result};
use crate::fracdiff::difference_k;
use crate::funcspace::{AutoSolver, EigenSolver, FunctionalPanel};
use crate::lrcov::QRule;

/// Where the dominant memory parameter is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Interval {
    /// `(-1/2, 0)`
    I1,
    /// `{0}`
    I2,
    /// `(0, 1)`
    I3,
    /// `{1}`
    I4,
    /// `(1, 2)`, or `d > 1` when order 2 is not tested
    I5,
    /// `{2}`
    Two,
    /// `d > 2`
    AboveTwo,
}

impl Interval {
    pub fn label(self) -> &'static str {
        match self {
            Interval::I1 => "(-1/2,0)",
            Interval::I2 => "{0}",
            Interval::I3 => "(0,1)",
            Interval::I4 => "{1}",
            Interval::I5 => "(1,2)",
            Interval::Two => "{2}",
            Interval::AboveTwo => "(2,inf)",
        }
    }

    /// The integer order, if the interval is a singleton.
    pub fn integer_order(self) -> Option<usize> {
        match self {
            Interval::I2 => Some(0),
            Interval::I4 => Some(1),
            Interval::Two => Some(2),
            _ => None,
        }
    }

    /// `{k}` for an integer order `k`.
    pub fn singleton(k: usize) -> Option<Self> {
        match k {
            0 => Some(Interval::I2),
            1 => Some(Interval::I4),
            2 => Some(Interval::Two),
            _ => None,
        }
    }

    /// The open interval `(k-1, k)` just below the integer `k`.
    fn below(k: usize) -> Self {
        match k {
            0 => Interval::I1,
            1 => Interval::I3,
            _ => Interval::I5,
        }
    }

    /// The open interval just above `k`.
    fn above(k: usize) -> Self {
        match k {
            0 => Interval::I3,
            1 => Interval::I5,
            _ => Interval::AboveTwo,
        }
    }

    /// The interval a true fractional order `d` belongs to.
    pub fn containing(d: f64) -> Option<Self> {
        let iv = if d == 0.0 {
            Interval::I2
        } else if d == 1.0 {
            Interval::I4
        } else if d == 2.0 {
            Interval::Two
        } else if d > -0.5 && d < 0.0 {
            Interval::I1
        } else if d > 0.0 && d < 1.0 {
            Interval::I3
        } else if d > 1.0 && d < 2.0 {
            Interval::I5
        } else if d > 2.0 {
            Interval::AboveTwo
        } else {
            return None;
        };
        Some(iv)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeqConfig {
    /// Per-tail significance level.
    pub alpha: f64,
    pub q: QRule,
    pub demeaned: bool,
    /// Highest order tested, 1 or 2.
    pub max_order: usize,
    pub reversed: bool,
    pub hat: HatSource,
}

impl Default for SeqConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            q: QRule::default(),
            demeaned: false,
            max_order: 1,
            reversed: false,
            hat: HatSource::Levels,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SequentialReport {
    /// 1 when an integer order is concluded.
    pub d_seq: u8,
    pub classified_interval: Interval,
    pub interval_label: &'static str,
    pub reversed: bool,
    pub max_order: usize,
    pub stage_reports: Vec<TestReport>,
}

/// Interval implied by the decision path. `decisions[i]` is the outcome
/// of the `i`-th stage actually run, in the order run.
pub fn classify(decisions: &[Decision], max_order: usize, reversed: bool) -> Result<Interval> {
    let orders: Vec<usize> = if reversed { (0..=max_order).rev().collect() } else { (0..=max_order).collect() };
    for (i, &d) in decisions.iter().enumerate() {
        let k = *orders.get(i).ok_or_else(|| Error::Config("more decisions than stages".into()))?;
        let last = i + 1 == orders.len();
        match (d, reversed) {
            (Decision::Accept, _) => return Ok(Interval::singleton(k).expect("order <= 2")),
            (Decision::RejectLower, false) => return Ok(Interval::below(k)),
            (Decision::RejectUpper, true) => return Ok(Interval::above(k)),
            (Decision::RejectUpper, false) if last => return Ok(Interval::above(k)),
            (Decision::RejectLower, true) if last => return Ok(Interval::below(k)),
            _ => {}
        }
    }
    Err(Error::Config("decision path ended before a classification".into()))
}

fn next_needed(decision: Decision, reversed: bool) -> bool {
    matches!((decision, reversed), (Decision::RejectUpper, false) | (Decision::RejectLower, true))
}

pub fn sequential_using(
    panel: &FunctionalPanel,
    cfg: &SeqConfig,
    limits: &Limits,
    solver: &dyn EigenSolver,
) -> Result<SequentialReport> {
    if !(1..=2).contains(&cfg.max_order) {
        return Err(Error::Config(format!("max_order must be 1 or 2, got {}", cfg.max_order)));
    }
    if panel.n_valid() < cfg.max_order + 2 {
        return Err(Error::EmptyPanel(format!("{} valid rows are too few", panel.n_valid())));
    }
    let q = bandwidth_for(cfg.q, panel.n_valid());
    let mut level_dir: Option<Direction> = None;
    let orders: Vec<usize> =
        if cfg.reversed { (0..=cfg.max_order).rev().collect() } else { (0..=cfg.max_order).collect() };
    let mut reports = Vec::new();
    let mut decisions = Vec::new();
    for k in orders {
        let dir = match cfg.hat {
            HatSource::Levels => match &level_dir {
                Some(d) => d.clone(),
                None => level_dir.insert(estimate_direction(panel, cfg.demeaned, solver)?).clone(),
            },
            HatSource::PerOrder => estimate_direction(&difference_k(panel, k)?, cfg.demeaned, solver)?,
        };
        let v = v_statistic_with(panel, k, cfg.demeaned, q, &dir)?;
        let report = TestReport::from_statistic(&v, cfg.alpha, cfg.hat, limits)?;
        let decision = report.decision;
        reports.push(report);
        decisions.push(decision);
        if !next_needed(decision, cfg.reversed) {
            break;
        }
    }
    let interval = classify(&decisions, cfg.max_order, cfg.reversed)?;
    Ok(SequentialReport {
        d_seq: u8::from(interval.integer_order().is_some()),
        classified_interval: interval,
        interval_label: interval.label(),
        reversed: cfg.reversed,
        max_order: cfg.max_order,
        stage_reports: reports,
    })
}

pub fn sequential(panel: &FunctionalPanel, cfg: &SeqConfig, limits: &Limits) -> Result<SequentialReport> {
    sequential_using(panel, cfg, limits, &AutoSolver::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Decision::*;
    use Interval::*;

    #[test]
    fn forward_tree() {
        assert_eq!(classify(&[Accept], 1, false).unwrap(), I2);
        assert_eq!(classify(&[RejectLower], 1, false).unwrap(), I1);
        assert_eq!(classify(&[RejectUpper, Accept], 1, false).unwrap(), I4);
        assert_eq!(classify(&[RejectUpper, RejectLower], 1, false).unwrap(), I3);
        assert_eq!(classify(&[RejectUpper, RejectUpper], 1, false).unwrap(), I5);
        assert_eq!(classify(&[RejectUpper, RejectUpper, Accept], 2, false).unwrap(), Two);
        assert_eq!(classify(&[RejectUpper, RejectUpper, RejectLower], 2, false).unwrap(), I5);
        assert_eq!(classify(&[RejectUpper, RejectUpper, RejectUpper], 2, false).unwrap(), AboveTwo);
        assert!(classify(&[RejectUpper], 1, false).is_err());
    }

    #[test]
    fn reversed_tree() {
        assert_eq!(classify(&[Accept], 1, true).unwrap(), I4);
        assert_eq!(classify(&[RejectUpper], 1, true).unwrap(), I5);
        assert_eq!(classify(&[RejectLower, RejectUpper], 1, true).unwrap(), I3);
        assert_eq!(classify(&[RejectLower, Accept], 1, true).unwrap(), I2);
        assert_eq!(classify(&[RejectLower, RejectLower], 1, true).unwrap(), I1);
        assert_eq!(classify(&[RejectUpper], 2, true).unwrap(), AboveTwo);
        assert_eq!(classify(&[Accept], 2, true).unwrap(), Two);
        assert_eq!(classify(&[RejectLower, RejectUpper], 2, true).unwrap(), I5);
        assert_eq!(classify(&[RejectLower, RejectLower, RejectLower], 2, true).unwrap(), I1);
    }

    #[test]
    fn d_seq_indicator() {
        for iv in [I2, I4, Two] {
            assert!(iv.integer_order().is_some());
        }
        for iv in [I1, I3, I5, AboveTwo] {
            assert!(iv.integer_order().is_none());
        }
    }

    #[test]
    fn true_intervals() {
        assert_eq!(Interval::containing(-0.3), Some(I1));
        assert_eq!(Interval::containing(0.0), Some(I2));
        assert_eq!(Interval::containing(0.7), Some(I3));
        assert_eq!(Interval::containing(1.0), Some(I4));
        assert_eq!(Interval::containing(1.3), Some(I5));
        assert_eq!(Interval::containing(-0.7), None);
    }
}
