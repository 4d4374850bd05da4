//! Experiment specifications: which statistic, which DGP cells, how many
//! replications.

use serde::{Deserialize, Serialize};

use intorder_core::lrcov::QRule;
use intorder_core::vtests::DEFAULT_ALPHA;

use crate::error::{McError, Result};

pub const MIN_REPS: usize = 100;
pub const DEFAULT_BASE_SEED: u64 = 2024;

/// What one replication computes and how it is scored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Design {
    /// `V_order` (or `Ṽ_order`) at fixed `d1` per column. Null columns
    /// count any rejection, others only the correct tail.
    SizePower { order: usize, demeaned: bool, with_intercept: bool },
    /// `V0` under `d1 = c / ln(T/q)` per column; counts any rejection.
    LocalAlternatives,
    /// The sequential procedure with `d1` drawn per replication.
    Sequential { case: SeqCase, max_order: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeqCase {
    /// `d1` is 0 or 1 with equal probability.
    Integer,
    /// `d1` uniform on one of four ranges, each with probability 1/4.
    Fractional,
}

/// Fractional `d1` ranges; the middle two share the interval `(0, 1)`.
pub const FRACTIONAL_RANGES: [(f64, f64); 4] = [(-0.485, -0.15), (0.15, 0.5), (0.5, 0.85), (1.15, 1.5)];

/// One table row: the ARMA bound `b` with a bandwidth rule at sample size `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub b: f64,
    pub q_rule: QRule,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub table_id: String,
    pub title: String,
    pub design: Design,
    pub rows: Vec<Row>,
    /// `d1` or `c` values; unused by sequential designs.
    pub columns: Vec<f64>,
    pub n_reps: usize,
    pub alpha: f64,
    pub base_seed: u64,
    pub grid_size: usize,
    /// Innovations cumulated before the first kept observation.
    pub presample: usize,
}

impl ExperimentSpec {
    pub fn new(table_id: impl Into<String>, design: Design) -> Self {
        Self {
            table_id: table_id.into(),
            title: String::new(),
            design,
            rows: Vec::new(),
            columns: Vec::new(),
            n_reps: 2000,
            alpha: DEFAULT_ALPHA,
            base_seed: DEFAULT_BASE_SEED,
            grid_size: intorder_core::dgp::DEFAULT_GRID,
            presample: 0,
        }
    }

    /// Cartesian rows over `bs × ts` with a single bandwidth rule.
    pub fn with_grid(mut self, bs: &[f64], ts: &[usize], q_rule: QRule) -> Self {
        self.rows = bs.iter().flat_map(|&b| ts.iter().map(move |&t| Row { b, q_rule, t })).collect();
        self
    }

    pub fn with_columns(mut self, cols: &[f64]) -> Self {
        self.columns = cols.to_vec();
        self
    }

    pub fn with_reps(mut self, n: usize) -> Self {
        self.n_reps = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_reps < MIN_REPS {
            return Err(McError::Spec(format!("n_reps = {} below the minimum of {MIN_REPS}", self.n_reps)));
        }
        if self.rows.is_empty() {
            return Err(McError::Spec("no rows".into()));
        }
        if !matches!(self.design, Design::Sequential { .. }) && self.columns.is_empty() {
            return Err(McError::Spec("no columns".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(McError::Spec(format!("alpha = {} must lie in (0, 0.5)", self.alpha)));
        }
        match self.design {
            Design::SizePower { order, .. } if order > 2 => {
                return Err(McError::Spec(format!("order {order} not supported")));
            }
            Design::Sequential { max_order, .. } if !(1..=2).contains(&max_order) => {
                return Err(McError::Spec(format!("max_order {max_order} must be 1 or 2")));
            }
            _ => {}
        }
        Ok(())
    }

    /// Column labels in table order.
    pub fn column_labels(&self) -> Vec<String> {
        match self.design {
            Design::Sequential { case: SeqCase::Integer, .. } => {
                vec!["d1 in {0,1}".into(), "d1=0".into(), "d1=1".into()]
            }
            Design::Sequential { case: SeqCase::Fractional, .. } => {
                vec!["d1<0".into(), "d1 in (0,1)".into(), "d1>1".into()]
            }
            _ => self.columns.iter().map(|x| format!("{x}")).collect(),
        }
    }

    /// Name of the column variable.
    pub fn column_variable(&self) -> &'static str {
        match self.design {
            Design::LocalAlternatives => "c",
            Design::Sequential { .. } => "case",
            Design::SizePower { .. } => "d1",
        }
    }
}

/// Stable numeric encoding of a bandwidth rule, for seed derivation.
pub(crate) fn q_rule_code(rule: QRule) -> [f64; 2] {
    match rule {
        QRule::TPow(e) => [1.0, e],
        QRule::LogT(c) => [2.0, c],
        QRule::Fixed(q) => [3.0, q as f64],
    }
}
