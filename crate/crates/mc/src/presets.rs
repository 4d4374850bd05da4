//! Named experiment presets, each in a full form and a reduced `-desk` form
//! for quick checks.

use intorder_core::lrcov::QRule;
use intorder_core::registry::{Named, Registry};

use crate::spec::{Design, ExperimentSpec, Row, SeqCase};

pub const FULL_TS: [usize; 5] = [125, 250, 500, 750, 1000];
pub const DESK_TS: [usize; 3] = [125, 250, 500];
pub const FULL_REPS: usize = 2000;
pub const DESK_REPS: usize = 500;
pub const BS: [f64; 2] = [0.15, 0.6];
pub const V0_D1: [f64; 7] = [-0.45, -0.3, -0.15, 0.0, 0.15, 0.3, 0.45];
pub const V1_D1: [f64; 7] = [0.55, 0.7, 0.85, 1.0, 1.15, 1.3, 1.45];
pub const LOCAL_C: [f64; 7] = [-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9];

const T02: QRule = QRule::TPow(0.2);
const T025: QRule = QRule::TPow(0.25);
const LOG04: QRule = QRule::LogT(0.4);

/// A runnable, named experiment.
pub trait Experiment: Named + Send + Sync {
    fn description(&self) -> &str;
    fn spec(&self) -> ExperimentSpec;
}

struct Preset {
    name: String,
    description: &'static str,
    build: Builder,
    desk: bool,
}

impl Named for Preset {
    fn name(&self) -> &str {
        &self.name
    }
}

impl Experiment for Preset {
    fn description(&self) -> &str {
        self.description
    }

    fn spec(&self) -> ExperimentSpec {
        let (ts, reps): (&[usize], usize) = if self.desk { (&DESK_TS, DESK_REPS) } else { (&FULL_TS, FULL_REPS) };
        let mut spec = (self.build)(ts).with_reps(reps);
        spec.table_id = self.name.clone();
        spec
    }
}

fn size_power(order: usize, demeaned: bool) -> Design {
    Design::SizePower { order, demeaned, with_intercept: demeaned }
}

fn t1a(ts: &[usize]) -> ExperimentSpec {
    ExperimentSpec::new("t1a", size_power(0, false))
        .with_title("V0 size and correct rejection rates, H0: d1 = 0")
        .with_grid(&BS, ts, T02)
        .with_columns(&V0_D1)
}

fn t1b(ts: &[usize]) -> ExperimentSpec {
    ExperimentSpec::new("t1b", size_power(1, false))
        .with_title("V1 size and correct rejection rates, H0: d1 = 1")
        .with_grid(&BS, ts, T02)
        .with_columns(&V1_D1)
}

fn t2a(ts: &[usize]) -> ExperimentSpec {
    ExperimentSpec::new("t2a", Design::Sequential { case: SeqCase::Integer, max_order: 1 })
        .with_title("Sequential procedure, integer integration")
        .with_grid(&BS, ts, T02)
}

fn t2b(ts: &[usize]) -> ExperimentSpec {
    ExperimentSpec::new("t2b", Design::Sequential { case: SeqCase::Fractional, max_order: 1 })
        .with_title("Sequential procedure, fractional integration")
        .with_grid(&BS, ts, T02)
}

fn t3(ts: &[usize]) -> ExperimentSpec {
    ExperimentSpec::new("t3", size_power(0, true))
        .with_title("Demeaned V0 with an unknown intercept, H0: d1 = 0")
        .with_grid(&BS, ts, T02)
        .with_columns(&V0_D1)
}

fn s4(ts: &[usize]) -> ExperimentSpec {
    ExperimentSpec::new("s4", size_power(0, false))
        .with_title("V0 with q = floor(0.4 log T)")
        .with_grid(&BS, ts, LOG04)
        .with_columns(&V0_D1)
}

fn s5(ts: &[usize]) -> ExperimentSpec {
    ExperimentSpec::new("s5", size_power(0, false))
        .with_title("V0 with q = floor(T^0.25)")
        .with_grid(&BS, ts, T025)
        .with_columns(&V0_D1)
}

fn s6(ts: &[usize]) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new("s6", size_power(0, false))
        .with_title("V0 with b = 0.75 under three bandwidth rules")
        .with_columns(&V0_D1);
    spec.rows =
        [LOG04, T02, T025].iter().flat_map(|&q_rule| ts.iter().map(move |&t| Row { b: 0.75, q_rule, t })).collect();
    spec
}

fn local(id: &str, title: &str, ts: &[usize], q: QRule) -> ExperimentSpec {
    ExperimentSpec::new(id, Design::LocalAlternatives).with_title(title).with_grid(&BS, ts, q).with_columns(&LOCAL_C)
}

fn s7(ts: &[usize]) -> ExperimentSpec {
    local("s7", "V0 under local alternatives, q = floor(0.4 log T)", ts, LOG04)
}

fn s8(ts: &[usize]) -> ExperimentSpec {
    local("s8", "V0 under local alternatives, q = floor(T^0.2)", ts, T02)
}

fn s9(ts: &[usize]) -> ExperimentSpec {
    local("s9", "V0 under local alternatives, q = floor(T^0.25)", ts, T025)
}

type Builder = fn(&[usize]) -> ExperimentSpec;

const TABLES: [(&str, &str, Builder); 11] = [
    ("t1a", "V0 size/power over d1 in [-0.45, 0.45]", t1a),
    ("t1b", "V1 size/power over d1 in [0.55, 1.45]", t1b),
    ("t2a", "sequential procedure, d1 in {0, 1}", t2a),
    ("t2b", "sequential procedure, fractional d1", t2b),
    ("t3", "demeaned V0 with intercept", t3),
    ("s4", "V0 bandwidth sensitivity, q ~ log T", s4),
    ("s5", "V0 bandwidth sensitivity, q ~ T^0.25", s5),
    ("s6", "V0 with b = 0.75, three bandwidths", s6),
    ("s7", "local alternatives, q ~ log T", s7),
    ("s8", "local alternatives, q ~ T^0.2", s8),
    ("s9", "local alternatives, q ~ T^0.25", s9),
];

/// All presets: every table in full and `-desk` form.
pub fn experiments() -> Registry<dyn Experiment> {
    let mut reg: Registry<dyn Experiment> = Registry::new();
    for (name, description, build) in TABLES {
        reg.register(Box::new(Preset { name: name.to_owned(), description, build, desk: false }));
        reg.register(Box::new(Preset { name: format!("{name}-desk"), description, build, desk: true }));
    }
    reg
}
