use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use intorder_core::dgp::{generate, DgpConfig, Regime, DEFAULT_COORD_CAP, DEFAULT_GRID};
use intorder_core::funcspace::FunctionalPanel;
use intorder_core::ingest::{ingest, IngestConfig};
use intorder_core::lrcov::QRule;
use intorder_core::vtests::{
    default_cache_dir, run_test, sequential, HatSource, LimitDistribution, LimitKind, Limits, SeqConfig,
    SequentialReport, TestReport, VOptions, DEFAULT_ALPHA, DEFAULT_REPS, DEFAULT_SEED, DEFAULT_STEPS,
};
use intorder_mc::output::save_all;
use intorder_mc::{experiments, run_with_threads, ResultTable};
use serde::Serialize;
use serde_json::json;

use crate::exit::{self, Failure};
use crate::{InputArgs, LimitArgs, StatArgs};

type Outcome = Result<u8, Failure>;

pub const TEST_SCHEMA: &str = "intorder.test-report/1";
pub const CLASSIFY_SCHEMA: &str = "intorder.sequential-report/1";
pub const SIMULATE_SCHEMA: &str = "intorder.simulation/1";
pub const CRITVAL_SCHEMA: &str = "intorder.critval/1";
pub const EXPERIMENT_SCHEMA: &str = "intorder.experiment/1";

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cache_dir(dir: &Option<PathBuf>) -> PathBuf {
    dir.clone().unwrap_or_else(default_cache_dir)
}

fn load_limits(args: &LimitArgs, kinds: &[LimitKind]) -> Result<Limits, Failure> {
    let dir = cache_dir(&args.cache);
    let mut limits = Limits::new();
    for &kind in kinds {
        let dist = LimitDistribution::load_or_simulate(&dir, kind, args.limit_reps, args.limit_steps, args.limit_seed)?;
        limits = limits.with(dist);
    }
    Ok(limits)
}

fn parse_delimiter(s: &str) -> Result<u8, Failure> {
    match s {
        "tab" | "\\t" => Ok(b'\t'),
        _ if s.len() == 1 => Ok(s.as_bytes()[0]),
        _ => Err(Failure::usage(format!("delimiter must be a single byte, got '{s}'"))),
    }
}

#[derive(Serialize)]
struct InputSummary {
    path: PathBuf,
    transform: String,
    initialize: bool,
    rows: usize,
    grid_points: usize,
}

fn read_input(input: &InputArgs) -> Result<(FunctionalPanel, InputSummary), Failure> {
    let cfg = IngestConfig {
        path: input.file.clone(),
        transform: input.transform.clone(),
        initialize: input.initialize,
        has_header: input.header,
        delimiter: parse_delimiter(&input.delimiter)?,
    };
    let ingested = ingest(&cfg)?;
    let summary = InputSummary {
        path: input.file.clone(),
        transform: ingested.transform.clone(),
        initialize: input.initialize,
        rows: ingested.panel.n_valid(),
        grid_points: ingested.panel.grid().len(),
    };
    Ok((ingested.panel, summary))
}

fn hat_source(stat: &StatArgs) -> HatSource {
    if stat.per_order_direction {
        HatSource::PerOrder
    } else {
        HatSource::Levels
    }
}

fn check_alpha(alpha: f64) -> Result<(), Failure> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Failure::usage(format!("alpha must lie in (0, 0.5), got {alpha}")))
    }
}

fn human_report(r: &TestReport) {
    let name = if r.demeaned { format!("demeaned V{}", r.order_tested) } else { format!("V{}", r.order_tested) };
    eprintln!("{name} test, H0: d = {}", r.order_tested);
    eprintln!("  statistic        {:.6}", r.statistic);
    eprintln!("  p-value          {:.4}", r.p_value);
    eprintln!(
        "  critical values  {:.4} / {:.4}  (alpha {} per tail, {} limit)",
        r.critical_values.lower, r.critical_values.upper, r.alpha, r.limit
    );
    eprintln!("  bandwidth q      {}", r.q_used);
    eprintln!("  observations     {}", r.n_obs);
    eprintln!("  decision         {}", r.decision.describe());
    for note in &r.notes {
        eprintln!("  note: {note}");
    }
}

pub fn test(limits: &LimitArgs, input: &InputArgs, stat: &StatArgs, order: usize) -> Outcome {
    if order > 2 {
        return Err(Failure::usage(format!("--order must be 0, 1 or 2, got {order}")));
    }
    check_alpha(stat.alpha)?;
    let q = QRule::parse(&stat.q)?;
    let (panel, summary) = read_input(input)?;
    let lim = load_limits(limits, &[LimitKind::for_test(order, stat.demeaned)])?;
    let opts = VOptions { demeaned: stat.demeaned, q, hat: hat_source(stat) };
    let report = run_test(&panel, order, &opts, stat.alpha, &lim)?;
    human_report(&report);
    print_json(&json!({
        "schema": TEST_SCHEMA,
        "input": summary,
        "q_rule": q.label(),
        "limit": { "reps": limits.limit_reps, "steps": limits.limit_steps, "seed": limits.limit_seed },
        "report": report,
    }))?;
    Ok(exit::for_decision(report.decision))
}

fn human_sequential(r: &SequentialReport) {
    for stage in &r.stage_reports {
        eprintln!(
            "  V{}{} = {:.6}  p = {:.4}  {}",
            stage.order_tested,
            if stage.demeaned { " (demeaned)" } else { "" },
            stage.statistic,
            stage.p_value,
            stage.decision.describe()
        );
    }
    let verdict = if r.d_seq == 1 { "integer integration" } else { "fractional integration" };
    eprintln!("  classified: d in {}  ({verdict})", r.interval_label);
}

pub fn classify(limits: &LimitArgs, input: &InputArgs, stat: &StatArgs, reversed: bool, max_order: usize) -> Outcome {
    if !(1..=2).contains(&max_order) {
        return Err(Failure::usage(format!("--max-order must be 1 or 2, got {max_order}")));
    }
    check_alpha(stat.alpha)?;
    let q = QRule::parse(&stat.q)?;
    let (panel, summary) = read_input(input)?;
    let mut kinds = vec![LimitKind::BrownianMotionL2];
    if stat.demeaned {
        kinds.push(LimitKind::BrownianBridgeL2);
    }
    let lim = load_limits(limits, &kinds)?;
    let cfg = SeqConfig { alpha: stat.alpha, q, demeaned: stat.demeaned, max_order, reversed, hat: hat_source(stat) };
    let report = sequential(&panel, &cfg, &lim)?;
    eprintln!("Sequential procedure{}, alpha {} per tail", if reversed { " (reversed)" } else { "" }, stat.alpha);
    human_sequential(&report);
    print_json(&json!({
        "schema": CLASSIFY_SCHEMA,
        "input": summary,
        "q_rule": q.label(),
        "limit": { "reps": limits.limit_reps, "steps": limits.limit_steps, "seed": limits.limit_seed },
        "report": report,
    }))?;
    Ok(exit::ACCEPT)
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Dominant memory parameter (ignored with --local-c)
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    d1: f64,
    /// Sample size
    #[arg(long = "t", visible_alias = "T", default_value_t = 250)]
    t: usize,
    /// Grid points on [0, 1]
    #[arg(long, default_value_t = DEFAULT_GRID)]
    g: usize,
    /// Bound for the ARMA coefficients
    #[arg(long, default_value_t = 0.15)]
    b: f64,
    /// Add a random intercept curve
    #[arg(long)]
    intercept: bool,
    /// Local alternative: d1 = c / ln(T/q)
    #[arg(long, allow_negative_numbers = true)]
    local_c: Option<f64>,
    /// Bandwidth rule behind the local-alternative scaling
    #[arg(long, default_value = "auto")]
    q: String,
    /// Limit on the number of memory blocks
    #[arg(long)]
    max_blocks: Option<usize>,
    /// Total number of coordinates
    #[arg(long, default_value_t = DEFAULT_COORD_CAP)]
    coord_cap: usize,
    /// Innovations generated and dropped before the sample starts
    #[arg(long, default_value_t = 0)]
    presample: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; the JSON sidecar is written next to it
    #[arg(long, short)]
    out: PathBuf,
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    let q_rule = QRule::parse(&args.q)?;
    let (d1, regime) = match args.local_c {
        Some(c) => (0.0, Regime::LocalToZero { c }),
        None => (args.d1, DgpConfig::for_d1(args.d1).regime),
    };
    let cfg = DgpConfig {
        t: args.t,
        g: args.g,
        d1,
        regime,
        b: args.b,
        with_intercept: args.intercept,
        max_blocks: args.max_blocks,
        coord_cap: args.coord_cap,
        q_rule,
        presample: args.presample,
        seed: args.seed,
    };
    let real = generate(&cfg)?;
    let sidecar = real.save(&args.out)?;
    eprintln!(
        "wrote {} ({} x {}), d1 = {:.4}, blocks = {}",
        args.out.display(),
        args.t,
        args.g,
        real.d1,
        real.drawn_d.len()
    );
    print_json(&json!({
        "schema": SIMULATE_SCHEMA,
        "csv": args.out,
        "sidecar": sidecar,
        "d1": real.d1,
        "drawn_d": real.drawn_d,
        "drawn_p": real.drawn_p,
    }))?;
    Ok(exit::ACCEPT)
}

#[derive(Args)]
pub struct CritvalArgs {
    /// Limit functional: `bm` (Brownian motion) or `bridge` (Brownian bridge)
    #[arg(long, default_value = "bm")]
    kind: String,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Level per tail for the printed critical values
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Cache directory [default: $INTORDER_CACHE_DIR or the user cache dir]
    #[arg(long = "critval-cache", value_name = "DIR")]
    cache: Option<PathBuf>,
    /// Print an existing cache file instead of building one
    #[arg(long, value_name = "FILE", conflicts_with_all = ["kind", "reps", "steps", "seed", "cache"])]
    inspect: Option<PathBuf>,
}

fn describe_dist(dist: &LimitDistribution, path: &Path, alpha: f64) -> Result<serde_json::Value, Failure> {
    let cv = dist.critical_values(alpha)?;
    let probs = [0.01, 0.025, 0.05, 0.1, 0.5, 0.9, 0.95, 0.975, 0.99];
    let quantiles: Vec<_> = probs.iter().map(|&p| json!({ "p": p, "value": dist.quantile(p) })).collect();
    eprintln!(
        "{} limit, {} reps x {} steps, seed {}: mean {:.4}, critical values {:.4} / {:.4} at alpha {alpha}",
        dist.kind(),
        dist.n_reps(),
        dist.n_steps(),
        dist.seed(),
        dist.mean(),
        cv.lower,
        cv.upper
    );
    Ok(json!({
        "schema": CRITVAL_SCHEMA,
        "path": path,
        "kind": dist.kind(),
        "reps": dist.n_reps(),
        "steps": dist.n_steps(),
        "seed": dist.seed(),
        "mean": dist.mean(),
        "alpha": alpha,
        "critical_values": cv,
        "quantiles": quantiles,
    }))
}

pub fn critval(args: &CritvalArgs) -> Outcome {
    check_alpha(args.alpha)?;
    let (dist, path) = match &args.inspect {
        Some(path) => (LimitDistribution::load(path)?, path.clone()),
        None => {
            let kind: LimitKind = args.kind.parse()?;
            let dir = cache_dir(&args.cache);
            let dist = LimitDistribution::load_or_simulate(&dir, kind, args.reps, args.steps, args.seed)?;
            (dist, dir.join(LimitDistribution::cache_file_name(kind, args.reps, args.steps, args.seed)))
        }
    };
    print_json(&describe_dist(&dist, &path, args.alpha)?)?;
    Ok(exit::ACCEPT)
}

#[derive(Args)]
pub struct ExperimentArgs {
    /// Preset name, e.g. t1a or t1a-desk
    #[arg(required_unless_present = "list")]
    name: Option<String>,
    /// List the presets and exit
    #[arg(long)]
    list: bool,
    /// Output directory for the tables
    #[arg(long, short, default_value = "results")]
    out: PathBuf,
    /// Override the number of replications per cell
    #[arg(long)]
    reps: Option<usize>,
    /// Override the base seed of the replications
    #[arg(long)]
    base_seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
    /// Also write long-format plot data
    #[arg(long)]
    plot: bool,
    #[command(flatten)]
    limits: LimitArgs,
}

fn human_table(table: &ResultTable) {
    let spec = &table.spec;
    eprintln!("{} ({} reps per cell)", spec.title, spec.n_reps);
    let labels = spec.column_labels();
    eprint!("{:>6} {:>12} {:>6}", "b", "q", "T");
    for l in &labels {
        eprint!(" {l:>11}");
    }
    eprintln!();
    for row in &spec.rows {
        eprint!("{:>6} {:>12} {:>6}", row.b, row.q_rule.label(), row.t);
        for l in &labels {
            match table.cell(row, l) {
                Some(c) if c.invalid => eprint!(" {:>11}", "invalid"),
                Some(c) => eprint!(" {:>11.3}", c.rate),
                None => eprint!(" {:>11}", "-"),
            }
        }
        eprintln!();
    }
}

pub fn experiment(args: &ExperimentArgs) -> Outcome {
    let registry = experiments();
    if args.list {
        for e in registry.iter() {
            println!("{:<10} {}", e.name(), e.description());
        }
        return Ok(exit::ACCEPT);
    }
    let name = args.name.as_deref().unwrap_or_default();
    let preset =
        registry.get(name).ok_or_else(|| Failure::usage(format!("unknown experiment '{name}'; try --list")))?;
    let mut spec = preset.spec();
    if let Some(n) = args.reps {
        spec = spec.with_reps(n);
    }
    if let Some(s) = args.base_seed {
        spec = spec.with_seed(s);
    }
    spec.validate()?;
    let lim = load_limits(&args.limits, &[LimitKind::BrownianMotionL2, LimitKind::BrownianBridgeL2])?;
    let threads = args.threads.unwrap_or(0);
    let start = Instant::now();
    let table = run_with_threads(&spec, &lim, threads)?;
    human_table(&table);
    let paths = save_all(&table, &args.out, args.plot)?;
    let invalid = table.cells.iter().filter(|c| c.invalid).count();
    print_json(&json!({
        "schema": EXPERIMENT_SCHEMA,
        "experiment": spec.table_id,
        "n_reps": spec.n_reps,
        "cells": table.cells.len(),
        "invalid_cells": invalid,
        "wall_time_s": start.elapsed().as_secs_f64(),
        "files": paths,
    }))?;
    Ok(exit::ACCEPT)
}
