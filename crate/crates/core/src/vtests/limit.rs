//! Simulated limit laws of the V statistics and the two-sided decision
//! rule built on their quantiles. Samples are cached on disk.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub const DEFAULT_REPS: usize = 200_000;
pub const DEFAULT_STEPS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 20_240_911;
pub const DEFAULT_ALPHA: f64 = 0.025;

/// Environment variable naming the default critical-value cache directory.
pub const CACHE_DIR_ENV: &str = "INTORDER_CACHE_DIR";

const CACHE_MAGIC: &str = "intorder-critval";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LimitKind {
    /// `∫ W(r)² dr` for standard Brownian motion.
    #[serde(rename = "bm")]
    BrownianMotionL2,
    /// `∫ (W(r) - r W(1))² dr`.
    #[serde(rename = "bridge")]
    BrownianBridgeL2,
}

impl LimitKind {
    pub fn tag(self) -> &'static str {
        match self {
            LimitKind::BrownianMotionL2 => "bm",
            LimitKind::BrownianBridgeL2 => "bridge",
        }
    }

    /// Analytic mean of the functional.
    pub fn mean(self) -> f64 {
        match self {
            LimitKind::BrownianMotionL2 => 0.5,
            LimitKind::BrownianBridgeL2 => 1.0 / 6.0,
        }
    }

    /// The law a statistic of the given order is compared against.
    pub fn for_test(order: usize, demeaned: bool) -> Self {
        if demeaned && order == 0 {
            LimitKind::BrownianBridgeL2
        } else {
            LimitKind::BrownianMotionL2
        }
    }
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for LimitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bm" | "brownian-motion" | "w" => Ok(LimitKind::BrownianMotionL2),
            "bridge" | "bb" | "brownian-bridge" => Ok(LimitKind::BrownianBridgeL2),
            other => Err(Error::Config(format!("unknown limit kind '{other}' (expected bm or bridge)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    RejectLower,
    RejectUpper,
}

impl Decision {
    pub fn describe(self) -> &'static str {
        match self {
            Decision::Accept => "Accept",
            Decision::RejectLower => "Rejection in the lower tail",
            Decision::RejectUpper => "Rejection in the upper tail",
        }
    }

    pub fn is_reject(self) -> bool {
        self != Decision::Accept
    }
}

/// Lower and upper critical values at per-tail level `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
}

impl CriticalValues {
    pub fn decide(&self, stat: f64) -> Decision {
        if stat < self.lower {
            Decision::RejectLower
        } else if stat > self.upper {
            Decision::RejectUpper
        } else {
            Decision::Accept
        }
    }
}

/// Sorted simulated draws from one of the limit functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitDistribution {
    kind: LimitKind,
    samples: Vec<f64>,
    n_steps: usize,
    seed: u64,
}

/// One Riemann approximation of the functional on `n` steps.
fn draw_path<R: Rng>(kind: LimitKind, n: usize, rng: &mut R) -> f64 {
    let sd = (n as f64).recip().sqrt();
    let mut w = 0.0;
    let mut sum_w2 = 0.0;
    let mut sum_rw = 0.0;
    for i in 1..=n {
        let z: f64 = rng.sample(StandardNormal);
        w += sd * z;
        sum_w2 += w * w;
        sum_rw += (i as f64) * w;
    }
    let nf = n as f64;
    match kind {
        LimitKind::BrownianMotionL2 => sum_w2 / nf,
        LimitKind::BrownianBridgeL2 => {
            // Σ (W_i - r_i W_n)² expanded, so the path need not be stored.
            let sum_r2 = (nf + 1.0) * (2.0 * nf + 1.0) / (6.0 * nf);
            (sum_w2 - 2.0 * w * sum_rw / nf + w * w * sum_r2) / nf
        }
    }
}

pub fn simulate_limit(kind: LimitKind, n_reps: usize, n_steps: usize, seed: u64) -> Result<LimitDistribution> {
    if n_reps < 1000 {
        return Err(Error::Config(format!("n_reps = {n_reps}; at least 1000 required")));
    }
    if n_steps < 100 {
        return Err(Error::Config(format!("n_steps = {n_steps}; at least 100 required")));
    }
    let samples: Vec<f64> =
        (0..n_reps as u64).into_par_iter().map(|rep| draw_path(kind, n_steps, &mut stream_rng(seed, rep))).collect();
    LimitDistribution::from_samples(kind, samples, n_steps, seed)
}

impl LimitDistribution {
    /// Wraps existing draws (sorted here). All must be finite and positive.
    pub fn from_samples(kind: LimitKind, mut samples: Vec<f64>, n_steps: usize, seed: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("limit distribution needs at least one sample".into()));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(Error::Domain(format!("limit sample {bad} is not a positive finite number")));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { kind, samples, n_steps, seed })
    }

    pub fn kind(&self) -> LimitKind {
        self.kind
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn n_reps(&self) -> usize {
        self.samples.len()
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Linear-interpolation quantile on the sorted draws (`p` in `[0, 1]`).
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let h = (self.samples.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        self.samples[lo] + (h - lo as f64) * (self.samples[hi] - self.samples[lo])
    }

    /// Two-sided p-value `min(1, 2 min(P(V > x), P(V < x)))`.
    pub fn p_value(&self, stat: f64) -> f64 {
        let n = self.samples.len() as f64;
        let below = self.samples.partition_point(|&v| v < stat) as f64;
        let not_above = self.samples.partition_point(|&v| v <= stat) as f64;
        let upper = (n - not_above) / n;
        let lower = below / n;
        (2.0 * upper.min(lower)).min(1.0)
    }

    pub fn critical_values(&self, alpha: f64) -> Result<CriticalValues> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::Config(format!("alpha = {alpha} must lie in (0, 0.5)")));
        }
        Ok(CriticalValues { alpha, lower: self.quantile(alpha), upper: self.quantile(1.0 - alpha) })
    }

    /// Two-sided decision at per-tail level `alpha`.
    pub fn decide(&self, stat: f64, alpha: f64) -> Result<Decision> {
        Ok(self.critical_values(alpha)?.decide(stat))
    }

    fn header(kind: LimitKind, n_reps: usize, n_steps: usize, seed: u64) -> String {
        format!("{CACHE_MAGIC} v{CACHE_VERSION} kind={kind} n_reps={n_reps} n_steps={n_steps} seed={seed}\n")
    }

    /// Text header line, then the sorted samples as little-endian `f64`.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        // Unique per process so concurrent writers never share a temp file.
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut out = std::io::BufWriter::new(fs::File::create(&tmp)?);
            out.write_all(Self::header(self.kind, self.n_reps(), self.n_steps, self.seed).as_bytes())?;
            for v in &self.samples {
                out.write_all(&v.to_le_bytes())?;
            }
            out.flush()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = BufReader::new(fs::File::open(path)?);
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != CACHE_MAGIC {
            return Err(Error::Cache(format!("{}: not a critical-value cache", path.display())));
        }
        if fields[1] != format!("v{CACHE_VERSION}") {
            return Err(Error::Cache(format!("{}: unsupported format {}", path.display(), fields[1])));
        }
        let value = |i: usize, key: &str| -> Result<&str> {
            fields[i]
                .strip_prefix(key)
                .and_then(|s| s.strip_prefix('='))
                .ok_or_else(|| Error::Cache(format!("malformed header field '{}'", fields[i])))
        };
        let parse_err = |e: std::num::ParseIntError| Error::Cache(e.to_string());
        let kind: LimitKind = value(2, "kind")?.parse()?;
        let n_reps: usize = value(3, "n_reps")?.parse().map_err(parse_err)?;
        let n_steps: usize = value(4, "n_steps")?.parse().map_err(parse_err)?;
        let seed: u64 = value(5, "seed")?.parse().map_err(parse_err)?;
        let mut bytes = Vec::with_capacity(n_reps * 8);
        reader.read_to_end(&mut bytes)?;
        if bytes.len() != n_reps * 8 {
            return Err(Error::Cache(format!(
                "{}: expected {} sample bytes, found {}",
                path.display(),
                n_reps * 8,
                bytes.len()
            )));
        }
        let samples = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
        Self::from_samples(kind, samples, n_steps, seed)
    }

    /// Cache file name keyed by every simulation parameter.
    pub fn cache_file_name(kind: LimitKind, n_reps: usize, n_steps: usize, seed: u64) -> String {
        format!("{kind}-r{n_reps}-s{n_steps}-seed{seed}.bin")
    }

    /// Loads a matching cache from `dir`, or simulates and writes one.
    /// An unreadable or mismatched cache is silently replaced.
    pub fn load_or_simulate(dir: &Path, kind: LimitKind, n_reps: usize, n_steps: usize, seed: u64) -> Result<Self> {
        let path = dir.join(Self::cache_file_name(kind, n_reps, n_steps, seed));
        if let Ok(d) = Self::load(&path) {
            if d.kind == kind && d.n_reps() == n_reps && d.n_steps == n_steps && d.seed == seed {
                return Ok(d);
            }
        }
        let d = simulate_limit(kind, n_reps, n_steps, seed)?;
        d.save(&path)?;
        Ok(d)
    }
}

/// Cache directory from the environment, else a per-user default.
pub fn default_cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_DIR_ENV) {
        return PathBuf::from(dir);
    }
    if let Some(xdg) = std::env::var_os("XDG_CACHE_HOME") {
        return PathBuf::from(xdg).join("intorder");
    }
    if let Some(home) = std::env::var_os("HOME") {
        return PathBuf::from(home).join(".cache").join("intorder");
    }
    std::env::temp_dir().join("intorder")
}

/// The limit laws a set of tests may need, looked up by kind.
#[derive(Debug, Clone, Default)]
pub struct Limits {
    bm: Option<std::sync::Arc<LimitDistribution>>,
    bridge: Option<std::sync::Arc<LimitDistribution>>,
}

impl Limits {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, dist: impl Into<std::sync::Arc<LimitDistribution>>) -> Self {
        let dist = dist.into();
        match dist.kind() {
            LimitKind::BrownianMotionL2 => self.bm = Some(dist),
            LimitKind::BrownianBridgeL2 => self.bridge = Some(dist),
        }
        self
    }

    pub fn get(&self, kind: LimitKind) -> Result<&LimitDistribution> {
        let slot = match kind {
            LimitKind::BrownianMotionL2 => &self.bm,
            LimitKind::BrownianBridgeL2 => &self.bridge,
        };
        slot.as_deref().ok_or_else(|| Error::Config(format!("no '{kind}' limit distribution loaded")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LimitDistribution {
        let samples: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
        LimitDistribution::from_samples(LimitKind::BrownianMotionL2, samples, 100, 0).unwrap()
    }

    #[test]
    fn quantile_interpolates() {
        let d = toy();
        assert_eq!(d.quantile(0.0), 0.001);
        assert_eq!(d.quantile(1.0), 1.0);
        assert!((d.quantile(0.5) - 0.5005).abs() < 1e-12);
    }

    #[test]
    fn p_value_examples() {
        let d = toy();
        let median = d.quantile(0.5);
        assert!((d.p_value(median) - 1.0).abs() <= 2.0 / 1000.0);
        assert_eq!(d.p_value(5.0), 0.0);
        assert_eq!(d.p_value(0.0), 0.0);
        assert!((d.p_value(d.quantile(0.975)) - 0.05).abs() <= 2.0 / 1000.0);
    }

    #[test]
    fn decisions_against_reference_quantiles() {
        // Two draws placed so the interpolated 2.5%/97.5% quantiles equal
        // the reference values.
        let mut s = vec![0.045; 26];
        s.extend(vec![1.0; 948]);
        s.extend(vec![2.126; 26]);
        let d = LimitDistribution::from_samples(LimitKind::BrownianMotionL2, s, 100, 0).unwrap();
        let cv = d.critical_values(0.025).unwrap();
        assert!((cv.lower - 0.045).abs() < 1e-12 && (cv.upper - 2.126).abs() < 1e-12);
        assert_eq!(d.decide(1.0, 0.025).unwrap(), Decision::Accept);
        assert_eq!(d.decide(0.004, 0.025).unwrap(), Decision::RejectLower);
        assert_eq!(d.decide(58.06, 0.025).unwrap(), Decision::RejectUpper);
        assert!(d.decide(1.0, 0.5).is_err());
        assert!(d.decide(1.0, 0.0).is_err());
    }

    #[test]
    fn simulation_is_deterministic_and_positive() {
        let a = simulate_limit(LimitKind::BrownianBridgeL2, 1000, 100, 5).unwrap();
        let b = simulate_limit(LimitKind::BrownianBridgeL2, 1000, 100, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.samples()[0] > 0.0);
        assert!(a.samples().windows(2).all(|w| w[0] <= w[1]));
        assert!(simulate_limit(LimitKind::BrownianMotionL2, 999, 100, 5).is_err());
        assert!(simulate_limit(LimitKind::BrownianMotionL2, 1000, 99, 5).is_err());
    }

    #[test]
    fn bridge_closed_form_matches_direct_sum() {
        let n = 257;
        let mut r1 = stream_rng(3, 9);
        let fast = draw_path(LimitKind::BrownianBridgeL2, n, &mut r1);
        let mut r2 = stream_rng(3, 9);
        let sd = (1.0 / n as f64).sqrt();
        let mut w = vec![0.0; n + 1];
        for i in 1..=n {
            let z: f64 = r2.sample(StandardNormal);
            w[i] = w[i - 1] + sd * z;
        }
        let direct: f64 = (1..=n)
            .map(|i| {
                let b = w[i] - (i as f64 / n as f64) * w[n];
                b * b
            })
            .sum::<f64>()
            / n as f64;
        assert!((fast - direct).abs() < 1e-12 * direct.max(1.0));
    }

    #[test]
    fn cache_roundtrip_and_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let d = simulate_limit(LimitKind::BrownianMotionL2, 1000, 100, 1).unwrap();
        let path = dir.path().join("c.bin");
        d.save(&path).unwrap();
        assert_eq!(LimitDistribution::load(&path).unwrap(), d);

        fs::write(&path, b"garbage\n").unwrap();
        assert!(matches!(LimitDistribution::load(&path), Err(Error::Cache(_))));

        let again = LimitDistribution::load_or_simulate(dir.path(), LimitKind::BrownianMotionL2, 1000, 100, 1).unwrap();
        assert_eq!(again, d);
        let name = LimitDistribution::cache_file_name(LimitKind::BrownianMotionL2, 1000, 100, 1);
        assert!(dir.path().join(name).exists());
    }

    #[test]
    fn limits_lookup() {
        let l = Limits::new().with(toy());
        assert!(l.get(LimitKind::BrownianMotionL2).is_ok());
        assert!(l.get(LimitKind::BrownianBridgeL2).is_err());
        assert_eq!(LimitKind::for_test(0, true), LimitKind::BrownianBridgeL2);
        assert_eq!(LimitKind::for_test(1, true), LimitKind::BrownianMotionL2);
    }
}
