//! Simulated functional time series with a prescribed memory structure.
//!
//! Each coordinate `ℓ` is an ARMA(1,1) path scaled by `σ_ℓ = ℓ⁻²`,
//! fractionally cumulated by the memory parameter of its block, and loaded
//! on a Fourier basis function whose first five members are shuffled per
//! draw. Blocks are listed from the most to the least persistent.

use std::f64::consts::{PI, SQRT_2};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracdiff::cumulate_series;
use crate::funcspace::{FunctionalPanel, Grid};
use crate::ingest::save_panel_csv;
use crate::lrcov::QRule;

pub const ARMA_BURN_IN: usize = 200;
pub const DEFAULT_COORD_CAP: usize = 25;
pub const DEFAULT_GRID: usize = 101;
const N_SHUFFLED: usize = 5;
/// Memory of the leading stationary block appended to nonstationary draws.
const STATIONARY_TAIL_D1: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Stationary,
    Nonstationary,
    /// `d1 = c / ln(T/q)` with `q` from the configured rule.
    LocalToZero {
        c: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub t: usize,
    pub g: usize,
    /// Ignored under `LocalToZero`.
    pub d1: f64,
    pub regime: Regime,
    /// ARMA coefficients are drawn from `U[-b, b]`.
    pub b: f64,
    pub with_intercept: bool,
    /// Upper bound on the number of memory blocks (unbounded if `None`).
    pub max_blocks: Option<usize>,
    /// Total number of coordinates.
    pub coord_cap: usize,
    pub q_rule: QRule,
    /// Innovations cumulated before the first kept observation.
    pub presample: usize,
    pub seed: u64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            t: 250,
            g: DEFAULT_GRID,
            d1: 0.0,
            regime: Regime::Stationary,
            b: 0.15,
            with_intercept: false,
            max_blocks: None,
            coord_cap: DEFAULT_COORD_CAP,
            q_rule: QRule::default(),
            presample: 0,
            seed: 0,
        }
    }
}

impl DgpConfig {
    /// Picks the regime from `d1`: stationary below 1/2.
    pub fn for_d1(d1: f64) -> Self {
        let regime = if d1 < 0.5 { Regime::Stationary } else { Regime::Nonstationary };
        Self { d1, regime, ..Self::default() }
    }

    /// Dominant memory parameter actually used.
    pub fn effective_d1(&self) -> f64 {
        match self.regime {
            Regime::LocalToZero { c } => {
                let q = self.q_rule.bandwidth(self.t).max(1) as f64;
                c / (self.t as f64 / q).ln()
            }
            _ => self.d1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t < 3 {
            return Err(Error::Config(format!("T = {} too small", self.t)));
        }
        if self.g < 2 {
            return Err(Error::Config(format!("G = {} must be at least 2", self.g)));
        }
        if !(self.b > 0.0 && self.b < 1.0) {
            return Err(Error::Config(format!("b = {} must lie in (0, 1)", self.b)));
        }
        if self.coord_cap == 0 || self.max_blocks == Some(0) {
            return Err(Error::Config("need at least one coordinate and one block".into()));
        }
        let d1 = self.effective_d1();
        let ok = match self.regime {
            Regime::Stationary | Regime::LocalToZero { .. } => d1 > -0.49 && d1 < 0.5,
            Regime::Nonstationary => d1 > 0.5 && d1 <= 3.0,
        };
        if !ok || !d1.is_finite() {
            return Err(Error::Config(format!("d1 = {d1} inconsistent with regime {:?}", self.regime)));
        }
        Ok(())
    }
}

/// `(lo, hi)` for the `j`-th stationary memory draw (`j ≥ 2`).
pub fn stationary_interval(d1: f64, j: usize) -> (f64, f64) {
    if j == 2 {
        ((d1 - 0.2).max(-0.5), (d1 - 0.1).max(-0.49))
    } else {
        ((d1 - 0.5).max(-0.5), (d1 - 0.2).max(-0.49))
    }
}

/// `(lo, hi)` for the second memory parameter of a nonstationary draw.
pub fn nonstationary_d2_interval(d1: f64) -> (f64, f64) {
    ((d1 - 0.2).max(0.5), (d1 - 0.1).max(0.51))
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn draw_dim<R: Rng>(rng: &mut R) -> usize {
    rng.random_range(1.0..4.0f64).floor() as usize
}

/// Memory parameters (descending) and block dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorySpectrum {
    pub d: Vec<f64>,
    pub p: Vec<usize>,
}

fn stationary_spectrum<R: Rng>(d1: f64, cap: usize, max_blocks: usize, rng: &mut R) -> MemorySpectrum {
    let mut p = Vec::new();
    let mut used = 0;
    while used < cap && p.len() < max_blocks {
        let dim = draw_dim(rng).min(cap - used);
        used += dim;
        p.push(dim);
    }
    let mut tail: Vec<f64> = (2..=p.len())
        .map(|j| {
            let (lo, hi) = stationary_interval(d1, j);
            uniform(rng, lo, hi)
        })
        .collect();
    tail.sort_by(|a, b| b.total_cmp(a));
    let mut d = vec![d1];
    d.extend(tail);
    MemorySpectrum { d, p }
}

/// Draws the block structure below a dominant memory `d1`.
pub fn draw_memory_spectrum<R: Rng>(
    d1: f64,
    regime: Regime,
    cap: usize,
    max_blocks: Option<usize>,
    rng: &mut R,
) -> MemorySpectrum {
    let max_blocks = max_blocks.unwrap_or(usize::MAX);
    match regime {
        Regime::Stationary | Regime::LocalToZero { .. } => stationary_spectrum(d1, cap, max_blocks, rng),
        Regime::Nonstationary => {
            let p1 = draw_dim(rng).min(cap);
            let p2 = draw_dim(rng);
            let (lo, hi) = nonstationary_d2_interval(d1);
            // The second block must stay strictly less persistent than the first.
            let d2 = uniform(rng, lo, hi.min(d1));
            let mut spec = MemorySpectrum { d: vec![d1], p: vec![p1] };
            if p1 < cap && max_blocks > 1 {
                spec.d.push(d2);
                spec.p.push(p2.min(cap - p1));
                let used: usize = spec.p.iter().sum();
                if used < cap && max_blocks > 2 {
                    let tail = stationary_spectrum(STATIONARY_TAIL_D1, cap - used, max_blocks - 2, rng);
                    spec.d.extend(tail.d);
                    spec.p.extend(tail.p);
                }
            }
            spec
        }
    }
}

/// ARMA(1,1) path of length `n` after a burn-in from zero initial values.
pub fn gen_arma<R: Rng>(n: usize, phi: f64, theta: f64, rng: &mut R) -> Result<Vec<f64>> {
    if phi.is_nan() || phi.abs() >= 1.0 {
        return Err(Error::Domain(format!("AR coefficient {phi} is not stationary")));
    }
    let mut out = Vec::with_capacity(n);
    let (mut a, mut e_prev) = (0.0, 0.0);
    for i in 0..ARMA_BURN_IN + n {
        let e: f64 = rng.sample(StandardNormal);
        a = phi * a + e + theta * e_prev;
        e_prev = e;
        if i >= ARMA_BURN_IN {
            out.push(a);
        }
    }
    Ok(out)
}

/// Orthonormal Fourier basis on `[0, 1]`, indexed from 1.
pub fn fourier(k: usize, u: f64) -> f64 {
    match k {
        0 => panic!("Fourier basis is indexed from 1"),
        1 => 1.0,
        k if k % 2 == 0 => SQRT_2 * (2.0 * PI * (k / 2) as f64 * u).cos(),
        k => SQRT_2 * (2.0 * PI * ((k - 1) / 2) as f64 * u).sin(),
    }
}

pub fn sigma(l: usize) -> f64 {
    1.0 / (l * l) as f64
}

/// One simulated panel and every random quantity behind it.
#[derive(Debug, Clone, Serialize)]
pub struct DgpRealization {
    pub config: DgpConfig,
    pub d1: f64,
    /// Memory parameter per block, descending.
    pub drawn_d: Vec<f64>,
    /// Coordinates per block.
    pub drawn_p: Vec<usize>,
    /// Basis index loaded by coordinates 1..=5 (1-based).
    pub basis_perm: Vec<usize>,
    /// `(φ_ℓ, θ_ℓ)` per coordinate.
    pub arma_coeffs: Vec<(f64, f64)>,
    /// `μ_ℓ` per coordinate when an intercept is present.
    pub intercept: Option<Vec<f64>>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub panel: FunctionalPanel,
    /// Cumulated coordinate paths `x_ℓ`, before loading on the basis.
    #[serde(skip)]
    pub coordinates: Vec<Vec<f64>>,
}

impl DgpRealization {
    /// Block index of each coordinate.
    pub fn block_of(&self) -> Vec<usize> {
        self.drawn_p.iter().enumerate().flat_map(|(j, &p)| std::iter::repeat_n(j, p)).collect()
    }

    /// Basis index loaded by coordinate `l` (1-based).
    pub fn basis_index(&self, l: usize) -> usize {
        if l <= self.basis_perm.len() {
            self.basis_perm[l - 1]
        } else {
            l
        }
    }

    /// Writes the panel as CSV and the drawn parameters as a JSON sidecar
    /// next to it; returns the sidecar path.
    pub fn save(&self, csv_path: &Path) -> Result<PathBuf> {
        save_panel_csv(&self.panel, csv_path, false)?;
        let sidecar = csv_path.with_extension("json");
        std::fs::write(&sidecar, serde_json::to_string_pretty(self)?)?;
        Ok(sidecar)
    }
}

pub fn generate(cfg: &DgpConfig) -> Result<DgpRealization> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d1 = cfg.effective_d1();

    let mut perm: Vec<usize> = (1..=N_SHUFFLED.min(cfg.coord_cap)).collect();
    perm.shuffle(&mut rng);

    let spec = draw_memory_spectrum(d1, cfg.regime, cfg.coord_cap, cfg.max_blocks, &mut rng);
    let n_coords: usize = spec.p.iter().sum();

    let mut arma_coeffs = Vec::with_capacity(n_coords);
    let mut coordinates = Vec::with_capacity(n_coords);
    let mut l = 0;
    for (&d, &p) in spec.d.iter().zip(&spec.p) {
        for _ in 0..p {
            l += 1;
            let phi = rng.random_range(-cfg.b..=cfg.b);
            let theta = rng.random_range(-cfg.b..=cfg.b);
            let s = sigma(l);
            let a: Vec<f64> =
                gen_arma(cfg.t + cfg.presample, phi, theta, &mut rng)?.into_iter().map(|v| v * s).collect();
            let mut x = cumulate_series(&a, d)?;
            x.drain(..cfg.presample);
            coordinates.push(x);
            arma_coeffs.push((phi, theta));
        }
    }
    // Drawn last so that toggling the intercept leaves every path unchanged.
    let intercept: Option<Vec<f64>> =
        cfg.with_intercept.then(|| (0..n_coords).map(|_| rng.sample(StandardNormal)).collect());

    let grid = Grid::unit(cfg.g)?;
    let points = grid.points();
    let mut real = DgpRealization {
        config: cfg.clone(),
        d1,
        drawn_d: spec.d,
        drawn_p: spec.p,
        basis_perm: perm,
        arma_coeffs,
        intercept,
        notes: vec![format!("blocks drawn until {} coordinates", cfg.coord_cap)],
        panel: FunctionalPanel::new(grid, vec![0.0; cfg.t * cfg.g], cfg.t, 1)?,
        coordinates: Vec::new(),
    };
    let mut data = vec![0.0; cfg.t * cfg.g];
    for (i, x) in coordinates.iter().enumerate() {
        let l = i + 1;
        let k = real.basis_index(l);
        let e: Vec<f64> = points.iter().map(|&u| fourier(k, u)).collect();
        let shift = real.intercept.as_ref().map_or(0.0, |mu| mu[i] * sigma(l));
        for (t, row) in data.chunks_exact_mut(cfg.g).enumerate() {
            let c = x[t] + shift;
            for (y, b) in row.iter_mut().zip(&e) {
                *y += c * b;
            }
        }
    }
    real.panel = FunctionalPanel::new(grid, data, cfg.t, 1)?;
    real.coordinates = coordinates;
    Ok(real)
}
