//! Partial-sum covariance and Bartlett long-run covariance operators.
//!
//! For a sample `Z_{t0..T}` with `n = T - t0 + 1` rows:
//!
//! * `ksum`  = `Σ_t S_t ⊗ S_t`, `S_t = Σ_{s ≤ t} Z_s` (unnormalized);
//! * `lrcov` = `n⁻¹ Σ_{|s| ≤ q} w(s,q) Σ_t Z_t ⊗ Z_{t-s}` with both time
//!   indices in-sample and `w(s,q) = 1 - |s|/(q+1)`.
//!
//! The `_demeaned` variants subtract the sample mean first. The scalar
//! helpers at the bottom evaluate the same quantities on a projected
//! series `y_t = <Z_t, h>`, which is how the test statistics use them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{FunctionalPanel, GridOperator};
use crate::registry::{Named, Registry};

/// Bartlett lag-window weight `1 - |s|/(q+1)`.
pub fn bartlett_weight(s: i64, q: usize) -> Result<f64> {
    if s.unsigned_abs() as usize > q {
        return Err(Error::Domain(format!("lag {s} outside the window |s| <= {q}")));
    }
    Ok(1.0 - s.unsigned_abs() as f64 / (q as f64 + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BartlettConfig {
    pub q: usize,
}

impl BartlettConfig {
    pub fn new(q: usize) -> Self {
        Self { q }
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.q >= n {
            Err(Error::BandwidthTooLarge { q: self.q, n })
        } else {
            Ok(())
        }
    }
}

/// Maps a sample size to a lag-truncation bandwidth.
pub trait BandwidthRule: Named + Send + Sync {
    fn bandwidth(&self, n: usize) -> usize;
}

/// The bandwidth rules used in the experiments, in serializable form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QRule {
    /// `⌊n^e⌋`
    TPow(f64),
    /// `⌊c log n⌋`
    LogT(f64),
    Fixed(usize),
}

impl Default for QRule {
    fn default() -> Self {
        QRule::TPow(0.2)
    }
}

// Guards floor() against n^e landing a hair under an integer.
const FLOOR_SLACK: f64 = 1e-9;

impl QRule {
    pub fn bandwidth(&self, n: usize) -> usize {
        let n = n as f64;
        match *self {
            QRule::TPow(e) => (n.powf(e) + FLOOR_SLACK).floor().max(0.0) as usize,
            QRule::LogT(c) => (c * n.ln() + FLOOR_SLACK).floor().max(0.0) as usize,
            QRule::Fixed(q) => q,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            QRule::TPow(e) => format!("t-pow-{e}"),
            QRule::LogT(c) => format!("log-{c}"),
            QRule::Fixed(q) => format!("fixed-{q}"),
        }
    }

    /// Registered preset name, or a bare integer for a fixed bandwidth.
    pub fn parse(s: &str) -> Result<Self> {
        if let Ok(q) = s.trim().parse::<usize>() {
            return Ok(QRule::Fixed(q));
        }
        bandwidth_rules().get(s).map(|r| r.rule).ok_or_else(|| Error::Config(format!("unknown bandwidth rule '{s}'")))
    }
}

/// A [`QRule`] registered under a name.
pub struct NamedRule {
    name: &'static str,
    aliases: &'static [&'static str],
    pub rule: QRule,
}

impl Named for NamedRule {
    fn name(&self) -> &str {
        self.name
    }
    fn aliases(&self) -> &[&str] {
        self.aliases
    }
}

impl BandwidthRule for NamedRule {
    fn bandwidth(&self, n: usize) -> usize {
        self.rule.bandwidth(n)
    }
}

/// `t-pow-0.2` (default, alias `auto`), `t-pow-0.25`, `log-0.4`.
pub fn bandwidth_rules() -> Registry<NamedRule> {
    let mut reg = Registry::new();
    reg.register(Box::new(NamedRule { name: "t-pow-0.2", aliases: &["auto", "t^0.2"], rule: QRule::TPow(0.2) }))
        .register(Box::new(NamedRule { name: "t-pow-0.25", aliases: &["t^0.25"], rule: QRule::TPow(0.25) }))
        .register(Box::new(NamedRule { name: "log-0.4", aliases: &["0.4log"], rule: QRule::LogT(0.4) }));
    reg
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (&m + m.transpose())
}

fn partial_sums(z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = z.clone();
    for t in 1..s.nrows() {
        let prev = s.row(t - 1).into_owned();
        let mut row = s.row_mut(t);
        row += prev;
    }
    s
}

fn ksum_matrix(z: &DMatrix<f64>) -> DMatrix<f64> {
    let s = partial_sums(z);
    symmetrize(s.tr_mul(&s))
}

fn lrcov_matrix(z: &DMatrix<f64>, q: usize) -> Result<DMatrix<f64>> {
    let n = z.nrows();
    let mut acc = z.tr_mul(z);
    for s in 1..=q {
        let w = bartlett_weight(s as i64, q)?;
        let lead = z.rows(s, n - s);
        let lag = z.rows(0, n - s);
        let c = lead.tr_mul(&lag);
        acc += w * (&c + c.transpose());
    }
    Ok(symmetrize(acc / n as f64))
}

/// Unnormalized covariance of the partial sums.
pub fn ksum(panel: &FunctionalPanel) -> Result<GridOperator> {
    GridOperator::new(panel.grid(), ksum_matrix(&panel.valid_matrix()))
}

pub fn ksum_demeaned(panel: &FunctionalPanel) -> Result<GridOperator> {
    GridOperator::new(panel.grid(), ksum_matrix(&panel.demeaned().valid_matrix()))
}

/// Bartlett long-run covariance, divided by the sample length `n`.
pub fn lrcov(panel: &FunctionalPanel, cfg: BartlettConfig) -> Result<GridOperator> {
    cfg.check(panel.n_valid())?;
    GridOperator::new(panel.grid(), lrcov_matrix(&panel.valid_matrix(), cfg.q)?)
}

pub fn lrcov_demeaned(panel: &FunctionalPanel, cfg: BartlettConfig) -> Result<GridOperator> {
    cfg.check(panel.n_valid())?;
    GridOperator::new(panel.grid(), lrcov_matrix(&panel.demeaned().valid_matrix(), cfg.q)?)
}

/// `Σ_t (Σ_{s ≤ t} y_s)²`, the scalar analogue of [`ksum`].
pub fn partial_sum_energy(y: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut acc = 0.0;
    for v in y {
        s += v;
        acc += s * s;
    }
    acc
}

/// Bartlett long-run variance of a scalar series, the analogue of [`lrcov`].
pub fn long_run_variance(y: &[f64], q: usize) -> Result<f64> {
    let n = y.len();
    BartlettConfig::new(q).check(n)?;
    let mut acc: f64 = y.iter().map(|v| v * v).sum();
    for s in 1..=q {
        let w = bartlett_weight(s as i64, q)?;
        let c: f64 = y[s..].iter().zip(&y[..n - s]).map(|(a, b)| a * b).sum();
        acc += 2.0 * w * c;
    }
    Ok(acc / n as f64)
}

pub fn demean(y: &[f64]) -> Vec<f64> {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| v - m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{Grid, GridFunction};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn scalar(values: &[f64]) -> FunctionalPanel {
        FunctionalPanel::scalar(values).unwrap()
    }

    fn entry(op: &GridOperator) -> f64 {
        op.matrix()[(0, 0)]
    }

    #[test]
    fn weights() {
        assert_eq!(bartlett_weight(0, 3).unwrap(), 1.0);
        assert_eq!(bartlett_weight(3, 3).unwrap(), 0.25);
        assert!((bartlett_weight(-2, 4).unwrap() - 0.6).abs() < 1e-15);
        assert!(bartlett_weight(4, 3).is_err());
    }

    #[test]
    fn bandwidth_presets() {
        let rules = bandwidth_rules();
        let auto = rules.get("auto").unwrap();
        assert_eq!(auto.bandwidth(250), 3);
        assert_eq!(auto.bandwidth(545), 3);
        assert_eq!(auto.bandwidth(125), 2);
        assert_eq!(auto.bandwidth(10_000), 6);
        assert_eq!(auto.bandwidth(32), 2);
        assert_eq!(rules.get("t-pow-0.25").unwrap().bandwidth(250), 3);
        assert_eq!(rules.get("t-pow-0.25").unwrap().bandwidth(256), 4);
        assert_eq!(rules.get("log-0.4").unwrap().bandwidth(250), 2);
        assert_eq!(rules.get("log-0.4").unwrap().bandwidth(125), 1);
        assert_eq!(QRule::parse("7").unwrap(), QRule::Fixed(7));
        assert!(QRule::parse("parzen").is_err());
    }

    #[test]
    fn ksum_scalar_examples() {
        assert_eq!(entry(&ksum(&scalar(&[1.0, 1.0])).unwrap()), 5.0);
        assert_eq!(entry(&ksum(&scalar(&[0.0, 0.0, 0.0])).unwrap()), 0.0);
        assert_eq!(entry(&ksum_demeaned(&scalar(&[1.0, 3.0])).unwrap()), 1.0);
        assert_eq!(entry(&ksum_demeaned(&scalar(&[2.5, 2.5, 2.5])).unwrap()), 0.0);
    }

    #[test]
    fn lrcov_scalar_examples() {
        let z = scalar(&[1.0, -1.0, 1.0, -1.0]);
        assert!((entry(&lrcov(&z, BartlettConfig::new(1)).unwrap()) - 0.25).abs() < 1e-15);
        assert!((entry(&lrcov(&z, BartlettConfig::new(0)).unwrap()) - 1.0).abs() < 1e-15);
        assert!((entry(&lrcov_demeaned(&scalar(&[1.0, 3.0]), BartlettConfig::new(0)).unwrap()) - 1.0).abs() < 1e-15);
        assert_eq!(entry(&lrcov(&scalar(&[0.0; 5]), BartlettConfig::new(2)).unwrap()), 0.0);
        assert!(matches!(lrcov(&z, BartlettConfig::new(4)), Err(Error::BandwidthTooLarge { q: 4, n: 4 })));
    }

    #[test]
    fn white_noise_long_run_variance_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let y: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let q = QRule::default().bandwidth(y.len());
        let lrv = long_run_variance(&y, q).unwrap();
        assert!((lrv - 1.0).abs() < 0.1, "lrv = {lrv}");
        let op = lrcov(&scalar(&y), BartlettConfig::new(q)).unwrap();
        assert!((entry(&op) - lrv).abs() < 1e-12);
    }

    fn random_panel(seed: u64, t: usize, g: usize) -> FunctionalPanel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..t * g).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        FunctionalPanel::new(Grid::unit(g).unwrap(), data, t, 1).unwrap()
    }

    fn min_eig_ok(op: &GridOperator) -> bool {
        let ev = op.eigenvalues();
        ev[ev.len() - 1] >= -1e-8 * ev[0].max(0.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn operators_are_symmetric_psd(seed in any::<u64>(), t in 3usize..40, g in 2usize..9, q in 0usize..3) {
            let z = random_panel(seed, t, g);
            for op in [ksum(&z).unwrap(), ksum_demeaned(&z).unwrap(),
                       lrcov(&z, BartlettConfig::new(q)).unwrap(),
                       lrcov_demeaned(&z, BartlettConfig::new(q)).unwrap()] {
                prop_assert!(op.is_symmetric());
                prop_assert!(min_eig_ok(&op));
            }
        }

        #[test]
        fn ksum_is_quadratic_in_scale(seed in any::<u64>(), c in -5.0f64..5.0) {
            let z = random_panel(seed, 12, 4);
            let k = ksum(&z).unwrap();
            let kc = ksum(&z.scaled(c)).unwrap();
            let diff = (kc.matrix() - k.matrix() * (c * c)).amax();
            prop_assert!(diff <= 1e-10 * (1.0 + k.max_abs() * c * c));
        }

        #[test]
        fn demeaned_operators_ignore_location(seed in any::<u64>(), shift in -50.0f64..50.0) {
            let z = random_panel(seed, 15, 5);
            let mu = GridFunction::from_fn(z.grid(), |u| shift * (1.0 + u * u)).unwrap();
            let zs = z.shifted(&mu).unwrap();
            let cfg = BartlettConfig::new(2);
            let dk = (ksum_demeaned(&zs).unwrap().matrix() - ksum_demeaned(&z).unwrap().matrix()).amax();
            let dl = (lrcov_demeaned(&zs, cfg).unwrap().matrix() - lrcov_demeaned(&z, cfg).unwrap().matrix()).amax();
            prop_assert!(dk <= 1e-10 * (1.0 + shift.abs()).powi(2) * 100.0);
            prop_assert!(dl <= 1e-10);
        }

        #[test]
        fn grid_permutation_permutes_operators(seed in any::<u64>()) {
            let z = random_panel(seed, 10, 6);
            let perm = [3usize, 0, 5, 1, 4, 2];
            let zp = z.permute_grid(&perm).unwrap();
            let k = ksum(&z).unwrap();
            let kp = ksum(&zp).unwrap();
            let l = lrcov(&z, BartlettConfig::new(2)).unwrap();
            let lp = lrcov(&zp, BartlettConfig::new(2)).unwrap();
            for i in 0..6 {
                for j in 0..6 {
                    prop_assert!((kp.matrix()[(i, j)] - k.matrix()[(perm[i], perm[j])]).abs() <= 1e-12 * k.max_abs());
                    prop_assert!((lp.matrix()[(i, j)] - l.matrix()[(perm[i], perm[j])]).abs() <= 1e-12 * l.max_abs());
                }
            }
        }

        #[test]
        fn projection_route_matches_operators(seed in any::<u64>(), q in 0usize..4) {
            let z = random_panel(seed, 20, 7);
            let h = GridFunction::from_fn(z.grid(), |u| (3.0 * u).cos() + u).unwrap();
            let y = z.project(&h).unwrap();
            let k_op = ksum(&z).unwrap().quadratic_form(&h).unwrap();
            let l_op = lrcov(&z, BartlettConfig::new(q)).unwrap().quadratic_form(&h).unwrap();
            prop_assert!((partial_sum_energy(&y) - k_op).abs() <= 1e-10 * k_op.abs().max(1.0));
            prop_assert!((long_run_variance(&y, q).unwrap() - l_op).abs() <= 1e-10 * l_op.abs().max(1.0));
        }
    }
}
