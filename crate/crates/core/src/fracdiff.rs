//! Type-II fractional differencing of curve-valued series.
//!
//! `Δ^d = Σ_j π_j(d) L^j` with `π_j(d) = Γ(j-d) / (Γ(-d) Γ(j+1))`, truncated
//! at the start of the sample: no pre-sample values are imputed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::FunctionalPanel;

/// Largest |d| accepted by [`frac_coeffs`].
pub const MAX_ABS_D: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FracCoeffs {
    pub d: f64,
    pub pi: Vec<f64>,
}

impl FracCoeffs {
    /// Number of coefficients after dropping the exact zeros that integer
    /// orders produce past `j = d`.
    fn support(&self) -> usize {
        self.pi.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1)
    }

    /// `y_t = Σ_{j=0}^{t} π_j x_{t-j}` over the whole slice.
    pub fn convolve(&self, x: &[f64]) -> Vec<f64> {
        let support = self.support().min(x.len());
        (0..x.len())
            .map(|t| {
                let upto = t.min(support.saturating_sub(1));
                (0..=upto).map(|j| self.pi[j] * x[t - j]).sum()
            })
            .collect()
    }
}

/// First `n + 1` expansion coefficients of `Δ^d`, by the recursion
/// `π_0 = 1`, `π_j = π_{j-1} (j - 1 - d) / j`.
pub fn frac_coeffs(d: f64, n: usize) -> Result<FracCoeffs> {
    if !d.is_finite() || d.abs() > MAX_ABS_D {
        return Err(Error::Domain(format!("memory parameter {d} outside [-{MAX_ABS_D}, {MAX_ABS_D}]")));
    }
    let mut pi = Vec::with_capacity(n + 1);
    pi.push(1.0);
    for j in 1..=n {
        let prev = pi[j - 1];
        pi.push(prev * ((j - 1) as f64 - d) / j as f64);
    }
    Ok(FracCoeffs { d, pi })
}

/// `Δ^d` applied to a scalar series starting at its first element.
pub fn frac_diff_series(x: &[f64], d: f64) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::EmptyPanel("empty series".into()));
    }
    Ok(frac_coeffs(d, x.len() - 1)?.convolve(x))
}

/// `Δ^{-d}` applied to a scalar series.
pub fn cumulate_series(x: &[f64], d: f64) -> Result<Vec<f64>> {
    frac_diff_series(x, -d)
}

/// Pointwise `Δ^d` over rows `t0..=T`; the row at `t0` is unchanged and
/// pre-sample rows are copied through.
pub fn frac_diff(panel: &FunctionalPanel, d: f64) -> Result<FunctionalPanel> {
    let n = panel.n_valid();
    let coeffs = frac_coeffs(d, n - 1)?;
    let support = coeffs.support();
    let g = panel.grid().len();
    let valid = panel.valid_data();
    let start = (panel.t0() - 1) * g;

    let mut data = panel.data().to_vec();
    let out = &mut data[start..];
    out.iter_mut().for_each(|v| *v = 0.0);
    for t in 0..n {
        let dst = &mut out[t * g..(t + 1) * g];
        for j in 0..support.min(t + 1) {
            let c = coeffs.pi[j];
            let src = &valid[(t - j) * g..(t - j + 1) * g];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += c * s;
            }
        }
    }
    panel.with_data(data)
}

/// Anti-differencing `Δ^{-d}`.
pub fn cumulate(panel: &FunctionalPanel, d: f64) -> Result<FunctionalPanel> {
    frac_diff(panel, -d)
}

/// First difference with the sample start moved forward by one row, so
/// the result covers `t0+1..=T`.
pub fn difference(panel: &FunctionalPanel) -> Result<FunctionalPanel> {
    if panel.n_valid() < 3 {
        return Err(Error::EmptyPanel(format!("cannot difference a panel with {} valid rows", panel.n_valid())));
    }
    frac_diff(panel, 1.0)?.advance_t0()
}

/// `k` successive first differences.
pub fn difference_k(panel: &FunctionalPanel, k: usize) -> Result<FunctionalPanel> {
    let mut out = panel.clone();
    for _ in 0..k {
        out = difference(&out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::Grid;
    use proptest::prelude::*;
    use statrs::function::gamma::gamma;

    /// Gamma-ratio oracle, valid for non-integer d.
    fn gamma_ratio(d: f64, j: usize) -> f64 {
        gamma(j as f64 - d) / (gamma(-d) * gamma(j as f64 + 1.0))
    }

    #[test]
    fn integer_orders() {
        assert_eq!(frac_coeffs(1.0, 3).unwrap().pi, vec![1.0, -1.0, 0.0, 0.0]);
        assert_eq!(frac_coeffs(0.0, 3).unwrap().pi, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(frac_coeffs(2.0, 4).unwrap().pi, vec![1.0, -2.0, 1.0, 0.0, 0.0]);
        assert_eq!(frac_coeffs(3.0, 3).unwrap().pi, vec![1.0, -3.0, 3.0, -1.0]);
    }

    #[test]
    fn half_order_matches_gamma_oracle() {
        let c = frac_coeffs(0.5, 3).unwrap();
        assert_eq!(c.pi, vec![1.0, -0.5, -0.125, -0.0625]);
        for (j, p) in c.pi.iter().enumerate() {
            assert!((p - gamma_ratio(0.5, j)).abs() <= 1e-12 * p.abs());
        }
    }

    #[test]
    fn recursion_matches_gamma_oracle_for_fractional_d() {
        for d in [-0.75, -0.3, 0.2, 0.45, 1.3, 1.7] {
            let c = frac_coeffs(d, 30).unwrap();
            for (j, p) in c.pi.iter().enumerate() {
                let oracle = gamma_ratio(d, j);
                assert!((p - oracle).abs() <= 1e-10 * oracle.abs().max(1e-300), "d={d} j={j}");
            }
        }
    }

    #[test]
    fn rejects_absurd_orders() {
        assert!(frac_coeffs(101.0, 3).is_err());
        assert!(frac_coeffs(f64::NAN, 3).is_err());
    }

    #[test]
    fn first_difference_and_partial_sums() {
        let p = FunctionalPanel::scalar(&[1.0, 3.0, 6.0]).unwrap();
        assert_eq!(frac_diff(&p, 1.0).unwrap().data(), &[1.0, 2.0, 3.0]);
        assert_eq!(frac_diff(&p, 0.0).unwrap(), p);

        let ones = FunctionalPanel::scalar(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(cumulate(&ones, 1.0).unwrap().data(), &[1.0, 2.0, 3.0]);
        assert_eq!(cumulate(&ones, 0.0).unwrap(), ones);
    }

    #[test]
    fn differencing_advances_the_sample_start() {
        let p = FunctionalPanel::scalar(&[1.0, 3.0, 6.0, 10.0]).unwrap();
        let d1 = difference(&p).unwrap();
        assert_eq!(d1.t0(), 2);
        assert_eq!(d1.valid_data(), &[2.0, 3.0, 4.0]);
        let d2 = difference_k(&p, 2).unwrap();
        assert_eq!(d2.t0(), 3);
        assert_eq!(d2.valid_data(), &[1.0, 1.0]);
        assert!(difference_k(&p, 3).is_err());
    }

    #[test]
    fn pre_sample_rows_do_not_leak() {
        let p = FunctionalPanel::new(Grid::scalar(), vec![100.0, 1.0, 3.0, 6.0], 4, 2).unwrap();
        let out = frac_diff(&p, 0.4).unwrap();
        let direct = frac_diff_series(&[1.0, 3.0, 6.0], 0.4).unwrap();
        assert_eq!(out.data()[0], 100.0);
        assert_eq!(&out.data()[1..], direct.as_slice());
    }

    fn panel_strategy() -> impl Strategy<Value = FunctionalPanel> {
        (2usize..25, 2usize..6).prop_flat_map(|(t, g)| {
            prop::collection::vec(-10.0f64..10.0, t * g)
                .prop_map(move |data| FunctionalPanel::new(Grid::unit(g).unwrap(), data, t, 1).unwrap())
        })
    }

    fn max_diff(a: &FunctionalPanel, b: &FunctionalPanel) -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn sign_pattern(d in 0.01f64..0.99) {
            let pos = frac_coeffs(d, 40).unwrap();
            prop_assert!(pos.pi[1..].iter().all(|c| *c < 0.0));
            let neg = frac_coeffs(-d, 40).unwrap();
            prop_assert!(neg.pi[1..].iter().all(|c| *c > 0.0));
        }

        #[test]
        fn recursion_identity(d in -3.0f64..3.0) {
            let c = frac_coeffs(d, 50).unwrap();
            prop_assert_eq!(c.pi[0], 1.0);
            for j in 1..c.pi.len() {
                let expect = c.pi[j - 1] * ((j - 1) as f64 - d) / j as f64;
                prop_assert!((c.pi[j] - expect).abs() <= 1e-12 * expect.abs());
            }
        }

        #[test]
        fn roundtrip(z in panel_strategy(), d in -1.0f64..1.0) {
            let back = frac_diff(&cumulate(&z, d).unwrap(), d).unwrap();
            prop_assert!(max_diff(&back, &z) <= 1e-10);
        }

        #[test]
        fn composition(z in panel_strategy(), d1 in -1.0f64..1.0, d2 in -1.0f64..1.0) {
            let two_step = frac_diff(&frac_diff(&z, d1).unwrap(), d2).unwrap();
            let one_step = frac_diff(&z, d1 + d2).unwrap();
            prop_assert!(max_diff(&two_step, &one_step) <= 1e-9);
        }

        #[test]
        fn linearity(z in panel_strategy(), a in -3.0f64..3.0, b in -3.0f64..3.0, d in -1.0f64..1.0) {
            let z2 = z.with_data(z.data().iter().rev().copied().collect()).unwrap();
            let combo = z.with_data(z.data().iter().zip(z2.data()).map(|(x, y)| a * x + b * y).collect()).unwrap();
            let lhs = frac_diff(&combo, d).unwrap();
            let f1 = frac_diff(&z, d).unwrap();
            let f2 = frac_diff(&z2, d).unwrap();
            let rhs = z.with_data(f1.data().iter().zip(f2.data()).map(|(x, y)| a * x + b * y).collect()).unwrap();
            prop_assert!(max_diff(&lhs, &rhs) <= 1e-10);
        }
    }
}
