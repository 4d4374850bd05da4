//! Elementwise pre-test transforms of raw panel values.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::registry::{Named, Registry};

pub trait Transform: Named + Send + Sync {
    /// `None` when `x` is outside the transform's domain.
    fn forward(&self, x: f64) -> Option<f64>;
    fn inverse(&self, y: f64) -> f64;
    fn domain(&self) -> &'static str;
}

pub struct Identity;
pub struct Logit;
pub struct Log;
pub struct Probit {
    normal: Normal,
}

impl Default for Probit {
    fn default() -> Self {
        Self { normal: Normal::standard() }
    }
}

impl Named for Identity {
    fn name(&self) -> &str {
        "identity"
    }
    fn aliases(&self) -> &[&str] {
        &["none", "raw"]
    }
}

impl Transform for Identity {
    fn forward(&self, x: f64) -> Option<f64> {
        x.is_finite().then_some(x)
    }
    fn inverse(&self, y: f64) -> f64 {
        y
    }
    fn domain(&self) -> &'static str {
        "finite values"
    }
}

impl Named for Logit {
    fn name(&self) -> &str {
        "logit"
    }
}

impl Transform for Logit {
    fn forward(&self, x: f64) -> Option<f64> {
        (x > 0.0 && x < 1.0).then(|| (x / (1.0 - x)).ln())
    }
    fn inverse(&self, y: f64) -> f64 {
        1.0 / (1.0 + (-y).exp())
    }
    fn domain(&self) -> &'static str {
        "values strictly between 0 and 1"
    }
}

impl Named for Log {
    fn name(&self) -> &str {
        "log"
    }
    fn aliases(&self) -> &[&str] {
        &["ln"]
    }
}

impl Transform for Log {
    fn forward(&self, x: f64) -> Option<f64> {
        (x > 0.0 && x.is_finite()).then(|| x.ln())
    }
    fn inverse(&self, y: f64) -> f64 {
        y.exp()
    }
    fn domain(&self) -> &'static str {
        "strictly positive values"
    }
}

impl Named for Probit {
    fn name(&self) -> &str {
        "probit"
    }
}

impl Transform for Probit {
    fn forward(&self, x: f64) -> Option<f64> {
        (x > 0.0 && x < 1.0).then(|| self.normal.inverse_cdf(x))
    }
    fn inverse(&self, y: f64) -> f64 {
        self.normal.cdf(y)
    }
    fn domain(&self) -> &'static str {
        "values strictly between 0 and 1"
    }
}

pub fn transforms() -> Registry<dyn Transform> {
    let mut reg: Registry<dyn Transform> = Registry::new();
    reg.register(Box::new(Identity))
        .register(Box::new(Logit))
        .register(Box::new(Log))
        .register(Box::new(Probit::default()));
    reg
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn registry_lookup() {
        let reg = transforms();
        assert_eq!(reg.names(), vec!["identity", "logit", "log", "probit"]);
        assert_eq!(reg.get("LOGIT").unwrap().name(), "logit");
        assert_eq!(reg.get("none").unwrap().name(), "identity");
        assert!(reg.get("boxcox").is_none());
    }

    #[test]
    fn domains() {
        assert_eq!(Logit.forward(0.5), Some(0.0));
        assert_eq!(Logit.forward(0.0), None);
        assert_eq!(Logit.forward(1.0), None);
        assert_eq!(Log.forward(0.0), None);
        assert_eq!(Log.forward(1.0), Some(0.0));
        assert_eq!(Probit::default().forward(1.0), None);
        assert!(Probit::default().forward(0.5).unwrap().abs() < 1e-12);
        assert!((Probit::default().forward(0.975).unwrap() - 1.959963984540054).abs() < 1e-9);
        assert_eq!(Identity.forward(f64::NAN), None);
    }

    proptest! {
        #[test]
        fn logit_roundtrip(x in 1e-6f64..(1.0 - 1e-6)) {
            prop_assert!((Logit.inverse(Logit.forward(x).unwrap()) - x).abs() <= 1e-12);
        }

        #[test]
        fn log_roundtrip(x in 1e-6f64..1e6) {
            prop_assert!((Log.inverse(Log.forward(x).unwrap()) - x).abs() <= 1e-12 * x.max(1.0));
        }

        #[test]
        fn probit_roundtrip(x in 1e-4f64..(1.0 - 1e-4)) {
            let p = Probit::default();
            prop_assert!((p.inverse(p.forward(x).unwrap()) - x).abs() <= 1e-9);
        }
    }
}
