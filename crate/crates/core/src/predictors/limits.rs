use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Acceptance band `[mu1 - n*sigma1, mu1 + n*sigma1]` for draw resistance (Pa).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecLimits {
    pub mu1: f64,
    pub sigma1: f64,
    pub n: f64,
}

impl Default for SpecLimits {
    fn default() -> Self {
        Self {
            mu1: 1100.0,
            sigma1: 15.0,
            n: 3.0,
        }
    }
}

impl SpecLimits {
    pub fn new(mu1: f64, sigma1: f64, n: f64) -> Result<Self> {
        let l = Self { mu1, sigma1, n };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma1 > 0.0 && self.n > 0.0 && self.mu1.is_finite()) {
            return Err(Error::invalid(format!(
                "spec limits need sigma1 > 0 and n > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn lower(&self) -> f64 {
        self.mu1 - self.n * self.sigma1
    }

    pub fn upper(&self) -> f64 {
        self.mu1 + self.n * self.sigma1
    }

    pub fn is_substandard(&self, value: f64) -> bool {
        !(self.lower()..=self.upper()).contains(&value)
    }
}

/// True where a prediction falls outside the acceptance band.
pub fn flag_substandard(predictions: &[f64], limits: &SpecLimits) -> Vec<bool> {
    predictions.iter().map(|&p| limits.is_substandard(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn centre_passes_beyond_band_fails() {
        let l = SpecLimits::new(1100.0, 20.0, 3.0).unwrap();
        assert_eq!(flag_substandard(&[1100.0], &l), vec![false]);
        assert_eq!(flag_substandard(&[1100.0 + 3.01 * 20.0], &l), vec![true]);
        assert_eq!(flag_substandard(&[1100.0 - 3.01 * 20.0], &l), vec![true]);
    }

    #[test]
    fn invalid_limits() {
        assert!(SpecLimits::new(1.0, 0.0, 3.0).is_err());
        assert!(SpecLimits::new(1.0, 1.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn narrower_band_flags_superset(p in proptest::collection::vec(-10.0f64..10.0, 0..50), n in 0.1f64..3.0, extra in 0.0f64..3.0) {
            let narrow = SpecLimits::new(0.0, 1.0, n).unwrap();
            let wide = SpecLimits::new(0.0, 1.0, n + extra).unwrap();
            let a = flag_substandard(&p, &narrow);
            let b = flag_substandard(&p, &wide);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(!*y || *x);
            }
        }
    }
}
