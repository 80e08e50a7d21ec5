//! Two-objective machinery: preference vectors on the simplex, Pareto
//! dominance, linear-scalarization weights and the exact Pareto optimal (EPO)
//! weight solver.

mod epo;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use epo::{epo_weights, min_norm_weights, non_uniformity, EpoMode, EpoWeights, NonUniformity};

/// Default non-uniformity threshold below which EPO switches to pure descent.
///
/// For two objectives `μ ≈ gap²/2`, so this keeps the ray gap of a point in
/// descent mode under about 1.4e-3.
pub const DEFAULT_EPS_BALANCE: f64 = 1e-6;

/// A point on the probability simplex expressing the objective trade-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PreferenceVector(Vec<f64>);

impl PreferenceVector {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.len() < 2 {
            return Err(Error::validation("r", "needs at least two components"));
        }
        if r.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::validation("r", "components must be non-negative"));
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::validation("r", format!("components sum to {sum}, not 1")));
        }
        Ok(Self(r))
    }

    /// `(r1, 1 − r1)`.
    pub fn pair(r1: f64) -> Result<Self> {
        Self::new(vec![r1, 1.0 - r1])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// EPO needs every component strictly positive so the inverse ray is finite.
    pub fn require_positive(&self) -> Result<()> {
        if self.0.iter().all(|&v| v > 0.0) {
            Ok(())
        } else {
            Err(Error::validation("r", "every component must be strictly positive for EPO"))
        }
    }
}

impl TryFrom<Vec<f64>> for PreferenceVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PreferenceVector> for Vec<f64> {
    fn from(r: PreferenceVector) -> Self {
        r.0
    }
}

/// Non-negative, finite objective values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint(Vec<f64>);

impl ObjectivePoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Contract(format!(
                "objective values must be finite and non-negative: {values:?}"
            )));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dominates(&self, other: &ObjectivePoint) -> bool {
        dominates(&self.0, &other.0)
    }
}

/// `a` dominates `b`: no worse everywhere, strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Linear scalarization combines the objective gradients with the preference
/// weights themselves.
pub fn ls_weights(r: &PreferenceVector) -> Vec<f64> {
    r.0.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dominance_examples() {
        assert!(!dominates(&[1.0, 1.0], &[1.0, 1.0]));
        assert!(dominates(&[1.0, 2.0], &[2.0, 2.0]));
        assert!(!dominates(&[1.0, 3.0], &[2.0, 2.0]));
        assert!(!dominates(&[2.0, 2.0], &[1.0, 3.0]));
    }

    #[test]
    fn ls_weights_are_the_preference() {
        for r1 in [1.0, 0.5, 0.1] {
            let r = PreferenceVector::pair(r1).unwrap();
            assert_eq!(ls_weights(&r), vec![r1, 1.0 - r1]);
        }
    }

    #[test]
    fn preference_validation() {
        assert!(PreferenceVector::new(vec![0.1, 0.9]).is_ok());
        assert!(PreferenceVector::new(vec![0.2, 0.9]).is_err());
        assert!(PreferenceVector::new(vec![-0.1, 1.1]).is_err());
        assert!(PreferenceVector::new(vec![1.0]).is_err());
        let edge = PreferenceVector::new(vec![1.0, 0.0]).unwrap();
        assert!(edge.require_positive().is_err());
        assert!(ObjectivePoint::new(vec![-1.0, 0.0]).is_err());
        assert!(ObjectivePoint::new(vec![f64::NAN, 0.0]).is_err());
    }

    fn point() -> impl Strategy<Value = Vec<f64>> {
        // a coarse grid makes ties (and so the equality cases) common
        proptest::collection::vec((0u8..4).prop_map(f64::from), 2)
    }

    proptest! {
        #[test]
        fn dominance_is_irreflexive(a in point()) {
            prop_assert!(!dominates(&a, &a));
        }

        #[test]
        fn dominance_is_antisymmetric(a in point(), b in point()) {
            prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
        }

        #[test]
        fn dominance_is_transitive(a in point(), b in point(), c in point()) {
            if dominates(&a, &b) && dominates(&b, &c) {
                prop_assert!(dominates(&a, &c));
            }
        }
    }
}
