//! Exact Pareto optimal weights for two objectives.
//!
//! Each call picks combination weights `β` for the two gradients. Far from the
//! preference ray (non-uniformity `μ > ε`) the solver is in balance mode and
//! steers the weighted losses `r ⊙ ℓ` toward equality without letting the
//! lagging objective increase. Near the ray it falls back to the two-vector
//! min-norm direction, a common descent direction toward the Pareto front.

use serde::{Deserialize, Serialize};

use super::{ObjectivePoint, PreferenceVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpoMode {
    Balance,
    Descent,
}

impl EpoMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EpoMode::Balance => "balance",
            EpoMode::Descent => "descent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpoWeights {
    pub beta: [f64; 2],
    pub mode: EpoMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonUniformity {
    /// KL divergence of `normalized` from the uniform distribution.
    pub mu: f64,
    /// `r_j ℓ_j / Σ_k r_k ℓ_k`.
    pub normalized: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn non_uniformity(l: &ObjectivePoint, r: &PreferenceVector) -> Result<NonUniformity> {
    let (l, r) = (l.as_slice(), r.as_slice());
    if l.len() != r.len() {
        return Err(Error::Contract(format!(
            "{} losses for a {}-component preference",
            l.len(),
            r.len()
        )));
    }
    if r.iter().any(|&v| v <= 0.0) {
        return Err(Error::validation("r", "non-uniformity needs strictly positive preferences"));
    }
    let weighted: Vec<f64> = l.iter().zip(r).map(|(a, b)| a * b).collect();
    let total: f64 = weighted.iter().sum();
    if total == 0.0 {
        return Err(Error::OnOrigin);
    }
    let m = l.len() as f64;
    let normalized: Vec<f64> = weighted.iter().map(|w| w / total).collect();
    let mu = normalized
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * (m * p).ln())
        .sum::<f64>()
        .max(0.0);
    Ok(NonUniformity { mu, normalized })
}

/// Weights of the minimum-norm point on the segment `[g1, g2]`.
pub fn min_norm_weights(g1: &[f64], g2: &[f64]) -> Result<EpoWeights> {
    if g1.len() != g2.len() {
        return Err(Error::Contract(format!(
            "gradient lengths differ: {} vs {}",
            g1.len(),
            g2.len()
        )));
    }
    let mut diff_sq = 0.0;
    let mut num = 0.0;
    for (a, b) in g1.iter().zip(g2) {
        let d = b - a;
        diff_sq += d * d;
        num += d * b;
    }
    let t = if diff_sq < 1e-18 {
        0.5
    } else {
        (num / diff_sq).clamp(0.0, 1.0)
    };
    Ok(EpoWeights {
        beta: [t, 1.0 - t],
        mode: EpoMode::Descent,
    })
}

/// EPO combination weights for two objectives; `l` must already be
/// non-negative (callers shift losses that can go negative).
pub fn epo_weights(
    l: &ObjectivePoint,
    g1: &[f64],
    g2: &[f64],
    r: &PreferenceVector,
    eps_balance: f64,
) -> Result<EpoWeights> {
    if l.len() != 2 || r.len() != 2 {
        return Err(Error::Contract("EPO weights are implemented for two objectives".into()));
    }
    if !(eps_balance > 0.0) {
        return Err(Error::validation("eps_balance", "must be positive"));
    }
    r.require_positive()?;
    if g1.len() != g2.len() {
        return Err(Error::Contract("gradient lengths differ".into()));
    }

    let nu = match non_uniformity(l, r) {
        Ok(nu) => nu,
        Err(Error::OnOrigin) => return min_norm_weights(g1, g2),
        Err(e) => return Err(e),
    };
    if nu.mu <= eps_balance {
        return min_norm_weights(g1, g2);
    }

    let (ls, rs) = (l.as_slice(), r.as_slice());
    let anchor: Vec<f64> = (0..2)
        .map(|j| rs[j] * ((2.0 * nu.normalized[j].max(f64::MIN_POSITIVE)).ln() - nu.mu))
        .collect();
    let gram = [[dot(g1, g1), dot(g1, g2)], [dot(g2, g1), dot(g2, g2)]];

    // β(t) = (t, 1−t): Cβ(t) = t·C[:,0] + (1−t)·C[:,1].
    let phi_at_1 = anchor[0] * gram[0][0] + anchor[1] * gram[1][0];
    let phi_at_0 = anchor[0] * gram[0][1] + anchor[1] * gram[1][1];

    // Lagging objective; ties go to the first.
    let lagging = if rs[1] * ls[1] > rs[0] * ls[0] { 1 } else { 0 };
    let c0 = gram[lagging][1];
    let slope = gram[lagging][0] - c0;
    let feasible = if slope == 0.0 {
        (c0 >= 0.0).then_some((0.0, 1.0))
    } else {
        let root = -c0 / slope;
        if slope > 0.0 {
            (root <= 1.0).then(|| (root.max(0.0), 1.0))
        } else {
            (root >= 0.0).then(|| (0.0, root.min(1.0)))
        }
    };
    let Some((lo, hi)) = feasible else {
        return min_norm_weights(g1, g2);
    };

    let phi = |t: f64| phi_at_0 + t * (phi_at_1 - phi_at_0);
    let t = if phi(hi) > phi(lo) { hi } else { lo };
    Ok(EpoWeights {
        beta: [t, 1.0 - t],
        mode: EpoMode::Balance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> ObjectivePoint {
        ObjectivePoint::new(v.to_vec()).unwrap()
    }

    fn pref(r1: f64) -> PreferenceVector {
        PreferenceVector::pair(r1).unwrap()
    }

    #[test]
    fn non_uniformity_examples() {
        let nu = non_uniformity(&pt(&[9.0, 1.0]), &pref(0.1)).unwrap();
        assert!(nu.mu.abs() < 1e-15);
        assert!((nu.normalized[0] - 0.5).abs() < 1e-15);
        assert_eq!(non_uniformity(&pt(&[1.0, 1.0]), &pref(0.5)).unwrap().mu, 0.0);
        let nu = non_uniformity(&pt(&[2.0, 1.0]), &pref(0.5)).unwrap();
        let expected = (2.0 / 3.0) * (4.0f64 / 3.0).ln() + (1.0 / 3.0) * (2.0f64 / 3.0).ln();
        assert!((nu.mu - expected).abs() < 1e-15);
        assert!((nu.mu - 0.056633).abs() < 1e-6);
    }

    #[test]
    fn origin_is_signalled() {
        assert!(matches!(
            non_uniformity(&pt(&[0.0, 0.0]), &pref(0.5)),
            Err(Error::OnOrigin)
        ));
        let w = epo_weights(&pt(&[0.0, 0.0]), &[1.0, 0.0], &[0.0, 1.0], &pref(0.5), 1e-3).unwrap();
        assert_eq!(w.mode, EpoMode::Descent);
    }

    #[test]
    fn min_norm_examples() {
        assert_eq!(min_norm_weights(&[1.0, 0.0], &[0.0, 1.0]).unwrap().beta, [0.5, 0.5]);
        assert_eq!(min_norm_weights(&[0.3, 0.4], &[0.3, 0.4]).unwrap().beta, [0.5, 0.5]);
        let w = min_norm_weights(&[1.0, 0.0], &[2.0, 0.0]).unwrap();
        assert_eq!(w.beta, [1.0, 0.0]);
        assert_eq!(w.mode, EpoMode::Descent);
        assert!(min_norm_weights(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn on_ray_uses_min_norm() {
        let (g1, g2) = ([1.0, 2.0, 0.5], [-0.5, 1.0, 3.0]);
        let w = epo_weights(&pt(&[9.0, 1.0]), &g1, &g2, &pref(0.1), 1e-3).unwrap();
        assert_eq!(w, min_norm_weights(&g1, &g2).unwrap());
    }

    #[test]
    fn balance_puts_effort_on_lagging_objective() {
        let w = epo_weights(&pt(&[2.0, 1.0]), &[1.0, 0.0], &[0.0, 1.0], &pref(0.5), 1e-3).unwrap();
        assert_eq!(w.beta, [1.0, 0.0]);
        assert_eq!(w.mode, EpoMode::Balance);
    }

    #[test]
    fn balance_with_zero_lagging_gradient() {
        let w = epo_weights(&pt(&[2.0, 1.0]), &[0.0, 0.0], &[0.0, 1.0], &pref(0.5), 1e-3).unwrap();
        assert_eq!(w.beta, [1.0, 0.0]);
        assert_eq!(w.mode, EpoMode::Balance);
    }

    #[test]
    fn lagging_endpoint_is_always_feasible() {
        // β = e_lag gives g_lag·d = ‖g_lag‖² ≥ 0, so the interval is never empty.
        let w = epo_weights(&pt(&[1.0, 2.0]), &[1.0, 0.0], &[0.0, 0.0], &pref(0.5), 1e-3).unwrap();
        assert_eq!(w.mode, EpoMode::Balance);
        assert_eq!(w.beta, [0.0, 1.0]);
    }
}
