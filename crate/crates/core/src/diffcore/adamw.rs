use serde::{Deserialize, Serialize};

use super::ParamVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

impl AdamWConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::validation("optim.lr", "must be positive and finite"));
        }
        for (key, b) in [("optim.beta1", self.beta1), ("optim.beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::validation(key, "must lie in (0, 1)"));
            }
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::validation("optim.eps", "must be positive"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::validation("optim.weight_decay", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub step_count: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub config: AdamWConfig,
}

impl OptimizerState {
    pub fn new(len: usize, config: AdamWConfig) -> Self {
        Self {
            step_count: 0,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            config,
        }
    }
}

/// One AdamW update with decoupled weight decay:
///
/// ```text
/// θ ← θ − lr·wd·θ
/// m ← β₁m + (1−β₁)g,  v ← β₂v + (1−β₂)g²
/// θ ← θ − lr · m̂ / (√v̂ + ε)
/// ```
pub fn adamw_step(params: &mut ParamVector, grad: &[f64], state: &mut OptimizerState) -> Result<()> {
    let n = params.len();
    if grad.len() != n || state.first_moment.len() != n || state.second_moment.len() != n {
        return Err(Error::Contract(format!(
            "adamw: params {n}, grad {}, moments {}/{}",
            grad.len(),
            state.first_moment.len(),
            state.second_moment.len()
        )));
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        let seg = params
            .layout()
            .segment_of(i)
            .map_or("<unknown>".to_string(), |s| s.name.clone());
        return Err(Error::numeric(
            format!("adamw gradient segment `{seg}`"),
            format!("non-finite entry {} at flat index {i}", grad[i]),
        ));
    }

    let c = state.config;
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - c.beta1.powi(t);
    let bc2 = 1.0 - c.beta2.powi(t);
    let decay = c.lr * c.weight_decay;

    let values = params.values_mut();
    for i in 0..n {
        let g = grad[i];
        let m = c.beta1 * state.first_moment[i] + (1.0 - c.beta1) * g;
        let v = c.beta2 * state.second_moment[i] + (1.0 - c.beta2) * g * g;
        state.first_moment[i] = m;
        state.second_moment[i] = v;
        let mut theta = values[i];
        if decay != 0.0 {
            theta -= decay * theta;
        }
        theta -= c.lr * (m / bc1) / ((v / bc2).sqrt() + c.eps);
        values[i] = theta;
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::numeric("adamw update", format!("parameter {i} became non-finite")));
    }
    Ok(())
}
