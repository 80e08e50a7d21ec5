//! Analytic two-objective test problems with a known Pareto front.
//!
//! The problem pair on `Rⁿ` is
//!
//! ```text
//! f₁(θ) = 1 − exp(−‖θ − c‖²),   f₂(θ) = 1 − exp(−‖θ + c‖²),   c = (1/√n, …, 1/√n)
//! ```
//!
//! whose Pareto set is the segment `{αc : α ∈ [−1, 1]}`. The front is concave
//! in the middle, which is exactly where linear scalarization cannot reach a
//! requested trade-off while EPO can.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use twox_hash::XxHash64;

use crate::moo::{self, ObjectivePoint, PreferenceVector};
use crate::{seeding, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ToyProblem {
    n: usize,
    c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyEval {
    pub f: [f64; 2],
    pub grads: [Vec<f64>; 2],
}

impl ToyProblem {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("n", "dimension must be positive"));
        }
        Ok(Self {
            n,
            c: vec![1.0 / (n as f64).sqrt(); n],
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> &[f64] {
        &self.c
    }

    pub fn eval(&self, theta: &[f64]) -> Result<ToyEval> {
        if theta.len() != self.n {
            return Err(Error::Contract(format!(
                "θ has length {}, problem dimension is {}",
                theta.len(),
                self.n
            )));
        }
        let minus: Vec<f64> = theta.iter().zip(&self.c).map(|(t, c)| t - c).collect();
        let plus: Vec<f64> = theta.iter().zip(&self.c).map(|(t, c)| t + c).collect();
        let e1 = (-minus.iter().map(|v| v * v).sum::<f64>()).exp();
        let e2 = (-plus.iter().map(|v| v * v).sum::<f64>()).exp();
        Ok(ToyEval {
            f: [1.0 - e1, 1.0 - e2],
            grads: [
                minus.iter().map(|v| 2.0 * e1 * v).collect(),
                plus.iter().map(|v| 2.0 * e2 * v).collect(),
            ],
        })
    }

    /// Objective values at `θ = αc`, a point of the Pareto set for α ∈ [−1, 1].
    pub fn front_point(&self, alpha: f64) -> [f64; 2] {
        [
            1.0 - (-(1.0 - alpha).powi(2)).exp(),
            1.0 - (-(1.0 + alpha).powi(2)).exp(),
        ]
    }

    /// `count` front points for α evenly spaced on [−1, 1].
    pub fn sample_front(&self, count: usize) -> Vec<[f64; 2]> {
        match count {
            0 => vec![],
            1 => vec![self.front_point(0.0)],
            _ => (0..count)
                .map(|i| self.front_point(-1.0 + 2.0 * i as f64 / (count - 1) as f64))
                .collect(),
        }
    }
}

/// True iff no sample beats `point` by more than `slack` in the dominance sense,
/// i.e. no sample dominates `point − slack`.
pub fn front_dominance_check(point: &[f64], front: &[[f64; 2]], slack: f64) -> bool {
    let shifted: Vec<f64> = point.iter().map(|v| v - slack).collect();
    !front.iter().any(|s| moo::dominates(s, &shifted))
}

/// `|r₁f₁ − r₂f₂| / max(1e-12, r₁f₁ + r₂f₂)`.
pub fn ray_gap(point: &[f64; 2], r: &PreferenceVector) -> f64 {
    let r = r.as_slice();
    let (a, b) = (r[0] * point[0], r[1] * point[1]);
    (a - b).abs() / (a + b).max(1e-12)
}

/// Random start: uniform direction, radius uniform on `[0, max_radius]`.
pub fn random_start(n: usize, max_radius: f64, seed: u64) -> Vec<f64> {
    let mut rng = seeding::rng(seed, &[seeding::STREAM_INIT]);
    let dir: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let radius = max_radius * rng.random::<f64>();
    dir.into_iter().map(|v| v / norm * radius).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Ls,
    Epo,
}

impl std::str::FromStr for Solver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls" => Ok(Solver::Ls),
            "epo" => Ok(Solver::Epo),
            other => Err(Error::validation("solver", format!("expected `ls` or `epo`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyRun {
    pub solver: Solver,
    pub r: PreferenceVector,
    pub steps: usize,
    pub step_size: f64,
    pub eps_balance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    /// XXH64 of the little-endian bytes of θ before the update.
    pub theta_digest: u64,
    pub f1: f64,
    pub f2: f64,
    pub beta: [f64; 2],
    /// Non-uniformity of `(f1, f2)`; absent when `r` has a zero component.
    pub mu: Option<f64>,
    pub ray_gap: f64,
    pub mode: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub steps: Vec<TraceStep>,
    pub final_point: [f64; 2],
    pub final_theta: Vec<f64>,
}

fn digest(theta: &[f64]) -> u64 {
    let bytes: Vec<u8> = theta.iter().flat_map(|v| v.to_le_bytes()).collect();
    XxHash64::oneshot(0, &bytes)
}

/// Plain gradient descent `θ ← θ − η d` where `d` combines the two gradients
/// with LS or EPO weights, recomputed every step.
pub fn run_toy(problem: &ToyProblem, run: &ToyRun, theta0: &[f64]) -> Result<SolverTrace> {
    if run.steps == 0 {
        return Err(Error::validation("steps", "must be at least 1"));
    }
    if !(run.step_size > 0.0) {
        return Err(Error::validation("eta", "step size must be positive"));
    }
    if run.solver == Solver::Epo {
        run.r.require_positive()?;
    }
    if run.r.len() != 2 {
        return Err(Error::validation("r", "toy problems have two objectives"));
    }

    let mut theta = theta0.to_vec();
    let mut steps = Vec::with_capacity(run.steps);
    for step in 0..run.steps {
        let ev = problem.eval(&theta)?;
        let point = ObjectivePoint::new(ev.f.to_vec())?;
        let mu = moo::non_uniformity(&point, &run.r).ok().map(|nu| nu.mu);
        let (beta, mode) = match run.solver {
            Solver::Ls => {
                let w = moo::ls_weights(&run.r);
                ([w[0], w[1]], "ls")
            }
            Solver::Epo => {
                let w = moo::epo_weights(&point, &ev.grads[0], &ev.grads[1], &run.r, run.eps_balance)?;
                (w.beta, w.mode.as_str())
            }
        };
        steps.push(TraceStep {
            step,
            theta_digest: digest(&theta),
            f1: ev.f[0],
            f2: ev.f[1],
            beta,
            mu,
            ray_gap: ray_gap(&ev.f, &run.r),
            mode: mode.to_string(),
        });
        for (k, t) in theta.iter_mut().enumerate() {
            *t -= run.step_size * (beta[0] * ev.grads[0][k] + beta[1] * ev.grads[1][k]);
        }
        let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm <= 1e6) {
            return Err(Error::Divergence { step, norm });
        }
    }
    let final_point = problem.eval(&theta)?.f;
    Ok(SolverTrace {
        steps,
        final_point,
        final_theta: theta,
    })
}
