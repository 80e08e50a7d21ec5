use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{run_experiment, PreparedData};
use super::{Mode, RunConfig};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub index: usize,
    pub tau: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_validation_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_test_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_test_accuracy: Option<f64>,
    pub completed_seeds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    /// Index of the selected cell; `None` when every cell failed.
    pub best: Option<usize>,
}

/// Grid points `(τ, λ, r₁)` in lexicographic order. `ce` mode has no
/// preference, so its r₁ axis collapses.
pub fn grid(cfg: &RunConfig) -> Vec<(f64, f64, Option<f64>)> {
    let r1: Vec<Option<f64>> = match cfg.mode {
        Mode::Ce => vec![None],
        _ => cfg.sweep.r1.iter().map(|&v| Some(v)).collect(),
    };
    let mut cells = Vec::new();
    for &tau in &cfg.sweep.tau {
        for &lambda in &cfg.sweep.lambda {
            for &r in &r1 {
                cells.push((tau, lambda, r));
            }
        }
    }
    cells
}

pub fn cell_config(base: &RunConfig, tau: f64, lambda: f64, r1: Option<f64>) -> RunConfig {
    let mut cfg = base.clone();
    cfg.tau = tau;
    cfg.lambda = lambda;
    if let Some(r1) = r1 {
        cfg.r = vec![r1, 1.0 - r1];
    }
    cfg
}

/// Index of the highest score; ties go to the earliest.
pub fn select_best(scores: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(s) = *s {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Run every grid cell and select by mean validation accuracy.
pub fn sweep(base: &RunConfig, data: &PreparedData) -> Result<SweepReport> {
    base.validate()?;
    let points = grid(base);
    let cells: Vec<SweepCell> = points
        .par_iter()
        .enumerate()
        .map(|(index, &(tau, lambda, r1))| {
            let cfg = cell_config(base, tau, lambda, r1);
            let mut cell = SweepCell {
                index,
                tau,
                lambda,
                r1,
                mean_validation_accuracy: None,
                mean_test_accuracy: None,
                std_test_accuracy: None,
                completed_seeds: 0,
                error: None,
            };
            match run_experiment(&cfg, data) {
                Ok(report) => {
                    let a = report.aggregate;
                    cell.mean_validation_accuracy = a.mean_validation_accuracy;
                    cell.mean_test_accuracy = a.mean_test_accuracy;
                    cell.std_test_accuracy = a.std_test_accuracy;
                    cell.completed_seeds = a.completed;
                    if a.failed > 0 {
                        cell.error = report.seeds.iter().find_map(|s| s.error.clone());
                    }
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell
        })
        .collect();
    let scores: Vec<Option<f64>> = cells.iter().map(|c| c.mean_validation_accuracy).collect();
    Ok(SweepReport { best: select_best(&scores), cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_sizes() {
        let cfg = RunConfig::default();
        assert_eq!(grid(&cfg).len(), 75);
        assert_eq!(grid(&RunConfig { mode: Mode::Ce, ..Default::default() }).len(), 25);
        assert_eq!(grid(&cfg)[1], (0.1, 0.1, Some(0.3)));
    }

    #[test]
    fn single_cell_grid() {
        let mut cfg = RunConfig::default();
        cfg.sweep.tau = vec![0.3];
        cfg.sweep.lambda = vec![0.3];
        cfg.sweep.r1 = vec![0.1];
        assert_eq!(grid(&cfg), vec![(0.3, 0.3, Some(0.1))]);
        assert_eq!(cell_config(&cfg, 0.3, 0.3, Some(0.1)).r, vec![0.1, 0.9]);
    }

    #[test]
    fn ties_go_to_the_first_cell() {
        assert_eq!(select_best(&[Some(0.5), Some(0.7), None, Some(0.7)]), Some(1));
        assert_eq!(select_best(&[None, None]), None);
        assert_eq!(select_best(&[Some(0.2)]), Some(0));
    }
}
