//! Output files. Every JSON document carries `schema_version`.
//!
//! - `metrics.jsonl`: one JSON object per line, each with a `record` field
//!   (`step` and `eval` for runs, `cell` for sweeps, `toy_step` for toy traces).
//! - `summary.json`: one document with `kind` (`run`, `sweep`, `toy`, `eval`,
//!   `gradcheck`), digests and aggregate results.
//! - `embeddings.tsv`: header `seed id label e0 … e{d-1}`, one test example per line.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use crate::moo::PreferenceVector;
use crate::paretolab::{ray_gap, SolverTrace};
use crate::trainer::{RunReport, SweepReport};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn write_jsonl(path: &Path, records: impl IntoIterator<Item = Value>) -> Result<()> {
    let mut body = String::new();
    for r in records {
        body.push_str(&r.to_string());
        body.push('\n');
    }
    write(path, &body)
}

fn write_json(path: &Path, doc: &Value) -> Result<()> {
    let mut body = serde_json::to_string_pretty(doc).expect("json serializes");
    body.push('\n');
    write(path, &body)
}

pub fn emit_run(report: &RunReport, config: &Value, out: &Path) -> Result<()> {
    let mut records = Vec::new();
    for run in &report.runs {
        let mut evals = run.evals.iter().peekable();
        for s in &run.steps {
            records.push(json!({
                "record": "step",
                "seed": run.seed,
                "step": s.step,
                "pos": s.loss.pos,
                "neg": s.loss.neg,
                "ce": s.loss.ce,
                "beta": s.beta,
                "combination": s.combination,
                "zero_direction": s.zero_direction,
            }));
            while let Some(e) = evals.next_if(|e| e.step == s.step + 1) {
                records.push(json!({
                    "record": "eval",
                    "seed": run.seed,
                    "step": e.step,
                    "validation_accuracy": e.validation_accuracy,
                }));
            }
        }
    }
    write_jsonl(&out.join("metrics.jsonl"), records)?;
    let checkpoints: Vec<Value> = report
        .runs
        .iter()
        .map(|r| json!({"seed": r.seed, "path": format!("checkpoints/seed-{}.ckpt", r.seed), "step": r.best_step}))
        .collect();
    write_json(
        &out.join("summary.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "run",
            "mode": report.mode.as_str(),
            "config_digest": report.config_digest,
            "dataset_digest": report.dataset_digest,
            "aggregate": report.aggregate,
            "per_seed": report.seeds,
            "checkpoints": checkpoints,
            "config": config,
        }),
    )
}

pub fn emit_embeddings(rows: &[(u64, usize, usize, Vec<f64>)], out: &Path) -> Result<()> {
    let dim = rows.first().map_or(0, |r| r.3.len());
    let mut body = String::from("seed\tid\tlabel");
    for k in 0..dim {
        let _ = write!(body, "\te{k}");
    }
    body.push('\n');
    for (seed, id, label, e) in rows {
        let _ = write!(body, "{seed}\t{id}\t{label}");
        for v in e {
            let _ = write!(body, "\t{v}");
        }
        body.push('\n');
    }
    write(&out.join("embeddings.tsv"), &body)
}

pub fn emit_sweep(report: &SweepReport, config: &Value, config_digest: &str, dataset_digest: &str, out: &Path) -> Result<()> {
    write_jsonl(
        &out.join("metrics.jsonl"),
        report.cells.iter().map(|c| {
            let mut v = serde_json::to_value(c).expect("cell serializes");
            v["record"] = json!("cell");
            v
        }),
    )?;
    let best = report.best.map(|i| &report.cells[i]);
    write_json(
        &out.join("summary.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "sweep",
            "config_digest": config_digest,
            "dataset_digest": dataset_digest,
            "cells": report.cells.len(),
            "failed_cells": report.cells.iter().filter(|c| c.mean_validation_accuracy.is_none()).count(),
            "best": best,
            "config": config,
        }),
    )
}

pub fn emit_toy(trace: &SolverTrace, r: &PreferenceVector, dominance_ok: bool, config: &Value, config_digest: &str, out: &Path) -> Result<()> {
    write_jsonl(
        &out.join("metrics.jsonl"),
        trace.steps.iter().map(|s| {
            json!({
                "record": "toy_step",
                "step": s.step,
                "f1": s.f1,
                "f2": s.f2,
                "mu": s.mu,
                "ray_gap": s.ray_gap,
                "mode": s.mode,
                "beta": s.beta,
            })
        }),
    )?;
    write_json(
        &out.join("summary.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "toy",
            "config_digest": config_digest,
            "steps": trace.steps.len(),
            "final_point": trace.final_point,
            "final_ray_gap": ray_gap(&trace.final_point, r),
            "front_dominance_ok": dominance_ok,
            "config": config,
        }),
    )
}

pub fn emit_summary(doc: Value, out: &Path) -> Result<()> {
    let mut doc = doc;
    doc["schema_version"] = json!(SCHEMA_VERSION);
    write_json(&out.join("summary.json"), &doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_writes_header_only_files() {
        let dir = tempfile::tempdir().unwrap();
        let trace = SolverTrace { steps: vec![], final_point: [0.5, 0.5], final_theta: vec![0.0; 3] };
        let r = PreferenceVector::pair(0.5).unwrap();
        emit_toy(&trace, &r, true, &json!({}), "abc", dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join("metrics.jsonl")).unwrap(), "");
        let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["schema_version"], 1);
        assert_eq!(summary["steps"], 0);
        assert_eq!(summary["final_ray_gap"], 0.0);
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let trace = SolverTrace { steps: vec![], final_point: [0.5, 0.5], final_theta: vec![] };
        let r = PreferenceVector::pair(0.5).unwrap();
        let err = emit_toy(&trace, &r, true, &json!({}), "", Path::new("/nonexistent/dir")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert_eq!(err.exit_code(), 1);
    }
}
