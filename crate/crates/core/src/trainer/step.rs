use serde::{Deserialize, Serialize};

use super::Mode;
use crate::contrastive::{cross_entropy, loss_neg, loss_pos, ClassBlock, ClassBlockedBatch, LossVector};
use crate::diffcore::{adamw_step, OptimizerState, ParamVector};
use crate::encoder::{Encoder, EncoderOutput, FeatureVector, ForwardMode};
use crate::moo::{epo_weights, ObjectivePoint, PreferenceVector};
use crate::pipeline::BatchPlan;
use crate::{seeding, Error, Result};

/// Below this norm the contrastive part of an EPO update is treated as zero.
pub const ZERO_DIRECTION_NORM: f64 = 1e-12;

/// Settings a single update needs.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSettings {
    pub mode: Mode,
    pub tau: f64,
    pub lambda: f64,
    pub r: Option<PreferenceVector>,
    pub eps_balance: f64,
}

/// How the contrastive gradients were combined in one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    CeOnly,
    Ls,
    EpoBalance,
    EpoDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub loss: LossVector,
    /// Weights on (∇ℓ_pos, ∇ℓ_neg); zero in `ce` mode.
    pub beta: [f64; 2],
    pub combination: Combination,
    /// The contrastive direction vanished and only cross-entropy was applied.
    pub zero_direction: bool,
}

/// Per-objective parameter gradients for one batch. Buffers are reused
/// across steps.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
    pub ce: Vec<f64>,
}

impl GradientSet {
    pub fn zeros(len: usize) -> Self {
        Self { pos: vec![0.0; len], neg: vec![0.0; len], ce: vec![0.0; len] }
    }
}

/// Forward a batch in train mode, compute the three losses, and backpropagate
/// each objective separately into `grads`. The contrastive buffers are left
/// untouched when `need_contrastive` is false.
#[allow(clippy::too_many_arguments)]
pub fn batch_gradients(
    encoder: &Encoder,
    params: &ParamVector,
    plan: &BatchPlan,
    features: &[FeatureVector],
    tau: f64,
    step_seed: u64,
    need_contrastive: bool,
    grads: &mut GradientSet,
) -> Result<LossVector> {
    let mut outputs: Vec<EncoderOutput> = Vec::with_capacity(plan.len());
    let mut labels = Vec::with_capacity(plan.len());
    let mut blocks = Vec::with_capacity(plan.blocks.len());
    for (class, ids) in &plan.blocks {
        let mut rows = Vec::with_capacity(ids.len());
        for &id in ids {
            let dropout_seed = seeding::derive(step_seed, &[seeding::STREAM_DROPOUT, outputs.len() as u64]);
            let out = encoder.forward(&features[id], params, ForwardMode::Train { dropout_seed })?;
            rows.push(out.embedding.clone());
            labels.push(*class);
            outputs.push(out);
        }
        blocks.push(ClassBlock::new(*class, rows));
    }
    let caches: Vec<_> = outputs.iter().map(|o| &o.cache).collect();
    let logits: Vec<Vec<f64>> = outputs.iter().map(|o| o.logits.clone()).collect();

    let batch = ClassBlockedBatch::new(blocks, tau)?;
    let pos = loss_pos(&batch)?;
    let neg = loss_neg(&batch)?;
    let (ce, d_logits) = cross_entropy(&logits, &labels)?;

    encoder.backward_into(&caches, None, Some(&d_logits), params, &mut grads.ce)?;
    if need_contrastive {
        let flat = |g: Vec<Vec<Vec<f64>>>| -> Vec<Vec<f64>> { g.into_iter().flatten().collect() };
        encoder.backward_into(&caches, Some(&flat(pos.grad)), None, params, &mut grads.pos)?;
        encoder.backward_into(&caches, Some(&flat(neg.grad)), None, params, &mut grads.neg)?;
    }
    Ok(LossVector { pos: pos.value, neg: neg.value, ce })
}

/// `λ(β₁g_pos + β₂g_neg) + (1−λ)g_ce`, elementwise.
pub fn combine(grads: &GradientSet, lambda: f64, beta: [f64; 2]) -> Vec<f64> {
    grads
        .pos
        .iter()
        .zip(&grads.neg)
        .zip(&grads.ce)
        .map(|((p, n), c)| lambda * (beta[0] * p + beta[1] * n) + (1.0 - lambda) * c)
        .collect()
}

/// [`combine`] overwriting `grads.ce` with the result.
pub fn combine_in_place(grads: &mut GradientSet, lambda: f64, beta: [f64; 2]) {
    for ((c, p), n) in grads.ce.iter_mut().zip(&grads.pos).zip(&grads.neg) {
        *c = lambda * (beta[0] * p + beta[1] * n) + (1.0 - lambda) * *c;
    }
}

/// Combination weights for the contrastive gradients under the configured mode.
pub fn contrastive_weights(
    settings: &StepSettings,
    loss: &LossVector,
    grads: &GradientSet,
) -> Result<([f64; 2], Combination)> {
    let r = || {
        settings
            .r
            .as_ref()
            .ok_or_else(|| Error::validation("r", "a preference vector is required"))
    };
    match settings.mode {
        Mode::Ce => Ok(([0.0, 0.0], Combination::CeOnly)),
        Mode::CeLs => {
            let s = r()?.as_slice();
            Ok(([s[0], s[1]], Combination::Ls))
        }
        Mode::CeEpo => {
            // Both contrastive losses are bounded below by −1/τ.
            let shift = 1.0 / settings.tau;
            let shifted = ObjectivePoint::new(vec![(loss.pos + shift).max(0.0), (loss.neg + shift).max(0.0)])?;
            let w = epo_weights(&shifted, &grads.pos, &grads.neg, r()?, settings.eps_balance)?;
            let combination = match w.mode {
                crate::moo::EpoMode::Balance => Combination::EpoBalance,
                crate::moo::EpoMode::Descent => Combination::EpoDescent,
            };
            Ok((w.beta, combination))
        }
    }
}

/// One optimizer update on the batch described by `plan`. `grads` is scratch
/// space sized to the parameters.
#[allow(clippy::too_many_arguments)]
pub fn train_step(
    encoder: &Encoder,
    params: &mut ParamVector,
    state: &mut OptimizerState,
    plan: &BatchPlan,
    features: &[FeatureVector],
    settings: &StepSettings,
    step: usize,
    step_seed: u64,
    grads: &mut GradientSet,
) -> Result<StepRecord> {
    let need_contrastive = settings.mode != Mode::Ce;
    let loss = batch_gradients(encoder, params, plan, features, settings.tau, step_seed, need_contrastive, grads)?;
    if !loss.is_finite() {
        return Err(Error::numeric(
            format!("training step {step}"),
            format!("non-finite loss {loss:?}"),
        ));
    }

    let (beta, combination, zero_direction) = if need_contrastive {
        let (beta, combination) = contrastive_weights(settings, &loss, grads)?;
        let lambda = settings.lambda;
        let is_epo = matches!(combination, Combination::EpoBalance | Combination::EpoDescent);
        let direction_norm = || {
            grads
                .pos
                .iter()
                .zip(&grads.neg)
                .map(|(p, n)| {
                    let v = lambda * (beta[0] * p + beta[1] * n);
                    v * v
                })
                .sum::<f64>()
                .sqrt()
        };
        if is_epo && direction_norm() < ZERO_DIRECTION_NORM {
            grads.ce.iter_mut().for_each(|c| *c *= 1.0 - lambda);
            (beta, combination, true)
        } else {
            combine_in_place(grads, lambda, beta);
            (beta, combination, false)
        }
    } else {
        ([0.0, 0.0], Combination::CeOnly, false)
    };
    adamw_step(params, &grads.ce, state).map_err(|e| match e {
        Error::Numeric { context, detail } => Error::numeric(format!("training step {step}: {context}"), detail),
        other => other,
    })?;
    Ok(StepRecord { step, loss, beta, combination, zero_direction })
}
