use rand::Rng;
use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::diffcore::{Layout, ParamVector};
use crate::{seeding, Error, Result};

/// Encoder sizes: hashed input `D` → hidden `H` (ReLU, dropout) → embedding `d`
/// (L2-normalized) and logits `C`, both heads reading the same hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: usize,
    pub embed_dim: usize,
    pub classes: usize,
    pub dropout: f64,
}

impl Architecture {
    pub fn layout(&self) -> Layout {
        Layout::new()
            .push("hidden.weight", &[self.input_dim, self.hidden])
            .push("hidden.bias", &[self.hidden])
            .push("embed.weight", &[self.hidden, self.embed_dim])
            .push("embed.bias", &[self.embed_dim])
            .push("logits.weight", &[self.hidden, self.classes])
            .push("logits.bias", &[self.classes])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    Eval,
    /// Dropout active; the mask is drawn from this seed.
    Train { dropout_seed: u64 },
}

/// Activations the backward pass needs for one sample.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    input: FeatureVector,
    /// Pre-activation of the hidden layer.
    pre: Vec<f64>,
    /// Inverted-dropout scale per hidden unit (0 or 1/keep); `None` in eval mode.
    mask: Option<Vec<f64>>,
    /// Hidden activations after ReLU and dropout.
    hidden: Vec<f64>,
    embedding: Vec<f64>,
    raw_norm: f64,
}

#[derive(Debug, Clone)]
pub struct EncoderOutput {
    /// Unit-norm embedding.
    pub embedding: Vec<f64>,
    pub logits: Vec<f64>,
    pub cache: ForwardCache,
}

#[derive(Debug, Clone)]
pub struct Encoder {
    arch: Architecture,
    layout: Layout,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
}

impl Encoder {
    pub fn new(arch: Architecture) -> Result<Self> {
        let dims = [
            ("features.dim", arch.input_dim),
            ("model.hidden", arch.hidden),
            ("model.embed_dim", arch.embed_dim),
            ("classes", arch.classes),
        ];
        for (key, v) in dims {
            if v == 0 {
                return Err(Error::validation(key, "must be positive"));
            }
        }
        if !(0.0..1.0).contains(&arch.dropout) {
            return Err(Error::validation("train.dropout", "must lie in [0, 1)"));
        }
        let layout = arch.layout();
        let off = |name: &str| layout.segment(name).unwrap().offset;
        Ok(Self {
            w1: off("hidden.weight"),
            b1: off("hidden.bias"),
            w2: off("embed.weight"),
            b2: off("embed.bias"),
            w3: off("logits.weight"),
            b3: off("logits.bias"),
            arch,
            layout,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn check_params(&self, params: &ParamVector) -> Result<()> {
        if params.layout() != &self.layout {
            return Err(Error::Contract(
                "parameter layout does not match the encoder architecture".into(),
            ));
        }
        Ok(())
    }

    pub fn forward(
        &self,
        feat: &FeatureVector,
        params: &ParamVector,
        mode: ForwardMode,
    ) -> Result<EncoderOutput> {
        self.check_params(params)?;
        let Architecture {
            input_dim,
            hidden: h_dim,
            embed_dim: d,
            classes: c,
            dropout,
        } = self.arch;
        if feat.dim != input_dim {
            return Err(Error::Contract(format!(
                "feature dimension {} does not match encoder input {input_dim}",
                feat.dim
            )));
        }
        let p = params.values();

        let mut pre = p[self.b1..self.b1 + h_dim].to_vec();
        for (&j, &x) in feat.indices.iter().zip(&feat.weights) {
            let row = &p[self.w1 + j * h_dim..self.w1 + (j + 1) * h_dim];
            for (z, w) in pre.iter_mut().zip(row) {
                *z += x * w;
            }
        }

        let mask = match mode {
            ForwardMode::Train { dropout_seed } if dropout > 0.0 => {
                let keep = 1.0 - dropout;
                let mut rng = seeding::rng(dropout_seed, &[seeding::STREAM_DROPOUT]);
                Some(
                    (0..h_dim)
                        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect::<Vec<_>>(),
                )
            }
            _ => None,
        };
        let hidden: Vec<f64> = pre
            .iter()
            .enumerate()
            .map(|(k, &z)| {
                let a = z.max(0.0);
                mask.as_ref().map_or(a, |m| a * m[k])
            })
            .collect();

        let mut raw = p[self.b2..self.b2 + d].to_vec();
        let mut logits = p[self.b3..self.b3 + c].to_vec();
        for (k, &a) in hidden.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let w2 = &p[self.w2 + k * d..self.w2 + (k + 1) * d];
            for (v, w) in raw.iter_mut().zip(w2) {
                *v += a * w;
            }
            let w3 = &p[self.w3 + k * c..self.w3 + (k + 1) * c];
            for (l, w) in logits.iter_mut().zip(w3) {
                *l += a * w;
            }
        }

        let raw_norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(raw_norm >= 1e-12) {
            return Err(Error::DegenerateEmbedding { norm: raw_norm });
        }
        let embedding: Vec<f64> = raw.iter().map(|v| v / raw_norm).collect();
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::numeric("encoder forward", "non-finite logits"));
        }

        Ok(EncoderOutput {
            embedding: embedding.clone(),
            logits,
            cache: ForwardCache {
                generation: params.generation(),
                input: feat.clone(),
                pre,
                mask,
                hidden,
                embedding,
                raw_norm,
            },
        })
    }

    /// Gradient of a loss with respect to all parameters, given the loss's
    /// gradients with respect to each sample's unit embedding and logits.
    /// `None` means the upstream gradient is zero for that head.
    pub fn backward(
        &self,
        caches: &[&ForwardCache],
        d_embedding: Option<&[Vec<f64>]>,
        d_logits: Option<&[Vec<f64>]>,
        params: &ParamVector,
    ) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; params.len()];
        self.backward_into(caches, d_embedding, d_logits, params, &mut grad)?;
        Ok(grad)
    }

    /// [`Encoder::backward`] writing into a caller-owned buffer, which is
    /// overwritten.
    pub fn backward_into(
        &self,
        caches: &[&ForwardCache],
        d_embedding: Option<&[Vec<f64>]>,
        d_logits: Option<&[Vec<f64>]>,
        params: &ParamVector,
        grad: &mut [f64],
    ) -> Result<()> {
        self.check_params(params)?;
        if grad.len() != params.len() {
            return Err(Error::Contract(format!(
                "gradient buffer has {} entries, params have {}",
                grad.len(),
                params.len()
            )));
        }
        let n = caches.len();
        for (name, up) in [("embedding", d_embedding), ("logits", d_logits)] {
            if let Some(up) = up {
                if up.len() != n {
                    return Err(Error::Contract(format!(
                        "{} upstream {name} gradients for {n} cached samples",
                        up.len()
                    )));
                }
            }
        }
        let Architecture {
            hidden: h_dim,
            embed_dim: d,
            classes: c,
            ..
        } = self.arch;
        let p = params.values();
        grad.fill(0.0);

        for (s, cache) in caches.iter().enumerate() {
            if cache.generation != params.generation()
                || cache.hidden.len() != h_dim
                || cache.embedding.len() != d
            {
                return Err(Error::Contract(
                    "forward cache was produced with different parameters".into(),
                ));
            }
            let mut d_hidden = vec![0.0; h_dim];

            if let Some(up) = d_embedding {
                let g = &up[s];
                if g.len() != d {
                    return Err(Error::Contract(format!("embedding gradient has length {}", g.len())));
                }
                // Jacobian of v ↦ v/‖v‖ is (I − h hᵀ)/‖v‖.
                let radial: f64 = g.iter().zip(&cache.embedding).map(|(a, b)| a * b).sum();
                let dv: Vec<f64> = g
                    .iter()
                    .zip(&cache.embedding)
                    .map(|(gi, hi)| (gi - radial * hi) / cache.raw_norm)
                    .collect();
                for (o, &x) in dv.iter().enumerate() {
                    grad[self.b2 + o] += x;
                }
                for (k, &a) in cache.hidden.iter().enumerate() {
                    let base = self.w2 + k * d;
                    let w2 = &p[base..base + d];
                    let mut acc = 0.0;
                    for o in 0..d {
                        grad[base + o] += a * dv[o];
                        acc += w2[o] * dv[o];
                    }
                    d_hidden[k] += acc;
                }
            }

            if let Some(up) = d_logits {
                let g = &up[s];
                if g.len() != c {
                    return Err(Error::Contract(format!("logit gradient has length {}", g.len())));
                }
                for (o, &x) in g.iter().enumerate() {
                    grad[self.b3 + o] += x;
                }
                for (k, &a) in cache.hidden.iter().enumerate() {
                    let base = self.w3 + k * c;
                    let w3 = &p[base..base + c];
                    let mut acc = 0.0;
                    for o in 0..c {
                        grad[base + o] += a * g[o];
                        acc += w3[o] * g[o];
                    }
                    d_hidden[k] += acc;
                }
            }

            for k in 0..h_dim {
                let gate = if cache.pre[k] > 0.0 {
                    cache.mask.as_ref().map_or(1.0, |m| m[k])
                } else {
                    0.0
                };
                d_hidden[k] *= gate;
            }
            for (k, &dz) in d_hidden.iter().enumerate() {
                grad[self.b1 + k] += dz;
            }
            for (&j, &x) in cache.input.indices.iter().zip(&cache.input.weights) {
                let base = self.w1 + j * h_dim;
                for (gk, &dz) in grad[base..base + h_dim].iter_mut().zip(&d_hidden) {
                    *gk += x * dz;
                }
            }
        }
        Ok(())
    }
}
