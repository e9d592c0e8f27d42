//! The reference classifier family: stride-2 conv blocks (optional batch
//! norm) with ReLU, global average pooling, an optional hidden linear
//! layer whose output is the feature tap for the invariance loss, and a
//! linear classifier head.

use ndarray::{Array1, Array2, Array4};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    bn_backward, bn_forward_eval, bn_forward_train, conv_backward, conv_forward,
    gap_backward, gap_forward, linear_backward, linear_forward, relu_backward, relu_forward,
    BnCache, KERNEL,
};
use super::Scalar;
use crate::error::{DoeError, Result};
use crate::rng;

/// Forward mode: train uses batch statistics, eval uses running averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Architecture description. `conv4` is the audit classifier (batch norm,
/// hidden linear feature layer); `tiny` is the three-layer probe
/// classifier without normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub in_channels: usize,
    pub conv_channels: Vec<usize>,
    pub batch_norm: bool,
    pub fc_hidden: Option<usize>,
    pub classes: usize,
}

impl ArchSpec {
    /// Four conv blocks 32→64→128→256 (scaled by `width_mult`), batch
    /// norm, 128-d (scaled) feature layer, three classes, grayscale input.
    pub fn conv4(width_mult: f64) -> Self {
        let scale = |base: usize| ((base as f64 * width_mult).round() as usize).max(1);
        Self {
            in_channels: 1,
            conv_channels: vec![scale(32), scale(64), scale(128), scale(256)],
            batch_norm: true,
            fc_hidden: Some(scale(128)),
            classes: 3,
        }
    }

    /// Three conv blocks 16→32→64, no normalization, direct linear head,
    /// RGB input.
    pub fn tiny() -> Self {
        Self {
            in_channels: 3,
            conv_channels: vec![16, 32, 64],
            batch_norm: false,
            fc_hidden: None,
            classes: 3,
        }
    }

    /// Dimension of the feature tap used by the invariance loss.
    pub fn feature_dim(&self) -> usize {
        self.fc_hidden
            .unwrap_or_else(|| *self.conv_channels.last().expect("at least one conv block"))
    }

    fn validate(&self) -> Result<()> {
        if self.conv_channels.is_empty() || self.classes < 2 || self.in_channels == 0 {
            return Err(DoeError::InvalidConfig(format!(
                "invalid architecture: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Conv<F> {
    pub w: Array2<F>,
    pub b: Array1<F>,
}

#[derive(Debug, Clone)]
pub(crate) struct Bn<F> {
    pub gamma: Array1<F>,
    pub beta: Array1<F>,
    pub running_mean: Array1<F>,
    pub running_var: Array1<F>,
}

#[derive(Debug, Clone)]
pub(crate) struct Linear<F> {
    pub w: Array2<F>,
    pub b: Array1<F>,
}

/// All trainable parameters plus running normalization statistics.
#[derive(Debug, Clone)]
pub struct ModelParams<F> {
    pub arch: ArchSpec,
    pub(crate) convs: Vec<Conv<F>>,
    pub(crate) bns: Vec<Bn<F>>,
    pub(crate) fc_hidden: Option<Linear<F>>,
    pub(crate) fc_out: Linear<F>,
}

/// Mutable or shared views over tensors, keyed by a stable name. The order
/// is the canonical parameter order used by the optimizer and checkpoints.
pub struct NamedTensor<'a, F> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [F],
}

impl<F: Scalar> ModelParams<F> {
    /// Fan-in-scaled uniform initialization; gamma 1, beta 0, running
    /// stats at the identity.
    pub fn init(arch: ArchSpec, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut convs = Vec::new();
        let mut bns = Vec::new();
        let mut tensor_idx = 0u64;
        let mut cin = arch.in_channels;
        for &cout in &arch.conv_channels {
            let fan_in = cin * KERNEL * KERNEL;
            convs.push(Conv {
                w: he_uniform((cout, fan_in), seed, &mut tensor_idx),
                b: Array1::zeros(cout),
            });
            if arch.batch_norm {
                bns.push(Bn {
                    gamma: Array1::from_elem(cout, F::one()),
                    beta: Array1::zeros(cout),
                    running_mean: Array1::zeros(cout),
                    running_var: Array1::from_elem(cout, F::one()),
                });
            }
            cin = cout;
        }
        let pooled_dim = *arch.conv_channels.last().unwrap();
        let fc_hidden = arch.fc_hidden.map(|hidden| Linear {
            w: he_uniform((hidden, pooled_dim), seed, &mut tensor_idx),
            b: Array1::zeros(hidden),
        });
        let head_in = arch.fc_hidden.unwrap_or(pooled_dim);
        let fc_out = Linear {
            w: he_uniform((arch.classes, head_in), seed, &mut tensor_idx),
            b: Array1::zeros(arch.classes),
        };
        Ok(Self {
            arch,
            convs,
            bns,
            fc_hidden,
            fc_out,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.param_slices().iter().map(|(_, s)| s.len()).sum()
    }

    /// Trainable tensors in canonical order (running stats excluded).
    pub fn param_slices(&self) -> Vec<(String, &[F])> {
        let mut out = Vec::new();
        for (i, conv) in self.convs.iter().enumerate() {
            out.push((format!("conv{i}.w"), conv.w.as_slice().unwrap()));
            out.push((format!("conv{i}.b"), conv.b.as_slice().unwrap()));
        }
        for (i, bn) in self.bns.iter().enumerate() {
            out.push((format!("bn{i}.gamma"), bn.gamma.as_slice().unwrap()));
            out.push((format!("bn{i}.beta"), bn.beta.as_slice().unwrap()));
        }
        if let Some(fc) = &self.fc_hidden {
            out.push(("fc_hidden.w".into(), fc.w.as_slice().unwrap()));
            out.push(("fc_hidden.b".into(), fc.b.as_slice().unwrap()));
        }
        out.push(("fc_out.w".into(), self.fc_out.w.as_slice().unwrap()));
        out.push(("fc_out.b".into(), self.fc_out.b.as_slice().unwrap()));
        out
    }

    /// Mutable twin of [`param_slices`], same order.
    pub fn param_slices_mut(&mut self) -> Vec<(String, &mut [F])> {
        let mut out: Vec<(String, &mut [F])> = Vec::new();
        for (i, conv) in self.convs.iter_mut().enumerate() {
            out.push((format!("conv{i}.w"), conv.w.as_slice_mut().unwrap()));
            out.push((format!("conv{i}.b"), conv.b.as_slice_mut().unwrap()));
        }
        for (i, bn) in self.bns.iter_mut().enumerate() {
            out.push((format!("bn{i}.gamma"), bn.gamma.as_slice_mut().unwrap()));
            out.push((format!("bn{i}.beta"), bn.beta.as_slice_mut().unwrap()));
        }
        if let Some(fc) = self.fc_hidden.as_mut() {
            out.push(("fc_hidden.w".into(), fc.w.as_slice_mut().unwrap()));
            out.push(("fc_hidden.b".into(), fc.b.as_slice_mut().unwrap()));
        }
        out.push(("fc_out.w".into(), self.fc_out.w.as_slice_mut().unwrap()));
        out.push(("fc_out.b".into(), self.fc_out.b.as_slice_mut().unwrap()));
        out
    }

    /// Every state tensor for checkpointing: parameters plus running
    /// normalization statistics.
    pub fn state_tensors(&self) -> Vec<NamedTensor<'_, F>> {
        let mut list = Vec::new();
        for (i, conv) in self.convs.iter().enumerate() {
            list.push(NamedTensor {
                name: format!("conv{i}.w"),
                shape: conv.w.shape().to_vec(),
                data: conv.w.as_slice().unwrap(),
            });
            list.push(NamedTensor {
                name: format!("conv{i}.b"),
                shape: conv.b.shape().to_vec(),
                data: conv.b.as_slice().unwrap(),
            });
        }
        for (i, bn) in self.bns.iter().enumerate() {
            for (suffix, arr) in [
                ("gamma", &bn.gamma),
                ("beta", &bn.beta),
                ("running_mean", &bn.running_mean),
                ("running_var", &bn.running_var),
            ] {
                list.push(NamedTensor {
                    name: format!("bn{i}.{suffix}"),
                    shape: arr.shape().to_vec(),
                    data: arr.as_slice().unwrap(),
                });
            }
        }
        if let Some(fc) = &self.fc_hidden {
            list.push(NamedTensor {
                name: "fc_hidden.w".into(),
                shape: fc.w.shape().to_vec(),
                data: fc.w.as_slice().unwrap(),
            });
            list.push(NamedTensor {
                name: "fc_hidden.b".into(),
                shape: fc.b.shape().to_vec(),
                data: fc.b.as_slice().unwrap(),
            });
        }
        list.push(NamedTensor {
            name: "fc_out.w".into(),
            shape: self.fc_out.w.shape().to_vec(),
            data: self.fc_out.w.as_slice().unwrap(),
        });
        list.push(NamedTensor {
            name: "fc_out.b".into(),
            shape: self.fc_out.b.shape().to_vec(),
            data: self.fc_out.b.as_slice().unwrap(),
        });
        list
    }

    /// Writes raw tensor data back by name (used by checkpoint loading).
    pub fn load_tensor(&mut self, name: &str, data: &[F]) -> Result<()> {
        let fail = || DoeError::Checkpoint(format!("unknown or misshapen tensor '{name}'"));
        let dst: &mut [F] = if let Some(rest) = name.strip_prefix("conv") {
            let (idx, field) = rest.split_once('.').ok_or_else(fail)?;
            let i: usize = idx.parse().map_err(|_| fail())?;
            let conv = self.convs.get_mut(i).ok_or_else(fail)?;
            match field {
                "w" => conv.w.as_slice_mut().unwrap(),
                "b" => conv.b.as_slice_mut().unwrap(),
                _ => return Err(fail()),
            }
        } else if let Some(rest) = name.strip_prefix("bn") {
            let (idx, field) = rest.split_once('.').ok_or_else(fail)?;
            let i: usize = idx.parse().map_err(|_| fail())?;
            let bn = self.bns.get_mut(i).ok_or_else(fail)?;
            match field {
                "gamma" => bn.gamma.as_slice_mut().unwrap(),
                "beta" => bn.beta.as_slice_mut().unwrap(),
                "running_mean" => bn.running_mean.as_slice_mut().unwrap(),
                "running_var" => bn.running_var.as_slice_mut().unwrap(),
                _ => return Err(fail()),
            }
        } else {
            match name {
                "fc_hidden.w" => self
                    .fc_hidden
                    .as_mut()
                    .ok_or_else(fail)?
                    .w
                    .as_slice_mut()
                    .unwrap(),
                "fc_hidden.b" => self
                    .fc_hidden
                    .as_mut()
                    .ok_or_else(fail)?
                    .b
                    .as_slice_mut()
                    .unwrap(),
                "fc_out.w" => self.fc_out.w.as_slice_mut().unwrap(),
                "fc_out.b" => self.fc_out.b.as_slice_mut().unwrap(),
                _ => return Err(fail()),
            }
        };
        if dst.len() != data.len() {
            return Err(fail());
        }
        dst.copy_from_slice(data);
        Ok(())
    }

    /// Applies the running-average update after a train-mode forward pass.
    pub fn update_running_stats(&mut self, stats: &[(Array1<F>, Array1<F>)]) {
        let keep = F::from_f64(super::layers::BN_MOMENTUM).unwrap();
        let take = F::one() - keep;
        for (bn, (mean, var)) in self.bns.iter_mut().zip(stats) {
            for (r, &m) in bn.running_mean.iter_mut().zip(mean.iter()) {
                *r = keep * *r + take * m;
            }
            for (r, &v) in bn.running_var.iter_mut().zip(var.iter()) {
                *r = keep * *r + take * v;
            }
        }
    }

    /// Forward pass. Returns logits, the invariance-loss feature tap, and
    /// (in train mode) the tape needed for the backward pass.
    pub fn forward(&self, x: &Array4<F>, mode: Mode) -> Result<ForwardPass<F>> {
        let (_, cin, _, _) = x.dim();
        if cin != self.arch.in_channels {
            return Err(DoeError::DimensionMismatch(format!(
                "input has {cin} channels, architecture expects {}",
                self.arch.in_channels
            )));
        }
        let train = mode == Mode::Train;

        let mut acts: Vec<Array4<F>> = vec![x.clone()];
        let mut pre_bn: Vec<Array4<F>> = Vec::new();
        let mut bn_caches: Vec<Option<BnCache<F>>> = Vec::new();
        let mut batch_stats: Vec<(Array1<F>, Array1<F>)> = Vec::new();

        for (i, conv) in self.convs.iter().enumerate() {
            let z = conv_forward(&conv.w, &conv.b, acts.last().unwrap());
            let normalized = if self.arch.batch_norm {
                let bn = &self.bns[i];
                if train {
                    let (y, cache) = bn_forward_train(&bn.gamma, &bn.beta, &z);
                    batch_stats.push((cache.mean.clone(), cache.var.clone()));
                    bn_caches.push(Some(cache));
                    pre_bn.push(z);
                    y
                } else {
                    let y = bn_forward_eval(
                        &bn.gamma,
                        &bn.beta,
                        &bn.running_mean,
                        &bn.running_var,
                        &z,
                    );
                    bn_caches.push(None);
                    pre_bn.push(z);
                    y
                }
            } else {
                bn_caches.push(None);
                pre_bn.push(z.clone());
                z
            };
            acts.push(relu_forward(&normalized));
        }

        let pooled = gap_forward(acts.last().unwrap());
        let (features, hidden_post) = match &self.fc_hidden {
            Some(fc) => {
                let pre = linear_forward(&fc.w, &fc.b, &pooled);
                let post = relu2(&pre);
                (pre, Some(post))
            }
            None => (pooled.clone(), None),
        };
        let head_in = hidden_post.as_ref().unwrap_or(&pooled);
        let logits = linear_forward(&self.fc_out.w, &self.fc_out.b, head_in);

        for v in logits.iter().chain(features.iter()) {
            if !v.is_finite() {
                return Err(DoeError::NonFinite("forward pass output".into()));
            }
        }

        Ok(ForwardPass {
            logits,
            features,
            batch_stats,
            tape: Tape {
                acts,
                pre_bn,
                bn_caches,
                pooled,
                hidden_post,
            },
        })
    }

    /// Reverse pass from logit gradients and an optional feature-tap
    /// gradient. Requires a train-mode forward tape.
    pub fn backward(
        &self,
        pass: &ForwardPass<F>,
        dlogits: &Array2<F>,
        dfeatures: Option<&Array2<F>>,
    ) -> GradSet<F> {
        let tape = &pass.tape;
        let head_in = tape.hidden_post.as_ref().unwrap_or(&tape.pooled);
        let (dhead_in, dw_out, db_out) = linear_backward(&self.fc_out.w, head_in, dlogits);

        let (mut dpooled, fc_hidden_grad) = match (&self.fc_hidden, &tape.hidden_post) {
            (Some(fc), Some(post)) => {
                // Gradient through the post-ReLU path, plus the direct
                // feature-tap gradient on the pre-ReLU output.
                let mut dpre = relu2_backward(post, &dhead_in);
                if let Some(df) = dfeatures {
                    dpre += df;
                }
                let (dpooled, dw, db) = linear_backward(&fc.w, &tape.pooled, &dpre);
                (dpooled, Some((dw, db)))
            }
            _ => {
                let mut dpooled = dhead_in;
                if let Some(df) = dfeatures {
                    dpooled += df;
                }
                (dpooled, None)
            }
        };

        for v in dpooled.iter_mut() {
            if !v.is_finite() {
                *v = F::zero();
            }
        }

        let last = tape.acts.len() - 1;
        let (_, _, h_last, w_last) = tape.acts[last].dim();
        let mut dact = gap_backward(&dpooled, h_last, w_last);

        let mut conv_grads: Vec<(Array2<F>, Array1<F>)> = vec![];
        let mut bn_grads: Vec<(Array1<F>, Array1<F>)> = vec![];
        conv_grads.resize_with(self.convs.len(), || {
            (Array2::zeros((0, 0)), Array1::zeros(0))
        });
        bn_grads.resize_with(self.bns.len(), || (Array1::zeros(0), Array1::zeros(0)));

        for i in (0..self.convs.len()).rev() {
            let dnorm = relu_backward(&tape.acts[i + 1], &dact);
            let dconv_out = if self.arch.batch_norm {
                let cache = tape.bn_caches[i]
                    .as_ref()
                    .expect("backward needs a train-mode tape");
                let (dz, dgamma, dbeta) =
                    bn_backward(&self.bns[i].gamma, &tape.pre_bn[i], cache, &dnorm);
                bn_grads[i] = (dgamma, dbeta);
                dz
            } else {
                dnorm
            };
            let (dx, dw, db) = conv_backward(&self.convs[i].w, &tape.acts[i], &dconv_out);
            conv_grads[i] = (dw, db);
            dact = dx;
        }

        GradSet {
            convs: conv_grads,
            bns: bn_grads,
            fc_hidden: fc_hidden_grad,
            fc_out: (dw_out, db_out),
        }
    }
}

/// He-style uniform draw in [-sqrt(6/fan_in), sqrt(6/fan_in)].
fn he_uniform<F: Scalar>(shape: (usize, usize), seed: u64, tensor_idx: &mut u64) -> Array2<F> {
    let mut stream = rng::stream(seed, "init", *tensor_idx);
    *tensor_idx += 1;
    let limit = (6.0 / shape.1 as f64).sqrt();
    Array2::from_shape_fn(shape, |_| {
        F::from_f64(stream.random_range(-limit..limit)).unwrap()
    })
}

fn relu2<F: Scalar>(x: &Array2<F>) -> Array2<F> {
    x.mapv(|v| if v > F::zero() { v } else { F::zero() })
}

fn relu2_backward<F: Scalar>(post: &Array2<F>, dy: &Array2<F>) -> Array2<F> {
    let mut dx = dy.clone();
    for (d, &p) in dx.iter_mut().zip(post.iter()) {
        if p <= F::zero() {
            *d = F::zero();
        }
    }
    dx
}

/// Output of a forward pass plus the tape for the backward pass.
pub struct ForwardPass<F> {
    pub logits: Array2<F>,
    pub features: Array2<F>,
    /// Per-BN-layer (mean, biased variance) of the batch, train mode only.
    pub batch_stats: Vec<(Array1<F>, Array1<F>)>,
    pub(crate) tape: Tape<F>,
}

pub(crate) struct Tape<F> {
    /// acts[0] is the input; acts[i+1] the post-ReLU output of block i.
    acts: Vec<Array4<F>>,
    pre_bn: Vec<Array4<F>>,
    bn_caches: Vec<Option<BnCache<F>>>,
    pooled: Array2<F>,
    hidden_post: Option<Array2<F>>,
}

/// Gradients in the same structure as the trainable parameters.
pub struct GradSet<F> {
    pub(crate) convs: Vec<(Array2<F>, Array1<F>)>,
    pub(crate) bns: Vec<(Array1<F>, Array1<F>)>,
    pub(crate) fc_hidden: Option<(Array2<F>, Array1<F>)>,
    pub(crate) fc_out: (Array2<F>, Array1<F>),
}

impl<F: Scalar> GradSet<F> {
    /// Accumulates another gradient set (fixed field order).
    pub fn add_assign(&mut self, other: &GradSet<F>) {
        for ((w, b), (ow, ob)) in self.convs.iter_mut().zip(&other.convs) {
            *w += ow;
            *b += ob;
        }
        for ((g, bt), (og, ob)) in self.bns.iter_mut().zip(&other.bns) {
            *g += og;
            *bt += ob;
        }
        if let (Some((w, b)), Some((ow, ob))) = (self.fc_hidden.as_mut(), other.fc_hidden.as_ref())
        {
            *w += ow;
            *b += ob;
        }
        self.fc_out.0 += &other.fc_out.0;
        self.fc_out.1 += &other.fc_out.1;
    }

    /// Flattened views in the canonical parameter order.
    pub fn slices(&self) -> Vec<&[F]> {
        let mut out = Vec::new();
        for (w, b) in &self.convs {
            out.push(w.as_slice().unwrap());
            out.push(b.as_slice().unwrap());
        }
        for (g, b) in &self.bns {
            out.push(g.as_slice().unwrap());
            out.push(b.as_slice().unwrap());
        }
        if let Some((w, b)) = &self.fc_hidden {
            out.push(w.as_slice().unwrap());
            out.push(b.as_slice().unwrap());
        }
        out.push(self.fc_out.0.as_slice().unwrap());
        out.push(self.fc_out.1.as_slice().unwrap());
        out
    }

    pub fn all_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}
