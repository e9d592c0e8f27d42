//! Minimal trainable classifier with exact gradients.
//!
//! The network family covers the audit classifier (four stride-2 conv
//! blocks with batch norm, feature tap on the hidden linear layer) and the
//! tiny three-block probe classifier. Everything is generic over f32/f64;
//! training runs in f32, while gradient verification instantiates f64.
//!
//! Training is reproducible: initialization, shuffling, and pair sampling
//! derive from the config seed, and all batched reductions use a fixed
//! chunk decomposition, so identical seeds give bitwise-identical models
//! at any thread count.

pub mod adam;
pub mod checkpoint;
pub mod layers;
pub mod loss;
pub mod model;

use ndarray::{s, Array2, Array4};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adam::{cosine_lr, Adam};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use loss::{cross_entropy, invariance_loss, per_sample_ce_f64, total_loss};
pub use model::{ArchSpec, ForwardPass, GradSet, Mode, ModelParams};

use crate::error::{DoeError, Result};
use crate::exec;
use crate::rng;
use crate::synthgen::{Dataset, LabeledImage};

/// Floating-point element type for network tensors.
pub trait Scalar: ndarray::NdFloat + num_traits::FromPrimitive {}
impl Scalar for f32 {}
impl Scalar for f64 {}

/// Training hyperparameters. Optimizer is Adam (β₁ = 0.9, β₂ = 0.999)
/// under a cosine-annealing schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Weight of the invariance term in the combined objective.
    pub lambda: f64,
    pub inv_pairs_per_batch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            batch_size: 256,
            epochs: 15,
            lambda: 0.5,
            inv_pairs_per_batch: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(DoeError::InvalidConfig(
                "learning rate must be positive".into(),
            ));
        }
        if self.lambda < 0.0 {
            return Err(DoeError::InvalidConfig("lambda must be >= 0".into()));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(DoeError::InvalidConfig(
                "batch size and epochs must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Counterfactual pair images as stacked tensors (a[i] pairs with b[i]).
pub struct PairTensors<F> {
    pub a: Array4<F>,
    pub b: Array4<F>,
}

impl<F: Scalar> PairTensors<F> {
    pub fn new(a: Array4<F>, b: Array4<F>) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(DoeError::DimensionMismatch(
                "pair tensor halves disagree in shape".into(),
            ));
        }
        Ok(Self { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Converts interleaved byte images into a planar [N, C, H, W] tensor
/// scaled to [0, 1].
pub fn images_to_tensor<F: Scalar>(images: &[&LabeledImage]) -> Result<Array4<F>> {
    if images.is_empty() {
        return Err(DoeError::EmptyInput("image batch".into()));
    }
    let (h, w, c) = (images[0].height, images[0].width, images[0].channels);
    let mut out = Array4::zeros((images.len(), c, h, w));
    let scale = F::from_f64(1.0 / 255.0).unwrap();
    {
        let slice = out.as_slice_mut().expect("standard layout");
        let stride = c * h * w;
        exec::process_chunks(slice, stride, |i, dst| {
            let img = images[i];
            for ci in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        dst[ci * h * w + y * w + x] =
                            F::from_u8(img.pixels[(y * w + x) * c + ci]).unwrap() * scale;
                    }
                }
            }
        });
    }
    Ok(out)
}

/// Dataset to (images, labels) tensors.
pub fn dataset_tensors<F: Scalar>(data: &Dataset) -> Result<(Array4<F>, Vec<usize>)> {
    let refs: Vec<&LabeledImage> = data.samples().iter().collect();
    let images = images_to_tensor(&refs)?;
    let labels = data.samples().iter().map(|s| s.label).collect();
    Ok((images, labels))
}

fn gather_rows<F: Scalar>(images: &Array4<F>, indices: &[usize]) -> Array4<F> {
    let (_, c, h, w) = images.dim();
    let mut out = Array4::zeros((indices.len(), c, h, w));
    for (row, &idx) in indices.iter().enumerate() {
        out.slice_mut(s![row, .., .., ..])
            .assign(&images.slice(s![idx, .., .., ..]));
    }
    out
}

/// Combined-objective loss and gradients for one batch (train mode).
/// Returns (task, inv, grads). Pairs contribute only through the feature
/// invariance term, weighted by `lambda`.
pub fn loss_and_grads<F: Scalar>(
    params: &ModelParams<F>,
    x: &Array4<F>,
    labels: &[usize],
    pairs: Option<(&Array4<F>, &Array4<F>)>,
    lambda: f64,
) -> Result<(F, F, GradSet<F>)> {
    let fwd = params.forward(x, Mode::Train)?;
    let (task, _, dlogits) = cross_entropy(&fwd.logits, labels)?;
    let mut grads = params.backward(&fwd, &dlogits, None);

    let mut inv = F::zero();
    if let Some((pa, pb)) = pairs {
        if lambda > 0.0 {
            let lam = F::from_f64(lambda).unwrap();
            let fa = params.forward(pa, Mode::Train)?;
            let fb = params.forward(pb, Mode::Train)?;
            let (inv_loss, dfa, dfb) = invariance_loss(&fa.features, &fb.features)?;
            inv = inv_loss;
            let zero = Array2::zeros(fa.logits.dim());
            let ga = params.backward(&fa, &zero, Some(&dfa.mapv(|v| v * lam)));
            let gb = params.backward(&fb, &zero, Some(&dfb.mapv(|v| v * lam)));
            grads.add_assign(&ga);
            grads.add_assign(&gb);
        }
    }
    Ok((task, inv, grads))
}

/// Forward-only combined objective value, matching [`loss_and_grads`].
pub fn loss_value<F: Scalar>(
    params: &ModelParams<F>,
    x: &Array4<F>,
    labels: &[usize],
    pairs: Option<(&Array4<F>, &Array4<F>)>,
    lambda: f64,
) -> Result<F> {
    let fwd = params.forward(x, Mode::Train)?;
    let (task, _, _) = cross_entropy(&fwd.logits, labels)?;
    let mut total = task;
    if let Some((pa, pb)) = pairs {
        if lambda > 0.0 {
            let fa = params.forward(pa, Mode::Train)?;
            let fb = params.forward(pb, Mode::Train)?;
            let (inv, _, _) = invariance_loss(&fa.features, &fb.features)?;
            total = total + F::from_f64(lambda).unwrap() * inv;
        }
    }
    Ok(total)
}

/// Trains over shuffled batches for `config.epochs`. When pairs are
/// supplied and λ > 0, each step draws `inv_pairs_per_batch` pairs into
/// the invariance term. Running normalization statistics follow the main
/// task batches.
pub fn train<F: Scalar>(
    mut params: ModelParams<F>,
    data: &Dataset,
    pairs: Option<&PairTensors<F>>,
    config: &TrainConfig,
) -> Result<ModelParams<F>> {
    config.validate()?;
    if data.is_empty() {
        return Err(DoeError::EmptyInput("training dataset".into()));
    }
    let (images, labels) = dataset_tensors::<F>(data)?;
    let n = labels.len();
    let steps_per_epoch = n.div_ceil(config.batch_size);
    let total_steps = config.epochs * steps_per_epoch;
    let use_pairs = pairs.map_or(false, |p| !p.is_empty())
        && config.lambda > 0.0
        && config.inv_pairs_per_batch > 0;

    let mut adam = Adam::new(&params);
    let mut step = 0usize;
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::stream(config.seed, "shuffle", epoch as u64));
        let mut epoch_task = 0.0f64;
        let mut epoch_batches = 0usize;

        for batch_indices in order.chunks(config.batch_size) {
            let bx = gather_rows(&images, batch_indices);
            let by: Vec<usize> = batch_indices.iter().map(|&i| labels[i]).collect();

            let fwd = params.forward(&bx, Mode::Train)?;
            let (task, _, dlogits) = cross_entropy(&fwd.logits, &by)?;
            let mut grads = params.backward(&fwd, &dlogits, None);

            if use_pairs {
                let p = pairs.unwrap();
                let lam = F::from_f64(config.lambda).unwrap();
                let mut pair_rng = rng::stream(config.seed, "pair_draw", step as u64);
                let idx: Vec<usize> = (0..config.inv_pairs_per_batch)
                    .map(|_| pair_rng.random_range(0..p.len()))
                    .collect();
                let pa = gather_rows(&p.a, &idx);
                let pb = gather_rows(&p.b, &idx);
                let fa = params.forward(&pa, Mode::Train)?;
                let fb = params.forward(&pb, Mode::Train)?;
                let (_, dfa, dfb) = invariance_loss(&fa.features, &fb.features)?;
                let zero = Array2::zeros(fa.logits.dim());
                let ga = params.backward(&fa, &zero, Some(&dfa.mapv(|v| v * lam)));
                let gb = params.backward(&fb, &zero, Some(&dfb.mapv(|v| v * lam)));
                grads.add_assign(&ga);
                grads.add_assign(&gb);
            }

            if !grads.all_finite() {
                return Err(DoeError::NonFinite(format!(
                    "gradients at step {step} (epoch {epoch})"
                )));
            }
            params.update_running_stats(&fwd.batch_stats);
            let lr = cosine_lr(config.learning_rate, step, total_steps);
            adam.step(&mut params, &grads, lr);
            step += 1;
            epoch_task += task.to_f64().unwrap();
            epoch_batches += 1;
        }
        log::debug!(
            "epoch {epoch}: mean task loss {:.4}",
            epoch_task / epoch_batches.max(1) as f64
        );
    }
    Ok(params)
}

const EVAL_BATCH: usize = 256;

/// Eval-mode logits over a dataset, batched.
pub fn eval_logits(params: &ModelParams<f32>, data: &Dataset) -> Result<Array2<f32>> {
    if data.is_empty() {
        return Err(DoeError::EmptyInput("evaluation dataset".into()));
    }
    let (images, _) = dataset_tensors::<f32>(data)?;
    let n = data.len();
    let mut logits = Array2::zeros((n, params.arch.classes));
    for range in exec::chunk_ranges(n, EVAL_BATCH) {
        let bx = images.slice(s![range.clone(), .., .., ..]).to_owned();
        let fwd = params.forward(&bx, Mode::Eval)?;
        logits.slice_mut(s![range, ..]).assign(&fwd.logits);
    }
    Ok(logits)
}

/// Eval-mode per-sample cross-entropy (f64).
pub fn eval_per_sample_losses(params: &ModelParams<f32>, data: &Dataset) -> Result<Vec<f64>> {
    let logits = eval_logits(params, data)?;
    Ok(logits
        .rows()
        .into_iter()
        .zip(data.samples())
        .map(|(row, s)| per_sample_ce_f64(row.as_slice().unwrap(), s.label))
        .collect())
}

/// Argmax class predictions in eval mode.
pub fn eval_predictions(params: &ModelParams<f32>, data: &Dataset) -> Result<Vec<usize>> {
    let logits = eval_logits(params, data)?;
    Ok(logits
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite logits"))
                .map(|(i, _)| i)
                .unwrap_or(0)
        })
        .collect())
}

/// Fraction of correct predictions in eval mode.
pub fn eval_accuracy(params: &ModelParams<f32>, data: &Dataset) -> Result<f64> {
    let preds = eval_predictions(params, data)?;
    let correct = preds
        .iter()
        .zip(data.samples())
        .filter(|(p, s)| **p == s.label)
        .count();
    Ok(correct as f64 / data.len() as f64)
}
