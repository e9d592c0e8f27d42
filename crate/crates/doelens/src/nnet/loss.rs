//! Task loss (softmax cross-entropy), the feature invariance penalty, and
//! the combined objective.

use ndarray::Array2;

use super::Scalar;
use crate::error::{DoeError, Result};

/// Mean cross-entropy, per-sample values, and the gradient of the *mean*
/// loss with respect to the logits: (softmax − onehot) / B.
pub fn cross_entropy<F: Scalar>(
    logits: &Array2<F>,
    labels: &[usize],
) -> Result<(F, Vec<F>, Array2<F>)> {
    let (bsz, classes) = logits.dim();
    if labels.len() != bsz {
        return Err(DoeError::DimensionMismatch(format!(
            "{bsz} logit rows for {} labels",
            labels.len()
        )));
    }
    let inv_b = F::one() / F::from_usize(bsz).unwrap();
    let mut per_sample = Vec::with_capacity(bsz);
    let mut dlogits = Array2::zeros((bsz, classes));
    let mut total = F::zero();
    for (i, row) in logits.rows().into_iter().enumerate() {
        let label = labels[i];
        if label >= classes {
            return Err(DoeError::IndexOutOfRange {
                what: "class label",
                index: label,
                limit: classes,
            });
        }
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        let mut denom = F::zero();
        for &z in row.iter() {
            denom += (z - max).exp();
        }
        let lse = max + denom.ln();
        let loss = lse - row[label];
        per_sample.push(loss);
        total += loss;
        for (j, &z) in row.iter().enumerate() {
            let softmax = (z - lse).exp();
            let indicator = if j == label { F::one() } else { F::zero() };
            dlogits[(i, j)] = (softmax - indicator) * inv_b;
        }
    }
    Ok((total * inv_b, per_sample, dlogits))
}

/// Per-sample cross-entropy in f64, for audit loss tables.
pub fn per_sample_ce_f64(logits_row: &[f32], label: usize) -> f64 {
    let max = logits_row.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    let mut denom = 0f64;
    for &z in logits_row {
        denom += (z as f64 - max).exp();
    }
    max + denom.ln() - logits_row[label] as f64
}

/// Mean over pairs of the squared L2 feature distance divided by the
/// feature dimension, plus gradients with respect to both feature batches.
pub fn invariance_loss<F: Scalar>(
    features_a: &Array2<F>,
    features_b: &Array2<F>,
) -> Result<(F, Array2<F>, Array2<F>)> {
    if features_a.dim() != features_b.dim() {
        return Err(DoeError::DimensionMismatch(format!(
            "feature shapes {:?} vs {:?}",
            features_a.dim(),
            features_b.dim()
        )));
    }
    let (pairs, dim) = features_a.dim();
    if pairs == 0 || dim == 0 {
        return Err(DoeError::EmptyInput("invariance feature batch".into()));
    }
    let norm = F::one() / (F::from_usize(pairs).unwrap() * F::from_usize(dim).unwrap());
    let mut loss = F::zero();
    let mut da = Array2::zeros((pairs, dim));
    let mut db = Array2::zeros((pairs, dim));
    for i in 0..pairs {
        for j in 0..dim {
            let diff = features_a[(i, j)] - features_b[(i, j)];
            loss += diff * diff * norm;
            let g = (F::one() + F::one()) * diff * norm;
            da[(i, j)] = g;
            db[(i, j)] = -g;
        }
    }
    Ok((loss, da, db))
}

/// task + λ·inv.
pub fn total_loss<F: Scalar>(task: F, inv: F, lambda: F) -> F {
    task + lambda * inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn uniform_logits_lose_ln_k() {
        let logits = arr2(&[[0.0f64, 0.0, 0.0], [1.0, 1.0, 1.0]]);
        let (mean, per, _) = cross_entropy(&logits, &[0, 2]).unwrap();
        let ln3 = 3f64.ln();
        assert!((mean - ln3).abs() < 1e-12);
        for p in per {
            assert!((p - ln3).abs() < 1e-12);
        }
    }

    #[test]
    fn confident_correct_logits_drive_loss_to_zero() {
        let mut prev = f64::INFINITY;
        for margin in [1.0, 5.0, 20.0, 60.0] {
            let logits = arr2(&[[margin, 0.0, 0.0]]);
            let (loss, _, _) = cross_entropy(&logits, &[0]).unwrap();
            assert!(loss < prev);
            prev = loss;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn ce_matches_log_sum_exp_reference() {
        let logits = arr2(&[[0.3f64, -1.2, 2.1], [4.0, 3.7, -0.5]]);
        let labels = [2usize, 1];
        let (_, per, _) = cross_entropy(&logits, &labels).unwrap();
        for (i, row) in logits.rows().into_iter().enumerate() {
            let reference =
                row.iter().map(|z| z.exp()).sum::<f64>().ln() - row[labels[i]];
            assert!((per[i] - reference).abs() < 1e-6);
        }
    }

    #[test]
    fn ce_gradient_is_softmax_minus_onehot_over_batch() {
        let logits = arr2(&[[0.2f64, -0.4, 1.0]]);
        let (_, _, d) = cross_entropy(&logits, &[1]).unwrap();
        let z: Vec<f64> = logits.row(0).iter().map(|v| v.exp()).collect();
        let denom: f64 = z.iter().sum();
        assert!((d[(0, 0)] - z[0] / denom).abs() < 1e-12);
        assert!((d[(0, 1)] - (z[1] / denom - 1.0)).abs() < 1e-12);
        let row_sum: f64 = d.row(0).iter().sum();
        assert!(row_sum.abs() < 1e-12);
    }

    #[test]
    fn invariance_zero_for_identical_features() {
        let f = arr2(&[[1.0f64, -2.0, 0.5, 3.0]]);
        let (loss, da, _) = invariance_loss(&f, &f).unwrap();
        assert_eq!(loss, 0.0);
        assert!(da.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invariance_unit_difference_normalizes_by_dim() {
        let a = arr2(&[[1.0f64, 1.0, 1.0, 1.0]]);
        let b = arr2(&[[0.0f64, 0.0, 0.0, 0.0]]);
        let (loss, da, db) = invariance_loss(&a, &b).unwrap();
        assert!((loss - 1.0).abs() < 1e-12);
        assert!((da[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((db[(0, 0)] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn invariance_scales_quadratically() {
        let a = arr2(&[[0.4f64, -1.1], [2.0, 0.3]]);
        let b = arr2(&[[0.1f64, 0.2], [-0.5, 0.9]]);
        let (base, _, _) = invariance_loss(&a, &b).unwrap();
        let (scaled, _, _) = invariance_loss(&(a * 3.0), &(b * 3.0)).unwrap();
        assert!((scaled - 9.0 * base).abs() < 1e-12);
    }

    #[test]
    fn total_is_affine_in_lambda() {
        assert_eq!(total_loss(1.0f64, 0.4, 0.0), 1.0);
        assert!((total_loss(1.0f64, 0.4, 0.5) - 1.2).abs() < 1e-15);
    }
}
